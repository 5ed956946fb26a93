//! Run configuration: optional TOML file values overlaid by command-line
//! flags, resolved and validated per command before any computation.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigen::LanczosOptions;
use crate::error::{Error, Result};
use crate::studies::{
    self, default_sweep_degrees, log_space, PlateOptions, DEFAULT_SWEEP_ALPHAS, SWEEP_CHI_COUNT,
    SWEEP_CHI_MIN,
};

/// Default output directory when no `--out` is given.
pub const OUT_DIR_ENV: &str = "FCM_CFL_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Log,
    Linear,
}

impl FromStr for GridScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Self::Log),
            "linear" => Ok(Self::Linear),
            _ => Err(Error::Config(format!(
                "grid scale must be log or linear, got {s:?}"
            ))),
        }
    }
}

/// Shift-grid strides, written `SX` or `SXxSY`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Subsample {
    pub x: usize,
    pub y: usize,
}

impl FromStr for Subsample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("subsample must look like 3 or 3x5, got {s:?}"));
        let (x, y) = match s.split_once('x') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let v = s.trim().parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if x == 0 || y == 0 {
            return Err(bad());
        }
        Ok(Self { x, y })
    }
}

impl TryFrom<String> for Subsample {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Subsample> for String {
    fn from(s: Subsample) -> String {
        format!("{}x{}", s.x, s.y)
    }
}

/// Every tunable of every command. Unset fields fall back to the file, then
/// to the command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    pub dim: Option<usize>,
    pub chi: Option<f64>,
    pub chi_min: Option<f64>,
    pub chi_max: Option<f64>,
    pub chi_count: Option<usize>,
    pub chi_scale: Option<GridScale>,
    pub alpha: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_count: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub degree: Option<usize>,
    pub degrees: Option<Vec<usize>>,
    pub all_degrees: Option<bool>,
    pub depth: Option<usize>,
    pub nx_shifts: Option<usize>,
    pub ny_shifts: Option<usize>,
    pub subsample: Option<Subsample>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

macro_rules! overlay_fields {
    ($top:ident, $base:ident, $($f:ident),*) => {
        Options { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Options {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `self` win over `base`.
    pub fn overlay(self, base: Options) -> Options {
        let top = self;
        overlay_fields!(
            top,
            base,
            dim,
            chi,
            chi_min,
            chi_max,
            chi_count,
            chi_scale,
            alpha,
            alpha_min,
            alpha_max,
            alpha_count,
            alphas,
            degree,
            degrees,
            all_degrees,
            depth,
            nx_shifts,
            ny_shifts,
            subsample,
            nx,
            ny,
            h,
            tol,
            residual_tol,
            max_iter,
            input,
            out,
            jobs
        )
    }

    pub fn jobs(&self) -> Result<Option<usize>> {
        match self.jobs {
            Some(0) => Err(Error::Config("jobs must be positive".into())),
            j => Ok(j),
        }
    }

    pub fn lanczos(&self) -> Result<LanczosOptions> {
        let d = LanczosOptions::default();
        let opts = LanczosOptions {
            tol: self.tol.unwrap_or(d.tol),
            residual_tol: self.residual_tol.unwrap_or(d.residual_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            inner_tol: d.inner_tol,
        };
        if !(opts.tol > 0.0 && opts.residual_tol > 0.0) || opts.max_iter == 0 {
            return Err(Error::Config(
                "eigen tolerances and iteration limit must be positive".into(),
            ));
        }
        Ok(opts)
    }

    /// `--out`, else `<$FCM_CFL_OUT_DIR or .>/<default_name>`.
    pub fn out_path(&self, default_name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."))
                .join(default_name)
        })
    }
}

fn grid(min: f64, max: f64, count: usize, scale: GridScale, name: &str) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Config(format!("{name} count must be positive")));
    }
    if !(min <= max) {
        return Err(Error::Config(format!("{name} range [{min}, {max}] is empty")));
    }
    match scale {
        GridScale::Log => {
            if !(min > 0.0) {
                return Err(Error::Config(format!(
                    "log-spaced {name} grid needs a positive minimum"
                )));
            }
            log_space(min, max, count)
        }
        GridScale::Linear => studies::linspace(min, max, count),
    }
}

fn check_unit(values: &[f64], name: &str, allow_zero: bool) -> Result<()> {
    for &v in values {
        let ok = if allow_zero {
            (0.0..=1.0).contains(&v)
        } else {
            v > 0.0 && v <= 1.0
        };
        if !ok {
            let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
            return Err(Error::Config(format!("{name} value {v} outside {range}")));
        }
    }
    Ok(())
}

fn check_degrees(degrees: &[usize]) -> Result<()> {
    if degrees.is_empty() {
        return Err(Error::Config("degree list is empty".into()));
    }
    if let Some(p) = degrees.iter().find(|&&p| !(1..=10).contains(&p)) {
        return Err(Error::Config(format!("degree {p} outside 1..=10")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMapRun {
    pub dim: usize,
    pub chis: Vec<f64>,
    pub alphas: Vec<f64>,
    pub out: PathBuf,
}

impl AnalyticMapRun {
    pub fn resolve(o: &Options) -> Result<Self> {
        let dim = o.dim.unwrap_or(2);
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        let scale = o.chi_scale.unwrap_or_default();
        let chis = grid(
            o.chi_min.unwrap_or(1e-16),
            o.chi_max.unwrap_or(1.0),
            o.chi_count.unwrap_or(801),
            scale,
            "chi",
        )?;
        let alphas = grid(
            o.alpha_min.unwrap_or(1e-16),
            o.alpha_max.unwrap_or(1.0),
            o.alpha_count.unwrap_or(801),
            GridScale::Log,
            "alpha",
        )?;
        check_unit(&chis, "chi", true)?;
        check_unit(&alphas, "alpha", false)?;
        Ok(Self {
            dim,
            chis,
            alphas,
            out: o.out_path("analytic-map.csv"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSweepRun {
    pub dim: usize,
    pub degrees: Vec<usize>,
    pub alphas: Vec<f64>,
    pub chis: Vec<f64>,
    pub out: PathBuf,
}

impl ElementSweepRun {
    pub fn resolve(o: &Options, default_name: &str) -> Result<Self> {
        let dim = o.dim.unwrap_or(2);
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!(
                "element sweeps support dimensions 1 to 3, got {dim}"
            )));
        }
        let degrees = match (&o.degrees, o.all_degrees.unwrap_or(false)) {
            (Some(d), _) => d.clone(),
            (None, true) => (1..=10).collect(),
            (None, false) => default_sweep_degrees(dim),
        };
        check_degrees(&degrees)?;
        let alphas = o.alphas.clone().unwrap_or_else(|| DEFAULT_SWEEP_ALPHAS.to_vec());
        if alphas.is_empty() {
            return Err(Error::Config("alpha list is empty".into()));
        }
        check_unit(&alphas, "alpha", false)?;
        let chis = grid(
            o.chi_min.unwrap_or(SWEEP_CHI_MIN),
            o.chi_max.unwrap_or(1.0),
            o.chi_count.unwrap_or(SWEEP_CHI_COUNT),
            o.chi_scale.unwrap_or_default(),
            "chi",
        )?;
        check_unit(&chis, "chi", true)?;
        Ok(Self {
            dim,
            degrees,
            alphas,
            chis,
            out: o.out_path(default_name),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateRun {
    /// One study per quadtree depth.
    pub studies: Vec<PlateOptions>,
    pub out: PathBuf,
    pub summary: PathBuf,
}

impl PlateRun {
    pub fn resolve(o: &Options) -> Result<Self> {
        let p = o.degree.unwrap_or(2);
        check_degrees(&[p])?;
        let depths = match o.depth {
            Some(k) => vec![k],
            None => vec![p + 1, p + 2],
        };
        let lanczos = o.lanczos()?;
        let mut studies = Vec::new();
        for k in depths {
            let mut s = PlateOptions::new(p, k);
            s.alpha = o.alpha.unwrap_or(s.alpha);
            s.nx_shifts = o.nx_shifts.unwrap_or(s.nx_shifts);
            s.ny_shifts = o.ny_shifts.unwrap_or(s.ny_shifts);
            if let Some(sub) = o.subsample {
                s.subsample_x = sub.x;
                s.subsample_y = sub.y;
            }
            s.nx = o.nx.unwrap_or(s.nx);
            s.ny = o.ny.unwrap_or(s.ny);
            s.h = o.h.unwrap_or(s.h);
            s.lanczos = lanczos;
            if s.nx_shifts == 0 || s.ny_shifts == 0 || s.nx == 0 || s.ny == 0 {
                return Err(Error::Config("shift and grid counts must be positive".into()));
            }
            if !(s.h > 0.0) {
                return Err(Error::Config("element size must be positive".into()));
            }
            check_unit(&[s.alpha], "alpha", false)?;
            studies.push(s);
        }
        let out = o.out_path("plate-study.csv");
        let summary = out.with_extension("json");
        Ok(Self {
            studies,
            out,
            summary,
        })
    }
}
