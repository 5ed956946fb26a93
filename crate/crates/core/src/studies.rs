//! Parameter studies: analytic maps, single-element sweeps over the cut
//! parameter, and the perforated plate configuration sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::assembly::{
    assemble_elements, element_matrices_cornercut, element_matrices_uniform, GlobalSystem, GridSpec,
};
use crate::eigen::{critical_dt, max_eig_dense, max_eig_iterative, LanczosOptions};
use crate::error::{Error, Result};
use crate::geometry::{perforated_plate, Aabb, MAX_SHIFT_X, MAX_SHIFT_Y};
use crate::quadrature::CutClass;

/// `n` points from `min` to `max` inclusive, evenly spaced in `log10`.
pub fn log_space(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min) {
        return Err(Error::invalid(format!(
            "log grid needs 0 < min <= max, got [{min}, {max}]"
        )));
    }
    Ok(linspace(min.log10(), max.log10(), n)?
        .into_iter()
        .enumerate()
        .map(|(i, e)| match i {
            0 => min,
            _ if i == n - 1 => max,
            _ => 10f64.powf(e),
        })
        .collect())
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::invalid("grid needs at least one point")),
        1 => Ok(vec![a]),
        _ => Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect()),
    }
}

/// `n` evenly spaced points on `[a, b)`.
pub fn linspace_open(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("grid needs at least one point"));
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / n as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRecord {
    pub d: usize,
    pub chi: f64,
    pub alpha: f64,
    pub mass: f64,
    pub stiffness: f64,
    pub lambda: f64,
    pub dt_crit: f64,
}

/// Single-DOF results over a `chi` x `alpha` grid, `chi` varying slowest.
pub fn analytic_map(d: usize, chis: &[f64], alphas: &[f64]) -> Result<Vec<AnalyticRecord>> {
    chis.par_iter()
        .map(|&chi| {
            alphas
                .iter()
                .map(|&alpha| {
                    let r = analytic::single_dof(chi, alpha, d)?;
                    Ok(AnalyticRecord {
                        d,
                        chi,
                        alpha,
                        mass: r.mass,
                        stiffness: r.stiffness,
                        lambda: r.lambda,
                        dt_crit: r.dt_crit,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map(|rows| rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub d: usize,
    pub p: usize,
    pub alpha: f64,
    pub chi: f64,
    pub lambda_max: f64,
    pub dt_crit: f64,
}

pub const DEFAULT_SWEEP_ALPHAS: [f64; 3] = [1e-4, 1e-8, 1e-12];
pub const SWEEP_CHI_MIN: f64 = 1e-8;
pub const SWEEP_CHI_COUNT: usize = 161;

/// Degrees swept by default: 1..=10, capped at 6 in three dimensions.
pub fn default_sweep_degrees(d: usize) -> Vec<usize> {
    if d >= 3 {
        (1..=6).collect()
    } else {
        (1..=10).collect()
    }
}

/// Cut parameters of the element sweep: log-spaced on `[1e-8, 1]`.
pub fn sweep_chis(count: usize) -> Result<Vec<f64>> {
    log_space(SWEEP_CHI_MIN, 1.0, count)
}

/// Largest eigenvalue of the free corner-cut element for every combination,
/// ordered by degree, then alpha, then cut parameter.
pub fn element_sweep(d: usize, degrees: &[usize], alphas: &[f64], chis: &[f64]) -> Result<Vec<SweepRecord>> {
    let mut work = Vec::with_capacity(degrees.len() * alphas.len() * chis.len());
    for &p in degrees {
        for &alpha in alphas {
            for &chi in chis {
                work.push((p, alpha, chi));
            }
        }
    }
    work.par_iter()
        .map(|&(p, alpha, chi)| {
            let em = element_matrices_cornercut(p, d, chi, alpha)?;
            let lambda_max = max_eig_dense(&em.mass, &em.stiffness)?.lambda_max;
            Ok(SweepRecord {
                d,
                p,
                alpha,
                chi,
                lambda_max,
                dt_crit: critical_dt(lambda_max)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinRatioRecord {
    pub d: usize,
    pub p: usize,
    pub alpha: f64,
    pub dt_min: f64,
    pub dt_full_c: f64,
    pub ratio: f64,
}

/// Grid minimum of the critical step and its ratio to the `chi = 1` sample.
pub fn min_dt_ratio(records: &[SweepRecord]) -> Result<MinRatioRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("no sweep records"))?;
    if records
        .iter()
        .any(|r| r.d != first.d || r.p != first.p || r.alpha != first.alpha)
    {
        return Err(Error::invalid("records mix dimensions, degrees or alphas"));
    }
    let full = records
        .iter()
        .find(|r| r.chi == 1.0)
        .ok_or_else(|| Error::invalid("sweep lacks the chi = 1 sample"))?;
    let dt_min = records.iter().map(|r| r.dt_crit).fold(f64::INFINITY, f64::min);
    Ok(MinRatioRecord {
        d: first.d,
        p: first.p,
        alpha: first.alpha,
        dt_min,
        dt_full_c: full.dt_crit,
        ratio: dt_min / full.dt_crit,
    })
}

/// Applies [`min_dt_ratio`] to each `(d, p, alpha)` group in order of first appearance.
pub fn min_ratios(records: &[SweepRecord]) -> Result<Vec<MinRatioRecord>> {
    let mut keys: Vec<(usize, usize, f64)> = Vec::new();
    for r in records {
        let key = (r.d, r.p, r.alpha);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(d, p, alpha)| {
            let group: Vec<SweepRecord> = records
                .iter()
                .filter(|r| r.d == d && r.p == p && r.alpha == alpha)
                .copied()
                .collect();
            min_dt_ratio(&group)
        })
        .collect()
}

/// `alpha^(1 / (d + 2))`
pub fn cfl_factor(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    if d == 2 {
        return Ok(alpha.sqrt().sqrt());
    }
    Ok(alpha.powf(1.0 / (d as f64 + 2.0)))
}

/// Modified CFL step `alpha^(1 / (d + 2)) C h / c`.
pub fn modified_cfl_dt(alpha: f64, d: usize, c_cfl: f64, h: f64, c: f64) -> Result<f64> {
    if !(h > 0.0 && c > 0.0 && c_cfl > 0.0) {
        return Err(Error::invalid("CFL step needs positive h, c and constant"));
    }
    Ok(cfl_factor(alpha, d)? * c_cfl * h / c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CflEstimate {
    pub d: usize,
    pub p: usize,
    pub alpha: f64,
    pub h: f64,
    pub c: f64,
    pub dt_full_c: f64,
    pub dt_full_l: f64,
    pub cfl_factor: f64,
    pub dt_cfl_fc: f64,
    pub c_cfl_c: f64,
    pub c_cfl_l: f64,
}

impl CflEstimate {
    /// Critical steps of one uncut element of size `h` with consistent and
    /// lumped mass, for wave speed `c`.
    pub fn compute(d: usize, p: usize, alpha: f64, h: f64, c: f64) -> Result<Self> {
        if !(h > 0.0 && c > 0.0) {
            return Err(Error::invalid("element size and wave speed must be positive"));
        }
        let factor = cfl_factor(alpha, d)?;
        let bounds = Aabb::new(&vec![0.0; d], &vec![h; d])?;
        let dt = |lumped: bool| -> Result<f64> {
            let em = element_matrices_uniform(p, &bounds, 1.0, lumped)?;
            Ok(max_eig_dense(&em.mass, &em.stiffness)?.critical_dt()? / c)
        };
        let dt_full_c = dt(false)?;
        let dt_full_l = dt(true)?;
        Ok(Self {
            d,
            p,
            alpha,
            h,
            c,
            dt_full_c,
            dt_full_l,
            cfl_factor: factor,
            dt_cfl_fc: factor * dt_full_c,
            c_cfl_c: dt_full_c * c / h,
            c_cfl_l: dt_full_l * c / h,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateOptions {
    pub degree: usize,
    pub depth: usize,
    pub alpha: f64,
    pub nx_shifts: usize,
    pub ny_shifts: usize,
    /// Keep every `subsample_x`-th x shift and every `subsample_y`-th y shift.
    pub subsample_x: usize,
    pub subsample_y: usize,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub lanczos: LanczosOptions,
}

impl PlateOptions {
    pub fn new(degree: usize, depth: usize) -> Self {
        Self {
            degree,
            depth,
            alpha: 1e-4,
            nx_shifts: 15,
            ny_shifts: 50,
            subsample_x: 1,
            subsample_y: 1,
            nx: 45,
            ny: 15,
            h: 0.2,
            lanczos: LanczosOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateConfig {
    /// One-based position in the full shift grid.
    pub index: usize,
    pub dx: f64,
    pub dy: f64,
}

/// Shift grid with `dx` on `[0, 0.2]` varying slowest and `dy` on `[0, 9/13)`,
/// thinned by the subsample strides. Indices refer to the full grid.
pub fn plate_configs(opts: &PlateOptions) -> Result<Vec<PlateConfig>> {
    if opts.subsample_x == 0 || opts.subsample_y == 0 {
        return Err(Error::invalid("subsample strides must be positive"));
    }
    let xs = linspace(0.0, MAX_SHIFT_X, opts.nx_shifts)?;
    let ys = linspace_open(0.0, MAX_SHIFT_Y, opts.ny_shifts)?;
    let mut out = Vec::new();
    for (ix, &dx) in xs.iter().enumerate().step_by(opts.subsample_x) {
        for (iy, &dy) in ys.iter().enumerate().step_by(opts.subsample_y) {
            out.push(PlateConfig {
                index: ix * ys.len() + iy + 1,
                dx,
                dy,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateRecord {
    pub config: usize,
    pub dx: f64,
    pub dy: f64,
    pub p: usize,
    pub k: usize,
    pub dt_element: f64,
    pub dt_global: f64,
    pub dt_full_c: f64,
    pub dt_full_l: f64,
    pub dt_cfl_fc: f64,
    pub element_ok: bool,
    pub global_ok: bool,
}

/// Element-wise and global critical steps of one plate configuration.
pub fn plate_configuration(
    config: &PlateConfig,
    opts: &PlateOptions,
    cfl: &CflEstimate,
) -> Result<PlateRecord> {
    let p = opts.degree;
    let grid = GridSpec::new(opts.nx, opts.ny, opts.h)?;
    let domain = perforated_plate(config.dx, config.dy)?;
    let elements = assemble_elements(&grid, p, &domain, opts.alpha, opts.depth)?;
    // uncut and fictitious elements are scaled copies of the lumped full element
    let dt_element = elements
        .par_iter()
        .map(|em| match em.class {
            CutClass::Cut => max_eig_dense(&em.mass, &em.stiffness)?.critical_dt(),
            _ => Ok(cfl.dt_full_l),
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
    let system = GlobalSystem::from_elements(&grid, p, &elements)?;
    drop(elements);
    let dt_global = max_eig_iterative(&system.mass, &system.stiffness, &opts.lanczos)?.critical_dt()?;
    Ok(PlateRecord {
        config: config.index,
        dx: config.dx,
        dy: config.dy,
        p,
        k: opts.depth,
        dt_element,
        dt_global,
        dt_full_c: cfl.dt_full_c,
        dt_full_l: cfl.dt_full_l,
        dt_cfl_fc: cfl.dt_cfl_fc,
        element_ok: dt_element >= cfl.dt_cfl_fc,
        global_ok: dt_global >= cfl.dt_cfl_fc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateSummary {
    pub p: usize,
    pub k: usize,
    pub alpha: f64,
    pub configurations: usize,
    pub element_violations: usize,
    pub global_violations: usize,
    /// Configurations where the global step falls below the element-wise one.
    pub global_below_element: usize,
    pub min_dt_element: f64,
    pub min_dt_global: f64,
    pub cfl: CflEstimate,
}

impl PlateSummary {
    pub fn from_records(opts: &PlateOptions, cfl: &CflEstimate, records: &[PlateRecord]) -> Self {
        Self {
            p: opts.degree,
            k: opts.depth,
            alpha: opts.alpha,
            configurations: records.len(),
            element_violations: records.iter().filter(|r| !r.element_ok).count(),
            global_violations: records.iter().filter(|r| !r.global_ok).count(),
            global_below_element: records
                .iter()
                .filter(|r| r.dt_global < r.dt_element * (1.0 - 1e-10))
                .count(),
            min_dt_element: records.iter().map(|r| r.dt_element).fold(f64::INFINITY, f64::min),
            min_dt_global: records.iter().map(|r| r.dt_global).fold(f64::INFINITY, f64::min),
            cfl: *cfl,
        }
    }
}

/// Runs every configuration of the shift grid in parallel, keeping input order.
pub fn plate_study(opts: &PlateOptions) -> Result<(Vec<PlateRecord>, PlateSummary)> {
    if !(opts.alpha > 0.0 && opts.alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1], got {}",
            opts.alpha
        )));
    }
    let cfl = CflEstimate::compute(2, opts.degree, opts.alpha, opts.h, 1.0)?;
    let configs = plate_configs(opts)?;
    let records = configs
        .par_iter()
        .map(|c| plate_configuration(c, opts, &cfl))
        .collect::<Result<Vec<_>>>()?;
    let summary = PlateSummary::from_records(opts, &cfl, &records);
    Ok((records, summary))
}
