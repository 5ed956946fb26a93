use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fcm_cfl::assembly::element_matrices_cornercut;
use fcm_cfl::config::{AnalyticMapRun, ElementSweepRun, GridScale, Options, PlateRun, Subsample};
use fcm_cfl::eigen::max_eig_dense;
use fcm_cfl::studies::{self, CflEstimate, PlateSummary, SweepRecord};
use fcm_cfl::{analytic, io, Error, Result};

/// Critical time steps of alpha-stabilized finite and spectral cell discretizations.
#[derive(Parser, Debug)]
#[command(name = "fcm-cfl", version)]
struct Cli {
    /// TOML file with default values for any flag (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single-DOF eigenvalue over a chi x alpha grid.
    AnalyticMap(MapArgs),
    /// Largest eigenvalue of the free corner-cut element over chi.
    ElementSweep(SweepArgs),
    /// Minimum critical step per (d, p, alpha) and its ratio to the uncut element.
    MinRatio(MinRatioArgs),
    /// Element-wise and global critical steps of the perforated plate.
    PlateStudy(PlateArgs),
    /// Closed-form single-DOF result, printed as JSON.
    SingleDof(SingleDofArgs),
    /// Critical step of one corner-cut element, printed as JSON.
    Element(ElementArgs),
    /// Uncut-element steps and the modified CFL step, printed as JSON.
    Cfl(CflArgs),
}

#[derive(Args, Debug, Default)]
struct ChiGrid {
    #[arg(long)]
    chi_min: Option<f64>,
    #[arg(long)]
    chi_max: Option<f64>,
    #[arg(long)]
    chi_count: Option<usize>,
    /// log or linear
    #[arg(long)]
    chi_scale: Option<GridScale>,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    chi: ChiGrid,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    alpha_count: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated polynomial degrees.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
    /// Sweep degrees 1..=10 in every dimension.
    #[arg(long)]
    all_degrees: bool,
    /// Comma-separated stabilization parameters.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[command(flatten)]
    chi: ChiGrid,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MinRatioArgs {
    /// Element-sweep CSV to reduce; without it the sweep is run first.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args, Debug)]
struct PlateArgs {
    #[arg(long)]
    degree: Option<usize>,
    /// Quadtree depth; both p + 1 and p + 2 when omitted.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    nx_shifts: Option<usize>,
    #[arg(long)]
    ny_shifts: Option<usize>,
    /// Shift-grid strides, `S` or `SXxSY`.
    #[arg(long)]
    subsample: Option<Subsample>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    /// Relative change of successive Lanczos estimates.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// CSV path; the JSON summary goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SingleDofArgs {
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args, Debug)]
struct ElementArgs {
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct CflArgs {
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
}

impl ChiGrid {
    fn apply(self, o: &mut Options) {
        o.chi_min = self.chi_min;
        o.chi_max = self.chi_max;
        o.chi_count = self.chi_count;
        o.chi_scale = self.chi_scale;
    }
}

impl SweepArgs {
    fn options(self) -> Options {
        let mut o = Options {
            dim: self.dim,
            degrees: self.degrees,
            all_degrees: self.all_degrees.then_some(true),
            alphas: self.alphas,
            out: self.out,
            ..Default::default()
        };
        self.chi.apply(&mut o);
        o
    }
}

impl Command {
    /// Flag values as an options overlay.
    fn options(self) -> (Options, Kind) {
        match self {
            Command::AnalyticMap(a) => {
                let mut o = Options {
                    dim: a.dim,
                    alpha_min: a.alpha_min,
                    alpha_max: a.alpha_max,
                    alpha_count: a.alpha_count,
                    out: a.out,
                    ..Default::default()
                };
                a.chi.apply(&mut o);
                (o, Kind::AnalyticMap)
            }
            Command::ElementSweep(a) => (a.options(), Kind::ElementSweep),
            Command::MinRatio(a) => {
                let mut o = a.sweep.options();
                o.input = a.input;
                (o, Kind::MinRatio)
            }
            Command::PlateStudy(a) => (
                Options {
                    degree: a.degree,
                    depth: a.depth,
                    alpha: a.alpha,
                    nx_shifts: a.nx_shifts,
                    ny_shifts: a.ny_shifts,
                    subsample: a.subsample,
                    nx: a.nx,
                    ny: a.ny,
                    h: a.h,
                    tol: a.tol,
                    residual_tol: a.residual_tol,
                    max_iter: a.max_iter,
                    out: a.out,
                    ..Default::default()
                },
                Kind::PlateStudy,
            ),
            Command::SingleDof(a) => (
                Options {
                    chi: a.chi,
                    alpha: a.alpha,
                    dim: a.dim,
                    ..Default::default()
                },
                Kind::SingleDof,
            ),
            Command::Element(a) => (
                Options {
                    degree: a.degree,
                    dim: a.dim,
                    chi: a.chi,
                    alpha: a.alpha,
                    ..Default::default()
                },
                Kind::Element,
            ),
            Command::Cfl(a) => (
                Options {
                    degree: a.degree,
                    dim: a.dim,
                    alpha: a.alpha,
                    h: a.h,
                    ..Default::default()
                },
                Kind::Cfl,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    AnalyticMap,
    ElementSweep,
    MinRatio,
    PlateStudy,
    SingleDof,
    Element,
    Cfl,
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing --{flag}")))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct ElementReport {
    dim: usize,
    degree: usize,
    chi: f64,
    alpha: f64,
    lambda_max: f64,
    dt_crit: f64,
    residual: f64,
}

#[derive(Serialize)]
struct PlateReport {
    element_violations: usize,
    global_violations: usize,
    runs: Vec<PlateSummary>,
}

fn run(kind: Kind, o: &Options) -> Result<()> {
    match kind {
        Kind::AnalyticMap => {
            let run = AnalyticMapRun::resolve(o)?;
            let rows = studies::analytic_map(run.dim, &run.chis, &run.alphas)?;
            io::write_csv_file(&run.out, &rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), run.out.display());
        }
        Kind::ElementSweep => {
            let run = ElementSweepRun::resolve(o, "element-sweep.csv")?;
            let rows = studies::element_sweep(run.dim, &run.degrees, &run.alphas, &run.chis)?;
            io::write_csv_file(&run.out, &rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), run.out.display());
        }
        Kind::MinRatio => {
            let run = ElementSweepRun::resolve(o, "min-ratio.csv")?;
            let sweep: Vec<SweepRecord> = match &o.input {
                Some(path) => io::read_csv_file(path)?,
                None => studies::element_sweep(run.dim, &run.degrees, &run.alphas, &run.chis)?,
            };
            let rows = studies::min_ratios(&sweep)?;
            io::write_csv_file(&run.out, &rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), run.out.display());
        }
        Kind::PlateStudy => {
            let run = PlateRun::resolve(o)?;
            let mut records = Vec::new();
            let mut runs = Vec::new();
            for opts in &run.studies {
                let (r, summary) = studies::plate_study(opts)?;
                eprintln!(
                    "p = {}, k = {}: {} configurations, {} element-level violations",
                    summary.p, summary.k, summary.configurations, summary.element_violations
                );
                records.extend(r);
                runs.push(summary);
            }
            io::write_csv_file(&run.out, &records)?;
            let report = PlateReport {
                element_violations: runs.iter().map(|s| s.element_violations).sum(),
                global_violations: runs.iter().map(|s| s.global_violations).sum(),
                runs,
            };
            io::write_json_file(&run.summary, &report)?;
            eprintln!("wrote {} and {}", run.out.display(), run.summary.display());
        }
        Kind::SingleDof => {
            let r = analytic::single_dof(
                required(o.chi, "chi")?,
                required(o.alpha, "alpha")?,
                o.dim.unwrap_or(1),
            )?;
            print_json(&r)?;
        }
        Kind::Element => {
            let (p, d) = (o.degree.unwrap_or(1), o.dim.unwrap_or(1));
            let (chi, alpha) = (required(o.chi, "chi")?, required(o.alpha, "alpha")?);
            let em = element_matrices_cornercut(p, d, chi, alpha)?;
            let s = max_eig_dense(&em.mass, &em.stiffness)?;
            print_json(&ElementReport {
                dim: d,
                degree: p,
                chi,
                alpha,
                lambda_max: s.lambda_max,
                dt_crit: s.critical_dt()?,
                residual: s.residual,
            })?;
        }
        Kind::Cfl => {
            let est = CflEstimate::compute(
                o.dim.unwrap_or(2),
                o.degree.unwrap_or(1),
                o.alpha.unwrap_or(1e-4),
                o.h.unwrap_or(0.2),
                1.0,
            )?;
            print_json(&est)?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_numerical() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (flags, kind) = cli.command.options();
    let prepared = (|| -> Result<Options> {
        let file = match &cli.config {
            Some(path) => Options::from_file(path)?,
            None => Options::default(),
        };
        let mut merged = flags.overlay(file);
        merged.jobs = cli.jobs.or(merged.jobs);
        if let Some(j) = merged.jobs()? {
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build_global()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(merged)
    })();
    let result = prepared.and_then(|o| run(kind, &o));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
