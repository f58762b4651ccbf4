mod analysis;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use analysis::AnalysisArgs;
use mev_core::series::{annual_series, spread_series, write_series};
use mev_core::simulate::{simulate, SimulatedData, SimulationConfig};
use output::{write_atomic, write_json};

/// Mixed extreme value analysis: return levels of instrumental maxima from
/// a long reanalysis record and a short paired instrumental record.
#[derive(Debug, Parser)]
#[command(name = "mev", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the extreme value model to the reanalysis maxima.
    FitEv {
        #[command(flatten)]
        args: AnalysisArgs,
    },
    /// Fit the heteroscedastic regression of instrumental minus reanalysis maxima.
    FitReg {
        #[command(flatten)]
        args: AnalysisArgs,
        /// Instrumental series file.
        #[arg(long)]
        z: PathBuf,
    },
    /// Return levels of the mixed model with confidence bands.
    MixedCurve {
        #[command(flatten)]
        args: AnalysisArgs,
        /// Instrumental series file.
        #[arg(long)]
        z: PathBuf,
    },
    /// KS, Ljung-Box and ACF/PACF diagnostics of the fits.
    Diagnose {
        #[command(flatten)]
        args: AnalysisArgs,
        /// Instrumental series file; without it only the EV fit is diagnosed.
        #[arg(long)]
        z: Option<PathBuf>,
    },
    /// Write synthetic reanalysis and instrumental series.
    Simulate {
        /// 1: GEV maxima; 2: Pareto-Poisson exceedances above 2.5.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        case: u8,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        years: usize,
        /// Length of the instrumental record (final years); all years by default.
        #[arg(long)]
        paired_years: Option<usize>,
        /// Case 2: Poisson annual counts instead of a fixed count.
        #[arg(long)]
        poisson_counts: bool,
        #[arg(long, default_value_t = 1001)]
        first_year: i32,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fit all models, write the three return-level curves and both diagnostic reports.
    FullRun {
        #[command(flatten)]
        args: AnalysisArgs,
        /// Instrumental series file.
        #[arg(long)]
        z: PathBuf,
    },
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub const PARSE: u8 = 2;
    pub const NOT_CONVERGED: u8 = 3;
    pub const NUMERIC: u8 = 4;

    pub fn usage(message: String) -> Self {
        Self { code: Self::PARSE, message }
    }

    pub fn not_converged(message: String) -> Self {
        Self { code: Self::NOT_CONVERGED, message }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self { code: Self::PARSE, message: format!("{}: {e}", path.display()) }
    }

    pub fn context(self, path: &Path) -> Self {
        Self { message: format!("{}: {}", path.display(), self.message), ..self }
    }
}

impl From<mev_core::Error> for Failure {
    fn from(e: mev_core::Error) -> Self {
        use mev_core::Error::*;
        let code = match e {
            Parse { .. } | Io(_) | InvalidInput(_) | EmptySample | TooFewObservations { .. } => Self::PARSE,
            NotConverged { .. } => Self::NOT_CONVERGED,
            _ => Self::NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn report_path(out: &Path) -> PathBuf {
    out.join("report.json")
}

fn fit_ev(args: &AnalysisArgs) -> Result<(), Failure> {
    let rea = analysis::fit_reanalysis(args)?;
    let ev = analysis::ev_json(&rea.fit, &rea.maxima, args.alpha)?;
    write_json(&report_path(&args.out_dir), &analysis::report(ev, Value::Null, Value::Null, Value::Null, Value::Null))
}

fn fit_reg(args: &AnalysisArgs, z: &Path) -> Result<(), Failure> {
    let (_, x) = analysis::load(&args.x, args.coverage_floor)?;
    let inst = analysis::fit_instrumental(args, z, &x)?;
    analysis::write_pairs_table(&args.out_dir, &inst)?;
    analysis::write_regression_bands(&args.out_dir, &inst, args.alpha)?;
    let reg = analysis::reg_json(&inst, args.family.into(), args.alpha)?;
    write_json(&report_path(&args.out_dir), &analysis::report(Value::Null, reg, Value::Null, Value::Null, Value::Null))
}

fn mixed_curve(args: &AnalysisArgs, z: &Path) -> Result<(), Failure> {
    let rea = analysis::fit_reanalysis(args)?;
    let inst = analysis::fit_instrumental(args, z, &rea.maxima)?;
    let m = analysis::mixed_model(&rea.fit, &inst.reg)?;
    let curve = analysis::mixed_curve(&m, args)?;
    analysis::curves_csv(&[("mixed", &curve)]).write(&args.out_dir.join("curves.csv"))?;
    let report = analysis::report(
        analysis::ev_json(&rea.fit, &rea.maxima, args.alpha)?,
        analysis::reg_json(&inst, args.family.into(), args.alpha)?,
        Value::Null,
        Value::Null,
        analysis::curves_meta(args, &["mixed"], Some(&m)),
    );
    write_json(&report_path(&args.out_dir), &report)
}

fn diagnose(args: &AnalysisArgs, z: Option<&Path>) -> Result<(), Failure> {
    let rea = analysis::fit_reanalysis(args)?;
    let inst = match z {
        Some(z) => Some(analysis::fit_instrumental(args, z, &rea.maxima)?),
        None => None,
    };
    let d = analysis::diagnose(&rea, inst.as_ref(), args.alpha)?;
    analysis::write_diagnostic_tables(&args.out_dir, &d)?;
    let reg = match &inst {
        Some(i) => analysis::reg_json(i, args.family.into(), args.alpha)?,
        None => Value::Null,
    };
    let report = analysis::report(
        analysis::ev_json(&rea.fit, &rea.maxima, args.alpha)?,
        reg,
        Value::Null,
        analysis::diagnostics_json(&d),
        Value::Null,
    );
    write_json(&report_path(&args.out_dir), &report)
}

fn full_run(args: &AnalysisArgs, z: &Path) -> Result<(), Failure> {
    let rea = analysis::fit_reanalysis(args)?;
    let inst = analysis::fit_instrumental(args, z, &rea.maxima)?;
    let gev_z = analysis::fit_gev_z(&inst.maxima)?;
    let m = analysis::mixed_model(&rea.fit, &inst.reg)?;
    let d = analysis::diagnose(&rea, Some(&inst), args.alpha)?;

    analysis::all_curves(&m, &gev_z, args)?.write(&args.out_dir.join("curves.csv"))?;
    analysis::write_diagnostic_tables(&args.out_dir, &d)?;
    analysis::write_pairs_table(&args.out_dir, &inst)?;
    analysis::write_regression_bands(&args.out_dir, &inst, args.alpha)?;
    let report = analysis::report(
        analysis::ev_json(&rea.fit, &rea.maxima, args.alpha)?,
        analysis::reg_json(&inst, args.family.into(), args.alpha)?,
        analysis::ev_json(&gev_z, &inst.maxima, args.alpha)?,
        analysis::diagnostics_json(&d),
        analysis::curves_meta(args, &["reanalysis", "mixed", "instrumental_gev"], Some(&m)),
    );
    write_json(&report_path(&args.out_dir), &report)
}

/// Case 2 years are written as equally spaced slots, one per exceedance;
/// when counts vary, spare slots hold the threshold itself (not an
/// exceedance), so every year has full coverage and a maximum of at least
/// the threshold.
fn write_simulation(data: &SimulatedData<f64>, threshold: Option<f64>, out: &Path) -> Result<(), Failure> {
    let x = match threshold {
        None => annual_series("hs", "m", &data.years, &data.x_max)?,
        Some(u) => {
            let slots = data.counts_per_year.iter().copied().max().unwrap_or(0).max(1);
            let mut start = 0;
            let per_year: Vec<Vec<f64>> = data
                .counts_per_year
                .iter()
                .map(|&c| {
                    let mut v = data.exceedances[start..start + c].to_vec();
                    start += c;
                    v.resize(slots, u);
                    v
                })
                .collect();
            spread_series("hs", "m", &data.years, &per_year)?
        }
    };
    let z = annual_series("hs", "m", &data.z_years, &data.z_max)?;
    write_atomic(&out.join("x.csv"), &write_series(&x))?;
    write_atomic(&out.join("z.csv"), &write_series(&z))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::FitEv { args } => {
            args.validate()?;
            fit_ev(&args)
        }
        Command::FitReg { args, z } => {
            args.validate()?;
            fit_reg(&args, &z)
        }
        Command::MixedCurve { args, z } => {
            args.validate()?;
            mixed_curve(&args, &z)
        }
        Command::Diagnose { args, z } => {
            args.validate()?;
            diagnose(&args, z.as_deref())
        }
        Command::FullRun { args, z } => {
            args.validate()?;
            full_run(&args, &z)
        }
        Command::Simulate { case, seed, years, paired_years, poisson_counts, first_year, out_dir } => {
            let base = if case == 1 { SimulationConfig::case1(seed) } else { SimulationConfig::case2(seed) };
            let threshold = match base.ev {
                mev_core::evd::EvModel::ParetoPoisson(p) => Some(p.u),
                mev_core::evd::EvModel::Gev(_) => None,
            };
            let cfg = SimulationConfig { years, paired_years, poisson_counts, first_year, ..base };
            let data = simulate(&cfg)?;
            write_simulation(&data, threshold, &out_dir)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).parse_default_env().init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
