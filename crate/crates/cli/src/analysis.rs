//! The analysis steps shared by the subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use mev_core::diagnostics::{diagnose_ev_fit, diagnose_regression, DiagnosticReport};
use mev_core::fitting::{fit_gev, fit_pareto_poisson, param_ci, EvFit, FitOptions, FitResult};
use mev_core::hetreg::{fit_hetreg, fit_homoscedastic, homoscedasticity_test, regression_bands, Family, HetRegFit, HetRegOptions};
use mev_core::mixed::{comparison_curves, return_period_curve, MixedModel, MixedOptions, ReturnPeriodCurve};
use mev_core::series::{annual_maxima, exceedances, pair_differences, read_series, AnnualMaxima, Pairing, TimeSeries};

use crate::output::{cell, num, nums, Csv};
use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvChoice {
    Gev,
    Pp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyChoice {
    Linear,
    Power,
}

impl From<FamilyChoice> for Family {
    fn from(f: FamilyChoice) -> Self {
        match f {
            FamilyChoice::Linear => Family::Linear,
            FamilyChoice::Power => Family::Power,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Reanalysis series file.
    #[arg(long)]
    pub x: PathBuf,
    /// Extreme value model for the reanalysis maxima.
    #[arg(long, value_enum, default_value_t = EvChoice::Gev)]
    pub ev: EvChoice,
    /// Threshold for `--ev pp`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Linear)]
    pub family: FamilyChoice,
    /// Significance level of all intervals and tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Return periods in years, comma separated.
    #[arg(long = "T", value_delimiter = ',', default_values_t = [2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0])]
    pub periods: Vec<f64>,
    /// Fraction of expected records a year needs to yield a maximum.
    #[arg(long, default_value_t = 0.8)]
    pub coverage_floor: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

impl AnalysisArgs {
    pub fn validate(&self) -> Result<(), Failure> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Failure::usage(format!("--alpha {} outside (0, 1)", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.coverage_floor) {
            return Err(Failure::usage(format!("--coverage-floor {} outside [0, 1]", self.coverage_floor)));
        }
        if let Some(t) = self.periods.iter().find(|&&t| !(t > 1.0 && t.is_finite())) {
            return Err(Failure::usage(format!("return period {t} must exceed 1")));
        }
        if self.ev == EvChoice::Pp && self.threshold.is_none() {
            return Err(Failure::usage("--ev pp requires --threshold".into()));
        }
        Ok(())
    }
}

pub struct Reanalysis {
    pub maxima: AnnualMaxima,
    pub fit: EvFit<f64>,
}

pub fn load(path: &Path, floor: f64) -> Result<(TimeSeries, AnnualMaxima), Failure> {
    let series = read_series(path).map_err(|e| Failure::from(e).context(path))?;
    let maxima = annual_maxima(&series, floor);
    for (year, cov) in &maxima.dropped {
        log::warn!("{}: year {year} dropped, coverage {cov:.3}", path.display());
    }
    Ok((series, maxima))
}

fn require_converged(fit: &FitResult<f64>, what: &str) -> Result<(), Failure> {
    if fit.converged && fit.covariance_valid {
        Ok(())
    } else {
        Err(Failure::not_converged(format!(
            "{what} fit did not converge (scaled gradient {:.3e}, covariance valid: {})",
            fit.gradient_norm, fit.covariance_valid
        )))
    }
}

pub fn fit_reanalysis(args: &AnalysisArgs) -> Result<Reanalysis, Failure> {
    let (series, maxima) = load(&args.x, args.coverage_floor)?;
    let opts = FitOptions::default();
    let fit = match (args.ev, args.threshold) {
        (EvChoice::Pp, Some(u)) => {
            let exc = exceedances(&series, u, &maxima);
            let r = fit_pareto_poisson(&exc, maxima.len(), u, &opts)?;
            require_converged(&r, "Pareto-Poisson")?;
            EvFit::from_pareto_poisson(r, u)?
        }
        _ => {
            let r = fit_gev(&maxima.maxima, &opts)?;
            require_converged(&r, "GEV")?;
            EvFit::from_gev(r)
        }
    };
    Ok(Reanalysis { maxima, fit })
}

pub struct Instrumental {
    pub maxima: AnnualMaxima,
    pub pairing: Pairing,
    pub reg: HetRegFit<f64>,
    /// The constant-sd model replaced a heteroscedastic fit without an
    /// interior maximum.
    pub fallback: bool,
}

pub fn fit_instrumental(args: &AnalysisArgs, z: &Path, x: &AnnualMaxima) -> Result<Instrumental, Failure> {
    let (_, maxima) = load(z, args.coverage_floor)?;
    let pairing = pair_differences(x, &maxima);
    let opts = HetRegOptions::default();
    let mut reg = fit_hetreg(&pairing.data, args.family.into(), &opts)?;
    let mut fallback = false;
    if !(reg.fit.converged && reg.fit.covariance_valid) {
        // Short records can leave the heteroscedastic likelihood without an
        // interior maximum; a constant sd is the nested model.
        log::warn!("heteroscedastic fit has no interior maximum; using a constant conditional sd");
        reg = fit_homoscedastic(&pairing.data, args.family.into(), &opts)?;
        fallback = true;
    }
    require_converged(&reg.fit, "regression")?;
    Ok(Instrumental { maxima, pairing, reg, fallback })
}

pub fn fit_gev_z(z: &AnnualMaxima) -> Result<EvFit<f64>, Failure> {
    let r = fit_gev(&z.maxima, &FitOptions::default())?;
    require_converged(&r, "instrumental GEV")?;
    Ok(EvFit::from_gev(r))
}

pub fn mixed_model(ev: &EvFit<f64>, reg: &HetRegFit<f64>) -> Result<MixedModel<f64>, Failure> {
    Ok(MixedModel::new(ev.clone(), reg.clone(), MixedOptions::default())?)
}

fn params_json(fit: &FitResult<f64>, alpha: f64) -> Result<Value, Failure> {
    let ci = param_ci(fit, alpha, fit.n_obs)?;
    Ok(Value::Array(
        fit.names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                json!({
                    "name": name,
                    "estimate": num(fit.estimates[j]),
                    "se": num(fit.se[j]),
                    "lower": num(ci[j].lower),
                    "upper": num(ci[j].upper),
                    "fixed": fit.fixed[j],
                })
            })
            .collect(),
    ))
}

fn fit_summary(fit: &FitResult<f64>, alpha: f64) -> Result<Value, Failure> {
    Ok(json!({
        "params": params_json(fit, alpha)?,
        "loglik": num(fit.loglik),
        "converged": fit.converged,
        "iterations": fit.iterations,
        "gradient_norm": num(fit.gradient_norm),
        "n_obs": fit.n_obs,
        "covariance": Value::Array(fit.covariance.to_rows().iter().map(|r| nums(r)).collect()),
    }))
}

pub fn ev_json(ev: &EvFit<f64>, maxima: &AnnualMaxima, alpha: f64) -> Result<Value, Failure> {
    let mut v = fit_summary(&ev.fit, alpha)?;
    let (model, threshold) = match ev.model {
        mev_core::evd::EvModel::Gev(_) => ("gev", Value::Null),
        mev_core::evd::EvModel::ParetoPoisson(p) => ("pareto_poisson", num(p.u)),
    };
    v["model"] = json!(model);
    v["threshold"] = threshold;
    v["years"] = json!(maxima.years);
    v["dropped_years"] = json!(maxima.dropped.iter().map(|d| d.0).collect::<Vec<_>>());
    Ok(v)
}

pub fn reg_json(inst: &Instrumental, family: Family, alpha: f64) -> Result<Value, Failure> {
    let mut v = fit_summary(&inst.reg.fit, alpha)?;
    let lr = if inst.fallback {
        Value::Null
    } else {
        let t = homoscedasticity_test(&inst.pairing.data, family, alpha, &HetRegOptions::default())?;
        json!({ "statistic": num(t.statistic), "p_value": num(t.p_value), "reject": t.reject })
    };
    v["family"] = json!(family.name());
    v["sd_model"] = json!(if inst.fallback { "constant_fallback" } else { "heteroscedastic" });
    v["paired_years"] = json!(inst.pairing.data.years);
    v["unpaired_x_years"] = json!(inst.pairing.unpaired_x);
    v["unpaired_z_years"] = json!(inst.pairing.unpaired_z);
    v["homoscedasticity_lr"] = lr;
    Ok(v)
}

pub fn diagnostic_json(r: &DiagnosticReport<f64>) -> Value {
    json!({
        "ks": {
            "statistic": num(r.ks.statistic),
            "p_value": num(r.ks.p_value),
            "reject": r.ks.reject,
            "alpha": num(r.ks.alpha),
        },
        "ljung_box": r.ljung_box.iter().map(|(lag, t)| json!({
            "lag": lag,
            "statistic": num(t.statistic),
            "p_value": num(t.p_value),
            "reject": t.reject,
        })).collect::<Vec<_>>(),
        "acf": {
            "lags": r.acf.lags,
            "acf": nums(&r.acf.acf),
            "pacf": nums(&r.acf.pacf),
            "conf_bound": num(r.acf.conf_bound),
        },
        "parameters_estimated": r.parameters_estimated,
        "note": "tests treat fitted parameters as known; KS p-values are conservative",
    })
}

pub fn write_plot_table(path: &Path, r: &DiagnosticReport<f64>) -> Result<(), Failure> {
    let mut csv = Csv::new(&["p", "observed", "model_prob", "model_quantile"]);
    for p in &r.plot {
        csv.row(&[cell(p.p), cell(p.observed), cell(p.model_prob), cell(p.model_quantile)]);
    }
    csv.write(path)
}

pub struct Diagnostics {
    pub ev: DiagnosticReport<f64>,
    pub reg: Option<DiagnosticReport<f64>>,
}

pub fn diagnose(rea: &Reanalysis, inst: Option<&Instrumental>, alpha: f64) -> Result<Diagnostics, Failure> {
    let ev = diagnose_ev_fit(&rea.maxima.maxima, &rea.fit.model, alpha)?;
    let reg = match inst {
        Some(i) => Some(diagnose_regression(&i.pairing.data, &i.reg.model, alpha)?),
        None => None,
    };
    Ok(Diagnostics { ev, reg })
}

pub fn diagnostics_json(d: &Diagnostics) -> Value {
    json!({
        "ev": diagnostic_json(&d.ev),
        "reg": d.reg.as_ref().map(diagnostic_json),
    })
}

pub fn write_diagnostic_tables(out: &Path, d: &Diagnostics) -> Result<(), Failure> {
    write_plot_table(&out.join("ppqq_ev.csv"), &d.ev)?;
    if let Some(r) = &d.reg {
        write_plot_table(&out.join("ppqq_reg.csv"), r)?;
    }
    Ok(())
}

pub fn write_pairs_table(out: &Path, inst: &Instrumental) -> Result<(), Failure> {
    let mut csv = Csv::new(&["year", "x", "z", "y"]);
    let d = &inst.pairing.data;
    for i in 0..d.len() {
        csv.row(&[d.years[i].to_string(), cell(d.x[i]), cell(d.x[i] + d.y[i]), cell(d.y[i])]);
    }
    csv.write(&out.join("pairs.csv"))
}

pub fn write_regression_bands(out: &Path, inst: &Instrumental, alpha: f64) -> Result<(), Failure> {
    let d = &inst.pairing.data;
    let lo = d.x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid: Vec<f64> = (0..=50).map(|k| lo + (hi - lo) * k as f64 / 50.0).collect();
    let bands = regression_bands(&inst.reg, &grid, alpha)?;
    let mut csv = Csv::new(&["x", "mean", "mean_lo", "mean_hi", "pred_lo", "pred_hi"]);
    for b in bands {
        csv.row(&[cell(b.x), cell(b.mean), cell(b.mean_lo), cell(b.mean_hi), cell(b.pred_lo), cell(b.pred_hi)]);
    }
    csv.write(&out.join("regression_bands.csv"))
}

pub fn curves_csv(curves: &[(&str, &ReturnPeriodCurve<f64>)]) -> Csv {
    let mut csv = Csv::new(&["T", "q", "model", "quantile", "lo", "hi"]);
    for (name, curve) in curves {
        for p in &curve.entries {
            csv.row(&[cell(p.period), cell(p.q), name.to_string(), cell(p.z), cell(p.lo), cell(p.hi)]);
        }
    }
    csv
}

pub fn mixed_curve(m: &MixedModel<f64>, args: &AnalysisArgs) -> Result<ReturnPeriodCurve<f64>, Failure> {
    Ok(return_period_curve(m, &args.periods, args.alpha, m.n_paired())?)
}

pub fn all_curves(m: &MixedModel<f64>, gev_z: &EvFit<f64>, args: &AnalysisArgs) -> Result<Csv, Failure> {
    let set = comparison_curves(m, gev_z, &args.periods, args.alpha, m.n_paired())?;
    Ok(curves_csv(&[("reanalysis", &set.reanalysis), ("mixed", &set.mixed), ("instrumental_gev", &set.instrumental)]))
}

pub fn curves_meta(args: &AnalysisArgs, models: &[&str], m: Option<&MixedModel<f64>>) -> Value {
    json!({
        "file": "curves.csv",
        "columns": ["T", "q", "model", "quantile", "lo", "hi"],
        "models": models,
        "periods": nums(&args.periods),
        "alpha": num(args.alpha),
        "mixed_band_dof": m.map(|m| m.n_paired().saturating_sub(m.n_free_params() + 1)),
        "sd_clamped": m.map(|m| m.dist().sd_clamped()),
    })
}

pub fn report(ev: Value, reg: Value, gev_z: Value, diagnostics: Value, curves: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "ev_fit": ev,
        "reg_fit": reg,
        "gev_z_fit": gev_z,
        "diagnostics": diagnostics,
        "curves_meta": curves,
    })
}
