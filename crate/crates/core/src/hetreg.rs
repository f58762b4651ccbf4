//! Heteroscedastic regression of the instrumental-minus-reanalysis
//! differences on the reanalysis maxima: `Y | X = x ~ N(f_μ(x), f_σ(x)²)`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::evd::NormalCond;
use crate::fitting::{fit_with_mask, FitOptions, FitResult};
use crate::optimize::MaximizeOptions;
use crate::scalar::Scalar;
use crate::special::{chi_square_sf, student_t_quantile};

/// Parametric form of the conditional mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `f_μ = β₀ + β₁x`, `f_σ = β₂ + β₃x`
    Linear,
    /// `f_μ = β₀x^β₁`, `f_σ = β₂x^β₃` (requires x > 0)
    Power,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Power => "power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HetRegModel<T> {
    pub family: Family,
    /// `[β₀, β₁, β₂, β₃]`: mean coefficients then standard-deviation
    /// coefficients.
    pub beta: [T; 4],
}

impl<T: Scalar> HetRegModel<T> {
    pub fn new(family: Family, beta: [T; 4]) -> Self {
        Self { family, beta }
    }

    /// Conditional mean; defined for every real x in the linear family and
    /// x > 0 in the power family (NaN otherwise).
    pub fn mean_at(&self, x: T) -> T {
        let b = &self.beta;
        match self.family {
            Family::Linear => b[0] + b[1] * x,
            Family::Power => b[0] * x.powf(b[1]),
        }
    }

    /// Conditional standard deviation, unchecked (may be ≤ 0 or NaN outside
    /// the admissible region).
    pub fn sd_at(&self, x: T) -> T {
        let b = &self.beta;
        match self.family {
            Family::Linear => b[2] + b[3] * x,
            Family::Power => b[2] * x.powf(b[3]),
        }
    }

    /// Gradient of the conditional mean with respect to all four
    /// coefficients.
    pub fn mean_gradient(&self, x: T) -> [T; 4] {
        let b = &self.beta;
        match self.family {
            Family::Linear => [T::one(), x, T::zero(), T::zero()],
            Family::Power => {
                let p = x.powf(b[1]);
                [p, b[0] * p * x.ln(), T::zero(), T::zero()]
            }
        }
    }

    pub fn predict(&self, x: T) -> Result<NormalCond<T>> {
        if self.family == Family::Power && !(x > T::zero()) {
            return Err(Error::Domain(format!("power-family regression at x = {x}")));
        }
        NormalCond::new(self.mean_at(x), self.sd_at(x))
    }

    /// Log-likelihood without the `2π` constant:
    /// `-Σ log f_σ(xᵢ) - ½ Σ ((yᵢ - f_μ(xᵢ)) / f_σ(xᵢ))²`.
    /// Returns `-∞` when `f_σ` is not positive at some sample point.
    pub fn loglik(&self, data: &PairedMaxima<T>) -> T {
        let mut total = T::zero();
        for (&x, &y) in data.x.iter().zip(&data.y) {
            let sd = self.sd_at(x);
            if !(sd > T::zero()) || !sd.is_finite() {
                return T::neg_infinity();
            }
            let r = (y - self.mean_at(x)) / sd;
            total = total - sd.ln() - T::c(0.5) * r * r;
        }
        if total.is_nan() {
            T::neg_infinity()
        } else {
            total
        }
    }
}

/// Paired annual maxima: reanalysis `x` and difference `y = z - x` for the
/// years both records cover.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedMaxima<T> {
    pub years: Vec<i32>,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> PairedMaxima<T> {
    pub fn new(years: Vec<i32>, x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() || x.len() != years.len() {
            return Err(Error::InvalidInput(format!(
                "length mismatch: {} years, {} x, {} y",
                years.len(),
                x.len(),
                y.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = years.iter().find(|y| !seen.insert(**y)) {
            return Err(Error::InvalidInput(format!("year {dup} appears more than once")));
        }
        Ok(Self { years, x, y })
    }

    /// Pairs without year labels (numbered from 1).
    pub fn from_xy(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let years = (1..=x.len() as i32).collect();
        Self::new(years, x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// A fitted regression model and its maximum-likelihood summary.
#[derive(Debug, Clone)]
pub struct HetRegFit<T> {
    pub model: HetRegModel<T>,
    pub fit: FitResult<T>,
}

#[derive(Debug, Clone)]
pub struct HetRegOptions<T> {
    pub min_obs: usize,
    pub optimizer: MaximizeOptions<T>,
}

impl<T: Scalar> Default for HetRegOptions<T> {
    fn default() -> Self {
        Self { min_obs: 8, optimizer: MaximizeOptions::default() }
    }
}

impl<T: Scalar> From<&FitOptions<T>> for HetRegOptions<T> {
    fn from(o: &FitOptions<T>) -> Self {
        Self { min_obs: 8, optimizer: o.optimizer.clone() }
    }
}

fn mean_of<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len())
}

fn sd_of<T: Scalar>(v: &[T]) -> T {
    let m = mean_of(v);
    (v.iter().map(|&a| (a - m) * (a - m)).sum::<T>() / T::from_usize_lossy(v.len())).sqrt()
}

/// Least-squares start for the mean coefficients.
fn initial_mean<T: Scalar>(family: Family, x: &[T], y: &[T]) -> [T; 2] {
    match family {
        Family::Linear => {
            let mx = mean_of(x);
            let my = mean_of(y);
            let sxx: T = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
            let sxy: T = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
            let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
            [my - slope * mx, slope]
        }
        Family::Power => {
            // Profile the exponent over a grid; β₀ is linear given β₁.
            let mut best = (T::infinity(), [mean_of(y), T::zero()]);
            for k in -20..=20 {
                let b1 = T::from_i32(k).expect("small integer") * T::c(0.1);
                let px: Vec<T> = x.iter().map(|&a| a.powf(b1)).collect();
                let spp: T = px.iter().map(|&p| p * p).sum();
                let spy: T = px.iter().zip(y).map(|(&p, &b)| p * b).sum();
                let b0 = spy / spp;
                let ssr: T = px.iter().zip(y).map(|(&p, &b)| (b - b0 * p) * (b - b0 * p)).sum();
                if ssr < best.0 {
                    best = (ssr, [b0, b1]);
                }
            }
            best.1
        }
    }
}

fn fit_impl<T: Scalar>(data: &PairedMaxima<T>, family: Family, homoscedastic: bool, opts: &HetRegOptions<T>) -> Result<HetRegFit<T>> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if n < opts.min_obs {
        return Err(Error::TooFewObservations { needed: opts.min_obs, got: n });
    }
    if data.x.iter().chain(&data.y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in paired sample".into()));
    }
    if family == Family::Power {
        if let Some(bad) = data.x.iter().find(|&&x| !(x > T::zero())) {
            return Err(Error::InvalidInput(format!("power family needs positive x, got {bad}")));
        }
    }
    let [b0, b1] = initial_mean(family, &data.x, &data.y);
    let start_model = HetRegModel::new(family, [b0, b1, T::one(), T::zero()]);
    let residuals: Vec<T> = data.x.iter().zip(&data.y).map(|(&x, &y)| y - start_model.mean_at(x)).collect();
    let resid_sd = sd_of(&residuals);
    let y_scale = sd_of(&data.y).max(mean_of(&data.y).abs());
    if !(resid_sd > T::epsilon().sqrt() * y_scale.max(T::min_positive_value())) {
        return Err(Error::Degenerate("degenerate variance: residuals are identically zero".into()));
    }
    let x_sd = sd_of(&data.x).max(T::epsilon());
    let start = vec![b0, b1, resid_sd, T::zero()];
    let step = match family {
        Family::Linear => vec![
            T::c(0.1) * b0.abs().max(resid_sd),
            T::c(0.1) * b1.abs().max(resid_sd / x_sd),
            T::c(0.1) * resid_sd,
            T::c(0.05) * resid_sd / x_sd,
        ],
        Family::Power => vec![T::c(0.1) * b0.abs().max(resid_sd), T::c(0.1), T::c(0.1) * resid_sd, T::c(0.1)],
    };
    let run = |floor: T| {
        let ll = |b: &[T]| {
            let m = HetRegModel::new(family, [b[0], b[1], b[2], b[3]]);
            if floor > T::zero() && data.x.iter().any(|&x| !(m.sd_at(x) >= floor)) {
                return T::neg_infinity();
            }
            m.loglik(data)
        };
        fit_with_mask(
            ll,
            vec!["beta0", "beta1", "beta2", "beta3"],
            &[start.clone()],
            &step,
            vec![false, false, false, homoscedastic],
            n,
            &opts.optimizer,
        )
    };
    let mut fit = run(T::zero());
    // The likelihood is unbounded: f_σ → 0 at a sample point the mean passes
    // through. If the search fell into such a spike, look for the interior
    // maximum among models keeping f_σ ≥ SPIKE_FLOOR·s at every sample point.
    if !homoscedastic && min_sd(family, &fit.estimates, &data.x) < T::c(SPIKE_RATIO) * resid_sd {
        log::warn!("regression likelihood collapsed onto a sample point; refitting away from the singularity");
        fit = run(T::c(SPIKE_FLOOR) * resid_sd);
    }
    let e = &fit.estimates;
    let model = HetRegModel::new(family, [e[0], e[1], e[2], e[3]]);
    Ok(HetRegFit { model, fit })
}

/// Fitted sd below this fraction of the residual sd marks a collapsed fit.
const SPIKE_RATIO: f64 = 1e-3;
/// Lower bound on the fitted sd, relative to the residual sd, when refitting.
const SPIKE_FLOOR: f64 = 0.05;

fn min_sd<T: Scalar>(family: Family, beta: &[T], x: &[T]) -> T {
    let m = HetRegModel::new(family, [beta[0], beta[1], beta[2], beta[3]]);
    x.iter().map(|&v| m.sd_at(v)).fold(T::infinity(), T::min)
}

/// Maximum-likelihood fit of the heteroscedastic regression.
pub fn fit_hetreg<T: Scalar>(data: &PairedMaxima<T>, family: Family, opts: &HetRegOptions<T>) -> Result<HetRegFit<T>> {
    fit_impl(data, family, false, opts)
}

/// Same model with β₃ fixed at zero (constant standard deviation).
pub fn fit_homoscedastic<T: Scalar>(data: &PairedMaxima<T>, family: Family, opts: &HetRegOptions<T>) -> Result<HetRegFit<T>> {
    fit_impl(data, family, true, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrTest<T> {
    pub statistic: T,
    pub p_value: T,
    pub reject: bool,
}

/// Likelihood-ratio test of β₃ = 0 against the free heteroscedastic fit.
pub fn homoscedasticity_test<T: Scalar>(
    data: &PairedMaxima<T>,
    family: Family,
    alpha: T,
    opts: &HetRegOptions<T>,
) -> Result<LrTest<T>> {
    let free = fit_hetreg(data, family, opts)?;
    let nested = fit_homoscedastic(data, family, opts)?;
    let statistic = (T::c(2.0) * (free.fit.loglik - nested.fit.loglik)).max(T::zero());
    let p_value = chi_square_sf(statistic, T::one());
    Ok(LrTest { statistic, p_value, reject: p_value < alpha })
}

/// `(yᵢ - f_μ(xᵢ)) / sqrt(Ωᵢᵢ)` with `Ωᵢᵢ ≈ f_σ(xᵢ)²`, which ignores the
/// inflation due to estimating β.
pub fn studentized_residuals<T: Scalar>(model: &HetRegModel<T>, data: &PairedMaxima<T>) -> Result<Vec<T>> {
    data.x
        .iter()
        .zip(&data.y)
        .map(|(&x, &y)| {
            let sd = model.sd_at(x);
            if !(sd > T::zero()) {
                return Err(Error::Domain(format!("non-positive conditional sd {sd} at x = {x}")));
            }
            Ok((y - model.mean_at(x)) / sd)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionBandPoint<T> {
    pub x: T,
    pub mean: T,
    pub mean_lo: T,
    pub mean_hi: T,
    pub pred_lo: T,
    pub pred_hi: T,
}

/// Delta-method band for the mean response and the wider prediction band
/// (which adds `f_σ(x)²` to the variance) on `x_grid`.
pub fn regression_bands<T: Scalar>(fit: &HetRegFit<T>, x_grid: &[T], alpha: T) -> Result<Vec<RegressionBandPoint<T>>> {
    if !fit.fit.covariance_valid {
        return Err(Error::InvalidCovariance("regression fit has no valid covariance".into()));
    }
    let dof = fit.fit.t_dof(fit.fit.n_obs)?;
    let t = student_t_quantile(T::one() - alpha / T::c(2.0), T::from_usize_lossy(dof))?;
    x_grid
        .iter()
        .map(|&x| {
            let cond = fit.model.predict(x)?;
            let g = fit.model.mean_gradient(x);
            let var = fit.fit.covariance.quad_form(&g);
            if var < T::zero() {
                return Err(Error::InvalidCovariance(format!("negative variance {var} at x = {x}")));
            }
            let half_mean = t * var.sqrt();
            let half_pred = t * (var + cond.sd * cond.sd).sqrt();
            Ok(RegressionBandPoint {
                x,
                mean: cond.mean,
                mean_lo: cond.mean - half_mean,
                mean_hi: cond.mean + half_mean,
                pred_lo: cond.mean - half_pred,
                pred_hi: cond.mean + half_pred,
            })
        })
        .collect()
}
