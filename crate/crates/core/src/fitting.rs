//! Maximum-likelihood fitting of the extreme value models, numerical
//! Fisher information, and Student-t parameter / quantile intervals.

use crate::error::{Error, Result};
use crate::evd::{gev_loglik, gpd_log_pdf, EvModel, GevParams, ParetoPoissonParams};
use crate::linalg::Matrix;
use crate::optimize::{maximize, numerical_hessian, MaximizeOptions};
use crate::scalar::Scalar;
use crate::special::{chi_square_sf, ln_gamma, student_t_quantile};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub names: Vec<&'static str>,
    pub estimates: Vec<T>,
    /// Parameters held fixed during the fit (zero variance).
    pub fixed: Vec<bool>,
    pub loglik: T,
    pub covariance: Matrix<T>,
    /// False when the observed information was not positive definite.
    pub covariance_valid: bool,
    pub se: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: T,
    pub n_obs: usize,
}

impl<T: Scalar> FitResult<T> {
    pub fn n_free(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    pub fn estimate(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| *n == name).map(|i| self.estimates[i])
    }

    /// Degrees of freedom for Student-t multipliers: `n - n_p - 1`.
    pub fn t_dof(&self, n_obs: usize) -> Result<usize> {
        let used = self.n_free() + 1;
        if n_obs <= used {
            return Err(Error::InvalidInput(format!(
                "non-positive degrees of freedom: {n_obs} observations, {} parameters",
                self.n_free()
            )));
        }
        Ok(n_obs - used)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval<T> {
    pub lower: T,
    pub upper: T,
    pub level: T,
}

impl<T: Scalar> ConfidenceInterval<T> {
    pub fn contains(&self, v: T) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

/// Point estimate with a symmetric delta-method band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band<T> {
    pub estimate: T,
    pub sd: T,
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone)]
pub struct FisherInformation<T> {
    /// `-∇²ℓ` at the estimate.
    pub information: Matrix<T>,
    /// Inverse of the information, when it is positive definite.
    pub covariance: Option<Matrix<T>>,
}

/// Observed Fisher information `-∇²ℓ(θ̂)` by central differences, and its
/// inverse when positive definite.
pub fn fisher_information<T, F>(loglik: F, theta_hat: &[T], rel_step: T) -> FisherInformation<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let information = numerical_hessian(loglik, theta_hat, rel_step).scale(-T::one());
    let finite = information.to_rows().iter().flatten().all(|v| v.is_finite());
    let covariance = if finite { information.spd_inverse() } else { None };
    FisherInformation { information, covariance }
}

/// `θ̂ⱼ ± t(1-α/2, n-n_p-1)·σ̂ⱼ` for every parameter.
pub fn param_ci<T: Scalar>(fit: &FitResult<T>, alpha: T, n_obs: usize) -> Result<Vec<ConfidenceInterval<T>>> {
    if !fit.covariance_valid {
        return Err(Error::InvalidCovariance("fit has no valid covariance".into()));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Domain(format!("significance level {alpha}")));
    }
    let dof = fit.t_dof(n_obs)?;
    let t = student_t_quantile(T::one() - alpha / T::c(2.0), T::from_usize_lossy(dof))?;
    Ok(fit
        .estimates
        .iter()
        .zip(&fit.se)
        .map(|(&est, &se)| ConfidenceInterval { lower: est - t * se, upper: est + t * se, level: T::one() - alpha })
        .collect())
}

#[derive(Debug, Clone)]
pub struct FitOptions<T> {
    /// Smallest sample accepted.
    pub min_obs: usize,
    pub optimizer: MaximizeOptions<T>,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self { min_obs: 10, optimizer: MaximizeOptions::default() }
    }
}

fn mean_sd<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one()).max(T::one());
    (mean, var.sqrt())
}

fn validate_sample<T: Scalar>(xs: &[T], min_obs: usize) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if xs.len() < min_obs {
        return Err(Error::TooFewObservations { needed: min_obs, got: xs.len() });
    }
    if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite observation {bad}")));
    }
    Ok(())
}

/// Maximizes `loglik` over the free coordinates of `full0` and assembles a
/// [`FitResult`] with the covariance embedded at full size.
pub(crate) fn fit_with_mask<T, F>(
    mut loglik: F,
    names: Vec<&'static str>,
    starts: &[Vec<T>],
    step: &[T],
    fixed: Vec<bool>,
    n_obs: usize,
    opts: &MaximizeOptions<T>,
) -> FitResult<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let free_idx: Vec<usize> = (0..fixed.len()).filter(|&i| !fixed[i]).collect();
    let template = starts[0].clone();
    let expand = |free: &[T]| {
        let mut full = template.clone();
        for (k, &i) in free_idx.iter().enumerate() {
            full[i] = free[k];
        }
        full
    };
    let mut reduced = |free: &[T]| loglik(&expand(free));

    let mut best: Option<crate::optimize::Maximum<T>> = None;
    let mut iterations = 0;
    for start in starts {
        let x0: Vec<T> = free_idx.iter().map(|&i| start[i]).collect();
        let s: Vec<T> = free_idx.iter().map(|&i| step[i]).collect();
        let m = maximize(&mut reduced, &x0, &s, opts);
        iterations += m.iterations;
        let better = match &best {
            None => true,
            Some(b) => (m.value > b.value && m.value.is_finite()) || !b.value.is_finite(),
        };
        if better {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let info = fisher_information(&mut reduced, &best.x, opts.hessian_step);

    let p = fixed.len();
    let mut covariance = Matrix::zeros(p, p);
    let covariance_valid = match &info.covariance {
        Some(c) => {
            for (a, &i) in free_idx.iter().enumerate() {
                for (b, &j) in free_idx.iter().enumerate() {
                    covariance[(i, j)] = c[(a, b)];
                }
            }
            true
        }
        None => false,
    };
    let se = covariance.diagonal().iter().map(|&v| v.max(T::zero()).sqrt()).collect();
    FitResult {
        names,
        estimates: expand(&best.x),
        fixed,
        loglik: best.value,
        covariance,
        covariance_valid,
        se,
        converged: best.converged && covariance_valid,
        iterations,
        gradient_norm: best.gradient_norm,
        n_obs,
    }
}

/// Backs the shape off towards zero until every observation is inside the
/// support.
fn feasible_shape<T: Scalar>(mut xi: T, ok: impl Fn(T) -> bool) -> T {
    for _ in 0..60 {
        if ok(xi) {
            return xi;
        }
        xi = xi * T::c(0.5);
    }
    T::zero()
}

fn gev_fit_impl<T: Scalar>(maxima: &[T], fix_gumbel: bool, opts: &FitOptions<T>) -> Result<FitResult<T>> {
    validate_sample(maxima, opts.min_obs)?;
    let (mean, sd) = mean_sd(maxima);
    if !(sd > T::zero()) {
        return Err(Error::Degenerate("all observations are equal".into()));
    }
    let psi0 = sd * T::c(6.0).sqrt() / T::PI();
    let mu0 = mean - T::c(EULER_GAMMA) * psi0;
    let log_psi0 = psi0.ln();
    let ll = |v: &[T]| gev_loglik(maxima, &GevParams::new(v[0], v[1], v[2])).unwrap_or(T::neg_infinity());
    let shapes: Vec<T> = if fix_gumbel { vec![T::zero()] } else { vec![T::c(0.1), T::c(-0.1)] };
    let starts: Vec<Vec<T>> = shapes
        .into_iter()
        .map(|xi| {
            let xi = feasible_shape(xi, |xi| ll(&[mu0, log_psi0, xi]).is_finite());
            vec![mu0, log_psi0, xi]
        })
        .collect();
    let step = [T::c(0.2) * psi0, T::c(0.2), T::c(0.05)];
    let fixed = vec![false, false, fix_gumbel];
    Ok(fit_with_mask(ll, vec!["mu", "log_psi", "xi"], &starts, &step, fixed, maxima.len(), &opts.optimizer))
}

/// GEV fit by maximum likelihood; estimates are `(μ, log ψ, ξ)`.
pub fn fit_gev<T: Scalar>(maxima: &[T], opts: &FitOptions<T>) -> Result<FitResult<T>> {
    gev_fit_impl(maxima, false, opts)
}

/// GEV fit with the shape frozen at zero (Gumbel).
pub fn fit_gumbel<T: Scalar>(maxima: &[T], opts: &FitOptions<T>) -> Result<FitResult<T>> {
    gev_fit_impl(maxima, true, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeChoice {
    Gev,
    Gumbel,
}

#[derive(Debug, Clone)]
pub struct GevSelection<T> {
    pub gev: FitResult<T>,
    pub gumbel: FitResult<T>,
    /// `2 (ℓ_GEV - ℓ_Gumbel)`.
    pub lr_statistic: T,
    pub p_value: T,
    pub selected: ShapeChoice,
}

impl<T: Scalar> GevSelection<T> {
    pub fn selected_fit(&self) -> &FitResult<T> {
        match self.selected {
            ShapeChoice::Gev => &self.gev,
            ShapeChoice::Gumbel => &self.gumbel,
        }
    }
}

/// Fits both GEV and Gumbel and keeps the Gumbel model unless the
/// likelihood-ratio test rejects ξ = 0 at level `alpha`.
pub fn fit_gev_selected<T: Scalar>(maxima: &[T], alpha: T, opts: &FitOptions<T>) -> Result<GevSelection<T>> {
    let gev = fit_gev(maxima, opts)?;
    let gumbel = fit_gumbel(maxima, opts)?;
    let lr = (T::c(2.0) * (gev.loglik - gumbel.loglik)).max(T::zero());
    let p_value = chi_square_sf(lr, T::one());
    let selected = if p_value < alpha || !gumbel.converged { ShapeChoice::Gev } else { ShapeChoice::Gumbel };
    Ok(GevSelection { gev, gumbel, lr_statistic: lr, p_value, selected })
}

/// Pareto-Poisson fit: closed-form Poisson rate and GPD maximum likelihood
/// on the excesses. Estimates are `(λ, log ψ, ξ)`; the covariance is
/// block diagonal between λ and the GPD pair.
pub fn fit_pareto_poisson<T: Scalar>(exceedances: &[T], years: usize, u: T, opts: &FitOptions<T>) -> Result<FitResult<T>> {
    if years == 0 {
        return Err(Error::InvalidInput("observation period must be at least one year".into()));
    }
    if exceedances.is_empty() {
        return Err(Error::EmptySample);
    }
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!("threshold {u}")));
    }
    if let Some(bad) = exceedances.iter().find(|&&x| !(x > u) || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("exceedance {bad} is not above the threshold {u}")));
    }
    let excess: Vec<T> = exceedances.iter().map(|&x| x - u).collect();
    let count = T::from_usize_lossy(excess.len());
    let n_years = T::from_usize_lossy(years);
    let lambda = count / n_years;

    let gpd_ll = |v: &[T]| {
        let mut s = T::zero();
        for &e in &excess {
            let lp = gpd_log_pdf(e, v[0], v[1]);
            if !lp.is_finite() {
                return T::neg_infinity();
            }
            s = s + lp;
        }
        s
    };
    let mean_excess = excess.iter().copied().sum::<T>() / count;
    let log_psi0 = mean_excess.ln();
    let starts: Vec<Vec<T>> = [T::c(0.1), T::c(-0.1)]
        .into_iter()
        .map(|xi| vec![log_psi0, feasible_shape(xi, |xi| gpd_ll(&[log_psi0, xi]).is_finite())])
        .collect();
    let gpd = fit_with_mask(
        gpd_ll,
        vec!["log_psi", "xi"],
        &starts,
        &[T::c(0.2), T::c(0.05)],
        vec![false, false],
        excess.len(),
        &opts.optimizer,
    );

    // Poisson log-likelihood of the total count over the period.
    let mean_count = lambda * n_years;
    let poisson_ll = count * mean_count.ln() - mean_count - ln_gamma(count + T::one());
    let lambda_var = lambda / n_years;
    let covariance = Matrix::block_diag(&Matrix::from_diagonal(&[lambda_var]), &gpd.covariance);
    let se = covariance.diagonal().iter().map(|&v| v.max(T::zero()).sqrt()).collect();
    Ok(FitResult {
        names: vec!["lambda", "log_psi", "xi"],
        estimates: vec![lambda, gpd.estimates[0], gpd.estimates[1]],
        fixed: vec![false, false, false],
        loglik: poisson_ll + gpd.loglik,
        covariance,
        covariance_valid: gpd.covariance_valid,
        se,
        converged: gpd.converged,
        iterations: gpd.iterations,
        gradient_norm: gpd.gradient_norm,
        n_obs: years,
    })
}

/// An extreme value model together with its fit.
#[derive(Debug, Clone)]
pub struct EvFit<T> {
    pub model: EvModel<T>,
    pub fit: FitResult<T>,
}

impl<T: Scalar> EvFit<T> {
    pub fn from_gev(fit: FitResult<T>) -> Self {
        let e = &fit.estimates;
        Self { model: EvModel::Gev(GevParams::new(e[0], e[1], e[2])), fit }
    }

    pub fn from_pareto_poisson(fit: FitResult<T>, u: T) -> Result<Self> {
        let e = &fit.estimates;
        let p = ParetoPoissonParams::new(e[0], e[1], e[2], u)?;
        Ok(Self { model: EvModel::ParetoPoisson(p), fit })
    }

    /// Number of annual maxima (years) behind the fit.
    pub fn n_years(&self) -> usize {
        self.fit.n_obs
    }

    /// Quantile at probability `q` with a delta-method band using the
    /// analytic quantile gradient and a Student-t multiplier.
    pub fn quantile_band(&self, q: T, alpha: T) -> Result<Band<T>> {
        if !self.fit.covariance_valid {
            return Err(Error::InvalidCovariance("fit has no valid covariance".into()));
        }
        let estimate = self.model.quantile(q)?;
        let grad = self.model.quantile_gradient(q)?;
        let var = self.fit.covariance.quad_form(&grad);
        if var < T::zero() {
            return Err(Error::InvalidCovariance(format!("negative quantile variance {var}")));
        }
        let dof = self.fit.t_dof(self.fit.n_obs)?;
        let t = student_t_quantile(T::one() - alpha / T::c(2.0), T::from_usize_lossy(dof))?;
        let sd = var.sqrt();
        Ok(Band { estimate, sd, lower: estimate - t * sd, upper: estimate + t * sd })
    }
}
