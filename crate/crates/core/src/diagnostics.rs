//! Goodness-of-fit battery: PIT transform, one-sample KS against the
//! standard normal, sample ACF/PACF, Ljung-Box and PP/QQ plot tables.

use crate::error::{Error, Result};
use crate::evd::EvModel;
use crate::hetreg::{studentized_residuals, HetRegModel, PairedMaxima};
use crate::scalar::Scalar;
use crate::special::{chi_square_sf, kolmogorov_sf, std_normal_cdf, std_normal_quantile};

/// Lags tested by the Ljung-Box portmanteau in the composite reports.
pub const DEFAULT_LB_LAGS: [usize; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport<T> {
    pub statistic: T,
    pub p_value: T,
    pub reject: bool,
    pub alpha: T,
}

impl<T: Scalar> TestReport<T> {
    fn new(statistic: T, p_value: T, alpha: T) -> Self {
        let p_value = p_value.max(T::zero()).min(T::one());
        Self { statistic, p_value, reject: p_value < alpha, alpha }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfReport<T> {
    /// `0..=max_lag`.
    pub lags: Vec<usize>,
    pub acf: Vec<T>,
    /// PACF at the same lags; lag 0 is 1 by convention.
    pub pacf: Vec<T>,
    /// `z_{1-α/2} / √n`.
    pub conf_bound: T,
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// `Φ⁻¹(F(x_i))` with `F` clamped to `[1e-12, 1 - 1e-12]`.
pub fn pit_transform<T: Scalar>(sample: &[T], cdf: impl Fn(T) -> T) -> Vec<T> {
    let lo = T::c(1e-12).max(T::epsilon());
    let hi = T::one() - lo;
    sample
        .iter()
        .map(|&x| {
            let u = cdf(x);
            let u = if u.is_nan() { T::c(0.5) } else { u.max(lo).min(hi) };
            // Clamped into (0, 1), so the quantile is always defined.
            std_normal_quantile(u).unwrap_or_else(|_| T::zero())
        })
        .collect()
}

/// `D = sup |F_n - Φ|`, with the empirical CDF taken as a step function.
pub fn ks_statistic<T: Scalar>(sample: &[T]) -> Result<T> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in sample".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = T::from_usize_lossy(s.len());
    let mut d = T::zero();
    let mut i = 0;
    while i < s.len() {
        // Walk over a block of ties so the jump is measured once.
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let f = std_normal_cdf(s[i]);
        let below = T::from_usize_lossy(i) / n;
        let above = T::from_usize_lossy(j + 1) / n;
        d = d.max((f - below).abs()).max((above - f).abs());
        i = j + 1;
    }
    Ok(d)
}

/// Kolmogorov p-value with the `(√n + 0.12 + 0.11/√n)` small-sample factor.
pub fn ks_p_value<T: Scalar>(d: T, n: usize) -> T {
    let sn = T::from_usize_lossy(n).sqrt();
    kolmogorov_sf((sn + T::c(0.12) + T::c(0.11) / sn) * d)
}

pub fn ks_test_std_normal<T: Scalar>(sample: &[T], alpha: T) -> Result<TestReport<T>> {
    check_alpha(alpha)?;
    if sample.len() < 5 {
        return Err(Error::TooFewObservations { needed: 5, got: sample.len() });
    }
    let d = ks_statistic(sample)?;
    Ok(TestReport::new(d, ks_p_value(d, sample.len()), alpha))
}

fn autocorrelations<T: Scalar>(sample: &[T], max_lag: usize) -> Result<Vec<T>> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    if max_lag >= n {
        return Err(Error::InvalidInput(format!("lag {max_lag} not below sample size {n}")));
    }
    let mean = sample.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let dev: Vec<T> = sample.iter().map(|&v| v - mean).collect();
    let denom: T = dev.iter().map(|&d| d * d).sum();
    if !(denom > T::zero()) {
        return Err(Error::Degenerate("constant sample has no autocorrelation".into()));
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                T::one()
            } else {
                dev.iter().zip(&dev[k..]).map(|(&a, &b)| a * b).sum::<T>() / denom
            }
        })
        .collect())
}

/// PACF by the Durbin-Levinson recursion; `rho[0]` must be 1.
fn durbin_levinson<T: Scalar>(rho: &[T]) -> Vec<T> {
    let m = rho.len().saturating_sub(1);
    let mut pacf = vec![T::one()];
    let mut phi: Vec<T> = Vec::with_capacity(m);
    for k in 1..=m {
        let (num, den) = phi.iter().enumerate().fold((rho[k], T::one()), |(num, den), (j, &p)| {
            (num - p * rho[k - 1 - j], den - p * rho[j + 1])
        });
        let a = if den.abs() > T::zero() { num / den } else { T::zero() };
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - a * prev[prev.len() - 1 - j];
        }
        phi.push(a);
        pacf.push(a);
    }
    pacf
}

pub fn acf<T: Scalar>(sample: &[T], max_lag: usize, alpha: T) -> Result<AcfReport<T>> {
    check_alpha(alpha)?;
    let rho = autocorrelations(sample, max_lag)?;
    let pacf = durbin_levinson(&rho);
    let z = std_normal_quantile(T::one() - alpha / T::c(2.0))?;
    Ok(AcfReport {
        lags: (0..=max_lag).collect(),
        acf: rho,
        pacf,
        conf_bound: z / T::from_usize_lossy(sample.len()).sqrt(),
    })
}

/// `Q(h) = n(n+2) Σ_{k≤h} ρ̂_k² / (n-k)` against `χ²(h)`, one report per lag.
pub fn ljung_box<T: Scalar>(sample: &[T], lags: &[usize], alpha: T) -> Result<Vec<TestReport<T>>> {
    check_alpha(alpha)?;
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if lags.contains(&0) {
        return Err(Error::InvalidInput("Ljung-Box lag must be positive".into()));
    }
    let rho = autocorrelations(sample, max_lag)?;
    let n = T::from_usize_lossy(sample.len());
    let mut cumulative = vec![T::zero(); max_lag + 1];
    for k in 1..=max_lag {
        cumulative[k] = cumulative[k - 1] + rho[k] * rho[k] / (n - T::from_usize_lossy(k));
    }
    lags.iter()
        .map(|&h| {
            let q = n * (n + T::c(2.0)) * cumulative[h];
            Ok(TestReport::new(q, chi_square_sf(q, T::from_usize_lossy(h)), alpha))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint<T> {
    /// Plotting position `i/(n+1)`.
    pub p: T,
    pub observed: T,
    /// Model CDF at the observation (PP abscissa).
    pub model_prob: T,
    /// Model quantile at the plotting position (QQ ordinate).
    pub model_quantile: T,
}

/// PP and QQ pairs over the sorted sample with Weibull plotting positions.
pub fn pp_qq_data<T: Scalar>(
    sample: &[T],
    cdf: impl Fn(T) -> T,
    quantile: impl Fn(T) -> Result<T>,
) -> Result<Vec<PlotPoint<T>>> {
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in sample".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n1 = T::from_usize_lossy(s.len() + 1);
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = T::from_usize_lossy(i + 1) / n1;
            Ok(PlotPoint { p, observed: x, model_prob: cdf(x), model_quantile: quantile(p)? })
        })
        .collect()
}

/// Tests run on one nominally standard-normal series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport<T> {
    /// PIT values (EV fit) or studentized residuals (regression).
    pub transformed: Vec<T>,
    pub ks: TestReport<T>,
    pub ljung_box: Vec<(usize, TestReport<T>)>,
    pub acf: AcfReport<T>,
    pub plot: Vec<PlotPoint<T>>,
    /// The tests treat fitted parameters as known, which makes KS
    /// conservative.
    pub parameters_estimated: bool,
}

fn report_for<T: Scalar>(transformed: Vec<T>, plot: Vec<PlotPoint<T>>, alpha: T) -> Result<DiagnosticReport<T>> {
    let n = transformed.len();
    let lags: Vec<usize> = DEFAULT_LB_LAGS.iter().copied().filter(|&h| h < n).collect();
    let ks = ks_test_std_normal(&transformed, alpha)?;
    let lb = ljung_box(&transformed, &lags, alpha)?;
    let max_lag = (n / 4).clamp(lags.len().max(1), 20).min(n - 1);
    Ok(DiagnosticReport {
        ks,
        ljung_box: lags.into_iter().zip(lb).collect(),
        acf: acf(&transformed, max_lag, alpha)?,
        plot,
        transformed,
        parameters_estimated: true,
    })
}

/// PIT + KS, Ljung-Box at lags 1-5, ACF/PACF and PP/QQ data for an EV fit
/// to annual maxima (in time order).
pub fn diagnose_ev_fit<T: Scalar>(maxima: &[T], model: &EvModel<T>, alpha: T) -> Result<DiagnosticReport<T>> {
    let pit = pit_transform(maxima, |x| model.cdf(x));
    let plot = pp_qq_data(maxima, |x| model.cdf(x), |p| model.quantile(p))?;
    report_for(pit, plot, alpha)
}

/// The same battery on studentized regression residuals, with normal QQ data.
pub fn diagnose_regression<T: Scalar>(data: &PairedMaxima<T>, model: &HetRegModel<T>, alpha: T) -> Result<DiagnosticReport<T>> {
    let r = studentized_residuals(model, data)?;
    let plot = pp_qq_data(&r, std_normal_cdf, std_normal_quantile)?;
    report_for(r, plot, alpha)
}
