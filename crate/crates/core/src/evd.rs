//! Extreme value distributions: GEV for block maxima and the
//! Pareto-Poisson annual-maximum law for threshold exceedances.
//!
//! Scale parameters are carried on the log scale so every real parameter
//! vector is admissible. Shapes with `|ξ| < XI_TOL` use the Gumbel /
//! exponential limit.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shape magnitude below which the ξ = 0 limit is used.
pub const XI_TOL: f64 = 1e-8;

#[inline]
fn is_gumbel<T: Scalar>(xi: T) -> bool {
    xi.abs() < T::c(XI_TOL)
}

fn check_probability<T: Scalar>(q: T) -> Result<()> {
    if q > T::zero() && q < T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability {q}")))
    }
}

/// `(1 + ξ z)^(-1/ξ)` and its logarithm for `1 + ξ z > 0`, with the ξ → 0
/// limit `exp(-z)`. Returns `None` outside the support.
fn tail_term<T: Scalar>(z: T, xi: T) -> Option<(T, T)> {
    if is_gumbel(xi) {
        return Some(((-z).exp(), -z));
    }
    let arg = xi * z;
    if arg <= -T::one() {
        return None;
    }
    let log_t = -arg.ln_1p() / xi;
    Some((log_t.exp(), log_t))
}

/// `(y^(-ξ) - 1) / ξ`, the standardized quantile offset, and its derivative
/// in ξ. Uses a power series in ξ near zero.
fn quantile_offset<T: Scalar>(y: T, xi: T) -> (T, T) {
    let l = y.ln();
    if xi.abs() < T::c(1e-4) {
        // h(ξ) = Σ_{k≥1} (-L)^k ξ^(k-1) / k!,  h'(ξ) = Σ_{k≥2} (k-1)(-L)^k ξ^(k-2) / k!
        let mut h = T::zero();
        let mut dh = T::zero();
        let mut fact = T::one();
        let mut neg_l_pow = T::one();
        for k in 1..=10 {
            let kf = T::from_usize_lossy(k);
            fact = fact * kf;
            neg_l_pow = neg_l_pow * -l;
            h = h + neg_l_pow * xi.powi(k as i32 - 1) / fact;
            if k >= 2 {
                dh = dh + (kf - T::one()) * neg_l_pow * xi.powi(k as i32 - 2) / fact;
            }
        }
        return (h, dh);
    }
    let e = (-xi * l).exp_m1();
    let h = e / xi;
    let dh = (-l * (e + T::one()) * xi - e) / (xi * xi);
    (h, dh)
}

// ---------------------------------------------------------------------------
// GEV
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevParams<T> {
    pub mu: T,
    pub log_psi: T,
    pub xi: T,
}

impl<T: Scalar> GevParams<T> {
    pub fn new(mu: T, log_psi: T, xi: T) -> Self {
        Self { mu, log_psi, xi }
    }

    pub fn psi(&self) -> T {
        self.log_psi.exp()
    }

    /// Finite endpoint of the support: upper for ξ < 0, lower for ξ > 0.
    pub fn endpoint(&self) -> Option<T> {
        (!is_gumbel(self.xi)).then(|| self.mu - self.psi() / self.xi)
    }

    /// Mean, defined for ξ < 1.
    pub fn mean(&self) -> Option<T> {
        if self.xi >= T::one() {
            return None;
        }
        let gamma_e = T::c(0.577_215_664_901_532_9);
        if is_gumbel(self.xi) {
            return Some(self.mu + self.psi() * gamma_e);
        }
        let g = crate::special::gamma(T::one() - self.xi);
        Some(self.mu + self.psi() * (g - T::one()) / self.xi)
    }
}

pub fn gev_cdf<T: Scalar>(x: T, p: &GevParams<T>) -> T {
    let z = (x - p.mu) / p.psi();
    match tail_term(z, p.xi) {
        Some((t, _)) => (-t).exp(),
        None if p.xi > T::zero() => T::zero(),
        None => T::one(),
    }
}

pub fn gev_log_pdf<T: Scalar>(x: T, p: &GevParams<T>) -> T {
    let z = (x - p.mu) / p.psi();
    match tail_term(z, p.xi) {
        // log f = -log ψ + (1 + ξ) log t - t, with log t = -log(1+ξz)/ξ
        Some((t, log_t)) if t.is_finite() => -p.log_psi + (T::one() + p.xi) * log_t - t,
        _ => T::neg_infinity(),
    }
}

pub fn gev_pdf<T: Scalar>(x: T, p: &GevParams<T>) -> T {
    let lp = gev_log_pdf(x, p);
    if lp == T::neg_infinity() {
        T::zero()
    } else {
        lp.exp()
    }
}

pub fn gev_quantile<T: Scalar>(q: T, p: &GevParams<T>) -> Result<T> {
    check_probability(q)?;
    let (h, _) = quantile_offset(-q.ln(), p.xi);
    Ok(p.mu + p.psi() * h)
}

/// Gradient of the GEV quantile with respect to `(μ, log ψ, ξ)`.
pub fn gev_quantile_gradient<T: Scalar>(q: T, p: &GevParams<T>) -> Result<[T; 3]> {
    check_probability(q)?;
    let (h, dh) = quantile_offset(-q.ln(), p.xi);
    let psi = p.psi();
    Ok([T::one(), psi * h, psi * dh])
}

pub fn gev_loglik<T: Scalar>(sample: &[T], p: &GevParams<T>) -> Result<T> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut total = T::zero();
    for &x in sample {
        let lp = gev_log_pdf(x, p);
        if lp == T::neg_infinity() || lp.is_nan() {
            return Ok(T::neg_infinity());
        }
        total = total + lp;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Pareto-Poisson
// ---------------------------------------------------------------------------

/// Poisson(λ) counts of exceedances per year over the threshold `u`, with
/// GPD(ψ, ξ) excesses. The threshold is an input, never estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoissonParams<T> {
    pub lambda: T,
    pub log_psi: T,
    pub xi: T,
    pub u: T,
}

impl<T: Scalar> ParetoPoissonParams<T> {
    pub fn new(lambda: T, log_psi: T, xi: T, u: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("exceedance rate must be positive, got {lambda}")));
        }
        if !u.is_finite() {
            return Err(Error::InvalidInput(format!("threshold must be finite, got {u}")));
        }
        Ok(Self { lambda, log_psi, xi, u })
    }

    pub fn psi(&self) -> T {
        self.log_psi.exp()
    }

    /// Probability that a year has no exceedance; the annual maximum sits
    /// at or below the threshold with this probability.
    pub fn no_exceedance_prob(&self) -> T {
        (-self.lambda).exp()
    }

    /// Upper endpoint of the support for ξ < 0.
    pub fn upper_endpoint(&self) -> Option<T> {
        (self.xi < T::zero() && !is_gumbel(self.xi)).then(|| self.u - self.psi() / self.xi)
    }
}

/// Quantile with a flag for the censored region below the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantile<T> {
    pub value: T,
    pub censored: bool,
}

/// Annual-maximum CDF. Zero below the threshold; jumps to `exp(-λ)` at it.
pub fn pp_cdf<T: Scalar>(x: T, p: &ParetoPoissonParams<T>) -> T {
    if x < p.u {
        return T::zero();
    }
    match tail_term((x - p.u) / p.psi(), p.xi) {
        Some((t, _)) => (-p.lambda * t).exp(),
        None => T::one(),
    }
}

/// Density of the continuous part above the threshold.
pub fn pp_pdf<T: Scalar>(x: T, p: &ParetoPoissonParams<T>) -> T {
    if x < p.u {
        return T::zero();
    }
    match tail_term((x - p.u) / p.psi(), p.xi) {
        Some((t, log_t)) if t > T::zero() => {
            // d/dx exp(-λ t) = exp(-λ t) λ t^(1+ξ) / ψ
            let log_f = -p.lambda * t + p.lambda.ln() + (T::one() + p.xi) * log_t - p.log_psi;
            log_f.exp()
        }
        _ => T::zero(),
    }
}

pub fn pp_quantile<T: Scalar>(q: T, p: &ParetoPoissonParams<T>) -> Result<Quantile<T>> {
    check_probability(q)?;
    if q <= p.no_exceedance_prob() {
        return Ok(Quantile { value: p.u, censored: true });
    }
    let (h, _) = quantile_offset(-q.ln() / p.lambda, p.xi);
    Ok(Quantile { value: p.u + p.psi() * h, censored: false })
}

/// Gradient of the annual-maximum quantile with respect to
/// `(λ, log ψ, ξ)`; zero in the censored region.
pub fn pp_quantile_gradient<T: Scalar>(q: T, p: &ParetoPoissonParams<T>) -> Result<[T; 3]> {
    check_probability(q)?;
    if q <= p.no_exceedance_prob() {
        return Ok([T::zero(); 3]);
    }
    let y = -q.ln() / p.lambda;
    let (h, dh) = quantile_offset(y, p.xi);
    let psi = p.psi();
    Ok([psi * y.powf(-p.xi) / p.lambda, psi * h, psi * dh])
}

/// Log density of a GPD excess `e = x - u`.
pub fn gpd_log_pdf<T: Scalar>(excess: T, log_psi: T, xi: T) -> T {
    if excess < T::zero() {
        return T::neg_infinity();
    }
    match tail_term(excess / log_psi.exp(), xi) {
        Some((t, log_t)) if t > T::zero() => -log_psi + (T::one() + xi) * log_t,
        _ => T::neg_infinity(),
    }
}

/// Full Pareto-Poisson log-likelihood: Poisson terms for the yearly counts
/// plus GPD terms for the excesses over the threshold.
pub fn pp_loglik<T: Scalar>(exceedances: &[T], counts_per_year: &[usize], p: &ParetoPoissonParams<T>) -> Result<T> {
    if exceedances.is_empty() || counts_per_year.is_empty() {
        return Err(Error::EmptySample);
    }
    let ln_lambda = p.lambda.ln();
    let mut total = T::zero();
    for &k in counts_per_year {
        let kf = T::from_usize_lossy(k);
        total = total + kf * ln_lambda - p.lambda - crate::special::ln_gamma(kf + T::one());
    }
    for &x in exceedances {
        let lp = gpd_log_pdf(x - p.u, p.log_psi, p.xi);
        if lp == T::neg_infinity() || lp.is_nan() {
            return Ok(T::neg_infinity());
        }
        total = total + lp;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Normal conditional and the model union
// ---------------------------------------------------------------------------

/// Conditional normal law of the difference `Y | X = x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalCond<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Scalar> NormalCond<T> {
    pub fn new(mean: T, sd: T) -> Result<Self> {
        if sd > T::zero() && sd.is_finite() {
            Ok(Self { mean, sd })
        } else {
            Err(Error::Domain(format!("standard deviation {sd}")))
        }
    }

    pub fn cdf(&self, y: T) -> T {
        crate::special::std_normal_cdf((y - self.mean) / self.sd)
    }

    pub fn pdf(&self, y: T) -> T {
        crate::special::std_normal_pdf((y - self.mean) / self.sd) / self.sd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvKind {
    Gev,
    ParetoPoisson,
}

/// Distribution of the annual maximum of the long (reanalysis) record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvModel<T> {
    Gev(GevParams<T>),
    ParetoPoisson(ParetoPoissonParams<T>),
}

impl<T: Scalar> EvModel<T> {
    pub fn kind(&self) -> EvKind {
        match self {
            EvModel::Gev(_) => EvKind::Gev,
            EvModel::ParetoPoisson(_) => EvKind::ParetoPoisson,
        }
    }

    pub fn cdf(&self, x: T) -> T {
        match self {
            EvModel::Gev(p) => gev_cdf(x, p),
            EvModel::ParetoPoisson(p) => pp_cdf(x, p),
        }
    }

    pub fn pdf(&self, x: T) -> T {
        match self {
            EvModel::Gev(p) => gev_pdf(x, p),
            EvModel::ParetoPoisson(p) => pp_pdf(x, p),
        }
    }

    /// Quantile; in the censored Pareto-Poisson region this is the threshold.
    pub fn quantile(&self, q: T) -> Result<T> {
        match self {
            EvModel::Gev(p) => gev_quantile(q, p),
            EvModel::ParetoPoisson(p) => pp_quantile(q, p).map(|r| r.value),
        }
    }

    pub fn quantile_gradient(&self, q: T) -> Result<Vec<T>> {
        match self {
            EvModel::Gev(p) => gev_quantile_gradient(q, p).map(|g| g.to_vec()),
            EvModel::ParetoPoisson(p) => pp_quantile_gradient(q, p).map(|g| g.to_vec()),
        }
    }

    /// Probability mass concentrated at the lower end of the support
    /// (nonzero only for Pareto-Poisson, at the threshold).
    pub fn lower_atom(&self) -> Option<(T, T)> {
        match self {
            EvModel::Gev(_) => None,
            EvModel::ParetoPoisson(p) => Some((p.u, p.no_exceedance_prob())),
        }
    }

    /// Hard bounds of the support, where finite.
    pub fn support(&self) -> (Option<T>, Option<T>) {
        match self {
            EvModel::Gev(p) => match p.endpoint() {
                Some(e) if p.xi > T::zero() => (Some(e), None),
                Some(e) => (None, Some(e)),
                None => (None, None),
            },
            EvModel::ParetoPoisson(p) => (Some(p.u), p.upper_endpoint()),
        }
    }

    /// Characteristic scale ψ.
    pub fn scale(&self) -> T {
        match self {
            EvModel::Gev(p) => p.psi(),
            EvModel::ParetoPoisson(p) => p.psi(),
        }
    }

    /// Parameter vector: `(μ, log ψ, ξ)` or `(λ, log ψ, ξ)`.
    pub fn params(&self) -> Vec<T> {
        match self {
            EvModel::Gev(p) => vec![p.mu, p.log_psi, p.xi],
            EvModel::ParetoPoisson(p) => vec![p.lambda, p.log_psi, p.xi],
        }
    }

    pub fn param_names(&self) -> [&'static str; 3] {
        match self {
            EvModel::Gev(_) => ["mu", "log_psi", "xi"],
            EvModel::ParetoPoisson(_) => ["lambda", "log_psi", "xi"],
        }
    }

    /// Same family (and threshold) with a new parameter vector.
    pub fn with_params(&self, v: &[T]) -> Result<Self> {
        if v.len() != 3 {
            return Err(Error::InvalidInput(format!("expected 3 EV parameters, got {}", v.len())));
        }
        Ok(match self {
            EvModel::Gev(_) => EvModel::Gev(GevParams::new(v[0], v[1], v[2])),
            EvModel::ParetoPoisson(p) => EvModel::ParetoPoisson(ParetoPoissonParams::new(v[0], v[1], v[2], p.u)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case1() -> GevParams<f64> {
        GevParams::new(10.0, 0.5, -0.15)
    }

    fn case2() -> ParetoPoissonParams<f64> {
        ParetoPoissonParams::new(25.0, -0.13, -0.05, 2.5).unwrap()
    }

    /// Composite Simpson on a uniform grid; independent of the adaptive
    /// quadrature module.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn gumbel_cdf_at_location() {
        let p = GevParams::new(3.0, 0.2, 0.0);
        assert!((gev_cdf(3.0, &p) - (-1.0_f64).exp()).abs() < 1e-15);
        assert_eq!(gev_cdf(f64::INFINITY, &p), 1.0);
        assert_eq!(gev_cdf(f64::NEG_INFINITY, &p), 0.0);
    }

    #[test]
    fn gumbel_mode_density() {
        let p = GevParams::new(3.0, 0.2, 0.0);
        assert!((gev_pdf(3.0, &p) - (-1.0_f64).exp() / 0.2_f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn weibull_type_support() {
        let p = case1();
        let end = p.endpoint().unwrap();
        assert!((end - (10.0 + 0.5_f64.exp() / 0.15)).abs() < 1e-12);
        assert_eq!(gev_pdf(end + 0.1, &p), 0.0);
        assert_eq!(gev_cdf(end + 0.1, &p), 1.0);
        let frechet = GevParams::new(0.0, 0.0, 0.3);
        assert_eq!(gev_cdf(frechet.endpoint().unwrap() - 1.0, &frechet), 0.0);
    }

    #[test]
    fn case1_quantile_round_trip() {
        let p = case1();
        let x = gev_quantile(0.99, &p).unwrap();
        assert!((gev_cdf(x, &p) - 0.99).abs() < 1e-14);
    }

    #[test]
    fn gumbel_quantile_closed_form() {
        let p = GevParams::new(5.1046, -0.5173, 0.0);
        let x = gev_quantile(0.98, &p).unwrap();
        let oracle = 5.1046 - (-0.5173_f64).exp() * (-(0.98_f64.ln())).ln();
        assert!((x - oracle).abs() < 1e-12);
        assert!((x - 7.429).abs() < 2e-3, "{x}");
        let at_median = gev_quantile((-1.0_f64).exp(), &p).unwrap();
        assert!((at_median - 5.1046).abs() < 1e-12);
        assert!(gev_quantile(1.0, &p).is_err());
        assert!(gev_quantile(-0.1, &p).is_err());
    }

    #[test]
    fn gev_density_integrates_to_one() {
        for p in [case1(), GevParams::new(0.0, 0.0, 0.0), GevParams::new(1.0, -0.3, 0.2)] {
            let a = gev_quantile(1e-15, &p).unwrap();
            let b = p.endpoint().filter(|_| p.xi < 0.0).unwrap_or_else(|| gev_quantile(1.0 - 1e-13, &p).unwrap());
            // Heavy tails converge slowly; split at the median to keep Simpson accurate.
            let m = gev_quantile(0.5, &p).unwrap();
            let total = simpson(|x| gev_pdf(x, &p), a, m, 200_000) + simpson(|x| gev_pdf(x, &p), m, b, 400_000);
            let missing = gev_cdf(a, &p) + (1.0 - gev_cdf(b, &p));
            assert!((total + missing - 1.0).abs() < 1e-8, "{p:?}: {}", total + missing);
        }
    }

    #[test]
    fn gev_loglik_definition() {
        let p = GevParams::new(2.0, 0.1, 0.0);
        assert!((gev_loglik(&[2.0], &p).unwrap() - ((-1.0_f64).exp() / 0.1_f64.exp()).ln()).abs() < 1e-14);
        let xs = [1.5, 2.2, 3.9, 2.0];
        let direct: f64 = xs.iter().map(|&x| gev_pdf(x, &p).ln()).sum();
        assert!((gev_loglik(&xs, &p).unwrap() - direct).abs() < 1e-12);
        assert!(matches!(gev_loglik(&[], &p), Err(Error::EmptySample)));
        let bounded = case1();
        assert_eq!(gev_loglik(&[9.0, 30.0], &bounded).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn pp_cdf_at_threshold() {
        let p = ParetoPoissonParams::new(4.0, 0.0, 0.0, 2.5).unwrap();
        assert!((pp_cdf(2.5, &p) - (-4.0_f64).exp()).abs() < 1e-15);
        assert_eq!(pp_cdf(2.4, &p), 0.0);
        assert_eq!(pp_cdf(f64::INFINITY, &p), 1.0);
    }

    #[test]
    fn pp_quantile_round_trip_and_censoring() {
        let p = case2();
        let x = pp_quantile(0.99, &p).unwrap();
        assert!(!x.censored);
        assert!((pp_cdf(x.value, &p) - 0.99).abs() < 1e-13);
        let small = ParetoPoissonParams::new(0.5, 0.0, 0.1, 1.0).unwrap();
        let c = pp_quantile(0.3, &small).unwrap();
        assert!(c.censored);
        assert_eq!(c.value, 1.0);
        assert!(pp_quantile(0.0, &p).is_err());
    }

    #[test]
    fn pp_density_integrates_to_continuous_mass() {
        let p = ParetoPoissonParams::new(2.0, 0.0, -0.2, 1.0).unwrap();
        let b = p.upper_endpoint().unwrap();
        let mass = simpson(|x| pp_pdf(x, &p), p.u, b, 200_000);
        assert!((mass - (1.0 - p.no_exceedance_prob())).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn rejects_invalid_pp_params() {
        assert!(ParetoPoissonParams::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(ParetoPoissonParams::new(1.0, 0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn pp_loglik_matches_components() {
        let p = ParetoPoissonParams::new(2.0, 0.1, 0.05, 1.0).unwrap();
        let exc = [1.2, 1.9, 3.0];
        let counts = [2, 1, 0];
        let poisson: f64 = counts
            .iter()
            .map(|&k| {
                let k = k as f64;
                k * 2.0_f64.ln() - 2.0 - crate::special::ln_gamma(k + 1.0)
            })
            .sum();
        let gpd: f64 = exc.iter().map(|&x| gpd_log_pdf(x - 1.0, 0.1, 0.05)).sum();
        assert!((pp_loglik(&exc, &counts, &p).unwrap() - poisson - gpd).abs() < 1e-12);
    }

    #[test]
    fn quantile_gradients_match_finite_differences() {
        let q = 0.98;
        for p in [case1(), GevParams::new(1.0, 0.2, 0.0), GevParams::new(1.0, 0.2, 5e-5)] {
            let g = gev_quantile_gradient(q, &p).unwrap();
            let base = [p.mu, p.log_psi, p.xi];
            for j in 0..3 {
                let h = 1e-6;
                let mut up = base;
                let mut dn = base;
                up[j] += h;
                dn[j] -= h;
                let f = |v: [f64; 3]| gev_quantile(q, &GevParams::new(v[0], v[1], v[2])).unwrap();
                let fd = (f(up) - f(dn)) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-6 * fd.abs().max(1.0), "{p:?} j={j}: {fd} vs {}", g[j]);
            }
        }
        let p = case2();
        let g = pp_quantile_gradient(q, &p).unwrap();
        let base = [p.lambda, p.log_psi, p.xi];
        for j in 0..3 {
            let h = 1e-6;
            let mut up = base;
            let mut dn = base;
            up[j] += h;
            dn[j] -= h;
            let f = |v: [f64; 3]| pp_quantile(q, &ParetoPoissonParams::new(v[0], v[1], v[2], 2.5).unwrap()).unwrap().value;
            let fd = (f(up) - f(dn)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6 * fd.abs().max(1.0), "pp j={j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let p = GevParams::new(10.0_f32, 0.5, -0.15);
        let x = gev_quantile(0.9_f32, &p).unwrap();
        assert!((gev_cdf(x, &p) - 0.9).abs() < 1e-5);
    }

    fn gev_strategy() -> impl Strategy<Value = GevParams<f64>> {
        (-5.0..5.0, -1.5..1.5, -0.45..0.45).prop_map(|(m, l, x)| GevParams::new(m, l, x))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn gev_cdf_is_monotone(p in gev_strategy()) {
            let lo = gev_quantile(1e-6, &p).unwrap() - 1.0;
            let hi = gev_quantile(1.0 - 1e-6, &p).unwrap() + 1.0;
            let mut prev = 0.0;
            for i in 0..=200 {
                let x = lo + (hi - lo) * i as f64 / 200.0;
                let f = gev_cdf(x, &p);
                prop_assert!((0.0..=1.0).contains(&f));
                prop_assert!(f >= prev);
                prev = f;
            }
        }

        #[test]
        fn gev_quantile_inverts_cdf(p in gev_strategy(), k in 0usize..13) {
            let qs = [1e-6, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98, 0.99, 0.999, 1.0 - 1e-4, 1.0 - 1e-6];
            let q = qs[k];
            let x = gev_quantile(q, &p).unwrap();
            prop_assert!((gev_cdf(x, &p) - q).abs() <= 1e-10);
        }

        #[test]
        fn pp_quantile_inverts_cdf(lambda in 0.5..40.0, l in -1.0..1.0, xi in -0.4..0.4, k in 0usize..8) {
            let p = ParetoPoissonParams::new(lambda, l, xi, 2.0).unwrap();
            let qs: [f64; 8] = [1e-6, 0.01, 0.3, 0.5, 0.9, 0.99, 1.0 - 1e-4, 1.0 - 1e-6];
            let q = qs[k];
            let r = pp_quantile(q, &p).unwrap();
            if !r.censored {
                prop_assert!((pp_cdf(r.value, &p) - q).abs() <= 1e-10);
            }
        }

        #[test]
        fn gev_pdf_is_derivative_of_cdf(p in gev_strategy(), u in 0.02..0.98) {
            let x = gev_quantile(u, &p).unwrap();
            let h = 1e-6 * p.psi();
            let fd = (gev_cdf(x + h, &p) - gev_cdf(x - h, &p)) / (2.0 * h);
            let pdf = gev_pdf(x, &p);
            prop_assert!((fd - pdf).abs() <= 1e-5 * pdf.max(1e-3), "{fd} vs {pdf}");
        }

        #[test]
        fn gumbel_branch_is_continuous(m in -3.0..3.0, l in -1.0..1.0, u in 1e-4..0.9999) {
            let g = GevParams::new(m, l, 0.0);
            let x = gev_quantile(u, &g).unwrap();
            for xi in [XI_TOL, -XI_TOL] {
                let p = GevParams::new(m, l, xi);
                prop_assert!((gev_cdf(x, &p) - gev_cdf(x, &g)).abs() <= 1e-8);
            }
        }
    }
}
