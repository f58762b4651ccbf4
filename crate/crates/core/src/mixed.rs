//! The mixed extreme value model: the instrumental annual maximum is
//! `Z = X + Y` with `X` following a fitted extreme value law and
//! `Y | X` normal with regression-given mean and standard deviation.
//!
//! `F_Z(z) = ∫ f_X(x) Φ((z - x - μ(x)) / σ(x)) dx` and
//! `f_Z(z) = ∫ f_X(x) φ((z - x - μ(x)) / σ(x)) / σ(x) dx`
//! are evaluated by adaptive Gauss-Kronrod quadrature over
//! `[F_X⁻¹(ε), F_X⁻¹(1-ε)]`; quantiles are found with a bracketing root
//! finder and their uncertainty by the delta method with a block-diagonal
//! parameter covariance.

use crate::error::{Error, Result};
use crate::evd::EvModel;
use crate::fitting::{Band, EvFit};
use crate::hetreg::{Family, HetRegFit, HetRegModel};
use crate::linalg::Matrix;
use crate::quadrature::{integrate, QuadOptions};
use crate::roots::{brent, BrentOptions};
use crate::scalar::Scalar;
use crate::special::{std_normal_cdf, std_normal_pdf, student_t_quantile};

#[derive(Debug, Clone, Copy)]
pub struct MixedOptions<T> {
    pub quad: QuadOptions<T>,
    /// Probability mass of `X` left out at each end of the integration range.
    pub tail_prob: T,
    /// Conditional sd substituted where `f_σ ≤ 0`, relative to the EV scale.
    pub sd_floor_rel: T,
    /// Required `|F_Z(ẑ) - q|` at a computed quantile.
    pub root_residual_tol: T,
    pub max_doublings: usize,
    /// Relative step of the quantile finite differences.
    pub gradient_eps: T,
}

impl<T: Scalar> Default for MixedOptions<T> {
    fn default() -> Self {
        Self {
            quad: QuadOptions::default(),
            tail_prob: T::c(1e-12).max(T::epsilon() * T::c(10.0)),
            sd_floor_rel: T::c(1e-6),
            root_residual_tol: T::c(T::ROOT_RESIDUAL_TOL),
            max_doublings: 60,
            gradient_eps: T::c(1e-6).max(T::epsilon().sqrt()),
        }
    }
}

/// Distribution of `Z = X + Y` for fixed parameter values.
#[derive(Debug, Clone)]
pub struct MixtureDist<T> {
    pub ev: EvModel<T>,
    pub reg: HetRegModel<T>,
    pub opts: MixedOptions<T>,
    lo: T,
    hi: T,
    sd_floor: T,
}

impl<T: Scalar> MixtureDist<T> {
    pub fn new(ev: EvModel<T>, reg: HetRegModel<T>, opts: MixedOptions<T>) -> Result<Self> {
        let mut lo = ev.quantile(opts.tail_prob)?;
        let hi = ev.quantile(T::one() - opts.tail_prob)?;
        if reg.family == Family::Power {
            // x^β is undefined at non-positive x; that part of the range
            // carries no mass for positive maxima.
            lo = lo.max(T::min_positive_value().sqrt());
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("integration range [{lo}, {hi}]")));
        }
        let sd_floor = opts.sd_floor_rel * ev.scale();
        Ok(Self { ev, reg, opts, lo, hi, sd_floor })
    }

    /// Integration range in `x`.
    pub fn domain(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    /// Conditional sd with the positivity floor applied.
    pub fn conditional_sd(&self, x: T) -> T {
        let sd = self.reg.sd_at(x);
        if sd > T::zero() {
            sd
        } else {
            self.sd_floor
        }
    }

    /// True when `f_σ` is non-positive somewhere in the integration range
    /// (checked on a uniform grid of 512 points plus the ends).
    pub fn sd_clamped(&self) -> bool {
        (0..=512).any(|i| {
            let x = self.lo + (self.hi - self.lo) * T::from_usize_lossy(i) / T::c(512.0);
            !(self.reg.sd_at(x) > T::zero())
        })
    }

    #[inline]
    fn standardized(&self, z: T, x: T) -> (T, T) {
        let sd = self.conditional_sd(x);
        ((z - x - self.reg.mean_at(x)) / sd, sd)
    }

    /// Breakpoints around the point where `z = x + μ(x)`; the integrand
    /// turns into a step (CDF) or spike (PDF) there when `σ` is small.
    fn breakpoints(&self, z: T) -> Vec<T> {
        let g = |x: T| z - x - self.reg.mean_at(x);
        let (ga, gb) = (g(self.lo), g(self.hi));
        if !(ga.is_finite() && gb.is_finite()) || ga.signum() == gb.signum() {
            return Vec::new();
        }
        let opts = BrentOptions { xtol: T::epsilon() * (self.hi - self.lo), ..BrentOptions::default() };
        match brent(g, self.lo, self.hi, &opts) {
            Ok(r) => {
                let s = self.conditional_sd(r.root);
                let mut pts = vec![r.root];
                for k in [1.0, 8.0] {
                    pts.push(r.root - T::c(k) * s);
                    pts.push(r.root + T::c(k) * s);
                }
                pts
            }
            Err(_) => Vec::new(),
        }
    }

    pub fn cdf(&self, z: T) -> Result<T> {
        if z == T::infinity() {
            return Ok(T::one());
        }
        if z == T::neg_infinity() {
            return Ok(T::zero());
        }
        let cuts = self.breakpoints(z);
        let integrand = |x: T| {
            let f = self.ev.pdf(x);
            if f == T::zero() {
                return T::zero();
            }
            f * std_normal_cdf(self.standardized(z, x).0)
        };
        let r = integrate(integrand, self.lo, self.hi, &cuts, &self.opts.quad)?;
        let atom = match self.ev.lower_atom() {
            Some((u, mass)) => mass * std_normal_cdf(self.standardized(z, u).0),
            None => T::zero(),
        };
        Ok((r.value + atom).max(T::zero()).min(T::one()))
    }

    pub fn pdf(&self, z: T) -> Result<T> {
        if !z.is_finite() {
            return Ok(T::zero());
        }
        let cuts = self.breakpoints(z);
        let integrand = |x: T| {
            let f = self.ev.pdf(x);
            if f == T::zero() {
                return T::zero();
            }
            let (s, sd) = self.standardized(z, x);
            f * std_normal_pdf(s) / sd
        };
        let r = integrate(integrand, self.lo, self.hi, &cuts, &self.opts.quad)?;
        let atom = match self.ev.lower_atom() {
            Some((u, mass)) => {
                let (s, sd) = self.standardized(z, u);
                mass * std_normal_pdf(s) / sd
            }
            None => T::zero(),
        };
        Ok((r.value + atom).max(T::zero()))
    }

    /// Solves `F_Z(z) = q`. The bracket starts at `x_q + μ(x_q) ± 10σ̄`
    /// around the EV quantile and is doubled until it straddles `q`.
    pub fn quantile(&self, q: T) -> Result<T> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::Domain(format!("probability {q}")));
        }
        let xq = self.ev.quantile(q)?.max(self.lo).min(self.hi);
        let center = xq + self.reg.mean_at(xq);
        let sigma_bar = [xq, self.lo, self.hi, xq + self.ev.scale(), xq - self.ev.scale()]
            .iter()
            .map(|&x| self.conditional_sd(x.max(self.lo).min(self.hi)))
            .fold(self.sd_floor, T::max)
            .max(self.ev.scale() * T::c(1e-3));
        let width = T::c(10.0) * sigma_bar;

        let g = |z: T| -> Result<T> { Ok(q - self.cdf(z)?) };
        let mut lo = center - width;
        let mut hi = center + width;
        let mut g_lo = g(lo)?;
        let mut step = width;
        let mut doublings = 0;
        while g_lo < T::zero() {
            step = step * T::c(2.0);
            lo = center - step;
            g_lo = g(lo)?;
            doublings += 1;
            if doublings > self.opts.max_doublings {
                return Err(Error::Bracket { doublings });
            }
        }
        let mut g_hi = g(hi)?;
        step = width;
        doublings = 0;
        while g_hi > T::zero() {
            step = step * T::c(2.0);
            hi = center + step;
            g_hi = g(hi)?;
            doublings += 1;
            if doublings > self.opts.max_doublings {
                return Err(Error::Bracket { doublings });
            }
        }

        let mut failure = None;
        let opts = BrentOptions { xtol: T::zero(), ftol: T::zero(), max_iter: 200 };
        let root = brent(
            |z| match g(z) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::nan()
                }
            },
            lo,
            hi,
            &opts,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let root = root?;
        if root.value.abs() > self.opts.root_residual_tol {
            return Err(Error::NotConverged {
                iterations: root.iterations,
                detail: format!("quantile residual {} above tolerance", root.value),
            });
        }
        Ok(root.root)
    }

    /// Parameter vector `(θ_X; β)`.
    pub fn params(&self) -> Vec<T> {
        let mut v = self.ev.params();
        v.extend_from_slice(&self.reg.beta);
        v
    }

    pub fn with_params(&self, gamma: &[T]) -> Result<Self> {
        let np = self.ev.params().len();
        if gamma.len() != np + 4 {
            return Err(Error::InvalidInput(format!("expected {} parameters, got {}", np + 4, gamma.len())));
        }
        let ev = self.ev.with_params(&gamma[..np])?;
        let reg = HetRegModel::new(self.reg.family, [gamma[np], gamma[np + 1], gamma[np + 2], gamma[np + 3]]);
        Self::new(ev, reg, self.opts)
    }

    /// `∂z_q/∂γ` by central differences over `[γ(1-ε), γ(1+ε)]`
    /// (denominator `2εγ`); a zero parameter gets the absolute step `ε`.
    pub fn quantile_gradient(&self, q: T) -> Result<Vec<T>> {
        let gamma = self.params();
        let eps = self.opts.gradient_eps;
        (0..gamma.len())
            .map(|j| {
                let h = if gamma[j] == T::zero() { eps } else { eps * gamma[j] };
                let mut up = gamma.clone();
                let mut dn = gamma.clone();
                up[j] = gamma[j] + h;
                dn[j] = gamma[j] - h;
                let z_up = self.with_params(&up)?.quantile(q)?;
                let z_dn = self.with_params(&dn)?.quantile(q)?;
                Ok((z_up - z_dn) / (h + h))
            })
            .collect()
    }
}

/// A fitted mixed model: both component fits with their covariances.
#[derive(Debug, Clone)]
pub struct MixedModel<T> {
    pub ev: EvFit<T>,
    pub reg: HetRegFit<T>,
    dist: MixtureDist<T>,
}

impl<T: Scalar> MixedModel<T> {
    pub fn new(ev: EvFit<T>, reg: HetRegFit<T>, opts: MixedOptions<T>) -> Result<Self> {
        let dist = MixtureDist::new(ev.model, reg.model, opts)?;
        if dist.sd_clamped() {
            log::warn!("conditional sd is non-positive inside the integration range; clamped to {}", dist.sd_floor);
        }
        Ok(Self { ev, reg, dist })
    }

    pub fn dist(&self) -> &MixtureDist<T> {
        &self.dist
    }

    /// Joint covariance of `(θ_X; β)`; the two fits are independent so the
    /// cross blocks are zero.
    pub fn joint_covariance(&self) -> Matrix<T> {
        Matrix::block_diag(&self.ev.fit.covariance, &self.reg.fit.covariance)
    }

    pub fn n_free_params(&self) -> usize {
        self.ev.fit.n_free() + self.reg.fit.n_free()
    }

    /// Size of the paired sample (the smaller, binding one).
    pub fn n_paired(&self) -> usize {
        self.reg.fit.n_obs
    }
}

pub fn mixed_cdf<T: Scalar>(z: T, m: &MixedModel<T>) -> Result<T> {
    m.dist.cdf(z)
}

pub fn mixed_pdf<T: Scalar>(z: T, m: &MixedModel<T>) -> Result<T> {
    m.dist.pdf(z)
}

pub fn mixed_quantile<T: Scalar>(q: T, m: &MixedModel<T>) -> Result<T> {
    m.dist.quantile(q)
}

pub fn quantile_gradient<T: Scalar>(q: T, m: &MixedModel<T>) -> Result<Vec<T>> {
    m.dist.quantile_gradient(q)
}

/// Quantile with a delta-method band: `var(z_q) = ∇ᵀ Σ ∇` with the
/// block-diagonal joint covariance and a Student-t multiplier on
/// `n_obs - n_p - 1` degrees of freedom.
pub fn quantile_bands<T: Scalar>(q: T, m: &MixedModel<T>, alpha: T, n_obs: usize) -> Result<Band<T>> {
    if !(m.ev.fit.covariance_valid && m.reg.fit.covariance_valid) {
        return Err(Error::InvalidCovariance("component fit without valid covariance".into()));
    }
    let estimate = m.dist.quantile(q)?;
    let grad = m.dist.quantile_gradient(q)?;
    let var = m.joint_covariance().quad_form(&grad);
    if var < T::zero() || !var.is_finite() {
        return Err(Error::InvalidCovariance(format!("quantile variance {var}")));
    }
    let used = m.n_free_params() + 1;
    if n_obs <= used {
        return Err(Error::InvalidInput(format!("non-positive degrees of freedom for {n_obs} observations")));
    }
    let t = student_t_quantile(T::one() - alpha / T::c(2.0), T::from_usize_lossy(n_obs - used))?;
    let sd = var.sqrt();
    Ok(Band { estimate, sd, lower: estimate - t * sd, upper: estimate + t * sd })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    /// Return period in years.
    pub period: T,
    /// Non-exceedance probability `1 - 1/T`.
    pub q: T,
    pub z: T,
    pub lo: T,
    pub hi: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPeriodCurve<T> {
    pub entries: Vec<CurvePoint<T>>,
}

fn probability_for<T: Scalar>(period: T) -> Result<T> {
    if !(period > T::one()) || !period.is_finite() {
        return Err(Error::InvalidInput(format!("return period must exceed one year, got {period}")));
    }
    Ok(T::one() - period.recip())
}

/// Mixed-model return levels with bands for each period in `periods`.
pub fn return_period_curve<T: Scalar>(m: &MixedModel<T>, periods: &[T], alpha: T, n_obs: usize) -> Result<ReturnPeriodCurve<T>> {
    let entries = periods
        .iter()
        .map(|&period| {
            let q = probability_for(period)?;
            let b = quantile_bands(q, m, alpha, n_obs)?;
            Ok(CurvePoint { period, q, z: b.estimate, lo: b.lower, hi: b.upper })
        })
        .collect::<Result<_>>()?;
    Ok(ReturnPeriodCurve { entries })
}

/// Return levels of a plain EV fit (reanalysis maxima, or a direct GEV on
/// the instrumental maxima).
pub fn ev_return_period_curve<T: Scalar>(ev: &EvFit<T>, periods: &[T], alpha: T) -> Result<ReturnPeriodCurve<T>> {
    let entries = periods
        .iter()
        .map(|&period| {
            let q = probability_for(period)?;
            let b = ev.quantile_band(q, alpha)?;
            Ok(CurvePoint { period, q, z: b.estimate, lo: b.lower, hi: b.upper })
        })
        .collect::<Result<_>>()?;
    Ok(ReturnPeriodCurve { entries })
}

/// The three curves compared in a return-period plot.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet<T> {
    /// EV fit on the reanalysis maxima `x`.
    pub reanalysis: ReturnPeriodCurve<T>,
    /// Mixed model for the instrumental maxima `z`.
    pub mixed: ReturnPeriodCurve<T>,
    /// Direct GEV fit on the instrumental maxima `z`.
    pub instrumental: ReturnPeriodCurve<T>,
}

pub fn comparison_curves<T: Scalar>(
    m: &MixedModel<T>,
    gev_z: &EvFit<T>,
    periods: &[T],
    alpha: T,
    n_obs: usize,
) -> Result<CurveSet<T>> {
    Ok(CurveSet {
        reanalysis: ev_return_period_curve(&m.ev, periods, alpha)?,
        mixed: return_period_curve(m, periods, alpha, n_obs)?,
        instrumental: ev_return_period_curve(gev_z, periods, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evd::{gev_cdf, gev_pdf, gev_quantile, GevParams, ParetoPoissonParams};

    fn degenerate(ev: GevParams<f64>) -> MixtureDist<f64> {
        let reg = HetRegModel::new(Family::Linear, [0.0, 0.0, 1e-10, 0.0]);
        MixtureDist::new(EvModel::Gev(ev), reg, MixedOptions::default()).unwrap()
    }

    fn case1() -> MixtureDist<f64> {
        MixtureDist::new(
            EvModel::Gev(GevParams::new(10.0, 0.5, -0.15)),
            HetRegModel::new(Family::Linear, [-0.5, 0.7, -0.3, 0.1]),
            MixedOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_mixture_reduces_to_ev() {
        for p in [GevParams::new(10.0, 0.5, -0.15), GevParams::new(5.1, -0.5, 0.0)] {
            let d = degenerate(p);
            for &u in &[0.05, 0.3, 0.5, 0.9, 0.99] {
                let z = gev_quantile(u, &p).unwrap();
                assert!((d.cdf(z).unwrap() - gev_cdf(z, &p)).abs() < 1e-6);
                let pdf = gev_pdf(z, &p);
                assert!((d.pdf(z).unwrap() - pdf).abs() < 1e-5 * pdf, "{u}");
                assert!((d.quantile(u).unwrap() - z).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cdf_limits() {
        let d = case1();
        assert_eq!(d.cdf(f64::NEG_INFINITY).unwrap(), 0.0);
        assert_eq!(d.cdf(f64::INFINITY).unwrap(), 1.0);
        assert!(d.cdf(-50.0).unwrap() < 1e-10);
        assert!(d.cdf(100.0).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn quantile_round_trip() {
        let d = case1();
        for &q in &[0.5, 0.9, 0.98, 0.99, 0.998] {
            let z = d.quantile(q).unwrap();
            assert!((d.cdf(z).unwrap() - q).abs() <= 1e-8);
        }
        assert!(d.quantile(1.0).is_err());
    }

    #[test]
    fn pareto_poisson_atom_is_included() {
        // Small rate: a year without exceedances has visible probability.
        let ev = EvModel::ParetoPoisson(ParetoPoissonParams::new(0.7, 0.0, 0.1, 3.0).unwrap());
        let reg = HetRegModel::new(Family::Linear, [0.0, 0.0, 1e-10, 0.0]);
        let d = MixtureDist::new(ev, reg, MixedOptions::default()).unwrap();
        assert!((d.cdf(3.0 + 1e-6).unwrap() - (-0.7_f64).exp()).abs() < 1e-5);
        assert!((d.cdf(4.0).unwrap() - ev.cdf(4.0)).abs() < 1e-6);
    }

    #[test]
    fn clamped_sd_is_detected() {
        let ev = EvModel::Gev(GevParams::new(2.0, 0.0, 0.0));
        let reg = HetRegModel::new(Family::Linear, [0.0, 0.0, -0.5, 0.3]);
        let d = MixtureDist::new(ev, reg, MixedOptions::default()).unwrap();
        assert!(d.sd_clamped());
        assert!(d.conditional_sd(0.0) > 0.0);
        assert!(d.cdf(3.0_f64).unwrap().is_finite());
    }

    #[test]
    fn gradient_location_equivariance() {
        let d = degenerate(GevParams::new(5.0, 0.0, 0.0));
        let g = d.quantile_gradient(0.98).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-4, "{g:?}");
    }
}
