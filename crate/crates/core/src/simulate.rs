//! Synthetic annual maxima for the two benchmark cases and a brute-force
//! sampler of the mixed distribution.
//!
//! All randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`, a
//! portable counter-based generator, so a seed reproduces the same draws on
//! every platform. Uniforms use the open interval `(0, 1)` and normals are
//! drawn by inversion (`Φ⁻¹(U)`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evd::{EvModel, GevParams, ParetoPoissonParams};
use crate::hetreg::{Family, HetRegModel, PairedMaxima};
use crate::mixed::MixtureDist;
use crate::scalar::Scalar;
use crate::special::std_normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// GEV annual maxima with a linear heteroscedastic difference model.
    GevCase1,
    /// Pareto-Poisson exceedances above a threshold.
    ParetoPoissonCase2,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<T> {
    pub case: Case,
    pub ev: EvModel<T>,
    pub reg: HetRegModel<T>,
    /// Length of the reanalysis record.
    pub years: usize,
    /// Instrumental record length; it covers the final years of the
    /// reanalysis record. `None` pairs every year.
    pub paired_years: Option<usize>,
    pub seed: u64,
    pub first_year: i32,
    /// Pareto-Poisson only: draw annual exceedance counts from Poisson(λ)
    /// instead of the fixed `round(λ)` per year.
    pub poisson_counts: bool,
}

impl<T: Scalar> SimulationConfig<T> {
    /// GEV(10, e^0.5, -0.15) maxima, `β = (-0.5, 0.7, -0.3, 0.1)`, 1000 years.
    pub fn case1(seed: u64) -> Self {
        Self {
            case: Case::GevCase1,
            ev: EvModel::Gev(GevParams::new(T::c(10.0), T::c(0.5), T::c(-0.15))),
            reg: HetRegModel::new(Family::Linear, [T::c(-0.5), T::c(0.7), T::c(-0.3), T::c(0.1)]),
            years: 1000,
            paired_years: None,
            seed,
            first_year: 1001,
            poisson_counts: false,
        }
    }

    /// 25 exceedances per year of GPD(e^-0.13, -0.05) above 2.5,
    /// `β = (0.16, 0.04, 0.3, 0.06)`, 1000 years.
    pub fn case2(seed: u64) -> Self {
        let pp = ParetoPoissonParams::new(T::c(25.0), T::c(-0.13), T::c(-0.05), T::c(2.5))
            .expect("valid default parameters");
        Self {
            case: Case::ParetoPoissonCase2,
            ev: EvModel::ParetoPoisson(pp),
            reg: HetRegModel::new(Family::Linear, [T::c(0.16), T::c(0.04), T::c(0.3), T::c(0.06)]),
            years: 1000,
            paired_years: None,
            seed,
            first_year: 1001,
            poisson_counts: false,
        }
    }

    pub fn custom(ev: EvModel<T>, reg: HetRegModel<T>, years: usize, seed: u64) -> Self {
        Self { case: Case::Custom, ev, reg, years, paired_years: None, seed, first_year: 1001, poisson_counts: false }
    }

    fn validate(&self) -> Result<()> {
        if self.years == 0 {
            return Err(Error::InvalidInput("years must be at least 1".into()));
        }
        if let Some(k) = self.paired_years {
            if k == 0 || k > self.years {
                return Err(Error::InvalidInput(format!("paired years {k} outside 1..={}", self.years)));
            }
        }
        match (self.case, self.ev) {
            (Case::GevCase1, EvModel::ParetoPoisson(_)) | (Case::ParetoPoissonCase2, EvModel::Gev(_)) => {
                Err(Error::InvalidInput("case does not match the EV family".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData<T> {
    /// Years of the reanalysis record.
    pub years: Vec<i32>,
    pub x_max: Vec<T>,
    /// Years covered by the instrumental record (a suffix of `years`).
    pub z_years: Vec<i32>,
    /// `z - x` on the instrumental years.
    pub y: Vec<T>,
    pub z_max: Vec<T>,
    /// Pareto-Poisson only: all exceedances in time order and the count
    /// falling in each year.
    pub exceedances: Vec<T>,
    pub counts_per_year: Vec<usize>,
}

impl<T: Scalar> SimulatedData<T> {
    pub fn paired(&self) -> Result<PairedMaxima<T>> {
        let offset = self.years.len() - self.z_years.len();
        PairedMaxima::new(self.z_years.clone(), self.x_max[offset..].to_vec(), self.y.clone())
    }
}

/// Uniform on the open interval `(0, 1)` with 53 random bits.
pub fn open_uniform(rng: &mut impl Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

pub fn std_normal(rng: &mut impl Rng) -> f64 {
    std_normal_quantile(open_uniform(rng)).expect("open uniform")
}

/// Poisson count by sequential inversion of the CDF.
fn poisson(rng: &mut impl Rng, lambda: f64) -> usize {
    let u = open_uniform(rng);
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let mut k = 0usize;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

fn gpd_excess<T: Scalar>(u: f64, psi: T, xi: T) -> T {
    let t = T::c(-(-u).ln_1p());
    if xi.abs() < T::c(crate::evd::XI_TOL) {
        psi * t
    } else {
        psi * ((xi * t).exp_m1() / xi)
    }
}

fn add_differences<T: Scalar>(cfg: &SimulationConfig<T>, rng: &mut ChaCha8Rng, years: &[i32], x_max: &[T]) -> (Vec<i32>, Vec<T>, Vec<T>) {
    let k = cfg.paired_years.unwrap_or(cfg.years);
    let offset = cfg.years - k;
    let mut y = Vec::with_capacity(k);
    let mut z = Vec::with_capacity(k);
    for &x in &x_max[offset..] {
        let e = T::c(std_normal(rng));
        let v = cfg.reg.mean_at(x) + cfg.reg.sd_at(x).max(T::zero()) * e;
        y.push(v);
        z.push(x + v);
    }
    (years[offset..].to_vec(), y, z)
}

/// Annual maxima by GEV inversion, then `y | x ~ N(f_μ(x), f_σ(x)²)` on the
/// paired years. All maxima are drawn before any difference.
pub fn simulate_case1<T: Scalar>(cfg: &SimulationConfig<T>) -> Result<SimulatedData<T>> {
    cfg.validate()?;
    let EvModel::Gev(p) = cfg.ev else {
        return Err(Error::InvalidInput("GEV parameters required".into()));
    };
    let model = EvModel::Gev(p);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let years: Vec<i32> = (0..cfg.years as i32).map(|i| cfg.first_year + i).collect();
    let x_max = (0..cfg.years)
        .map(|_| model.quantile(T::c(open_uniform(&mut rng))))
        .collect::<Result<Vec<T>>>()?;
    let (z_years, y, z_max) = add_differences(cfg, &mut rng, &years, &x_max);
    Ok(SimulatedData { years, x_max, z_years, y, z_max, exceedances: Vec::new(), counts_per_year: Vec::new() })
}

/// GPD exceedances above the threshold, `round(λ)` per year (or Poisson
/// counts), annual maxima from them, then differences as in Case 1. A year
/// without exceedances has its maximum at the threshold.
pub fn simulate_case2<T: Scalar>(cfg: &SimulationConfig<T>) -> Result<SimulatedData<T>> {
    cfg.validate()?;
    let EvModel::ParetoPoisson(p) = cfg.ev else {
        return Err(Error::InvalidInput("Pareto-Poisson parameters required".into()));
    };
    let lambda = p.lambda.as_f64();
    if !cfg.poisson_counts && (lambda.round() - lambda).abs() > 1e-9 {
        log::warn!("fixed-count sampling rounds λ = {lambda} to {}", lambda.round());
    }
    let psi = p.psi();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let years: Vec<i32> = (0..cfg.years as i32).map(|i| cfg.first_year + i).collect();
    let mut exceedances = Vec::new();
    let mut counts = Vec::with_capacity(cfg.years);
    let mut x_max = Vec::with_capacity(cfg.years);
    for _ in 0..cfg.years {
        let n = if cfg.poisson_counts { poisson(&mut rng, lambda) } else { lambda.round() as usize };
        let mut m = p.u;
        for _ in 0..n {
            let v = p.u + gpd_excess(open_uniform(&mut rng), psi, p.xi);
            m = m.max(v);
            exceedances.push(v);
        }
        counts.push(n);
        x_max.push(m);
    }
    let (z_years, y, z_max) = add_differences(cfg, &mut rng, &years, &x_max);
    Ok(SimulatedData { years, x_max, z_years, y, z_max, exceedances, counts_per_year: counts })
}

pub fn simulate<T: Scalar>(cfg: &SimulationConfig<T>) -> Result<SimulatedData<T>> {
    match cfg.ev {
        EvModel::Gev(_) => simulate_case1(cfg),
        EvModel::ParetoPoisson(_) => simulate_case2(cfg),
    }
}

/// `n` draws of `X + Y` with `X` by EV inversion and `Y | X` normal.
pub fn sample_mixed<T: Scalar>(dist: &MixtureDist<T>, n: usize, seed: u64) -> Result<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = dist.ev.quantile(T::c(open_uniform(&mut rng)))?;
            let e = T::c(std_normal(&mut rng));
            Ok(x + dist.reg.mean_at(x) + dist.conditional_sd(x) * e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{ks_test_std_normal, pit_transform};
    use crate::mixed::MixedOptions;
    use crate::quadrature::{integrate, QuadOptions};
    use crate::special::gamma;

    #[test]
    fn deterministic() {
        let a = simulate_case1(&SimulationConfig::<f64>::case1(7)).unwrap();
        let b = simulate_case1(&SimulationConfig::<f64>::case1(7)).unwrap();
        assert_eq!(a, b);
        let c = simulate_case1(&SimulationConfig::<f64>::case1(8)).unwrap();
        assert_ne!(a.x_max, c.x_max);
        for i in 0..a.y.len() {
            assert_eq!(a.z_max[i], a.x_max[i] + a.y[i]);
        }
    }

    #[test]
    fn case1_moments() {
        let d = simulate_case1(&SimulationConfig::<f64>::case1(1)).unwrap();
        let (mu, psi, xi) = (10.0, 0.5f64.exp(), -0.15);
        let mean = mu + psi * (gamma(1.0 - xi) - 1.0) / xi;
        let var = psi * psi * (gamma(1.0 - 2.0 * xi) - gamma(1.0 - xi).powi(2)) / (xi * xi);
        let n = d.x_max.len() as f64;
        let m = d.x_max.iter().sum::<f64>() / n;
        assert!((m - mean).abs() < 3.0 * (var / n).sqrt());

        // Conditional sd near x = 10 is -0.3 + 0.1·10 = 0.7.
        let big = simulate_case1(&SimulationConfig { years: 20_000, ..SimulationConfig::<f64>::case1(2) }).unwrap();
        let bin: Vec<f64> = big
            .x_max
            .iter()
            .zip(&big.y)
            .filter(|(x, _)| (**x - 10.0).abs() < 0.25)
            .map(|(x, y)| y - (-0.5 + 0.7 * x))
            .collect();
        let sd = (bin.iter().map(|r| r * r).sum::<f64>() / bin.len() as f64).sqrt();
        assert!((sd - 0.7).abs() < 0.7 * 0.15, "{sd}");
    }

    #[test]
    fn case2_counts_and_cdf() {
        let d = simulate_case2(&SimulationConfig::<f64>::case2(3)).unwrap();
        assert_eq!(d.exceedances.len(), 25_000);
        assert!(d.exceedances.iter().all(|&v| v > 2.5));
        assert!(d.counts_per_year.iter().all(|&c| c == 25));
        let model = SimulationConfig::<f64>::case2(3).ev;
        let mut s = d.x_max.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len() as f64;
        let sup = s
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = model.cdf(x);
                ((i + 1) as f64 / n - f).abs().max((f - i as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(sup <= 0.03, "{sup}");
    }

    #[test]
    fn poisson_counts_option() {
        let cfg = SimulationConfig { poisson_counts: true, years: 2000, ..SimulationConfig::<f64>::case2(4) };
        let d = simulate_case2(&cfg).unwrap();
        let mean = d.counts_per_year.iter().sum::<usize>() as f64 / 2000.0;
        assert!((mean - 25.0).abs() < 3.0 * (25.0f64 / 2000.0).sqrt());
        assert!(d.counts_per_year.iter().any(|&c| c != 25));
    }

    #[test]
    fn paired_suffix() {
        let cfg = SimulationConfig { years: 63, paired_years: Some(24), ..SimulationConfig::<f64>::case1(5) };
        let d = simulate_case1(&cfg).unwrap();
        assert_eq!(d.x_max.len(), 63);
        assert_eq!(d.z_max.len(), 24);
        assert_eq!(d.z_years[0], d.years[39]);
        let p = d.paired().unwrap();
        assert_eq!(p.x[0], d.x_max[39]);
        assert!(simulate_case1(&SimulationConfig { paired_years: Some(64), ..cfg }).is_err());
    }

    #[test]
    fn gev_sampler_passes_ks() {
        let cfg = SimulationConfig { years: 100_000, ..SimulationConfig::<f64>::case1(0) };
        let mut passes = 0;
        for seed in 0..20 {
            let d = simulate_case1(&SimulationConfig { seed, ..cfg.clone() }).unwrap();
            let t = pit_transform(&d.x_max, |x| cfg.ev.cdf(x));
            if !ks_test_std_normal(&t, 0.01).unwrap().reject {
                passes += 1;
            }
        }
        assert!(passes >= 19);
    }

    #[test]
    fn sample_mixed_properties() {
        let ev = EvModel::Gev(GevParams::new(10.0, 0.5, -0.15));
        let degenerate = MixtureDist::new(ev, HetRegModel::new(Family::Linear, [0.0, 0.0, 1e-300, 0.0]), MixedOptions::default()).unwrap();
        let s = sample_mixed(&degenerate, 100, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for v in s {
            let x = ev.quantile(open_uniform(&mut rng)).unwrap();
            let _ = std_normal(&mut rng);
            assert!((v - x).abs() < 1e-12);
        }

        let dist = MixtureDist::new(ev, HetRegModel::new(Family::Linear, [-0.5, 0.7, -0.3, 0.1]), MixedOptions::default()).unwrap();
        let s = sample_mixed(&dist, 100_000, 10).unwrap();
        assert_eq!(s, sample_mixed(&dist, 100_000, 10).unwrap());
        let n = s.len() as f64;
        let m = s.iter().sum::<f64>() / n;
        let sd = (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        let quad = QuadOptions { abs_tol: 1e-9, ..QuadOptions::default() };
        let exact = integrate(|z| z * dist.pdf(z).unwrap(), -20.0, 60.0, &[], &quad).unwrap().value;
        assert!((m - exact).abs() < 3.0 * sd / n.sqrt(), "{m} {exact}");
    }
}
