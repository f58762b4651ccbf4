//! Power and size of the goodness-of-fit diagnostics.

use mev_core::diagnostics::{diagnose_ev_fit, pit_transform};
use mev_core::evd::{EvModel, GevParams};
use mev_core::fitting::{fit_gev, fit_gumbel, EvFit, FitOptions};
use mev_core::hetreg::{Family, HetRegModel};
use mev_core::simulate::{simulate, simulate_case1, SimulationConfig};

fn gev_sample(p: GevParams<f64>, n: usize, seed: u64) -> Vec<f64> {
    let cfg = SimulationConfig::custom(EvModel::Gev(p), HetRegModel::new(Family::Linear, [0.0, 0.0, 1.0, 0.0]), n, seed);
    simulate(&cfg).unwrap().x_max
}

#[test]
fn correct_model_accepted() {
    let seeds = 40;
    let mut accepted = 0;
    for seed in 0..seeds {
        let d = simulate_case1(&SimulationConfig::<f64>::case1(seed)).unwrap();
        let ev = EvFit::from_gev(fit_gev(&d.x_max, &FitOptions::default()).unwrap());
        let r = diagnose_ev_fit(&d.x_max, &ev.model, 0.05).unwrap();
        assert!(r.parameters_estimated);
        accepted += (!r.ks.reject) as usize;
    }
    assert!(accepted as f64 >= 0.9 * seeds as f64, "{accepted}/{seeds}");
}

#[test]
fn gumbel_rejected_for_bounded_tail() {
    let seeds = 20;
    let mut rejected = 0;
    for seed in 0..seeds {
        let x = gev_sample(GevParams::new(10.0, 0.0, -0.4), 2000, seed);
        let ev = EvFit::from_gev(fit_gumbel(&x, &FitOptions::default()).unwrap());
        rejected += diagnose_ev_fit(&x, &ev.model, 0.05).unwrap().ks.reject as usize;
    }
    assert!(rejected as f64 >= 0.9 * seeds as f64, "{rejected}/{seeds}");
}

#[test]
fn qq_slope_near_one() {
    let p = GevParams::new(10.0, 0.5, -0.15);
    let x = gev_sample(p, 1000, 11);
    let r = diagnose_ev_fit(&x, &EvModel::Gev(p), 0.05).unwrap();
    let (mx, my) = r.plot.iter().fold((0.0, 0.0), |(a, b), pt| (a + pt.model_quantile, b + pt.observed));
    let n = r.plot.len() as f64;
    let (mx, my) = (mx / n, my / n);
    let (sxy, sxx) = r.plot.iter().fold((0.0, 0.0), |(a, b), pt| {
        let dx = pt.model_quantile - mx;
        (a + dx * (pt.observed - my), b + dx * dx)
    });
    let slope = sxy / sxx;
    assert!((slope - 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn pit_of_true_model_is_centred() {
    let p = GevParams::new(10.0, 0.5, -0.15);
    let x = gev_sample(p, 4000, 12);
    let m = EvModel::Gev(p);
    let z = pit_transform(&x, |v| m.cdf(v));
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    assert!(mean.abs() < 3.0 / (z.len() as f64).sqrt(), "{mean}");
}
