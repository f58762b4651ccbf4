//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Scalar> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::c(T::QUAD_ABS_TOL),
            rel_tol: T::zero(),
            max_intervals: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: T,
    pub intervals: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    err: T,
}

/// One 15-point Kronrod evaluation with the embedded 7-point Gauss error
/// estimate, scaled as in QUADPACK.
fn gk15<T: Scalar, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T, T) {
    let half = T::c(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut res_g = fc * T::c(WG[3]);
    let mut res_k = fc * T::c(WGK[7]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half_len * T::c(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::c(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::c(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::c(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + T::c(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half_len.abs();
    let value = res_k * half_len;
    res_abs = res_abs * scale;
    res_asc = res_asc * scale;
    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && err != T::zero() {
        err = res_asc * T::one().min((T::c(200.0) * err / res_asc).powf(T::c(1.5)));
    }
    let eps50 = T::c(50.0) * T::epsilon();
    if res_abs > T::min_positive_value() / eps50 {
        err = err.max(eps50 * res_abs);
    }
    (value, err, res_abs)
}

/// Integrates `f` over `[a, b]`, optionally pre-split at interior
/// `breakpoints` (points outside `(a, b)` are ignored).
pub fn integrate<T, F>(mut f: F, a: T, b: T, breakpoints: &[T], opts: &QuadOptions<T>) -> Result<QuadResult<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), abs_err: T::zero(), intervals: 0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };

    let mut cuts: Vec<T> = breakpoints.iter().copied().filter(|&p| p > lo && p < hi).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut segments = Vec::new();
    let mut evaluations = 0;
    let mut res_abs_total = T::zero();
    for w in edges.windows(2) {
        let (value, err, res_abs) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        res_abs_total = res_abs_total + res_abs;
        segments.push(Segment { a: w[0], b: w[1], value, err });
    }

    loop {
        let total: T = segments.iter().map(|s| s.value).sum();
        let err: T = segments.iter().map(|s| s.err).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadResult { value: sign * total, abs_err: err, intervals: segments.len(), evaluations });
        }
        // Nothing left that could still be refined below round-off.
        let roundoff = T::c(50.0) * T::epsilon() * res_abs_total;
        if err <= roundoff {
            return Ok(QuadResult { value: sign * total, abs_err: err, intervals: segments.len(), evaluations });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Quadrature { requested: target.as_f64(), achieved: err.as_f64() });
        }
        let (idx, worst) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).expect("finite error estimates"))
            .map(|(i, s)| (i, *s))
            .expect("at least one segment");
        let mid = T::c(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Quadrature { requested: target.as_f64(), achieved: err.as_f64() });
        }
        let (v1, e1, _) = gk15(&mut f, worst.a, mid);
        let (v2, e2, _) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        segments[idx] = Segment { a: worst.a, b: mid, value: v1, err: e1 };
        segments.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // GK15 integrates polynomials up to degree 22 exactly.
        let r = integrate(|x: f64| x.powi(9) - 3.0 * x * x, -1.0, 2.0, &[], &QuadOptions::default()).unwrap();
        let exact = (2.0_f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-12);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &[], &QuadOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| x.exp();
        let fwd = integrate(f, 0.0, 1.0, &[], &QuadOptions::default()).unwrap().value;
        let back = integrate(f, 1.0, 0.0, &[], &QuadOptions::default()).unwrap().value;
        assert!((fwd + back).abs() < 1e-15);
        assert!((fwd - (1.0_f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn breakpoints_resolve_a_narrow_spike() {
        let sd = 1e-7_f64;
        let f = |x: f64| (-0.5 * ((x - 0.3) / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        let cuts = [0.3 - 10.0 * sd, 0.3, 0.3 + 10.0 * sd];
        let r = integrate(f, 0.0, 1.0, &cuts, &QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 0.0, max_intervals: 3 };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, &[], &opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
