//! Bracketing root finder combining bisection, secant and inverse
//! quadratic interpolation (zeroin).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct BrentOptions<T> {
    /// Absolute tolerance on the root location; a relative term of
    /// `4·eps·|x|` is always added.
    pub xtol: T,
    /// Stop as soon as `|f(x)| <= ftol`.
    pub ftol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for BrentOptions<T> {
    fn default() -> Self {
        Self {
            xtol: T::epsilon(),
            ftol: T::zero(),
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Root<T> {
    pub root: T,
    pub value: T,
    pub iterations: usize,
}

/// Finds a zero of `f` in `[a, b]`; `f(a)` and `f(b)` must not share a sign.
pub fn brent<T, F>(mut f: F, a: T, b: T, opts: &BrentOptions<T>) -> Result<Root<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Domain("bracket endpoint evaluates to NaN".into()));
    }
    if fa == T::zero() {
        return Ok(Root { root: a, value: fa, iterations: 0 });
    }
    if fb == T::zero() {
        return Ok(Root { root: b, value: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { doublings: 0 });
    }

    let two = T::c(2.0);
    let half = T::c(0.5);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + half * opts.xtol;
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() || fb.abs() <= opts.ftol {
            return Ok(Root { root: b, value: fb, iterations: iter });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = two * m * s;
                q = T::one() - s;
            } else {
                // inverse quadratic interpolation
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::c(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol { b + d } else if m > T::zero() { b + tol } else { b - tol };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Domain(format!("function is NaN at {b}")));
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        detail: "root bracket did not shrink to tolerance".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = brent(|x: f64| x * x - 2.0, 0.0, 2.0, &BrentOptions::default()).unwrap();
        assert!((r.root - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(r.iterations < 20);
    }

    #[test]
    fn rejects_unbracketed_interval() {
        let r = brent(|x: f64| x * x + 1.0, -1.0, 1.0, &BrentOptions::default());
        assert!(matches!(r, Err(Error::Bracket { .. })));
    }

    #[test]
    fn handles_endpoint_root_and_steep_function() {
        let r = brent(|x: f64| x, 0.0, 1.0, &BrentOptions::default()).unwrap();
        assert_eq!(r.root, 0.0);
        let r = brent(|x: f64| (x - 0.3).powi(3) * 1e6, -5.0, 7.0, &BrentOptions::default()).unwrap();
        assert!((r.root - 0.3).abs() < 1e-5);
    }

    #[test]
    fn works_in_single_precision() {
        let r = brent(|x: f32| x.cos() - x, 0.0, 1.0, &BrentOptions::default()).unwrap();
        assert!((r.root - 0.739_085_1).abs() < 1e-6);
    }
}
