//! Derivative-free simplex search followed by a Newton polish on
//! finite-difference derivatives. Used to maximize log-likelihoods.

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions<T> {
    pub max_iter: usize,
    /// Spread of function values across the simplex that ends the search.
    pub ftol: T,
    /// Simplex diameter (relative to the point scale) that ends the search.
    pub xtol: T,
}

impl<T: Scalar> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self { max_iter: 5000, ftol: T::epsilon() * T::c(100.0), xtol: T::epsilon().sqrt() }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub fx: T,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of edge
/// lengths `step`. Non-finite values are treated as `+∞`.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], step: &[T], opts: &NelderMeadOptions<T>) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let half = T::c(0.5);
    let two = T::c(2.0);
    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] = v[j] + step[j];
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(|v| sanitize(f(v))).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("no NaN after sanitize"));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        let spread = (worst - best).abs();
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(&a, &b)| (a - b).abs() / b.abs().max(T::one())))
            .fold(T::zero(), T::max);
        if best.is_finite() && spread <= opts.ftol * (best.abs() + opts.ftol) && diameter <= opts.xtol {
            converged = true;
            break;
        }

        let mut centroid = vec![T::zero(); n];
        for v in &simplex[..n] {
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c = *c + x;
            }
        }
        let nf = T::from_usize_lossy(n);
        for c in &mut centroid {
            *c = *c / nf;
        }
        let along = |t: T| -> Vec<T> {
            centroid.iter().zip(&simplex[n]).map(|(&c, &w)| c + t * (w - c)).collect()
        };

        let xr = along(-T::one());
        let fr = sanitize(f(&xr));
        if fr < values[0] {
            let xe = along(-two);
            let fe = sanitize(f(&xe));
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-half);
            let fc = sanitize(f(&xc));
            (xc, fc)
        } else {
            let xc = along(half);
            let fc = sanitize(f(&xc));
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best_v = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = simplex[i].iter().zip(&best_v).map(|(&x, &b)| b + half * (x - b)).collect();
            values[i] = sanitize(f(&simplex[i]));
        }
    }
    let (i_best, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("no NaN after sanitize"))
        .expect("nonempty simplex");
    Minimum { x: simplex[i_best].clone(), fx: values[i_best], iterations, converged }
}

fn step_for<T: Scalar>(x: T, rel: T) -> T {
    rel * x.abs().max(T::one())
}

/// Central-difference gradient with steps `rel·max(|xⱼ|, 1)`.
pub fn numerical_gradient<T, F>(mut f: F, x: &[T], rel: T) -> Vec<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            let h = step_for(x[j], rel);
            probe[j] = x[j] + h;
            let up = f(&probe);
            probe[j] = x[j] - h;
            let dn = f(&probe);
            probe[j] = x[j];
            (up - dn) / (h + h)
        })
        .collect()
}

/// Central-difference Hessian with steps `rel·max(|xⱼ|, 1)`, symmetrized.
pub fn numerical_hessian<T, F>(mut f: F, x: &[T], rel: T) -> Matrix<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x.len();
    let f0 = f(x);
    let h: Vec<T> = x.iter().map(|&v| step_for(v, rel)).collect();
    let mut hess = Matrix::zeros(n, n);
    let mut p = x.to_vec();
    for j in 0..n {
        p[j] = x[j] + h[j];
        let up = f(&p);
        p[j] = x[j] - h[j];
        let dn = f(&p);
        p[j] = x[j];
        hess[(j, j)] = (up - f0 - f0 + dn) / (h[j] * h[j]);
        for k in 0..j {
            let mut eval = |sj: T, sk: T| {
                p[j] = x[j] + sj * h[j];
                p[k] = x[k] + sk * h[k];
                let v = f(&p);
                p[j] = x[j];
                p[k] = x[k];
                v
            };
            let one = T::one();
            let pp = eval(one, one);
            let pm = eval(one, -one);
            let mp = eval(-one, one);
            let mm = eval(-one, -one);
            let v = (pp - pm - mp + mm) / (T::c(4.0) * h[j] * h[k]);
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    hess.symmetrize();
    hess
}

/// Largest component of the gradient scaled to relative units:
/// `max |gⱼ|·max(|xⱼ|,1) / max(|ℓ|,1)`.
pub fn scaled_gradient_norm<T: Scalar>(grad: &[T], x: &[T], value: T) -> T {
    let denom = value.abs().max(T::one());
    grad.iter()
        .zip(x)
        .map(|(&g, &v)| (g * v.abs().max(T::one())).abs() / denom)
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone)]
pub struct MaximizeOptions<T> {
    pub simplex: NelderMeadOptions<T>,
    pub max_restarts: usize,
    pub newton_iter: usize,
    pub gradient_tol: T,
    pub gradient_step: T,
    pub hessian_step: T,
}

impl<T: Scalar> Default for MaximizeOptions<T> {
    fn default() -> Self {
        Self {
            simplex: NelderMeadOptions::default(),
            max_restarts: 4,
            newton_iter: 50,
            gradient_tol: T::c(T::GRADIENT_TOL),
            gradient_step: T::c(T::GRADIENT_STEP),
            hessian_step: T::c(T::HESSIAN_STEP),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Maximum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    /// Gradient below tolerance and Hessian negative definite.
    pub converged: bool,
    pub gradient_norm: T,
    /// Hessian of the objective at `x` (computed with `hessian_step`).
    pub hessian: Matrix<T>,
}

/// Maximizes `f` starting from `x0`. Returns the best point found even when
/// the convergence test fails.
pub fn maximize<T, F>(mut f: F, x0: &[T], step: &[T], opts: &MaximizeOptions<T>) -> Maximum<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let mut neg = |x: &[T]| -f(x);
    let mut best = nelder_mead(&mut neg, x0, step, &opts.simplex);
    let mut iterations = best.iterations;
    // Restart from the optimum with a fresh simplex; guards against collapse.
    for _ in 0..opts.max_restarts {
        let s: Vec<T> = best.x.iter().zip(step).map(|(&x, &st)| st.min(T::c(0.1) * x.abs().max(st))).collect();
        let again = nelder_mead(&mut neg, &best.x, &s, &opts.simplex);
        iterations += again.iterations;
        let improved = again.fx < best.fx - opts.simplex.ftol * (best.fx.abs() + T::one());
        if again.fx <= best.fx {
            best = again;
        }
        if !improved {
            break;
        }
    }

    let mut x = best.x;
    let mut value = -best.fx;
    let mut pos = |x: &[T]| -neg(x);
    let mut grad = numerical_gradient(&mut pos, &x, opts.gradient_step);
    let mut gnorm = scaled_gradient_norm(&grad, &x, value);
    let mut hess = numerical_hessian(&mut pos, &x, opts.hessian_step);
    // Keep polishing below the convergence tolerance so estimates are
    // accurate to the finite-difference noise floor.
    let polish_target = opts.gradient_tol * T::c(1e-3);
    for _ in 0..opts.newton_iter {
        if !value.is_finite() || gnorm <= polish_target {
            break;
        }
        iterations += 1;
        let neg_h = hess.scale(-T::one());
        let direction = if neg_h.is_positive_definite() {
            neg_h.solve(&grad)
        } else {
            None
        };
        let Some(direction) = direction else { break };
        // Near the optimum the objective stops changing beyond roundoff;
        // such steps are kept when they still shrink the gradient.
        let noise = T::c(1e3) * T::epsilon() * value.abs().max(T::one());
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<T> = x.iter().zip(&direction).map(|(&a, &d)| a + t * d).collect();
            let v = pos(&trial);
            if v.is_finite() && v >= value - noise {
                let g = numerical_gradient(&mut pos, &trial, opts.gradient_step);
                let n = scaled_gradient_norm(&g, &trial, v);
                if v >= value || n < gnorm {
                    x = trial;
                    value = v;
                    grad = g;
                    gnorm = n;
                    accepted = true;
                    break;
                }
            }
            t = t * T::c(0.5);
        }
        if !accepted {
            break;
        }
        hess = numerical_hessian(&mut pos, &x, opts.hessian_step);
    }
    let converged = value.is_finite() && gnorm <= opts.gradient_tol && hess.scale(-T::one()).is_positive_definite();
    Maximum { x, value, iterations, converged, gradient_norm: gnorm, hessian: hess }
}
