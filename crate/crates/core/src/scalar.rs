use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the numerical kernels are written against.
///
/// Besides the usual arithmetic, every implementor carries the default
/// step sizes and tolerances that make sense at its precision. The `f64`
/// values are the reference ones; `f32` gets looser defaults scaled to its
/// machine epsilon.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative step used for central-difference Hessians.
    const HESSIAN_STEP: f64;
    /// Relative step used for central-difference gradients.
    const GRADIENT_STEP: f64;
    /// Relative gradient norm below which an optimum counts as converged.
    const GRADIENT_TOL: f64;
    /// Absolute tolerance of the adaptive quadrature.
    const QUAD_ABS_TOL: f64;
    /// Residual target |F(z) - q| for quantile root finding.
    const ROOT_RESIDUAL_TOL: f64;

    /// Converts an `f64` literal; every literal used in this crate is
    /// representable (possibly rounded) in any implementor.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to scalar")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const HESSIAN_STEP: f64 = 1e-5;
    const GRADIENT_STEP: f64 = 1e-7;
    const GRADIENT_TOL: f64 = 1e-6;
    const QUAD_ABS_TOL: f64 = 1e-10;
    const ROOT_RESIDUAL_TOL: f64 = 1e-8;
}

impl Scalar for f32 {
    const HESSIAN_STEP: f64 = 1e-2;
    const GRADIENT_STEP: f64 = 1e-3;
    const GRADIENT_TOL: f64 = 1e-3;
    const QUAD_ABS_TOL: f64 = 1e-5;
    const ROOT_RESIDUAL_TOL: f64 = 1e-4;
}
