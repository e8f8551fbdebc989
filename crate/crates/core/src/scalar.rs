//! Scalar abstraction. Every numeric routine in the crate is written against
//! [`Real`], so the same code runs in `f64` (the default) and `f32`.

use nalgebra::{Complex, DMatrix, Dyn, Matrix2, OMatrix, U2};
use num_traits::ToPrimitive;

/// Real scalar usable by the vessel machinery.
///
/// `RealField` brings the transcendental functions and `FromPrimitive`;
/// `tol` maps a requested (double precision) tolerance onto one this
/// precision can actually honour.
pub trait Real: nalgebra::RealField + Copy + ToPrimitive + std::fmt::LowerExp {
    fn tol(requested: f64) -> Self;
    fn nan() -> Self;
    fn is_nan(self) -> bool;
}

impl Real for f64 {
    #[inline]
    fn tol(requested: f64) -> Self {
        requested
    }
    fn nan() -> Self {
        f64::NAN
    }
    fn is_nan(self) -> bool {
        f64::is_nan(self)
    }
}

impl Real for f32 {
    #[inline]
    fn tol(requested: f64) -> Self {
        (requested as f32).max(1.0e3 * f32::EPSILON)
    }
    fn nan() -> Self {
        f32::NAN
    }
    fn is_nan(self) -> bool {
        f32::is_nan(self)
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub type Cx<T> = Complex<T>;

/// Square complex operator on the inner space.
pub type CMat<T> = DMatrix<Complex<T>>;

/// n×2 coupling operator `B : C² → Cⁿ`.
pub type Couplings<T> = OMatrix<Complex<T>, Dyn, U2>;

/// 2×2 complex matrix on the outer space.
pub type Mat2<T> = Matrix2<Complex<T>>;

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}
