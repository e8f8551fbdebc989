//! Small dense helpers on top of nalgebra's complex LU.

use nalgebra::allocator::Allocator;
use nalgebra::{Complex, ComplexField, DefaultAllocator, Dim, Dyn, OMatrix, LU};

use crate::error::{Result, VesselError};
use crate::scalar::{to_f64, CMat, Real};

/// LU factorization of `SmS` with `S = diag(|m_ii|^{-1/2})`, so graded
/// operators with exponentially large diagonals keep their small pivots.
pub(crate) struct Factored<T: Real> {
    lu: LU<Complex<T>, Dyn, Dyn>,
    diag: Vec<Complex<T>>,
    scale: Vec<T>,
}

impl<T: Real> Factored<T> {
    /// Factors `m`; `(x, t)` only labels the error.
    pub(crate) fn new(mut m: CMat<T>, x: T, t: T) -> Result<Self> {
        let n = m.nrows();
        let scale: Vec<T> = (0..n)
            .map(|i| {
                let a = m[(i, i)].modulus();
                if a.is_finite() && a > T::zero() {
                    T::one() / a.sqrt()
                } else {
                    T::one()
                }
            })
            .collect();
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] *= scale[i] * scale[j];
            }
        }
        let lu = m.lu();
        let u = lu.u();
        let diag: Vec<Complex<T>> = (0..n).map(|i| u[(i, i)]).collect();
        let mut max_abs = T::zero();
        let mut min_abs = T::max_value().unwrap_or_else(T::one);
        for d in &diag {
            let a = d.modulus();
            if !a.is_finite() {
                return Err(VesselError::SingularX {
                    x: to_f64(x),
                    t: to_f64(t),
                });
            }
            max_abs = max_abs.max(a);
            min_abs = min_abs.min(a);
        }
        let cutoff = T::default_epsilon() * T::from_usize(n.max(1)).unwrap() * max_abs;
        if n > 0 && (max_abs == T::zero() || min_abs <= cutoff) {
            return Err(VesselError::SingularX {
                x: to_f64(x),
                t: to_f64(t),
            });
        }
        Ok(Self { lu, diag, scale })
    }

    fn rescale_rows<C: Dim>(&self, m: &mut OMatrix<Complex<T>, Dyn, C>)
    where
        DefaultAllocator: Allocator<Dyn, C>,
    {
        for (i, mut row) in m.row_iter_mut().enumerate() {
            row *= Complex::new(self.scale[i], T::zero());
        }
    }

    pub(crate) fn solve<C: Dim>(&self, b: &OMatrix<Complex<T>, Dyn, C>) -> OMatrix<Complex<T>, Dyn, C>
    where
        DefaultAllocator: Allocator<Dyn, C>,
    {
        let mut rhs = b.clone();
        self.rescale_rows(&mut rhs);
        let mut out = self.lu.solve(&rhs).expect("pivots were checked at factorization time");
        self.rescale_rows(&mut out);
        out
    }

    pub(crate) fn inverse(&self) -> CMat<T> {
        let mut inv = self
            .lu
            .try_inverse()
            .expect("pivots were checked at factorization time");
        let n = inv.nrows();
        for j in 0..n {
            for i in 0..n {
                inv[(i, j)] *= self.scale[i] * self.scale[j];
            }
        }
        inv
    }

    pub(crate) fn determinant(&self) -> Complex<T> {
        let s = self.scale.iter().fold(T::one(), |acc, v| acc * *v * *v);
        self.lu.determinant() / Complex::new(s, T::zero())
    }

    /// `(ln|det|, det/|det|)`, safe when the determinant itself overflows.
    pub(crate) fn log_abs_det(&self) -> (T, Complex<T>) {
        let mut log_abs = self
            .scale
            .iter()
            .fold(T::zero(), |acc, v| acc - (T::one() + T::one()) * v.ln());
        let mut phase = Complex::new(self.lu.p().determinant::<T>(), T::zero());
        for d in &self.diag {
            let a = d.modulus();
            log_abs += a.ln();
            phase *= *d / Complex::new(a, T::zero());
        }
        (log_abs, phase)
    }
}

/// Returns `(m + m*)/2` together with the Frobenius norm of `m - m*`.
pub(crate) fn hermitian_part<T: Real>(m: &CMat<T>) -> (CMat<T>, T) {
    let adj = m.adjoint();
    let asym = (m - &adj).norm();
    let half = Complex::new(T::from_f64(0.5).unwrap(), T::zero());
    ((m + adj) * half, asym)
}

pub(crate) fn diag_from<T: Real>(entries: &[Complex<T>]) -> CMat<T> {
    let n = entries.len();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            entries[i]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}
