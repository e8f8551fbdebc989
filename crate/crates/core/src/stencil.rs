//! Centered finite-difference stencils of order 1–3 at accuracy 2 or 4.

use nalgebra::allocator::Allocator;
use nalgebra::{Complex, DefaultAllocator, Dim, OMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VesselError};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Accuracy {
    Second,
    Fourth,
}

impl Accuracy {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(Accuracy::Second),
            4 => Ok(Accuracy::Fourth),
            other => Err(VesselError::invalid("accuracy", format!("{other} (supported: 2, 4)"))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Accuracy::Second => 2,
            Accuracy::Fourth => 4,
        }
    }
}

const D1_A2: [f64; 3] = [-0.5, 0.0, 0.5];
const D1_A4: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const D2_A2: [f64; 3] = [1.0, -2.0, 1.0];
const D2_A4: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
const D3_A2: [f64; 5] = [-0.5, 1.0, 0.0, -1.0, 0.5];
const D3_A4: [f64; 7] = [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];

/// A symmetric stencil `f^(order)(x) ≈ h^-order Σ_j w_j f(x + (j - r) h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    order: u32,
    accuracy: Accuracy,
    weights: &'static [f64],
}

impl Stencil {
    pub fn centered(order: u32, accuracy: Accuracy) -> Result<Self> {
        let weights: &'static [f64] = match (order, accuracy) {
            (1, Accuracy::Second) => &D1_A2,
            (1, Accuracy::Fourth) => &D1_A4,
            (2, Accuracy::Second) => &D2_A2,
            (2, Accuracy::Fourth) => &D2_A4,
            (3, Accuracy::Second) => &D3_A2,
            (3, Accuracy::Fourth) => &D3_A4,
            _ => return Err(VesselError::invalid("order", format!("{order} (supported: 1, 2, 3)"))),
        };
        Ok(Self {
            order,
            accuracy,
            weights,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn accuracy(&self) -> Accuracy {
        self.accuracy
    }

    /// Number of samples needed on each side of the centre.
    pub fn half_width(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn weights(&self) -> &'static [f64] {
        self.weights
    }

    /// Offsets (in units of h) paired with their weights.
    pub fn taps(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let r = self.half_width() as i64;
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(move |(j, w)| (j as i64 - r, *w))
    }

    fn scale<T: Real>(&self, h: T) -> T {
        T::one() / h.powi(self.order as i32)
    }

    /// Differentiates a real-valued evaluator at `x`.
    pub fn apply_real<T, F>(&self, x: T, h: T, mut f: F) -> Result<T>
    where
        T: Real,
        F: FnMut(T) -> Result<T>,
    {
        let mut acc = T::zero();
        for (off, w) in self.taps() {
            acc += lit::<T>(w) * f(x + T::from_i64(off).unwrap() * h)?;
        }
        Ok(acc * self.scale(h))
    }

    /// Differentiates a complex scalar- or matrix-valued evaluator at `x`.
    pub fn apply<T, V, F>(&self, x: T, h: T, mut f: F) -> Result<V>
    where
        T: Real,
        V: Combine<T>,
        F: FnMut(T) -> Result<V>,
    {
        let mut acc: Option<V> = None;
        for (off, w) in self.taps() {
            let term = f(x + T::from_i64(off).unwrap() * h)?.weighted(lit(w));
            acc = Some(match acc {
                None => term,
                Some(a) => a.plus(term),
            });
        }
        Ok(acc.expect("stencils have nonzero taps").weighted(self.scale(h)))
    }
}

/// Values that can be linearly combined with real weights.
pub trait Combine<T>: Sized {
    fn weighted(self, w: T) -> Self;
    fn plus(self, other: Self) -> Self;
}

impl<T: Real> Combine<T> for Complex<T> {
    fn weighted(self, w: T) -> Self {
        self * w
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
}

impl<T: Real, R: Dim, C: Dim> Combine<T> for OMatrix<Complex<T>, R, C>
where
    DefaultAllocator: Allocator<R, C>,
{
    fn weighted(self, w: T) -> Self {
        self * Complex::new(w, T::zero())
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
}
