//! Quadrature rules: Gauss–Legendre on an interval and composite Simpson on
//! uniform nodes.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Result, VesselError};
use crate::scalar::{lit, Real};

/// Gauss–Legendre nodes (increasing) and weights on `[a, b]`.
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> Result<(Vec<T>, Vec<T>)> {
    let degree = NonZeroUsize::new(n).ok_or_else(|| VesselError::invalid("nodes", "at least one node required"))?;
    if !(b > a) {
        return Err(VesselError::invalid("interval", "upper end must exceed lower end"));
    }
    let rule = GaussLegendre::new(degree);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let half = (b - a) / lit(2.0);
    let mid = (b + a) / lit(2.0);
    Ok(pairs
        .into_iter()
        .map(|(x, w)| (mid + half * lit(x), half * lit(w)))
        .unzip())
}

/// Composite Simpson weights for `n` uniform nodes spanning an interval of
/// length `len`; `n` must be odd and at least 3.
pub fn simpson_weights<T: Real>(n: usize, len: T) -> Result<Vec<T>> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(VesselError::GridTooSmall(format!(
            "composite Simpson needs an odd node count of at least 3, got {n}"
        )));
    }
    let h = len / T::from_usize(n - 1).unwrap();
    let third = h / lit(3.0);
    Ok((0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                third
            } else if i % 2 == 1 {
                third * lit(4.0)
            } else {
                third * lit(2.0)
            }
        })
        .collect())
}

/// `n` uniform nodes on `[a, b]` including both ends.
pub fn uniform_nodes<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let h = (b - a) / T::from_usize(n.max(2) - 1).unwrap();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + h * T::from_usize(i).unwrap()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(4, 0.0, 2.0).unwrap();
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!((integral - 32.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let n = 11;
        let x = uniform_nodes(-1.0_f64, 2.0, n);
        let w = simpson_weights(n, 3.0).unwrap();
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * (x.powi(3) - x)).sum();
        assert!((integral - (4.0 - 0.25 - 1.5)).abs() < 1e-13);
    }

    #[test]
    fn simpson_rejects_even_counts() {
        assert!(simpson_weights::<f64>(10, 1.0).is_err());
        assert!(gauss_legendre::<f64>(0, 0.0, 1.0).is_err());
    }
}
