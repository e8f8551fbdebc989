//! Vessels with oscillatory generators: truncated discrete spectra and
//! quadrature discretizations of a continuous spectrum on the positive
//! imaginary axis.
//!
//! With `θₙ = kₙx − kₙ³t`, `sₙ = sin θₙ / kₙ`, `cₙ = cos θₙ`:
//!
//! ```text
//! A = diag(ikₙ²)
//! B rows  bₙ (sₙ, icₙ)
//! X = I + [Eₙₘ bₙ b̄ₘ],  Eₙₘ = (sₙcₘ − cₙsₘ) / (kₙ² − kₘ²)
//! Eₙₙ = (x − 3kₙ²t) / (2kₙ²) − sin 2θₙ / (4kₙ³)
//! ```

use std::f64::consts::PI;

use crate::error::{Result, VesselError};
use crate::linalg::diag_from;
use crate::quadrature::gauss_legendre;
use crate::scalar::{cx, lit, re, to_f64, CMat, Couplings, Cx, Real};
use crate::vessel::{self, BuildOptions, FiniteVessel, Generator, VesselKind};

/// Relative gap in `k²` below which a pair is treated as degenerate.
const NEAR_DEGENERATE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumFlavor<T: Real> {
    /// Wavenumbers on the lattice `2πN/T`.
    Periodic {
        period: T,
    },
    AlmostPeriodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrum<T: Real> {
    k: Vec<T>,
    b: Vec<Cx<T>>,
    flavor: SpectrumFlavor<T>,
}

impl<T: Real> DiscreteSpectrum<T> {
    pub fn new(k: Vec<T>, b: Vec<Cx<T>>, flavor: SpectrumFlavor<T>) -> Result<Self> {
        validate_oscillatory(&k, &b, "k", "b")?;
        if let SpectrumFlavor::Periodic { period } = flavor {
            if !(period.is_finite() && period > T::zero()) {
                return Err(VesselError::invalid("period", "must be positive and finite"));
            }
            let unit = lit::<T>(2.0 * PI) / period;
            for (i, ki) in k.iter().enumerate() {
                let m = *ki / unit;
                if (m - m.round()).abs() > T::tol(1e-12) * T::one().max(m.abs()) {
                    return Err(VesselError::invalid(
                        format!("k[{i}]"),
                        format!("{} is not an integer multiple of 2π/T", to_f64(*ki)),
                    ));
                }
            }
        }
        Ok(Self { k, b, flavor })
    }

    /// `kₙ = 2πNₙ/T` for the given integers.
    pub fn periodic(period: T, harmonics: &[i64], b: Vec<Cx<T>>) -> Result<Self> {
        let unit = lit::<T>(2.0 * PI) / period;
        let k = harmonics.iter().map(|n| unit * lit(*n as f64)).collect();
        Self::new(k, b, SpectrumFlavor::Periodic { period })
    }

    pub fn k(&self) -> &[T] {
        &self.k
    }

    pub fn b(&self) -> &[Cx<T>] {
        &self.b
    }

    pub fn flavor(&self) -> SpectrumFlavor<T> {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// `maxₙ |bₙ|²|kₙ|`, a proxy for the decay of the discarded tail.
    pub fn tail_proxy(&self) -> T {
        tail_proxy(&self.k, &self.b)
    }
}

fn tail_proxy<T: Real>(k: &[T], b: &[Cx<T>]) -> T {
    k.iter()
        .zip(b)
        .fold(T::zero(), |m, (k, b)| m.max(b.norm_sqr() * k.abs()))
}

fn validate_oscillatory<T: Real>(k: &[T], b: &[Cx<T>], kname: &str, bname: &'static str) -> Result<()> {
    if k.is_empty() {
        return Err(VesselError::invalid(kname, "at least one wavenumber required"));
    }
    if b.len() != k.len() {
        return Err(VesselError::IndexMismatch {
            what: bname,
            expected: k.len(),
            got: b.len(),
        });
    }
    for (i, ki) in k.iter().enumerate() {
        if !(ki.is_finite() && *ki != T::zero()) {
            return Err(VesselError::invalid(
                format!("{kname}[{i}]"),
                "must be nonzero and finite",
            ));
        }
    }
    for (i, bi) in b.iter().enumerate() {
        if !(bi.re.is_finite() && bi.im.is_finite()) {
            return Err(VesselError::invalid(format!("{bname}[{i}]"), "must be finite"));
        }
    }
    for i in 0..k.len() {
        for j in 0..i {
            let (a, c) = (k[i] * k[i], k[j] * k[j]);
            if (a - c).abs() <= T::default_epsilon() * a.max(c) {
                return Err(VesselError::invalid(
                    format!("{kname}[{i}]"),
                    format!("k² coincides with that of {kname}[{j}]"),
                ));
            }
        }
    }
    Ok(())
}

/// Discretized continuous spectrum: nodes `sᵢ` (μ = isᵢ²), positive weights,
/// and the density `c(μ)` sampled at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpectrum<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
    density: Vec<Cx<T>>,
}

impl<T: Real> QuadratureSpectrum<T> {
    pub fn new(nodes: Vec<T>, weights: Vec<T>, density: Vec<Cx<T>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(VesselError::invalid("nodes", "at least one node required"));
        }
        for (what, len) in [("weights", weights.len()), ("density", density.len())] {
            if len != nodes.len() {
                return Err(VesselError::IndexMismatch {
                    what,
                    expected: nodes.len(),
                    got: len,
                });
            }
        }
        if !(nodes[0] > T::zero()) || nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(VesselError::invalid(
                "nodes",
                "must be positive and strictly increasing",
            ));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > T::zero())) {
            return Err(VesselError::invalid(format!("weights[{i}]"), "must be positive"));
        }
        Ok(Self {
            nodes,
            weights,
            density,
        })
    }

    pub fn from_fn(nodes: Vec<T>, weights: Vec<T>, density: impl Fn(T) -> Cx<T>) -> Result<Self> {
        let d = nodes.iter().map(|s| density(*s)).collect();
        Self::new(nodes, weights, d)
    }

    /// Gauss–Legendre discretization of `[0, s_max]` with `n` nodes.
    pub fn gauss_legendre(n: usize, s_max: T, density: impl Fn(T) -> Cx<T>) -> Result<Self> {
        if !(s_max.is_finite() && s_max > T::zero()) {
            return Err(VesselError::invalid("s_max", "must be positive and finite"));
        }
        let (nodes, weights) = gauss_legendre(n, T::zero(), s_max)?;
        Self::from_fn(nodes, weights, density)
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn density(&self) -> &[Cx<T>] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node amplitudes `√wᵢ c(isᵢ²)` of the equivalent discrete vessel.
    pub fn amplitudes(&self) -> Vec<Cx<T>> {
        self.weights
            .iter()
            .zip(&self.density)
            .map(|(w, c)| *c * w.sqrt())
            .collect()
    }

    pub fn tail_proxy(&self) -> T {
        tail_proxy(&self.nodes, &self.amplitudes())
    }
}

fn theta<T: Real>(k: T, x: T, t: T) -> T {
    k * x - k * k * k * t
}

pub(crate) fn oscillatory_couplings<T: Real>(k: &[T], b: &[Cx<T>], x: T, t: T) -> Couplings<T> {
    Couplings::from_fn(k.len(), |i, j| {
        let th = theta(k[i], x, t);
        if j == 0 {
            b[i] * (th.sin() / k[i])
        } else {
            b[i] * cx(T::zero(), th.cos())
        }
    })
}

/// `Eₙₙ` at wavenumber `k`; depends on `|k|` only.
fn kernel_diagonal<T: Real>(k: T, x: T, t: T) -> T {
    let k2 = k * k;
    let th = theta(k, x, t);
    (x - lit::<T>(3.0) * k2 * t) / (lit::<T>(2.0) * k2) - (lit::<T>(2.0) * th).sin() / (lit::<T>(4.0) * k2 * k)
}

pub(crate) fn kernel<T: Real>(kn: T, km: T, x: T, t: T) -> T {
    let (a, c) = (kn * kn, km * km);
    if (a - c).abs() < lit::<T>(NEAR_DEGENERATE) * a.max(c) {
        return kernel_diagonal((kn.abs() + km.abs()) / lit(2.0), x, t);
    }
    let (tn, tm) = (theta(kn, x, t), theta(km, x, t));
    let (sn, sm) = (tn.sin() / kn, tm.sin() / km);
    (sn * tm.cos() - tn.cos() * sm) / (a - c)
}

pub(crate) fn oscillatory_operator<T: Real>(k: &[T], b: &[Cx<T>], x: T, t: T) -> CMat<T> {
    let n = k.len();
    CMat::from_fn(n, n, |i, j| {
        let g = b[i] * b[j].conj() * kernel(k[i], k[j], x, t);
        if i == j {
            g + T::one()
        } else {
            g
        }
    })
}

fn build_oscillatory<T: Real>(
    kind: VesselKind,
    k: &[T],
    b: &[Cx<T>],
    options: BuildOptions,
) -> Result<FiniteVessel<T>> {
    let spectrum: Vec<Cx<T>> = k.iter().map(|k| cx(T::zero(), *k * *k)).collect();
    let n = k.len();
    let v = FiniteVessel::from_parts(
        kind,
        diag_from(&spectrum),
        spectrum,
        CMat::identity(n, n),
        Generator::Oscillatory {
            k: k.to_vec(),
            b: b.to_vec(),
        },
    )?
    .with_tolerances(options.tolerances);
    if options.self_check {
        let five: T = lit(5.0);
        vessel::self_check(&v, (-five, five), (-T::one(), T::one()))?;
    }
    Ok(v)
}

pub fn build_discrete_vessel<T: Real>(spec: &DiscreteSpectrum<T>) -> Result<FiniteVessel<T>> {
    build_discrete_vessel_with(spec, BuildOptions::default())
}

pub fn build_discrete_vessel_with<T: Real>(
    spec: &DiscreteSpectrum<T>,
    options: BuildOptions,
) -> Result<FiniteVessel<T>> {
    build_oscillatory(VesselKind::Discrete, &spec.k, &spec.b, options)
}

/// The quadrature vessel: a discrete vessel on the nodes with the square
/// roots of the weights folded into the amplitudes.
pub fn build_quadrature_vessel<T: Real>(spec: &QuadratureSpectrum<T>) -> Result<FiniteVessel<T>> {
    build_quadrature_vessel_with(spec, BuildOptions::default())
}

pub fn build_quadrature_vessel_with<T: Real>(
    spec: &QuadratureSpectrum<T>,
    options: BuildOptions,
) -> Result<FiniteVessel<T>> {
    build_oscillatory(VesselKind::Quadrature, &spec.nodes, &spec.amplitudes(), options)
}

/// `‖X(x,0)v − v‖ / ‖v‖` for `vₙ = bₙ sin(kₙx)/kₙ`; zero when `v = 0`.
pub fn fixed_vector_residual<T: Real>(vessel: &FiniteVessel<T>, x: T) -> Result<T> {
    let Generator::Oscillatory { k, b } = vessel.generator() else {
        return Err(VesselError::Precondition(
            "fixed-vector residual requires a discrete or quadrature vessel".into(),
        ));
    };
    let v = nalgebra::DVector::from_iterator(k.len(), k.iter().zip(b).map(|(k, b)| *b * ((*k * x).sin() / *k)));
    let norm = v.norm();
    if norm == T::zero() {
        return Ok(T::zero());
    }
    let op = vessel.hermitian_operator(x, T::zero())?;
    Ok((&op * &v - &v).norm() / norm)
}

/// `Σ |bₙ|² sin²(kₙx) / kₙ²`.
pub fn beta_odd<T: Real>(spec: &DiscreteSpectrum<T>, x: T) -> T {
    odd_sum(&spec.k, &spec.b, x)
}

fn odd_sum<T: Real>(k: &[T], b: &[Cx<T>], x: T) -> T {
    k.iter().zip(b).fold(T::zero(), |acc, (k, b)| {
        let s = (*k * x).sin() / *k;
        acc + b.norm_sqr() * s * s
    })
}

/// `Σ wᵢ|c(isᵢ²)|² sin²(sᵢx)/sᵢ²`.
pub fn beta_odd_continuum<T: Real>(spec: &QuadratureSpectrum<T>, x: T) -> T {
    odd_sum(&spec.nodes, &spec.amplitudes(), x)
}

/// `q(x) = 2 Σ wᵢ|c(isᵢ²)|² sin(2sᵢx)/sᵢ`.
pub fn q_odd_continuum<T: Real>(spec: &QuadratureSpectrum<T>, x: T) -> T {
    let two: T = lit(2.0);
    spec.nodes
        .iter()
        .zip(&spec.weights)
        .zip(&spec.density)
        .fold(T::zero(), |acc, ((s, w), c)| {
            acc + two * *w * c.norm_sqr() * (two * *s * x).sin() / *s
        })
}

/// Zero density placeholder used by tests and examples.
pub fn zero_density<T: Real>(_: T) -> Cx<T> {
    re(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vessel::{evolution_residuals, lyapunov_residual, probe_points, tau};

    fn spec(k: &[f64], b: &[f64]) -> DiscreteSpectrum<f64> {
        DiscreteSpectrum::new(
            k.to_vec(),
            b.iter().map(|v| re(*v)).collect(),
            SpectrumFlavor::AlmostPeriodic,
        )
        .unwrap()
    }

    fn gaussian(s: f64) -> Cx<f64> {
        re((-s * s / 2.0).exp())
    }

    #[test]
    fn rejects_invalid_spectra() {
        let b = vec![re(1.0), re(1.0)];
        let ap = SpectrumFlavor::AlmostPeriodic;
        assert!(DiscreteSpectrum::new(vec![1.0, -1.0], b.clone(), ap).is_err());
        assert!(DiscreteSpectrum::new(vec![0.0, 1.0], b.clone(), ap).is_err());
        assert!(
            DiscreteSpectrum::new(vec![1.0, 2.5], b.clone(), SpectrumFlavor::Periodic { period: 2.0 * PI }).is_err()
        );
        assert!(DiscreteSpectrum::new(vec![1.0, 2.0], b, SpectrumFlavor::Periodic { period: 2.0 * PI }).is_ok());
        assert!(QuadratureSpectrum::new(vec![0.5, 0.2], vec![1.0, 1.0], vec![re(1.0); 2]).is_err());
        assert!(QuadratureSpectrum::new(vec![0.2, 0.5], vec![1.0, -1.0], vec![re(1.0); 2]).is_err());
    }

    #[test]
    fn diagonal_limit_matches_integral() {
        let v = build_discrete_vessel(&spec(&[1.0], &[1.0])).unwrap();
        let x = v.operator(PI, 0.0).unwrap();
        assert!((x[(0, 0)].re - 1.0 - PI / 2.0).abs() < 1e-14);
        // Simpson integral of sin²(ky)/k² for k = 1.7 up to x = 2.3
        let (k, xe) = (1.7_f64, 2.3_f64);
        let n = 2001;
        let w = crate::quadrature::simpson_weights(n, xe).unwrap();
        let nodes = crate::quadrature::uniform_nodes(0.0, xe, n);
        let integral: f64 = nodes.iter().zip(&w).map(|(y, w)| w * ((k * y).sin() / k).powi(2)).sum();
        assert!((kernel(k, k, xe, 0.0) - integral).abs() < 1e-8);
    }

    #[test]
    fn diagonal_limit_matches_transport_in_time() {
        // integrate the X evolution from t=0 along a fixed x
        let spec = spec(&[1.3], &[1.0]);
        let v = build_discrete_vessel(&spec).unwrap();
        let (x, te) = (0.8_f64, 0.4_f64);
        let n = 2001;
        let w = crate::quadrature::simpson_weights(n, te).unwrap();
        let nodes = crate::quadrature::uniform_nodes(0.0, te, n);
        let p = crate::vessel::sl_parameters::<f64>();
        let i = cx(0.0, 1.0);
        let mut acc = 0.0;
        for (t, w) in nodes.iter().zip(&w) {
            let b = v.couplings(x, *t).unwrap();
            let bs2b = &b * p.sigma2 * b.adjoint();
            let a = v.a();
            let rhs = (a * &bs2b - &bs2b * a.adjoint() + &b * p.gamma * b.adjoint()) * i;
            acc += w * rhs[(0, 0)].re;
        }
        let start = v.operator(x, 0.0).unwrap()[(0, 0)].re;
        let end = v.operator(x, te).unwrap()[(0, 0)].re;
        assert!((end - start - acc).abs() < 1e-8);
    }

    #[test]
    fn identity_at_origin() {
        let v = build_discrete_vessel(&spec(&[1.0, 2.0, 3.5], &[1.0, 0.5, 0.2])).unwrap();
        assert_eq!(v.operator(0.0, 0.0).unwrap(), CMat::identity(3, 3));
    }

    #[test]
    fn discrete_vessel_satisfies_conditions() {
        let v = build_discrete_vessel(&spec(&[1.0, 2.0], &[1.0, 1.0])).unwrap();
        assert!(lyapunov_residual(&v, 0.7, 0.3).unwrap() < 1e-12);
        let r = evolution_residuals(&v, 0.7, 0.3, 1e-3).unwrap();
        for (name, val) in r.differential() {
            assert!(val < 1e-6, "{name}: {val:e}");
        }
    }

    #[test]
    fn near_degenerate_pair_is_continuous() {
        let (x, t) = (0.9, 0.2);
        let k = 1.3_f64;
        let exact = kernel(k, k, x, t);
        let near = kernel(k, k * (1.0 + 1e-10), x, t);
        let far = kernel(k, k * (1.0 + 1e-6), x, t);
        assert!((near - exact).abs() < 1e-8);
        assert!((far - exact).abs() < 1e-4);
        assert_eq!(kernel(-k, k * (1.0 + 1e-10), x, t), near);
    }

    #[test]
    fn beta_odd_values() {
        let s = spec(&[1.0], &[1.0]);
        assert!((beta_odd(&s, PI / 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(beta_odd(&s, 0.0), 0.0);
        let s = spec(&[0.7, 1.9], &[1.0, 0.3]);
        for (x, _) in probe_points(10, (-4.0, 4.0), (0.0, 0.0)) {
            assert!((beta_odd(&s, x) - beta_odd(&s, -x)).abs() < 1e-14);
        }
    }

    #[test]
    fn fixed_vector_trivial_cases() {
        let v = build_discrete_vessel(&spec(&[1.0, 2.0], &[1.0, 1.0])).unwrap();
        assert_eq!(fixed_vector_residual(&v, 0.0).unwrap(), 0.0);
        let sol = crate::soliton::build_soliton(&crate::soliton::SolitonSpec::new(vec![1.0], vec![re(1.0)]).unwrap())
            .unwrap();
        assert!(fixed_vector_residual(&sol, 1.0).is_err());
    }

    #[test]
    fn zero_density_quadrature_vessel_is_trivial() {
        let q = QuadratureSpectrum::gauss_legendre(16, 4.0, zero_density).unwrap();
        let v = build_quadrature_vessel(&q).unwrap();
        assert_eq!(tau(&v, 1.2, 0.3).unwrap(), 1.0);
        assert_eq!(v.evaluate(0.4, 0.0).unwrap().beta, 0.0);
        assert_eq!(q_odd_continuum(&q, 1.0), 0.0);
    }

    #[test]
    fn quadrature_vessel_lyapunov() {
        let q = QuadratureSpectrum::gauss_legendre(32, 5.0, gaussian).unwrap();
        let v = build_quadrature_vessel(&q).unwrap();
        for (x, t) in probe_points(10, (-3.0, 3.0), (-0.5, 0.5)) {
            assert!(lyapunov_residual(&v, x, t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn quadrature_beta_converges_under_refinement() {
        let b = |n: usize| {
            let q = QuadratureSpectrum::gauss_legendre(n, 6.0, gaussian).unwrap();
            build_quadrature_vessel(&q).unwrap().evaluate(0.9, 0.0).unwrap().beta
        };
        let (b16, b32, b64) = (b(16), b(32), b(64));
        assert!((b64 - b32).abs() <= (b32 - b16).abs() + 1e-12);
        assert!((b64 - b32).abs() < 1e-8);
    }

    #[test]
    fn q_continuum_is_twice_beta_derivative() {
        let q = QuadratureSpectrum::gauss_legendre(48, 6.0, gaussian).unwrap();
        let x = 1.0;
        let errs: Vec<f64> = [1e-2, 5e-3]
            .iter()
            .map(|&h| {
                let d = (beta_odd_continuum(&q, x + h) - beta_odd_continuum(&q, x - h)) / (2.0 * h);
                (q_odd_continuum(&q, x) - 2.0 * d).abs()
            })
            .collect();
        assert!(errs[0] < 1e-3);
        assert!((errs[0] / errs[1]).log2() > 1.9);
        let fine = QuadratureSpectrum::gauss_legendre(96, 6.0, gaussian).unwrap();
        assert!((q_odd_continuum(&q, x) - q_odd_continuum(&fine, x)).abs() < 1e-8);
    }
}
