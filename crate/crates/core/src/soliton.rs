//! Closed-form n-soliton vessels.
//!
//! With `φⱼ = kⱼx + kⱼ³t` the realization is
//!
//! ```text
//! A = diag(−ikⱼ²)
//! B rows  e^{φⱼ} bⱼ (1, ikⱼ)
//! X = I + [e^{φᵢ+φⱼ} bᵢ b̄ⱼ / (kᵢ + kⱼ)]
//! ```
//!
//! and the potential is `q = −2 ∂ₓ² log τ` with `τ = det X`.

use nalgebra::ComplexField;

use crate::error::{Result, VesselError};
use crate::linalg::{diag_from, Factored};
use crate::scalar::{cx, lit, re, to_f64, CMat, Couplings, Cx, Real};
use crate::vessel::{self, BuildOptions, FiniteVessel, Generator, VesselKind};

/// Wavenumbers and amplitudes of an n-soliton.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSpec<T: Real> {
    k: Vec<T>,
    b: Vec<Cx<T>>,
}

impl<T: Real> SolitonSpec<T> {
    pub fn new(k: Vec<T>, b: Vec<Cx<T>>) -> Result<Self> {
        if k.is_empty() {
            return Err(VesselError::invalid("k", "at least one wavenumber required"));
        }
        if b.len() != k.len() {
            return Err(VesselError::IndexMismatch {
                what: "b",
                expected: k.len(),
                got: b.len(),
            });
        }
        for (i, ki) in k.iter().enumerate() {
            if !(ki.is_finite() && *ki > T::zero()) {
                return Err(VesselError::invalid(format!("k[{i}]"), "must be positive and finite"));
            }
        }
        let gap = T::tol(1e-12);
        for i in 0..k.len() {
            for j in 0..i {
                if (k[i] - k[j]).abs() <= gap * k[i].max(k[j]) {
                    return Err(VesselError::invalid(
                        format!("k[{i}]"),
                        format!("coincides with k[{j}]"),
                    ));
                }
            }
        }
        for (i, bi) in b.iter().enumerate() {
            let m = bi.modulus();
            if !(m.is_finite() && m > T::zero()) {
                return Err(VesselError::invalid(format!("b[{i}]"), "must be nonzero and finite"));
            }
        }
        Ok(Self { k, b })
    }

    /// Real amplitudes `bⱼ = √(2kⱼcⱼ)`, so that `cⱼ = |bⱼ|²/(2kⱼ)`.
    pub fn from_normalized(k: Vec<T>, c: Vec<T>) -> Result<Self> {
        if c.len() != k.len() {
            return Err(VesselError::IndexMismatch {
                what: "c",
                expected: k.len(),
                got: c.len(),
            });
        }
        let mut b = Vec::with_capacity(k.len());
        for (i, (ki, ci)) in k.iter().zip(&c).enumerate() {
            if !(ci.is_finite() && *ci > T::zero()) {
                return Err(VesselError::invalid(format!("c[{i}]"), "must be positive and finite"));
            }
            b.push(re((lit::<T>(2.0) * *ki * *ci).sqrt()));
        }
        Self::new(k, b)
    }

    pub fn k(&self) -> &[T] {
        &self.k
    }

    pub fn b(&self) -> &[Cx<T>] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// `cⱼ = |bⱼ|²/(2kⱼ)`.
    pub fn normalized(&self) -> Vec<T> {
        self.k
            .iter()
            .zip(&self.b)
            .map(|(k, b)| b.norm_sqr() / (lit::<T>(2.0) * *k))
            .collect()
    }

    fn k_max(&self) -> T {
        self.k.iter().fold(T::zero(), |m, k| m.max(*k))
    }
}

fn phase<T: Real>(k: T, x: T, t: T) -> T {
    k * x + k * k * k * t
}

pub(crate) fn exponential_couplings<T: Real>(k: &[T], b: &[Cx<T>], x: T, t: T) -> Couplings<T> {
    Couplings::from_fn(k.len(), |i, j| {
        let e = b[i] * phase(k[i], x, t).exp();
        if j == 0 {
            e
        } else {
            e * cx(T::zero(), k[i])
        }
    })
}

pub(crate) fn exponential_operator<T: Real>(k: &[T], b: &[Cx<T>], x: T, t: T) -> CMat<T> {
    let n = k.len();
    let e: Vec<Cx<T>> = (0..n).map(|i| b[i] * phase(k[i], x, t).exp()).collect();
    CMat::from_fn(n, n, |i, j| {
        let g = e[i] * e[j].conj() / (k[i] + k[j]);
        if i == j {
            g + T::one()
        } else {
            g
        }
    })
}

pub fn build_soliton<T: Real>(spec: &SolitonSpec<T>) -> Result<FiniteVessel<T>> {
    build_soliton_with(spec, BuildOptions::default())
}

pub fn build_soliton_with<T: Real>(spec: &SolitonSpec<T>, options: BuildOptions) -> Result<FiniteVessel<T>> {
    let spectrum: Vec<Cx<T>> = spec.k.iter().map(|k| cx(T::zero(), -*k * *k)).collect();
    let n = spec.len();
    let v = FiniteVessel::from_parts(
        VesselKind::Soliton,
        diag_from(&spectrum),
        spectrum,
        CMat::identity(n, n),
        Generator::Exponential {
            k: spec.k.clone(),
            b: spec.b.clone(),
        },
    )?
    .with_tolerances(options.tolerances);
    if options.self_check {
        let km = spec.k_max();
        let xs = lit::<T>(3.0) / km;
        let ts = T::one() / (km * km * km);
        vessel::self_check(&v, (-xs, xs), (-ts, ts))?;
    }
    Ok(v)
}

/// The Cauchy-determinant expansion of τ for three solitons.
pub fn tau_cauchy_3<T: Real>(spec: &SolitonSpec<T>, x: T, t: T) -> Result<T> {
    if spec.len() != 3 {
        return Err(VesselError::invalid(
            "k",
            format!("three wavenumbers required, got {}", spec.len()),
        ));
    }
    let k = &spec.k;
    let c = spec.normalized();
    let e: Vec<T> = (0..3)
        .map(|i| c[i] * (lit::<T>(2.0) * phase(k[i], x, t)).exp())
        .collect();
    let a = |i: usize, j: usize| {
        let r = (k[i] - k[j]) / (k[i] + k[j]);
        r * r
    };
    let mut tau = T::one() + e[0] + e[1] + e[2];
    tau += e[0] * e[1] * a(0, 1) + e[0] * e[2] * a(0, 2) + e[1] * e[2] * a(1, 2);
    tau += e[0] * e[1] * e[2] * a(0, 1) * a(0, 2) * a(1, 2);
    Ok(tau)
}

/// `X` rescaled row- and column-wise so that no exponential exceeds one.
///
/// Members with `φᵢ > 0` are divided by `|bᵢ|e^{φᵢ}`; then
/// `Yᵢⱼ = δᵢⱼdᵢ + wᵢw̄ⱼ/(kᵢ+kⱼ)` and every entry of `Y, Y′, Y″` is bounded.
struct Shifted<T: Real> {
    y: CMat<T>,
    dy: CMat<T>,
    ddy: CMat<T>,
    log_scale: T,
    scale_slope: T,
}

fn shifted<T: Real>(spec: &SolitonSpec<T>, x: T, t: T) -> Shifted<T> {
    let n = spec.len();
    let mut d = vec![T::one(); n];
    let mut rho = vec![T::zero(); n];
    let mut kappa = vec![T::zero(); n];
    let mut w = vec![re(T::zero()); n];
    let mut log_scale = T::zero();
    let mut scale_slope = T::zero();
    for i in 0..n {
        let (k, b) = (spec.k[i], spec.b[i]);
        let phi = phase(k, x, t);
        if phi > T::zero() {
            let m = b.modulus();
            d[i] = (-lit::<T>(2.0) * phi).exp() / (m * m);
            rho[i] = -lit::<T>(2.0) * k;
            w[i] = b / m;
            log_scale += lit::<T>(2.0) * (phi + m.ln());
            scale_slope += lit::<T>(2.0) * k;
        } else {
            kappa[i] = k;
            w[i] = b * phi.exp();
        }
    }
    let k = &spec.k;
    let build = |p: i32| {
        CMat::from_fn(n, n, |i, j| {
            let g = w[i] * w[j].conj() / (k[i] + k[j]) * (kappa[i] + kappa[j]).powi(p);
            if i == j {
                g + d[i] * rho[i].powi(p)
            } else {
                g
            }
        })
    };
    Shifted {
        y: build(0),
        dy: build(1),
        ddy: build(2),
        log_scale,
        scale_slope,
    }
}

/// `q = −2[tr(Y⁻¹Y″) − tr((Y⁻¹Y′)²)]`, evaluated without overflow on wide grids.
pub fn q_soliton<T: Real>(spec: &SolitonSpec<T>, x: T, t: T) -> Result<T> {
    let s = shifted(spec, x, t);
    let f = Factored::new(s.y, x, t)?;
    let p = f.solve(&s.dy);
    let pp = f.solve(&s.ddy);
    let v = (pp.trace() - (&p * &p).trace()) * lit::<T>(-2.0);
    real(v, "q")
}

/// `β = −∂ₓ log τ = −tr(Y⁻¹Y′) − 2Σₚ kᵢ`.
pub fn beta_soliton<T: Real>(spec: &SolitonSpec<T>, x: T, t: T) -> Result<T> {
    let s = shifted(spec, x, t);
    let slope = s.scale_slope;
    let f = Factored::new(s.y, x, t)?;
    real(-f.solve(&s.dy).trace(), "beta").map(|b| b - slope)
}

/// `log τ`; finite wherever the exponents are.
pub fn log_tau_soliton<T: Real>(spec: &SolitonSpec<T>, x: T, t: T) -> Result<T> {
    let s = shifted(spec, x, t);
    let f = Factored::new(s.y, x, t)?;
    let (log_abs, _) = f.log_abs_det();
    Ok(log_abs + s.log_scale)
}

fn real<T: Real>(v: Cx<T>, quantity: &'static str) -> Result<T> {
    if v.im.abs() > T::tol(1e-10) * (T::one() + v.re.abs()) {
        return Err(VesselError::ImaginaryResidue {
            quantity,
            residue: to_f64(v.im),
        });
    }
    Ok(v.re)
}

/// `−2k² sech²(kx + k³t + ½ ln c)`.
pub fn one_soliton_reference<T: Real>(k: T, c: T, x: T, t: T) -> T {
    let z = (k * x + k * k * k * t + c.ln() / lit(2.0)).abs();
    let e = (-lit::<T>(2.0) * z).exp();
    let sech2 = lit::<T>(4.0) * e / ((T::one() + e) * (T::one() + e));
    -lit::<T>(2.0) * k * k * sech2
}
