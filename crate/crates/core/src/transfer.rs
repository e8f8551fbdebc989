//! The transfer function `S(λ) = I − B*X⁻¹(λI − A)⁻¹Bσ₁`, its symmetry and
//! differential equation, the intertwining of Sturm–Liouville solutions,
//! the Markov moments and the Gelfand–Levitan kernels.

use nalgebra::{Complex, ComplexField};

use crate::error::{Result, VesselError};
use crate::linalg::Factored;
use crate::quadrature::{simpson_weights, uniform_nodes};
use crate::scalar::{cx, imag_unit, lit, re, to_f64, CMat, Couplings, Cx, Mat2, Real};
use crate::stencil::{Accuracy, Stencil};
use crate::verify::Grid1D;
use crate::vessel::{potential, sl_parameters, FiniteVessel};

/// Minimum distance from λ to an eigenvalue of `A`.
pub const POLE_GUARD: f64 = 1e-10;

/// `S(·, x, t)` with the factorization of `X(x,t)` cached for many λ.
pub struct TransferFunction<'a, T: Real> {
    vessel: &'a FiniteVessel<T>,
    b: Couplings<T>,
    /// `X⁻¹B`; its adjoint is `B*X⁻¹` because X is Hermitian.
    xinv_b: Couplings<T>,
}

impl<'a, T: Real> TransferFunction<'a, T> {
    pub fn new(vessel: &'a FiniteVessel<T>, x: T, t: T) -> Result<Self> {
        let (b, f) = vessel.factor(x, t)?;
        let xinv_b = f.solve(&b);
        Ok(Self { vessel, b, xinv_b })
    }

    fn check_pole(&self, lambda: Cx<T>) -> Result<()> {
        for e in self.vessel.spectrum() {
            let d = (lambda - *e).modulus();
            if d <= T::tol(POLE_GUARD) {
                return Err(VesselError::Pole {
                    re: to_f64(lambda.re),
                    im: to_f64(lambda.im),
                    eig_re: to_f64(e.re),
                    eig_im: to_f64(e.im),
                    distance: to_f64(d),
                });
            }
        }
        Ok(())
    }

    pub fn eval(&self, lambda: Cx<T>) -> Result<Mat2<T>> {
        self.check_pole(lambda)?;
        let n = self.vessel.dim();
        let shifted = CMat::<T>::identity(n, n) * lambda - self.vessel.a();
        let r = Factored::new(shifted, T::zero(), T::zero())?.solve(&self.b);
        let s1 = sl_parameters::<T>().sigma1;
        Ok(Mat2::identity() - self.xinv_b.adjoint() * r * s1)
    }

    /// `B*X⁻¹B`, the scale of `S − I` at infinity.
    pub fn gram(&self) -> Mat2<T> {
        self.b.adjoint() * &self.xinv_b
    }
}

pub fn eval_s<T: Real>(vessel: &FiniteVessel<T>, lambda: Cx<T>, x: T, t: T) -> Result<Mat2<T>> {
    TransferFunction::new(vessel, x, t)?.eval(lambda)
}

/// `‖S*(−λ̄)σ₁S(λ) − σ₁‖`.
pub fn symmetry_residual<T: Real>(vessel: &FiniteVessel<T>, lambda: Cx<T>, x: T, t: T) -> Result<T> {
    let tf = TransferFunction::new(vessel, x, t)?;
    let s1 = sl_parameters::<T>().sigma1;
    let s = tf.eval(lambda)?;
    let mirrored = tf.eval(-lambda.conj())?;
    Ok((mirrored.adjoint() * s1 * s - s1).norm())
}

/// `‖∂ₓS − σ₁(λσ₂ + γ*)S + Sσ₁(λσ₂ + γ)‖` with a second-order centered
/// difference of step `h`.
pub fn ds_residual<T: Real>(vessel: &FiniteVessel<T>, lambda: Cx<T>, x: T, t: T, h: T) -> Result<T> {
    ds_residual_with(vessel, lambda, x, t, h, Accuracy::Second)
}

pub fn ds_residual_with<T: Real>(
    vessel: &FiniteVessel<T>,
    lambda: Cx<T>,
    x: T,
    t: T,
    h: T,
    accuracy: Accuracy,
) -> Result<T> {
    let p = sl_parameters::<T>();
    let ds: Mat2<T> = Stencil::centered(1, accuracy)?.apply(x, h, |s| eval_s(vessel, lambda, s, t))?;
    let state = vessel.evaluate(x, t)?;
    let s = eval_s(vessel, lambda, x, t)?;
    let rhs = p.sigma1 * (p.sigma2 * lambda + state.gamma_star) * s - s * p.sigma1 * (p.sigma2 * lambda + p.gamma);
    Ok((ds - rhs).norm())
}

/// `max |−y₁″ + 2β′y₁ + iλy₁|` over the interior of `grid`, where `y = S(λ)u`
/// and `u = (e^{ωx}, −iωe^{ωx})` with `ω = √(iλ)` on the principal branch.
pub fn intertwining_residual<T: Real>(vessel: &FiniteVessel<T>, lambda: Cx<T>, grid: &Grid1D<T>, t: T) -> Result<T> {
    if grid.len() < 5 {
        return Err(VesselError::GridTooSmall(format!(
            "{} nodes; at least 5 required",
            grid.len()
        )));
    }
    let i = imag_unit::<T>();
    let omega = ComplexField::sqrt(i * lambda);
    let mut y1 = Vec::with_capacity(grid.len());
    let mut beta = Vec::with_capacity(grid.len());
    for x in grid.nodes() {
        let tf = TransferFunction::new(vessel, x, t)?;
        let s = tf.eval(lambda)?;
        let u1 = ComplexField::exp(omega * x);
        let u2 = -i * omega * u1;
        y1.push(s[(0, 0)] * u1 + s[(0, 1)] * u2);
        beta.push(-tf.gram()[(0, 0)].re);
    }
    let h = grid.step();
    let two: T = lit(2.0);
    let mut worst = T::zero();
    for k in 1..grid.len() - 1 {
        let ypp = (y1[k + 1] - y1[k] * two + y1[k - 1]) / (h * h);
        let bp = (beta[k + 1] - beta[k - 1]) / (two * h);
        let r = (-ypp + y1[k] * (two * bp) + i * lambda * y1[k]).modulus();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Markov moments `H_n = B*X⁻¹AⁿBσ₁`, the coefficients of
/// `S(λ) = I − Σ λ^{−n−1} H_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<T: Real> {
    pub h: Vec<Mat2<T>>,
}

impl<T: Real> MomentSequence<T> {
    /// `I − Σ_{n ≤ N} λ^{−n−1} H_n`.
    pub fn partial_sum(&self, lambda: Cx<T>) -> Mat2<T> {
        let mut s = Mat2::identity();
        let mut p = Complex::new(T::one(), T::zero()) / lambda;
        for h in &self.h {
            s -= h * p;
            p /= lambda;
        }
        s
    }
}

pub fn moments<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T, nmax: usize) -> Result<MomentSequence<T>> {
    let (b, f) = vessel.factor(x, t)?;
    let w = f.solve(&b).adjoint();
    let s1 = sl_parameters::<T>().sigma1;
    let mut c = b;
    let mut h = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        if n > 0 {
            c = vessel.a() * c;
        }
        h.push(&w * &c * s1);
    }
    Ok(MomentSequence { h })
}

/// Default step for x-derivatives of the moments.
pub const MOMENT_STEP: f64 = 1e-4;

/// Residuals of the four relations between `H_n`, `H_{n+1}` and β:
///
/// ```text
/// H_{n+1}¹² = iH_n²¹ − ∂H_n¹¹ + βH_n¹¹
/// H_{n+1}¹¹ − H_{n+1}²² = i(∂H_{n+1}¹² − βH_{n+1}¹²)
/// ∂(H¹¹ + H²²)_{n+1} = −i(β′ − β²)H_{n+1}¹² + β(H¹¹ − H²²)_{n+1}
/// 2i∂H_{n+1}²¹ = ∂²H_{n+1}¹¹ − 2β∂H_{n+1}¹¹
/// ```
pub fn moment_recursion_residuals<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T, n: usize, h: T) -> Result<[T; 4]> {
    let d1 = Stencil::centered(1, Accuracy::Second)?;
    let d2 = Stencil::centered(2, Accuracy::Second)?;
    let at = |s: T| -> Result<(Mat2<T>, Mat2<T>)> {
        let m = moments(vessel, s, t, n + 1)?;
        Ok((m.h[n], m.h[n + 1]))
    };
    let (hn, hm) = at(x)?;
    let dhn: Mat2<T> = d1.apply(x, h, |s| Ok(at(s)?.0))?;
    let dhm: Mat2<T> = d1.apply(x, h, |s| Ok(at(s)?.1))?;
    let ddhm: Mat2<T> = d2.apply(x, h, |s| Ok(at(s)?.1))?;
    let beta_at = |s: T| -> Result<T> { Ok(vessel.evaluate(s, t)?.beta) };
    let beta = beta_at(x)?;
    let dbeta = d1.apply_real(x, h, beta_at)?;
    let i = imag_unit::<T>();
    let two = re(lit::<T>(2.0));
    let (b, db) = (re(beta), re(dbeta));

    let r1 = hm[(0, 1)] - (i * hn[(1, 0)] - dhn[(0, 0)] + b * hn[(0, 0)]);
    let r2 = hm[(0, 0)] - hm[(1, 1)] - i * (dhm[(0, 1)] - b * hm[(0, 1)]);
    let r3 = dhm[(0, 0)] + dhm[(1, 1)] + i * (db - b * b) * hm[(0, 1)] - b * (hm[(0, 0)] - hm[(1, 1)]);
    let r4 = two * i * dhm[(1, 0)] - (ddhm[(0, 0)] - two * b * dhm[(0, 0)]);
    Ok([r1.modulus(), r2.modulus(), r3.modulus(), r4.modulus()])
}

/// Largest of the four recursion residuals.
pub fn moment_recursion_residual<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T, n: usize, h: T) -> Result<T> {
    Ok(moment_recursion_residuals(vessel, x, t, n, h)?
        .into_iter()
        .fold(T::zero(), |m, v| m.max(v)))
}

/// `Ω(x,y) = [B*(x)X⁻¹(x₀)B(y)]₁₁` and `K(x,y) = −[B*(x)X⁻¹(x)B(y)]₁₁`.
///
/// Both are real when the amplitudes are real; in general they are complex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlKernels<T: Real> {
    pub omega: Cx<T>,
    pub k: Cx<T>,
}

/// Gelfand–Levitan kernels on one time slice, with the two operator
/// factorizations cached.
pub struct GelfandLevitan<'a, T: Real> {
    vessel: &'a FiniteVessel<T>,
    t: T,
    /// Factorization of `X(x₀)`.
    x0: Factored<T>,
}

impl<'a, T: Real> GelfandLevitan<'a, T> {
    pub fn new(vessel: &'a FiniteVessel<T>, x0: T, t: T) -> Result<Self> {
        Ok(Self {
            vessel,
            t,
            x0: vessel.factor(x0, t)?.1,
        })
    }

    fn first_column(&self, x: T) -> Result<nalgebra::DVector<Cx<T>>> {
        Ok(self.vessel.couplings(x, self.t)?.column(0).into_owned())
    }

    pub fn omega(&self, x: T, y: T) -> Result<Cx<T>> {
        let (bx, by) = (self.first_column(x)?, self.first_column(y)?);
        Ok(bx.dotc(&self.x0.solve(&by)))
    }

    /// `K(x, ·)` evaluated at every `y` with one factorization of `X(x)`.
    pub fn k_row(&self, x: T, ys: &[T]) -> Result<Vec<Cx<T>>> {
        let (bx, f) = self.vessel.factor(x, self.t)?;
        let w = f.solve(&bx.column(0).into_owned());
        ys.iter().map(|y| Ok(-w.dotc(&self.first_column(*y)?))).collect()
    }

    pub fn kernels(&self, x: T, y: T) -> Result<GlKernels<T>> {
        Ok(GlKernels {
            omega: self.omega(x, y)?,
            k: self.k_row(x, &[y])?[0],
        })
    }

    /// `|K(x,y) + Ω(x,y) + ∫_{x₀}^x K(x,s)Ω(s,y) ds|` with composite Simpson
    /// on `nodes` uniform nodes.
    pub fn residual(&self, x0: T, x: T, y: T, nodes: usize) -> Result<T> {
        let w = simpson_weights(nodes, x - x0)?;
        let s = uniform_nodes(x0, x, nodes);
        let mut ys = s.clone();
        ys.push(y);
        let k = self.k_row(x, &ys)?;
        let mut acc = k[nodes] + self.omega(x, y)?;
        for j in 0..nodes {
            acc += k[j] * self.omega(s[j], y)? * w[j];
        }
        Ok(acc.modulus())
    }
}

pub fn gl_kernels<T: Real>(vessel: &FiniteVessel<T>, x0: T, x: T, y: T, t: T) -> Result<GlKernels<T>> {
    GelfandLevitan::new(vessel, x0, t)?.kernels(x, y)
}

/// Residual of the Gelfand–Levitan equation; requires `x > y`.
pub fn gl_residual<T: Real>(vessel: &FiniteVessel<T>, x0: T, x: T, y: T, nodes: usize, t: T) -> Result<T> {
    if !(x > y) {
        return Err(VesselError::Precondition(
            "Gelfand–Levitan residual requires x > y".into(),
        ));
    }
    GelfandLevitan::new(vessel, x0, t)?.residual(x0, x, y, nodes)
}

/// Both sign candidates for `q = ±2 d/dx K(x,x)`, and the one matching the
/// analytic potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QFromK<T: Real> {
    pub plus: T,
    pub minus: T,
    /// `+1` or `−1`: the sign whose candidate is closer to the reference.
    pub sign: i8,
    pub value: T,
    /// `−2∂ₓ² log τ` from the closed-form derivatives.
    pub reference: T,
}

pub fn q_from_k_diag<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T, h: T) -> Result<QFromK<T>> {
    let diag = |s: T| -> Result<T> {
        let gl = GelfandLevitan {
            vessel,
            t,
            x0: vessel.factor(s, t)?.1,
        };
        Ok(gl.k_row(s, &[s])?[0].re)
    };
    let d = Stencil::centered(1, Accuracy::Second)?.apply_real(x, h, diag)?;
    let two: T = lit(2.0);
    let (plus, minus) = (two * d, -two * d);
    let reference = potential(vessel, x, t)?;
    let sign: i8 = if (plus - reference).abs() <= (minus - reference).abs() {
        1
    } else {
        -1
    };
    Ok(QFromK {
        plus,
        minus,
        sign,
        value: if sign > 0 { plus } else { minus },
        reference,
    })
}

/// Deterministic λ avoiding the spectrum, used by doc examples and tests.
pub fn sample_lambda<T: Real>(modulus: f64, angle: f64) -> Cx<T> {
    cx(lit(modulus * angle.cos()), lit(modulus * angle.sin()))
}
