//! Sturm–Liouville vessel parameters, the finite-dimensional vessel model and
//! the algebraic/differential condition checks shared by every construction.
//!
//! A vessel is the triple `(A, B(x,t), X(x,t))` on `Cⁿ` together with the
//! constant 2×2 matrices `σ₁, σ₂, γ`. The conditions verified here are
//!
//! ```text
//! ∂ₓ(Bσ₁) + ABσ₂ + Bγ = 0                      translation of B
//! ∂ₓX = Bσ₂B*                                  translation of X
//! AX + XA* + Bσ₁B* = 0                         Lyapunov identity
//! ∂ₜB = iA∂ₓB                                  evolution of B
//! ∂ₜX = iABσ₂B* − iBσ₂B*A* + iBγB*             evolution of X
//! tr(σ₁B*X⁻¹B) = 0                             normalization
//! ```

use nalgebra::{Complex, ComplexField, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VesselError};
use crate::linalg::{hermitian_part, Factored};
use crate::scalar::{cx, imag_unit, lit, re, to_f64, CMat, Couplings, Cx, Mat2, Real};
use crate::stencil::{Accuracy, Stencil};
use crate::verify::Grid1D;
use crate::{soliton, spectral};

/// The constant matrices of the Sturm–Liouville vessel class.
#[derive(Debug, Clone, PartialEq)]
pub struct SlParameters<T: Real> {
    pub sigma1: Mat2<T>,
    pub sigma2: Mat2<T>,
    pub gamma: Mat2<T>,
}

/// `σ₁ = [[0,1],[1,0]]`, `σ₂ = [[1,0],[0,0]]`, `γ = [[0,0],[0,i]]`.
pub fn sl_parameters<T: Real>() -> SlParameters<T> {
    let o = Cx::<T>::new(T::zero(), T::zero());
    let l = Cx::<T>::new(T::one(), T::zero());
    SlParameters {
        sigma1: Mat2::new(o, l, l, o),
        sigma2: Mat2::new(l, o, o, o),
        gamma: Mat2::new(o, o, o, imag_unit()),
    }
}

/// Guard tolerances used during evaluation. Values are requested in double
/// precision and widened by [`Real::tol`] for lower precisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed `‖X − X*‖ / (1 + ‖X‖)` before symmetrization.
    pub hermitian: f64,
    /// Allowed imaginary residue of quantities that must be real.
    pub imaginary: f64,
    /// Relative cutoff below which an eigenvalue of X counts as zero.
    pub inertia_cutoff: f64,
    /// Normalized Lyapunov residual accepted by constructor self-checks.
    pub self_check: f64,
    /// Lyapunov residual accepted for the initial data of the standard construction.
    pub construction_precondition: f64,
    /// Lyapunov residual accepted along a tabulated standard construction.
    pub construction_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            imaginary: 1e-10,
            inertia_cutoff: 1e-12,
            self_check: 1e-12,
            construction_precondition: 1e-10,
            construction_drift: 1e-8,
        }
    }
}

/// Options shared by the closed-form constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Verify the Lyapunov identity at 50 probe points after construction.
    pub self_check: bool,
    pub tolerances: Tolerances,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            self_check: true,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VesselKind {
    Soliton,
    Discrete,
    Quadrature,
    Tabulated,
}

/// Closed-form or tabulated generators of `B(x,t)` and `X(x,t)`.
#[derive(Debug, Clone)]
pub(crate) enum Generator<T: Real> {
    /// `B` rows `e^{kx+k³t} b (1, ik)`.
    Exponential {
        k: Vec<T>,
        b: Vec<Cx<T>>,
    },
    /// `B` rows `b (sin θ / k, i cos θ)` with `θ = kx − k³t`.
    Oscillatory {
        k: Vec<T>,
        b: Vec<Cx<T>>,
    },
    Tabulated(Tabulation<T>),
}

/// Samples of `B` and `X` on a uniform x-grid at a fixed time, together with
/// their exact x-derivatives for cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub(crate) struct Tabulation<T: Real> {
    grid: Grid1D<T>,
    t_ref: T,
    b: Vec<Couplings<T>>,
    db: Vec<Couplings<T>>,
    op: Vec<CMat<T>>,
    dop: Vec<CMat<T>>,
}

impl<T: Real> Tabulation<T> {
    fn locate(&self, x: T, t: T) -> Result<(usize, T)> {
        let out = || VesselError::OutOfDomain {
            x: to_f64(x),
            t: to_f64(t),
        };
        if t != self.t_ref || x < self.grid.min() || x > self.grid.max() {
            return Err(out());
        }
        let h = self.grid.step();
        let n = self.grid.len();
        let pos = (x - self.grid.min()) / h;
        let i = pos.floor().to_usize().ok_or_else(out)?.min(n - 2);
        Ok((i, pos - T::from_usize(i).unwrap()))
    }

    fn hermite<M>(s: T, h: T, p0: &M, m0: &M, p1: &M, m1: &M) -> M
    where
        M: Clone + std::ops::Add<Output = M> + std::ops::Mul<Complex<T>, Output = M>,
    {
        let two: T = lit(2.0);
        let three: T = lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        p0.clone() * re(h00) + m0.clone() * re(h10 * h) + p1.clone() * re(h01) + m1.clone() * re(h11 * h)
    }

    fn couplings(&self, x: T, t: T) -> Result<Couplings<T>> {
        let (i, s) = self.locate(x, t)?;
        let h = self.grid.step();
        Ok(Self::hermite(
            s,
            h,
            &self.b[i],
            &self.db[i],
            &self.b[i + 1],
            &self.db[i + 1],
        ))
    }

    fn operator(&self, x: T, t: T) -> Result<CMat<T>> {
        let (i, s) = self.locate(x, t)?;
        let h = self.grid.step();
        Ok(Self::hermite(
            s,
            h,
            &self.op[i],
            &self.dop[i],
            &self.op[i + 1],
            &self.dop[i + 1],
        ))
    }
}

/// A finite-dimensional vessel realization on `Cⁿ`.
///
/// Immutable after construction and safe to share between threads.
#[derive(Debug, Clone)]
pub struct FiniteVessel<T: Real> {
    kind: VesselKind,
    a: CMat<T>,
    spectrum: Vec<Cx<T>>,
    reference: CMat<T>,
    reference_det: Cx<T>,
    generator: Generator<T>,
    tol: Tolerances,
}

impl<T: Real> FiniteVessel<T> {
    pub(crate) fn from_parts(
        kind: VesselKind,
        a: CMat<T>,
        spectrum: Vec<Cx<T>>,
        reference: CMat<T>,
        generator: Generator<T>,
    ) -> Result<Self> {
        let zero = T::zero();
        let reference_det = Factored::new(reference.clone(), zero, zero)?.determinant();
        Ok(Self {
            kind,
            a,
            spectrum,
            reference,
            reference_det,
            generator,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn kind(&self) -> VesselKind {
        self.kind
    }

    /// The main operator `A`.
    pub fn a(&self) -> &CMat<T> {
        &self.a
    }

    /// Eigenvalues of `A`; the poles of the transfer function.
    pub fn spectrum(&self) -> &[Cx<T>] {
        &self.spectrum
    }

    /// The reference `X₀` used to normalize the tau function.
    pub fn reference(&self) -> &CMat<T> {
        &self.reference
    }

    /// Whether the vessel can be evaluated away from a single time slice.
    pub fn supports_time(&self) -> bool {
        !matches!(self.generator, Generator::Tabulated(_))
    }

    pub(crate) fn generator(&self) -> &Generator<T> {
        &self.generator
    }

    /// `B(x, t)`.
    pub fn couplings(&self, x: T, t: T) -> Result<Couplings<T>> {
        match &self.generator {
            Generator::Exponential { k, b } => Ok(soliton::exponential_couplings(k, b, x, t)),
            Generator::Oscillatory { k, b } => Ok(spectral::oscillatory_couplings(k, b, x, t)),
            Generator::Tabulated(tab) => tab.couplings(x, t),
        }
    }

    /// `X(x, t)` as produced by the generator (not symmetrized).
    pub fn operator(&self, x: T, t: T) -> Result<CMat<T>> {
        match &self.generator {
            Generator::Exponential { k, b } => Ok(soliton::exponential_operator(k, b, x, t)),
            Generator::Oscillatory { k, b } => Ok(spectral::oscillatory_operator(k, b, x, t)),
            Generator::Tabulated(tab) => tab.operator(x, t),
        }
    }

    /// `X(x, t)` replaced by its Hermitian part after checking the discarded
    /// asymmetry.
    pub fn hermitian_operator(&self, x: T, t: T) -> Result<CMat<T>> {
        let raw = self.operator(x, t)?;
        let (herm, asym) = hermitian_part(&raw);
        let scale = T::one() + herm.norm();
        if asym > T::tol(self.tol.hermitian) * scale {
            return Err(VesselError::NotHermitian {
                x: to_f64(x),
                t: to_f64(t),
                asymmetry: to_f64(asym / scale),
            });
        }
        Ok(herm)
    }

    pub(crate) fn factor(&self, x: T, t: T) -> Result<(Couplings<T>, Factored<T>)> {
        let b = self.couplings(x, t)?;
        let op = self.hermitian_operator(x, t)?;
        Ok((b, Factored::new(op, x, t)?))
    }

    /// `B*X⁻¹B` at `(x, t)`.
    pub fn moment_zero(&self, x: T, t: T) -> Result<Mat2<T>> {
        let (b, f) = self.factor(x, t)?;
        Ok(b.adjoint() * f.solve(&b))
    }

    /// Evaluates every derived quantity at `(x, t)`.
    pub fn evaluate(&self, x: T, t: T) -> Result<EvaluatedState<T>> {
        let b = self.couplings(x, t)?;
        let op = self.hermitian_operator(x, t)?;
        let f = Factored::new(op.clone(), x, t)?;
        let op_inv = f.inverse();
        let gram = b.adjoint() * &op_inv * &b;
        let gamma_star = gamma_star_from(&gram);
        let beta = real_part_checked(-gram[(0, 0)], self.tol.imaginary, "beta")?;
        let (log_abs, phase) = f.log_abs_det();
        let (ref_log, ref_phase) = (
            self.reference_det.modulus().ln(),
            self.reference_det / re(self.reference_det.modulus()),
        );
        let log_tau = LogTau::from_phase(log_abs - ref_log, phase / ref_phase, self.tol.imaginary)?;
        Ok(EvaluatedState {
            x,
            t,
            b,
            xop: op,
            xop_inv: op_inv,
            gamma_star,
            beta,
            tau: log_tau.value(),
            log_tau,
        })
    }
}

/// `(ln|τ|, sign τ)`; the log-domain form of the tau function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTau<T: Real> {
    pub log_abs: T,
    pub sign: i8,
}

impl<T: Real> LogTau<T> {
    fn from_phase(log_abs: T, phase: Cx<T>, imag_tol: f64) -> Result<Self> {
        if phase.im.abs() > T::tol(imag_tol) {
            return Err(VesselError::ImaginaryResidue {
                quantity: "tau",
                residue: to_f64(phase.im),
            });
        }
        Ok(Self {
            log_abs,
            sign: if phase.re < T::zero() { -1 } else { 1 },
        })
    }

    /// `sign · exp(log_abs)`; infinite when τ is beyond the exponent range.
    pub fn value(&self) -> T {
        let m = self.log_abs.exp();
        if self.sign < 0 {
            -m
        } else {
            m
        }
    }
}

/// Derived quantities of a vessel at one point, cached for reuse.
#[derive(Debug, Clone)]
pub struct EvaluatedState<T: Real> {
    pub x: T,
    pub t: T,
    pub b: Couplings<T>,
    /// `X(x,t)`, symmetrized.
    pub xop: CMat<T>,
    pub xop_inv: CMat<T>,
    pub gamma_star: Mat2<T>,
    pub beta: T,
    /// May be infinite; `log_tau` is always finite.
    pub tau: T,
    pub log_tau: LogTau<T>,
}

fn real_part_checked<T: Real>(v: Cx<T>, tol: f64, quantity: &'static str) -> Result<T> {
    if v.im.abs() > T::tol(tol) * (T::one() + v.re.abs()) {
        return Err(VesselError::ImaginaryResidue {
            quantity,
            residue: to_f64(v.im),
        });
    }
    Ok(v.re)
}

fn gamma_star_from<T: Real>(gram: &Mat2<T>) -> Mat2<T> {
    let p = sl_parameters::<T>();
    p.gamma + p.sigma2 * gram * p.sigma1 - p.sigma1 * gram * p.sigma2
}

/// Output parameter `γ* = γ + σ₂B*X⁻¹Bσ₁ − σ₁B*X⁻¹Bσ₂`.
///
/// For a vessel the result has the shape `[[−i(β′−β²), −β], [β, i]]`.
pub fn linkage_gamma_star<T: Real>(b: &Couplings<T>, xop_inv: &CMat<T>) -> Mat2<T> {
    gamma_star_from(&(b.adjoint() * xop_inv * b))
}

/// `β = −[1 0] B*X⁻¹B [1 0]ᵀ`, rejected if its imaginary part exceeds 1e-10.
pub fn beta_of_state<T: Real>(b: &Couplings<T>, xop_inv: &CMat<T>) -> Result<T> {
    let col = b.column(0);
    let v = -(col.adjoint() * xop_inv * col)[(0, 0)];
    real_part_checked(v, Tolerances::default().imaginary, "beta")
}

/// `τ(x,t) = det(X₀⁻¹ X(x,t))`.
pub fn tau<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T) -> Result<T> {
    let lt = log_tau(vessel, x, t)?;
    let v = lt.value();
    if !v.is_finite() {
        return Err(VesselError::TauOverflow {
            x: to_f64(x),
            t: to_f64(t),
        });
    }
    Ok(v)
}

/// Log-magnitude and sign of τ, computed from the LU pivots.
pub fn log_tau<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T) -> Result<LogTau<T>> {
    let (_, f) = vessel.factor(x, t)?;
    let (log_abs, phase) = f.log_abs_det();
    let rd = vessel.reference_det;
    LogTau::from_phase(
        log_abs - rd.modulus().ln(),
        phase / (rd / re(rd.modulus())),
        vessel.tol.imaginary,
    )
}

/// `‖AX + XA* + Bσ₁B*‖ / (1 + ‖X‖)`.
pub fn lyapunov_residual<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T) -> Result<T> {
    let b = vessel.couplings(x, t)?;
    let op = vessel.operator(x, t)?;
    Ok(lyapunov_residual_of(&vessel.a, &b, &op))
}

pub(crate) fn lyapunov_residual_of<T: Real>(a: &CMat<T>, b: &Couplings<T>, op: &CMat<T>) -> T {
    let s1 = sl_parameters::<T>().sigma1;
    let r = a * op + op * a.adjoint() + b * s1 * b.adjoint();
    r.norm() / (T::one() + op.norm())
}

/// `|tr(σ₁B*X⁻¹B)|`.
pub fn normalization_residual<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T) -> Result<T> {
    let gram = vessel.moment_zero(x, t)?;
    Ok((sl_parameters::<T>().sigma1 * gram).trace().modulus())
}

/// `∂ₓB` implied by the translation condition: `−(ABσ₂ + Bγ)σ₁`.
pub fn translation_rhs<T: Real>(a: &CMat<T>, b: &Couplings<T>) -> Couplings<T> {
    let p = sl_parameters::<T>();
    -(a * b * p.sigma2 + b * p.gamma) * p.sigma1
}

/// `q = −2∂ₓ² log τ = −2[tr(X⁻¹X″) − tr((X⁻¹X′)²)]` with `X′ = Bσ₂B*` and
/// `X″ = B′σ₂B* + Bσ₂B′*`, `B′` taken from the translation condition.
pub fn potential<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T) -> Result<T> {
    let p = sl_parameters::<T>();
    let (b, f) = vessel.factor(x, t)?;
    let db = translation_rhs(&vessel.a, &b);
    let d1 = &b * p.sigma2 * b.adjoint();
    let d2 = &db * p.sigma2 * b.adjoint() + &b * p.sigma2 * db.adjoint();
    let m1 = f.solve(&d1);
    let m2 = f.solve(&d2);
    let v = (m2.trace() - (&m1 * &m1).trace()) * lit::<T>(-2.0);
    real_part_checked(v, vessel.tol.imaginary, "q")
}

/// Residual norms of every vessel condition at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport<T: Real> {
    pub r_db: T,
    pub r_dx: T,
    /// `None` for vessels that live on a single time slice.
    pub r_dbt: Option<T>,
    pub r_dxt: Option<T>,
    pub r_lyapunov: T,
    pub r_normalization: T,
    pub h: T,
}

impl<T: Real> ResidualReport<T> {
    /// The finite-difference residuals, labelled.
    pub fn differential(&self) -> Vec<(&'static str, T)> {
        let mut v = vec![("DB", self.r_db), ("DX", self.r_dx)];
        if let Some(r) = self.r_dbt {
            v.push(("DBt", r));
        }
        if let Some(r) = self.r_dxt {
            v.push(("DXt", r));
        }
        v
    }
}

/// Residuals of all four differential conditions with 5-point centered
/// differences of step `h`.
pub fn evolution_residuals<T: Real>(vessel: &FiniteVessel<T>, x: T, t: T, h: T) -> Result<ResidualReport<T>> {
    evolution_residuals_with(vessel, x, t, h, Accuracy::Fourth)
}

pub fn evolution_residuals_with<T: Real>(
    vessel: &FiniteVessel<T>,
    x: T,
    t: T,
    h: T,
    accuracy: Accuracy,
) -> Result<ResidualReport<T>> {
    if !(h > T::zero()) {
        return Err(VesselError::invalid("h", "finite-difference step must be positive"));
    }
    let p = sl_parameters::<T>();
    let d1 = Stencil::centered(1, accuracy)?;
    let a = &vessel.a;
    let a_adj = a.adjoint();
    let i = imag_unit::<T>();

    let b = vessel.couplings(x, t)?;
    let op = vessel.operator(x, t)?;
    let db_dx: Couplings<T> = d1.apply(x, h, |s| vessel.couplings(s, t))?;
    let dx_dx: CMat<T> = d1.apply(x, h, |s| vessel.operator(s, t))?;

    let bs2b = &b * p.sigma2 * b.adjoint();
    let r_db = (&db_dx * p.sigma1 + a * &b * p.sigma2 + &b * p.gamma).norm();
    let r_dx = (&dx_dx - &bs2b).norm();

    let (r_dbt, r_dxt) = if vessel.supports_time() {
        let db_dt: Couplings<T> = d1.apply(t, h, |s| vessel.couplings(x, s))?;
        let dx_dt: CMat<T> = d1.apply(t, h, |s| vessel.operator(x, s))?;
        let r_dbt = (&db_dt - a * &db_dx * i).norm();
        let rhs = (a * &bs2b - &bs2b * &a_adj + &b * p.gamma * b.adjoint()) * i;
        (Some(r_dbt), Some((dx_dt - rhs).norm()))
    } else {
        (None, None)
    };

    Ok(ResidualReport {
        r_db,
        r_dx,
        r_dbt,
        r_dxt,
        r_lyapunov: lyapunov_residual_of(a, &b, &op),
        r_normalization: normalization_residual(vessel, x, t)?,
        h,
    })
}

/// Numbers of positive and negative eigenvalues of a Hermitian operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VesselClass {
    Dissipative,
    Pontryagin { kappa: usize },
}

impl Inertia {
    pub fn class(&self) -> VesselClass {
        if self.negative == 0 {
            VesselClass::Dissipative
        } else {
            VesselClass::Pontryagin { kappa: self.negative }
        }
    }
}

/// Inertia of `X`; eigenvalues below `1e-12·‖X‖` make the classification
/// undefined and are reported as an error.
pub fn inertia<T: Real>(xop: &CMat<T>) -> Result<Inertia> {
    let tol = Tolerances::default();
    let (herm, asym) = hermitian_part(xop);
    if asym > T::tol(tol.hermitian) * (T::one() + herm.norm()) {
        return Err(VesselError::Precondition(format!(
            "inertia requires a Hermitian operator (asymmetry {:e})",
            to_f64(asym)
        )));
    }
    let eig = SymmetricEigen::new(herm).eigenvalues;
    let spectral_norm = eig.iter().fold(T::zero(), |m, e| m.max(e.abs()));
    let cutoff = T::tol(tol.inertia_cutoff) * spectral_norm;
    let mut out = Inertia {
        positive: 0,
        negative: 0,
    };
    for e in eig.iter() {
        if e.abs() <= cutoff {
            return Err(VesselError::NearSingular {
                min_abs: to_f64(e.abs()),
                cutoff: to_f64(cutoff),
            });
        }
        if *e > T::zero() {
            out.positive += 1;
        } else {
            out.negative += 1;
        }
    }
    Ok(out)
}

/// Builds a vessel from initial data `(A, B₀, X₀)` at `x_ref` by integrating
/// the translation condition for `B` and `∂ₓX = Bσ₂B*` with classical RK4 on
/// `grid`. The result is tabulated at time 0 and interpolated between nodes by
/// cubic Hermite polynomials using the exact derivatives.
pub fn integrate_standard_construction<T: Real>(
    a: &CMat<T>,
    b0: &Couplings<T>,
    x0: &CMat<T>,
    x_ref: T,
    grid: &Grid1D<T>,
) -> Result<FiniteVessel<T>> {
    let n = a.nrows();
    if a.ncols() != n || b0.nrows() != n || x0.nrows() != n || x0.ncols() != n {
        return Err(VesselError::IndexMismatch {
            what: "standard construction operands",
            expected: n,
            got: b0.nrows().min(x0.nrows()),
        });
    }
    let tol = Tolerances::default();
    let (x0h, asym) = hermitian_part(x0);
    if asym > T::tol(tol.hermitian) * (T::one() + x0h.norm()) {
        return Err(VesselError::Precondition("X₀ must be Hermitian".into()));
    }
    Factored::new(x0h.clone(), x_ref, T::zero())?;
    let lyap = lyapunov_residual_of(a, b0, &x0h);
    if lyap > T::tol(tol.construction_precondition) {
        return Err(VesselError::Precondition(format!(
            "AX₀ + X₀A* + B₀σ₁B₀* = 0 violated (normalized residual {:e})",
            to_f64(lyap)
        )));
    }
    let h = grid.step();
    let ref_index = grid
        .node_index(x_ref)
        .ok_or_else(|| VesselError::Precondition(format!("x_ref = {} is not a grid node", to_f64(x_ref))))?;

    let p = sl_parameters::<T>();
    let rhs = |b: &Couplings<T>| -> (Couplings<T>, CMat<T>) { (translation_rhs(a, b), b * p.sigma2 * b.adjoint()) };
    let rk4 = |b: &Couplings<T>, op: &CMat<T>, step: T| -> (Couplings<T>, CMat<T>) {
        let half = Complex::new(step / lit(2.0), T::zero());
        let full = Complex::new(step, T::zero());
        let sixth = Complex::new(step / lit(6.0), T::zero());
        let two = Complex::new(lit::<T>(2.0), T::zero());
        let (k1b, k1x) = rhs(b);
        let (k2b, k2x) = rhs(&(b + &k1b * half));
        let (k3b, k3x) = rhs(&(b + &k2b * half));
        let (k4b, k4x) = rhs(&(b + &k3b * full));
        (
            b + (k1b + k2b * two + k3b * two + k4b) * sixth,
            op + (k1x + k2x * two + k3x * two + k4x) * sixth,
        )
    };

    let len = grid.len();
    let mut bs: Vec<Option<Couplings<T>>> = vec![None; len];
    let mut ops: Vec<Option<CMat<T>>> = vec![None; len];
    bs[ref_index] = Some(b0.clone());
    ops[ref_index] = Some(x0h.clone());
    for i in ref_index + 1..len {
        let (b, op) = rk4(bs[i - 1].as_ref().unwrap(), ops[i - 1].as_ref().unwrap(), h);
        bs[i] = Some(b);
        ops[i] = Some(op);
    }
    for i in (0..ref_index).rev() {
        let (b, op) = rk4(bs[i + 1].as_ref().unwrap(), ops[i + 1].as_ref().unwrap(), -h);
        bs[i] = Some(b);
        ops[i] = Some(op);
    }
    let bs: Vec<Couplings<T>> = bs.into_iter().map(Option::unwrap).collect();
    let ops: Vec<CMat<T>> = ops.into_iter().map(Option::unwrap).collect();

    for (i, (b, op)) in bs.iter().zip(&ops).enumerate() {
        let xi = grid.node(i);
        let drift = lyapunov_residual_of(a, b, op);
        if drift > T::tol(tol.construction_drift) {
            return Err(VesselError::InvariantDrift(format!(
                "Lyapunov residual {:e} at x = {}",
                to_f64(drift),
                to_f64(xi)
            )));
        }
        Factored::new(op.clone(), xi, T::zero())?;
    }

    let db = bs.iter().map(|b| translation_rhs(a, b)).collect();
    let dop = bs.iter().map(|b| b * p.sigma2 * b.adjoint()).collect();
    let spectrum = eigenvalues(a);
    FiniteVessel::from_parts(
        VesselKind::Tabulated,
        a.clone(),
        spectrum,
        x0h,
        Generator::Tabulated(Tabulation {
            grid: *grid,
            t_ref: T::zero(),
            b: bs,
            db,
            op: ops,
            dop,
        }),
    )
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub(crate) fn eigenvalues<T: Real>(a: &CMat<T>) -> Vec<Cx<T>> {
    let n = a.nrows();
    let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == cx(T::zero(), T::zero())));
    if is_diag {
        return (0..n).map(|i| a[(i, i)]).collect();
    }
    let (_, tri) = nalgebra::linalg::Schur::new(a.clone()).unpack();
    (0..n).map(|i| tri[(i, i)]).collect()
}

/// Deterministic low-discrepancy points in `[x_lo, x_hi] × [t_lo, t_hi]`.
pub(crate) fn probe_points<T: Real>(count: usize, x_span: (T, T), t_span: (T, T)) -> Vec<(T, T)> {
    // R2 sequence constants: 1/g and 1/g² for the plastic number g.
    let a1 = 0.754_877_666_246_692_7_f64;
    let a2 = 0.569_840_290_998_053_3_f64;
    (1..=count)
        .map(|j| {
            let u = (0.5 + a1 * j as f64).fract();
            let v = (0.5 + a2 * j as f64).fract();
            (
                x_span.0 + (x_span.1 - x_span.0) * lit(u),
                t_span.0 + (t_span.1 - t_span.0) * lit(v),
            )
        })
        .collect()
}

/// Constructor self-check: the Lyapunov identity at `count` probe points.
pub(crate) fn self_check<T: Real>(vessel: &FiniteVessel<T>, x_span: (T, T), t_span: (T, T)) -> Result<()> {
    for (x, t) in probe_points(50, x_span, t_span) {
        let r = lyapunov_residual(vessel, x, t)?;
        if !(r <= T::tol(vessel.tol.self_check)) {
            return Err(VesselError::InvariantDrift(format!(
                "Lyapunov residual {:e} at (x, t) = ({}, {})",
                to_f64(r),
                to_f64(x),
                to_f64(t)
            )));
        }
    }
    Ok(())
}
