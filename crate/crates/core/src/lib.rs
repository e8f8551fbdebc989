//! Finite-dimensional evolutionary vessels realizing solutions of the KdV
//! equation `q_t = −(3/2) q q_x + (1/4) q_xxx`.
//!
//! A vessel is a triple `(A, B(x,t), X(x,t))` satisfying algebraic and
//! differential compatibility conditions; its tau function
//! `τ = det(X₀⁻¹X)` yields `β = −∂ₓ log τ` and the potential `q = 2∂ₓβ`.
//! The crate builds soliton, discrete-spectrum and quadrature vessels, and
//! checks every identity they are expected to satisfy: the vessel
//! conditions, the transfer function, Gelfand–Levitan kernels, moment
//! recursions, the coefficient evolution system and the KdV residual.
//!
//! All numerics are generic over [`Real`] (`f64` and `f32`); the `*F64`
//! aliases below name the double-precision instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod linalg;

pub mod error;
pub mod evolution;
pub mod quadrature;
pub mod scalar;
pub mod soliton;
pub mod spectral;
pub mod stencil;
pub mod suite;
pub mod transfer;
pub mod verify;
pub mod vessel;

pub use error::{Result, VesselError};
pub use scalar::{CMat, Couplings, Cx, Mat2, Real};
pub use soliton::{build_soliton, one_soliton_reference, q_soliton, tau_cauchy_3, SolitonSpec};
pub use spectral::{
    build_discrete_vessel, build_quadrature_vessel, DiscreteSpectrum, QuadratureSpectrum, SpectrumFlavor,
};
pub use stencil::Accuracy;
pub use verify::{Grid1D, Grid2D, SampledField};
pub use vessel::{
    evolution_residuals, inertia, lyapunov_residual, normalization_residual, sl_parameters, tau, EvaluatedState,
    FiniteVessel, ResidualReport, SlParameters, VesselKind,
};

pub type FiniteVesselF64 = vessel::FiniteVessel<f64>;
pub type FiniteVesselF32 = vessel::FiniteVessel<f32>;
pub type EvaluatedStateF64 = vessel::EvaluatedState<f64>;
pub type SolitonSpecF64 = soliton::SolitonSpec<f64>;
pub type SolitonSpecF32 = soliton::SolitonSpec<f32>;
pub type DiscreteSpectrumF64 = spectral::DiscreteSpectrum<f64>;
pub type QuadratureSpectrumF64 = spectral::QuadratureSpectrum<f64>;
pub type Grid2DF64 = verify::Grid2D<f64>;
pub type SampledFieldF64 = verify::SampledField<f64>;
pub type LatticeF64 = evolution::Lattice<f64>;
pub type BTrajectoryF64 = evolution::BTrajectory<f64>;
pub type MomentSequenceF64 = transfer::MomentSequence<f64>;
