//! Spectral feedback synthesis by Fredholm transformation.
//!
//! Given the eigenvalues and control coefficients of a diagonalizable system,
//! the crate picks a spectral shift `lambda`, computes feedback gains that
//! move every truncated eigenvalue by `-lambda`, builds the conjugating
//! transform `T`, checks the identities it must satisfy, and simulates the
//! closed loop (including a Burgers equation on the torus).
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod canonical;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod scalar;
pub mod simulate;
pub mod spectral;
pub mod synthesis;
pub mod transform;

pub use error::{Error, ErrorClass, Result};
pub use scalar::{Cx, Real};
pub use spectral::{
    branch_split, classify_controllability, sobolev_norm, verify_branch, verify_control, verify_gap, verify_growth,
    AssumptionVerdict, Classification, IntervalConvention, Regime, SpectralBranch, SpectralSystem, Tagged,
    VerifyOptions, WeightedNorm,
};

pub use diagnostics::{compactness_proxy, gain_trend, make_report, DiagnosticsReport, ReportInputs};
pub use models::{
    gribov_model, heat_torus_model, heat_torus_unit, schrodinger_model, sturm_liouville_model, ModelDescriptor,
};
pub use simulate::{
    fit_decay, simulate_burgers, simulate_closed_loop, simulate_target, BurgersInitial, DecayFit, Integrator,
    SimulationTrace,
};
pub use synthesis::{select_shift, synthesize, FeedbackLaw, IterativeOptions, Method};
pub use transform::{build_transform, closed_loop_matrix, spectrum_match_error, BranchTransform};

pub type SpectralBranch64 = SpectralBranch<f64>;
pub type SpectralSystem64 = SpectralSystem<f64>;
pub type SpectralBranch32 = SpectralBranch<f32>;
pub type SpectralSystem32 = SpectralSystem<f32>;
pub type FeedbackLaw64 = FeedbackLaw<f64>;
pub type FeedbackLaw32 = FeedbackLaw<f32>;
pub type SimulationTrace64 = SimulationTrace<f64>;
pub type SimulationTrace32 = SimulationTrace<f32>;
pub type BranchTransform64 = BranchTransform<f64>;
pub type BranchTransform32 = BranchTransform<f32>;
