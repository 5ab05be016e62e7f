//! Dynamical quantum phase transitions in the alternating-field transverse XY
//! chain with Dzyaloshinskii–Moriya interaction.
//!
//! The chain is
//!
//! ```text
//! H = 1/2 Σ_j [ (1+γ)/2 σˣⱼσˣⱼ₊₁ + (1−γ)/2 σʸⱼσʸⱼ₊₁
//!             + d/2 (σˣⱼσʸⱼ₊₁ − σʸⱼσˣⱼ₊₁) + (λ₁ + (−1)ʲ λ₂) σᶻⱼ ]
//! ```
//!
//! with periodic boundary conditions, in units J = ħ = 1. After a sudden quench
//! g₀ → g₁ the crate computes:
//!
//! * per-momentum Loschmidt amplitudes from 4×4 Bogoliubov frames
//!   ([`bdg`], [`loschmidt`]), the thermodynamic rate function and the
//!   critical times at which it turns nonanalytic;
//! * real-space Gaussian (covariance matrix) dynamics for large chains and the
//!   one- and two-site reduced density matrices that follow from Wick's theorem
//!   ([`realspace`]);
//! * negativity, generalized geometric measure and its time-averaged
//!   fluctuation ([`entanglement`]);
//! * an exact-diagonalization reference for chains of up to 12 sites ([`ed`])
//!   that every other engine is checked against ([`oracle`]).

pub mod bdg;
pub mod ed;
pub mod entanglement;
mod error;
pub mod linalg;
pub mod loschmidt;
pub mod model;
pub mod oracle;
pub mod realspace;

pub use error::{Error, Result};
pub use model::{CouplingSet, MomentumGrid, PhaseLabel, QuenchSpec};

pub use num_complex::Complex64 as C64;
