//! Pseudospectral simulation and verification toolkit for the Burgers–Hilbert
//! equation `u_t + u uₓ = H[u]` on the 2π-periodic torus.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: grid and Fourier representations, the Hilbert transform,
//!   derivatives, dealiased products and norms;
//! - [`solver`]: integrating-factor RK4 time stepping and breakdown detection;
//! - [`energies`]: the normal form, the operator `T_u` and the modified energy `E_k`;
//! - [`linearized`]: the linearized flow and its modified energy `E_lin`;
//! - [`experiments`]: lifespan sweeps, drift-scaling studies and stability runs;
//! - [`verify`]: the identity battery run by `bh verify`.

pub mod diagnostics;
pub mod energies;
pub mod experiments;
pub mod fields;
mod integrator;
pub mod linearized;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use diagnostics::{DiagnosticsRecord, NullSink, RecordSink};
pub use fields::Profile;
pub use solver::{
    simulate, simulate_observed, BreakdownCause, BreakdownVerdict, EvolutionConfig, SolverError, SolverState,
};
pub use spectral::{GridField, SpectrumField};
