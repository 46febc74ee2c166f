//! Conditional (no-jump) dynamics and real-time emission spectra of a
//! two-level atom coupled to an optomechanical cavity.
//!
//! The library works in the single-excitation sector spanned by
//! `|e,0,m>` (atom excited, empty cavity, `m` phonons) and `|g,1,m>`
//! (one cavity photon, `m` phonons), with all frequencies in units of
//! the mechanical frequency and times in its inverse.
//!
//! The main pipeline is:
//!
//! 1. [`SystemParams`] — physical rates and couplings,
//! 2. [`build_h_nh`] / [`build_h_dnh`] — non-Hermitian no-jump generators,
//! 3. [`decompose`] + [`PropagatorCache`] — exact time evolution,
//! 4. [`spectrum`] — filtered photon-counting spectra `N(t; Δ, Γ)`,
//! 5. [`dressed`] — dressed levels and the transition table that predicts
//!    peak locations and relative heights.

pub mod basis;
pub mod dressed;
pub mod error;
pub mod hamiltonian;
mod linalg;
pub mod model;
mod numeric;
mod par;
pub mod propagator;
pub mod spectrum;

pub use basis::{basis_dim, make_initial_state, BasisIndex, Branch, PureState};
pub use error::Error;
pub use hamiltonian::{
    build_h_dnh, build_h_nh, build_h_sys, jump_operator, JumpChannel, MatrixKind, OperatorMatrix,
};
pub use model::{validate, Diagnostic, Severity, SystemParams};
pub use propagator::{decompose, flux_ledger, AmplitudeSeries, FluxLedger, PropagatorCache};
pub use spectrum::{
    correlation_kernel, ew_counts_closed, ew_counts_quadrature, find_peaks, spectrum_series,
    thermal_spectrum, thermal_weights, BranchMode, FilterSpec, Peak, PeakSet, SpectrumBackend,
    SpectrumOptions, SpectrumResult, ThermalWeights,
};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
