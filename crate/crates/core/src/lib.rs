//! Resonance-fluorescence spectra of a pulsed two-level emitter.
//!
//! The crate integrates the driven, damped two-level master equation
//! (optionally with a polaron-frame acoustic-phonon term), evaluates the
//! two-time dipole correlation through the quantum regression theorem, and
//! turns it into total, coherent and incoherent emission spectra.
//!
//! Units: ħ = 1, so energies are angular frequencies. Any consistent unit
//! system works; [`units`] converts from meV/ps/K.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cw;
pub mod drive;
pub mod error;
pub mod lindblad;
pub mod polaron;
pub mod quadrature;
pub mod quantum;
pub mod spectrum;
pub mod units;

pub use cw::{cw_steady_state, mollow_reference, transition_weights, CwSteadyState, MollowReference, TransitionWeights};
pub use drive::{dressed_states, hamiltonian, rabi_envelope, DressedState, PulseShape, PulseSpec};
pub use error::{Error, Result};
pub use lindblad::{evolve, regression_grid, CorrelationGrid, Propagator, SimConfig, TimeGrid, Trajectory};
pub use polaron::{PhononParams, PolaronModel};
pub use quantum::{DensityMatrix, Operator2};
pub use spectrum::{compute, find_peaks, sideband_weight_ratio, PeakSet, SpectrumResult, SpectrumRun};
