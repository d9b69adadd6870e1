//! Sparse multimode Fock-space simulation of a three-laser
//! pair-interference experiment: two attenuated lasers on beam splitters,
//! a weakly pumped down-conversion crystal feeding the same rails, and a
//! post-selection that keeps exactly one photon per side. When the source
//! amplitudes satisfy the cancellation condition the surviving two-photon
//! state exhibits Hardy-type detection statistics.
//!
//! Layers, bottom up:
//! - [`fock`]: mode registry, occupation-number basis, sparse states.
//! - [`optics`]: beam splitters, mirrors, down-conversion (first-order
//!   and exact), relabeling.
//! - [`pipeline`]: the staged experiment with residual tracking.
//! - [`analysis`]: noise-sector ratios, conditional states, an
//!   independent expansion oracle, scan fitting.
//! - [`dsl`]: a small circuit language that lowers onto the same
//!   operators.

pub mod analysis;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod fock;
pub mod optics;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
pub use fock::{FockBasisState, ModeId, ModeSet, QuantumState};
