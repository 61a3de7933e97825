//! Finite-alphabet rate-distortion toolkit.
//!
//! * [`prob`]: distributions, test channels, information measures, majorization.
//! * [`distortion`]: distortion matrices, normalization, `D_max`.
//! * [`ba`]: Blahut-Arimoto solver (fixed slope, target distortion, sweeps,
//!   Lagrangian diagnostics).
//! * [`erasure`]: closed-form first segment of R(D) for the Hamming measure
//!   extended by two erasure symbols.
//! * [`lab`]: finite-scale constructions of perturbed problem pairs whose
//!   optimal test channels separate while their rates coincide.
//!
//! All information quantities are in nats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ba;
pub mod distortion;
pub mod erasure;
pub mod error;
pub mod lab;
pub mod prob;

pub use ba::{RdPoint, SolverConfig};
pub use distortion::DistortionMeasure;
pub use error::{Error, Result};
pub use prob::{InfoValue, OutputMarginal, SourceDistribution, TestChannel, TvForm};
