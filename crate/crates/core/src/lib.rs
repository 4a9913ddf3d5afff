//! Quantum transient stability assessment.
//!
//! Labeled transient data come from swing-equation simulations
//! ([`power`]); a layered variational circuit ([`circuit`]) embeds the
//! post-disturbance state into a small qubit register simulated exactly
//! ([`qsim`]); [`trainer`] fits the circuit with parameter-shift gradients
//! and a damped natural-gradient Adam update; [`noise`] evaluates trained
//! models under gate and relaxation errors; [`analysis`] holds the metrics
//! and the region and architecture studies.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod dataset;
pub mod noise;
pub mod power;
pub mod qsim;
pub mod trainer;
