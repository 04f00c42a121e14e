//! Discrete-time simulator and drift-plus-penalty controller for proactive
//! traffic offloading in an integrated multi-satellite terrestrial network.
//!
//! Small base stations receive eMBB, URLLC and mMTC traffic. URLLC is
//! backhauled terrestrially, eMBB over LEO satellites, and mMTC over either,
//! with future mMTC arrivals visible through a prediction window. Each slot
//! the controller picks mMTC offloading decisions in closed form and
//! allocates satellite downlink power with a successive convex
//! approximation solver.
//!
//! Module map:
//! - [`orbit`]: circular-orbit geometry, slant ranges and visibility.
//! - [`channel`]: path-loss gains, interference and Shannon rates.
//! - [`traffic`]: per-station arrival processes and the oracle predictor.
//! - [`queues`]: prediction bank and terrestrial/satellite queue recursions.
//! - [`controller`]: virtual queues, utility and the closed-form offloading rule.
//! - [`powersolver`]: DC split, linearizations and the SCA power allocator.
//! - [`engine`]: slot pipeline, full runs and parameter sweeps.
//! - [`config`]: simulation configuration with the reference defaults.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod controller;
pub mod engine;
pub mod error;
pub mod matrix;
pub mod orbit;
pub mod powersolver;
pub mod queues;
pub mod traffic;

pub use config::SimConfig;
pub use engine::{MetricsBundle, RunOutput, SlotRecord};
pub use error::{Error, Result};
pub use matrix::LinkMatrix;
