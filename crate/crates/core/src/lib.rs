//! Simulation engine for seamless phase 2-3 dose-optimization trials.
//!
//! Four design families are supported:
//!
//! - **A**: concurrent control in both stages, binary endpoint at interim,
//!   time-to-event endpoint at the final analysis.
//! - **B**: as A, but the control arm only enters in stage 2; stage-1 doses are
//!   compared against a historical hazard.
//! - **C**: concurrent control in both stages, binary endpoint throughout.
//! - **D**: no concurrent control; every comparison is against a historical
//!   response rate.
//!
//! At the end of stage 1 a benefit-risk rule picks one dose (or stops the
//! trial). The final analysis combines stage-wise p-values with a weighted
//! inverse-normal combination test inside a closed testing procedure, which
//! keeps the familywise error rate at the nominal level despite the selection.
//!
//! [`oc_runner`] evaluates a design by Monte Carlo: familywise error rate,
//! probability of correct selection, generalized power and average sample size.

pub mod config;
pub mod ctct;
pub mod dose_select;
pub mod error;
pub mod oc_runner;
pub mod outcome_sim;
pub mod rng;
pub mod stat_kernel;
pub mod trial_engine;

pub use error::{Error, Result};
