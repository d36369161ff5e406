//! Budget-aware hyper-parameter tuning for search-based test generation.
//!
//! The crate scores classes by *tuning gain* (how much extra branch coverage
//! tuning can plausibly buy), predicts that score from static code metrics,
//! and replays tuning strategies against recorded coverage matrices under an
//! explicit evaluation budget.

pub mod cli;
pub mod coverage;
pub mod error;
pub mod gain;
pub mod harness;
pub mod metrics;
pub mod regression;
pub mod seeding;
pub mod space;
pub mod strategies;
pub mod synthetic;

pub use error::{Error, Result};
