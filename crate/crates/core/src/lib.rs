//! Synthetic American-option markets whose implied-volatility surfaces
//! emerge from a structural model of equity returns.
//!
//! The pipeline runs a jump hidden Markov model for prices, a mean-reverting
//! variance process whose target carries the smile, and binomial lattices
//! for American pricing. Around it sit the calibration harness for the
//! smile shape and a forward scenario engine for short-premium analysis.

pub mod calibration;
pub mod cli;
pub mod error;
pub mod jumphmm;
pub mod lattice;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod surface;
pub mod variance;

pub use error::{Error, Result};
