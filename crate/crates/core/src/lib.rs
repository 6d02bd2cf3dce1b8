//! Simulator and benchmark harness for delay-based reservoir computing with
//! phase-encoded input and a sine (homodyne) node response.
//!
//! - [`reservoir`]: the time-multiplexed node recurrence.
//! - [`readout`]: ridge-regression output layer and metrics.
//! - [`tasks`]: NARMA-N, CSV-loaded and surrogate datasets.
//! - [`harness`]: experiment specs, sweeps and results files.

pub mod error;
pub mod harness;
pub mod readout;
pub mod reservoir;
pub mod tasks;

pub use error::{Error, Result};
