//! Monte Carlo harness, result files and command line for the `wax-core`
//! decentralized receive-processing methods.

pub mod cli;
pub mod error;
pub mod harness;
pub mod output;

pub use error::{Result, SimError};
pub use harness::{run_sweep, run_trial, ExperimentSpec, Method, SweepResult, SweepRow};
