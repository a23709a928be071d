//! Simulator and NMR schedule compiler for discrete-time adiabatic
//! optimization with fixed-strength Hamiltonians.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod hamiltonians;
pub mod maxcut;
pub mod noise;
pub mod pulse;
pub mod quantum;

pub use error::{Error, Result};
