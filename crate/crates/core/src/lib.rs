//! Fidelity model for spin-qubit control electronics.
//!
//! Forward path: electronics errors to gate, idle and read-out infidelity.
//! Inverse path: infidelity budget to electronics specifications.
//!
//! Frequencies and energies are angular (rad/s, with hbar = 1) inside the
//! library. Hz appears only at the CLI boundary and in `budget::convert`.

pub mod budget;
pub mod cli;
pub mod error;
pub mod noise;
pub mod onequbit;
pub mod qcore;
pub mod readout;
pub mod twoqubit;

pub use error::{Error, Result};

/// 2π, used for every Hz to rad/s conversion.
pub const TAU: f64 = std::f64::consts::TAU;
