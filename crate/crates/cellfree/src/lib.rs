//! Simulation library for uplink resource allocation in user-centric
//! cell-free MIMO networks.
//!
//! The library models a network of multi-antenna access points (APs) grouped
//! under central processing units (CPUs) serving single-stream users. Five
//! allocation schemes are implemented, all maximizing a weighted sum rate via
//! fractional programming with a reweighted l1-norm scheduling relaxation:
//!
//! * [`fp_centralized`]: one processor with global channel knowledge,
//! * [`fp_exchange`]: per-AP (distributed) and per-CPU (semi-distributed)
//!   processors that exchange auxiliary variables every iteration,
//! * [`fp_decentralized`]: per-AP / per-CPU processors with no exchange,
//!   working against a pseudo-SINR metric with a statistical approximation
//!   of non-local interference.
//!
//! [`evaluation`] computes the true (physical) SINR and spectral efficiency
//! of any converged allocation, and [`harness`] drives Monte Carlo
//! experiments over random topologies and fading realizations.

pub mod channel;
pub mod evaluation;
pub mod fp_centralized;
pub mod fp_decentralized;
pub mod fp_exchange;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod topology;

mod fp_common;

#[cfg(test)]
mod testutil;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    #[error("topology: {0}")]
    Topology(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
