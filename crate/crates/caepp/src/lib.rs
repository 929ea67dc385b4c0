//! Carrier-assisted entanglement purification for Bell-diagonal qudit pairs.
//!
//! A shared pair is described by its probability table over generalized Bell
//! states. Each protocol round entangles the pair with fresh carrier qudits
//! that travel through the same Pauli channel, measures the carriers and keeps
//! the pair only when the syndrome is trivial. The modules provide:
//!
//! * [`phase_space`]: Weyl operators as points of `Z_d^2`, commutation phases,
//!   symplectic maps and the `d + 1` lines that index mutually unbiased bases.
//! * [`state_model`]: Bell tables, marginals and line weights.
//! * [`single_carrier`]: one carrier per round and its closed-form fidelity.
//! * [`mcaepp`]: the qutrit multi-carrier round and its fixed point.
//! * [`adaptive`]: basis preprocessing plus a two-stage check schedule.
//! * [`oracle`]: brute-force enumeration and a dense state-vector simulator.

pub mod adaptive;
pub mod error;
pub mod mcaepp;
pub mod oracle;
pub mod phase_space;
pub mod single_carrier;
pub mod state_model;

pub use error::{Error, Result};
pub use phase_space::{PhasePoint, SymplecticMap, WeylString};
pub use state_model::BellTable;
