//! Independent references for the closed-form rounds.
//!
//! [`enumerate`] weighs every Pauli error string, propagated either through
//! explicit SUM gates ([`frame`]) or checked against stabilizer generators.
//! [`dense`] simulates the same circuits on full state vectors and fixes the
//! sign conventions the other two rely on.

pub mod dense;
pub mod enumerate;
pub mod frame;

pub use dense::{statevector_round, verify_propagation_lemmas, CircuitKind, DenseState};
pub use enumerate::{
    enumerate_multi_round, enumerate_single_round, enumerate_sum_circuit, CarrierCode,
    EnumerationResult,
};

/// Largest number of error strings an enumeration may visit.
pub const ENUMERATION_LIMIT: u128 = 5_000_000;
/// Largest Hilbert-space dimension the dense simulator accepts.
pub const DENSE_LIMIT: u128 = 2187;
