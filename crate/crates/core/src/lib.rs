//! Reversible circuits for elliptic-curve point addition over prime fields.
//!
//! Gates are composed into a checked dataflow graph ([`ir`]), run on classical
//! basis states ([`sim`]) and costed as Toffoli-count polynomials in the
//! register width ([`cost`]). The point-addition circuit and its buggy variants
//! live in [`ec`]; [`harness`] drives validation, fuzzing and bug reproduction.

pub mod cost;
pub mod error;
pub mod field;
pub mod gates;
pub mod ir;
pub mod sim;
pub mod ec;
pub mod harness;
