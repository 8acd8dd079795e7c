//! Elliptic-curve point addition: the curve model, the reference group law
//! and the reversible circuit.

mod circuit;
mod curve;
pub mod steps;

pub use circuit::{
    build_ec_add, buggy_variant, reconcile, Bug, EcAdd, EcAddCircuit, EcAddOutput, Reconciliation,
    ReconciliationRow, RowStatus, VariantName,
};
pub use curve::{affine_add, classify, lambda_r, AffinePoint, CurveParams, CurveSpec, EdgeClass};
pub use steps::{EcStep, Fixes, StepKind};
