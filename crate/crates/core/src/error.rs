use thiserror::Error;

use crate::sim::AncillaViolation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("modulus {p} needs {bits} bits; at most {max} are supported", max = crate::field::MAX_FIELD_BITS)]
    TooWide { p: u64, bits: u32 },
    #[error("modulus {p} does not have bit length {n}")]
    WidthMismatch { p: u64, n: u32 },
    #[error("value {value} is not a residue modulo {modulus}")]
    OutOfRange { value: u64, modulus: u64 },
}

/// Structural errors raised while building or transforming circuits.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("kind mismatch at {location}: expected {expected}, found {found}")]
    KindMismatch { location: String, expected: String, found: String },
    #[error("bitsize mismatch at {location}: expected {expected}, found {found}")]
    BitsizeMismatch { location: String, expected: String, found: String },
    #[error("register handle reused at {0}")]
    PortReconnected(String),
    #[error("unconnected port at {0}")]
    DanglingPort(String),
    #[error("{0} is a leaf gate and has no decomposition")]
    LeafHasNoDecomposition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("ancilla not clean: {0}")]
    AncillaViolation(AncillaViolation),
    #[error("value {value} in register `{register}` at {path} is outside the domain (< {bound})")]
    Domain { path: String, register: String, value: u64, bound: u64 },
    #[error("missing value for register `{0}`")]
    MissingRegister(String),
    #[error("unexpected input register `{0}`")]
    UnexpectedInput(String),
    #[error(transparent)]
    Structural(#[from] IrError),
}

impl SimError {
    pub fn violation(&self) -> Option<&AncillaViolation> {
        match self {
            SimError::AncillaViolation(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("no Toffoli cost registered for gate family `{0}`")]
    UnknownFamily(String),
    #[error(transparent)]
    Structural(#[from] IrError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurveError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("curve y^2 = x^3 + {c1}x + {c2} is singular modulo {p}")]
    Singular { p: u64, c1: u64, c2: u64 },
    #[error("(0, 0) lies on the curve, so it cannot encode the identity")]
    OriginOnCurve,
    #[error("point ({x}, {y}) is not on the curve")]
    OffCurve { x: u64, y: u64 },
    #[error("modulus {0} is too small for a short Weierstrass curve")]
    ModulusTooSmall(u64),
    #[error("invalid curve fixture: {0}")]
    Fixture(String),
}
