//! Short Weierstrass curves over small prime fields and the affine group law.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CurveError;
use crate::field::{inverse_euclid, FieldParams};

/// Curve fixture as stored on disk: `{"p": 17, "c1": 0, "c2": 7, "n": 5}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub p: u64,
    pub c1: u64,
    pub c2: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

/// Validated curve `y^2 = x^3 + c1 x + c2` over `F_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurveParams {
    pub p: u64,
    pub c1: u64,
    pub c2: u64,
    pub n: u32,
    field: FieldParams,
}

impl CurveParams {
    pub fn new(p: u64, c1: u64, c2: u64) -> Result<Self, CurveError> {
        Self::from_spec(CurveSpec { p, c1, c2, n: None })
    }

    pub fn from_spec(spec: CurveSpec) -> Result<Self, CurveError> {
        let field = match spec.n {
            Some(n) => FieldParams::with_width(spec.p, n)?,
            None => FieldParams::new(spec.p)?,
        };
        let p = spec.p;
        if p <= 3 {
            return Err(CurveError::ModulusTooSmall(p));
        }
        let (c1, c2) = (field.check(spec.c1)?, field.check(spec.c2)?);
        let disc = field.add(field.mul(4, field.mul(c1, field.mul(c1, c1))), field.mul(27, field.mul(c2, c2)));
        if disc == 0 {
            return Err(CurveError::Singular { p, c1, c2 });
        }
        // (0, 0) encodes the identity, so it must not be a curve point.
        if c2 == 0 {
            return Err(CurveError::OriginOnCurve);
        }
        Ok(CurveParams { p, c1, c2, n: field.width(), field })
    }

    pub fn from_json(text: &str) -> Result<Self, CurveError> {
        let spec: CurveSpec = serde_json::from_str(text).map_err(|e| CurveError::Fixture(e.to_string()))?;
        Self::from_spec(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CurveError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CurveError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn spec(&self) -> CurveSpec {
        CurveSpec { p: self.p, c1: self.c1, c2: self.c2, n: Some(self.n) }
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    fn rhs(&self, x: u64) -> u64 {
        let f = &self.field;
        f.add(f.add(f.mul(x, f.mul(x, x)), f.mul(self.c1, x)), self.c2)
    }

    pub fn contains(&self, pt: AffinePoint) -> bool {
        pt.is_identity() || (pt.x < self.p && pt.y < self.p && self.field.mul(pt.y, pt.y) == self.rhs(pt.x))
    }

    pub fn check(&self, pt: AffinePoint) -> Result<AffinePoint, CurveError> {
        if self.contains(pt) {
            Ok(pt)
        } else {
            Err(CurveError::OffCurve { x: pt.x, y: pt.y })
        }
    }

    /// Affine points in ascending order, without the identity.
    pub fn affine_points(&self) -> Vec<AffinePoint> {
        let mut roots: HashMap<u64, Vec<u64>> = HashMap::new();
        for y in 0..self.p {
            roots.entry(self.field.mul(y, y)).or_default().push(y);
        }
        let mut out = Vec::new();
        for x in 0..self.p {
            if let Some(ys) = roots.get(&self.rhs(x)) {
                out.extend(ys.iter().map(|&y| AffinePoint::new(x, y)));
            }
        }
        out
    }

    /// The identity followed by every affine point.
    pub fn points(&self) -> Vec<AffinePoint> {
        let mut pts = vec![AffinePoint::IDENTITY];
        pts.extend(self.affine_points());
        pts
    }

    pub fn neg(&self, pt: AffinePoint) -> AffinePoint {
        if pt.is_identity() {
            pt
        } else {
            AffinePoint::new(pt.x, self.field.neg(pt.y))
        }
    }
}

impl fmt::Display for CurveParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y^2 = x^3 + {}x + {} over F_{}", self.c1, self.c2, self.p)
    }
}

/// Affine point with plain residues. `(0, 0)` is the point at infinity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffinePoint {
    pub x: u64,
    pub y: u64,
}

impl AffinePoint {
    pub const IDENTITY: AffinePoint = AffinePoint { x: 0, y: 0 };

    pub const fn new(x: u64, y: u64) -> Self {
        AffinePoint { x, y }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

impl fmt::Display for AffinePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn div(f: &FieldParams, num: u64, den: u64) -> u64 {
    f.mul(num, inverse_euclid(den, f.modulus()).expect("nonzero denominator"))
}

/// Chord-tangent addition.
pub fn affine_add(p: AffinePoint, q: AffinePoint, curve: &CurveParams) -> Result<AffinePoint, CurveError> {
    curve.check(p)?;
    curve.check(q)?;
    let f = curve.field();
    if p.is_identity() {
        return Ok(q);
    }
    if q.is_identity() {
        return Ok(p);
    }
    let lambda = if p.x == q.x {
        if f.add(p.y, q.y) == 0 {
            return Ok(AffinePoint::IDENTITY);
        }
        div(f, f.add(f.mul(3, f.mul(p.x, p.x)), curve.c1), f.dbl(p.y))
    } else {
        div(f, f.sub(p.y, q.y), f.sub(p.x, q.x))
    };
    let xr = f.sub(f.sub(f.mul(lambda, lambda), p.x), q.x);
    let yr = f.sub(f.mul(lambda, f.sub(p.x, xr)), p.y);
    Ok(AffinePoint::new(xr, yr))
}

/// Doubling slope of the constant point, or the sentinel `1` when `b = 0`.
pub fn lambda_r(q: AffinePoint, curve: &CurveParams) -> u64 {
    let f = curve.field();
    if q.y == 0 {
        return 1;
    }
    div(f, f.add(f.mul(3, f.mul(q.x, q.x)), curve.c1), f.dbl(q.y))
}

/// Which special-case datapath a pair `(P, Q)` exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeClass {
    Generic,
    Double,
    Inverse,
    PIdentity,
    QIdentity,
    BothIdentity,
    TwoTorsionDouble,
    TangentCoincidence,
    YNegMismatch,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 9] = [
        EdgeClass::Generic,
        EdgeClass::Double,
        EdgeClass::Inverse,
        EdgeClass::PIdentity,
        EdgeClass::QIdentity,
        EdgeClass::BothIdentity,
        EdgeClass::TwoTorsionDouble,
        EdgeClass::TangentCoincidence,
        EdgeClass::YNegMismatch,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EdgeClass::Generic => "GENERIC",
            EdgeClass::Double => "DOUBLE",
            EdgeClass::Inverse => "INVERSE",
            EdgeClass::PIdentity => "P_IDENTITY",
            EdgeClass::QIdentity => "Q_IDENTITY",
            EdgeClass::BothIdentity => "BOTH_IDENTITY",
            EdgeClass::TwoTorsionDouble => "TWO_TORSION_DOUBLE",
            EdgeClass::TangentCoincidence => "TANGENT_COINCIDENCE",
            EdgeClass::YNegMismatch => "Y_NEG_MISMATCH",
        }
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Total classification of an input pair. `Y_NEG_MISMATCH` wins over
/// `TANGENT_COINCIDENCE` when both hold, because the flag logic routes such
/// pairs through the `y = -b` path.
pub fn classify(p: AffinePoint, q: AffinePoint, curve: &CurveParams) -> EdgeClass {
    let f = curve.field();
    match (p.is_identity(), q.is_identity()) {
        (true, true) => return EdgeClass::BothIdentity,
        (true, false) => return EdgeClass::PIdentity,
        (false, true) => return EdgeClass::QIdentity,
        _ => {}
    }
    if p.x == q.x {
        return match (p.y == q.y, p.y == 0) {
            (true, true) => EdgeClass::TwoTorsionDouble,
            (true, false) => EdgeClass::Double,
            _ => EdgeClass::Inverse,
        };
    }
    if p.y == f.neg(q.y) {
        return EdgeClass::YNegMismatch;
    }
    let two_q = affine_add(q, q, curve).unwrap_or(AffinePoint::IDENTITY);
    if !two_q.is_identity() && p == curve.neg(two_q) {
        EdgeClass::TangentCoincidence
    } else {
        EdgeClass::Generic
    }
}
