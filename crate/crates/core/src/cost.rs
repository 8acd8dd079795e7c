//! Symbolic Toffoli accounting.
//!
//! Costs are exact-rational polynomials in the register width `n`. Leaf gate
//! costs come from a fixed registry; composite costs are sums over their
//! decompositions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CostError;
use crate::ir::{CompositeCircuit, CostShape, DataKind, Family, Gate, Op};

pub type Rational = Ratio<i64>;

/// Polynomial in `n` with exact rational coefficients. Zero coefficients are
/// never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CostPolynomial(BTreeMap<u32, Rational>);

impl CostPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<Rational>) -> Self {
        Self::term(0, c)
    }

    /// The symbol `n`.
    pub fn n() -> Self {
        Self::term(1, 1)
    }

    pub fn term(degree: u32, coeff: impl Into<Rational>) -> Self {
        let mut p = Self::zero();
        p.add_term(degree, coeff.into());
        p
    }

    /// `a*n + b`.
    pub fn linear(a: i64, b: i64) -> Self {
        Self::term(1, a) + Self::constant(b)
    }

    pub fn from_coeffs(coeffs: &[(u32, Rational)]) -> Self {
        let mut p = Self::zero();
        for &(d, c) in coeffs {
            p.add_term(d, c);
        }
        p
    }

    fn add_term(&mut self, degree: u32, coeff: Rational) {
        let e = self.0.entry(degree).or_insert_with(Rational::zero);
        *e += coeff;
        if e.is_zero() {
            self.0.remove(&degree);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, degree: u32) -> Rational {
        self.0.get(&degree).copied().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (u32, Rational)> + '_ {
        self.0.iter().map(|(d, c)| (*d, *c))
    }

    pub fn degree(&self) -> Option<u32> {
        self.0.keys().next_back().copied()
    }

    /// Highest-degree term as `(degree, coefficient)`.
    pub fn leading_term(&self) -> Option<(u32, Rational)> {
        self.0.iter().next_back().map(|(d, c)| (*d, *c))
    }

    pub fn scale(&self, k: impl Into<Rational>) -> Self {
        let k = k.into();
        let mut p = Self::zero();
        for (d, c) in self.coeffs() {
            p.add_term(d, c * k);
        }
        p
    }

    pub fn eval(&self, n: i64) -> Rational {
        let n = Rational::from_integer(n);
        self.0
            .iter()
            .map(|(d, c)| *c * num_traits::pow(n, *d as usize))
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// Ordering as `n` grows without bound.
    pub fn cmp_asymptotic(&self, other: &Self) -> Ordering {
        let diff = self.clone() - other.clone();
        match diff.leading_term() {
            None => Ordering::Equal,
            Some((_, c)) if c.is_positive() => Ordering::Greater,
            Some(_) => Ordering::Less,
        }
    }

    pub fn max_asymptotic(self, other: Self) -> Self {
        if other.cmp_asymptotic(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for CostPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (i, (d, c)) in self.0.iter().rev().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            let show_coeff = *d == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match d {
                0 => {}
                1 => write!(f, "{}n", if show_coeff { "*" } else { "" })?,
                _ => write!(f, "{}n^{d}", if show_coeff { "*" } else { "" })?,
            }
        }
        Ok(())
    }
}

impl Add for CostPolynomial {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for CostPolynomial {
    fn add_assign(&mut self, rhs: Self) {
        for (d, c) in rhs.0 {
            self.add_term(d, c);
        }
    }
}

impl Neg for CostPolynomial {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1)
    }
}

impl Sub for CostPolynomial {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for CostPolynomial {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut p = Self::zero();
        for (d1, c1) in self.coeffs() {
            for (d2, c2) in rhs.coeffs() {
                p.add_term(d1 + d2, c1 * c2);
            }
        }
        p
    }
}

impl std::iter::Sum for CostPolynomial {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// Serialized as `{"2": "253/2", "1": "...", "0": "..."}`.
impl Serialize for CostPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (d, c) in self.0.iter().rev() {
            map.serialize_entry(&d.to_string(), &c.to_string())?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for CostPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw: BTreeMap<String, String> = BTreeMap::deserialize(d)?;
        let mut p = CostPolynomial::zero();
        for (deg, c) in raw {
            let deg: u32 = deg.parse().map_err(D::Error::custom)?;
            let c: Rational = c.parse().map_err(|_| D::Error::custom(format!("bad rational `{c}`")))?;
            p.add_term(deg, c);
        }
        Ok(p)
    }
}

fn frac(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// Registry cost of a leaf family at width `n`. The multi-controlled Toffoli
/// bucket is given at arity `n`; use [`multi_control_cost`] for other arities.
pub fn family_cost(family: &Family) -> Option<CostPolynomial> {
    use CostPolynomial as P;
    Some(match family {
        Family::MultiControlToffoli => P::linear(1, -1),
        Family::ModAdd => P::linear(4, -1),
        Family::CModAdd => P::linear(5, 1),
        Family::ModSub => P::linear(6, -3),
        Family::CModSub => P::linear(7, -1),
        Family::ModNeg => P::linear(3, -3),
        Family::CModNeg => P::linear(3, -2),
        Family::ModDbl => P::linear(2, 1),
        Family::ModMult => P::from_coeffs(&[(2, frac(9, 4)), (1, frac(29, 4)), (0, frac(-1, 1))]),
        Family::ModInv => P::from_coeffs(&[(2, frac(26, 1)), (1, frac(9, 1)), (0, frac(-1, 1))]),
        Family::Equals => P::linear(1, -1),
        Family::CEquals => P::linear(3, 0),
        Family::Composite(_) => return None,
    })
}

/// Number of control qubits: `bits + words * n`.
pub fn control_arity(bits: u32, words: u32) -> CostPolynomial {
    CostPolynomial::linear(words as i64, bits as i64)
}

/// An `m`-controlled Toffoli costs `m - 1` Toffolis.
pub fn multi_control_cost(arity: CostPolynomial) -> CostPolynomial {
    arity - CostPolynomial::constant(1)
}

/// Controlled register copy: AND the control pattern into a temporary
/// (`m - 1` Toffolis), then `n` Toffolis for the bitwise copy. The temporary is
/// released by measurement-based uncomputation, which needs no Toffolis.
/// Without controls the copy is a CNOT array and free.
pub fn fan_cost(bits: u32, words: u32) -> CostPolynomial {
    if bits == 0 && words == 0 {
        return CostPolynomial::zero();
    }
    multi_control_cost(control_arity(bits, words)) + CostPolynomial::n()
}

pub fn shape_cost(shape: &CostShape) -> Result<CostPolynomial, CostError> {
    match shape {
        CostShape::Table(f) => family_cost(f).ok_or_else(|| CostError::UnknownFamily(f.name())),
        CostShape::Equals { words } => Ok(CostPolynomial::linear(*words as i64, -1)),
        CostShape::MultiControl { bits, words } => Ok(multi_control_cost(control_arity(*bits, *words))),
        CostShape::Fan { bits, words } => Ok(fan_cost(*bits, *words)),
    }
}

/// Per-invocation memo keyed by gate identity.
#[derive(Default)]
pub struct CostCache {
    costs: HashMap<String, CostPolynomial>,
    censuses: HashMap<String, BTreeMap<Family, u64>>,
    peaks: HashMap<String, CostPolynomial>,
}

impl CostCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn gate_cost(&mut self, gate: &dyn Gate) -> Result<CostPolynomial, CostError> {
        let key = gate.name();
        if let Some(c) = self.costs.get(&key) {
            return Ok(c.clone());
        }
        let cost = match gate.cost_shape() {
            Some(shape) => shape_cost(&shape)?,
            None => self.circuit_cost(&gate.decompose()?)?,
        };
        self.costs.insert(key, cost.clone());
        Ok(cost)
    }

    pub fn circuit_cost(&mut self, circuit: &CompositeCircuit) -> Result<CostPolynomial, CostError> {
        let mut total = CostPolynomial::zero();
        for g in circuit.gates() {
            total += self.gate_cost(g.as_ref())?;
        }
        Ok(total)
    }

    pub fn gate_census(&mut self, gate: &dyn Gate) -> Result<BTreeMap<Family, u64>, CostError> {
        let key = gate.name();
        if let Some(c) = self.censuses.get(&key) {
            return Ok(c.clone());
        }
        let census = if gate.is_leaf() {
            BTreeMap::from([(gate.family(), 1)])
        } else {
            self.circuit_census(&gate.decompose()?)?
        };
        self.censuses.insert(key, census.clone());
        Ok(census)
    }

    pub fn circuit_census(&mut self, circuit: &CompositeCircuit) -> Result<BTreeMap<Family, u64>, CostError> {
        let mut total = BTreeMap::new();
        for g in circuit.gates() {
            merge_census(&mut total, &self.gate_census(g.as_ref())?);
        }
        Ok(total)
    }

    pub fn gate_peak(&mut self, gate: &dyn Gate) -> Result<CostPolynomial, CostError> {
        if gate.is_leaf() {
            return Ok(CostPolynomial::zero());
        }
        let key = gate.name();
        if let Some(c) = self.peaks.get(&key) {
            return Ok(c.clone());
        }
        let peak = self.circuit_peak(&gate.decompose()?)?;
        self.peaks.insert(key, peak.clone());
        Ok(peak)
    }

    pub fn circuit_peak(&mut self, circuit: &CompositeCircuit) -> Result<CostPolynomial, CostError> {
        let mut live = CostPolynomial::zero();
        let mut peak = CostPolynomial::zero();
        for node in &circuit.nodes {
            match &node.op {
                Op::Alloc(k) => {
                    live += symbolic_width(*k);
                    peak = peak.max_asymptotic(live.clone());
                }
                Op::Free(k) => live = live - symbolic_width(*k),
                Op::Gate(g) => {
                    let inner = self.gate_peak(g.as_ref())?;
                    peak = peak.max_asymptotic(live.clone() + inner);
                }
            }
        }
        Ok(peak)
    }
}

/// Width of a register in terms of `n`: bits count one, words count `n`.
pub fn symbolic_width(kind: DataKind) -> CostPolynomial {
    if kind.is_word() {
        CostPolynomial::n()
    } else {
        CostPolynomial::constant(1)
    }
}

pub fn merge_census(into: &mut BTreeMap<Family, u64>, other: &BTreeMap<Family, u64>) {
    for (f, c) in other {
        *into.entry(f.clone()).or_default() += c;
    }
}

pub fn toffoli_cost(gate: &dyn Gate) -> Result<CostPolynomial, CostError> {
    CostCache::new().gate_cost(gate)
}

pub fn circuit_cost(circuit: &CompositeCircuit) -> Result<CostPolynomial, CostError> {
    CostCache::new().circuit_cost(circuit)
}

/// `toffoli_cost(a) - toffoli_cost(b)`.
pub fn cost_delta(a: &CompositeCircuit, b: &CompositeCircuit) -> Result<CostPolynomial, CostError> {
    let mut cache = CostCache::new();
    Ok(cache.circuit_cost(a)? - cache.circuit_cost(b)?)
}

/// Maximum simultaneously allocated ancilla width over the construction order.
pub fn peak_ancilla(circuit: &CompositeCircuit) -> Result<CostPolynomial, CostError> {
    CostCache::new().circuit_peak(circuit)
}

pub fn gate_peak_ancilla(gate: &dyn Gate) -> Result<CostPolynomial, CostError> {
    CostCache::new().gate_peak(gate)
}

/// Leaf-family census with a breakdown per direct child of the circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusReport {
    pub totals: BTreeMap<Family, u64>,
    pub per_child: Vec<(String, BTreeMap<Family, u64>)>,
}

impl CensusReport {
    pub fn count(&self, family: &Family) -> u64 {
        self.totals.get(family).copied().unwrap_or(0)
    }
}

pub fn census(circuit: &CompositeCircuit) -> Result<CensusReport, CostError> {
    let mut cache = CostCache::new();
    let mut totals = BTreeMap::new();
    let mut per_child = Vec::new();
    for node in &circuit.nodes {
        if let Some(g) = node.gate() {
            let c = cache.gate_census(g.as_ref())?;
            merge_census(&mut totals, &c);
            per_child.push((node.label.clone(), c));
        }
    }
    Ok(CensusReport { totals, per_child })
}

/// Subroutine counts of the revised point-addition circuit, in table order.
pub const TABLE_COUNTS: [(Family, u64); 12] = [
    (Family::MultiControlToffoli, 23),
    (Family::ModAdd, 3),
    (Family::CModAdd, 2),
    (Family::ModSub, 2),
    (Family::CModSub, 4),
    (Family::ModNeg, 2),
    (Family::CModNeg, 1),
    (Family::ModDbl, 2),
    (Family::ModMult, 10),
    (Family::ModInv, 4),
    (Family::Equals, 6),
    (Family::CEquals, 1),
];

pub fn table_census() -> BTreeMap<Family, u64> {
    TABLE_COUNTS.iter().cloned().collect()
}

/// Sum over the table of count times registry cost.
pub fn table_inner_product() -> CostPolynomial {
    TABLE_COUNTS
        .iter()
        .map(|(f, c)| family_cost(f).expect("table families are registered").scale(*c as i64))
        .sum()
}
