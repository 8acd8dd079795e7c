//! The full point-addition circuit `(x, y) -> (x, y) + (a, b)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::curve::{lambda_r, AffinePoint, CurveParams};
use super::steps::{state_signature, EcStep, Fixes, StepKind, A, B, FLAG_REGISTERS, LAMBDA, LAMBDA_R, X, Y};
use crate::cost::{CostCache, TABLE_COUNTS};
use crate::error::{CostError, CurveError, IrError, SimError};
use crate::field::FieldParams;
use crate::gates::word_kind;
use crate::ir::{CircuitBuilder, CompositeCircuit, DataKind, Family, Gate, Handle, Signature, Variant};
use crate::sim::{self, AncillaViolation, Mode, Registers, SimTrace, TraceFailure};

/// The four published defects, each revertible on its own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bug {
    Step2,
    Step5,
    Step6a,
    Step6b,
}

impl Bug {
    pub const ALL: [Bug; 4] = [Bug::Step2, Bug::Step5, Bug::Step6a, Bug::Step6b];

    pub fn name(&self) -> &'static str {
        match self {
            Bug::Step2 => "step2",
            Bug::Step5 => "step5",
            Bug::Step6a => "step6a",
            Bug::Step6b => "step6b",
        }
    }

    /// Ancilla left dirty when the defect triggers.
    pub fn register(&self) -> &'static str {
        match self {
            Bug::Step2 => "f1",
            Bug::Step5 => LAMBDA,
            Bug::Step6a => "f2",
            Bug::Step6b => "f4",
        }
    }
}

/// The full circuit with exactly one fix reverted.
pub fn buggy_variant(bug: Bug) -> Fixes {
    let mut f = Fixes::CORRECTED;
    match bug {
        Bug::Step2 => f.step2 = false,
        Bug::Step5 => f.step5 = false,
        Bug::Step6a => f.step6a = false,
        Bug::Step6b => f.step6b = false,
    }
    f
}

/// Named variant selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VariantName {
    Corrected,
    Buggy(Bug),
    AllBuggy,
}

impl VariantName {
    pub const ALL: [VariantName; 6] = [
        VariantName::Corrected,
        VariantName::Buggy(Bug::Step2),
        VariantName::Buggy(Bug::Step5),
        VariantName::Buggy(Bug::Step6a),
        VariantName::Buggy(Bug::Step6b),
        VariantName::AllBuggy,
    ];

    pub fn fixes(&self) -> Fixes {
        match self {
            VariantName::Corrected => Fixes::CORRECTED,
            VariantName::Buggy(b) => buggy_variant(*b),
            VariantName::AllBuggy => Fixes::ALL_BUGGY,
        }
    }
}

impl fmt::Display for VariantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariantName::Corrected => f.write_str("corrected"),
            VariantName::Buggy(b) => f.write_str(b.name()),
            VariantName::AllBuggy => f.write_str("all-buggy"),
        }
    }
}

impl FromStr for VariantName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantName::ALL
            .iter()
            .find(|v| v.to_string() == s)
            .copied()
            .ok_or_else(|| format!("unknown variant `{s}` (expected corrected, step2, step5, step6a, step6b or all-buggy)"))
    }
}

/// The point-addition circuit as a single composite gate. Registers `a`, `b`
/// and `lambda_r` carry the classical point and its doubling slope and are
/// returned unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EcAdd {
    pub fixes: Fixes,
    pub field: FieldParams,
}

impl EcAdd {
    pub fn new(fixes: Fixes, field: FieldParams) -> Self {
        EcAdd { fixes, field }
    }

    pub fn steps(&self) -> Vec<EcStep> {
        StepKind::ALL.iter().map(|k| EcStep::new(*k, self.fixes, self.field)).collect()
    }

    pub fn declared_census(&self) -> BTreeMap<Family, u64> {
        let mut total = BTreeMap::new();
        for s in self.steps() {
            crate::cost::merge_census(&mut total, &s.declared_census());
        }
        total
    }

    fn tag(&self) -> String {
        let mut reverted: Vec<&str> = Vec::new();
        for (fixed, name) in [
            (self.fixes.step2, "step2"),
            (self.fixes.step5, "step5"),
            (self.fixes.step6a, "step6a"),
            (self.fixes.step6b, "step6b"),
        ] {
            if !fixed {
                reverted.push(name);
            }
        }
        if reverted.is_empty() {
            "corrected".into()
        } else {
            format!("buggy {}", reverted.join(","))
        }
    }
}

impl Gate for EcAdd {
    fn name(&self) -> String {
        format!("EcAdd[{}]<{}>", self.tag(), self.field.modulus())
    }

    fn family(&self) -> Family {
        Family::Composite("EcAdd".into())
    }

    fn signature(&self) -> Signature {
        let w = word_kind(&self.field);
        Signature::thru([X, Y, A, B, LAMBDA_R].iter().map(|r| (r.to_string(), w)))
    }

    fn variant(&self) -> Variant {
        if self.fixes.is_corrected() {
            Variant::Corrected
        } else {
            Variant::Buggy
        }
    }

    fn decompose(&self) -> Result<CompositeCircuit, IrError> {
        let w = word_kind(&self.field);
        let mut b = CircuitBuilder::new(self.name());
        let mut live: BTreeMap<String, Handle> = BTreeMap::new();
        for r in [X, Y, A, B, LAMBDA_R] {
            live.insert(r.to_string(), b.add_register(r, w));
        }
        for r in FLAG_REGISTERS {
            let kind = if r == LAMBDA { w } else { DataKind::Bit };
            live.insert(r.to_string(), b.alloc(kind, r));
        }
        let names: Vec<String> = state_signature(&self.field).0.into_iter().map(|s| s.name).collect();
        for step in self.steps() {
            let wiring: Vec<(&str, Handle)> = names.iter().map(|n| (n.as_str(), live[n])).collect();
            let ports = b.add(Arc::new(step) as Arc<dyn Gate>, &wiring)?;
            for n in &names {
                live.insert(n.clone(), ports[n]);
            }
        }
        for r in FLAG_REGISTERS {
            b.free(live[r])?;
        }
        let outs: Vec<(&str, Handle)> = [X, Y, A, B, LAMBDA_R].iter().map(|r| (*r, live[*r])).collect();
        b.finalize(&outs)
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        let p = self.field.modulus();
        for r in FLAG_REGISTERS {
            regs.set(r, 0);
        }
        for step in self.steps() {
            step.apply(regs)?;
            for r in [X, Y, LAMBDA] {
                let v = regs.get(r)?;
                if v >= p {
                    return Err(SimError::Domain { path: step.name(), register: r.into(), value: v, bound: p });
                }
            }
        }
        for r in FLAG_REGISTERS {
            let value = regs.remove(r)?;
            if value != 0 {
                return Err(SimError::AncillaViolation(AncillaViolation {
                    path: format!("{}/free[{r}]", self.name()),
                    register: r.to_string(),
                    value,
                }));
            }
        }
        Ok(())
    }
}

/// Result of running the circuit on one input point, in plain residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EcAddOutput {
    pub point: AffinePoint,
    /// `a`, `b` and `lambda_r` came back bitwise unchanged.
    pub constants_preserved: bool,
}

/// The circuit `P -> P + Q` for a fixed classical point `Q`.
#[derive(Clone, Debug)]
pub struct EcAddCircuit {
    pub curve: CurveParams,
    pub q: AffinePoint,
    /// Plain doubling slope of `Q`, or the sentinel.
    pub lambda_r: u64,
    pub gate: Arc<EcAdd>,
    /// Decomposition of [`EcAddCircuit::gate`]: flag allocation, the six steps, release.
    pub circuit: CompositeCircuit,
}

pub fn build_ec_add(curve: &CurveParams, q: AffinePoint, fixes: Fixes) -> Result<EcAddCircuit, CurveError> {
    curve.check(q)?;
    let gate = Arc::new(EcAdd::new(fixes, *curve.field()));
    let circuit = gate.decompose().expect("the point-addition circuit is well formed");
    Ok(EcAddCircuit { curve: *curve, q, lambda_r: lambda_r(q, curve), gate, circuit })
}

impl EcAddCircuit {
    /// Montgomery-encoded register values for input point `p`.
    pub fn inputs(&self, p: AffinePoint) -> Result<BTreeMap<String, u64>, CurveError> {
        self.curve.check(p)?;
        let f = self.curve.field();
        let enc = |v| f.to_montgomery(v).expect("residue in range");
        Ok(BTreeMap::from([
            (X.to_string(), enc(p.x)),
            (Y.to_string(), enc(p.y)),
            (A.to_string(), enc(self.q.x)),
            (B.to_string(), enc(self.q.y)),
            (LAMBDA_R.to_string(), enc(self.lambda_r)),
        ]))
    }

    fn decode(&self, inputs: &BTreeMap<String, u64>, out: &BTreeMap<String, u64>) -> EcAddOutput {
        let f = self.curve.field();
        let dec = |r: &str| f.from_montgomery(out[r]).unwrap_or(out[r]);
        let constants_preserved = [A, B, LAMBDA_R].iter().all(|r| inputs[*r] == out[*r]);
        EcAddOutput { point: AffinePoint::new(dec(X), dec(Y)), constants_preserved }
    }

    pub fn run(&self, p: AffinePoint, mode: Mode) -> Result<EcAddOutput, SimError> {
        let inputs = self.inputs(p).map_err(|e| SimError::UnexpectedInput(e.to_string()))?;
        let out = sim::simulate(&self.circuit, &inputs, mode)?;
        Ok(self.decode(&inputs, &out))
    }

    pub fn run_trace(&self, p: AffinePoint, mode: Mode) -> Result<(EcAddOutput, SimTrace), TraceFailure> {
        let inputs = self
            .inputs(p)
            .map_err(|e| TraceFailure { error: SimError::UnexpectedInput(e.to_string()), trace: Vec::new() })?;
        let (out, trace) = sim::simulate_trace(&self.circuit, &inputs, mode)?;
        Ok((self.decode(&inputs, &out), trace))
    }
}

/// How one table row compares with the circuit census.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Exact,
    /// Undiagrammed steps use fewer instances than the residual budget allows.
    Under,
    /// Undiagrammed steps exceed the residual budget.
    Over,
    /// A diagrammed step or a fixed row disagrees.
    Mismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconciliationRow {
    pub family: String,
    pub table: u64,
    pub circuit: u64,
    /// Table count minus the diagrammed steps 2, 5 and 6.
    pub residual_budget: i64,
    /// Instances in the undiagrammed steps 1, 3 and 4.
    pub residual_used: u64,
    /// Count per step, steps 1 to 6.
    pub per_step: [u64; 6],
    pub status: RowStatus,
}

/// Comparison of the circuit census against the published subroutine counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub rows: Vec<ReconciliationRow>,
    /// Diagrammed steps match their declared gate lists.
    pub diagrammed_steps_match: bool,
}

impl Reconciliation {
    pub fn exact(&self) -> bool {
        self.rows.iter().all(|r| r.status == RowStatus::Exact)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &ReconciliationRow> {
        self.rows.iter().filter(|r| r.status != RowStatus::Exact)
    }

    /// No row exceeds its budget, diagrammed steps are exact, and the
    /// multiplier and inverter counts match.
    pub fn acceptable(&self) -> bool {
        self.diagrammed_steps_match
            && self.rows.iter().all(|r| match r.status {
                RowStatus::Exact => true,
                RowStatus::Under => r.family != Family::ModMult.name() && r.family != Family::ModInv.name(),
                RowStatus::Over | RowStatus::Mismatch => false,
            })
    }
}

pub fn reconcile(gate: &EcAdd) -> Result<Reconciliation, CostError> {
    let mut cache = CostCache::new();
    let steps = gate.steps();
    let mut per_step: Vec<BTreeMap<Family, u64>> = Vec::new();
    let mut diagrammed_steps_match = true;
    for s in &steps {
        let c = cache.gate_census(s)?;
        if s.kind.is_diagrammed() && c != s.declared_census() {
            diagrammed_steps_match = false;
        }
        per_step.push(c);
    }
    let count = |i: usize, f: &Family| per_step[i].get(f).copied().unwrap_or(0);
    let mut rows = Vec::new();
    for (family, table) in TABLE_COUNTS.iter() {
        let counts: [u64; 6] = std::array::from_fn(|i| count(i, family));
        let diagrammed: u64 = steps.iter().zip(counts).filter(|(s, _)| s.kind.is_diagrammed()).map(|(_, c)| c).sum();
        let residual_used = counts.iter().sum::<u64>() - diagrammed;
        let residual_budget = *table as i64 - diagrammed as i64;
        let circuit: u64 = counts.iter().sum();
        let fixed_row = matches!(family, Family::ModMult | Family::ModInv);
        let status = if circuit == *table {
            RowStatus::Exact
        } else if fixed_row || residual_budget < 0 {
            RowStatus::Mismatch
        } else if (residual_used as i64) < residual_budget {
            RowStatus::Under
        } else {
            RowStatus::Over
        };
        rows.push(ReconciliationRow {
            family: family.name(),
            table: *table,
            circuit,
            residual_budget,
            residual_used,
            per_step: counts,
            status,
        });
    }
    Ok(Reconciliation { rows, diagrammed_steps_match })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secp17() -> CurveParams {
        CurveParams::new(17, 0, 7).unwrap()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in VariantName::ALL {
            assert_eq!(v.to_string().parse::<VariantName>().unwrap(), v);
        }
        assert!("step3".parse::<VariantName>().is_err());
    }

    #[test]
    fn generic_example() {
        let c = build_ec_add(&secp17(), AffinePoint::new(1, 5), Fixes::CORRECTED).unwrap();
        for mode in [Mode::Shallow, Mode::Flattened] {
            let out = c.run(AffinePoint::new(2, 10), mode).unwrap();
            assert_eq!(out.point, AffinePoint::new(5, 9));
            assert!(out.constants_preserved);
        }
    }

    #[test]
    fn rejects_off_curve_q() {
        assert!(build_ec_add(&secp17(), AffinePoint::new(1, 1), Fixes::CORRECTED).is_err());
    }

    #[test]
    fn gate_apply_matches_decomposition() {
        let c = build_ec_add(&secp17(), AffinePoint::new(1, 5), Fixes::CORRECTED).unwrap();
        let inputs = c.inputs(AffinePoint::new(2, 7)).unwrap();
        let whole = CompositeCircuit::from_gate(c.gate.clone());
        let a = sim::simulate(&whole, &inputs, Mode::Shallow).unwrap();
        let b = sim::simulate(&c.circuit, &inputs, Mode::Flattened).unwrap();
        assert_eq!(a, b);
    }
}
