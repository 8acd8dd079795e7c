//! Verification commands behind the `ecadd` binary. Each command returns a
//! [`RunReport`]; usage and fixture problems are [`HarnessError`]s.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{census as leaf_census, CostCache, CostPolynomial};
use crate::ec::steps::LAMBDA;
use crate::ec::{
    affine_add, build_ec_add, buggy_variant, classify, reconcile, AffinePoint, Bug, CurveParams, CurveSpec, EcAdd,
    EdgeClass, Fixes, Reconciliation, VariantName,
};
use crate::error::{CostError, CurveError, SimError};
use crate::ir::{validate as validate_circuit, Finding, Gate, Verdict};
use crate::sim::{Mode, TraceEntry};

/// Entries of the simulation trace kept with each failure.
pub const TRACE_EXCERPT: usize = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("trigger class absent: {0}")]
    TriggerAbsent(String),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// An ancilla was released holding a nonzero value.
    Violation,
    /// The circuit returned a point other than the reference sum.
    Mismatch,
    /// A register left its value domain.
    Domain,
    /// Structural validation finding.
    Finding,
    /// A buggy variant did not misbehave on its trigger.
    NotReproduced,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub p: Option<AffinePoint>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<AffinePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<EdgeClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub register: Option<String>,
    /// Raw register content; word registers hold Montgomery encodings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<u64>,
    /// Decoded residue of `value` for word registers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plain_value: Option<u64>,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

impl Failure {
    fn finding(f: &Finding, scope: &str) -> Self {
        Failure {
            kind: FailureKind::Finding,
            p: None,
            q: None,
            class: None,
            register: None,
            value: None,
            plain_value: None,
            detail: format!("{scope}: {:?} at {}: {}", f.code, f.location, f.detail),
            trace: Vec::new(),
        }
    }

    fn note(detail: String) -> Self {
        Failure {
            kind: FailureKind::Finding,
            p: None,
            q: None,
            class: None,
            register: None,
            value: None,
            plain_value: None,
            detail,
            trace: Vec::new(),
        }
    }
}

/// Outcome of one `(P, Q)` case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    #[serde(rename = "P")]
    pub p: AffinePoint,
    #[serde(rename = "Q")]
    pub q: AffinePoint,
    pub class: EdgeClass,
    pub expected: AffinePoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<AffinePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs one case at leaf level and checks it against the reference sum.
pub fn run_case(curve: &CurveParams, p: AffinePoint, q: AffinePoint, fixes: Fixes) -> Result<CaseResult, HarnessError> {
    let expected = affine_add(p, q, curve)?;
    let class = classify(p, q, curve);
    let circuit = build_ec_add(curve, q, fixes)?;
    let fail = |kind, register: Option<String>, value: Option<u64>, detail: String, trace| {
        let is_word = register.as_deref().is_some_and(|r| circuit.circuit.signature.get(r).is_some() || r == LAMBDA);
        let plain_value = value.filter(|_| is_word).and_then(|v| curve.field().from_montgomery(v).ok());
        Failure { kind, p: Some(p), q: Some(q), class: Some(class), register, value, plain_value, detail, trace }
    };
    let excerpt = |t: Vec<TraceEntry>| {
        let skip = t.len().saturating_sub(TRACE_EXCERPT);
        t.into_iter().skip(skip).collect::<Vec<_>>()
    };
    let (result, failure) = match circuit.run_trace(p, Mode::Flattened) {
        Ok((out, trace)) => {
            if out.point == expected && out.constants_preserved {
                (Some(out.point), None)
            } else {
                let detail = if out.constants_preserved {
                    format!("expected {expected}, got {}", out.point)
                } else {
                    "constant registers modified".to_string()
                };
                (Some(out.point), Some(fail(FailureKind::Mismatch, None, None, detail, excerpt(trace))))
            }
        }
        Err(tf) => {
            let trace = excerpt(tf.trace);
            let f = match &tf.error {
                SimError::AncillaViolation(v) => fail(
                    FailureKind::Violation,
                    Some(v.register.clone()),
                    Some(v.value),
                    tf.error.to_string(),
                    trace,
                ),
                SimError::Domain { register, value, .. } => fail(
                    FailureKind::Domain,
                    Some(register.clone()),
                    Some(*value),
                    tf.error.to_string(),
                    trace,
                ),
                other => fail(FailureKind::Domain, None, None, other.to_string(), trace),
            };
            (None, Some(f))
        }
    };
    Ok(CaseResult { p, q, class, expected, result, failure })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub cases: u64,
    pub failures: u64,
}

/// Reproduction of one published defect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugRepro {
    pub bug: Bug,
    /// Register the defect is expected to leave dirty.
    pub register: String,
    pub cases: Vec<BugCase>,
    pub reproduced: bool,
    pub fixed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugCase {
    #[serde(rename = "P")]
    pub p: AffinePoint,
    #[serde(rename = "Q")]
    pub q: AffinePoint,
    pub class: EdgeClass,
    /// Failure of the buggy variant, if any.
    pub buggy: Option<Failure>,
    /// Failure of the corrected circuit, if any.
    pub corrected: Option<Failure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub fixture: CurveSpec,
    pub variants: Vec<String>,
    pub verdict: Verdict,
    pub cases: u64,
    pub failures: Vec<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<AffinePoint>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub classes: BTreeMap<EdgeClass, ClassTally>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub classes_absent: Vec<EdgeClass>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bugs: Vec<BugRepro>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub census: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub toffoli_total: Option<CostPolynomial>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leading_term: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_ancilla: Option<CostPolynomial>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<CostPolynomial>,
    /// Evaluations at a concrete bit width: `n`, Toffoli total, peak ancilla.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluated: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconciliation: Option<Reconciliation>,
    /// Step-level trace of a passing `simulate --trace` run.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

impl RunReport {
    fn new(command: &str, curve: &CurveParams, variants: &[VariantName]) -> Self {
        RunReport {
            command: command.to_string(),
            fixture: curve.spec(),
            variants: variants.iter().map(|v| v.to_string()).collect(),
            verdict: Verdict::Pass,
            cases: 0,
            failures: Vec::new(),
            result: None,
            classes: BTreeMap::new(),
            classes_absent: Vec::new(),
            bugs: Vec::new(),
            census: BTreeMap::new(),
            toffoli_total: None,
            leading_term: None,
            peak_ancilla: None,
            delta: None,
            evaluated: None,
            reconciliation: None,
            trace: Vec::new(),
        }
    }

    fn seal(mut self) -> Self {
        self.verdict = if self.failures.is_empty() { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `0` on pass, `1` on any verification failure.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{} [{}] on p={} c1={} c2={}", self.command, self.variants.join(" vs "), self.fixture.p, self.fixture.c1, self.fixture.c2);
        let _ = writeln!(s, "verdict: {verdict}   cases: {}   failures: {}", self.cases, self.failures.len());
        if let Some(r) = self.result {
            let _ = writeln!(s, "result: {r}");
        }
        if !self.classes.is_empty() {
            let _ = writeln!(s, "\n{:<22}{:>8}{:>10}", "class", "cases", "failures");
            for (c, t) in &self.classes {
                let _ = writeln!(s, "{:<22}{:>8}{:>10}", c.name(), t.cases, t.failures);
            }
            for c in &self.classes_absent {
                let _ = writeln!(s, "{:<22}{:>8}{:>10}", c.name(), "-", "-");
            }
        }
        for b in &self.bugs {
            let _ = writeln!(
                s,
                "bug {:<7} register {:<7} reproduced: {:<5} fixed: {}",
                b.bug.name(),
                b.register,
                b.reproduced,
                b.fixed
            );
            for c in &b.cases {
                let dirty = c
                    .buggy
                    .as_ref()
                    .map(|f| {
                        let plain = f.plain_value.map(|v| format!(" (plain {v})")).unwrap_or_default();
                        format!("{}={}{plain}", f.register.clone().unwrap_or_default(), f.value.unwrap_or(0))
                    })
                    .unwrap_or_else(|| "clean".into());
                let _ = writeln!(s, "    P={} Q={} {:<20} buggy: {dirty}", c.p, c.q, c.class.name());
            }
        }
        if !self.census.is_empty() {
            let _ = writeln!(s, "\n{:<22}{:>6}", "family", "count");
            for (f, c) in &self.census {
                let _ = writeln!(s, "{f:<22}{c:>6}");
            }
        }
        if let Some(t) = &self.toffoli_total {
            let _ = writeln!(s, "toffoli total: {t}");
        }
        if let Some(t) = &self.leading_term {
            let _ = writeln!(s, "leading term: {t}");
        }
        if let Some(p) = &self.peak_ancilla {
            let _ = writeln!(s, "peak ancilla: {p}");
        }
        if let Some(d) = &self.delta {
            let _ = writeln!(s, "delta ({}): {d}", self.variants.join(" - "));
        }
        if let Some(ev) = &self.evaluated {
            for (k, v) in ev {
                let _ = writeln!(s, "{k}: {v}");
            }
        }
        if let Some(r) = &self.reconciliation {
            let _ = writeln!(s, "\n{:<22}{:>6}{:>8}{:>8}{:>8}  per step 1..6", "table row", "table", "circuit", "budget", "used");
            for row in &r.rows {
                let mark = if row.status == crate::ec::RowStatus::Exact { "" } else { "  <-- flagged" };
                let _ = writeln!(
                    s,
                    "{:<22}{:>6}{:>8}{:>8}{:>8}  {:?}{mark}",
                    row.family, row.table, row.circuit, row.residual_budget, row.residual_used, row.per_step
                );
            }
        }
        for e in &self.trace {
            let regs: Vec<String> = e.outputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "{:<40} {}", e.path, regs.join(" "));
        }
        for f in &self.failures {
            let at = match (f.p, f.q) {
                (Some(p), Some(q)) => format!("P={p} Q={q} "),
                _ => String::new(),
            };
            let _ = writeln!(s, "FAIL {at}{:?}: {}", f.kind, f.detail);
        }
        s
    }
}

/// `P + Q` on one input.
pub fn cmd_simulate(
    curve: &CurveParams,
    p: AffinePoint,
    q: AffinePoint,
    variant: VariantName,
    trace: bool,
) -> Result<RunReport, HarnessError> {
    curve.check(p)?;
    curve.check(q)?;
    let mut report = RunReport::new("simulate", curve, &[variant]);
    let case = run_case(curve, p, q, variant.fixes())?;
    report.cases = 1;
    report.result = case.result;
    report.classes.insert(case.class, ClassTally { cases: 1, failures: case.failure.is_some() as u64 });
    match case.failure {
        Some(mut f) => {
            if !trace {
                f.trace.clear();
            }
            report.failures.push(f);
        }
        None if trace => {
            let circuit = build_ec_add(curve, q, variant.fixes())?;
            if let Ok((_, t)) = circuit.run_trace(p, Mode::Shallow) {
                report.trace = t;
            }
        }
        None => {}
    }
    Ok(report.seal())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuzzMode {
    /// Every ordered pair of curve points, identity included.
    Exhaustive,
    /// `samples` pairs drawn uniformly with a seeded generator.
    Sampled { samples: u64, seed: u64 },
}

pub fn fuzz_pairs(curve: &CurveParams, mode: FuzzMode) -> Vec<(AffinePoint, AffinePoint)> {
    let pts = curve.points();
    match mode {
        FuzzMode::Exhaustive => pts.iter().flat_map(|p| pts.iter().map(move |q| (*p, *q))).collect(),
        FuzzMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples)
                .map(|_| (pts[rng.gen_range(0..pts.len())], pts[rng.gen_range(0..pts.len())]))
                .collect()
        }
    }
}

pub fn cmd_fuzz(curve: &CurveParams, variant: VariantName, mode: FuzzMode) -> Result<RunReport, HarnessError> {
    let fixes = variant.fixes();
    let pairs = fuzz_pairs(curve, mode);
    let mut results: Vec<CaseResult> =
        pairs.par_iter().map(|(p, q)| run_case(curve, *p, *q, fixes)).collect::<Result<_, _>>()?;
    results.sort_by(|a, b| (a.p, a.q).cmp(&(b.p, b.q)));
    let mut report = RunReport::new("fuzz", curve, &[variant]);
    report.cases = results.len() as u64;
    for r in &results {
        let t = report.classes.entry(r.class).or_default();
        t.cases += 1;
        t.failures += !r.passed() as u64;
    }
    if mode == FuzzMode::Exhaustive {
        report.classes_absent = EdgeClass::ALL.iter().filter(|c| !report.classes.contains_key(c)).copied().collect();
    }
    report.failures = results.into_iter().filter_map(|r| r.failure).collect();
    Ok(report.seal())
}

/// Symbolic cost report. With two variants, `delta` is first minus second.
pub fn cmd_census(curve: &CurveParams, variants: &[VariantName], n: Option<i64>) -> Result<RunReport, HarnessError> {
    let variants: Vec<VariantName> = if variants.is_empty() { vec![VariantName::Corrected] } else { variants.to_vec() };
    let field = *curve.field();
    let mut cache = CostCache::new();
    let mut report = RunReport::new("census", curve, &variants);
    let first = EcAdd::new(variants[0].fixes(), field);
    let circuit = first.decompose().expect("well-formed circuit");
    let totals = leaf_census(&circuit)?.totals;
    report.census = totals.iter().map(|(f, c)| (f.name(), *c)).collect();
    let total = cache.circuit_cost(&circuit)?;
    let peak = cache.circuit_peak(&circuit)?;
    report.leading_term = total.leading_term().map(|(d, c)| CostPolynomial::term(d, c).to_string());
    if let Some(n) = n {
        report.evaluated = Some(BTreeMap::from([
            ("n".to_string(), n.to_string()),
            ("toffoli_total".to_string(), total.eval(n).to_string()),
            ("peak_ancilla".to_string(), peak.eval(n).to_string()),
        ]));
    }
    report.toffoli_total = Some(total.clone());
    report.peak_ancilla = Some(peak);
    if let Some(second) = variants.get(1) {
        let other = EcAdd::new(second.fixes(), field).decompose().expect("well-formed circuit");
        report.delta = Some(total - cache.circuit_cost(&other)?);
    }
    let rec = reconcile(&first)?;
    // Buggy variants differ from the reference counts by construction.
    if variants[0] == VariantName::Corrected && !rec.acceptable() {
        report.failures.push(Failure::note("census outside the reference budget".to_string()));
    }
    report.reconciliation = Some(rec);
    Ok(report.seal())
}

/// Trigger inputs of each defect on `curve`, in canonical order.
pub fn bug_triggers(curve: &CurveParams, bug: Bug) -> Result<Vec<(AffinePoint, AffinePoint)>, HarnessError> {
    let pts = curve.points();
    let first = |class: EdgeClass| {
        pts.iter()
            .flat_map(|p| pts.iter().map(move |q| (*p, *q)))
            .find(|(p, q)| classify(*p, *q, curve) == class)
    };
    let torsion = || curve.affine_points().into_iter().find(|t| t.y == 0);
    let absent = |what: &str| HarnessError::TriggerAbsent(format!("fixture {curve} has no {what}"));
    Ok(match bug {
        Bug::Step2 | Bug::Step5 => {
            vec![first(EdgeClass::TangentCoincidence).ok_or_else(|| absent("pair with P = -2Q"))?]
        }
        Bug::Step6a => {
            let t = torsion().ok_or_else(|| absent("2-torsion point"))?;
            vec![(AffinePoint::IDENTITY, t), (t, AffinePoint::IDENTITY)]
        }
        Bug::Step6b => {
            let t = torsion().ok_or_else(|| absent("2-torsion point"))?;
            vec![(t, t)]
        }
    })
}

pub fn cmd_repro_bugs(curve: &CurveParams) -> Result<RunReport, HarnessError> {
    let triggers: Vec<(Bug, Vec<(AffinePoint, AffinePoint)>)> =
        Bug::ALL.iter().map(|b| Ok((*b, bug_triggers(curve, *b)?))).collect::<Result<_, HarnessError>>()?;
    let mut report = RunReport::new("repro-bugs", curve, &VariantName::ALL[..5]);
    for (bug, inputs) in triggers {
        let mut cases = Vec::new();
        for (p, q) in inputs {
            let buggy = run_case(curve, p, q, buggy_variant(bug))?;
            let corrected = run_case(curve, p, q, Fixes::CORRECTED)?;
            report.cases += 2;
            cases.push(BugCase { p, q, class: buggy.class, buggy: buggy.failure, corrected: corrected.failure });
        }
        let reproduced = cases.iter().all(|c| {
            c.buggy
                .as_ref()
                .is_some_and(|f| f.kind == FailureKind::Violation && f.register.as_deref() == Some(bug.register()))
        });
        let fixed = cases.iter().all(|c| c.corrected.is_none());
        for c in &cases {
            if !reproduced {
                report.failures.push(Failure {
                    kind: FailureKind::NotReproduced,
                    p: Some(c.p),
                    q: Some(c.q),
                    class: Some(c.class),
                    register: Some(bug.register().to_string()),
                    value: None,
                    plain_value: None,
                    detail: format!("{} did not leave {} dirty", bug.name(), bug.register()),
                    trace: Vec::new(),
                });
            }
            if let Some(f) = &c.corrected {
                report.failures.push(f.clone());
            }
        }
        report.bugs.push(BugRepro { bug, register: bug.register().to_string(), cases, reproduced, fixed });
    }
    Ok(report.seal())
}

/// Structural validation of the full circuit and each step, plus the
/// declared gate census of every step.
pub fn cmd_validate(curve: &CurveParams, variant: VariantName) -> Result<RunReport, HarnessError> {
    let gate = EcAdd::new(variant.fixes(), *curve.field());
    let mut report = RunReport::new("validate", curve, &[variant]);
    let top = gate.decompose().expect("well-formed circuit");
    let expected_steps = top.gates().map(|g| (g.family(), 1)).collect();
    for f in validate_circuit(&top, Some(&expected_steps)).findings {
        report.failures.push(Failure::finding(&f, &gate.name()));
    }
    report.cases = 1;
    for step in gate.steps() {
        report.cases += 1;
        let sub = step.decompose().expect("well-formed step");
        for f in validate_circuit(&sub, Some(&step.declared_census())).findings {
            report.failures.push(Failure::finding(&f, &step.name()));
        }
    }
    let totals = leaf_census(&top)?.totals;
    if totals != gate.declared_census() {
        report.failures.push(Failure::note(format!("{}: leaf census differs from the sum of step declarations", gate.name())));
    }
    report.census = totals.iter().map(|(f, c)| (f.name(), *c)).collect();
    report.reconciliation = Some(reconcile(&gate)?);
    Ok(report.seal())
}
