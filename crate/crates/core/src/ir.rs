//! Typed intermediate representation for hierarchical reversible circuits.
//!
//! A [`CompositeCircuit`] is a DAG of gate instances connected by wires. Every
//! wire has exactly one producer (a boundary input, a gate output port or an
//! `Alloc` node) and must have exactly one consumer (a gate input port, a
//! `Free` node or a boundary output). Nodes are stored in construction order,
//! which is a topological order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{IrError, SimError};
use crate::sim::Registers;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataKind {
    Bit,
    UInt(u32),
    MontUInt { width: u32, modulus: u64 },
}

impl DataKind {
    pub fn width(&self) -> u32 {
        match *self {
            DataKind::Bit => 1,
            DataKind::UInt(w) => w,
            DataKind::MontUInt { width, .. } => width,
        }
    }

    /// Exclusive upper bound on the values a register of this kind may hold.
    pub fn bound(&self) -> u64 {
        match *self {
            DataKind::Bit => 2,
            DataKind::UInt(w) => 1u64 << w,
            DataKind::MontUInt { modulus, .. } => modulus,
        }
    }

    pub fn is_word(&self) -> bool {
        !matches!(self, DataKind::Bit)
    }

    fn class(&self) -> u8 {
        match self {
            DataKind::Bit => 0,
            DataKind::UInt(_) => 1,
            DataKind::MontUInt { .. } => 2,
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataKind::Bit => write!(f, "Bit"),
            DataKind::UInt(w) => write!(f, "UInt({w})"),
            DataKind::MontUInt { width, modulus } => write!(f, "MontUInt({width}, {modulus})"),
        }
    }
}

/// Result of comparing a wire kind against a port kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindCheck {
    Match,
    /// Same data type, different width.
    Bitsize,
    /// Different data type (or different modulus).
    Kind,
}

pub fn check_kind(expected: DataKind, found: DataKind) -> KindCheck {
    if expected == found {
        return KindCheck::Match;
    }
    if expected.class() != found.class() {
        return KindCheck::Kind;
    }
    match (expected, found) {
        (
            DataKind::MontUInt { modulus: m1, width: w1 },
            DataKind::MontUInt { modulus: m2, width: w2 },
        ) if m1 != m2 && w1 == w2 => KindCheck::Kind,
        _ => KindCheck::Bitsize,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
    Thru,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterSpec {
    pub name: String,
    pub kind: DataKind,
    pub direction: Direction,
}

impl RegisterSpec {
    pub fn thru(name: impl Into<String>, kind: DataKind) -> Self {
        RegisterSpec { name: name.into(), kind, direction: Direction::Thru }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature(pub Vec<RegisterSpec>);

impl Signature {
    pub fn thru(regs: impl IntoIterator<Item = (String, DataKind)>) -> Self {
        Signature(regs.into_iter().map(|(n, k)| RegisterSpec::thru(n, k)).collect())
    }

    pub fn get(&self, name: &str) -> Option<&RegisterSpec> {
        self.0.iter().find(|r| r.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &RegisterSpec> {
        self.0.iter().filter(|r| r.direction != Direction::Output)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &RegisterSpec> {
        self.0.iter().filter(|r| r.direction != Direction::Input)
    }
}

/// Census family of a gate. Adjoints share the family of their base gate and
/// all multi-controlled Toffolis share one bucket.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    MultiControlToffoli,
    ModAdd,
    CModAdd,
    ModSub,
    CModSub,
    ModNeg,
    CModNeg,
    ModDbl,
    ModMult,
    ModInv,
    Equals,
    CEquals,
    Composite(String),
}

impl Family {
    /// The leaf families that appear in the resource table, in table order.
    pub const TABLE: [Family; 12] = [
        Family::MultiControlToffoli,
        Family::ModAdd,
        Family::CModAdd,
        Family::ModSub,
        Family::CModSub,
        Family::ModNeg,
        Family::CModNeg,
        Family::ModDbl,
        Family::ModMult,
        Family::ModInv,
        Family::Equals,
        Family::CEquals,
    ];

    pub fn name(&self) -> String {
        match self {
            Family::MultiControlToffoli => "MultiControlToffoli".into(),
            Family::Composite(s) => s.clone(),
            other => format!("{other:?}"),
        }
    }

    pub fn parse(s: &str) -> Family {
        Family::TABLE
            .iter()
            .find(|f| f.name() == s)
            .cloned()
            .unwrap_or_else(|| Family::Composite(s.to_string()))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Which version of a circuit a gate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Corrected,
    Buggy,
}

/// Shape parameters a leaf gate exposes to the cost model. Word-valued
/// operands are `n` bits wide, bits are one bit wide.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CostShape {
    /// Cost is the registry formula of the family.
    Table(Family),
    /// Equality test of `words` n-bit words per side.
    Equals { words: u32 },
    /// NOT on one target, controlled on `bits` single qubits and `words` full registers.
    MultiControl { bits: u32, words: u32 },
    /// Register-wide controlled XOR of an n-bit source into an n-bit target.
    Fan { bits: u32, words: u32 },
}

/// A reversible subroutine: either a leaf with a classical action and a cost
/// shape, or a composite that decomposes into a [`CompositeCircuit`].
pub trait Gate: fmt::Debug + Send + Sync {
    /// Identity string including all parameters; equal names mean equal gates.
    fn name(&self) -> String;

    fn family(&self) -> Family;

    fn signature(&self) -> Signature;

    fn variant(&self) -> Variant {
        Variant::Corrected
    }

    fn cost_shape(&self) -> Option<CostShape> {
        None
    }

    fn is_leaf(&self) -> bool {
        self.cost_shape().is_some()
    }

    fn decompose(&self) -> Result<CompositeCircuit, IrError> {
        Err(IrError::LeafHasNoDecomposition(self.name()))
    }

    /// Classical action on computational basis values, in place.
    fn apply(&self, regs: &mut Registers) -> Result<(), SimError>;
}

pub fn decompose(gate: &dyn Gate) -> Result<CompositeCircuit, IrError> {
    gate.decompose()
}

pub type WireId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Boundary,
    Node(usize),
}

#[derive(Clone, Debug)]
pub struct Wire {
    pub kind: DataKind,
    /// Name of the logical register flowing on this wire.
    pub register: String,
    pub source: Endpoint,
}

#[derive(Clone, Debug)]
pub enum Op {
    Gate(Arc<dyn Gate>),
    Alloc(DataKind),
    Free(DataKind),
}

/// Port name used by `Alloc` outputs and `Free` inputs.
pub const ANCILLA_PORT: &str = "reg";

#[derive(Clone, Debug)]
pub struct Node {
    pub label: String,
    pub op: Op,
    pub inputs: Vec<(String, WireId)>,
    pub outputs: Vec<(String, WireId)>,
}

impl Node {
    pub fn gate(&self) -> Option<&Arc<dyn Gate>> {
        match &self.op {
            Op::Gate(g) => Some(g),
            _ => None,
        }
    }
}

/// A DAG of gate instances. Fields are public so that callers can inspect
/// the graph and build deliberately malformed circuits for the validator;
/// circuits built through [`CircuitBuilder`] are well formed.
#[derive(Clone, Debug)]
pub struct CompositeCircuit {
    pub name: String,
    pub signature: Signature,
    pub inputs: Vec<(String, WireId)>,
    pub nodes: Vec<Node>,
    pub wires: Vec<Wire>,
    pub outputs: Vec<(String, WireId)>,
}

impl CompositeCircuit {
    /// Single-node circuit applying `gate` to its own signature.
    pub fn from_gate(gate: Arc<dyn Gate>) -> Self {
        let sig = gate.signature();
        let mut b = CircuitBuilder::new(gate.name());
        let wiring: Vec<(String, Handle)> = sig
            .inputs()
            .map(|r| (r.name.clone(), b.add_register(r.name.clone(), r.kind)))
            .collect();
        let refs: Vec<(&str, Handle)> = wiring.iter().map(|(n, h)| (n.as_str(), *h)).collect();
        let ports = b.add(gate, &refs).expect("gate wired to its own signature");
        let outs: Vec<(String, Handle)> = sig.outputs().map(|r| (r.name.clone(), ports[&r.name])).collect();
        let refs: Vec<(&str, Handle)> = outs.iter().map(|(n, h)| (n.as_str(), *h)).collect();
        b.finalize(&refs).expect("gate wired to its own signature")
    }

    pub fn gates(&self) -> impl Iterator<Item = &Arc<dyn Gate>> {
        self.nodes.iter().filter_map(Node::gate)
    }
}

/// Opaque reference to a live wire inside a [`CircuitBuilder`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Handle(WireId);

pub type Ports = BTreeMap<String, Handle>;

pub struct CircuitBuilder {
    name: String,
    input_specs: Vec<(String, DataKind)>,
    inputs: Vec<(String, WireId)>,
    nodes: Vec<Node>,
    wires: Vec<Wire>,
    consumed: Vec<bool>,
}

impl CircuitBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        CircuitBuilder {
            name: name.into(),
            input_specs: Vec::new(),
            inputs: Vec::new(),
            nodes: Vec::new(),
            wires: Vec::new(),
            consumed: Vec::new(),
        }
    }

    fn new_wire(&mut self, kind: DataKind, register: String, source: Endpoint) -> WireId {
        self.wires.push(Wire { kind, register, source });
        self.consumed.push(false);
        self.wires.len() - 1
    }

    /// Declares an input register of the circuit being built.
    pub fn add_register(&mut self, name: impl Into<String>, kind: DataKind) -> Handle {
        let name = name.into();
        let w = self.new_wire(kind, name.clone(), Endpoint::Boundary);
        self.input_specs.push((name.clone(), kind));
        self.inputs.push((name, w));
        Handle(w)
    }

    pub fn kind_of(&self, h: Handle) -> DataKind {
        self.wires[h.0].kind
    }

    /// Allocates a fresh ancilla register, initialised to zero.
    pub fn alloc(&mut self, kind: DataKind, name: impl Into<String>) -> Handle {
        let name = name.into();
        let idx = self.nodes.len();
        let w = self.new_wire(kind, name.clone(), Endpoint::Node(idx));
        self.nodes.push(Node {
            label: format!("alloc[{name}]"),
            op: Op::Alloc(kind),
            inputs: Vec::new(),
            outputs: vec![(ANCILLA_PORT.to_string(), w)],
        });
        Handle(w)
    }

    fn consume(&mut self, h: Handle, location: &str) -> Result<(), IrError> {
        match self.consumed.get(h.0) {
            None => Err(IrError::DanglingPort(format!("{location}: unknown handle"))),
            Some(true) => Err(IrError::PortReconnected(location.to_string())),
            Some(false) => {
                self.consumed[h.0] = true;
                Ok(())
            }
        }
    }

    /// Releases an ancilla; simulation asserts it holds zero at this point.
    pub fn free(&mut self, h: Handle) -> Result<(), IrError> {
        let register = self.wires.get(h.0).map(|w| w.register.clone()).unwrap_or_default();
        let label = format!("free[{register}]");
        self.consume(h, &label)?;
        let kind = self.wires[h.0].kind;
        self.nodes.push(Node {
            label,
            op: Op::Free(kind),
            inputs: vec![(ANCILLA_PORT.to_string(), h.0)],
            outputs: Vec::new(),
        });
        Ok(())
    }

    /// Appends a gate. Every input port of the gate must be wired exactly once
    /// with a live handle of the matching kind; the handles are consumed and
    /// fresh handles for the output ports are returned.
    pub fn add(
        &mut self,
        gate: impl Into<Arc<dyn Gate>>,
        wiring: &[(&str, Handle)],
    ) -> Result<Ports, IrError> {
        let gate: Arc<dyn Gate> = gate.into();
        let sig = gate.signature();
        let idx = self.nodes.len();
        let label = format!("{idx}:{}", gate.name());
        let mut seen: HashMap<&str, Handle> = HashMap::new();
        for &(port, h) in wiring {
            let loc = format!("{label}.{port}");
            if seen.insert(port, h).is_some() {
                return Err(IrError::PortReconnected(loc));
            }
            let spec = sig
                .get(port)
                .filter(|s| s.direction != Direction::Output)
                .ok_or_else(|| IrError::DanglingPort(format!("{loc}: no such input port")))?;
            let found = self
                .wires
                .get(h.0)
                .ok_or_else(|| IrError::DanglingPort(format!("{loc}: unknown handle")))?
                .kind;
            match check_kind(spec.kind, found) {
                KindCheck::Match => {}
                KindCheck::Bitsize => {
                    return Err(IrError::BitsizeMismatch {
                        location: loc,
                        expected: spec.kind.to_string(),
                        found: found.to_string(),
                    })
                }
                KindCheck::Kind => {
                    return Err(IrError::KindMismatch {
                        location: loc,
                        expected: spec.kind.to_string(),
                        found: found.to_string(),
                    })
                }
            }
        }
        for spec in sig.inputs() {
            if !seen.contains_key(spec.name.as_str()) {
                return Err(IrError::DanglingPort(format!("{label}.{}", spec.name)));
            }
        }
        // Linear use: a handle may feed only one port and only once.
        let mut handles: Vec<Handle> = seen.values().copied().collect();
        handles.sort_by_key(|h| h.0);
        if handles.windows(2).any(|w| w[0] == w[1]) {
            return Err(IrError::PortReconnected(label));
        }
        for &(port, h) in wiring {
            if self.consumed[h.0] {
                return Err(IrError::PortReconnected(format!("{label}.{port}")));
            }
        }
        let mut inputs = Vec::with_capacity(wiring.len());
        for spec in sig.inputs() {
            let h = seen[spec.name.as_str()];
            self.consumed[h.0] = true;
            inputs.push((spec.name.clone(), h.0));
        }
        let mut outputs = Vec::new();
        let mut ports = Ports::new();
        for spec in sig.outputs() {
            let register = match seen.get(spec.name.as_str()) {
                Some(h) => self.wires[h.0].register.clone(),
                None => spec.name.clone(),
            };
            let w = self.new_wire(spec.kind, register, Endpoint::Node(idx));
            outputs.push((spec.name.clone(), w));
            ports.insert(spec.name.clone(), Handle(w));
        }
        self.nodes.push(Node { label, op: Op::Gate(gate), inputs, outputs });
        Ok(ports)
    }

    /// Closes the circuit. Registers named both as inputs and outputs become
    /// `thru`; any other live handle left over is an error.
    pub fn finalize(mut self, outputs: &[(&str, Handle)]) -> Result<CompositeCircuit, IrError> {
        let mut specs: Vec<RegisterSpec> = Vec::new();
        let mut out_bindings = Vec::new();
        let mut out_names: BTreeMap<&str, DataKind> = BTreeMap::new();
        for &(name, h) in outputs {
            let loc = format!("output {name}");
            if out_names.insert(name, self.kind_of(h)).is_some() {
                return Err(IrError::PortReconnected(loc));
            }
            self.consume(h, &loc)?;
            out_bindings.push((name.to_string(), h.0));
        }
        for (name, kind) in &self.input_specs {
            let direction = match out_names.get(name.as_str()) {
                Some(&k) => {
                    if k != *kind {
                        return Err(IrError::KindMismatch {
                            location: format!("output {name}"),
                            expected: kind.to_string(),
                            found: k.to_string(),
                        });
                    }
                    Direction::Thru
                }
                None => Direction::Input,
            };
            specs.push(RegisterSpec { name: name.clone(), kind: *kind, direction });
        }
        for &(name, _) in outputs {
            if !self.input_specs.iter().any(|(n, _)| n == name) {
                specs.push(RegisterSpec {
                    name: name.to_string(),
                    kind: out_names[name],
                    direction: Direction::Output,
                });
            }
        }
        if let Some(w) = self.consumed.iter().position(|c| !c) {
            return Err(IrError::DanglingPort(format!(
                "register `{}` is never consumed",
                self.wires[w].register
            )));
        }
        Ok(CompositeCircuit {
            name: self.name,
            signature: Signature(specs),
            inputs: self.inputs,
            nodes: self.nodes,
            wires: self.wires,
            outputs: out_bindings,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FindingCode {
    DanglingPort,
    PortReconnected,
    BitsizeMismatch,
    KindMismatch,
    CensusMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub location: String,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn from_findings(findings: Vec<Finding>) -> Self {
        let verdict = if findings.is_empty() { Verdict::Pass } else { Verdict::Fail };
        ValidationReport { verdict, findings }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn has(&self, code: FindingCode) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

/// Structural validation. When `expected_census` is given, the multiset of
/// direct child gate families is compared against it.
pub fn validate(
    circuit: &CompositeCircuit,
    expected_census: Option<&BTreeMap<Family, u64>>,
) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |code, location: String, detail: String| {
        findings.push(Finding { code, location, detail });
    };
    let mut uses = vec![0usize; circuit.wires.len()];

    let kind_finding = |expected: DataKind, found: DataKind| match check_kind(expected, found) {
        KindCheck::Match => None,
        KindCheck::Bitsize => Some(FindingCode::BitsizeMismatch),
        KindCheck::Kind => Some(FindingCode::KindMismatch),
    };

    // Boundary inputs.
    for spec in circuit.signature.inputs() {
        match circuit.inputs.iter().find(|(n, _)| *n == spec.name) {
            None => push(
                FindingCode::DanglingPort,
                format!("input {}", spec.name),
                "signature input has no wire".into(),
            ),
            Some(&(_, w)) => match circuit.wires.get(w) {
                Some(wire) => {
                    if let Some(code) = kind_finding(spec.kind, wire.kind) {
                        push(code, format!("input {}", spec.name), format!("{} vs {}", spec.kind, wire.kind));
                    }
                }
                None => push(FindingCode::DanglingPort, format!("input {}", spec.name), "wire missing".into()),
            },
        }
    }

    for (idx, node) in circuit.nodes.iter().enumerate() {
        let (in_specs, out_specs): (Vec<(String, DataKind)>, Vec<(String, DataKind)>) = match &node.op {
            Op::Gate(g) => {
                let sig = g.signature();
                (
                    sig.inputs().map(|r| (r.name.clone(), r.kind)).collect(),
                    sig.outputs().map(|r| (r.name.clone(), r.kind)).collect(),
                )
            }
            Op::Alloc(k) => (Vec::new(), vec![(ANCILLA_PORT.to_string(), *k)]),
            Op::Free(k) => (vec![(ANCILLA_PORT.to_string(), *k)], Vec::new()),
        };
        let loc = |port: &str| format!("node {idx} ({}) port {port}", node.label);

        let mut seen_in: BTreeMap<&str, usize> = BTreeMap::new();
        for (port, w) in &node.inputs {
            *seen_in.entry(port.as_str()).or_default() += 1;
            let Some(wire) = circuit.wires.get(*w) else {
                push(FindingCode::DanglingPort, loc(port), format!("wire {w} does not exist"));
                continue;
            };
            uses[*w] += 1;
            if let Endpoint::Node(src) = wire.source {
                if src >= idx {
                    push(FindingCode::DanglingPort, loc(port), "consumes a wire produced later (cycle)".into());
                }
            }
            match in_specs.iter().find(|(n, _)| n == port) {
                None => push(FindingCode::DanglingPort, loc(port), "no such input port".into()),
                Some((_, k)) => {
                    if let Some(code) = kind_finding(*k, wire.kind) {
                        push(code, loc(port), format!("port {k}, wire {}", wire.kind));
                    }
                }
            }
        }
        for (port, count) in &seen_in {
            if *count > 1 {
                push(FindingCode::PortReconnected, loc(port), format!("{count} wires on one port"));
            }
        }
        for (port, _) in &in_specs {
            if !seen_in.contains_key(port.as_str()) {
                push(FindingCode::DanglingPort, loc(port), "input port not connected".into());
            }
        }
        for (port, kind) in &out_specs {
            match node.outputs.iter().find(|(n, _)| n == port) {
                None => push(FindingCode::DanglingPort, loc(port), "output port not connected".into()),
                Some((_, w)) => match circuit.wires.get(*w) {
                    Some(wire) => {
                        if let Some(code) = kind_finding(*kind, wire.kind) {
                            push(code, loc(port), format!("port {kind}, wire {}", wire.kind));
                        }
                    }
                    None => push(FindingCode::DanglingPort, loc(port), "wire missing".into()),
                },
            }
        }
    }

    for spec in circuit.signature.outputs() {
        let bound: Vec<_> = circuit.outputs.iter().filter(|(n, _)| *n == spec.name).collect();
        if bound.is_empty() {
            push(FindingCode::DanglingPort, format!("output {}", spec.name), "signature output has no wire".into());
        }
        if bound.len() > 1 {
            push(FindingCode::PortReconnected, format!("output {}", spec.name), "bound more than once".into());
        }
        for (_, w) in bound {
            if let Some(wire) = circuit.wires.get(*w) {
                if let Some(code) = kind_finding(spec.kind, wire.kind) {
                    push(code, format!("output {}", spec.name), format!("{} vs {}", spec.kind, wire.kind));
                }
            }
        }
    }
    for (name, w) in &circuit.outputs {
        if circuit.signature.outputs().all(|s| s.name != *name) {
            push(FindingCode::DanglingPort, format!("output {name}"), "not in the signature".into());
        }
        if let Some(u) = uses.get_mut(*w) {
            *u += 1;
        }
    }

    for (w, count) in uses.iter().enumerate() {
        let wire = &circuit.wires[w];
        let loc = format!("wire {w} (register {})", wire.register);
        match count {
            0 => push(FindingCode::DanglingPort, loc, "wire is never consumed".into()),
            1 => {}
            n => push(FindingCode::PortReconnected, loc, format!("wire consumed {n} times")),
        }
    }

    if let Some(expected) = expected_census {
        let mut actual: BTreeMap<Family, u64> = BTreeMap::new();
        for g in circuit.gates() {
            *actual.entry(g.family()).or_default() += 1;
        }
        let families: std::collections::BTreeSet<&Family> = expected.keys().chain(actual.keys()).collect();
        for fam in families {
            let e = expected.get(fam).copied().unwrap_or(0);
            let a = actual.get(fam).copied().unwrap_or(0);
            if e != a {
                push(FindingCode::CensusMismatch, fam.name(), format!("expected {e}, found {a}"));
            }
        }
    }

    ValidationReport::from_findings(findings)
}

/// How many levels of decomposition [`flatten`] inlines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Depth {
    Levels(u32),
    Unlimited,
}

impl Depth {
    fn next(self) -> Option<Depth> {
        match self {
            Depth::Levels(0) => None,
            Depth::Levels(d) => Some(Depth::Levels(d - 1)),
            Depth::Unlimited => Some(Depth::Unlimited),
        }
    }
}

/// Inlines the decompositions of composite children down to `depth` levels.
pub fn flatten(circuit: &CompositeCircuit, depth: Depth) -> Result<CompositeCircuit, IrError> {
    let mut out = CompositeCircuit {
        name: circuit.name.clone(),
        signature: circuit.signature.clone(),
        inputs: Vec::new(),
        nodes: Vec::new(),
        wires: Vec::new(),
        outputs: Vec::new(),
    };
    let mut map: Vec<Option<WireId>> = vec![None; circuit.wires.len()];
    for (name, w) in &circuit.inputs {
        let nw = copy_wire(&mut out, &circuit.wires[*w], Endpoint::Boundary);
        map[*w] = Some(nw);
        out.inputs.push((name.clone(), nw));
    }
    splice_nodes(&mut out, circuit, &mut map, depth, "")?;
    for (name, w) in &circuit.outputs {
        let nw = map[*w].ok_or_else(|| IrError::DanglingPort(format!("output {name}")))?;
        out.outputs.push((name.clone(), nw));
    }
    Ok(out)
}

fn copy_wire(out: &mut CompositeCircuit, wire: &Wire, source: Endpoint) -> WireId {
    out.wires.push(Wire { kind: wire.kind, register: wire.register.clone(), source });
    out.wires.len() - 1
}

/// Appends the nodes of `src` to `out`. `map` translates wires of `src` into
/// wires of `out` and must already contain the boundary inputs of `src`.
fn splice_nodes(
    out: &mut CompositeCircuit,
    src: &CompositeCircuit,
    map: &mut [Option<WireId>],
    depth: Depth,
    prefix: &str,
) -> Result<(), IrError> {
    for node in &src.nodes {
        let label = format!("{prefix}{}", node.label);
        let mut translated_inputs = Vec::with_capacity(node.inputs.len());
        for (port, w) in &node.inputs {
            let nw = map
                .get(*w)
                .copied()
                .flatten()
                .ok_or_else(|| IrError::DanglingPort(format!("{label}.{port}")))?;
            translated_inputs.push((port.clone(), nw));
        }
        let inline = match (&node.op, depth.next()) {
            (Op::Gate(g), Some(d)) if !g.is_leaf() => Some((g.clone(), d)),
            _ => None,
        };
        if let Some((gate, sub_depth)) = inline {
            let sub = gate.decompose()?;
            let mut sub_map: Vec<Option<WireId>> = vec![None; sub.wires.len()];
            for (name, w) in &sub.inputs {
                let (_, outer) = translated_inputs
                    .iter()
                    .find(|(p, _)| p == name)
                    .ok_or_else(|| IrError::DanglingPort(format!("{label}.{name}")))?;
                sub_map[*w] = Some(*outer);
            }
            splice_nodes(out, &sub, &mut sub_map, sub_depth, &format!("{label}/"))?;
            for (port, w) in &node.outputs {
                let (_, inner) = sub
                    .outputs
                    .iter()
                    .find(|(n, _)| n == port)
                    .ok_or_else(|| IrError::DanglingPort(format!("{label}.{port}")))?;
                map[*w] = sub_map[*inner];
            }
        } else {
            let idx = out.nodes.len();
            let mut outputs = Vec::with_capacity(node.outputs.len());
            for (port, w) in &node.outputs {
                let nw = copy_wire(out, &src.wires[*w], Endpoint::Node(idx));
                map[*w] = Some(nw);
                outputs.push((port.clone(), nw));
            }
            out.nodes.push(Node { label, op: node.op.clone(), inputs: translated_inputs, outputs });
        }
    }
    Ok(())
}
