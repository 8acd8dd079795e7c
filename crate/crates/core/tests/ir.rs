mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::*;
use ecadd::cost::{self, CostCache};
use ecadd::ec::{build_ec_add, AffinePoint, CurveParams, EcAdd, Fixes};
use ecadd::error::{IrError, SimError};
use ecadd::field::FieldParams;
use ecadd::gates::{arc, Control, Equals, ModArith, MultiControlX};
use ecadd::ir::{
    decompose, flatten, validate, CircuitBuilder, CompositeCircuit, DataKind, Depth, Direction, Family, Gate, Op,
    Signature,
};
use ecadd::sim::{simulate, Mode, Registers};
use proptest::prelude::*;

fn f17() -> FieldParams {
    FieldParams::new(P17).unwrap()
}

fn word() -> DataKind {
    DataKind::MontUInt { width: N17, modulus: P17 }
}

fn not_gate() -> Arc<dyn Gate> {
    arc(MultiControlX::new(&[], f17()))
}

#[test]
fn fresh_ancilla_frees_clean() {
    let mut b = CircuitBuilder::new("clean");
    let h = b.alloc(DataKind::Bit, "t");
    b.free(h).unwrap();
    let c = b.finalize(&[]).unwrap();
    assert!(validate(&c, None).passed());
    assert!(simulate(&c, &BTreeMap::new(), Mode::Flattened).unwrap().is_empty());
}

#[test]
fn dirty_ancilla_names_the_free() {
    let mut b = CircuitBuilder::new("dirty");
    let h = b.alloc(DataKind::Bit, "t");
    let out = b.add(not_gate(), &[("target", h)]).unwrap();
    b.free(out["target"]).unwrap();
    let c = b.finalize(&[]).unwrap();
    let err = simulate(&c, &BTreeMap::new(), Mode::Flattened).unwrap_err();
    let v = err.violation().expect("ancilla violation");
    assert_eq!(v.register, "t");
    assert_eq!(v.value, 1);
    assert!(v.path.contains("free[t]"), "{}", v.path);
}

#[test]
fn ancilla_routed_to_output_joins_signature() {
    let mut b = CircuitBuilder::new("routed");
    let h = b.alloc(word(), "acc");
    let c = b.finalize(&[("acc", h)]).unwrap();
    let spec = c.signature.get("acc").unwrap();
    assert_eq!(spec.direction, Direction::Output);
    assert_eq!(spec.kind, word());
    assert!(validate(&c, None).passed());
    let out = simulate(&c, &BTreeMap::new(), Mode::Shallow).unwrap();
    assert_eq!(out["acc"], 0);
}

#[test]
fn builder_rejects_kind_and_width_mismatches() {
    let f = f17();
    let mut b = CircuitBuilder::new("kinds");
    let plain = b.add_register("u", DataKind::UInt(N17));
    let y = b.add_register("y", word());
    let err = b.add(arc(ModArith::add(f)), &[("src", plain), ("dst", y)]).unwrap_err();
    assert!(matches!(err, IrError::KindMismatch { .. }), "{err:?}");

    let mut b = CircuitBuilder::new("widths");
    let wide = b.add_register("w", DataKind::MontUInt { width: 6, modulus: P17 });
    let y = b.add_register("y", word());
    let err = b.add(arc(ModArith::add(f)), &[("src", wide), ("dst", y)]).unwrap_err();
    assert!(matches!(err, IrError::BitsizeMismatch { .. }), "{err:?}");

    let mut b = CircuitBuilder::new("modulus");
    let other = b.add_register("o", DataKind::MontUInt { width: N17, modulus: 19 });
    let y = b.add_register("y", word());
    let err = b.add(arc(ModArith::add(f)), &[("src", other), ("dst", y)]).unwrap_err();
    assert!(matches!(err, IrError::KindMismatch { .. }), "{err:?}");
}

#[test]
fn builder_rejects_reuse() {
    let f = f17();
    let mut b = CircuitBuilder::new("reuse");
    let x = b.add_register("x", word());
    let err = b.add(arc(ModArith::add(f)), &[("src", x), ("dst", x)]).unwrap_err();
    assert!(matches!(err, IrError::PortReconnected(_)), "{err:?}");

    let mut b = CircuitBuilder::new("stale");
    let x = b.add_register("x", word());
    let y = b.add_register("y", word());
    let out = b.add(arc(ModArith::add(f)), &[("src", x), ("dst", y)]).unwrap();
    assert_eq!(out.len(), 2);
    let err = b.add(arc(ModArith::neg(f)), &[("x", x)]).unwrap_err();
    assert!(matches!(err, IrError::PortReconnected(_)), "{err:?}");

    let mut b = CircuitBuilder::new("double free");
    let h = b.alloc(DataKind::Bit, "t");
    b.free(h).unwrap();
    assert!(matches!(b.free(h), Err(IrError::PortReconnected(_))));
}

#[test]
fn builder_rejects_missing_ports_and_leftovers() {
    let f = f17();
    let mut b = CircuitBuilder::new("missing");
    let x = b.add_register("x", word());
    let err = b.add(arc(ModArith::add(f)), &[("src", x)]).unwrap_err();
    assert!(matches!(err, IrError::DanglingPort(_)), "{err:?}");

    let mut b = CircuitBuilder::new("leftover");
    b.add_register("x", word());
    assert!(matches!(b.finalize(&[]), Err(IrError::DanglingPort(_))));

    let mut b = CircuitBuilder::new("unfreed");
    b.alloc(DataKind::Bit, "t");
    assert!(matches!(b.finalize(&[]), Err(IrError::DanglingPort(_))));
}

#[test]
fn leaves_have_no_decomposition() {
    let err = decompose(&ModArith::add(f17())).unwrap_err();
    assert!(matches!(err, IrError::LeafHasNoDecomposition(_)));
}

fn p17() -> CurveParams {
    CurveParams::new(P17, C1, C2).unwrap()
}

#[test]
fn ec_add_decomposes_into_six_steps() {
    let gate = EcAdd::new(Fixes::CORRECTED, f17());
    let c = gate.decompose().unwrap();
    let families: Vec<String> = c.gates().map(|g| g.family().name()).collect();
    let want: Vec<String> = (1..=6).map(|i| format!("EcAddStep{i}")).collect();
    assert_eq!(families, want);
    assert_eq!(c.signature, gate.signature());
    assert!(validate(&c, None).passed());

    let one = flatten(&c, Depth::Levels(0)).unwrap();
    assert_eq!(one.gates().count(), 6);
    let leaves = flatten(&c, Depth::Unlimited).unwrap();
    assert!(leaves.gates().all(|g| g.is_leaf()));
    assert!(validate(&leaves, None).passed());
    let mid = flatten(&c, Depth::Levels(1)).unwrap();
    assert!(mid.gates().all(|g| g.is_leaf()));
}

#[test]
fn every_step_decomposition_is_valid_and_matches_its_declaration() {
    for fixes in [Fixes::CORRECTED, Fixes::ALL_BUGGY] {
        let gate = EcAdd::new(fixes, f17());
        for step in gate.steps() {
            let c = step.decompose().unwrap();
            assert_eq!(c.signature, step.signature());
            let report = validate(&c, Some(&step.declared_census()));
            assert!(report.passed(), "{}: {:?}", step.name(), report.findings);
        }
    }
}

#[test]
fn validation_reports_every_defect_kind() {
    let circuit = build_ec_add(&p17(), AffinePoint::new(1, 5), Fixes::CORRECTED).unwrap().circuit;
    let mut m = circuit.clone();
    let step = m.nodes.iter_mut().find(|n| matches!(n.op, Op::Gate(_))).unwrap();
    step.inputs.retain(|(port, _)| port != "x");
    let r = validate(&m, None);
    assert!(!r.passed());
    assert!(r.has(ecadd::ir::FindingCode::DanglingPort));

    let mut expected = BTreeMap::new();
    expected.insert(Family::Composite("EcAddStep1".into()), 2);
    let r = validate(&circuit, Some(&expected));
    assert!(r.has(ecadd::ir::FindingCode::CensusMismatch));
    assert_eq!(r.findings.len(), 6);
}

#[test]
fn flatten_preserves_action_on_fixture_inputs() {
    let curve = p17();
    for q in points(P17, C1, C2) {
        let built = build_ec_add(&curve, AffinePoint::new(q.0, q.1), Fixes::CORRECTED).unwrap();
        let flat = flatten(&built.circuit, Depth::Unlimited).unwrap();
        for p in points(P17, C1, C2) {
            let inputs = built.inputs(AffinePoint::new(p.0, p.1)).unwrap();
            let a = simulate(&built.circuit, &inputs, Mode::Shallow).unwrap();
            let b = simulate(&flat, &inputs, Mode::Shallow).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn flatten_preserves_cost_and_signature() {
    for fixes in [Fixes::CORRECTED, Fixes::ALL_BUGGY] {
        let c = build_ec_add(&p17(), AffinePoint::new(3, 0), fixes).unwrap().circuit;
        let total = cost::circuit_cost(&c).unwrap();
        for depth in [Depth::Levels(0), Depth::Levels(1), Depth::Unlimited] {
            let flat = flatten(&c, depth).unwrap();
            assert_eq!(flat.signature, c.signature);
            assert_eq!(cost::circuit_cost(&flat).unwrap(), total);
            assert_eq!(cost::census(&flat).unwrap().totals, cost::census(&c).unwrap().totals);
        }
    }
}

/// Random straight-line programs over three words and two bits.
#[derive(Clone, Debug)]
enum Step {
    Add(usize, usize),
    Sub(usize, usize),
    CAdd(usize, usize, usize),
    Neg(usize),
    Dbl(usize),
    Eq(usize, usize, usize),
    Not(usize, usize),
    /// Borrow a zero word, add then subtract a word into it, release it.
    Scratch(usize),
    /// Nested block of steps.
    Block(Vec<Step>),
}

const WORDS: [&str; 3] = ["u", "v", "w"];
const BITS: [&str; 2] = ["c", "t"];

fn leaf_step() -> impl Strategy<Value = Step> {
    let pair = (0..3usize, 0..3usize).prop_filter("distinct", |(a, b)| a != b);
    prop_oneof![
        pair.clone().prop_map(|(a, b)| Step::Add(a, b)),
        pair.clone().prop_map(|(a, b)| Step::Sub(a, b)),
        (0..2usize, pair.clone()).prop_map(|(c, (a, b))| Step::CAdd(c, a, b)),
        (0..3usize).prop_map(Step::Neg),
        (0..3usize).prop_map(Step::Dbl),
        (pair, 0..2usize).prop_map(|((a, b), t)| Step::Eq(a, b, t)),
        (0..2usize).prop_map(|c| Step::Not(c, 1 - c)),
        (0..3usize).prop_map(Step::Scratch),
    ]
}

fn program() -> impl Strategy<Value = Vec<Step>> {
    let step = leaf_step().prop_recursive(2, 16, 4, |inner| prop::collection::vec(inner, 1..4).prop_map(Step::Block));
    prop::collection::vec(step, 1..8)
}

#[derive(Debug)]
struct Block {
    steps: Vec<Step>,
    id: String,
}

impl Block {
    fn new(steps: Vec<Step>) -> Self {
        let id = format!("{steps:?}");
        Block { steps, id }
    }
}

fn state_signature() -> Signature {
    let mut regs: Vec<(String, DataKind)> = WORDS.iter().map(|w| (w.to_string(), word())).collect();
    regs.extend(BITS.iter().map(|b| (b.to_string(), DataKind::Bit)));
    Signature::thru(regs)
}

impl Gate for Block {
    fn name(&self) -> String {
        format!("Block{}", self.id)
    }

    fn family(&self) -> Family {
        Family::Composite("Block".into())
    }

    fn signature(&self) -> Signature {
        state_signature()
    }

    fn decompose(&self) -> Result<CompositeCircuit, IrError> {
        build_program(&self.name(), &self.steps)
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        let f = f17();
        for s in &self.steps {
            match s {
                Step::Add(a, b) => {
                    let v = f.add(regs.get(WORDS[*b])?, regs.get(WORDS[*a])?);
                    regs.set(WORDS[*b], v);
                }
                Step::CAdd(c, a, b) => {
                    if regs.get(BITS[*c])? == 1 {
                        let v = f.add(regs.get(WORDS[*b])?, regs.get(WORDS[*a])?);
                        regs.set(WORDS[*b], v);
                    }
                }
                Step::Sub(a, b) => {
                    let v = f.sub(regs.get(WORDS[*b])?, regs.get(WORDS[*a])?);
                    regs.set(WORDS[*b], v);
                }
                Step::Neg(a) => regs.set(WORDS[*a], f.neg(regs.get(WORDS[*a])?)),
                Step::Dbl(a) => regs.set(WORDS[*a], f.dbl(regs.get(WORDS[*a])?)),
                Step::Eq(a, b, t) => {
                    let eq = regs.get(WORDS[*a])? == regs.get(WORDS[*b])?;
                    regs.flip(BITS[*t], eq)?;
                }
                Step::Not(c, t) => {
                    let on = regs.get(BITS[*c])? == 1;
                    regs.flip(BITS[*t], on)?;
                }
                Step::Scratch(_) => {}
                Step::Block(inner) => Block::new(inner.clone()).apply(regs)?,
            }
        }
        Ok(())
    }
}

fn build_program(name: &str, steps: &[Step]) -> Result<CompositeCircuit, IrError> {
    let f = f17();
    let mut b = CircuitBuilder::new(name);
    let mut h: BTreeMap<&str, ecadd::ir::Handle> = BTreeMap::new();
    for w in WORDS {
        h.insert(w, b.add_register(w, word()));
    }
    for c in BITS {
        h.insert(c, b.add_register(c, DataKind::Bit));
    }
    for s in steps {
        match s {
            Step::Add(a, d) | Step::Sub(a, d) => {
                let g = if matches!(s, Step::Add(..)) { ModArith::add(f) } else { ModArith::sub(f) };
                let out = b.add(arc(g), &[("src", h[WORDS[*a]]), ("dst", h[WORDS[*d]])])?;
                h.insert(WORDS[*a], out["src"]);
                h.insert(WORDS[*d], out["dst"]);
            }
            Step::CAdd(c, a, d) => {
                let g = ModArith::add(f).controlled(&[Control::On]);
                let out = b.add(arc(g), &[("c0", h[BITS[*c]]), ("src", h[WORDS[*a]]), ("dst", h[WORDS[*d]])])?;
                h.insert(BITS[*c], out["c0"]);
                h.insert(WORDS[*a], out["src"]);
                h.insert(WORDS[*d], out["dst"]);
            }
            Step::Neg(a) | Step::Dbl(a) => {
                let g = if matches!(s, Step::Neg(_)) { ModArith::neg(f) } else { ModArith::dbl(f) };
                let out = b.add(arc(g), &[("x", h[WORDS[*a]])])?;
                h.insert(WORDS[*a], out["x"]);
            }
            Step::Eq(x, y, t) => {
                let out = b.add(arc(Equals::new(f)), &[("x0", h[WORDS[*x]]), ("y0", h[WORDS[*y]]), ("target", h[BITS[*t]])])?;
                h.insert(WORDS[*x], out["x0"]);
                h.insert(WORDS[*y], out["y0"]);
                h.insert(BITS[*t], out["target"]);
            }
            Step::Not(c, t) => {
                let g = MultiControlX::new(&[Control::On], f);
                let out = b.add(arc(g), &[("c0", h[BITS[*c]]), ("target", h[BITS[*t]])])?;
                h.insert(BITS[*c], out["c0"]);
                h.insert(BITS[*t], out["target"]);
            }
            Step::Scratch(a) => {
                let s = b.alloc(word(), "scratch");
                let out = b.add(arc(ModArith::add(f)), &[("src", h[WORDS[*a]]), ("dst", s)])?;
                let out = b.add(arc(ModArith::sub(f)), &[("src", out["src"]), ("dst", out["dst"])])?;
                h.insert(WORDS[*a], out["src"]);
                b.free(out["dst"])?;
            }
            Step::Block(inner) => {
                let g: Arc<dyn Gate> = Arc::new(Block::new(inner.clone()));
                let wiring: Vec<(&str, ecadd::ir::Handle)> = WORDS.iter().chain(BITS.iter()).map(|r| (*r, h[r])).collect();
                let out = b.add(g, &wiring)?;
                for r in WORDS.iter().chain(BITS.iter()) {
                    h.insert(r, out[*r]);
                }
            }
        }
    }
    let outs: Vec<(&str, ecadd::ir::Handle)> = WORDS.iter().chain(BITS.iter()).map(|r| (*r, h[r])).collect();
    b.finalize(&outs)
}

fn inputs_strategy() -> impl Strategy<Value = BTreeMap<String, u64>> {
    (prop::array::uniform3(0..P17), prop::array::uniform2(0..2u64)).prop_map(|(w, c)| {
        let mut m = BTreeMap::new();
        for (i, name) in WORDS.iter().enumerate() {
            m.insert(name.to_string(), w[i]);
        }
        for (i, name) in BITS.iter().enumerate() {
            m.insert(name.to_string(), c[i]);
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn builder_output_always_validates(steps in program()) {
        let c = build_program("prog", &steps).unwrap();
        let report = validate(&c, None);
        prop_assert!(report.passed(), "{:?}", report.findings);
        let flat = flatten(&c, Depth::Unlimited).unwrap();
        prop_assert!(validate(&flat, None).passed());
    }

    #[test]
    fn flatten_preserves_signature_action_and_cost(steps in program(), inputs in inputs_strategy()) {
        let c = build_program("prog", &steps).unwrap();
        let flat = flatten(&c, Depth::Unlimited).unwrap();
        prop_assert_eq!(&flat.signature, &c.signature);
        prop_assert!(flat.gates().all(|g| g.is_leaf()));
        let shallow = simulate(&c, &inputs, Mode::Shallow).unwrap();
        prop_assert_eq!(&simulate(&c, &inputs, Mode::Flattened).unwrap(), &shallow);
        prop_assert_eq!(&simulate(&flat, &inputs, Mode::Shallow).unwrap(), &shallow);
        let mut cache = CostCache::new();
        prop_assert_eq!(cache.circuit_cost(&flat).unwrap(), cost::circuit_cost(&c).unwrap());
    }

    #[test]
    fn composite_action_equals_its_decomposition(steps in program(), inputs in inputs_strategy()) {
        let block = Block::new(steps);
        let mut regs: Registers = inputs.clone().into_iter().collect();
        block.apply(&mut regs).unwrap();
        let out = simulate(&block.decompose().unwrap(), &inputs, Mode::Flattened).unwrap();
        prop_assert_eq!(out, regs.0);
    }
}
