//! The six steps of the point-addition circuit.
//!
//! Every step acts on the same register file: the working point `x, y`, the
//! classical point `a, b`, the doubling slope `lambda_r`, the flags `f1..f4`,
//! `ctrl` and the slope ancilla `lambda`. Word registers hold Montgomery
//! encodings. Each step has a direct classical action and a leaf-level
//! decomposition; the two must agree.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{IrError, SimError};
use crate::field::FieldParams;
use crate::gates::{arc, garbage_kind, word_kind, Control, Equals, ModArith, ModInv, ModMult, MultiControlX, XorFan};
use crate::ir::{CircuitBuilder, CompositeCircuit, DataKind, Family, Gate, Handle, Signature, Variant};
use crate::sim::Registers;

pub const X: &str = "x";
pub const Y: &str = "y";
pub const A: &str = "a";
pub const B: &str = "b";
pub const LAMBDA_R: &str = "lambda_r";
pub const F1: &str = "f1";
pub const F2: &str = "f2";
pub const F3: &str = "f3";
pub const F4: &str = "f4";
pub const CTRL: &str = "ctrl";
pub const LAMBDA: &str = "lambda";

/// Registers supplied from outside the circuit.
pub const POINT_REGISTERS: [&str; 5] = [X, Y, A, B, LAMBDA_R];
/// Ancillas owned by the top-level circuit, in release order.
pub const FLAG_REGISTERS: [&str; 6] = [F1, F2, F3, F4, CTRL, LAMBDA];

pub fn state_signature(field: &FieldParams) -> Signature {
    let w = word_kind(field);
    let mut regs: Vec<(String, DataKind)> = POINT_REGISTERS.iter().map(|r| (r.to_string(), w)).collect();
    for r in FLAG_REGISTERS {
        regs.push((r.to_string(), if r == LAMBDA { w } else { DataKind::Bit }));
    }
    Signature::thru(regs)
}

/// Fixes applied to the point-addition circuit. `false` reproduces the
/// original construction for that step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fixes {
    /// Step 2: skip the `f1` clear when the product equals `lambda_r`.
    pub step2: bool,
    /// Step 5: clear `lambda` with `lambda_r` when the inverse is zero.
    pub step5: bool,
    /// Step 6: clear `f2` in the `0 = -0` case.
    pub step6a: bool,
    /// Step 6: controlled subtract/add moved before the `f4` comparison.
    pub step6b: bool,
}

impl Fixes {
    pub const CORRECTED: Fixes = Fixes { step2: true, step5: true, step6a: true, step6b: true };
    pub const ALL_BUGGY: Fixes = Fixes { step2: false, step5: false, step6a: false, step6b: false };

    pub fn is_corrected(&self) -> bool {
        *self == Self::CORRECTED
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    One,
    Two,
    Three,
    Four,
    Five,
    Six,
}

impl StepKind {
    pub const ALL: [StepKind; 6] =
        [StepKind::One, StepKind::Two, StepKind::Three, StepKind::Four, StepKind::Five, StepKind::Six];

    pub fn number(&self) -> usize {
        *self as usize + 1
    }

    /// Steps whose gate list is fixed by a published diagram.
    pub fn is_diagrammed(&self) -> bool {
        matches!(self, StepKind::Two | StepKind::Five | StepKind::Six)
    }
}

/// One step of the circuit as a composite gate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EcStep {
    pub kind: StepKind,
    pub fixes: Fixes,
    pub field: FieldParams,
}

impl EcStep {
    pub fn new(kind: StepKind, fixes: Fixes, field: FieldParams) -> Self {
        // Only the fixes that touch this step are kept, so steps compare equal
        // across variants that do not modify them.
        let relevant = match kind {
            StepKind::Two => Fixes { step2: fixes.step2, ..Fixes::CORRECTED },
            StepKind::Five => Fixes { step5: fixes.step5, ..Fixes::CORRECTED },
            StepKind::Six => Fixes { step6a: fixes.step6a, step6b: fixes.step6b, ..Fixes::CORRECTED },
            _ => Fixes::CORRECTED,
        };
        EcStep { kind, fixes: relevant, field }
    }

    fn tag(&self) -> String {
        let mut reverted = Vec::new();
        if !self.fixes.step2 {
            reverted.push("2");
        }
        if !self.fixes.step5 {
            reverted.push("5");
        }
        if !self.fixes.step6a {
            reverted.push("6a");
        }
        if !self.fixes.step6b {
            reverted.push("6b");
        }
        if reverted.is_empty() {
            String::new()
        } else {
            format!("[buggy {}]", reverted.join(","))
        }
    }

    /// Gate-family counts this step is declared to contain.
    pub fn declared_census(&self) -> BTreeMap<Family, u64> {
        use Family::*;
        let rows: Vec<(Family, u64)> = match self.kind {
            StepKind::One => vec![(Equals, 2), (ModNeg, 2), (MultiControlToffoli, 3)],
            StepKind::Two => {
                let mut v = vec![(ModSub, 1), (CModSub, 1), (ModInv, 2), (ModMult, 2), (MultiControlToffoli, 2)];
                if self.fixes.step2 {
                    v.extend([(Equals, 2), (CEquals, 1)]);
                } else {
                    v.push((Equals, 1));
                }
                v
            }
            StepKind::Three => vec![(ModMult, 2), (ModSub, 1)],
            StepKind::Four => vec![
                (MultiControlToffoli, 4),
                (ModMult, 4),
                (CModSub, 1),
                (ModAdd, 2),
                (ModDbl, 2),
                (CModAdd, 1),
            ],
            StepKind::Five => vec![
                (ModInv, 2),
                (ModMult, 2),
                (MultiControlToffoli, if self.fixes.step5 { 2 } else { 1 }),
                (CModNeg, 1),
                (ModAdd, 1),
                (CModSub, 1),
            ],
            StepKind::Six => vec![
                (MultiControlToffoli, if self.fixes.step6a { 8 } else { 6 }),
                (CModSub, 1),
                (CModAdd, 1),
                (Equals, 1),
            ],
        };
        rows.into_iter().collect()
    }
}

impl Gate for EcStep {
    fn name(&self) -> String {
        format!("EcAddStep{}{}<{}>", self.kind.number(), self.tag(), self.field.modulus())
    }

    fn family(&self) -> Family {
        Family::Composite(format!("EcAddStep{}", self.kind.number()))
    }

    fn signature(&self) -> Signature {
        state_signature(&self.field)
    }

    fn variant(&self) -> Variant {
        if self.fixes.is_corrected() {
            Variant::Corrected
        } else {
            Variant::Buggy
        }
    }

    fn decompose(&self) -> Result<CompositeCircuit, IrError> {
        let mut s = StepBuilder::new(self.name(), self.field);
        match self.kind {
            StepKind::One => build_step1(&mut s)?,
            StepKind::Two => build_step2(&mut s, self.fixes.step2)?,
            StepKind::Three => build_step3(&mut s)?,
            StepKind::Four => build_step4(&mut s)?,
            StepKind::Five => build_step5(&mut s, self.fixes.step5)?,
            StepKind::Six => build_step6(&mut s, self.fixes)?,
        }
        s.finish()
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        let mut st = State::read(regs)?;
        let f = &self.field;
        let path = self.name();
        match self.kind {
            StepKind::One => st.step1(f),
            StepKind::Two => st.step2(f, self.fixes.step2, &path)?,
            StepKind::Three => st.step3(f),
            StepKind::Four => st.step4(f),
            StepKind::Five => st.step5(f, self.fixes.step5, &path)?,
            StepKind::Six => st.step6(f, self.fixes, &path)?,
        }
        st.write(regs);
        Ok(())
    }
}

/// Register file of the circuit, used by the direct classical actions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct State {
    x: u64,
    y: u64,
    a: u64,
    b: u64,
    lambda_r: u64,
    f1: bool,
    f2: bool,
    f3: bool,
    f4: bool,
    ctrl: bool,
    lambda: u64,
}

impl State {
    fn read(r: &Registers) -> Result<Self, SimError> {
        Ok(State {
            x: r.get(X)?,
            y: r.get(Y)?,
            a: r.get(A)?,
            b: r.get(B)?,
            lambda_r: r.get(LAMBDA_R)?,
            f1: r.bit(F1)?,
            f2: r.bit(F2)?,
            f3: r.bit(F3)?,
            f4: r.bit(F4)?,
            ctrl: r.bit(CTRL)?,
            lambda: r.get(LAMBDA)?,
        })
    }

    fn write(&self, r: &mut Registers) {
        for (name, v) in [
            (X, self.x),
            (Y, self.y),
            (A, self.a),
            (B, self.b),
            (LAMBDA_R, self.lambda_r),
            (F1, self.f1 as u64),
            (F2, self.f2 as u64),
            (F3, self.f3 as u64),
            (F4, self.f4 as u64),
            (CTRL, self.ctrl as u64),
            (LAMBDA, self.lambda),
        ] {
            r.set(name, v);
        }
    }

    fn step1(&mut self, f: &FieldParams) {
        self.f1 ^= self.x == self.a;
        self.f2 ^= self.y == f.neg(self.b);
        self.f3 ^= self.a == 0 && self.b == 0;
        self.f4 ^= self.x == 0 && self.y == 0;
        self.ctrl ^= !self.f2 && !self.f3 && !self.f4;
    }

    fn step2(&mut self, f: &FieldParams, fixed: bool, path: &str) -> Result<(), SimError> {
        self.x = f.sub(self.x, self.a);
        if self.ctrl {
            self.y = f.sub(self.y, self.b);
        }
        let prod = f.mont_product(f.mont_inverse(self.x), self.y);
        let g = prod == self.lambda_r;
        if self.ctrl {
            let src = if self.f1 { self.lambda_r } else { prod };
            self.lambda = xor(f, self.lambda, src, path, LAMBDA)?;
        }
        if !fixed || !g {
            self.f1 ^= self.lambda == self.lambda_r;
        }
        Ok(())
    }

    fn step3(&mut self, f: &FieldParams) {
        self.y = f.sub(self.y, f.mont_product(self.lambda, self.x));
    }

    fn step4(&mut self, f: &FieldParams) {
        if self.ctrl {
            let three_a = f.add(self.a, f.dbl(self.a));
            self.x = f.add(f.sub(self.x, f.mont_product(self.lambda, self.lambda)), three_a);
            self.y = f.add(self.y, f.mont_product(self.lambda, self.x));
        }
    }

    fn step5(&mut self, f: &FieldParams, fixed: bool, path: &str) -> Result<(), SimError> {
        let prod = f.mont_product(f.mont_inverse(self.x), self.y);
        if self.ctrl {
            self.lambda = xor(f, self.lambda, prod, path, LAMBDA)?;
            if fixed && self.x == 0 {
                self.lambda = xor(f, self.lambda, self.lambda_r, path, LAMBDA)?;
            }
            self.x = f.neg(self.x);
        }
        self.x = f.add(self.x, self.a);
        if self.ctrl {
            self.y = f.sub(self.y, self.b);
        }
        Ok(())
    }

    fn step6(&mut self, f: &FieldParams, fixes: Fixes, path: &str) -> Result<(), SimError> {
        self.ctrl ^= !self.f2 && !self.f3 && !self.f4;
        if fixes.step6a {
            self.f2 ^= self.a == 0 && self.b == 0 && self.y == 0;
            self.f2 ^= self.b == 0 && self.x == 0 && self.y == 0;
        }
        if self.f4 {
            self.x = xor(f, self.x, self.a, path, X)?;
            self.y = xor(f, self.y, self.b, path, Y)?;
        }
        let undo_inverse = |s: &mut State| {
            if s.f1 && s.f2 {
                s.x = f.sub(s.x, s.a);
                s.y = f.add(s.y, s.b);
            }
        };
        if fixes.step6b {
            undo_inverse(self);
        }
        self.f4 ^= self.a == self.x && self.b == self.y;
        if !fixes.step6b {
            undo_inverse(self);
        }
        self.f3 ^= self.a == 0 && self.b == 0;
        let zero = self.x == 0 && self.y == 0;
        self.f1 ^= zero;
        self.f2 ^= zero;
        Ok(())
    }
}

/// Word-wide XOR, which leaves the residue range for some operands.
fn xor(f: &FieldParams, v: u64, w: u64, path: &str, register: &str) -> Result<u64, SimError> {
    let r = v ^ w;
    if r < f.modulus() {
        Ok(r)
    } else {
        Err(SimError::Domain { path: path.to_string(), register: register.to_string(), value: r, bound: f.modulus() })
    }
}

/// Builds a step decomposition by register name rather than by handle.
struct StepBuilder {
    b: CircuitBuilder,
    live: BTreeMap<String, Handle>,
    field: FieldParams,
}

impl StepBuilder {
    fn new(name: String, field: FieldParams) -> Self {
        let mut b = CircuitBuilder::new(name);
        let mut live = BTreeMap::new();
        for spec in state_signature(&field).0 {
            let h = b.add_register(spec.name.clone(), spec.kind);
            live.insert(spec.name, h);
        }
        StepBuilder { b, live, field }
    }

    fn handle(&self, reg: &str) -> Result<Handle, IrError> {
        self.live.get(reg).copied().ok_or_else(|| IrError::DanglingPort(format!("register `{reg}` is not live")))
    }

    /// Wires `gate` with `(port, register)` pairs.
    fn gate(&mut self, gate: Arc<dyn Gate>, wiring: &[(&str, &str)]) -> Result<(), IrError> {
        let handles: Vec<(&str, Handle)> =
            wiring.iter().map(|(port, reg)| Ok((*port, self.handle(reg)?))).collect::<Result<_, IrError>>()?;
        let ports = self.b.add(gate, &handles)?;
        for (port, reg) in wiring {
            self.live.insert(reg.to_string(), ports[*port]);
        }
        Ok(())
    }

    fn alloc(&mut self, kind: DataKind, name: &str) {
        let h = self.b.alloc(kind, name);
        self.live.insert(name.to_string(), h);
    }

    fn free(&mut self, name: &str) -> Result<(), IrError> {
        let h = self
            .live
            .remove(name)
            .ok_or_else(|| IrError::DanglingPort(format!("register `{name}` is not live")))?;
        self.b.free(h)
    }

    fn word(&self) -> DataKind {
        word_kind(&self.field)
    }

    fn garbage(&self) -> DataKind {
        garbage_kind(&self.field)
    }

    fn mcx(&mut self, controls: &[(Control, &str)], target: &str) -> Result<(), IrError> {
        let pattern: Vec<Control> = controls.iter().map(|c| c.0).collect();
        let ports: Vec<String> = (0..controls.len()).map(crate::gates::control_port).collect();
        let mut wiring: Vec<(&str, &str)> = ports.iter().map(String::as_str).zip(controls.iter().map(|c| c.1)).collect();
        wiring.push(("target", target));
        self.gate(arc(MultiControlX::new(&pattern, self.field)), &wiring)
    }

    fn fan(&mut self, controls: &[(Control, &str)], src: &str, dst: &str) -> Result<(), IrError> {
        let pattern: Vec<Control> = controls.iter().map(|c| c.0).collect();
        let ports: Vec<String> = (0..controls.len()).map(crate::gates::control_port).collect();
        let mut wiring: Vec<(&str, &str)> = ports.iter().map(String::as_str).zip(controls.iter().map(|c| c.1)).collect();
        wiring.push(("src", src));
        wiring.push(("dst", dst));
        self.gate(arc(XorFan::new(&pattern, self.field)), &wiring)
    }

    fn arith(&mut self, g: ModArith, controls: &[&str], operands: &[(&str, &str)]) -> Result<(), IrError> {
        let ports: Vec<String> = (0..controls.len()).map(crate::gates::control_port).collect();
        let mut wiring: Vec<(&str, &str)> = ports.iter().map(String::as_str).zip(controls.iter().copied()).collect();
        wiring.extend_from_slice(operands);
        self.gate(arc(g), &wiring)
    }

    fn equals(&mut self, x: &str, y: &str, target: &str) -> Result<(), IrError> {
        let f = self.field;
        self.gate(arc(Equals::new(f)), &[("x0", x), ("y0", y), ("target", target)])
    }

    /// `out += x*y/R` with a fresh garbage word.
    fn mult(&mut self, x: &str, y: &str, garbage: &str, out: &str) -> Result<(), IrError> {
        let f = self.field;
        self.gate(arc(ModMult::new(f)), &[("x", x), ("y", y), ("garbage", garbage), ("out", out)])
    }

    fn unmult(&mut self, x: &str, y: &str, garbage: &str, out: &str) -> Result<(), IrError> {
        let f = self.field;
        self.gate(arc(ModMult::new(f).adjoint()), &[("x", x), ("y", y), ("garbage", garbage), ("out", out)])
    }

    fn inv(&mut self, x: &str, adjoint: bool) -> Result<(), IrError> {
        let g = if adjoint { ModInv::new(self.field).adjoint() } else { ModInv::new(self.field) };
        self.gate(arc(g), &[("x", x), ("g1", "inv_g1"), ("g2", "inv_g2")])
    }

    /// Computes `prod = x*y/R` into fresh ancillas (`mult_g`, `prod`).
    fn compute_product(&mut self, x: &str, y: &str, prod: &str) -> Result<(), IrError> {
        let (g, w) = (self.garbage(), self.word());
        self.alloc(g, "mult_g");
        self.alloc(w, prod);
        self.mult(x, y, "mult_g", prod)
    }

    fn uncompute_product(&mut self, x: &str, y: &str, prod: &str) -> Result<(), IrError> {
        self.unmult(x, y, "mult_g", prod)?;
        self.free("mult_g")?;
        self.free(prod)
    }

    fn finish(self) -> Result<CompositeCircuit, IrError> {
        let outs: Vec<(String, Handle)> = state_signature(&self.field)
            .0
            .iter()
            .map(|s| Ok((s.name.clone(), self.handle(&s.name)?)))
            .collect::<Result<_, IrError>>()?;
        let refs: Vec<(&str, Handle)> = outs.iter().map(|(n, h)| (n.as_str(), *h)).collect();
        self.b.finalize(&refs)
    }
}

use Control::{Off, On, Zero};

fn build_step1(s: &mut StepBuilder) -> Result<(), IrError> {
    let f = s.field;
    s.equals(X, A, F1)?;
    s.arith(ModArith::neg(f), &[], &[("x", Y)])?;
    s.equals(Y, B, F2)?;
    s.arith(ModArith::neg(f), &[], &[("x", Y)])?;
    s.mcx(&[(Zero, A), (Zero, B)], F3)?;
    s.mcx(&[(Zero, X), (Zero, Y)], F4)?;
    s.mcx(&[(Off, F2), (Off, F3), (Off, F4)], CTRL)
}

fn build_step2(s: &mut StepBuilder, fixed: bool) -> Result<(), IrError> {
    let f = s.field;
    s.arith(ModArith::sub(f), &[], &[("src", A), ("dst", X)])?;
    s.arith(ModArith::sub(f).controlled(&[On]), &[CTRL], &[("src", B), ("dst", Y)])?;
    let g = s.garbage();
    s.alloc(g, "inv_g1");
    s.alloc(g, "inv_g2");
    s.inv(X, false)?;
    s.compute_product(X, Y, "prod")?;
    if fixed {
        s.alloc(DataKind::Bit, "g");
        s.equals("prod", LAMBDA_R, "g")?;
    }
    s.fan(&[(Off, F1), (On, CTRL)], "prod", LAMBDA)?;
    s.fan(&[(On, F1), (On, CTRL)], LAMBDA_R, LAMBDA)?;
    if fixed {
        s.gate(
            arc(Equals::controlled(f, Off)),
            &[("ctrl", "g"), ("x0", LAMBDA), ("y0", LAMBDA_R), ("target", F1)],
        )?;
        s.equals("prod", LAMBDA_R, "g")?;
        s.free("g")?;
    } else {
        s.equals(LAMBDA, LAMBDA_R, F1)?;
    }
    s.uncompute_product(X, Y, "prod")?;
    s.inv(X, true)?;
    s.free("inv_g1")?;
    s.free("inv_g2")
}

fn build_step3(s: &mut StepBuilder) -> Result<(), IrError> {
    let f = s.field;
    s.compute_product(LAMBDA, X, "prod")?;
    s.arith(ModArith::sub(f), &[], &[("src", "prod"), ("dst", Y)])?;
    s.uncompute_product(LAMBDA, X, "prod")
}

fn build_step4(s: &mut StepBuilder) -> Result<(), IrError> {
    let f = s.field;
    let w = s.word();
    s.alloc(w, "w");
    // x -= lambda^2, with a copy of lambda as the second factor.
    s.fan(&[(On, CTRL)], LAMBDA, "w")?;
    s.compute_product(LAMBDA, "w", "prod")?;
    s.arith(ModArith::sub(f).controlled(&[On]), &[CTRL], &[("src", "prod"), ("dst", X)])?;
    s.uncompute_product(LAMBDA, "w", "prod")?;
    s.fan(&[(On, CTRL)], LAMBDA, "w")?;
    // x += 3a through a controlled copy of a.
    s.fan(&[(On, CTRL)], A, "w")?;
    s.arith(ModArith::add(f), &[], &[("src", "w"), ("dst", X)])?;
    s.arith(ModArith::dbl(f), &[], &[("x", "w")])?;
    s.arith(ModArith::add(f), &[], &[("src", "w"), ("dst", X)])?;
    s.arith(ModArith::dbl(f).adjoint(), &[], &[("x", "w")])?;
    s.fan(&[(On, CTRL)], A, "w")?;
    s.free("w")?;
    // y += lambda * x.
    s.compute_product(LAMBDA, X, "prod")?;
    s.arith(ModArith::add(f).controlled(&[On]), &[CTRL], &[("src", "prod"), ("dst", Y)])?;
    s.uncompute_product(LAMBDA, X, "prod")
}

fn build_step5(s: &mut StepBuilder, fixed: bool) -> Result<(), IrError> {
    let f = s.field;
    let g = s.garbage();
    s.alloc(g, "inv_g1");
    s.alloc(g, "inv_g2");
    s.inv(X, false)?;
    s.compute_product(X, Y, "prod")?;
    s.fan(&[(On, CTRL)], "prod", LAMBDA)?;
    if fixed {
        s.fan(&[(On, CTRL), (Zero, X)], LAMBDA_R, LAMBDA)?;
    }
    s.uncompute_product(X, Y, "prod")?;
    s.inv(X, true)?;
    s.free("inv_g1")?;
    s.free("inv_g2")?;
    s.arith(ModArith::neg(f).controlled(&[On]), &[CTRL], &[("x", X)])?;
    s.arith(ModArith::add(f), &[], &[("src", A), ("dst", X)])?;
    s.arith(ModArith::sub(f).controlled(&[On]), &[CTRL], &[("src", B), ("dst", Y)])
}

fn build_step6(s: &mut StepBuilder, fixes: Fixes) -> Result<(), IrError> {
    let f = s.field;
    s.mcx(&[(Off, F2), (Off, F3), (Off, F4)], CTRL)?;
    if fixes.step6a {
        s.mcx(&[(Zero, A), (Zero, B), (Zero, Y)], F2)?;
        s.mcx(&[(Zero, B), (Zero, X), (Zero, Y)], F2)?;
    }
    s.fan(&[(On, F4)], A, X)?;
    s.fan(&[(On, F4)], B, Y)?;
    let undo_inverse = |s: &mut StepBuilder| -> Result<(), IrError> {
        s.arith(ModArith::sub(f).controlled(&[On, On]), &[F1, F2], &[("src", A), ("dst", X)])?;
        s.arith(ModArith::add(f).controlled(&[On, On]), &[F1, F2], &[("src", B), ("dst", Y)])
    };
    if fixes.step6b {
        undo_inverse(s)?;
    }
    s.gate(arc(Equals::wide(2, f)), &[("x0", A), ("x1", B), ("y0", X), ("y1", Y), ("target", F4)])?;
    if !fixes.step6b {
        undo_inverse(s)?;
    }
    s.mcx(&[(Zero, A), (Zero, B)], F3)?;
    s.mcx(&[(Zero, X), (Zero, Y)], F1)?;
    s.mcx(&[(Zero, X), (Zero, Y)], F2)
}
