//! Leaf reversible gates over Montgomery-encoded registers.
//!
//! Each leaf has a classical action that is a bijection on its full register
//! domain, an adjoint, and a cost shape looked up by the cost model. Garbage
//! words produced by `ModMult` and `ModInv` are deterministic functions of the
//! operands, so an adjoint fed the same operands returns them to zero.

use std::sync::Arc;

use crate::error::SimError;
use crate::field::FieldParams;
use crate::ir::{CostShape, DataKind, Family, Gate, RegisterSpec, Signature};
use crate::sim::Registers;

pub fn word_kind(field: &FieldParams) -> DataKind {
    DataKind::MontUInt { width: field.width(), modulus: field.modulus() }
}

pub fn garbage_kind(field: &FieldParams) -> DataKind {
    DataKind::UInt(field.width())
}

fn dagger(adjoint: bool) -> &'static str {
    if adjoint {
        "†"
    } else {
        ""
    }
}

/// One entry of a control pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Control {
    /// Single qubit, active on 1.
    On,
    /// Single qubit, active on 0.
    Off,
    /// Whole word register, active when every bit is 0.
    Zero,
}

impl Control {
    fn symbol(self) -> char {
        match self {
            Control::On => '1',
            Control::Off => '0',
            Control::Zero => 'z',
        }
    }

    fn kind(self, field: &FieldParams) -> DataKind {
        match self {
            Control::Zero => word_kind(field),
            _ => DataKind::Bit,
        }
    }

    fn matches(self, value: u64) -> bool {
        match self {
            Control::On => value == 1,
            Control::Off | Control::Zero => value == 0,
        }
    }
}

fn pattern(controls: &[Control]) -> String {
    controls.iter().map(|c| c.symbol()).collect()
}

pub fn control_port(i: usize) -> String {
    format!("c{i}")
}

fn control_specs(controls: &[Control], field: &FieldParams) -> Vec<RegisterSpec> {
    controls
        .iter()
        .enumerate()
        .map(|(i, c)| RegisterSpec::thru(control_port(i), c.kind(field)))
        .collect()
}

fn controls_active(controls: &[Control], regs: &Registers) -> Result<bool, SimError> {
    for (i, c) in controls.iter().enumerate() {
        if !c.matches(regs.get(&control_port(i))?) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn count_controls(controls: &[Control]) -> (u32, u32) {
    let words = controls.iter().filter(|c| **c == Control::Zero).count() as u32;
    (controls.len() as u32 - words, words)
}

fn bits_only(controls: &[Control]) -> Vec<Control> {
    assert!(
        controls.iter().all(|c| *c != Control::Zero),
        "arithmetic gates take single-qubit controls only"
    );
    controls.to_vec()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    /// `dst <- dst + src`
    Add,
    /// `dst <- dst - src`
    Sub,
    /// `x <- -x`
    Neg,
    /// `x <- 2x`
    Dbl,
}

/// Modular addition, subtraction, negation and doubling, optionally controlled.
/// These act identically on plain and Montgomery residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModArith {
    pub op: ArithOp,
    pub controls: Vec<Control>,
    pub adjoint: bool,
    pub field: FieldParams,
}

impl ModArith {
    fn new(op: ArithOp, field: FieldParams) -> Self {
        ModArith { op, controls: Vec::new(), adjoint: false, field }
    }

    pub fn add(field: FieldParams) -> Self {
        Self::new(ArithOp::Add, field)
    }

    pub fn sub(field: FieldParams) -> Self {
        Self::new(ArithOp::Sub, field)
    }

    pub fn neg(field: FieldParams) -> Self {
        Self::new(ArithOp::Neg, field)
    }

    pub fn dbl(field: FieldParams) -> Self {
        Self::new(ArithOp::Dbl, field)
    }

    pub fn controlled(mut self, controls: &[Control]) -> Self {
        assert!(self.op != ArithOp::Dbl, "controlled doubling is not part of the gate set");
        self.controls = bits_only(controls);
        self
    }

    pub fn adjoint(mut self) -> Self {
        self.adjoint = !self.adjoint;
        self
    }

    fn base(&self) -> &'static str {
        match self.op {
            ArithOp::Add => "ModAdd",
            ArithOp::Sub => "ModSub",
            ArithOp::Neg => "ModNeg",
            ArithOp::Dbl => "ModDbl",
        }
    }
}

impl Gate for ModArith {
    fn name(&self) -> String {
        let c = if self.controls.is_empty() { String::new() } else { format!("C[{}]", pattern(&self.controls)) };
        format!("{c}{}{}<{}>", self.base(), dagger(self.adjoint), self.field.modulus())
    }

    fn family(&self) -> Family {
        let controlled = !self.controls.is_empty();
        match (self.op, controlled) {
            (ArithOp::Add, false) => Family::ModAdd,
            (ArithOp::Add, true) => Family::CModAdd,
            (ArithOp::Sub, false) => Family::ModSub,
            (ArithOp::Sub, true) => Family::CModSub,
            (ArithOp::Neg, false) => Family::ModNeg,
            (ArithOp::Neg, true) => Family::CModNeg,
            (ArithOp::Dbl, _) => Family::ModDbl,
        }
    }

    fn signature(&self) -> Signature {
        let w = word_kind(&self.field);
        let mut regs = control_specs(&self.controls, &self.field);
        match self.op {
            ArithOp::Add | ArithOp::Sub => {
                regs.push(RegisterSpec::thru("src", w));
                regs.push(RegisterSpec::thru("dst", w));
            }
            ArithOp::Neg | ArithOp::Dbl => regs.push(RegisterSpec::thru("x", w)),
        }
        Signature(regs)
    }

    fn cost_shape(&self) -> Option<CostShape> {
        Some(CostShape::Table(self.family()))
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        if !controls_active(&self.controls, regs)? {
            return Ok(());
        }
        let f = &self.field;
        match self.op {
            ArithOp::Add | ArithOp::Sub => {
                let src = regs.get("src")?;
                let dst = regs.get("dst")?;
                let add = (self.op == ArithOp::Add) != self.adjoint;
                regs.set("dst", if add { f.add(dst, src) } else { f.sub(dst, src) });
            }
            ArithOp::Neg => {
                let x = regs.get("x")?;
                regs.set("x", f.neg(x));
            }
            ArithOp::Dbl => {
                let x = regs.get("x")?;
                regs.set("x", if self.adjoint { f.halve(x) } else { f.dbl(x) });
            }
        }
        Ok(())
    }
}

/// Montgomery multiplication `(x, y, g, out) -> (x, y, g ^ lo(x*y), out + x*y/R)`.
///
/// The garbage word is the low `n` bits of the integer product of the
/// encodings, the word a digit-serial multiplier leaves behind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModMult {
    pub adjoint: bool,
    pub field: FieldParams,
}

impl ModMult {
    pub fn new(field: FieldParams) -> Self {
        ModMult { adjoint: false, field }
    }

    pub fn adjoint(mut self) -> Self {
        self.adjoint = !self.adjoint;
        self
    }

    pub fn garbage(field: &FieldParams, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) & ((1u128 << field.width()) - 1)) as u64
    }
}

impl Gate for ModMult {
    fn name(&self) -> String {
        format!("ModMult{}<{}>", dagger(self.adjoint), self.field.modulus())
    }

    fn family(&self) -> Family {
        Family::ModMult
    }

    fn signature(&self) -> Signature {
        let w = word_kind(&self.field);
        Signature(vec![
            RegisterSpec::thru("x", w),
            RegisterSpec::thru("y", w),
            RegisterSpec::thru("garbage", garbage_kind(&self.field)),
            RegisterSpec::thru("out", w),
        ])
    }

    fn cost_shape(&self) -> Option<CostShape> {
        Some(CostShape::Table(Family::ModMult))
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        let f = &self.field;
        let x = regs.get("x")?;
        let y = regs.get("y")?;
        let prod = f.mont_product(x, y);
        let g = regs.get("garbage")?;
        regs.set("garbage", g ^ Self::garbage(f, x, y));
        let out = regs.get("out")?;
        regs.set("out", if self.adjoint { f.sub(out, prod) } else { f.add(out, prod) });
        Ok(())
    }
}

/// In-place Montgomery inverse `(x, g1, g2) -> (inv(x), g1 ^ k(x), g2 ^ x)`,
/// where `k` is the almost-inverse iteration count. `inv(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModInv {
    pub adjoint: bool,
    pub field: FieldParams,
}

impl ModInv {
    pub fn new(field: FieldParams) -> Self {
        ModInv { adjoint: false, field }
    }

    pub fn adjoint(mut self) -> Self {
        self.adjoint = !self.adjoint;
        self
    }
}

impl Gate for ModInv {
    fn name(&self) -> String {
        format!("ModInv{}<{}>", dagger(self.adjoint), self.field.modulus())
    }

    fn family(&self) -> Family {
        Family::ModInv
    }

    fn signature(&self) -> Signature {
        let g = garbage_kind(&self.field);
        Signature(vec![
            RegisterSpec::thru("x", word_kind(&self.field)),
            RegisterSpec::thru("g1", g),
            RegisterSpec::thru("g2", g),
        ])
    }

    fn cost_shape(&self) -> Option<CostShape> {
        Some(CostShape::Table(Family::ModInv))
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        let f = &self.field;
        let x = regs.get("x")?;
        // The Montgomery inverse is an involution, so the adjoint recovers the
        // operand from the register before undoing the garbage.
        let operand = if self.adjoint { f.mont_inverse(x) } else { x };
        let (inv, k) = f.mont_inverse_with_count(operand);
        regs.set("g1", regs.get("g1")? ^ k as u64);
        regs.set("g2", regs.get("g2")? ^ operand);
        regs.set("x", if self.adjoint { operand } else { inv });
        Ok(())
    }
}

/// `target ^= [x == y]` over `words` words per side, optionally controlled on
/// one qubit (`CEquals`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equals {
    pub words: u32,
    pub control: Option<Control>,
    pub field: FieldParams,
}

impl Equals {
    pub fn new(field: FieldParams) -> Self {
        Equals { words: 1, control: None, field }
    }

    pub fn wide(words: u32, field: FieldParams) -> Self {
        assert!(words >= 1);
        Equals { words, control: None, field }
    }

    pub fn controlled(field: FieldParams, control: Control) -> Self {
        assert!(control != Control::Zero);
        Equals { words: 1, control: Some(control), field }
    }

    pub fn lhs(i: u32) -> String {
        format!("x{i}")
    }

    pub fn rhs(i: u32) -> String {
        format!("y{i}")
    }
}

impl Gate for Equals {
    fn name(&self) -> String {
        match self.control {
            None => format!("Equals[{}]<{}>", self.words, self.field.modulus()),
            Some(c) => format!("CEquals[{}]<{}>", c.symbol(), self.field.modulus()),
        }
    }

    fn family(&self) -> Family {
        if self.control.is_some() {
            Family::CEquals
        } else {
            Family::Equals
        }
    }

    fn signature(&self) -> Signature {
        let w = word_kind(&self.field);
        let mut regs = Vec::new();
        if self.control.is_some() {
            regs.push(RegisterSpec::thru("ctrl", DataKind::Bit));
        }
        for i in 0..self.words {
            regs.push(RegisterSpec::thru(Self::lhs(i), w));
        }
        for i in 0..self.words {
            regs.push(RegisterSpec::thru(Self::rhs(i), w));
        }
        regs.push(RegisterSpec::thru("target", DataKind::Bit));
        Signature(regs)
    }

    fn cost_shape(&self) -> Option<CostShape> {
        Some(match self.control {
            None => CostShape::Equals { words: self.words },
            Some(_) => CostShape::Table(Family::CEquals),
        })
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        if let Some(c) = self.control {
            if !c.matches(regs.get("ctrl")?) {
                return Ok(());
            }
        }
        let mut equal = true;
        for i in 0..self.words {
            equal &= regs.get(&Self::lhs(i))? == regs.get(&Self::rhs(i))?;
        }
        regs.flip("target", equal)
    }
}

/// NOT on a single target bit under a control pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiControlX {
    pub controls: Vec<Control>,
    pub field: FieldParams,
}

impl MultiControlX {
    pub fn new(controls: &[Control], field: FieldParams) -> Self {
        MultiControlX { controls: controls.to_vec(), field }
    }
}

impl Gate for MultiControlX {
    fn name(&self) -> String {
        format!("MCX[{}]<{}>", pattern(&self.controls), self.field.modulus())
    }

    fn family(&self) -> Family {
        Family::MultiControlToffoli
    }

    fn signature(&self) -> Signature {
        let mut regs = control_specs(&self.controls, &self.field);
        regs.push(RegisterSpec::thru("target", DataKind::Bit));
        Signature(regs)
    }

    fn cost_shape(&self) -> Option<CostShape> {
        let (bits, words) = count_controls(&self.controls);
        Some(CostShape::MultiControl { bits, words })
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        let active = controls_active(&self.controls, regs)?;
        regs.flip("target", active)
    }
}

/// `dst ^= src` over a whole word under a control pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorFan {
    pub controls: Vec<Control>,
    pub field: FieldParams,
}

impl XorFan {
    pub fn new(controls: &[Control], field: FieldParams) -> Self {
        XorFan { controls: controls.to_vec(), field }
    }
}

impl Gate for XorFan {
    fn name(&self) -> String {
        format!("XorFan[{}]<{}>", pattern(&self.controls), self.field.modulus())
    }

    fn family(&self) -> Family {
        Family::MultiControlToffoli
    }

    fn signature(&self) -> Signature {
        let w = word_kind(&self.field);
        let mut regs = control_specs(&self.controls, &self.field);
        regs.push(RegisterSpec::thru("src", w));
        regs.push(RegisterSpec::thru("dst", w));
        Signature(regs)
    }

    fn cost_shape(&self) -> Option<CostShape> {
        let (bits, words) = count_controls(&self.controls);
        Some(CostShape::Fan { bits, words })
    }

    fn apply(&self, regs: &mut Registers) -> Result<(), SimError> {
        if controls_active(&self.controls, regs)? {
            let v = regs.get("dst")? ^ regs.get("src")?;
            regs.set("dst", v);
        }
        Ok(())
    }
}

/// Convenience for building gates behind `Arc<dyn Gate>`.
pub fn arc<G: Gate + 'static>(g: G) -> Arc<dyn Gate> {
    Arc::new(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f17() -> FieldParams {
        FieldParams::new(17).unwrap()
    }

    fn regs(pairs: &[(&str, u64)]) -> Registers {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn mod_add_and_sub_examples() {
        let f = f17();
        let mut r = regs(&[("src", 13), ("dst", 11)]);
        ModArith::add(f).apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 7);
        ModArith::sub(f).apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 11);
        let mut r = regs(&[("src", 5), ("dst", 0)]);
        ModArith::add(f).apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 5);
        let mut r = regs(&[("src", 13), ("dst", 7)]);
        ModArith::sub(f).apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 11);
    }

    #[test]
    fn controlled_add_respects_control() {
        let f = f17();
        let g = ModArith::add(f).controlled(&[Control::On]);
        let mut r = regs(&[("c0", 0), ("src", 3), ("dst", 4)]);
        g.apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 4);
        r.set("c0", 1);
        g.apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 7);
        assert_eq!(g.family(), Family::CModAdd);
    }

    #[test]
    fn neg_and_dbl_examples() {
        let f = f17();
        let mut r = regs(&[("x", 13)]);
        ModArith::neg(f).apply(&mut r).unwrap();
        assert_eq!(r.get("x").unwrap(), 4);
        let mut r = regs(&[("x", 0)]);
        ModArith::neg(f).apply(&mut r).unwrap();
        assert_eq!(r.get("x").unwrap(), 0);
        let mut r = regs(&[("x", 13)]);
        ModArith::dbl(f).apply(&mut r).unwrap();
        assert_eq!(r.get("x").unwrap(), 9);
        ModArith::dbl(f).adjoint().apply(&mut r).unwrap();
        assert_eq!(r.get("x").unwrap(), 13);
    }

    #[test]
    fn mod_mult_example() {
        let f = f17();
        let mut r = regs(&[("x", 13), ("y", 11), ("garbage", 0), ("out", 0)]);
        ModMult::new(f).apply(&mut r).unwrap();
        assert_eq!(r, regs(&[("x", 13), ("y", 11), ("garbage", 15), ("out", 5)]));
        ModMult::new(f).adjoint().apply(&mut r).unwrap();
        assert_eq!(r, regs(&[("x", 13), ("y", 11), ("garbage", 0), ("out", 0)]));
        let mut r = regs(&[("x", 9), ("y", 0), ("garbage", 0), ("out", 0)]);
        ModMult::new(f).apply(&mut r).unwrap();
        assert_eq!(r, regs(&[("x", 9), ("y", 0), ("garbage", 0), ("out", 0)]));
    }

    #[test]
    fn mod_inv_example() {
        let f = f17();
        let (_, k) = f.mont_inverse_with_count(13);
        let mut r = regs(&[("x", 13), ("g1", 0), ("g2", 0)]);
        ModInv::new(f).apply(&mut r).unwrap();
        assert_eq!(r, regs(&[("x", 16), ("g1", k as u64), ("g2", 13)]));
        ModInv::new(f).adjoint().apply(&mut r).unwrap();
        assert_eq!(r, regs(&[("x", 13), ("g1", 0), ("g2", 0)]));
        let mut r = regs(&[("x", 0), ("g1", 0), ("g2", 0)]);
        ModInv::new(f).apply(&mut r).unwrap();
        assert_eq!(r, regs(&[("x", 0), ("g1", 0), ("g2", 0)]));
    }

    #[test]
    fn equals_examples() {
        let f = f17();
        let mut r = regs(&[("x0", 5), ("y0", 5), ("target", 0)]);
        Equals::new(f).apply(&mut r).unwrap();
        assert_eq!(r.get("target").unwrap(), 1);
        let mut r = regs(&[("x0", 5), ("y0", 9), ("target", 1)]);
        Equals::new(f).apply(&mut r).unwrap();
        assert_eq!(r.get("target").unwrap(), 1);
        let g = Equals::controlled(f, Control::On);
        for x in 0..17 {
            for y in 0..17 {
                let mut r = regs(&[("ctrl", 0), ("x0", x), ("y0", y), ("target", 0)]);
                g.apply(&mut r).unwrap();
                assert_eq!(r.get("target").unwrap(), 0);
            }
        }
    }

    #[test]
    fn multi_control_examples() {
        let f = f17();
        let g = MultiControlX::new(&[Control::Off, Control::Off, Control::Off], f);
        let mut r = regs(&[("c0", 0), ("c1", 0), ("c2", 0), ("target", 0)]);
        g.apply(&mut r).unwrap();
        assert_eq!(r.get("target").unwrap(), 1);
        let mut r = regs(&[("c0", 0), ("c1", 1), ("c2", 0), ("target", 0)]);
        g.apply(&mut r).unwrap();
        assert_eq!(r.get("target").unwrap(), 0);
        let z = MultiControlX::new(&[Control::Zero, Control::On], f);
        let mut r = regs(&[("c0", 0), ("c1", 1), ("target", 1)]);
        z.apply(&mut r).unwrap();
        assert_eq!(r.get("target").unwrap(), 0);
    }

    #[test]
    fn fan_copies_and_is_involutive() {
        let f = f17();
        let g = XorFan::new(&[Control::On, Control::Zero], f);
        let mut r = regs(&[("c0", 1), ("c1", 0), ("src", 2), ("dst", 0)]);
        g.apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 2);
        g.apply(&mut r).unwrap();
        assert_eq!(r.get("dst").unwrap(), 0);
    }

    #[test]
    fn names_distinguish_parameters() {
        let f = f17();
        assert_ne!(ModMult::new(f).name(), ModMult::new(f).adjoint().name());
        assert_ne!(ModArith::sub(f).name(), ModArith::sub(f).controlled(&[Control::On]).name());
        assert_eq!(ModMult::new(f).adjoint().family(), Family::ModMult);
    }
}
