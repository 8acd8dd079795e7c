mod common;

use std::collections::BTreeSet;

use common::*;
use ecadd::field::FieldParams;
use ecadd::gates::{Control, Equals, ModArith, ModInv, ModMult, MultiControlX, XorFan};
use ecadd::ir::{DataKind, Gate};
use ecadd::sim::Registers;
use proptest::prelude::*;

fn f17() -> FieldParams {
    FieldParams::new(P17).unwrap()
}

fn regs(pairs: &[(&str, u64)]) -> Registers {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn run(gate: &dyn Gate, pairs: &[(&str, u64)]) -> Registers {
    let mut r = regs(pairs);
    gate.apply(&mut r).unwrap();
    r
}

#[test]
fn add_sub_neg_dbl_examples() {
    let f = f17();
    let out = run(&ModArith::add(f), &[("src", 13), ("dst", 11)]);
    assert_eq!((out.get("src").unwrap(), out.get("dst").unwrap()), (13, 7));
    let out = run(&ModArith::add(f), &[("src", 9), ("dst", 0)]);
    assert_eq!(out.get("dst").unwrap(), 9);
    let out = run(&ModArith::sub(f), &[("src", 13), ("dst", 7)]);
    assert_eq!(out.get("dst").unwrap(), 11);
    assert_eq!(run(&ModArith::neg(f), &[("x", 13)]).get("x").unwrap(), 4);
    assert_eq!(run(&ModArith::neg(f), &[("x", 0)]).get("x").unwrap(), 0);
    assert_eq!(run(&ModArith::dbl(f), &[("x", 13)]).get("x").unwrap(), 9);
    assert_eq!(run(&ModArith::dbl(f), &[("x", 0)]).get("x").unwrap(), 0);
}

#[test]
fn controlled_arithmetic_respects_control() {
    let f = f17();
    let cadd = ModArith::add(f).controlled(&[Control::On]);
    let csub = ModArith::sub(f).controlled(&[Control::On]);
    for x in 0..P17 {
        for y in 0..P17 {
            let off = run(&cadd, &[("c0", 0), ("src", x), ("dst", y)]);
            assert_eq!(off.get("dst").unwrap(), y);
            let on = run(&csub, &[("c0", 1), ("src", x), ("dst", y)]);
            let plain = run(&ModArith::sub(f), &[("src", x), ("dst", y)]);
            assert_eq!(on, {
                let mut p = plain.clone();
                p.set("c0", 1);
                p
            });
        }
    }
}

#[test]
fn mult_examples() {
    let f = f17();
    let out = run(&ModMult::new(f), &[("x", 13), ("y", 11), ("garbage", 0), ("out", 0)]);
    assert_eq!(out, regs(&[("x", 13), ("y", 11), ("garbage", 15), ("out", 5)]));
    let out = run(&ModMult::new(f), &[("x", 9), ("y", 0), ("garbage", 0), ("out", 0)]);
    assert_eq!(out, regs(&[("x", 9), ("y", 0), ("garbage", 0), ("out", 0)]));
}

#[test]
fn inv_examples() {
    let f = f17();
    let out = run(&ModInv::new(f), &[("x", 13), ("g1", 0), ("g2", 0)]);
    assert_eq!(out.get("x").unwrap(), 16);
    assert_eq!(out.get("g2").unwrap(), 13);
    let k = out.get("g1").unwrap() as u32;
    assert!((5..=10).contains(&k));
    let out = run(&ModInv::new(f), &[("x", 0), ("g1", 0), ("g2", 0)]);
    assert_eq!(out, regs(&[("x", 0), ("g1", 0), ("g2", 0)]));
}

#[test]
fn equals_examples() {
    let f = f17();
    let eq = Equals::new(f);
    assert_eq!(run(&eq, &[("x0", 5), ("y0", 5), ("target", 0)]).get("target").unwrap(), 1);
    assert_eq!(run(&eq, &[("x0", 5), ("y0", 9), ("target", 1)]).get("target").unwrap(), 1);
    let ceq = Equals::controlled(f, Control::On);
    for x in 0..P17 {
        for y in 0..P17 {
            let out = run(&ceq, &[("ctrl", 0), ("x0", x), ("y0", y), ("target", 0)]);
            assert_eq!(out.get("target").unwrap(), 0);
        }
    }
}

#[test]
fn multi_control_and_fan_examples() {
    let f = f17();
    let mcx = MultiControlX::new(&[Control::Off, Control::Off, Control::Off], f);
    let out = run(&mcx, &[("c0", 0), ("c1", 0), ("c2", 0), ("target", 0)]);
    assert_eq!(out.get("target").unwrap(), 1);
    let out = run(&mcx, &[("c0", 0), ("c1", 1), ("c2", 0), ("target", 0)]);
    assert_eq!(out.get("target").unwrap(), 0);

    let fan = XorFan::new(&[Control::On, Control::Zero], f);
    let out = run(&fan, &[("c0", 1), ("c1", 0), ("src", 2), ("dst", 2)]);
    assert_eq!(out.get("dst").unwrap(), 0);
    let out = run(&fan, &[("c0", 1), ("c1", 4), ("src", 2), ("dst", 2)]);
    assert_eq!(out.get("dst").unwrap(), 2);
    let copy = run(&XorFan::new(&[Control::On], f), &[("c0", 1), ("src", 11), ("dst", 0)]);
    assert_eq!(copy.get("dst").unwrap(), 11);
}

fn domain(gate: &dyn Gate, p: u64) -> Vec<Registers> {
    let mut all = vec![Registers::new()];
    for spec in gate.signature().0 {
        let bound = match spec.kind {
            DataKind::Bit => 2,
            DataKind::UInt(w) => 1 << w,
            DataKind::MontUInt { .. } => p,
        };
        let mut next = Vec::new();
        for r in &all {
            for v in 0..bound {
                let mut r = r.clone();
                r.set(&spec.name, v);
                next.push(r);
            }
        }
        all = next;
    }
    all
}

#[test]
fn every_leaf_is_a_bijection_at_p17() {
    let f = f17();
    let gates: Vec<Box<dyn Gate>> = vec![
        Box::new(ModArith::add(f)),
        Box::new(ModArith::sub(f).controlled(&[Control::On, Control::Off])),
        Box::new(ModArith::neg(f).controlled(&[Control::On])),
        Box::new(ModArith::dbl(f)),
        Box::new(ModMult::new(f)),
        Box::new(ModInv::new(f)),
        Box::new(Equals::wide(2, f)),
        Box::new(Equals::controlled(f, Control::Off)),
        Box::new(MultiControlX::new(&[Control::Zero, Control::On], f)),
        Box::new(XorFan::new(&[Control::On, Control::Zero], f)),
    ];
    for g in &gates {
        let inputs = domain(g.as_ref(), P17);
        let mut images = BTreeSet::new();
        for r in &inputs {
            let mut out = r.clone();
            g.apply(&mut out).unwrap();
            images.insert(out.0);
        }
        assert_eq!(images.len(), inputs.len(), "{} is not injective", g.name());
    }
}

#[test]
fn names_distinguish_parameters() {
    let f = f17();
    assert_ne!(ModArith::add(f).name(), ModArith::add(f).adjoint().name());
    assert_ne!(
        ModArith::add(f).controlled(&[Control::On]).name(),
        ModArith::add(f).controlled(&[Control::Off]).name()
    );
    assert_eq!(ModMult::new(f).family(), ModMult::new(f).adjoint().family());
}

fn prime_16() -> impl Strategy<Value = u64> {
    any::<u64>().prop_map(|seed| {
        use rand::SeedableRng;
        random_prime_16(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn mult_then_adjoint_restores(p in prime_16(), x in any::<u64>(), y in any::<u64>(), g in any::<u64>(), o in any::<u64>()) {
        let f = FieldParams::new(p).unwrap();
        let start = regs(&[("x", x % p), ("y", y % p), ("garbage", g % (1 << bitlen(p))), ("out", o % p)]);
        let mut r = start.clone();
        ModMult::new(f).apply(&mut r).unwrap();
        prop_assert_eq!(r.get("out").unwrap(), (o % p + mont_mul(x % p, y % p, p)) % p);
        ModMult::new(f).adjoint().apply(&mut r).unwrap();
        prop_assert_eq!(r, start);
    }

    #[test]
    fn inv_then_adjoint_restores(p in prime_16(), x in any::<u64>(), g1 in any::<u64>(), g2 in any::<u64>()) {
        let f = FieldParams::new(p).unwrap();
        let mask = (1 << bitlen(p)) - 1;
        let start = regs(&[("x", x % p), ("g1", g1 & mask), ("g2", g2 & mask)]);
        let mut r = start.clone();
        ModInv::new(f).apply(&mut r).unwrap();
        prop_assert_eq!(decode(r.get("x").unwrap(), p), inv(decode(x % p, p), p));
        ModInv::new(f).adjoint().apply(&mut r).unwrap();
        prop_assert_eq!(r, start);
    }

    #[test]
    fn arithmetic_commutes_with_encoding(p in prime_16(), x in any::<u64>(), y in any::<u64>()) {
        let f = FieldParams::new(p).unwrap();
        let (x, y) = (x % p, y % p);
        let out = run(&ModArith::add(f), &[("src", encode(x, p)), ("dst", encode(y, p))]);
        prop_assert_eq!(decode(out.get("dst").unwrap(), p), (x + y) % p);
        let out = run(&ModArith::dbl(f), &[("x", encode(x, p))]);
        prop_assert_eq!(decode(out.get("x").unwrap(), p), 2 * x % p);
        let mut back = out.clone();
        ModArith::dbl(f).adjoint().apply(&mut back).unwrap();
        prop_assert_eq!(back.get("x").unwrap(), encode(x, p));
    }
}
