//! Reference arithmetic for the integration tests. Nothing here calls into the
//! library: residues are plain `u64`, inverses come from Fermat, points are
//! found by scanning, and the group law is written out from scratch.
#![allow(dead_code)]

use rand::Rng;

pub const P17: u64 = 17;
pub const C1: u64 = 0;
pub const C2: u64 = 7;
pub const N17: u32 = 5;

pub fn fixture_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/p17.json")
}

pub fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    acc
}

pub fn mul(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

/// Fermat inverse with `inv(0) = 0`.
pub fn inv(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

pub fn bitlen(p: u64) -> u32 {
    64 - p.leading_zeros()
}

/// `x * 2^n mod p`.
pub fn encode(x: u64, p: u64) -> u64 {
    mul(x, pow_mod(2, bitlen(p) as u64, p), p)
}

pub fn decode(x: u64, p: u64) -> u64 {
    mul(x, inv(pow_mod(2, bitlen(p) as u64, p), p), p)
}

/// `a * b * 2^-n mod p`.
pub fn mont_mul(a: u64, b: u64, p: u64) -> u64 {
    mul(mul(a, b, p), inv(pow_mod(2, bitlen(p) as u64, p), p), p)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Uniform odd prime with exactly 16 bits.
pub fn random_prime_16<R: Rng>(rng: &mut R) -> u64 {
    loop {
        let c = rng.gen_range(1u64 << 15..1 << 16) | 1;
        if is_prime(c) {
            return c;
        }
    }
}

pub type Pt = (u64, u64);
pub const O: Pt = (0, 0);

pub fn on_curve(pt: Pt, p: u64, c1: u64, c2: u64) -> bool {
    let (x, y) = pt;
    mul(y, y, p) == (mul(mul(x, x, p), x, p) + mul(c1, x, p) + c2) % p
}

/// Identity first, then affine points by ascending `(x, y)`.
pub fn points(p: u64, c1: u64, c2: u64) -> Vec<Pt> {
    let mut v = vec![O];
    for x in 0..p {
        for y in 0..p {
            if (x, y) != O && on_curve((x, y), p, c1, c2) {
                v.push((x, y));
            }
        }
    }
    v
}

pub fn neg(pt: Pt, p: u64) -> Pt {
    if pt == O {
        O
    } else {
        (pt.0, (p - pt.1) % p)
    }
}

/// Chord-and-tangent addition with `(0, 0)` standing for the point at infinity.
pub fn add(a: Pt, b: Pt, p: u64, c1: u64) -> Pt {
    if a == O {
        return b;
    }
    if b == O {
        return a;
    }
    if a == neg(b, p) {
        return O;
    }
    let slope = if a == b {
        let num = (3 * mul(a.0, a.0, p) + c1) % p;
        mul(num, inv(2 * a.1 % p, p), p)
    } else {
        mul((a.1 + p - b.1) % p, inv((a.0 + p - b.0) % p, p), p)
    };
    let x = (mul(slope, slope, p) + 2 * p - a.0 - b.0) % p;
    let y = (mul(slope, (a.0 + p - x) % p, p) + p - a.1) % p;
    (x, y)
}

pub fn double(a: Pt, p: u64, c1: u64) -> Pt {
    add(a, a, p, c1)
}
