//! Prime-field parameters and Montgomery-form reference arithmetic.
//!
//! Residues are plain `u64` values in `[0, p)`. A Montgomery encoding of `x`
//! is `x * 2^n mod p` where `n` is the bit length of `p`, so `R = 2^n` is the
//! smallest power of two above the modulus.

use serde::{Deserialize, Serialize};

use crate::error::FieldError;

/// Largest modulus bit length supported. Products are formed in `u128`.
pub const MAX_FIELD_BITS: u32 = 32;

/// Parameters of the prime field `F_p` together with the Montgomery radix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldParams {
    p: u64,
    n: u32,
    r_mod_p: u64,
    r_inv: u64,
    /// `-p^{-1} mod 2^n`, used by REDC.
    p_neg_inv: u64,
}

impl FieldParams {
    /// Builds parameters for an odd prime `p` with `n = bitlen(p)`.
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return Err(FieldError::NotOddPrime(p));
        }
        let n = 64 - p.leading_zeros();
        if n > MAX_FIELD_BITS {
            return Err(FieldError::TooWide { p, bits: n });
        }
        let r = 1u64 << n;
        let r_mod_p = r % p;
        let r_inv = inverse_euclid(r_mod_p, p).expect("R is coprime to an odd prime");
        // Newton iteration for p^{-1} mod 2^64, then truncate.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let p_neg_inv = inv.wrapping_neg() & (r - 1);
        Ok(FieldParams { p, n, r_mod_p, r_inv, p_neg_inv })
    }

    /// Builds parameters and checks that `n` is the bit length of `p`.
    pub fn with_width(p: u64, n: u32) -> Result<Self, FieldError> {
        let params = Self::new(p)?;
        if params.n != n {
            return Err(FieldError::WidthMismatch { p, n });
        }
        Ok(params)
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Register width in bits.
    pub fn width(&self) -> u32 {
        self.n
    }

    /// `2^n mod p`.
    pub fn r_mod_p(&self) -> u64 {
        self.r_mod_p
    }

    /// `2^{-n} mod p`.
    pub fn r_inv(&self) -> u64 {
        self.r_inv
    }

    pub fn check(&self, x: u64) -> Result<u64, FieldError> {
        if x < self.p {
            Ok(x)
        } else {
            Err(FieldError::OutOfRange { value: x, modulus: self.p })
        }
    }

    pub fn add(&self, x: u64, y: u64) -> u64 {
        let s = x + y;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    pub fn sub(&self, x: u64, y: u64) -> u64 {
        if x >= y {
            x - y
        } else {
            x + self.p - y
        }
    }

    pub fn neg(&self, x: u64) -> u64 {
        if x == 0 {
            0
        } else {
            self.p - x
        }
    }

    pub fn dbl(&self, x: u64) -> u64 {
        self.add(x, x)
    }

    /// Inverse of [`FieldParams::dbl`]: `x / 2 mod p`.
    pub fn halve(&self, x: u64) -> u64 {
        if x % 2 == 0 {
            x / 2
        } else {
            (x + self.p) / 2
        }
    }

    /// Plain modular product, no Montgomery factor.
    pub fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.p as u128) as u64
    }

    pub fn to_montgomery(&self, x: u64) -> Result<u64, FieldError> {
        self.check(x)?;
        Ok(((x as u128) << self.n).rem_euclid(self.p as u128) as u64)
    }

    pub fn from_montgomery(&self, x: u64) -> Result<u64, FieldError> {
        self.check(x)?;
        Ok(self.redc(x as u128))
    }

    /// Montgomery reduction of `t < p * 2^n`: returns `t * 2^{-n} mod p`.
    fn redc(&self, t: u128) -> u64 {
        let mask = (1u128 << self.n) - 1;
        let m = ((t & mask) * self.p_neg_inv as u128) & mask;
        let u = (t + m * self.p as u128) >> self.n;
        let u = u as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    /// `a * b * 2^{-n} mod p` for Montgomery-encoded operands.
    pub fn mont_product(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        self.redc(a as u128 * b as u128)
    }

    /// Montgomery inverse: maps `to_m(x)` to `to_m(x^{-1})`, and `0` to `0`.
    pub fn mont_inverse(&self, a: u64) -> u64 {
        self.mont_inverse_with_count(a).0
    }

    /// Montgomery inverse together with the almost-inverse iteration count `k`.
    ///
    /// Phase one is Kaliski's binary almost-inverse, producing `a^{-1} 2^k`
    /// with `n <= k <= 2n`. Phase two doubles `2n - k` times to reach
    /// `a^{-1} 2^{2n}`, which is the Montgomery encoding of `x^{-1}` when
    /// `a = x 2^n`. Zero has no inverse and maps to zero with `k = 0`.
    pub fn mont_inverse_with_count(&self, a: u64) -> (u64, u32) {
        debug_assert!(a < self.p);
        if a == 0 {
            return (0, 0);
        }
        let (mut r, k) = almost_inverse(a, self.p);
        debug_assert!(k <= 2 * self.n);
        for _ in k..2 * self.n {
            r = self.dbl(r);
        }
        (r, k)
    }
}

/// Kaliski almost inverse. For `0 < a < p` returns `(a^{-1} 2^k mod p, k)`.
pub fn almost_inverse(a: u64, p: u64) -> (u64, u32) {
    let (mut u, mut v) = (p as u128, a as u128);
    let (mut r, mut s) = (0u128, 1u128);
    let mut k = 0u32;
    while v > 0 {
        if u % 2 == 0 {
            u /= 2;
            s *= 2;
        } else if v % 2 == 0 {
            v /= 2;
            r *= 2;
        } else if u > v {
            u = (u - v) / 2;
            r += s;
            s *= 2;
        } else {
            v = (v - u) / 2;
            s += r;
            r *= 2;
        }
        k += 1;
    }
    let p = p as u128;
    if r >= p {
        r -= p;
    }
    ((p - r) as u64 % p as u64, k)
}

/// Modular inverse by the extended Euclidean algorithm; `None` if not coprime.
pub fn inverse_euclid(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f17() -> FieldParams {
        FieldParams::new(17).unwrap()
    }

    #[test]
    fn params_for_17() {
        let f = f17();
        assert_eq!(f.width(), 5);
        assert_eq!(f.r_mod_p(), 15);
        assert_eq!(f.r_inv(), 8);
        assert_eq!(f.r_mod_p() * f.r_inv() % 17, 1);
    }

    #[test]
    fn rejects_non_primes_and_width_mismatch() {
        assert!(matches!(FieldParams::new(15), Err(FieldError::NotOddPrime(15))));
        assert!(FieldParams::new(2).is_err());
        assert!(matches!(FieldParams::with_width(17, 6), Err(FieldError::WidthMismatch { .. })));
        assert!(FieldParams::new(4_294_967_311).is_err());
    }

    #[test]
    fn montgomery_examples() {
        let f = f17();
        assert_eq!(f.to_montgomery(7).unwrap(), 3);
        assert_eq!(f.to_montgomery(0).unwrap(), 0);
        assert_eq!(f.mont_product(13, 11), 5);
        assert_eq!(f.mont_product(9, 0), 0);
        assert_eq!(f.mont_inverse(13), 16);
        assert_eq!(f.mont_inverse(0), 0);
        assert!(f.to_montgomery(17).is_err());
    }

    #[test]
    fn halve_undoes_double() {
        let f = f17();
        for x in 0..17 {
            assert_eq!(f.halve(f.dbl(x)), x);
        }
    }

    #[test]
    fn almost_inverse_bounds() {
        let f = f17();
        for a in 1..17 {
            let (r, k) = almost_inverse(a, 17);
            assert!((5..=10).contains(&k), "k={k} for a={a}");
            assert_eq!(f.mul(f.mul(r, a), inverse_euclid(1 << k, 17).unwrap()), 1);
        }
    }
}
