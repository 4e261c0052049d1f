//! Cantor pairing and the Gödel numbering of *-polynomials.
//!
//! Polynomial codes are bitstrings read as binary naturals. The bitstring is a
//! leading `1` followed by Elias-gamma numbers (`gamma(x)` for `x >= 1` is
//! `len(x)-1` zeros then `x` in binary):
//!
//! ```text
//! gamma(T+1)                                  T = number of terms
//! per term, in length-lexicographic word order:
//!   gamma(L+1)                                L = word length
//!   gamma(2*g + s + 1) for each letter        g = generator, s = 1 if starred
//!   gamma(zz(re.num)+1) gamma(re.den)
//!   gamma(zz(im.num)+1) gamma(im.den)
//! ```
//!
//! where `zz(n) = 2n` for `n >= 0` and `-2n-1` otherwise, fractions are reduced
//! and coefficients nonzero. Decoding is total: any natural that is not the exact
//! encoding of a canonical polynomial (malformed stream, trailing bits, zero
//! coefficient, unreduced fraction, out-of-order or repeated words) decodes to
//! the zero polynomial.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::poly::{Letter, StarPoly, Word};
use crate::scalar::GaussianRational;

pub type Code = BigUint;

/// Cantor pairing `(m+p)(m+p+1)/2 + p`.
pub fn pair(m: &BigUint, p: &BigUint) -> BigUint {
    let s = m + p;
    (&s * (&s + 1u32)) / 2u32 + p
}

pub fn unpair(n: &BigUint) -> (BigUint, BigUint) {
    // w = floor((sqrt(8n+1)-1)/2)
    let w = ((n * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let p = n - &t;
    let m = &w - &p;
    (m, p)
}

pub fn pair_u64(m: u64, p: u64) -> BigUint {
    pair(&BigUint::from(m), &BigUint::from(p))
}

/// Pairing on machine integers, used for generator indices.
pub fn pair_usize(m: usize, p: usize) -> usize {
    let s = m + p;
    s * (s + 1) / 2 + p
}

/// Unpair when both components fit in `usize`.
pub fn unpair_usize(n: &BigUint) -> Option<(usize, usize)> {
    let (m, p) = unpair(n);
    Some((m.to_usize()?, p.to_usize()?))
}

struct BitWriter {
    bits: Vec<u8>,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter { bits: vec![1] }
    }

    fn gamma(&mut self, x: &BigUint) {
        debug_assert!(!x.is_zero());
        let digits = x.to_radix_be(2);
        self.bits.extend(std::iter::repeat(0).take(digits.len() - 1));
        self.bits.extend(digits);
    }

    fn gamma_u(&mut self, x: u64) {
        self.gamma(&BigUint::from(x));
    }

    fn finish(self) -> BigUint {
        BigUint::from_radix_be(&self.bits, 2).expect("binary digits")
    }
}

struct BitReader {
    bits: Vec<u8>,
    pos: usize,
}

impl BitReader {
    fn gamma(&mut self) -> Option<BigUint> {
        let mut zeros = 0;
        while self.bits.get(self.pos)? == &0 {
            zeros += 1;
            self.pos += 1;
        }
        let end = self.pos + zeros + 1;
        if end > self.bits.len() {
            return None;
        }
        let v = BigUint::from_radix_be(&self.bits[self.pos..end], 2)?;
        self.pos = end;
        Some(v)
    }

    fn gamma_usize(&mut self) -> Option<usize> {
        self.gamma()?.to_usize()
    }
}

fn zigzag(n: &BigInt) -> BigUint {
    if n.is_negative() {
        (n.magnitude() << 1u32) - 1u32
    } else {
        n.magnitude() << 1u32
    }
}

fn unzigzag(z: &BigUint) -> BigInt {
    if z.is_odd() {
        -BigInt::from((z + 1u32) >> 1u32)
    } else {
        BigInt::from(z >> 1u32)
    }
}

fn write_rational(w: &mut BitWriter, r: &BigRational) {
    w.gamma(&(zigzag(r.numer()) + 1u32));
    w.gamma(r.denom().magnitude());
}

pub fn encode_poly(p: &StarPoly) -> Code {
    let mut w = BitWriter::new();
    w.gamma_u(p.terms().len() as u64 + 1);
    for (word, z) in p.terms() {
        w.gamma_u(word.len() as u64 + 1);
        for l in &word.0 {
            w.gamma_u(2 * l.gen as u64 + l.star as u64 + 1);
        }
        write_rational(&mut w, &z.re);
        write_rational(&mut w, &z.im);
    }
    w.finish()
}

fn read_rational(r: &mut BitReader) -> Option<BigRational> {
    let num = unzigzag(&(r.gamma()? - 1u32));
    let den = BigInt::from(r.gamma()?);
    if !num.gcd(&den).is_one() {
        return None;
    }
    Some(BigRational::new_raw(num, den))
}

fn try_decode(c: &Code) -> Option<StarPoly> {
    if c.is_zero() {
        return None;
    }
    let bits = c.to_radix_be(2);
    let mut r = BitReader { bits, pos: 1 };
    let t = r.gamma_usize()? - 1;
    let mut p = StarPoly::zero();
    for _ in 0..t {
        let len = r.gamma_usize()? - 1;
        let mut letters = Vec::with_capacity(len.min(1 << 16));
        for _ in 0..len {
            let x = r.gamma_usize()? - 1;
            letters.push(Letter::new(x / 2, x % 2 == 1));
        }
        let re = read_rational(&mut r)?;
        let im = read_rational(&mut r)?;
        p.add_term(Word(letters), GaussianRational::new(re, im));
    }
    if r.pos != r.bits.len() {
        return None;
    }
    Some(p)
}

/// Total decoder; non-canonical naturals decode to the zero polynomial.
pub fn decode_poly(c: &Code) -> StarPoly {
    match try_decode(c) {
        Some(p) if &encode_poly(&p) == c => p,
        _ => StarPoly::zero(),
    }
}

/// True when `c` is the exact encoding of some polynomial.
pub fn is_canonical(c: &Code) -> bool {
    matches!(try_decode(c), Some(p) if &encode_poly(&p) == c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn pairing_examples() {
        assert_eq!(pair_u64(0, 0), BigUint::from(0u32));
        assert_eq!(pair_u64(1, 2), BigUint::from(8u32));
        assert_eq!(pair_u64(2, 1), BigUint::from(7u32));
    }

    #[test]
    fn small_codes() {
        assert_eq!(encode_poly(&StarPoly::zero()), BigUint::from(3u32));
        assert!(decode_poly(&BigUint::from(0u32)).is_zero());
        assert!(decode_poly(&BigUint::from(12345u32)).is_zero() || is_canonical(&BigUint::from(12345u32)));
    }

    #[test]
    fn unreduced_fraction_is_not_canonical() {
        // Hand-built stream for one unit term with re = 2/2.
        let mut w = BitWriter::new();
        w.gamma_u(2);
        w.gamma_u(1);
        w.gamma(&(zigzag(&BigInt::from(2)) + 1u32));
        w.gamma_u(2);
        w.gamma_u(1);
        w.gamma_u(1);
        let c = w.finish();
        assert!(!is_canonical(&c));
        assert!(decode_poly(&c).is_zero());
        let p = StarPoly::unit().scale_rational(&rat(-3, 7));
        assert_eq!(decode_poly(&encode_poly(&p)), p);
    }
}
