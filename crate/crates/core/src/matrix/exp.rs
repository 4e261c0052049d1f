//! Certified matrix exponential by scaling and squaring with a Taylor
//! remainder bound.

use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval, Round};
use crate::matrix::IntervalMatrix;

fn log2_ceil_usize(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        (n - 1).ilog2() + 1
    }
}

/// Enclosure of `exp(H)` for every `H` in the enclosure; the truncation error
/// is at most `2^-k`, and the width is about `2^-k` plus the propagated input
/// width.
pub fn matrix_exp(h: &IntervalMatrix, k: u32) -> IntervalMatrix {
    let n = h.dim();
    let b = h.frobenius_upper(32);
    if b.is_zero() {
        return IntervalMatrix::identity(n);
    }
    // Scale so that |A| <= 1/2.
    let s: i64 = (b.ceil_log2() + 1).max(0);
    let a = h.shl(-s);
    let ab = b.shl(-s);
    // e^B grows the error of each squaring; budget the bits.
    let growth_bits = (b.to_f64() * std::f64::consts::LOG2_E).ceil().max(0.0) as u32;
    let wp = k + s as u32 + growth_bits + 2 * log2_ceil_usize(n) + 40;

    // Terms until 2 |A|^(N+1) / (N+1)! is below 2^-(wp).
    let mut nterms = 1u64;
    let mut tail = ab.clone();
    let target = Dyadic::pow2(-(wp as i64));
    loop {
        let bound = tail.shl(1);
        if bound <= target {
            break;
        }
        nterms += 1;
        tail = tail
            .mul(&ab)
            .div(&Dyadic::from_i64(nterms as i64), 64, Round::Up);
    }
    let remainder = tail.shl(1);

    // Horner: I + A/1 (I + A/2 (I + ... (I + A/N))).
    let id = IntervalMatrix::identity(n);
    let mut acc = id.clone();
    for j in (1..=nterms).rev() {
        let c = DyadicInterval::one()
            .div(&DyadicInterval::from_i64(j as i64), wp)
            .expect("nonzero");
        acc = id.add(&a.mul(&acc, wp).scale_real(&c, wp));
    }
    // Entrywise widening by the operator-norm remainder bound.
    let mut e = acc.widen(&remainder);
    for _ in 0..s {
        e = e.mul(&e, wp);
    }
    e
}

/// `exp(i x H)` for real `x` and Hermitian `H`.
pub fn expi_scaled(h: &IntervalMatrix, x: &DyadicInterval, k: u32) -> IntervalMatrix {
    let prec = k + 64;
    let m = h.scale(&ComplexInterval::real(x.clone()), prec).mul_i();
    matrix_exp(&m, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_zero_is_identity() {
        let z = IntervalMatrix::zero(3);
        assert_eq!(matrix_exp(&z, 30), IntervalMatrix::identity(3));
    }

    #[test]
    fn exp_of_i_pi_diag() {
        let pi = DyadicInterval::pi(120);
        let mut h = IntervalMatrix::zero(2);
        h.set(0, 0, ComplexInterval::new(DyadicInterval::zero(), pi));
        let e = matrix_exp(&h, 60);
        let minus_one = ComplexInterval::real(DyadicInterval::from_i64(-1));
        assert!(e.get(0, 0).contains_interval(&minus_one));
        assert!(e.get(1, 1).contains_interval(&ComplexInterval::one()));
        assert!(e.max_rad() < Dyadic::pow2(-50));
    }

    #[test]
    fn exp_inverse_contains_identity() {
        let mut h = IntervalMatrix::zero(2);
        h.set(0, 1, ComplexInterval::point(Dyadic::from_i64(3), Dyadic::one()));
        h.set(1, 0, ComplexInterval::point(Dyadic::from_i64(3), Dyadic::from_i64(-1)));
        h.set(0, 0, ComplexInterval::point(Dyadic::pow2(-1), Dyadic::zero()));
        let a = h.mul_i();
        let p = matrix_exp(&a, 50).mul(&matrix_exp(&a.neg(), 50), 120);
        assert!(p.contains(&IntervalMatrix::identity(2)));
    }
}
