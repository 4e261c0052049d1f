//! The permutation unitaries `u`, `v` and the exponentials of their
//! logarithms.
//!
//! `u` gathers the `f(0) = x ⊗ 1_q` copies of the slots with `xi = t/2` and
//! the `f(1/2)` slots into the layout of `M_{p'} ⊗ 1_{q'}`: for every column
//! index `C < q'` the positions `A q' + C` (`A < p'`) receive `alpha` copies
//! of `x` followed by `beta` full slots. `v` does the same for `f(1) = 1_p ⊗ y`
//! and `1_{p'} ⊗ M_{q'}`.
//!
//! On a cycle `c_0 -> c_1 -> ... -> c_{L-1}` of `u e_j = e_{sigma(j)}` the
//! logarithm with eigenvalues `2 pi m / L` (branch `[-pi/L, 2pi - pi/L)`) has
//! `exp(i s h)_{c_a c_b} = (1/L) sum_m e^{2 pi i m (s - d)/L}`, `d = a - b mod L`,
//! which sums to `(1/L)(e^{2 pi i s} - 1)/(e^{2 pi i (s-d)/L} - 1)`.

use std::collections::BTreeMap;

use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::jiangsu::SmallStage;
use crate::matrix::ball::{ball_of, BallMatrix};
use crate::matrix::RationalMatrix;
use crate::scalar::{rat, Rational};

use num_traits::{One, Zero};

/// `u e_j = e_{sigma[j]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    sigma: Vec<usize>,
}

impl Permutation {
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; sigma.len()];
        for &s in &sigma {
            if s >= sigma.len() || seen[s] {
                return Err(Error::Certification(format!(
                    "index map is not a permutation (value {s} repeated or out of range)"
                )));
            }
            seen[s] = true;
        }
        Ok(Permutation { sigma })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.sigma.len()];
        for (j, &s) in self.sigma.iter().enumerate() {
            inv[s] = j;
        }
        Permutation { sigma: inv }
    }

    /// Cycles `[c_0, sigma(c_0), ...]`, each starting at its least element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.sigma.len()];
        let mut out = Vec::new();
        for i in 0..self.sigma.len() {
            if seen[i] {
                continue;
            }
            let mut c = Vec::new();
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                c.push(j);
                j = self.sigma[j];
            }
            out.push(c);
        }
        out
    }

    pub fn cycle_lengths(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for c in self.cycles() {
            *m.entry(c.len()).or_insert(0) += 1;
        }
        m
    }

    pub fn to_rational(&self) -> RationalMatrix {
        RationalMatrix::permutation(&self.sigma)
    }

    pub fn to_ball(&self) -> BallMatrix {
        BallMatrix::permutation(&self.sigma)
    }

    /// Upper bound on `|h|` for the cycle logarithm: `2 pi (L-1)/L < 2 pi`.
    pub fn log_norm_upper(&self) -> Dyadic {
        let lmax = self.cycles().iter().map(Vec::len).max().unwrap_or(1) as i64;
        let two_pi = DyadicInterval::pi(64).shl(1);
        two_pi
            .mul(&DyadicInterval::from_rational(&rat(lmax - 1, lmax), 64))
            .hi()
            .clone()
    }

    /// Enclosure of `exp(i s h)` for `s` in `[0, 1]`; exact for `s = 0, 1`.
    pub fn exp_i_log(&self, s: &Rational) -> CycleExp {
        let cycles = self.cycles();
        let mut blocks = BTreeMap::new();
        for c in &cycles {
            let l = c.len();
            blocks.entry(l).or_insert_with(|| circulant_block(l, s));
        }
        CycleExp { n: self.sigma.len(), cycles, blocks }
    }
}

/// `exp(i s h)` stored as one circulant block per cycle length.
#[derive(Clone, Debug)]
pub struct CycleExp {
    n: usize,
    cycles: Vec<Vec<usize>>,
    blocks: BTreeMap<usize, BallMatrix>,
}

impl CycleExp {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Upper bound on `max(|E E* - 1|, |E* E - 1|)` over all members.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| {
                let d1 = b.mul(&b.adjoint()).sub_identity().norm_upper();
                let d2 = b.adjoint().mul(b).sub_identity().norm_upper();
                d1.max(d2)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> BallMatrix {
        let mut m = BallMatrix::zero(self.n);
        for c in &self.cycles {
            let b = &self.blocks[&c.len()];
            let l = c.len();
            for (a, &ca) in c.iter().enumerate() {
                for (bb, &cb) in c.iter().enumerate() {
                    let k = a * l + bb;
                    m.set(ca, cb, b.re[k], b.im[k], b.rad[k]);
                }
            }
        }
        m
    }
}

fn circulant_block(l: usize, s: &Rational) -> BallMatrix {
    if s.is_zero() {
        return BallMatrix::identity(l);
    }
    if s.is_one() {
        let sigma: Vec<usize> = (0..l).map(|j| (j + 1) % l).collect();
        return BallMatrix::permutation(&sigma);
    }
    let cd = circulant_coefficients(l, s);
    let mut m = BallMatrix::zero(l);
    for a in 0..l {
        for b in 0..l {
            let (re, im, rad) = cd[(a + l - b) % l];
            m.set(a, b, re, im, rad);
        }
    }
    m
}

/// `c_d(s)`, `d = 0..L`, as balls.
fn circulant_coefficients(l: usize, s: &Rational) -> Vec<(f64, f64, f64)> {
    if l == 1 {
        return vec![(1.0, 0.0, 0.0)];
    }
    let prec = 96;
    let two_pi = DyadicInterval::pi(prec + 8).shl(1);
    let at = |x: &Rational| {
        let xi = DyadicInterval::from_rational(x, prec + 8);
        ComplexInterval::expi(&two_pi.mul(&xi), prec)
    };
    let num = at(s).sub(&ComplexInterval::one());
    let inv_l = DyadicInterval::one().div(&DyadicInterval::from_i64(l as i64), prec).expect("l > 0");
    (0..l)
        .map(|d| {
            let x = (s - Rational::from_integer((d as i64).into())) / Rational::from_integer((l as i64).into());
            let den = at(&x).sub(&ComplexInterval::one());
            let q = num
                .mul(&den.conj())
                .div_real(&den.abs_sqr(), prec)
                .expect("denominator bounded away from zero for 0 < s < 1");
            ball_of(&q.mul_real(&inv_l).round_out(prec))
        })
        .collect()
}

/// `sigma` for `u`: target `A q' + C` receives the `A`-th position of the
/// list for column `C`.
pub fn build_u(st: &SmallStage) -> Result<Permutation> {
    let (p, q, n) = (st.p, st.q, st.block());
    let mut sigma = vec![usize::MAX; st.dim()];
    for c in 0..st.q1 {
        for a in 0..st.p1 {
            let src = if a < st.alpha * p {
                let (j, a0) = (a / p, a % p);
                let g = c * st.alpha + j; // copy index = slot * q + b0
                let (slot, b0) = (g / q, g % q);
                slot * n + a0 * q + b0
            } else {
                let a2 = a - st.alpha * p;
                let (j, i) = (a2 / n, a2 % n);
                let slot = st.r + c * st.beta + j;
                slot * n + i
            };
            sigma[a * st.q1 + c] = src;
        }
    }
    Permutation::new(sigma).map_err(|e| Error::Certification(format!("build_u: {e}")))
}

/// `sigma` for `v`: target `A q' + C` receives the `C`-th position of the
/// list for row `A`.
pub fn build_v(st: &SmallStage) -> Result<Permutation> {
    let (p, q, n) = (st.p, st.q, st.block());
    let first_upper = st.slots() - st.s;
    let mut sigma = vec![usize::MAX; st.dim()];
    for a in 0..st.p1 {
        for c in 0..st.q1 {
            let src = if c < st.alpha_v * q {
                let (j, b0) = (c / q, c % q);
                let h = a * st.alpha_v + j; // copy index = (slot - first_upper) * p + a0
                let (slot, a0) = (first_upper + h / p, h % p);
                slot * n + a0 * q + b0
            } else {
                let c2 = c - st.alpha_v * q;
                let (j, i) = (c2 / n, c2 % n);
                let slot = a * st.beta_v + j;
                slot * n + i
            };
            sigma[a * st.q1 + c] = src;
        }
    }
    Permutation::new(sigma).map_err(|e| Error::Certification(format!("build_v: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jiangsu::stage_params;

    #[test]
    fn permutations_are_bijective() {
        let st = SmallStage::from_stage(&stage_params(0).unwrap(), 1 << 20).unwrap();
        let u = build_u(&st).unwrap();
        let v = build_v(&st).unwrap();
        assert_eq!(u.len(), 1326);
        assert_eq!(v.len(), 1326);
        let total: usize = u.cycles().iter().map(Vec::len).sum();
        assert_eq!(total, 1326);
    }

    #[test]
    fn circulant_exponential_of_a_cycle() {
        // 3-cycle; exp(i s h)^2 at s = 1/2 must be the permutation
        let p = Permutation::new(vec![1, 2, 0]).unwrap();
        let half = p.exp_i_log(&rat(1, 2)).to_dense();
        let sq = half.mul(&half);
        assert!(sq.contains_rational(&p.to_rational()));
        let third = p.exp_i_log(&rat(1, 3));
        assert!(third.unitarity_defect() < 1e-12);
        assert!(p.exp_i_log(&Rational::one()).to_dense().contains_rational(&p.to_rational()));
        let q = Permutation::new(vec![2, 0, 1, 4, 3]).unwrap();
        assert!(q.exp_i_log(&Rational::one()).to_dense().contains_rational(&q.to_rational()));
    }
}
