//! UHF algebras `M_n` for supernatural `n`, as limits of matrix stages along
//! `x -> x ⊗ 1`, and tensor-leg permutations for `M_{2^inf} ⊗ M_{2^inf}`.
//!
//! For the `2^inf` case stage `s` is `M_2^{⊗ s}`; leg `i` is the `i`-th tensor
//! factor (most significant bit of the basis index first), so pushing to the
//! next stage appends a leg and keeps the numbering. In `A ⊗ A` at stages
//! `(s1, s2)` the first copy occupies positions `0..s1` and the second copy
//! positions `s1..s1 + s2`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::budget::Budget;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::jiangsu::primes::is_prime_trial;
use crate::matrix::tensor::{distance_to_leg, Leg};
use crate::matrix::{matrix_norm, RationalMatrix};
use crate::presentation::{inductive_limit_presentation, Element, InductiveLimit, MatrixPresentation, Presentation};

/// What the support enumerator says about factor `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorStep {
    Prime(u64),
    /// Finite type: no further factors, the truncations are constant.
    Done,
    /// The enumerator has not (yet) produced this factor.
    Stalled,
}

type FactorFn = dyn Fn(usize) -> FactorStep + Send + Sync;

/// A supernatural number given by an enumeration of its prime factors with
/// multiplicity; stage `s` truncates to the product of the first `s`.
#[derive(Clone)]
pub struct SupernaturalNumber {
    name: String,
    factors: Arc<FactorFn>,
    infinite_type: bool,
}

impl fmt::Debug for SupernaturalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SupernaturalNumber({})", self.name)
    }
}

fn check_prime(p: u64) -> Result<u64> {
    if is_prime_trial(p) {
        Ok(p)
    } else {
        Err(Error::InvalidInput(format!("{p} is not a prime")))
    }
}

impl SupernaturalNumber {
    pub fn from_enumerator(
        name: impl Into<String>,
        infinite_type: bool,
        factors: impl Fn(usize) -> FactorStep + Send + Sync + 'static,
    ) -> Self {
        SupernaturalNumber { name: name.into(), factors: Arc::new(factors), infinite_type }
    }

    pub fn two_infinity() -> Self {
        Self::from_enumerator("2^inf", true, |_| FactorStep::Prime(2))
    }

    /// `prod p^inf` over the given primes; factors cycle through them.
    pub fn infinite(primes: &[u64]) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidInput("infinite type needs at least one prime".into()));
        }
        let mut ps = Vec::new();
        for &p in primes {
            ps.push(check_prime(p)?);
        }
        ps.sort_unstable();
        ps.dedup();
        let name = ps.iter().map(|p| format!("{p}^inf")).collect::<Vec<_>>().join("*");
        Ok(Self::from_enumerator(name, true, move |i| FactorStep::Prime(ps[i % ps.len()])))
    }

    /// `prod p^e`, a finite matrix algebra reached in `sum e` stages.
    pub fn finite(exps: &[(u64, u32)]) -> Result<Self> {
        let mut list = Vec::new();
        for &(p, e) in exps {
            check_prime(p)?;
            list.extend(std::iter::repeat(p).take(e as usize));
        }
        let name = exps.iter().map(|(p, e)| format!("{p}^{e}")).collect::<Vec<_>>().join("*");
        Ok(Self::from_enumerator(name, false, move |i| {
            list.get(i).map_or(FactorStep::Done, |&p| FactorStep::Prime(p))
        }))
    }

    /// Parses `2^inf`, `2^inf*3^inf` or `2^3*3^1`; an exponent may be omitted.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad supernatural number {s:?}"));
        let mut inf = Vec::new();
        let mut fin = Vec::new();
        for part in s.split('*') {
            let (p, e) = part.trim().split_once('^').unwrap_or((part.trim(), "1"));
            let p: u64 = p.parse().map_err(|_| bad())?;
            if e == "inf" {
                inf.push(p);
            } else {
                fin.push((p, e.parse().map_err(|_| bad())?));
            }
        }
        match (inf.is_empty(), fin.is_empty()) {
            (false, true) => Self::infinite(&inf),
            (true, false) => Self::finite(&fin),
            _ => Err(Error::InvalidInput(format!(
                "{s:?} mixes finite and infinite exponents, which is not supported"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_infinite_type(&self) -> bool {
        self.infinite_type
    }

    /// Factor between stage `i` and stage `i + 1` (1 once a finite type is exhausted).
    pub fn factor(&self, i: usize) -> Result<usize> {
        match (self.factors)(i) {
            FactorStep::Prime(p) => Ok(check_prime(p)? as usize),
            FactorStep::Done => Ok(1),
            FactorStep::Stalled => Err(Error::Infeasible(format!(
                "the support enumerator of {} has not produced factor {i}",
                self.name
            ))),
        }
    }

    /// `d_s`: the product of the first `s` factors.
    pub fn truncation(&self, stage: usize) -> Result<usize> {
        let mut d = 1usize;
        for i in 0..stage {
            d = d
                .checked_mul(self.factor(i)?)
                .ok_or_else(|| Error::Infeasible(format!("truncation at stage {stage} overflows")))?;
        }
        Ok(d)
    }

    /// Primes seen among the first `stages` factors.
    pub fn support_prefix(&self, stages: usize) -> Result<BTreeSet<u64>> {
        let mut out = BTreeSet::new();
        for i in 0..stages {
            let f = self.factor(i)?;
            if f > 1 {
                out.insert(f as u64);
            }
        }
        Ok(out)
    }
}

/// `M_n` as the limit of `M_{d_s}` along `x -> x ⊗ 1_{f_s}`.
pub fn uhf_presentation(n: &SupernaturalNumber, budget: Budget) -> InductiveLimit {
    // last stage within the dimension budget; a stalled factor caps the
    // limit just past it so that the stage itself reports the stall
    let mut max_stage = 0;
    let mut d = 1usize;
    for i in 0..64 {
        match n.factor(i) {
            Ok(f) if d.saturating_mul(f) <= budget.max_matrix_dim => {
                d *= f;
                max_stage = i + 1;
            }
            Ok(_) => break,
            Err(_) => {
                max_stage = i + 1;
                break;
            }
        }
    }
    let n1 = n.clone();
    let n2 = n.clone();
    let b2 = budget.clone();
    inductive_limit_presentation(
        format!("uhf:{}", n.name()),
        move |m| Ok(Arc::new(MatrixPresentation::new(n1.truncation(m)?, b2.clone())) as Arc<dyn Presentation>),
        move |m, x| match x {
            Element::Matrix(a) => Ok(Element::Matrix(a.kron(&RationalMatrix::identity(n2.factor(m)?)))),
            _ => Err(Error::InvalidInput("matrix limit received a function".into())),
        },
        true,
        max_stage,
        budget,
    )
}

/// `log2(dim)` when `dim` is a power of two.
pub fn leg_count(dim: usize) -> Option<usize> {
    dim.is_power_of_two().then(|| dim.trailing_zeros() as usize)
}

fn bit(legs: usize, pos: usize) -> usize {
    1 << (legs - 1 - pos)
}

/// Legs on which `x` acts nontrivially: leg `l` is outside the support iff
/// `x = y ⊗ 1` on that factor, checked exactly on the nonzero entries.
pub fn leg_support(x: &RationalMatrix) -> Result<BTreeSet<usize>> {
    let legs = leg_count(x.dim())
        .ok_or_else(|| Error::InvalidInput(format!("dimension {} is not a power of two", x.dim())))?;
    let mut out = BTreeSet::new();
    for pos in 0..legs {
        let b = bit(legs, pos);
        let trivial = x.iter().all(|(&(r, c), z)| {
            (r & b) == (c & b) && x.entry(r ^ b, c ^ b) == Some(z)
        });
        if !trivial {
            out.insert(pos);
        }
    }
    Ok(out)
}

/// A rearrangement of binary tensor legs: leg `l` moves to `positions[l]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LegPermutation {
    positions: Vec<usize>,
}

impl LegPermutation {
    pub fn new(positions: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; positions.len()];
        for &p in &positions {
            if p >= positions.len() || seen[p] {
                return Err(Error::InvalidInput("leg arrangement is not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(LegPermutation { positions })
    }

    pub fn identity(legs: usize) -> Self {
        LegPermutation { positions: (0..legs).collect() }
    }

    /// Product of the given disjoint transpositions.
    pub fn swaps(legs: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut positions: Vec<usize> = (0..legs).collect();
        for &(a, b) in pairs {
            if a >= legs || b >= legs {
                return Err(Error::InvalidInput(format!("leg swap ({a}, {b}) outside {legs} legs")));
            }
            positions.swap(a, b);
        }
        LegPermutation::new(positions)
    }

    pub fn legs(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn is_identity(&self) -> bool {
        self.positions.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Basis map `x -> y`: the bit of leg `l` in `x` becomes the bit of
    /// position `positions[l]` in `y`.
    pub fn index_map(&self) -> Vec<usize> {
        let legs = self.legs();
        (0..1usize << legs)
            .map(|x| {
                let mut y = 0;
                for (l, &p) in self.positions.iter().enumerate() {
                    if x & bit(legs, l) != 0 {
                        y |= bit(legs, p);
                    }
                }
                y
            })
            .collect()
    }

    /// The permutation unitary `P`, with `P (x_0 ⊗ x_1 ⊗ ...) P*` carrying
    /// leg `l` to `positions[l]`.
    pub fn matrix(&self) -> RationalMatrix {
        RationalMatrix::permutation(&self.index_map())
    }
}

/// Swap that moves the second-copy legs `movers` of `A ⊗ A` at stages
/// `(s1, s2)` onto first-copy legs outside `fixed`, taking the least free
/// ones. Returns the (possibly larger) first-copy stage and the arrangement.
pub fn absorbing_swap(
    s1: usize,
    s2: usize,
    fixed: &BTreeSet<usize>,
    movers: &BTreeSet<usize>,
) -> Result<(usize, LegPermutation)> {
    let mut fresh = Vec::new();
    let mut l = 0;
    while fresh.len() < movers.len() {
        if !fixed.contains(&l) {
            fresh.push(l);
        }
        l += 1;
    }
    let t1 = fresh.iter().map(|f| f + 1).max().unwrap_or(0).max(s1);
    if let Some(&m) = movers.iter().next_back() {
        if m >= s2 {
            return Err(Error::InvalidInput(format!("second-copy leg {m} outside stage {s2}")));
        }
    }
    let pairs: Vec<(usize, usize)> = fresh.iter().zip(movers).map(|(&f, &m)| (f, t1 + m)).collect();
    Ok((t1, LegPermutation::swaps(t1 + s2, &pairs)?))
}

/// Per-stage record of the half-flip sanity suite.
#[derive(Clone, Debug, Serialize)]
pub struct HalfFlipCertificate {
    pub n: usize,
    /// Stages `(2n, n)` of the two copies.
    pub stages: (usize, usize),
    pub dim: usize,
    pub legs: LegPermutation,
    pub first_points: usize,
    pub second_points: usize,
    /// Upper bounds; zero when the identities hold exactly.
    pub commutator_max: String,
    pub absorption_max: String,
    pub unitarity_defect: String,
}

/// The half flip `w_n` at stage `n`: swaps second-copy leg `i` with
/// first-copy leg `n + i` for `i < n`, realized in `A ⊗ A` at stages
/// `(2n, n)`. `first` and `second` are stage-`n` points of the two copies
/// (size `2^n`); `w_n` must commute with `x ⊗ 1` for `x` in `first` and
/// conjugate `1 ⊗ y` into the first copy for `y` in `second`.
pub fn half_flip_supplier(
    n: usize,
    first: &[RationalMatrix],
    second: &[RationalMatrix],
    budget: &Budget,
    k: u32,
) -> Result<(LegPermutation, HalfFlipCertificate)> {
    let d = 1usize << n;
    let dim = 1usize << (3 * n);
    if dim > budget.max_matrix_dim {
        return Err(Error::Infeasible(format!(
            "half flip at stage {n} needs dimension {dim} > {}",
            budget.max_matrix_dim
        )));
    }
    let fixed: BTreeSet<usize> = (0..n).collect();
    let movers: BTreeSet<usize> = (0..n).collect();
    let (t1, w) = absorbing_swap(2 * n, n, &fixed, &movers)?;
    debug_assert_eq!(t1, 2 * n);
    let p = w.matrix();
    let pad = RationalMatrix::identity(d);
    let id_b = RationalMatrix::identity(d);
    let mut comm = Dyadic::zero();
    for x in first {
        if x.dim() != d {
            return Err(Error::InvalidInput(format!("first-copy point is not in M_{d}")));
        }
        let phi = x.kron(&pad).kron(&id_b);
        let c = p.mul(&phi).sub(&phi.mul(&p));
        comm = comm.max_with(matrix_norm(&c, k).hi());
    }
    let mut absorb = Dyadic::zero();
    for y in second {
        if y.dim() != d {
            return Err(Error::InvalidInput(format!("second-copy point is not in M_{d}")));
        }
        let b = RationalMatrix::identity(d * d).kron(y);
        let z = p.adjoint().mul(&b).mul(&p);
        absorb = absorb.max_with(&distance_to_leg(&z, d * d, d, Leg::Left, k)?);
    }
    let defect = matrix_norm(&p.adjoint().mul(&p).sub(&RationalMatrix::identity(dim)), k);
    let cert = HalfFlipCertificate {
        n,
        stages: (2 * n, n),
        dim,
        legs: w.clone(),
        first_points: first.len(),
        second_points: second.len(),
        commutator_max: comm.to_string(),
        absorption_max: absorb.to_string(),
        unitarity_defect: defect.hi().to_string(),
    };
    if !comm.is_zero() || !absorb.is_zero() || !defect.hi().is_zero() {
        return Err(Error::Certification(format!(
            "half flip at stage {n} is not exact: commutator {comm}, absorption {absorb}"
        )));
    }
    Ok((w, cert))
}

/// All matrix units of `M_{2^m}` for `m <= n`, pushed to stage `n`.
pub fn stage_points(a: &InductiveLimit, n: usize) -> Result<Vec<RationalMatrix>> {
    let mut out = Vec::new();
    for m in 0..=n {
        let d = 1usize << m;
        for g in 0..d * d {
            match a.special_point_at(crate::coding::pair_usize(m, g), n)? {
                Element::Matrix(x) => out.push(x),
                Element::Function(_) => return Err(Error::InvalidInput("UHF stage is not a matrix".into())),
            }
        }
    }
    Ok(out)
}

/// The supplier sanity suite for stages `1..=stages` of `M_{2^inf} ⊗ M_{2^inf}`.
pub fn uhf_demo(stages: usize, k: u32, budget: &Budget) -> Result<Vec<HalfFlipCertificate>> {
    let a = uhf_presentation(&SupernaturalNumber::two_infinity(), budget.clone());
    let mut out = Vec::new();
    for n in 1..=stages {
        let pts = stage_points(&a, n)?;
        out.push(half_flip_supplier(n, &pts, &pts, budget, k)?.1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::pair_usize;
    use crate::poly::StarPoly;
    use crate::scalar::rat;

    fn two_inf() -> InductiveLimit {
        uhf_presentation(&SupernaturalNumber::two_infinity(), Budget::default())
    }

    #[test]
    fn truncations_divide() {
        let n = SupernaturalNumber::parse("2^inf*3^inf").unwrap();
        let t: Vec<usize> = (0..6).map(|s| n.truncation(s).unwrap()).collect();
        assert_eq!(t, vec![1, 2, 6, 12, 36, 72]);
        assert!(t.windows(2).all(|w| w[1] % w[0] == 0));
        assert_eq!(n.support_prefix(4).unwrap().into_iter().collect::<Vec<_>>(), vec![2, 3]);
        let f = SupernaturalNumber::parse("2^2*5").unwrap();
        assert!(!f.is_infinite_type());
        assert_eq!(f.truncation(7).unwrap(), 20);
        assert!(SupernaturalNumber::parse("4^inf").is_err());
    }

    #[test]
    fn stalled_enumerator_is_infeasible() {
        let n = SupernaturalNumber::from_enumerator("stalls", true, |i| {
            if i < 2 { FactorStep::Prime(2) } else { FactorStep::Stalled }
        });
        let a = uhf_presentation(&n, Budget::default());
        assert!(a.norm(&StarPoly::gen(pair_usize(1, 0)), 10).is_ok());
        let r = a.norm(&StarPoly::gen(pair_usize(3, 0)), 10);
        assert!(matches!(r, Err(Error::Infeasible(_))), "{r:?}");
    }

    #[test]
    fn stage_norms_and_embeddings() {
        let a = two_inf();
        let e11 = StarPoly::gen(pair_usize(1, 0));
        assert!(a.norm(&e11, 20).unwrap().contains_rational(&rat(1, 1)));
        // e11 at stage 1 against its image e11 ⊗ 1 = e11 + e22 (of M_4) at stage 2
        let pushed = StarPoly::gen(pair_usize(2, 0)).add(&StarPoly::gen(pair_usize(2, 5)));
        let d = a.norm(&e11.sub(&pushed), 40).unwrap();
        assert!(d.hi() < &Dyadic::pow2(-30));
        // x on leg 0, y on leg 1 (1 ⊗ e12 in M_2 ⊗ M_2 = e12 + e34)
        let y = StarPoly::gen(pair_usize(2, 1)).add(&StarPoly::gen(pair_usize(2, 11)));
        let x = StarPoly::gen(pair_usize(1, 1));
        let c = x.mul(&y).sub(&y.mul(&x));
        assert!(a.norm(&c, 20).unwrap().contains(&Dyadic::zero()));
    }

    #[test]
    fn leg_supports() {
        let a = two_inf();
        let Element::Matrix(x) = a.special_point_at(pair_usize(2, 1), 3).unwrap() else { panic!() };
        // e12 of M_4 = e11 ⊗ e12 on legs 0, 1
        assert_eq!(leg_support(&x).unwrap().into_iter().collect::<Vec<_>>(), vec![0, 1]);
        assert!(leg_support(&RationalMatrix::identity(8)).unwrap().is_empty());
    }

    #[test]
    fn swaps_move_legs() {
        let w = LegPermutation::swaps(3, &[(0, 2)]).unwrap();
        let p = w.matrix();
        assert!(p.is_unitary());
        let x = RationalMatrix::unit(2, 0, 1)
            .kron(&RationalMatrix::identity(2))
            .kron(&RationalMatrix::identity(2));
        let moved = p.mul(&x).mul(&p.adjoint());
        assert_eq!(leg_support(&moved).unwrap().into_iter().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn half_flip_is_exact() {
        let certs = uhf_demo(2, 20, &Budget::default()).unwrap();
        assert_eq!(certs.len(), 2);
        for c in &certs {
            assert_eq!(c.commutator_max, "0");
            assert_eq!(c.absorption_max, "0");
            assert_eq!(c.unitarity_defect, "0");
        }
        // a flip that leaves the second copy alone does not absorb it
        let pts = stage_points(&two_inf(), 1).unwrap();
        let p = LegPermutation::identity(3).matrix();
        let y = RationalMatrix::identity(4).kron(&pts[2]);
        let z = p.adjoint().mul(&y).mul(&p);
        assert!(!distance_to_leg(&z, 4, 2, Leg::Left, 10).unwrap().is_zero());
    }
}
