//! Matrix-valued functions on `[0, 1]` built from `t^{1/2}` and
//! `(1-t)^{1/2}`, certified evaluation and a branch-and-bound sup norm.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::matrix::tensor::distance_to_leg;
use crate::matrix::{interval_matrix_norm, IntervalMatrix, Leg, RationalMatrix};
use crate::poly::StarAlgebra;
use crate::scalar::{rat, GaussianRational, Rational};

/// Hoelder exponent of a modulus of continuity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Holder {
    One,
    Half,
}

/// `|f(s) - f(t)| <= lipschitz * |s - t|^alpha`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulus {
    pub lipschitz: Rational,
    pub alpha: Holder,
}

impl Modulus {
    /// A `delta` with `|s - t| <= delta => |f(s) - f(t)| <= eps`.
    pub fn delta_for(&self, eps: &Rational) -> Option<Rational> {
        if self.lipschitz.is_zero() {
            return None;
        }
        let r = eps / &self.lipschitz;
        Some(match self.alpha {
            Holder::One => r,
            Holder::Half => &r * &r,
        })
    }
}

fn binom(n: u32, k: u32) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// `max(row sum, column sum)` of entry magnitudes, an upper bound on the norm.
fn norm_upper_rational(m: &RationalMatrix) -> Rational {
    let n = m.dim();
    let mut rows = vec![Rational::zero(); n];
    let mut cols = vec![Rational::zero(); n];
    for (&(i, j), z) in m.iter() {
        let a = z.abs_upper();
        rows[i] += &a;
        cols[j] += &a;
    }
    rows.into_iter().chain(cols).max().unwrap_or_else(Rational::zero)
}

/// `sum_{r,s} t^{r/2} (1-t)^{s/2} C_{rs}` with `s` in `{0, 1}`.
#[derive(Clone, PartialEq, Eq)]
pub struct HalfPowerMatrixFunction {
    n: usize,
    terms: BTreeMap<(u32, u32), RationalMatrix>,
}

impl fmt::Debug for HalfPowerMatrixFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HalfPower(n={}, terms={:?})", self.n, self.terms.keys().collect::<Vec<_>>())
    }
}

impl HalfPowerMatrixFunction {
    pub fn zero(n: usize) -> Self {
        HalfPowerMatrixFunction { n, terms: BTreeMap::new() }
    }

    pub fn constant(c: RationalMatrix) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(RationalMatrix::identity(n))
    }

    /// `t^{r/2} (1-t)^{s/2} c`.
    pub fn monomial(r: u32, s: u32, c: RationalMatrix) -> Self {
        let mut f = Self::zero(c.dim());
        f.add_term(r, s, c);
        f
    }

    /// `t 1_n`.
    pub fn iota(n: usize) -> Self {
        Self::monomial(2, 0, RationalMatrix::identity(n))
    }

    pub fn iota_sqrt(n: usize) -> Self {
        Self::monomial(1, 0, RationalMatrix::identity(n))
    }

    pub fn one_minus_iota_sqrt(n: usize) -> Self {
        Self::monomial(0, 1, RationalMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<(u32, u32), RationalMatrix> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `t^{r/2}(1-t)^{s/2} c`, expanding `(1-t)^j` for `s = 2j + s0`.
    pub fn add_term(&mut self, r: u32, s: u32, c: RationalMatrix) {
        assert_eq!(c.dim(), self.n, "dimension mismatch");
        if c.is_zero() {
            return;
        }
        let (j, s0) = (s / 2, s % 2);
        for i in 0..=j {
            let mut coef = binom(j, i);
            if i % 2 == 1 {
                coef = -coef;
            }
            let term = c.scale_rational(&Rational::from_integer(coef));
            let key = (r + 2 * i, s0);
            let sum = match self.terms.remove(&key) {
                Some(old) => old.add(&term),
                None => term,
            };
            if !sum.is_zero() {
                self.terms.insert(key, sum);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (&(r, s), c) in &o.terms {
            out.add_term(r, s, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        HalfPowerMatrixFunction {
            n: self.n,
            terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (&(r1, s1), c1) in &self.terms {
            for (&(r2, s2), c2) in &o.terms {
                out.add_term(r1 + r2, s1 + s2, c1.mul(c2));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        HalfPowerMatrixFunction {
            n: self.n,
            terms: self.terms.iter().map(|(k, c)| (*k, c.adjoint())).collect(),
        }
    }

    pub fn scale(&self, z: &GaussianRational) -> Self {
        let mut out = Self::zero(self.n);
        for (&(r, s), c) in &self.terms {
            out.add_term(r, s, c.scale(z));
        }
        out
    }

    /// `f ⊗ m` in Kronecker order.
    pub fn kron(&self, m: &RationalMatrix) -> Self {
        let mut out = Self::zero(self.n * m.dim());
        for (&(r, s), c) in &self.terms {
            out.add_term(r, s, c.kron(m));
        }
        out
    }

    /// `m ⊗ f` in Kronecker order.
    pub fn kron_left(&self, m: &RationalMatrix) -> Self {
        let mut out = Self::zero(self.n * m.dim());
        for (&(r, s), c) in &self.terms {
            out.add_term(r, s, m.kron(c));
        }
        out
    }

    /// Exact value at `t = 0` or `t = 1`.
    pub fn value_at_endpoint(&self, endpoint: Endpoint) -> RationalMatrix {
        let mut out = RationalMatrix::zero(self.n);
        for (&(r, s), c) in &self.terms {
            let keep = match endpoint {
                Endpoint::Zero => r == 0,
                Endpoint::One => s == 0,
            };
            if keep {
                out = out.add(c);
            }
        }
        out
    }

    /// Enclosure of `f(t)` for every `t` in the interval, which must lie in `[0, 1]`.
    pub fn eval_interval(&self, t: &DyadicInterval, prec: u32) -> IntervalMatrix {
        let zero = DyadicInterval::zero();
        let one = DyadicInterval::one();
        let t = t.intersect(&zero.hull(&one)).unwrap_or(zero);
        let u = DyadicInterval::one().sub(&t);
        let st = t.sqrt(prec).expect("t >= 0");
        let su = u.sqrt(prec).expect("1 - t >= 0");
        let mut out = IntervalMatrix::zero(self.n);
        for (&(r, s), c) in &self.terms {
            let mut w = DyadicInterval::one();
            for _ in 0..r / 2 {
                w = w.mul(&t);
            }
            if r % 2 == 1 {
                w = w.mul(&st);
            }
            if s == 1 {
                w = w.mul(&su);
            }
            let w = w.round_out(prec);
            out = out.add(&IntervalMatrix::from_rational(c, prec).scale_real(&w, prec));
        }
        out
    }

    pub fn eval(&self, t: &Rational, prec: u32) -> IntervalMatrix {
        self.eval_interval(&DyadicInterval::from_rational(t, prec + 8), prec)
    }

    /// Hoelder modulus: each `t^{r/2}` and `(1-t)^{s/2}` is `1/2`-Hoelder with
    /// constant `max(1, r/2)` on `[0, 1]`; polynomials in `t` are Lipschitz.
    pub fn modulus(&self) -> Modulus {
        let half = self.terms.keys().any(|&(r, s)| r % 2 == 1 || s == 1);
        let mut l = Rational::zero();
        for (&(r, s), c) in &self.terms {
            let factor = |e: u32| -> Rational {
                if e == 0 {
                    Rational::zero()
                } else if half {
                    rat(e as i64, 2).max(Rational::one())
                } else {
                    rat(e as i64, 2)
                }
            };
            l += (factor(r) + factor(s)) * norm_upper_rational(c);
        }
        Modulus { lipschitz: l, alpha: if half { Holder::Half } else { Holder::One } }
    }

    /// The function restricted to the connected blocks of the union of the
    /// coefficient patterns, with identical blocks listed once.
    pub fn components(&self) -> Vec<HalfPowerMatrixFunction> {
        let mut pattern = RationalMatrix::zero(self.n);
        for c in self.terms.values() {
            for (&(i, j), _) in c.iter() {
                pattern.set(i, j, GaussianRational::one());
            }
        }
        let mut out: Vec<HalfPowerMatrixFunction> = Vec::new();
        for (rows, cols) in pattern.components() {
            let d = rows.len().max(cols.len());
            let mut g = Self::zero(d);
            for (&(r, s), c) in &self.terms {
                g.add_term(r, s, c.submatrix(&rows, &cols));
            }
            if !out.contains(&g) {
                out.push(g);
            }
        }
        out
    }

    /// Sup norm, computed blockwise over `components`.
    pub fn sup_norm(&self, k: u32, max_boxes: usize) -> Result<SupNorm> {
        let parts = self.components();
        if parts.is_empty() {
            return Ok(SupNorm { enclosure: DyadicInterval::zero(), boxes: 0 });
        }
        let mut best: Option<DyadicInterval> = None;
        let mut boxes = 0;
        for g in &parts {
            let s = sup_norm(g, k, max_boxes.saturating_sub(boxes).max(1))?;
            boxes += s.boxes;
            best = Some(match best {
                None => s.enclosure,
                Some(b) => b.max(&s.enclosure),
            });
        }
        Ok(SupNorm { enclosure: best.unwrap_or_else(DyadicInterval::zero), boxes })
    }
}

impl StarAlgebra for HalfPowerMatrixFunction {
    fn add(&self, o: &Self) -> Self {
        HalfPowerMatrixFunction::add(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        HalfPowerMatrixFunction::mul(self, o)
    }
    fn adjoint(&self) -> Self {
        HalfPowerMatrixFunction::adjoint(self)
    }
    fn scale(&self, z: &GaussianRational) -> Self {
        HalfPowerMatrixFunction::scale(self, z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Zero,
    One,
}

/// Anything that can be enclosed on subintervals of `[0, 1]`.
pub trait IntervalEvaluator {
    fn dim(&self) -> usize;
    fn eval_interval(&self, t: &DyadicInterval, prec: u32) -> IntervalMatrix;
}

impl IntervalEvaluator for HalfPowerMatrixFunction {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval_interval(&self, t: &DyadicInterval, prec: u32) -> IntervalMatrix {
        HalfPowerMatrixFunction::eval_interval(self, t, prec)
    }
}

type Evaluator = dyn Fn(&DyadicInterval, u32) -> IntervalMatrix + Send + Sync;

/// An interval evaluator together with a modulus of continuity.
#[derive(Clone)]
pub struct CertifiedFunction {
    n: usize,
    eval: Arc<Evaluator>,
    pub modulus: Modulus,
}

impl fmt::Debug for CertifiedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CertifiedFunction(n={}, {:?})", self.n, self.modulus)
    }
}

impl CertifiedFunction {
    pub fn new(
        n: usize,
        eval: impl Fn(&DyadicInterval, u32) -> IntervalMatrix + Send + Sync + 'static,
        modulus: Modulus,
    ) -> Self {
        CertifiedFunction { n, eval: Arc::new(eval), modulus }
    }

    pub fn from_half_power(f: &HalfPowerMatrixFunction) -> Self {
        let g = f.clone();
        Self::new(f.dim(), move |t, p| g.eval_interval(t, p), f.modulus())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: &Rational, prec: u32) -> IntervalMatrix {
        (self.eval)(&DyadicInterval::from_rational(t, prec + 8), prec)
    }

    pub fn sup_norm(&self, k: u32, max_boxes: usize) -> Result<SupNorm> {
        sup_norm(self, k, max_boxes)
    }
}

impl IntervalEvaluator for CertifiedFunction {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval_interval(&self, t: &DyadicInterval, prec: u32) -> IntervalMatrix {
        (self.eval)(t, prec)
    }
}

/// The three affine reparametrizations `t/2`, `1/2`, `(t+1)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reparam {
    Lower,
    Middle,
    Upper,
}

impl Reparam {
    pub fn apply(&self, t: &Rational) -> Rational {
        match self {
            Reparam::Lower => t / rat(2, 1),
            Reparam::Middle => rat(1, 2),
            Reparam::Upper => (t + Rational::one()) / rat(2, 1),
        }
    }

    pub fn apply_interval(&self, t: &DyadicInterval) -> DyadicInterval {
        match self {
            Reparam::Lower => t.shl(-1),
            Reparam::Middle => DyadicInterval::point(Dyadic::pow2(-1)),
            Reparam::Upper => t.add(&DyadicInterval::one()).shl(-1),
        }
    }
}

/// `f ∘ xi`; the modulus constant shrinks by `2^-alpha` (bounded by `3/4`
/// when `alpha = 1/2`) and vanishes for the constant map.
pub fn compose_reparam(f: &HalfPowerMatrixFunction, xi: Reparam) -> CertifiedFunction {
    let m = f.modulus();
    let modulus = match (xi, m.alpha) {
        (Reparam::Middle, a) => Modulus { lipschitz: Rational::zero(), alpha: a },
        (_, Holder::One) => Modulus { lipschitz: m.lipschitz / rat(2, 1), alpha: Holder::One },
        (_, Holder::Half) => Modulus { lipschitz: m.lipschitz * rat(3, 4), alpha: Holder::Half },
    };
    let g = f.clone();
    CertifiedFunction::new(f.dim(), move |t, p| g.eval_interval(&xi.apply_interval(t), p), modulus)
}

/// Certified upper bound on the distance from `f(0)` to `M_p ⊗ 1_q`, or from
/// `f(1)` to `1_p ⊗ M_q`.
pub fn boundary_distance(f: &HalfPowerMatrixFunction, endpoint: Endpoint, p: usize, q: usize, k: u32) -> Result<Dyadic> {
    if f.dim() != p * q {
        return Err(Error::InvalidInput(format!(
            "function of size {} is not in M_{p} ⊗ M_{q}",
            f.dim()
        )));
    }
    let v = f.value_at_endpoint(endpoint);
    let keep = match endpoint {
        Endpoint::Zero => Leg::Left,
        Endpoint::One => Leg::Right,
    };
    distance_to_leg(&v, p, q, keep, k)
}

/// Sup-norm enclosure and the number of boxes examined.
#[derive(Clone, Debug)]
pub struct SupNorm {
    pub enclosure: DyadicInterval,
    pub boxes: usize,
}

struct Node {
    upper: Dyadic,
    lo: Dyadic,
    hi: Dyadic,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.upper == o.upper
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.cmp(&o.upper)
    }
}

/// Best-first bisection of `[0, 1]`: upper bounds from interval enclosures on
/// boxes, lower bounds from point evaluations at box midpoints.
pub fn sup_norm<F: IntervalEvaluator + ?Sized>(f: &F, k: u32, max_boxes: usize) -> Result<SupNorm> {
    let prec = k + 24;
    let nk = k + 4;
    let tol = Dyadic::pow2(-(k as i64));
    let point_lower = |t: &Dyadic| -> Dyadic {
        let m = f.eval_interval(&DyadicInterval::point(t.clone()), prec);
        interval_matrix_norm(&m, nk).lo().clone()
    };
    let box_upper = |lo: &Dyadic, hi: &Dyadic| -> Dyadic {
        let m = f.eval_interval(&DyadicInterval::new(lo.clone(), hi.clone()), prec);
        interval_matrix_norm(&m, nk).hi().clone()
    };
    let mut best = point_lower(&Dyadic::zero()).max_with(&point_lower(&Dyadic::one()));
    let mut heap = BinaryHeap::new();
    heap.push(Node { upper: box_upper(&Dyadic::zero(), &Dyadic::one()), lo: Dyadic::zero(), hi: Dyadic::one() });
    let mut boxes = 1usize;
    loop {
        let node = heap.pop().expect("heap never empties");
        if node.upper.sub(&best) <= tol {
            let hi = node.upper.max_with(&best);
            return Ok(SupNorm { enclosure: DyadicInterval::new(best, hi), boxes });
        }
        if boxes >= max_boxes {
            return Err(Error::Budget(format!(
                "sup norm did not reach 2^-{k} within {max_boxes} boxes (gap {:e})",
                node.upper.sub(&best).to_f64()
            )));
        }
        let mid = node.lo.add(&node.hi).shl(-1);
        best = best.max_with(&point_lower(&mid));
        for (a, b) in [(node.lo.clone(), mid.clone()), (mid.clone(), node.hi.clone())] {
            let u = box_upper(&a, &b);
            boxes += 1;
            if u > best {
                heap.push(Node { upper: u, lo: a, hi: b });
            }
        }
        if heap.is_empty() {
            // every box is dominated by the best point value
            let hi = best.add(&Dyadic::pow2(-(nk as i64)));
            return Ok(SupNorm { enclosure: DyadicInterval::new(best, hi), boxes });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_of_even_powers() {
        // (1 - t) + t = 1
        let n = 1;
        let f = HalfPowerMatrixFunction::monomial(0, 2, RationalMatrix::identity(n))
            .add(&HalfPowerMatrixFunction::iota(n));
        assert_eq!(f, HalfPowerMatrixFunction::identity(n));
        let s = HalfPowerMatrixFunction::one_minus_iota_sqrt(1);
        let r = HalfPowerMatrixFunction::iota_sqrt(1);
        let sum = s.mul(&s).add(&r.mul(&r));
        assert_eq!(sum, HalfPowerMatrixFunction::identity(1));
    }

    #[test]
    fn endpoint_values() {
        let f = HalfPowerMatrixFunction::iota_sqrt(2)
            .add(&HalfPowerMatrixFunction::constant(RationalMatrix::unit(2, 0, 1)));
        assert_eq!(f.value_at_endpoint(Endpoint::Zero), RationalMatrix::unit(2, 0, 1));
        assert_eq!(
            f.value_at_endpoint(Endpoint::One),
            RationalMatrix::unit(2, 0, 1).add(&RationalMatrix::identity(2))
        );
    }

    #[test]
    fn sup_norm_of_bump() {
        // sqrt(t(1-t)) peaks at 1/2
        let f = HalfPowerMatrixFunction::iota_sqrt(1).mul(&HalfPowerMatrixFunction::one_minus_iota_sqrt(1));
        let s = f.sup_norm(12, 100_000).unwrap();
        assert!(s.enclosure.contains_rational(&rat(1, 2)));
        assert!(s.enclosure.width() <= Dyadic::pow2(-12));
    }

    #[test]
    fn reparam_modulus() {
        let f = HalfPowerMatrixFunction::iota(1);
        let g = compose_reparam(&f, Reparam::Lower);
        assert_eq!(g.modulus.lipschitz, rat(1, 2));
        let s = g.sup_norm(10, 10_000).unwrap();
        assert!(s.enclosure.contains_rational(&rat(1, 2)));
        let c = compose_reparam(&f, Reparam::Middle);
        assert!(c.modulus.lipschitz.is_zero());
    }

    #[test]
    fn boundary_distance_detects_leg() {
        let a = HalfPowerMatrixFunction::constant(RationalMatrix::unit(2, 0, 1).kron(&RationalMatrix::identity(3)));
        assert!(boundary_distance(&a, Endpoint::Zero, 2, 3, 20).unwrap().is_zero());
        assert!(boundary_distance(&a, Endpoint::One, 2, 3, 20).unwrap() > Dyadic::pow2(-2));
    }
}
