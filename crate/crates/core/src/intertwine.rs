//! Staged approximate intertwining for `phi = id ⊗ 1: A -> A ⊗ C`.
//!
//! Stage `n` looks for an `eps_n`-almost unitary `v_n` of norm at most 1 and
//! points `a_{j,n}` with
//!
//! ```text
//! |v_n* (W* b_j W) v_n - phi(a_{j,n})| < eta_n        j <= n
//! |v_n phi(a_{k,j}) - phi(a_{k,j}) v_n| < eta_n       earlier pullbacks
//! |v_n phi(a_j) - phi(a_j) v_n| < eta_n               j <= n
//! ```
//!
//! where `W = omega_k(v_1) ... omega_k(v_{n-1})`. Candidates come from a
//! supplier first and from the enumeration of codes after that. All
//! matrices are realized exactly at one common pair of stages.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::budget::Budget;
use crate::calculus::{omega_n, AlmostUnitary};
use crate::coding::{decode_poly, encode_poly, pair_usize, unpair_usize, Code};
use crate::descriptor::{parse_presentation, parse_tensor};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::matrix::tensor::{partial_trace_expectation, Leg};
use crate::matrix::{matrix_norm, RationalMatrix};
use crate::poly::{poly_apply, StarPoly, Word};
use crate::presentation::{Element, Presentation};
use crate::scalar::{pow2, GaussianRational, Rational};
use crate::uhf::{absorbing_swap, leg_count, leg_support};

pub type Stage = (usize, usize);


/// Smallest `c >= 0` with `x <= 2^c`.
fn ceil_log2(x: &Rational) -> u32 {
    let mut c = 0;
    while &pow2(c as i64) < x {
        c += 1;
    }
    c
}

fn matrix_of(e: Element) -> Result<RationalMatrix> {
    match e {
        Element::Matrix(m) => Ok(m),
        Element::Function(_) => Err(Error::InvalidInput(
            "the intertwining engine needs matrix backends at every stage".into(),
        )),
    }
}

type PointCache = Mutex<HashMap<(usize, usize), RationalMatrix>>;

/// `A`, `C` and `B = A ⊗ C` with `phi(a) = a ⊗ 1`.
pub struct Setting {
    pub a: Arc<dyn Presentation>,
    pub c: Arc<dyn Presentation>,
    unit_c: Vec<(usize, GaussianRational)>,
    cache_a: PointCache,
    cache_c: PointCache,
}

impl Setting {
    pub fn new(a: Arc<dyn Presentation>, c: Arc<dyn Presentation>) -> Result<Self> {
        let unit_c = c.unit_linear().ok_or_else(|| {
            Error::InvalidInput(format!("{}: the unit is not a combination of special points", c.descriptor()))
        })?;
        Ok(Setting { a, c, unit_c, cache_a: Mutex::default(), cache_c: Mutex::default() })
    }

    /// `A` and `B` descriptors with `phi = id-tensor-unit`; `B` must be
    /// `tensor(A,C)`.
    pub fn from_descriptors(a: &str, b: &str, phi: &str, budget: &Budget) -> Result<Self> {
        if phi != "id-tensor-unit" {
            return Err(Error::InvalidInput(format!("unknown map {phi:?}; only id-tensor-unit is built in")));
        }
        let a = parse_presentation(a, budget)?;
        let t = parse_tensor(b, budget)?;
        if t.left.descriptor() != a.descriptor() {
            return Err(Error::InvalidInput(format!(
                "id-tensor-unit needs B = tensor(A,C) with A = {}, got left leg {}",
                a.descriptor(),
                t.left.descriptor()
            )));
        }
        Setting::new(a, t.right)
    }

    pub fn descriptors(&self) -> (String, String) {
        (self.a.descriptor(), format!("tensor({},{})", self.a.descriptor(), self.c.descriptor()))
    }

    fn point(pres: &dyn Presentation, cache: &PointCache, g: usize, s: usize) -> Result<RationalMatrix> {
        if let Some(m) = cache.lock().expect("cache").get(&(g, s)) {
            return Ok(m.clone());
        }
        let m = matrix_of(pres.special_point_at(g, s)?)?;
        cache.lock().expect("cache").insert((g, s), m.clone());
        Ok(m)
    }

    fn unit(pres: &dyn Presentation, s: usize) -> Result<RationalMatrix> {
        matrix_of(pres.unit_at(s)?)
    }

    pub fn dims(&self, st: Stage) -> Result<(usize, usize)> {
        Ok((Self::unit(self.a.as_ref(), st.0)?.dim(), Self::unit(self.c.as_ref(), st.1)?.dim()))
    }

    pub fn stage_a(&self, p: &StarPoly) -> Result<usize> {
        p.generators().iter().try_fold(0, |s, &g| Ok(s.max(self.a.stage_of(g)?)))
    }

    pub fn stage_b(&self, p: &StarPoly) -> Result<Stage> {
        let mut st = (0, 0);
        for g in p.generators() {
            let (m, q) = unpair_usize(&g.into()).ok_or(Error::MissingGenerator(g))?;
            st = (st.0.max(self.a.stage_of(m)?), st.1.max(self.c.stage_of(q)?));
        }
        Ok(st)
    }

    pub fn realize_a(&self, p: &StarPoly, s1: usize) -> Result<RationalMatrix> {
        let mut values = HashMap::new();
        for g in p.generators() {
            values.insert(g, Self::point(self.a.as_ref(), &self.cache_a, g, s1)?);
        }
        poly_apply(p, &|g| values.get(&g).cloned(), &Self::unit(self.a.as_ref(), s1)?)
    }

    pub fn realize_b(&self, p: &StarPoly, st: Stage) -> Result<RationalMatrix> {
        let mut values = HashMap::new();
        for g in p.generators() {
            let (m, q) = unpair_usize(&g.into()).ok_or(Error::MissingGenerator(g))?;
            let x = Self::point(self.a.as_ref(), &self.cache_a, m, st.0)?;
            let y = Self::point(self.c.as_ref(), &self.cache_c, q, st.1)?;
            values.insert(g, x.kron(&y));
        }
        let one = Self::unit(self.a.as_ref(), st.0)?.kron(&Self::unit(self.c.as_ref(), st.1)?);
        poly_apply(p, &|g| values.get(&g).cloned(), &one)
    }

    /// `phi(p) = p ⊗ 1` as a point of `B`.
    pub fn phi(&self, p: &StarPoly) -> StarPoly {
        p.substitute(&|m| {
            let mut out = StarPoly::zero();
            for (q, z) in &self.unit_c {
                out.add_term(Word::letter(pair_usize(m, *q), false), z.clone());
            }
            Some(out)
        })
        .expect("total substitution")
    }

    fn unit_index(pres: &dyn Presentation, s: usize, i: usize, j: usize) -> Result<usize> {
        pres.matrix_unit(s, i, j).ok_or_else(|| {
            Error::InvalidInput(format!("{} has no matrix unit e_({i},{j}) at stage {s}", pres.descriptor()))
        })
    }

    /// The point `sum x_ij e_ij` of `A` at stage `s1`.
    pub fn a_point_of(&self, x: &RationalMatrix, s1: usize) -> Result<StarPoly> {
        let mut p = StarPoly::zero();
        for (&(i, j), z) in x.iter() {
            p.add_term(Word::letter(Self::unit_index(self.a.as_ref(), s1, i, j)?, false), z.clone());
        }
        Ok(p)
    }

    /// The point `sum x_(ik)(jl) e_ij ⊗ e_kl` of `B` at stages `st`.
    pub fn b_point_of(&self, x: &RationalMatrix, st: Stage) -> Result<StarPoly> {
        let (_, d2) = self.dims(st)?;
        let mut p = StarPoly::zero();
        for (&(r, c), z) in x.iter() {
            let g1 = Self::unit_index(self.a.as_ref(), st.0, r / d2, c / d2)?;
            let g2 = Self::unit_index(self.c.as_ref(), st.1, r % d2, c % d2)?;
            p.add_term(Word::letter(pair_usize(g1, g2), false), z.clone());
        }
        Ok(p)
    }
}

/// First `count` valid special points of `pres` with index below `limit`,
/// in index order; fewer when the presentation runs out.
pub fn special_points(pres: &dyn Presentation, count: usize, limit: usize) -> Vec<StarPoly> {
    let limit = pres.generator_count().map_or(limit, |c| c.min(limit));
    (0..limit)
        .filter(|&g| pres.special_point(g).is_ok())
        .take(count)
        .map(StarPoly::gen)
        .collect()
}

const SCAN_LIMIT: usize = 1 << 16;

/// `(eps_n, eta_n, k(n))` for the bound `B_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub n: usize,
    pub eps: Rational,
    pub eta: Rational,
    pub k: u32,
    pub bound: Rational,
}

/// `eta = 2^-(n+2)`, `eps = 2^-(n+3)/B`, `k = n + 3 + ceil log2 B + ceil log2 (n+1)`
/// with `B = max(1, bound)`; both stage inequalities, including the extra
/// `2^-(n+4)` for images under `phi`, are checked exactly.
pub fn make_schedule(n: usize, bound: &Rational) -> Result<Schedule> {
    if n == 0 {
        return Err(Error::InvalidInput("stages are numbered from 1".into()));
    }
    let b = if bound > &Rational::one() { bound.clone() } else { Rational::one() };
    let ni = n as i64;
    let eta = pow2(-(ni + 2));
    let eps = pow2(-(ni + 3)) / &b;
    let k = n as u32 + 3 + ceil_log2(&b) + ceil_log2(&Rational::from_integer(BigInt::from(n + 1)));
    let two = Rational::from_integer(BigInt::from(2));
    let extra = pow2(-(ni + 4));
    let lhs1 = (&two * &eps + pow2(1 - k as i64)) * &b + &eta + &extra;
    let lhs2 = &two * &eps * &b + &eta + &extra;
    if lhs1 > pow2(-ni) || lhs2 > pow2(-ni) {
        return Err(Error::Certification(format!("schedule inequalities fail at stage {n}")));
    }
    Ok(Schedule { n, eps, eta, k, bound: b })
}

/// Certified upper bounds for the three families at one stage.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Margins {
    /// `|v* X_j v - phi(a_{j,n})|`, `j = 1..=n`.
    pub conj: Vec<Dyadic>,
    /// `|[v, phi(a_{k,j})]|` over earlier pullbacks in stage order.
    pub prev: Vec<Dyadic>,
    /// `|[v, phi(a_j)]|`, `j = 1..=n`.
    pub comm: Vec<Dyadic>,
}

impl Margins {
    pub fn max(&self) -> Dyadic {
        self.conj.iter().chain(&self.prev).chain(&self.comm).fold(Dyadic::zero(), |m, x| m.max_with(x))
    }

    pub fn all_below(&self, eta: &Rational) -> bool {
        self.max().to_rational() < *eta
    }

    fn listing(&self) -> Vec<MarginEntry> {
        let mut out = Vec::new();
        for (family, xs) in [("conj", &self.conj), ("prev", &self.prev), ("comm", &self.comm)] {
            for (i, x) in xs.iter().enumerate() {
                out.push(MarginEntry { family, index: i + 1, bound: x.to_string() });
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginEntry {
    pub family: &'static str,
    pub index: usize,
    pub bound: String,
}

/// What a supplier sees at stage `n`, realized at `stage`.
pub struct StageContext<'a> {
    pub n: usize,
    pub stage: Stage,
    pub setting: &'a Setting,
    /// `W* b_j W`, to be conjugated into `phi(A)`.
    pub absorb: &'a [RationalMatrix],
    /// `phi(a_j)` and `phi(a_{k,j})`, to commute with.
    pub commute: &'a [RationalMatrix],
}

pub trait Supplier: Send + Sync {
    fn name(&self) -> &'static str;
    fn candidates(&self, ctx: &StageContext<'_>) -> Result<Vec<StarPoly>>;
}

/// Leg swaps in `M_{2^inf} ⊗ M_{2^inf}`: the second-copy legs touched by the
/// targets move onto the least first-copy legs no commutant point uses.
pub struct UhfLegs;

impl Supplier for UhfLegs {
    fn name(&self) -> &'static str {
        "uhf-legs"
    }

    fn candidates(&self, ctx: &StageContext<'_>) -> Result<Vec<StarPoly>> {
        let (a, c) = (ctx.setting.a.descriptor(), ctx.setting.c.descriptor());
        if a != "uhf:2^inf" || c != "uhf:2^inf" {
            return Err(Error::InvalidInput(format!("uhf-legs needs A = C = uhf:2^inf, got {a} and {c}")));
        }
        let (s1, s2) = ctx.stage;
        let (d1, d2) = ctx.setting.dims(ctx.stage)?;
        if leg_count(d1) != Some(s1) || leg_count(d2) != Some(s2) {
            return Err(Error::InvalidInput("stage dimensions are not 2^stage".into()));
        }
        let mut fixed = BTreeSet::new();
        let mut movers = BTreeSet::new();
        for x in ctx.commute.iter().chain(ctx.absorb) {
            for l in leg_support(x)? {
                if l < s1 {
                    fixed.insert(l);
                }
            }
        }
        for x in ctx.absorb {
            for l in leg_support(x)? {
                if l >= s1 {
                    movers.insert(l - s1);
                }
            }
        }
        if movers.is_empty() {
            return Ok(vec![StarPoly::unit()]);
        }
        let (t1, w) = absorbing_swap(s1, s2, &fixed, &movers)?;
        Ok(vec![ctx.setting.b_point_of(&w.matrix(), (t1, s2))?])
    }
}

/// Offers only the unit.
pub struct IdentitySupplier;

impl Supplier for IdentitySupplier {
    fn name(&self) -> &'static str {
        "identity"
    }
    fn candidates(&self, _ctx: &StageContext<'_>) -> Result<Vec<StarPoly>> {
        Ok(vec![StarPoly::unit()])
    }
}

/// No suggestions: plain enumeration.
pub struct Enumerate;

impl Supplier for Enumerate {
    fn name(&self) -> &'static str {
        "enumerate"
    }
    fn candidates(&self, _ctx: &StageContext<'_>) -> Result<Vec<StarPoly>> {
        Ok(Vec::new())
    }
}

pub fn supplier_by_name(name: &str) -> Result<Box<dyn Supplier>> {
    match name {
        "uhf-legs" => Ok(Box::new(UhfLegs)),
        "identity" => Ok(Box::new(IdentitySupplier)),
        "enumerate" => Ok(Box::new(Enumerate)),
        other => Err(Error::InvalidInput(format!("unknown supplier {other:?}"))),
    }
}

/// One accepted stage.
#[derive(Clone, Debug)]
pub struct StageRecord {
    pub schedule: Schedule,
    /// The accepted `v_n`, already scaled to norm at most 1.
    pub v: StarPoly,
    pub scaled: bool,
    /// `a_{j,n}` for `j = 1..=n`.
    pub a: Vec<StarPoly>,
    pub margins: Margins,
    pub stage: Stage,
    pub from_supplier: bool,
    pub candidates: u64,
    pub wall_time: f64,
}

#[derive(Debug)]
pub enum StepError {
    /// No candidate passed within the enumeration budget.
    Exhausted { n: usize, tried: u64, best: Option<Margins> },
    Failed(Error),
}

impl From<Error> for StepError {
    fn from(e: Error) -> Self {
        StepError::Failed(e)
    }
}

impl From<StepError> for Error {
    fn from(e: StepError) -> Self {
        match e {
            StepError::Failed(e) => e,
            StepError::Exhausted { n, tried, best } => Error::Budget(format!(
                "stage {n}: no candidate among {tried} passed; best margins {}",
                best.map_or("none".into(), |m| {
                    m.listing().iter().map(|e| format!("{}[{}]={}", e.family, e.index, e.bound)).collect::<Vec<_>>().join(", ")
                })
            )),
        }
    }
}

/// Matrices for one stage realized at common stages.
struct Realized {
    st: Stage,
    d: (usize, usize),
    absorb: Vec<RationalMatrix>,
    phi_a: Vec<RationalMatrix>,
    phi_prev: Vec<RationalMatrix>,
}

pub struct IntertwiningState {
    pub setting: Setting,
    supplier: Box<dyn Supplier>,
    budget: Budget,
    /// Precision of the certified norms.
    pub prec: u32,
    a_list: Vec<StarPoly>,
    b_list: Vec<StarPoly>,
    explicit_a: bool,
    explicit_b: bool,
    records: Vec<StageRecord>,
}

impl IntertwiningState {
    pub fn new(setting: Setting, supplier: Box<dyn Supplier>, budget: Budget, prec: u32) -> Self {
        IntertwiningState {
            setting,
            supplier,
            budget,
            prec,
            a_list: Vec::new(),
            b_list: Vec::new(),
            explicit_a: false,
            explicit_b: false,
            records: Vec::new(),
        }
    }

    /// Fixed lists instead of the special-point enumerations; stage `n`
    /// uses the first `min(n, len)` entries.
    pub fn with_points(mut self, a: Option<Vec<StarPoly>>, b: Option<Vec<StarPoly>>) -> Self {
        if let Some(a) = a {
            self.a_list = a;
            self.explicit_a = true;
        }
        if let Some(b) = b {
            self.b_list = b;
            self.explicit_b = true;
        }
        self
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    pub fn supplier_name(&self) -> &'static str {
        self.supplier.name()
    }

    fn points(&mut self, n: usize) -> Result<(Vec<StarPoly>, Vec<StarPoly>)> {
        if !self.explicit_a && self.a_list.len() < n {
            self.a_list = special_points(self.setting.a.as_ref(), n, SCAN_LIMIT);
        }
        if !self.explicit_b && self.b_list.len() < n {
            let b = crate::presentation::tensor_presentation(self.setting.a.clone(), self.setting.c.clone())?;
            let limit = match (self.setting.a.generator_count(), self.setting.c.generator_count()) {
                (Some(x), Some(y)) => pair_usize(x, y),
                _ => SCAN_LIMIT,
            };
            self.b_list = special_points(&b, n, limit);
        }
        let take = |v: &Vec<StarPoly>| v.iter().take(n).cloned().collect::<Vec<_>>();
        Ok((take(&self.a_list), take(&self.b_list)))
    }

    fn norm_a(&self, p: &StarPoly) -> Result<Rational> {
        Ok(self.setting.a.norm(p, 20)?.hi().to_rational())
    }

    fn norm_b(&self, p: &StarPoly) -> Result<Rational> {
        let st = self.setting.stage_b(p)?;
        Ok(matrix_norm(&self.setting.realize_b(p, st)?, 20).hi().to_rational())
    }

    fn check_dim(&self, st: Stage) -> Result<(usize, usize)> {
        let d = self.setting.dims(st)?;
        if d.0 * d.1 > self.budget.max_matrix_dim {
            return Err(Error::Infeasible(format!(
                "stages {st:?} need dimension {} > {}",
                d.0 * d.1,
                self.budget.max_matrix_dim
            )));
        }
        Ok(d)
    }

    /// `omega_p` of the accepted `v_i` at `st`, with the certified error.
    fn omega_at(&self, i: usize, st: Stage, p: u32) -> Result<(RationalMatrix, Rational)> {
        let r = &self.records[i];
        let au = AlmostUnitary::certify(self.setting.realize_b(&r.v, st)?, r.schedule.eps.clone())?;
        let om = omega_n(&au, p)?;
        Ok((om.point, om.error_bound))
    }

    /// `omega_p(v_1) ... omega_p(v_n)` and `delta` with
    /// `|v_1...v_n - product| <= delta`.
    fn product_at(&self, n: usize, st: Stage, p: u32) -> Result<(RationalMatrix, Rational)> {
        let (d1, d2) = self.setting.dims(st)?;
        let mut u = RationalMatrix::identity(d1 * d2);
        let mut grow = Rational::one();
        for i in 0..n {
            let (w, e) = self.omega_at(i, st, p)?;
            u = u.mul(&w);
            grow *= Rational::one() + e;
        }
        Ok((u, grow - Rational::one()))
    }

    fn stage_of_records(&self, upto: usize) -> Result<Stage> {
        let mut st = (0, 0);
        for r in &self.records[..upto] {
            let s = self.setting.stage_b(&r.v)?;
            st = (st.0.max(s.0), st.1.max(s.1));
        }
        Ok(st)
    }

    fn realize(&self, st: Stage, k: u32, a: &[StarPoly], b: &[StarPoly]) -> Result<Realized> {
        let d = self.check_dim(st)?;
        let (w, _) = self.product_at(self.records.len(), st, k)?;
        let wa = w.adjoint();
        let mut absorb = Vec::new();
        for bj in b {
            absorb.push(wa.mul(&self.setting.realize_b(bj, st)?).mul(&w));
        }
        let phi_a = a
            .iter()
            .map(|x| self.setting.realize_b(&self.setting.phi(x), st))
            .collect::<Result<Vec<_>>>()?;
        let mut phi_prev = Vec::new();
        for r in &self.records {
            for x in &r.a {
                phi_prev.push(self.setting.realize_b(&self.setting.phi(x), st)?);
            }
        }
        Ok(Realized { st, d, absorb, phi_a, phi_prev })
    }

    /// `Ok(Some(..))` on acceptance, `Ok(None)` with margins on rejection.
    #[allow(clippy::type_complexity)]
    fn try_candidate(
        &self,
        v: &StarPoly,
        sch: &Schedule,
        re: &Realized,
    ) -> Result<(Option<(StarPoly, bool, Vec<StarPoly>)>, Option<Margins>)> {
        let k = self.prec;
        let mut vm = self.setting.realize_b(v, re.st)?;
        let mut vp = v.clone();
        let mut scaled = false;
        let nu = matrix_norm(&vm, 30).hi().to_rational();
        if nu > Rational::one() + pow2(-30) {
            let s = Rational::one() / (Rational::one() + &sch.eps);
            if nu * &s > Rational::one() + pow2(-30) {
                return Ok((None, None));
            }
            vm = vm.scale_rational(&s);
            vp = vp.scale_rational(&s);
            scaled = true;
        }
        if AlmostUnitary::certify(vm.clone(), sch.eps.clone()).is_err() {
            return Ok((None, None));
        }
        let va = vm.adjoint();
        let (d1, d2) = re.d;
        let id2 = RationalMatrix::identity(d2);
        let mut m = Margins::default();
        let mut pulled = Vec::new();
        for x in &re.absorb {
            let y = va.mul(x).mul(&vm);
            let e = partial_trace_expectation(&y, d1, d2, Leg::Left)?;
            m.conj.push(matrix_norm(&y.sub(&e.kron(&id2)), k).hi().clone());
            pulled.push(self.setting.a_point_of(&e, re.st.0)?);
        }
        let comm = |p: &RationalMatrix| matrix_norm(&vm.mul(p).sub(&p.mul(&vm)), k).hi().clone();
        m.prev = re.phi_prev.iter().map(comm).collect();
        m.comm = re.phi_a.iter().map(comm).collect();
        if m.all_below(&sch.eta) {
            Ok((Some((vp, scaled, pulled)), Some(m)))
        } else {
            Ok((None, Some(m)))
        }
    }

    /// Runs stage `n = records + 1`.
    pub fn stage_step(&mut self) -> std::result::Result<&StageRecord, StepError> {
        let start = Instant::now();
        let n = self.records.len() + 1;
        let (a, b) = self.points(n)?;
        let mut bound = Rational::one();
        for x in &a {
            bound = bound.max(self.norm_a(x)?);
        }
        for x in &b {
            bound = bound.max(self.norm_b(x)?);
        }
        for r in &self.records {
            for x in &r.a {
                bound = bound.max(self.norm_a(x)?);
            }
        }
        let sch = make_schedule(n, &bound)?;
        let mut st0 = self.stage_of_records(self.records.len())?;
        for x in &a {
            st0.0 = st0.0.max(self.setting.stage_a(x)?);
        }
        for r in &self.records {
            for x in &r.a {
                st0.0 = st0.0.max(self.setting.stage_a(x)?);
            }
        }
        for x in &b {
            let s = self.setting.stage_b(x)?;
            st0 = (st0.0.max(s.0), st0.1.max(s.1));
        }
        let base = self.realize(st0, sch.k, &a, &b)?;
        let mut commute = base.phi_a.clone();
        commute.extend(base.phi_prev.iter().cloned());
        let ctx = StageContext { n, stage: st0, setting: &self.setting, absorb: &base.absorb, commute: &commute };
        let suggested = self.supplier.candidates(&ctx)?;

        let mut best: Option<Margins> = None;
        let mut tried = 0u64;
        let mut keep_best = |m: Option<Margins>| {
            if let Some(m) = m {
                if best.as_ref().is_none_or(|b| m.max() < b.max()) {
                    best = Some(m);
                }
            }
        };
        let suggested_len = suggested.len();
        let enumerated = (0..self.budget.enumeration_steps).map(|c| decode_poly(&Code::from(c)));
        for (i, v) in suggested.into_iter().chain(enumerated).enumerate() {
            if i >= suggested_len && v.is_zero() {
                continue;
            }
            tried += 1;
            let Ok(sv) = self.setting.stage_b(&v) else { continue };
            let st = (st0.0.max(sv.0), st0.1.max(sv.1));
            let re = if st == st0 {
                None
            } else {
                match self.realize(st, sch.k, &a, &b) {
                    Ok(r) => Some(r),
                    Err(e) if i < suggested_len => return Err(e.into()),
                    Err(_) => continue,
                }
            };
            let re = re.as_ref().unwrap_or(&base);
            let outcome = match self.try_candidate(&v, &sch, re) {
                Ok(o) => o,
                Err(e) if i < suggested_len => return Err(e.into()),
                Err(_) => continue,
            };
            match outcome {
                (Some((vp, scaled, pulled)), m) => {
                    let rec = StageRecord {
                        schedule: sch,
                        v: vp,
                        scaled,
                        a: pulled,
                        margins: m.expect("accepted with margins"),
                        stage: re.st,
                        from_supplier: i < suggested_len,
                        candidates: tried,
                        wall_time: start.elapsed().as_secs_f64(),
                    };
                    self.records.push(rec);
                    return Ok(self.records.last().expect("just pushed"));
                }
                (None, m) => keep_best(m),
            }
        }
        Err(StepError::Exhausted { n, tried, best })
    }

    /// Runs stages until `n` are complete.
    pub fn ensure_stages(&mut self, n: usize) -> Result<()> {
        while self.records.len() < n {
            self.stage_step()?;
        }
        Ok(())
    }

    pub fn iso(&self) -> IsomorphismApprox<'_> {
        IsomorphismApprox { state: self }
    }

    pub fn transcript(&self, timings: bool) -> Vec<StageTranscript> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| StageTranscript {
                n: i + 1,
                eps: r.schedule.eps.to_string(),
                eta: r.schedule.eta.to_string(),
                k: r.schedule.k,
                bound: r.schedule.bound.to_string(),
                stage: r.stage,
                margins: r.margins.listing(),
                max_margin: r.margins.max().to_string(),
                v_code: encode_poly(&r.v).to_string(),
                v_scaled: r.scaled,
                a_codes: r.a.iter().map(|p| encode_poly(p).to_string()).collect(),
                source: if r.from_supplier { self.supplier.name() } else { "enumeration" },
                candidates: r.candidates,
                wall_time: timings.then(|| format!("{:.6}", r.wall_time)),
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTranscript {
    pub n: usize,
    pub eps: String,
    pub eta: String,
    pub k: u32,
    pub bound: String,
    pub stage: Stage,
    pub margins: Vec<MarginEntry>,
    pub max_margin: String,
    pub v_code: String,
    pub v_scaled: bool,
    pub a_codes: Vec<String>,
    pub source: &'static str,
    pub candidates: u64,
    /// Seconds; only with timings enabled, so transcripts stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<String>,
}

/// A point of `B` approximating `psi(a)`.
#[derive(Clone, Debug)]
pub struct PsiApprox {
    pub point: StarPoly,
    pub matrix: RationalMatrix,
    pub stage: Stage,
    pub p: u32,
}

impl PsiApprox {
    pub fn code(&self) -> Code {
        encode_poly(&self.point)
    }
}

/// `verify_cau` result: `|v_1...v_n phi(a) (v_1...v_n)* - psi(a)| <= bound < 2^-m`.
#[derive(Clone, Debug, Serialize)]
pub struct CauCertificate {
    pub m: u32,
    pub n: usize,
    pub bound: String,
}

/// The limit map `psi = lim w_n` with `w_n(a) = v_1...v_n phi(a) v_n*...v_1*`.
pub struct IsomorphismApprox<'a> {
    state: &'a IntertwiningState,
}

impl IsomorphismApprox<'_> {
    fn need(&self, stages: usize) -> Result<()> {
        let have = self.state.records.len();
        if have < stages {
            return Err(Error::Infeasible(format!("needs stages through {stages}, only {have} completed")));
        }
        Ok(())
    }

    fn common(&self, n: usize, a: &StarPoly) -> Result<Stage> {
        let mut st = self.state.stage_of_records(n)?;
        st.0 = st.0.max(self.state.setting.stage_a(a)?);
        Ok(st)
    }

    /// `(product, delta)` for `w_n` at `st`, see `product_at`.
    pub fn witness(&self, n: usize, p: u32, st: Stage) -> Result<(RationalMatrix, Rational)> {
        self.need(n)?;
        self.state.product_at(n, st, p)
    }

    fn conjugate(&self, n: usize, a: &StarPoly, p: u32, st: Stage) -> Result<(RationalMatrix, Rational)> {
        let (u, delta) = self.witness(n, p, st)?;
        let x = self.state.setting.realize_b(&self.state.setting.phi(a), st)?;
        let na = self.state.norm_a(a)?;
        // |VxV* - UxU*| <= delta (2 + delta) |x| for unitary V, |U - V| <= delta
        let err = &delta * (Rational::from_integer(2.into()) + &delta) * na;
        Ok((u.mul(&x).mul(&u.adjoint()), err))
    }

    /// `omega_p(v_1)...omega_p(v_{m+1}) phi(a) (...)*` with
    /// `2^(p-m) > (m+1)|a|`; within `2^-m` of `psi(a)`.
    pub fn psi_approx(&self, a: &StarPoly, m: u32) -> Result<PsiApprox> {
        let stages = m as usize + 1;
        self.need(stages)?;
        let target = Rational::from_integer(BigInt::from(m + 1)) * self.state.norm_a(a)?;
        let mut p = 1u32;
        while pow2(p as i64 - m as i64) <= target {
            p += 1;
        }
        let st = self.common(stages, a)?;
        let (x, _) = self.conjugate(stages, a, p, st)?;
        Ok(PsiApprox { point: self.state.setting.b_point_of(&x, st)?, matrix: x, stage: st, p })
    }

    /// Least `n` with `|w_n(a) - psi(a)| < 2^-m`, certified against the
    /// approximant at precision `m + 2`; needs stages through `m + 3`.
    pub fn verify_cau(&self, a: &StarPoly, m: u32) -> Result<CauCertificate> {
        let psi = self.psi_approx(a, m + 2)?;
        let na = self.state.norm_a(a)?;
        let p = m + 8 + ceil_log2(&na) + ceil_log2(&Rational::from_integer(BigInt::from(self.state.records.len() + 1)));
        let tol = pow2(-(m as i64));
        let slack = pow2(-(m as i64 + 2));
        for n in 1..=self.state.records.len() {
            let mut st = self.common(n, a)?;
            st = (st.0.max(psi.stage.0), st.1.max(psi.stage.1));
            let (x, err) = self.conjugate(n, a, p, st)?;
            let y = if st == psi.stage {
                psi.matrix.clone()
            } else {
                self.state.setting.realize_b(&psi.point, st)?
            };
            let d = matrix_norm(&x.sub(&y), self.state.prec).hi().to_rational() + err + &slack;
            if d < tol {
                return Ok(CauCertificate { m, n, bound: d.to_string() });
            }
        }
        Err(Error::Certification(format!("no completed stage certifies |w_n(a) - psi(a)| < 2^-{m}")))
    }

    /// Certified upper bounds on `|w_n(a) - w_{n+1}(a)|` for `n = 1..N-1`.
    pub fn cauchy_differences(&self, a: &StarPoly) -> Result<Vec<Rational>> {
        let total = self.state.records.len();
        let mut out = Vec::new();
        for n in 1..total {
            let st = self.common(n + 1, a)?;
            let p = n as u32 + 8 + ceil_log2(&self.state.norm_a(a)?);
            let (x, e1) = self.conjugate(n, a, p, st)?;
            let (y, e2) = self.conjugate(n + 1, a, p, st)?;
            out.push(matrix_norm(&x.sub(&y), self.state.prec).hi().to_rational() + e1 + e2);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::MatrixPresentation;
    use crate::scalar::rat;

    fn matrix(n: usize) -> Arc<dyn Presentation> {
        Arc::new(MatrixPresentation::new(n, Budget::default()))
    }

    #[test]
    fn schedule_values() {
        let s = make_schedule(1, &rat(1, 2)).unwrap();
        assert_eq!((s.eta.clone(), s.eps.clone(), s.k), (rat(1, 8), rat(1, 16), 5));
        let s2 = make_schedule(2, &rat(1, 1)).unwrap();
        let lhs = (rat(2, 1) * &s2.eps + pow2(1 - s2.k as i64)) + &s2.eta;
        assert!(lhs <= rat(1, 4));
        let s3 = make_schedule(3, &rat(5, 1)).unwrap();
        assert!(s3.eps < make_schedule(2, &rat(5, 1)).unwrap().eps);
        assert_eq!(s3.k, 3 + 3 + 3 + 2);
    }

    #[test]
    fn scalars_accept_the_unit() {
        let setting = Setting::new(matrix(1), matrix(1)).unwrap();
        let mut st = IntertwiningState::new(setting, Box::new(IdentitySupplier), Budget::default(), 20);
        st.ensure_stages(3).unwrap();
        for r in st.records() {
            assert_eq!(r.v, StarPoly::unit());
            assert!(r.from_supplier);
        }
        let psi = st.iso().psi_approx(&StarPoly::gen(0), 2).unwrap();
        assert_eq!(psi.matrix, RationalMatrix::identity(1));
    }

    #[test]
    fn identity_supplier_cannot_absorb_e12() {
        let budget = Budget { enumeration_steps: 40, ..Budget::default() };
        let setting = Setting::new(matrix(1), matrix(2)).unwrap();
        let e12 = StarPoly::gen(pair_usize(0, 1));
        let mut st = IntertwiningState::new(setting, Box::new(IdentitySupplier), budget, 20)
            .with_points(None, Some(vec![e12]));
        match st.stage_step() {
            Err(StepError::Exhausted { best: Some(m), tried, .. }) => {
                assert!(tried >= 1);
                assert!(!m.max().is_zero());
                assert!(m.max().to_rational() >= rat(1, 2));
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }
}
