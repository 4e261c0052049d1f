//! Presentations: special points, certified norm oracles, tensor products and
//! inductive limits, plus the connecting-map search `b(m, n, k)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::budget::Budget;
use crate::coding::{decode_poly, encode_poly, pair_usize, unpair_usize, Code};
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::function::HalfPowerMatrixFunction;
use crate::matrix::{matrix_norm, RationalMatrix};
use crate::poly::{poly_apply, StarAlgebra, StarPoly};
use crate::scalar::GaussianRational;

/// A concrete element of one of the backends.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Matrix(RationalMatrix),
    Function(HalfPowerMatrixFunction),
}

impl Element {
    pub fn dim(&self) -> usize {
        match self {
            Element::Matrix(m) => m.dim(),
            Element::Function(f) => f.dim(),
        }
    }

    pub fn as_function(&self) -> HalfPowerMatrixFunction {
        match self {
            Element::Matrix(m) => HalfPowerMatrixFunction::constant(m.clone()),
            Element::Function(f) => f.clone(),
        }
    }

    pub fn kron(&self, o: &Element) -> Result<Element> {
        Ok(match (self, o) {
            (Element::Matrix(a), Element::Matrix(b)) => Element::Matrix(a.kron(b)),
            (Element::Function(f), Element::Matrix(b)) => Element::Function(f.kron(b)),
            (Element::Matrix(a), Element::Function(g)) => Element::Function(g.kron_left(a)),
            (Element::Function(_), Element::Function(_)) => {
                return Err(Error::InvalidInput(
                    "no tensor backend for two function algebras".into(),
                ))
            }
        })
    }

    fn binary(
        &self,
        o: &Element,
        fm: impl Fn(&RationalMatrix, &RationalMatrix) -> RationalMatrix,
        ff: impl Fn(&HalfPowerMatrixFunction, &HalfPowerMatrixFunction) -> HalfPowerMatrixFunction,
    ) -> Element {
        match (self, o) {
            (Element::Matrix(a), Element::Matrix(b)) => Element::Matrix(fm(a, b)),
            _ => Element::Function(ff(&self.as_function(), &o.as_function())),
        }
    }

    /// Certified norm, width at most `2^-k`.
    pub fn norm(&self, k: u32, budget: &Budget) -> Result<DyadicInterval> {
        match self {
            Element::Matrix(m) => Ok(matrix_norm(m, k)),
            Element::Function(f) => Ok(f.sup_norm(k, budget.sup_norm_boxes)?.enclosure),
        }
    }
}

impl StarAlgebra for Element {
    fn add(&self, o: &Self) -> Self {
        self.binary(o, |a, b| a.add(b), |a, b| a.add(b))
    }
    fn mul(&self, o: &Self) -> Self {
        self.binary(o, |a, b| a.mul(b), |a, b| a.mul(b))
    }
    fn adjoint(&self) -> Self {
        match self {
            Element::Matrix(m) => Element::Matrix(m.adjoint()),
            Element::Function(f) => Element::Function(f.adjoint()),
        }
    }
    fn scale(&self, z: &GaussianRational) -> Self {
        match self {
            Element::Matrix(m) => Element::Matrix(m.scale(z)),
            Element::Function(f) => Element::Function(f.scale(z)),
        }
    }
}

/// A presentation: an enumeration of special points with a norm oracle.
///
/// Special points of inductive limits live at stages; `evaluate` pushes all
/// generators of a point to the largest stage that occurs in it.
pub trait Presentation: Send + Sync {
    fn descriptor(&self) -> String;

    fn budget(&self) -> &Budget;

    /// Number of special points, when finite.
    fn generator_count(&self) -> Option<usize>;

    /// Stage at which special point `n` lives (0 for single algebras).
    fn stage_of(&self, _n: usize) -> Result<usize> {
        Ok(0)
    }

    /// Special point `n` realized at `stage >= stage_of(n)`.
    fn special_point_at(&self, n: usize, stage: usize) -> Result<Element>;

    /// Identity realized at `stage`.
    fn unit_at(&self, stage: usize) -> Result<Element>;

    fn special_point(&self, n: usize) -> Result<Element> {
        self.special_point_at(n, self.stage_of(n)?)
    }

    /// `1` as a linear combination of special points, when it is one.
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>>;

    fn evaluate(&self, p: &StarPoly) -> Result<Element> {
        let gens = p.generators();
        let mut stage = 0;
        for &g in &gens {
            stage = stage.max(self.stage_of(g)?);
        }
        let mut values = HashMap::new();
        for &g in &gens {
            values.insert(g, self.special_point_at(g, stage)?);
        }
        poly_apply(p, &|i| values.get(&i).cloned(), &self.unit_at(stage)?)
    }

    /// Enclosure of `|p|` with width at most `2^-k`.
    fn norm(&self, p: &StarPoly, k: u32) -> Result<DyadicInterval> {
        self.evaluate(p)?.norm(k, self.budget())
    }

    /// Upper bound on the norm of special point `n`.
    fn generator_bound(&self, n: usize) -> Result<Dyadic> {
        Ok(self.norm(&StarPoly::gen(n), 8)?.hi().clone())
    }

    /// Every presentation here is unital and the empty word is the unit.
    fn unit_code(&self) -> Option<Code> {
        Some(encode_poly(&StarPoly::unit()))
    }

    /// Index of the special point that is the matrix unit `e_ij` at `stage`,
    /// for matrix backends.
    fn matrix_unit(&self, _stage: usize, _i: usize, _j: usize) -> Option<usize> {
        None
    }
}

/// `certified_norm(P, c, k)`: the norm oracle on codes.
pub fn certified_norm(p: &dyn Presentation, c: &Code, k: u32) -> Result<DyadicInterval> {
    p.norm(&decode_poly(c), k)
}

fn check_generator(n: usize, count: usize) -> Result<()> {
    if n >= count {
        Err(Error::MissingGenerator(n))
    } else {
        Ok(())
    }
}

/// `M_n` with the row-major matrix units: special point `i*n + j` is `e_{i+1,j+1}`.
#[derive(Clone, Debug)]
pub struct MatrixPresentation {
    pub n: usize,
    pub budget: Budget,
}

impl MatrixPresentation {
    pub fn new(n: usize, budget: Budget) -> Self {
        MatrixPresentation { n, budget }
    }
}

impl Presentation for MatrixPresentation {
    fn descriptor(&self) -> String {
        format!("matrix:{}", self.n)
    }
    fn budget(&self) -> &Budget {
        &self.budget
    }
    fn generator_count(&self) -> Option<usize> {
        Some(self.n * self.n)
    }
    fn special_point_at(&self, g: usize, _stage: usize) -> Result<Element> {
        check_generator(g, self.n * self.n)?;
        Ok(Element::Matrix(RationalMatrix::unit(self.n, g / self.n, g % self.n)))
    }
    fn unit_at(&self, _stage: usize) -> Result<Element> {
        Ok(Element::Matrix(RationalMatrix::identity(self.n)))
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        Some((0..self.n).map(|i| (i * self.n + i, GaussianRational::one())).collect())
    }
    fn generator_bound(&self, g: usize) -> Result<Dyadic> {
        check_generator(g, self.n * self.n)?;
        Ok(Dyadic::one())
    }
    fn matrix_unit(&self, _stage: usize, i: usize, j: usize) -> Option<usize> {
        (i < self.n && j < self.n).then_some(i * self.n + j)
    }
}

/// `C([0,1], M_n)`: special points `0 = iota`, `1 = iota^{1/2}`,
/// `2 = (1-iota)^{1/2}` (times `1_n`), then constants `3 + i*n + j = e_{i+1,j+1}`.
#[derive(Clone, Debug)]
pub struct FunctionPresentation {
    pub n: usize,
    pub budget: Budget,
}

impl FunctionPresentation {
    pub fn new(n: usize, budget: Budget) -> Self {
        FunctionPresentation { n, budget }
    }
}

impl Presentation for FunctionPresentation {
    fn descriptor(&self) -> String {
        format!("fn:{}", self.n)
    }
    fn budget(&self) -> &Budget {
        &self.budget
    }
    fn generator_count(&self) -> Option<usize> {
        Some(3 + self.n * self.n)
    }
    fn special_point_at(&self, g: usize, _stage: usize) -> Result<Element> {
        check_generator(g, 3 + self.n * self.n)?;
        let n = self.n;
        Ok(Element::Function(match g {
            0 => HalfPowerMatrixFunction::iota(n),
            1 => HalfPowerMatrixFunction::iota_sqrt(n),
            2 => HalfPowerMatrixFunction::one_minus_iota_sqrt(n),
            _ => HalfPowerMatrixFunction::constant(RationalMatrix::unit(n, (g - 3) / n, (g - 3) % n)),
        }))
    }
    fn unit_at(&self, _stage: usize) -> Result<Element> {
        Ok(Element::Function(HalfPowerMatrixFunction::identity(self.n)))
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        Some((0..self.n).map(|i| (3 + i * self.n + i, GaussianRational::one())).collect())
    }
    fn generator_bound(&self, g: usize) -> Result<Dyadic> {
        check_generator(g, 3 + self.n * self.n)?;
        Ok(Dyadic::one())
    }
}

/// Tensor product: special point `pair(m, p)` is `a_m ⊗ b_p`.
#[derive(Clone)]
pub struct TensorPresentation {
    pub left: Arc<dyn Presentation>,
    pub right: Arc<dyn Presentation>,
}

pub fn tensor_presentation(left: Arc<dyn Presentation>, right: Arc<dyn Presentation>) -> Result<TensorPresentation> {
    // function ⊗ function has no backend; detect it on the units
    left.unit_at(0)?.kron(&right.unit_at(0)?)?;
    Ok(TensorPresentation { left, right })
}

impl TensorPresentation {
    fn split(&self, n: usize) -> Result<(usize, usize)> {
        unpair_usize(&n.into()).ok_or(Error::MissingGenerator(n))
    }

    /// Stages for the two legs needed by the generators of `p`.
    fn stages(&self, p: &StarPoly) -> Result<(usize, usize)> {
        let (mut sl, mut sr) = (0, 0);
        for g in p.generators() {
            let (m, q) = self.split(g)?;
            sl = sl.max(self.left.stage_of(m)?);
            sr = sr.max(self.right.stage_of(q)?);
        }
        Ok((sl, sr))
    }
}

impl Presentation for TensorPresentation {
    fn descriptor(&self) -> String {
        format!("tensor({},{})", self.left.descriptor(), self.right.descriptor())
    }
    fn budget(&self) -> &Budget {
        self.left.budget()
    }
    fn generator_count(&self) -> Option<usize> {
        None
    }
    fn special_point_at(&self, n: usize, _stage: usize) -> Result<Element> {
        let (m, q) = self.split(n)?;
        self.left.special_point(m)?.kron(&self.right.special_point(q)?)
    }
    fn unit_at(&self, _stage: usize) -> Result<Element> {
        self.left.unit_at(0)?.kron(&self.right.unit_at(0)?)
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        let l = self.left.unit_linear()?;
        let r = self.right.unit_linear()?;
        let mut out = Vec::new();
        for (m, z) in &l {
            for (q, w) in &r {
                out.push((pair_usize(*m, *q), z * w));
            }
        }
        Some(out)
    }
    fn evaluate(&self, p: &StarPoly) -> Result<Element> {
        let (sl, sr) = self.stages(p)?;
        let mut values = HashMap::new();
        for g in p.generators() {
            let (m, q) = self.split(g)?;
            let v = self.left.special_point_at(m, sl)?.kron(&self.right.special_point_at(q, sr)?)?;
            values.insert(g, v);
        }
        let one = self.left.unit_at(sl)?.kron(&self.right.unit_at(sr)?)?;
        poly_apply(p, &|i| values.get(&i).cloned(), &one)
    }
    fn generator_bound(&self, n: usize) -> Result<Dyadic> {
        let (m, q) = self.split(n)?;
        Ok(self.left.generator_bound(m)?.mul(&self.right.generator_bound(q)?))
    }
}

/// The presentation of `A ⊗ B` generated by `x_m ⊗ 1` (index `2m`) and
/// `1 ⊗ y_p` (index `2p + 1`).
#[derive(Clone)]
pub struct UniversalTensorPresentation {
    pub tensor: TensorPresentation,
}

impl Presentation for UniversalTensorPresentation {
    fn descriptor(&self) -> String {
        format!("universal({},{})", self.tensor.left.descriptor(), self.tensor.right.descriptor())
    }
    fn budget(&self) -> &Budget {
        self.tensor.budget()
    }
    fn generator_count(&self) -> Option<usize> {
        None
    }
    fn special_point_at(&self, n: usize, _stage: usize) -> Result<Element> {
        self.evaluate(&StarPoly::gen(n))
    }
    fn unit_at(&self, stage: usize) -> Result<Element> {
        self.tensor.unit_at(stage)
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        None
    }
    fn evaluate(&self, p: &StarPoly) -> Result<Element> {
        let q = tensor_code_translate_poly(&self.tensor, TranslateDirection::FromUniversal, p)?;
        self.tensor.evaluate(&q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TranslateDirection {
    /// `a_m ⊗ b_p  ->  x_m y_p`
    ToUniversal,
    /// `x_m -> a_m ⊗ 1`, `y_p -> 1 ⊗ b_p`
    FromUniversal,
}

fn linear_unit(p: &dyn Presentation) -> Result<Vec<(usize, GaussianRational)>> {
    p.unit_linear().ok_or_else(|| {
        Error::InvalidInput(format!(
            "the unit of {} is not a linear combination of special points",
            p.descriptor()
        ))
    })
}

pub fn tensor_code_translate_poly(t: &TensorPresentation, dir: TranslateDirection, p: &StarPoly) -> Result<StarPoly> {
    match dir {
        TranslateDirection::ToUniversal => p.substitute(&|n| {
            let (m, q) = unpair_usize(&n.into())?;
            Some(StarPoly::gen(2 * m).mul(&StarPoly::gen(2 * q + 1)))
        }),
        TranslateDirection::FromUniversal => {
            let lu = linear_unit(t.left.as_ref())?;
            let ru = linear_unit(t.right.as_ref())?;
            p.substitute(&|n| {
                let mut out = StarPoly::zero();
                if n % 2 == 0 {
                    for (q, z) in &ru {
                        out.add_term(crate::poly::Word::letter(pair_usize(n / 2, *q), false), z.clone());
                    }
                } else {
                    for (m, z) in &lu {
                        out.add_term(crate::poly::Word::letter(pair_usize(*m, n / 2), false), z.clone());
                    }
                }
                Some(out)
            })
        }
    }
}

/// Translation of codes between the tensor presentation and the universal one.
pub fn tensor_code_translate(t: &TensorPresentation, dir: TranslateDirection, c: &Code) -> Result<Code> {
    Ok(encode_poly(&tensor_code_translate_poly(t, dir, &decode_poly(c))?))
}

/// A code for a point within `2^-k` of `a ⊗ 1`; exact when `1_Q` is a linear
/// combination of special points, which holds for every backend here.
pub fn embed_unit(t: &TensorPresentation, c: &Code, _k: u32) -> Result<Code> {
    let ru = linear_unit(t.right.as_ref())?;
    let a = decode_poly(c);
    let p = a.substitute(&|m| {
        let mut out = StarPoly::zero();
        for (q, z) in &ru {
            out.add_term(crate::poly::Word::letter(pair_usize(m, *q), false), z.clone());
        }
        Some(out)
    })?;
    Ok(encode_poly(&p))
}

/// `k -> code` with `|x - decoded| < 2^-k`.
#[derive(Clone)]
pub struct ComputablePoint {
    approx: Arc<dyn Fn(u32) -> Result<Code> + Send + Sync>,
}

impl ComputablePoint {
    pub fn new(f: impl Fn(u32) -> Result<Code> + Send + Sync + 'static) -> Self {
        ComputablePoint { approx: Arc::new(f) }
    }
    /// A rational point, exact at every precision.
    pub fn exact(c: Code) -> Self {
        Self::new(move |_| Ok(c.clone()))
    }
    pub fn approx(&self, k: u32) -> Result<Code> {
        (self.approx)(k)
    }
}

/// `(code, k) -> code` of the image within `2^-k`.
#[derive(Clone)]
pub struct ComputableMap {
    image: Arc<dyn Fn(&Code, u32) -> Result<Code> + Send + Sync>,
}

impl ComputableMap {
    pub fn new(f: impl Fn(&Code, u32) -> Result<Code> + Send + Sync + 'static) -> Self {
        ComputableMap { image: Arc::new(f) }
    }
    pub fn image(&self, c: &Code, k: u32) -> Result<Code> {
        (self.image)(c, k)
    }
    pub fn apply(&self, x: &ComputablePoint) -> ComputablePoint {
        let (m, x) = (self.clone(), x.clone());
        // for the maps here (contractive *-homomorphisms) precision k+1 on
        // the input and the output suffices
        ComputablePoint::new(move |k| m.image(&x.approx(k + 1)?, k + 1))
    }
}

/// `(i, k) -> code`, one procedure for all indices.
#[derive(Clone)]
pub struct ComputableSequence {
    f: Arc<dyn Fn(usize, u32) -> Result<Code> + Send + Sync>,
}

impl ComputableSequence {
    pub fn new(f: impl Fn(usize, u32) -> Result<Code> + Send + Sync + 'static) -> Self {
        ComputableSequence { f: Arc::new(f) }
    }
    pub fn point(&self, i: usize) -> ComputablePoint {
        let f = self.f.clone();
        ComputablePoint::new(move |k| f(i, k))
    }
}

type StageFn = dyn Fn(usize) -> Result<Arc<dyn Presentation>> + Send + Sync;
type PushFn = dyn Fn(usize, &Element) -> Result<Element> + Send + Sync;

/// Inductive limit of presentations along exact connecting maps; special
/// point `pair(m, i)` is generator `i` of stage `m`.
#[derive(Clone)]
pub struct InductiveLimit {
    name: String,
    stages: Arc<StageFn>,
    push: Arc<PushFn>,
    injective: bool,
    budget: Budget,
    max_stage: usize,
}

/// `inductive_limit_presentation(stages, maps, injective)`; `push(m, x)` is the
/// connecting map from stage `m` to `m + 1`.
pub fn inductive_limit_presentation(
    name: impl Into<String>,
    stages: impl Fn(usize) -> Result<Arc<dyn Presentation>> + Send + Sync + 'static,
    push: impl Fn(usize, &Element) -> Result<Element> + Send + Sync + 'static,
    injective: bool,
    max_stage: usize,
    budget: Budget,
) -> InductiveLimit {
    InductiveLimit {
        name: name.into(),
        stages: Arc::new(stages),
        push: Arc::new(push),
        injective,
        budget,
        max_stage,
    }
}

impl InductiveLimit {
    pub fn stage(&self, m: usize) -> Result<Arc<dyn Presentation>> {
        if m > self.max_stage {
            return Err(Error::Infeasible(format!(
                "{}: stage {m} exceeds the configured stage budget {}",
                self.name, self.max_stage
            )));
        }
        (self.stages)(m)
    }

    /// Push a stage-`from` element to stage `to`.
    pub fn push_to(&self, x: &Element, from: usize, to: usize) -> Result<Element> {
        self.stage(to)?;
        let mut y = x.clone();
        for m in from..to {
            y = (self.push)(m, &y)?;
        }
        Ok(y)
    }

    /// Evaluate a stage-`m` point (stage-local generator indices) at stage `m`.
    pub fn evaluate_stage(&self, m: usize, p: &StarPoly) -> Result<Element> {
        self.stage(m)?.evaluate(p)
    }

    fn split(&self, n: usize) -> Result<(usize, usize)> {
        unpair_usize(&n.into()).ok_or(Error::MissingGenerator(n))
    }

    /// Rewrite a stage-local point as a point of the limit presentation.
    pub fn lift(m: usize, p: &StarPoly) -> StarPoly {
        p.substitute(&|i| Some(StarPoly::gen(pair_usize(m, i)))).expect("total substitution")
    }
}

impl Presentation for InductiveLimit {
    fn descriptor(&self) -> String {
        self.name.clone()
    }
    fn budget(&self) -> &Budget {
        &self.budget
    }
    fn generator_count(&self) -> Option<usize> {
        None
    }
    fn stage_of(&self, n: usize) -> Result<usize> {
        Ok(self.split(n)?.0)
    }
    fn special_point_at(&self, n: usize, stage: usize) -> Result<Element> {
        let (m, i) = self.split(n)?;
        let x = self.stage(m)?.special_point(i)?;
        self.push_to(&x, m, stage)
    }
    fn unit_at(&self, stage: usize) -> Result<Element> {
        self.stage(stage)?.unit_at(0)
    }
    fn matrix_unit(&self, stage: usize, i: usize, j: usize) -> Option<usize> {
        let g = self.stage(stage).ok()?.matrix_unit(0, i, j)?;
        Some(pair_usize(stage, g))
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        let s0 = self.stage(0).ok()?;
        Some(s0.unit_linear()?.into_iter().map(|(i, z)| (pair_usize(0, i), z)).collect())
    }
    fn norm(&self, p: &StarPoly, k: u32) -> Result<DyadicInterval> {
        if !self.injective {
            return Err(Error::Infeasible(
                "norms in a limit with non-injective connecting maps are not supported".into(),
            ));
        }
        self.evaluate(p)?.norm(k, &self.budget)
    }
}

/// A limit system whose connecting maps can be compared with stage points.
pub trait LimitSystem {
    /// Stage presentation with stage-local generator indices.
    fn stage_presentation(&self, m: usize) -> Result<Arc<dyn Presentation>>;
    /// Enclosure of `|Phi_m(a) - b|` for stage-local points `a` (stage `m`)
    /// and `b` (stage `m + 1`).
    fn connecting_distance(&self, m: usize, a: &StarPoly, b: &StarPoly, k: u32) -> Result<DyadicInterval>;
}

impl LimitSystem for InductiveLimit {
    fn stage_presentation(&self, m: usize) -> Result<Arc<dyn Presentation>> {
        self.stage(m)
    }
    fn connecting_distance(&self, m: usize, a: &StarPoly, b: &StarPoly, k: u32) -> Result<DyadicInterval> {
        let x = self.push_to(&self.evaluate_stage(m, a)?, m, m + 1)?;
        let y = self.evaluate_stage(m + 1, b)?;
        x.add(&y.scale(&-GaussianRational::one())).norm(k, &self.budget)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Enumerate,
    Verify(Code),
}

fn uses_valid_generators(p: &StarPoly, pres: &dyn Presentation) -> bool {
    match pres.generator_count() {
        Some(c) => p.generators().iter().all(|&g| g < c),
        None => true,
    }
}

/// `b(m, n, k)`: a stage-`m+1` point within `2^-k` of `Phi_m(a)`, where `n`
/// codes the stage-`m` point `a`. Enumeration returns the least such code;
/// verification certifies a supplied candidate.
pub fn b_search(sys: &dyn LimitSystem, m: usize, n: &Code, k: u32, mode: &SearchMode, budget: &Budget) -> Result<Code> {
    let a = decode_poly(n);
    let tol = Dyadic::pow2(-(k as i64));
    let next = sys.stage_presentation(m + 1)?;
    match mode {
        SearchMode::Verify(c) => {
            let b = decode_poly(c);
            if !uses_valid_generators(&b, next.as_ref()) {
                return Err(Error::Certification("candidate uses generators outside the next stage".into()));
            }
            let d = sys.connecting_distance(m, &a, &b, k + 2)?;
            if d.hi() < &tol {
                Ok(c.clone())
            } else {
                Err(Error::Certification(format!(
                    "candidate distance is only bounded by {} (needed < 2^-{k})",
                    d.hi()
                )))
            }
        }
        SearchMode::Enumerate => {
            let mut c = Code::zero();
            for _ in 0..budget.enumeration_steps {
                let b = decode_poly(&c);
                if uses_valid_generators(&b, next.as_ref()) {
                    let d = sys.connecting_distance(m, &a, &b, k + 2)?;
                    if d.hi() < &tol {
                        return Ok(c);
                    }
                }
                c += 1u32;
            }
            Err(Error::Budget(format!(
                "no point within 2^-{k} among the first {} codes",
                budget.enumeration_steps
            )))
        }
    }
}

/// Matrix inductive limit `M_d -> M_{2d} -> ...` along `x -> diag(x, x)`.
pub fn diagonal_limit(d: usize, budget: Budget) -> InductiveLimit {
    let b2 = budget.clone();
    let max_stage = stage_cap(d, 2, budget.max_matrix_dim);
    inductive_limit_presentation(
        format!("limit(matrix:{d})"),
        move |m| Ok(Arc::new(MatrixPresentation::new(d << m, b2.clone())) as Arc<dyn Presentation>),
        |_, x| match x {
            Element::Matrix(a) => Ok(Element::Matrix(RationalMatrix::block_diag(&[a.clone(), a.clone()]))),
            _ => Err(Error::InvalidInput("matrix limit received a function".into())),
        },
        true,
        max_stage,
        budget,
    )
}

/// Largest stage `m` with `d * f^m <= cap`.
pub fn stage_cap(d: usize, f: usize, cap: usize) -> usize {
    let mut m = 0;
    let mut dim = d;
    while dim * f <= cap {
        dim *= f;
        m += 1;
    }
    m
}

impl Presentation for Arc<dyn Presentation> {
    fn descriptor(&self) -> String {
        self.as_ref().descriptor()
    }
    fn budget(&self) -> &Budget {
        self.as_ref().budget()
    }
    fn generator_count(&self) -> Option<usize> {
        self.as_ref().generator_count()
    }
    fn stage_of(&self, n: usize) -> Result<usize> {
        self.as_ref().stage_of(n)
    }
    fn special_point_at(&self, n: usize, stage: usize) -> Result<Element> {
        self.as_ref().special_point_at(n, stage)
    }
    fn unit_at(&self, stage: usize) -> Result<Element> {
        self.as_ref().unit_at(stage)
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        self.as_ref().unit_linear()
    }
    fn evaluate(&self, p: &StarPoly) -> Result<Element> {
        self.as_ref().evaluate(p)
    }
    fn norm(&self, p: &StarPoly, k: u32) -> Result<DyadicInterval> {
        self.as_ref().norm(p, k)
    }
    fn generator_bound(&self, n: usize) -> Result<Dyadic> {
        self.as_ref().generator_bound(n)
    }
    fn matrix_unit(&self, stage: usize, i: usize, j: usize) -> Option<usize> {
        self.as_ref().matrix_unit(stage, i, j)
    }
}
