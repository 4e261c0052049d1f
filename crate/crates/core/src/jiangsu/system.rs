//! The Jiang-Su algebra as a presentation: special point `pair(m, i)` is
//! generator `i` of `Z_{p_m, q_m}`, and the connecting maps are `Phi_m`.
//!
//! Norms of points at one stage are dimension drop norms (the connecting
//! maps are injective). A point mixing stages needs `Phi_0` of its stage-0
//! part as an element of the stage-1 function backend, which only exists
//! when that part is a scalar; every other case is reported as infeasible.

use std::sync::{Arc, OnceLock};

use num_traits::ToPrimitive;

use crate::budget::Budget;
use crate::coding::{pair_usize, unpair_usize};
use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::function::{Endpoint, HalfPowerMatrixFunction};
use crate::jiangsu::dimdrop::{dd_norm, DimensionDropPresentation};
use crate::jiangsu::phi::JiangSuMap;
use crate::jiangsu::stage_params;
use crate::matrix::ball::{f64_up, BallMatrix};
use crate::matrix::RationalMatrix;
use crate::poly::StarPoly;
use crate::presentation::{Element, LimitSystem, Presentation};
use crate::scalar::GaussianRational;

#[derive(Debug)]
pub struct JiangSuPresentation {
    budget: Budget,
    dims: Vec<(usize, usize)>,
    map0: OnceLock<std::result::Result<Arc<JiangSuMap>, Error>>,
}

pub fn jiangsu_presentation(budget: Budget) -> Result<JiangSuPresentation> {
    let top = budget.jiangsu_max_stage.min(1);
    let mut dims = vec![(2, 3)];
    for m in 0..top {
        let st = stage_params(m)?;
        let d = |x: &num_bigint::BigUint| x.to_usize().expect("small stage");
        dims.push((d(&st.p1), d(&st.q1)));
    }
    Ok(JiangSuPresentation { budget, dims, map0: OnceLock::new() })
}

/// `c` when `f` is the constant `c 1`.
pub fn scalar_value(f: &HalfPowerMatrixFunction) -> Option<GaussianRational> {
    if f.is_zero() {
        return Some(GaussianRational::zero());
    }
    let terms = f.terms();
    if terms.len() != 1 {
        return None;
    }
    let c = terms.get(&(0, 0))?;
    let z = c.get(0, 0);
    (c == &RationalMatrix::scalar(f.dim(), z.clone())).then_some(z)
}

fn function_of(e: Element) -> HalfPowerMatrixFunction {
    match e {
        Element::Function(f) => f,
        Element::Matrix(m) => HalfPowerMatrixFunction::constant(m),
    }
}

impl JiangSuPresentation {
    pub fn stage_dims(&self, m: usize) -> Result<(usize, usize)> {
        self.dims.get(m).copied().ok_or_else(|| {
            Error::Infeasible(format!(
                "Jiang-Su stage {m} is beyond the numeric stage budget (stages 0..={} only)",
                self.dims.len() - 1
            ))
        })
    }

    pub fn stage(&self, m: usize) -> Result<DimensionDropPresentation> {
        let (p, q) = self.stage_dims(m)?;
        DimensionDropPresentation::new(p, q, self.budget.clone())
    }

    pub fn map0(&self) -> Result<Arc<JiangSuMap>> {
        self.map0
            .get_or_init(|| JiangSuMap::new(0, &self.budget).map(Arc::new))
            .clone()
    }

    fn split(&self, n: usize) -> Result<(usize, usize)> {
        let (m, i) = unpair_usize(&n.into()).ok_or(Error::MissingGenerator(n))?;
        let (p, q) = self.stage_dims(m)?;
        if i >= p + q {
            return Err(Error::MissingGenerator(n));
        }
        Ok((m, i))
    }

    /// Splits `p` into stage-local parts; words mixing stages are rejected.
    fn stage_parts(&self, p: &StarPoly) -> Result<Vec<StarPoly>> {
        let mut parts: Vec<StarPoly> = vec![StarPoly::zero(); self.dims.len()];
        for (w, z) in p.terms() {
            let mut stage = None;
            let mut local = Vec::new();
            for l in &w.0 {
                let (m, i) = self.split(l.gen)?;
                if stage.is_some_and(|s| s != m) {
                    return Err(Error::Infeasible(
                        "a word mixing Jiang-Su stages needs the connecting map as a function, which has no exact form".into(),
                    ));
                }
                stage = Some(m);
                local.push(crate::poly::Letter::new(i, l.star));
            }
            let m = stage.unwrap_or(0);
            parts[m] = parts[m].add(&StarPoly::monomial(crate::poly::Word(local), z.clone()));
        }
        Ok(parts)
    }

    /// The point as a function at its top stage, with the top stage.
    pub fn evaluate_top(&self, p: &StarPoly) -> Result<(usize, HalfPowerMatrixFunction)> {
        let parts = self.stage_parts(p)?;
        let top = parts.iter().rposition(|q| !q.is_zero()).unwrap_or(0);
        let mut acc = function_of(self.stage(top)?.evaluate(&parts[top])?);
        for (m, part) in parts.iter().enumerate().take(top) {
            if part.is_zero() {
                continue;
            }
            let f = function_of(self.stage(m)?.evaluate(part)?);
            let c = scalar_value(&f).ok_or_else(|| {
                Error::Infeasible(format!(
                    "the stage-{m} part of the point is not a scalar; pushing it to stage {top} has no exact form"
                ))
            })?;
            acc = acc.add(&HalfPowerMatrixFunction::identity(acc.dim()).scale(&c));
        }
        Ok((top, acc))
    }
}

impl Presentation for JiangSuPresentation {
    fn descriptor(&self) -> String {
        "jiangsu".into()
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
        if m != stage {
            return Err(Error::Infeasible(format!(
                "generator {i} of stage {m} has no exact form at stage {stage}"
            )));
        }
        self.stage(m)?.special_point(i)
    }
    fn unit_at(&self, stage: usize) -> Result<Element> {
        self.stage(stage)?.unit_at(0)
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        None
    }
    fn evaluate(&self, p: &StarPoly) -> Result<Element> {
        Ok(Element::Function(self.evaluate_top(p)?.1))
    }
    fn norm(&self, p: &StarPoly, k: u32) -> Result<DyadicInterval> {
        let (m, f) = self.evaluate_top(p)?;
        let (pp, qq) = self.stage_dims(m)?;
        dd_norm(&f, pp, qq, k, &self.budget)
    }
    fn generator_bound(&self, n: usize) -> Result<Dyadic> {
        self.split(n)?;
        Ok(Dyadic::one())
    }
}

/// Lift a stage-local point to the limit presentation.
pub fn lift(m: usize, p: &StarPoly) -> StarPoly {
    p.substitute(&|i| Some(StarPoly::gen(pair_usize(m, i)))).expect("total substitution")
}

fn ball_of_rational(m: &RationalMatrix) -> BallMatrix {
    let mut b = BallMatrix::zero(m.dim());
    for (&(i, j), z) in m.iter() {
        b.set_interval(i, j, &ComplexInterval::from_gaussian(z, 80));
    }
    b
}

impl LimitSystem for JiangSuPresentation {
    fn stage_presentation(&self, m: usize) -> Result<Arc<dyn Presentation>> {
        Ok(Arc::new(self.stage(m)?))
    }

    /// Exact when `a` is a scalar `c 1` (then `Phi_0(a) = c 1`); otherwise an
    /// enclosure whose lower end compares the endpoint values exactly up to
    /// rounding, which suffices to reject candidates.
    fn connecting_distance(&self, m: usize, a: &StarPoly, b: &StarPoly, k: u32) -> Result<DyadicInterval> {
        if m != 0 {
            return Err(Error::Infeasible(format!(
                "the connecting map at Jiang-Su stage {m} is beyond the numeric stage budget"
            )));
        }
        let (p1, q1) = self.stage_dims(1)?;
        let fa = function_of(self.stage(0)?.evaluate(a)?);
        let fb = function_of(self.stage(1)?.evaluate(b)?);
        if let Some(c) = scalar_value(&fa) {
            let diff = fb.sub(&HalfPowerMatrixFunction::identity(fb.dim()).scale(&c));
            return dd_norm(&diff, p1, q1, k, &self.budget);
        }
        let map = self.map0()?;
        let mut lower = 0.0f64;
        for (at_one, e) in [(false, Endpoint::Zero), (true, Endpoint::One)] {
            let x = map.eval_endpoint(&fa, at_one)?;
            let y = ball_of_rational(&fb.value_at_endpoint(e));
            lower = lower.max(x.sub(&y).norm_lower(60));
        }
        let na = self.stage(0)?.norm(a, k)?;
        let nb = self.stage(1)?.norm(b, k)?;
        let hi = na.hi().add(nb.hi());
        let lo = Dyadic::from_f64(lower);
        let hi = if hi < lo { Dyadic::from_f64(f64_up(&lo)) } else { hi };
        Ok(DyadicInterval::new(lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::encode_poly;
    use crate::presentation::{b_search, SearchMode};
    use crate::scalar::rat;

    fn unit_sum(p: usize, q: usize) -> StarPoly {
        let mut s = StarPoly::zero();
        for g in 0..p + q {
            s = s.add(&StarPoly::gen(g).adjoint().mul(&StarPoly::gen(g)));
        }
        s
    }

    #[test]
    fn stage_points_and_infeasibility() {
        let js = jiangsu_presentation(Budget::default()).unwrap();
        assert_eq!(js.stage_dims(1).unwrap(), (26, 51));
        let n = js.norm(&StarPoly::gen(pair_usize(1, 30)), 10).unwrap();
        assert!(n.contains_rational(&rat(1, 1)));
        assert!(matches!(js.norm(&StarPoly::gen(pair_usize(2, 0)), 10), Err(Error::Infeasible(_))));
        let mixed = StarPoly::gen(pair_usize(0, 0)).mul(&StarPoly::gen(pair_usize(1, 0)));
        assert!(matches!(js.norm(&mixed, 10), Err(Error::Infeasible(_))));
    }

    #[test]
    fn scalar_candidate_is_accepted() {
        let js = jiangsu_presentation(Budget::default()).unwrap();
        let a = encode_poly(&unit_sum(2, 3));
        let b = encode_poly(&unit_sum(26, 51));
        let r = b_search(&js, 0, &a, 6, &SearchMode::Verify(b.clone()), &Budget::default()).unwrap();
        assert_eq!(r, b);
    }

    #[test]
    fn iota_is_not_its_own_image() {
        // sum_j b_j* b_j = iota 1 at both stages; Phi(iota 1)(0) has eigenvalues 0 and 1/2
        let js = jiangsu_presentation(Budget::default()).unwrap();
        let iota = |p: usize, q: usize| {
            let mut s = StarPoly::zero();
            for g in p..p + q {
                s = s.add(&StarPoly::gen(g).adjoint().mul(&StarPoly::gen(g)));
            }
            s
        };
        let d = js.connecting_distance(0, &iota(2, 3), &iota(26, 51), 8).unwrap();
        assert!(d.lo() >= &Dyadic::from_f64(0.49), "{:?}", d);
    }
}
