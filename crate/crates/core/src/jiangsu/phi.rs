//! The connecting map `Phi_m : Z_{p,q} -> Z_{p',q'}`,
//! `Phi(f)(t) = W(t)* diag(f(xi_1(t)), ..., f(xi_{kl}(t))) W(t)` with
//! `W(t) = exp(i (1-t) h_u) exp(i t h_v)`, so `W(0) = u` and `W(1) = v`.
//!
//! `W(t)` is unitary, so most quantities only need the block diagonal part;
//! certified defects are bounded through the unitarity defects of the two
//! cycle exponentials, and dense ball products are used for cross-checks.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_traits::One;

use crate::budget::Budget;
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::function::{compose_reparam, HalfPowerMatrixFunction, Reparam};
use crate::jiangsu::perm::{build_u, build_v, CycleExp, Permutation};
use crate::jiangsu::{stage_params, JiangSuStage, SmallStage};
use crate::matrix::ball::{ball_of, BallMatrix};
use crate::matrix::interval_matrix_norm;
use crate::matrix::IntervalMatrix;
use crate::scalar::Rational;

/// Working precision for the slot blocks.
const PREC: u32 = 96;

fn up(x: f64) -> f64 {
    (x * (1.0 + 1.0 / 1099511627776.0) + 1e-300).next_up()
}

fn norm_hi(m: &IntervalMatrix) -> f64 {
    crate::matrix::ball::f64_up(interval_matrix_norm(m, 40).hi())
}

/// The path at one parameter value.
#[derive(Debug)]
pub struct PathSample {
    pub t: Rational,
    pub eu: CycleExp,
    pub ev: CycleExp,
    pub delta_u: f64,
    pub delta_v: f64,
}

impl PathSample {
    /// Bound on `|W W* - 1|` and `|W* W - 1|` over all members.
    pub fn delta(&self) -> f64 {
        let (a, b) = (self.delta_u, self.delta_v);
        up(a + b + up(a * b))
    }

    /// Bound on `|W|^2`.
    pub fn w_norm_sqr(&self) -> f64 {
        up(1.0 + self.delta())
    }

    pub fn dense_w(&self) -> BallMatrix {
        self.eu.to_dense().mul(&self.ev.to_dense())
    }
}

/// `f(t/2)`, `f(1/2)`, `f((t+1)/2)`.
#[derive(Clone, Debug)]
pub struct SlotValues {
    pub blocks: [IntervalMatrix; 3],
}

impl SlotValues {
    pub fn of(f: &HalfPowerMatrixFunction, t: &Rational) -> Self {
        let at = |xi: Reparam| f.eval(&xi.apply(t), PREC);
        SlotValues { blocks: [at(Reparam::Lower), at(Reparam::Middle), at(Reparam::Upper)] }
    }

    pub fn get(&self, xi: Reparam) -> &IntervalMatrix {
        match xi {
            Reparam::Lower => &self.blocks[0],
            Reparam::Middle => &self.blocks[1],
            Reparam::Upper => &self.blocks[2],
        }
    }

    fn map2(&self, o: &Self, g: impl Fn(&IntervalMatrix, &IntervalMatrix) -> IntervalMatrix) -> Self {
        SlotValues {
            blocks: [
                g(&self.blocks[0], &o.blocks[0]),
                g(&self.blocks[1], &o.blocks[1]),
                g(&self.blocks[2], &o.blocks[2]),
            ],
        }
    }
}

/// `Phi_m` on a stage whose target matrices fit the budget.
#[derive(Debug)]
pub struct JiangSuMap {
    pub params: JiangSuStage,
    pub stage: SmallStage,
    pub u: Permutation,
    pub v: Permutation,
    present: Vec<Reparam>,
    cache: Mutex<BTreeMap<Rational, Arc<PathSample>>>,
}

impl JiangSuMap {
    /// Fails with an infeasibility error for stages beyond the budget.
    pub fn new(m: u32, budget: &Budget) -> Result<Self> {
        if m >= budget.jiangsu_max_stage {
            return Err(Error::Infeasible(format!(
                "the connecting map at Jiang-Su stage {m} is beyond the numeric stage budget (maps below stage {} only)",
                budget.jiangsu_max_stage
            )));
        }
        let params = stage_params(m)?;
        let stage = SmallStage::from_stage(&params, budget.max_matrix_dim)?;
        let u = build_u(&stage)?;
        let v = build_v(&stage)?;
        let mut present = Vec::new();
        for i in 0..stage.slots() {
            let xi = stage.xi(i);
            if !present.contains(&xi) {
                present.push(xi);
            }
        }
        Ok(JiangSuMap { params, stage, u, v, present, cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn source_dim(&self) -> usize {
        self.stage.block()
    }

    pub fn target_dim(&self) -> usize {
        self.stage.dim()
    }

    fn check(&self, f: &HalfPowerMatrixFunction) -> Result<()> {
        if f.dim() != self.source_dim() {
            return Err(Error::InvalidInput(format!(
                "stage {} point has size {}, expected {}",
                self.stage.m,
                f.dim(),
                self.source_dim()
            )));
        }
        Ok(())
    }

    fn check_t(t: &Rational) -> Result<()> {
        if t < &Rational::from_integer(0.into()) || t > &Rational::one() {
            return Err(Error::InvalidInput(format!("t = {t} is outside [0, 1]")));
        }
        Ok(())
    }

    /// The path sample at `t`, computed once.
    pub fn path(&self, t: &Rational) -> Result<Arc<PathSample>> {
        Self::check_t(t)?;
        if let Some(s) = self.cache.lock().expect("cache").get(t) {
            return Ok(s.clone());
        }
        let eu = self.u.exp_i_log(&(Rational::one() - t));
        let ev = self.v.exp_i_log(t);
        let delta_u = eu.unitarity_defect();
        let delta_v = ev.unitarity_defect();
        let s = Arc::new(PathSample { t: t.clone(), eu, ev, delta_u, delta_v });
        self.cache.lock().expect("cache").insert(t.clone(), s.clone());
        Ok(s)
    }

    /// Bound on the norm of the block diagonal part.
    fn diag_norm(&self, v: &SlotValues) -> f64 {
        self.present.iter().map(|&xi| norm_hi(v.get(xi))).fold(0.0, f64::max)
    }

    /// Bound on `|Phi(x)(t) Phi(y)(t) - Phi(xy)(t)|` over the enclosures.
    pub fn multiplicativity_defect(&self, x: &HalfPowerMatrixFunction, y: &HalfPowerMatrixFunction, t: &Rational) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        let s = self.path(t)?;
        let (dx, dy, dxy) = (SlotValues::of(x, t), SlotValues::of(y, t), SlotValues::of(&x.mul(y), t));
        let prod = dx.map2(&dy, |a, b| a.mul(b, PREC));
        let gap = prod.map2(&dxy, |a, b| a.sub(b));
        let inner = up(up(self.diag_norm(&dx) * self.diag_norm(&dy)) * s.delta()) + self.diag_norm(&gap);
        Ok(up(s.w_norm_sqr() * up(inner)))
    }

    /// Bound on `|Phi(x*)(t) - Phi(x)(t)*|`.
    pub fn adjoint_defect(&self, x: &HalfPowerMatrixFunction, t: &Rational) -> Result<f64> {
        self.check(x)?;
        let s = self.path(t)?;
        let (dx, dxs) = (SlotValues::of(x, t), SlotValues::of(&x.adjoint(), t));
        let adj = SlotValues {
            blocks: [dx.blocks[0].adjoint(), dx.blocks[1].adjoint(), dx.blocks[2].adjoint()],
        };
        let gap = dxs.map2(&adj, |a, b| a.sub(b));
        Ok(up(s.w_norm_sqr() * self.diag_norm(&gap)))
    }

    /// Bound on `|Phi(1)(t) - 1| = |W* W - 1|`.
    pub fn unitality_defect(&self, t: &Rational) -> Result<f64> {
        Ok(self.path(t)?.delta())
    }

    /// Block diagonal `D_f(t)` as rows of nonzero balls.
    fn diag_rows(&self, f: &HalfPowerMatrixFunction, t: &Rational) -> Vec<Vec<(usize, (f64, f64, f64))>> {
        let v = SlotValues::of(f, t);
        let n = self.source_dim();
        let mut rows = Vec::with_capacity(self.target_dim());
        for slot in 0..self.stage.slots() {
            let b = v.get(self.stage.xi(slot));
            for i in 0..n {
                let row = (0..n)
                    .map(|j| (slot * n + j, ball_of(b.get(i, j))))
                    .filter(|(_, (re, im, rad))| *re != 0.0 || *im != 0.0 || *rad != 0.0)
                    .collect();
                rows.push(row);
            }
        }
        rows
    }

    /// Dense enclosure of `Phi(f)(t)`, given the dense path.
    pub fn eval_dense_with(&self, f: &HalfPowerMatrixFunction, t: &Rational, w: &BallMatrix) -> Result<BallMatrix> {
        self.check(f)?;
        let dw = BallMatrix::mul_sparse_left(&self.diag_rows(f, t), w);
        Ok(w.adjoint().mul(&dw))
    }

    pub fn eval_dense(&self, f: &HalfPowerMatrixFunction, t: &Rational) -> Result<BallMatrix> {
        let w = self.path(t)?.dense_w();
        self.eval_dense_with(f, t, &w)
    }

    /// `Phi(f)(0) = u* D(0) u` or `Phi(f)(1) = v* D(1) v`, by reindexing.
    pub fn eval_endpoint(&self, f: &HalfPowerMatrixFunction, at_one: bool) -> Result<BallMatrix> {
        self.check(f)?;
        let t = if at_one { Rational::one() } else { Rational::from_integer(0.into()) };
        let perm = if at_one { &self.v } else { &self.u };
        let inv = perm.inverse();
        let v = SlotValues::of(f, &t);
        let n = self.source_dim();
        let mut m = BallMatrix::zero(self.target_dim());
        for slot in 0..self.stage.slots() {
            let b = v.get(self.stage.xi(slot));
            for i in 0..n {
                for j in 0..n {
                    let (re, im, rad) = ball_of(b.get(i, j));
                    if re != 0.0 || im != 0.0 || rad != 0.0 {
                        let (a, c) = (inv.sigma()[slot * n + i], inv.sigma()[slot * n + j]);
                        m.set(a, c, re, im, rad);
                    }
                }
            }
        }
        Ok(m)
    }

    /// Upper bounds on the distances of `Phi(f)(0)` to `M_{p'} ⊗ 1` and of
    /// `Phi(f)(1)` to `1 ⊗ M_{q'}`.
    pub fn boundary_defects(&self, f: &HalfPowerMatrixFunction) -> Result<(f64, f64)> {
        let (p1, q1) = (self.stage.p1, self.stage.q1);
        let d0 = self.eval_endpoint(f, false)?.distance_to_leg_upper(p1, q1, true);
        let d1 = self.eval_endpoint(f, true)?.distance_to_leg_upper(p1, q1, false);
        Ok((d0, d1))
    }

    /// `sup_t |Phi(f)(t)|`. Conjugation by the unitary `W(t)` preserves norms,
    /// so this is the largest sup norm of the `f∘xi_i`.
    pub fn sup_norm(&self, f: &HalfPowerMatrixFunction, k: u32, budget: &Budget) -> Result<DyadicInterval> {
        self.check(f)?;
        let mut best: Option<DyadicInterval> = None;
        for &xi in &self.present {
            let g = compose_reparam(f, xi);
            let s = g.sup_norm(k, budget.sup_norm_boxes)?.enclosure;
            best = Some(match best {
                None => s,
                Some(b) => b.max(&s),
            });
        }
        Ok(best.unwrap_or_else(DyadicInterval::zero))
    }
}

/// `Phi(f)` for a stage point `f`.
pub struct PhiImage<'a> {
    pub map: &'a JiangSuMap,
    pub f: HalfPowerMatrixFunction,
}

pub fn phi<'a>(map: &'a JiangSuMap, f: &HalfPowerMatrixFunction) -> Result<PhiImage<'a>> {
    map.check(f)?;
    Ok(PhiImage { map, f: f.clone() })
}

impl PhiImage<'_> {
    pub fn eval_dense(&self, t: &Rational) -> Result<BallMatrix> {
        self.map.eval_dense(&self.f, t)
    }

    pub fn sup_norm(&self, k: u32, budget: &Budget) -> Result<DyadicInterval> {
        self.map.sup_norm(&self.f, k, budget)
    }

    pub fn boundary_defects(&self) -> Result<(f64, f64)> {
        self.map.boundary_defects(&self.f)
    }

    /// A rigorous lower bound for `|Phi(f)(t)|` from the dense enclosure.
    pub fn norm_lower_at(&self, t: &Rational) -> Result<Dyadic> {
        Ok(Dyadic::from_f64(self.eval_dense(t)?.norm_lower(60)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jiangsu::dimdrop::dd_generator;
    use crate::matrix::RationalMatrix;
    use crate::scalar::rat;

    fn map() -> JiangSuMap {
        JiangSuMap::new(0, &Budget::default()).unwrap()
    }

    #[test]
    fn endpoints_are_exact_permutations() {
        let m = map();
        let s = m.path(&Rational::from_integer(0.into())).unwrap();
        assert!(s.delta() < 1e-9);
        let x = dd_generator(2, 3, 0).unwrap();
        let (d0, d1) = m.boundary_defects(&x).unwrap();
        assert!(d0 < 1e-9 && d1 < 1e-9, "{d0} {d1}");
    }

    #[test]
    fn defects_are_small_at_midpoint() {
        let m = map();
        let x = dd_generator(2, 3, 1).unwrap();
        let y = dd_generator(2, 3, 3).unwrap();
        let t = rat(1, 2);
        assert!(m.multiplicativity_defect(&x, &y, &t).unwrap() < 1e-9);
        assert!(m.adjoint_defect(&x, &t).unwrap() < 1e-9);
        assert!(m.unitality_defect(&t).unwrap() < 1e-9);
    }

    #[test]
    fn wrong_size_and_stage_budget() {
        let m = map();
        let f = HalfPowerMatrixFunction::constant(RationalMatrix::identity(5));
        assert!(m.multiplicativity_defect(&f, &f, &rat(1, 2)).is_err());
        assert!(matches!(JiangSuMap::new(1, &Budget::default()), Err(Error::Infeasible(_))));
        assert!(matches!(JiangSuMap::new(2, &Budget::default()), Err(Error::Infeasible(_))));
    }
}
