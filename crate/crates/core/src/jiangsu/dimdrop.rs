//! The prime dimension drop algebra
//! `Z_{p,q} = { f in C([0,1], M_p ⊗ M_q) : f(0) in M_p ⊗ 1, f(1) in 1 ⊗ M_q }`.
//!
//! Special points: `a_i = (1 - iota)^{1/2} (e_{1,i+1} ⊗ 1_q)` for `i < p` and
//! `b_j = iota^{1/2} (1_p ⊗ e_{1,j+1})` for `j < q`, indexed `i` and `p + j`.

use crate::budget::Budget;
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::function::{boundary_distance, Endpoint, HalfPowerMatrixFunction};
use crate::matrix::RationalMatrix;
use crate::presentation::{Element, Presentation};
use crate::scalar::GaussianRational;

#[derive(Clone, Debug)]
pub struct DimensionDropPresentation {
    pub p: usize,
    pub q: usize,
    pub budget: Budget,
}

impl DimensionDropPresentation {
    pub fn new(p: usize, q: usize, budget: Budget) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidInput("dimension drop algebra needs p, q >= 1".into()));
        }
        Ok(DimensionDropPresentation { p, q, budget })
    }

    pub fn generator(&self, g: usize) -> Result<HalfPowerMatrixFunction> {
        dd_generator(self.p, self.q, g)
    }
}

/// Special point `g` of `Z_{p,q}`.
pub fn dd_generator(p: usize, q: usize, g: usize) -> Result<HalfPowerMatrixFunction> {
    if g < p {
        let c = RationalMatrix::unit(p, 0, g).kron(&RationalMatrix::identity(q));
        Ok(HalfPowerMatrixFunction::one_minus_iota_sqrt(1).kron(&c))
    } else if g < p + q {
        let c = RationalMatrix::identity(p).kron(&RationalMatrix::unit(q, 0, g - p));
        Ok(HalfPowerMatrixFunction::iota_sqrt(1).kron(&c))
    } else {
        Err(Error::MissingGenerator(g))
    }
}

/// Exact check of the boundary conditions; the distances are upper bounds
/// and vanish for members.
pub fn dd_boundary(f: &HalfPowerMatrixFunction, p: usize, q: usize, k: u32) -> Result<(Dyadic, Dyadic)> {
    Ok((
        boundary_distance(f, Endpoint::Zero, p, q, k)?,
        boundary_distance(f, Endpoint::One, p, q, k)?,
    ))
}

/// Norm in `Z_{p,q}`: the sup norm, after checking membership.
pub fn dd_norm(f: &HalfPowerMatrixFunction, p: usize, q: usize, k: u32, budget: &Budget) -> Result<DyadicInterval> {
    let (d0, d1) = dd_boundary(f, p, q, k)?;
    if !d0.is_zero() || !d1.is_zero() {
        return Err(Error::InvalidInput(format!(
            "function is not in the dimension drop algebra (boundary distances {d0}, {d1})"
        )));
    }
    Ok(f.sup_norm(k, budget.sup_norm_boxes)?.enclosure)
}

impl Presentation for DimensionDropPresentation {
    fn descriptor(&self) -> String {
        format!("dimdrop:{},{}", self.p, self.q)
    }
    fn budget(&self) -> &Budget {
        &self.budget
    }
    fn generator_count(&self) -> Option<usize> {
        Some(self.p + self.q)
    }
    fn special_point_at(&self, g: usize, _stage: usize) -> Result<Element> {
        Ok(Element::Function(self.generator(g)?))
    }
    fn unit_at(&self, _stage: usize) -> Result<Element> {
        Ok(Element::Function(HalfPowerMatrixFunction::identity(self.p * self.q)))
    }
    fn unit_linear(&self) -> Option<Vec<(usize, GaussianRational)>> {
        None
    }
    fn generator_bound(&self, g: usize) -> Result<Dyadic> {
        self.generator(g)?;
        Ok(Dyadic::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::StarPoly;
    use crate::scalar::rat;

    #[test]
    fn generators_are_members_with_norm_one() {
        let z = DimensionDropPresentation::new(2, 3, Budget::default()).unwrap();
        for g in 0..5 {
            let f = z.generator(g).unwrap();
            let (d0, d1) = dd_boundary(&f, 2, 3, 20).unwrap();
            assert!(d0.is_zero() && d1.is_zero(), "generator {g}");
            let n = dd_norm(&f, 2, 3, 12, &z.budget).unwrap();
            assert!(n.contains_rational(&rat(1, 1)));
        }
        assert!(z.generator(5).is_err());
        // sum a_i* a_i + sum b_j* b_j = 1
        let mut p = StarPoly::zero();
        for g in 0..5 {
            p = p.add(&StarPoly::gen(g).adjoint().mul(&StarPoly::gen(g)));
        }
        let Element::Function(f) = z.evaluate(&p).unwrap() else { panic!() };
        assert_eq!(f, HalfPowerMatrixFunction::identity(6));
    }

    #[test]
    fn non_members_are_rejected() {
        let f = HalfPowerMatrixFunction::constant(RationalMatrix::unit(6, 0, 1));
        assert!(dd_norm(&f, 2, 3, 8, &Budget::default()).is_err());
    }
}
