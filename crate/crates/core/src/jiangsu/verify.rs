//! The homomorphism, boundary and isometry checks for `Phi_0` on the
//! special points of `Z_{2,3}` and their pairwise products.

use serde::Serialize;

use crate::ast::Ast;
use crate::budget::Budget;
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::Result;
use crate::function::HalfPowerMatrixFunction;
use crate::jiangsu::dimdrop::{dd_generator, dd_norm};
use crate::jiangsu::phi::JiangSuMap;
use crate::poly::StarPoly;
use crate::presentation::{Element, Presentation};
use crate::scalar::{rat, GaussianRational, Rational};

use super::DimensionDropPresentation;

/// Bounds are exact renderings of the rigorous floating-point upper bounds.
#[derive(Clone, Debug, Serialize)]
pub struct PhiSuiteReport {
    pub stage: u32,
    pub grid: Vec<String>,
    pub generators: usize,
    pub pairs: usize,
    pub multiplicativity_max: String,
    pub adjoint_max: String,
    pub unitality_max: String,
    pub boundary_max: String,
    pub tolerance: String,
    pub passed: bool,
}

fn exact(x: f64) -> String {
    Dyadic::from_f64(x).to_string()
}

/// `t = i/8`, `i = 0..=8`.
pub fn grid() -> Vec<Rational> {
    (0..=8).map(|i| rat(i, 8)).collect()
}

/// Multiplicativity on all ordered pairs of special points, adjoints and
/// unitality on the grid, and boundary membership of the images of the
/// special points and their pairwise products.
pub fn phi_suite(map: &JiangSuMap) -> Result<PhiSuiteReport> {
    let (p, q) = (map.stage.p, map.stage.q);
    let gens: Vec<HalfPowerMatrixFunction> = (0..p + q).map(|g| dd_generator(p, q, g)).collect::<Result<_>>()?;
    let mut prods = Vec::new();
    for x in &gens {
        for y in &gens {
            prods.push(x.mul(y));
        }
    }
    let (mut mult, mut adj, mut unit, mut bnd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let ts = grid();
    for t in &ts {
        for x in &gens {
            for y in &gens {
                mult = mult.max(map.multiplicativity_defect(x, y, t)?);
            }
        }
        for x in gens.iter().chain(&prods) {
            adj = adj.max(map.adjoint_defect(x, t)?);
        }
        unit = unit.max(map.unitality_defect(t)?);
    }
    for x in gens.iter().chain(&prods) {
        let (d0, d1) = map.boundary_defects(x)?;
        bnd = bnd.max(d0).max(d1);
    }
    let tol = 1.0 / 1024.0;
    Ok(PhiSuiteReport {
        stage: map.params.m,
        grid: ts.iter().map(|t| t.to_string()).collect(),
        generators: gens.len(),
        pairs: gens.len() * gens.len(),
        multiplicativity_max: exact(mult),
        adjoint_max: exact(adj),
        unitality_max: exact(unit),
        boundary_max: exact(bnd),
        tolerance: "1/1024".into(),
        passed: mult <= tol && adj <= tol && unit <= tol && bnd <= tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryRow {
    pub point: String,
    pub image_sup_norm: [String; 2],
    pub dd_norm: [String; 2],
    /// Upper bound on `| |Phi(f)| - |f| |`.
    pub gap: String,
}

/// Points of `Z_{2,3}` used for the isometry check: two special points, a
/// product, a scalar and a sum.
pub fn isometry_points() -> Vec<StarPoly> {
    let g = StarPoly::gen;
    let mut sum = StarPoly::zero();
    for i in 0..5 {
        sum = sum.add(&g(i).adjoint().mul(&g(i)));
    }
    vec![
        g(0),
        g(3),
        g(1).mul(&g(2)),
        StarPoly::scalar(GaussianRational::real(rat(3, 2))),
        sum.add(&g(4).scale(&GaussianRational::real(rat(-1, 2)))),
    ]
}

fn gap(a: &DyadicInterval, b: &DyadicInterval) -> Dyadic {
    let x = a.hi().sub(b.lo());
    let y = b.hi().sub(a.lo());
    x.max_with(&y)
}

pub fn isometry_check(map: &JiangSuMap, k: u32, budget: &Budget) -> Result<Vec<IsometryRow>> {
    let (p, q) = (map.stage.p, map.stage.q);
    let z = DimensionDropPresentation::new(p, q, budget.clone())?;
    let mut rows = Vec::new();
    for pt in isometry_points() {
        let f = match z.evaluate(&pt)? {
            Element::Function(f) => f,
            Element::Matrix(m) => HalfPowerMatrixFunction::constant(m),
        };
        let a = map.sup_norm(&f, k, budget)?;
        let b = dd_norm(&f, p, q, k, budget)?;
        rows.push(IsometryRow {
            point: Ast::from_poly(&pt).to_string(),
            image_sup_norm: [a.lo().to_string(), a.hi().to_string()],
            dd_norm: [b.lo().to_string(), b.hi().to_string()],
            gap: gap(&a, &b).to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isometry_gaps_are_small() {
        let budget = Budget::default();
        let map = JiangSuMap::new(0, &budget).unwrap();
        for r in isometry_check(&map, 12, &budget).unwrap() {
            let g: Rational = r.gap.parse().unwrap();
            assert!(g <= rat(1, 256), "{r:?}");
        }
    }
}
