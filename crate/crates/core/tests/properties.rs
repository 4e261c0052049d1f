mod common;

use common::{norm_in, svd_norm, to_nalgebra};
use cstar_effective::ast::Ast;
use cstar_effective::calculus::taylor_order;
use cstar_effective::coding::{decode_poly, encode_poly, pair, unpair};
use cstar_effective::dyadic::DyadicInterval;
use cstar_effective::function::HalfPowerMatrixFunction;
use cstar_effective::matrix::{matrix_norm, RationalMatrix};
use cstar_effective::poly::StarPoly;
use cstar_effective::scalar::{GaussianRational, Rational};
use cstar_effective::uhf::LegPermutation;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=9).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn gaussian() -> impl Strategy<Value = GaussianRational> {
    (rational(), rational()).prop_map(|(a, b)| GaussianRational::new(a, b))
}

fn matrix(n: usize) -> impl Strategy<Value = RationalMatrix> {
    prop::collection::vec(gaussian(), n * n).prop_map(move |v| {
        let mut m = RationalMatrix::zero(n);
        for (k, z) in v.into_iter().enumerate() {
            m.set(k / n, k % n, z);
        }
        m
    })
}

fn poly() -> impl Strategy<Value = StarPoly> {
    let letter = (0usize..6, any::<bool>()).prop_map(|(g, s)| if s { StarPoly::gen_star(g) } else { StarPoly::gen(g) });
    let word = prop::collection::vec(letter, 0..4).prop_map(|ls| StarPoly::product(&ls));
    prop::collection::vec((word, gaussian()), 0..4)
        .prop_map(|ts| ts.iter().fold(StarPoly::zero(), |acc, (w, c)| acc.add(&w.scale(c))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codes_round_trip(p in poly()) {
        prop_assert_eq!(decode_poly(&encode_poly(&p)), p);
    }

    #[test]
    fn ast_round_trip(p in poly()) {
        let ast = Ast::from_poly(&p);
        let back = Ast::parse(&ast.to_string()).unwrap().to_poly(None).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn pairing_is_a_bijection(m in 0u64..100_000, p in 0u64..100_000) {
        let c = pair(&BigUint::from(m), &BigUint::from(p));
        prop_assert_eq!(unpair(&c), (BigUint::from(m), BigUint::from(p)));
    }

    #[test]
    fn interval_ops_contain_exact_results(a in rational(), b in rational()) {
        let (x, y) = (DyadicInterval::from_rational(&a, 40), DyadicInterval::from_rational(&b, 40));
        prop_assert!(x.add(&y).contains_rational(&(&a + &b)));
        prop_assert!(x.mul(&y).contains_rational(&(&a * &b)));
        prop_assert!(x.sub(&y).contains_rational(&(&a - &b)));
    }

    #[test]
    fn norm_enclosure_is_sound(m in (1usize..7).prop_flat_map(matrix)) {
        let e = matrix_norm(&m, 40);
        prop_assert!(e.width() <= cstar_effective::dyadic::Dyadic::pow2(-40));
        prop_assert!(norm_in(&m, e.lo(), e.hi()));
    }

    #[test]
    fn norm_is_submultiplicative(a in matrix(3), b in matrix(3)) {
        let ab = matrix_norm(&a.mul(&b), 30);
        let bound = matrix_norm(&a, 30).hi().mul(matrix_norm(&b, 30).hi());
        prop_assert!(ab.lo() <= &bound);
    }

    #[test]
    fn kron_norm_is_a_cross_norm(x in matrix(2), y in matrix(3)) {
        let nx = svd_norm(&to_nalgebra(&x));
        let ny = svd_norm(&to_nalgebra(&y));
        let e = matrix_norm(&x.kron(&y), 40);
        let want = nx * ny;
        prop_assert!(e.lo().to_f64() <= want * (1.0 + 1e-12) + 1e-12 && want <= e.hi().to_f64() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn taylor_order_is_monotone(a in 1u32..1000, b in 1u32..1000) {
        let (lo, hi) = (a.min(b), a.max(b));
        let d = |x: u32| Rational::new(1.into(), x.into());
        prop_assert!(taylor_order(&d(hi)).unwrap() >= taylor_order(&d(lo)).unwrap());
    }

    #[test]
    fn leg_permutations_are_permutation_unitaries(perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
        let p = LegPermutation::new(perm).unwrap();
        let m = p.matrix();
        prop_assert!(m.is_unitary());
        let mut seen = p.index_map();
        seen.sort();
        prop_assert_eq!(seen, (0..32).collect::<Vec<_>>());
    }

    #[test]
    fn sup_norm_dominates_samples(c in gaussian(), d in gaussian()) {
        // c iota + d (1 - iota)^{1/2}; with t = 1 - s^2 the samples are Lipschitz in s
        let f = HalfPowerMatrixFunction::iota(2).scale(&c).add(&HalfPowerMatrixFunction::one_minus_iota_sqrt(2).scale(&d));
        let s = f.sup_norm(20, 100_000).unwrap().enclosure;
        let z = |g: &GaussianRational| (g.re.to_f64().unwrap(), g.im.to_f64().unwrap());
        let ((cr, ci), (dr, di)) = (z(&c), z(&d));
        let n = 4000;
        let mut best = 0f64;
        for j in 0..=n {
            let u = j as f64 / n as f64;
            let t = 1.0 - u * u;
            best = best.max(((cr * t + dr * u).powi(2) + (ci * t + di * u).powi(2)).sqrt());
        }
        let lip = 2.0 * cr.hypot(ci) + dr.hypot(di);
        prop_assert!(best <= s.hi().to_f64() * (1.0 + 1e-12) + 1e-12);
        prop_assert!(s.lo().to_f64() <= best + lip / (2.0 * n as f64) + 1e-9);
    }
}
