use cstar_effective::budget::Budget;
use cstar_effective::coding::pair_usize;
use cstar_effective::intertwine::{IntertwiningState, Setting, UhfLegs};
use cstar_effective::matrix::matrix_norm;
use cstar_effective::poly::StarPoly;
use cstar_effective::scalar::{pow2, Rational};

fn demo(stages: usize) -> IntertwiningState {
    let b = Budget::default();
    let s = Setting::from_descriptors("uhf:2^inf", "tensor(uhf:2^inf,uhf:2^inf)", "id-tensor-unit", &b).unwrap();
    let mut st = IntertwiningState::new(s, Box::new(UhfLegs), b, 30);
    st.ensure_stages(stages).unwrap();
    st
}

#[test]
fn leg_supplier_meets_every_stage() {
    let st = demo(4);
    assert_eq!(st.records().len(), 4);
    for r in st.records() {
        assert!(r.from_supplier, "stage {:?} fell back to enumeration", r.stage);
        assert!(r.margins.max().to_rational() < r.schedule.eta);
    }
}

#[test]
fn limit_map_is_close_to_multiplicative() {
    let st = demo(5);
    let iso = st.iso();
    let m = 2u32;
    let gens: Vec<StarPoly> = (0..4).map(|g| StarPoly::gen(pair_usize(1, g))).collect();
    for a in &gens {
        for b in &gens {
            let pa = iso.psi_approx(a, m).unwrap();
            let pb = iso.psi_approx(b, m).unwrap();
            let pab = iso.psi_approx(&a.mul(b), m).unwrap();
            assert_eq!(pa.stage, pb.stage);
            assert_eq!(pa.stage, pab.stage);
            let defect = matrix_norm(&pab.matrix.sub(&pa.matrix.mul(&pb.matrix)), 20);
            // each approximant is within 2^-m of psi, and generators have norm 1
            let bound = pow2(-(m as i64)) * Rational::from_integer(4.into());
            assert!(defect.hi().to_rational() <= bound, "defect {} for {a:?} {b:?}", defect.hi());
        }
    }
}

#[test]
fn cauchy_tail_and_first_index() {
    let st = demo(5);
    let iso = st.iso();
    for g in 0..4 {
        let a = StarPoly::gen(pair_usize(1, g));
        let c = iso.verify_cau(&a, 2).unwrap();
        assert!(c.n <= 3);
        for (i, d) in iso.cauchy_differences(&a).unwrap().iter().enumerate() {
            assert!(*d < pow2(-(i as i64 + 2)));
        }
    }
}

#[test]
fn too_few_stages_is_infeasible() {
    let st = demo(2);
    let a = StarPoly::gen(pair_usize(1, 0));
    assert!(matches!(st.iso().verify_cau(&a, 2), Err(cstar_effective::error::Error::Infeasible(_))));
}
