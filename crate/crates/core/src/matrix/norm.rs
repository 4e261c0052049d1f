//! Certified operator norms.
//!
//! For a point matrix `M` the largest eigenvalue of `G = M*M` is enclosed from
//! below by an exact Rayleigh quotient `|Mv|^2 / |v|^2` and from above by a
//! shift `mu` for which `mu I - G` is certified positive definite through an
//! interval LDL* factorization. Candidate vectors come from a double-precision
//! SVD and, when that is not accurate enough, from inverse iteration in high
//! precision.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix};

use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval, Round};
use crate::matrix::hp::{normalize, Hc, HcMatrix};
use crate::matrix::{IntervalMatrix, RationalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    Positive,
    NotPositive,
    Unknown,
}

/// Certify positive definiteness of a Hermitian interval matrix by interval
/// LDL*. A certified nonpositive pivot after certified positive ones proves
/// that some member (in fact every member) is not positive definite.
pub fn certify_positive_definite(a: &IntervalMatrix, prec: u32) -> Definiteness {
    let n = a.dim();
    let mut d: Vec<DyadicInterval> = Vec::with_capacity(n);
    let mut l: Vec<ComplexInterval> = vec![ComplexInterval::zero(); n * n];
    for j in 0..n {
        let mut dj = a.get(j, j).re.clone();
        for k in 0..j {
            let ljk = &l[j * n + k];
            dj = dj.sub(&ljk.abs_sqr().mul(&d[k]));
        }
        let dj = dj.round_out(prec);
        if !dj.is_positive() {
            return if dj.hi().is_positive() {
                Definiteness::Unknown
            } else {
                Definiteness::NotPositive
            };
        }
        let inv = dj.recip(prec).expect("positive pivot");
        for i in j + 1..n {
            let mut s = a.get(i, j).clone();
            for k in 0..j {
                let t = l[i * n + k].mul(&l[j * n + k].conj()).mul_real(&d[k]);
                s = s.sub(&t);
            }
            l[i * n + j] = s.mul_real(&inv).round_out(prec);
        }
        d.push(dj);
    }
    Definiteness::Positive
}

fn to_dmatrix(n: usize, v: &[(f64, f64)]) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = v[i * n + j];
        Complex::new(a, b)
    })
}

/// Largest singular value and right singular vector from a double SVD.
fn top_singular(n: usize, v: &[(f64, f64)]) -> (f64, Vec<(f64, f64)>) {
    let m = to_dmatrix(n, v);
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return (0.0, vec![(1.0, 0.0); n]);
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (imax, smax) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let vec = (0..n)
        .map(|j| {
            let z = vt[(imax, j)].conj();
            (z.re, z.im)
        })
        .collect();
    (smax.max(0.0), vec)
}

/// Lower end of `|Mv|^2 / |v|^2` for an exact vector `v`.
fn rayleigh_lower(m: &IntervalMatrix, v: &[Hc], prec: u32) -> Dyadic {
    let vi: Vec<ComplexInterval> = v.iter().map(|z| z.to_interval()).collect();
    let w = m.mul_vec(&vi, prec + 16);
    let mut num = DyadicInterval::zero();
    for z in &w {
        num = num.add(&z.abs_sqr());
    }
    let mut den = Dyadic::zero();
    for z in v {
        den = den.add(&z.abs_sqr());
    }
    if den.is_zero() {
        return Dyadic::zero();
    }
    let lo = num.lo().clone();
    if !lo.is_positive() {
        return Dyadic::zero();
    }
    lo.div(&den, prec, Round::Down)
}

/// Refine `v` toward the top eigenvector of `G` by shifted inverse iteration.
fn inverse_iteration(g: &HcMatrix, shift: &Dyadic, v: &mut Vec<Hc>, steps: usize, prec: u32) {
    let n = g.n;
    let mut a = g.clone();
    for i in 0..n {
        a.a[i * n + i] = a.a[i * n + i].sub(&Hc {
            re: shift.clone(),
            im: Dyadic::zero(),
        });
    }
    for _ in 0..steps {
        match a.solve(v, prec) {
            Some(x) => {
                *v = x;
                normalize(v, prec);
            }
            None => return,
        }
    }
}

/// Certified norm of a point matrix (every entry an exact dyadic).
fn point_norm(m: &IntervalMatrix, k: u32) -> DyadicInterval {
    let n = m.dim();
    if n == 0 || m.entries().iter().all(|z| z.is_zero()) {
        return DyadicInterval::zero();
    }
    if n == 1 {
        let p = k + 8;
        let s = m.get(0, 0).abs_sqr();
        return s.sqrt(p).expect("nonnegative").round_out(p);
    }
    let f = m.to_f64();
    let (smax, v0) = top_singular(n, &f);
    let scale_bits = if smax > 0.0 { smax.log2().ceil().max(0.0) as u32 } else { 0 };
    let mut prec = k + 2 * scale_bits + 64;
    let mut v: Vec<Hc> = v0.iter().map(|&(a, b)| Hc::from_f64(a, b)).collect();
    let mut refined = false;
    for _round in 0..8 {
        let g = m.adjoint().mul(m, prec + 32).hermitize();
        let lam_lo = rayleigh_lower(m, &v, prec + 16);
        // Gap so that sqrt(lam + gap) - sqrt(lam) is about 2^-(k+3).
        let sigma = if smax > 0.0 { smax } else { 1.0 };
        let gap = Dyadic::from_f64(sigma)
            .shl(-(k as i64) - 2)
            .round(24, Round::Up)
            .max_with(&Dyadic::pow2(-(2 * k as i64) - 8));
        let mu = lam_lo.add(&gap);
        let shifted = IntervalMatrix::from_fn(n, |i, j| {
            let gij = g.get(i, j).neg();
            if i == j {
                gij.add(&ComplexInterval::real(DyadicInterval::point(mu.clone())))
            } else {
                gij
            }
        });
        match certify_positive_definite(&shifted, prec + 16) {
            Definiteness::Positive => {
                let lo = lam_lo.sqrt(prec, Round::Down);
                let hi = mu.sqrt(prec, Round::Up);
                let r = DyadicInterval::new(lo, hi);
                if r.width() <= Dyadic::pow2(-(k as i64)) {
                    return r;
                }
                prec += 32;
            }
            Definiteness::NotPositive => {
                let gh = HcMatrix {
                    n,
                    a: g.entries().iter().map(Hc::from_interval_mid).collect(),
                };
                let est = Dyadic::from_f64(smax * smax * (1.0 + 1e-12));
                let shift = est.max_with(&mu).add(&gap);
                inverse_iteration(&gh, &shift, &mut v, if refined { 6 } else { 3 }, prec + 32);
                refined = true;
            }
            Definiteness::Unknown => {
                prec += 48;
            }
        }
    }
    // Fallback: crude but certified enclosure.
    let lam_lo = rayleigh_lower(m, &v, prec);
    let fro = m.frobenius_upper(prec);
    DyadicInterval::new(lam_lo.sqrt(prec, Round::Down), fro)
}

/// Certified operator norm of an interval matrix: the norm of its midpoint
/// widened by a bound on the radius.
pub fn interval_matrix_norm(m: &IntervalMatrix, k: u32) -> DyadicInterval {
    if m.is_point() {
        return point_norm(m, k);
    }
    let c = point_norm(&m.mid(), k + 1);
    let r = m.rad_norm_upper(k + 16);
    let lo = c.lo().sub(&r);
    let lo = if lo.is_negative() { Dyadic::zero() } else { lo };
    DyadicInterval::new(lo, c.hi().add(&r))
}

/// Certified operator norm of an exact matrix, width at most `2^-k`.
///
/// The matrix is split into the connected blocks of its nonzero pattern and
/// identical blocks are computed once.
pub fn matrix_norm(m: &RationalMatrix, k: u32) -> DyadicInterval {
    let mut best: Option<DyadicInterval> = None;
    let mut seen: HashMap<RationalMatrix, ()> = HashMap::new();
    for (rows, cols) in m.components() {
        let block = m.submatrix(&rows, &cols);
        if seen.insert(block.clone(), ()).is_some() {
            continue;
        }
        let r = rational_block_norm(&block, k);
        best = Some(match best {
            None => r,
            Some(b) => b.max(&r),
        });
    }
    best.unwrap_or_else(DyadicInterval::zero)
}

fn is_dyadic(m: &RationalMatrix) -> bool {
    m.iter().all(|(_, z)| {
        let d1 = z.re.denom();
        let d2 = z.im.denom();
        (d1 & (d1 - 1u32)) == 0u32.into() && (d2 & (d2 - 1u32)) == 0u32.into()
    })
}

fn rational_block_norm(b: &RationalMatrix, k: u32) -> DyadicInterval {
    if is_dyadic(b) {
        return point_norm(&IntervalMatrix::from_rational(b, 64), k);
    }
    // Entries rounded to intervals far below the target width.
    let im = IntervalMatrix::from_rational(b, k + 64 + b.dim().ilog2() + 1);
    interval_matrix_norm(&im, k + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, GaussianRational};

    #[test]
    fn simple_norms() {
        let e11 = RationalMatrix::unit(3, 0, 0);
        let r = matrix_norm(&e11, 20);
        assert!(r.contains(&Dyadic::one()));
        let shift = RationalMatrix::unit(2, 0, 1).scale(&GaussianRational::from_i64(2));
        assert!(matrix_norm(&shift, 20).contains(&Dyadic::from_i64(2)));
        assert_eq!(matrix_norm(&RationalMatrix::zero(4), 10), DyadicInterval::zero());
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[1,1],[0,1]] has norm (1+sqrt5)/2.
        let m = RationalMatrix::from_i64_rows(&[&[1, 1], &[0, 1]]);
        let r = matrix_norm(&m, 60);
        assert!(r.width() <= Dyadic::pow2(-60));
        let phi2 = r.sqr();
        // phi^2 = phi + 1
        assert!(phi2.overlaps(&r.add(&DyadicInterval::one())));
    }

    #[test]
    fn rational_entries() {
        let mut m = RationalMatrix::zero(2);
        m.set(0, 0, GaussianRational::new(rat(1, 3), rat(1, 7)));
        m.set(1, 1, GaussianRational::real(rat(-2, 5)));
        let r = matrix_norm(&m, 40);
        // max(|1/3 + i/7|, 2/5) = 2/5
        assert!(r.contains_rational(&rat(2, 5)));
        assert!(r.width() <= Dyadic::pow2(-40));
    }
}
