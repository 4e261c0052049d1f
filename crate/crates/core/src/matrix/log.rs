//! Certified logarithm of an exact rational unitary.
//!
//! A branch angle `theta = pi * a / 2^t` is chosen away from the spectrum,
//! the eigendecomposition from a double Schur factorization is polished in
//! high precision, and the resulting self-adjoint dyadic matrix `h` is
//! certified: `theta <= h <= theta + 2 pi` by two definiteness tests and
//! `|exp(ih) - u| < 2^-k` by an interval exponential.

use nalgebra::{Complex, DMatrix};

use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval, Round};
use crate::error::{Error, Result};
use crate::matrix::exp::matrix_exp;
use crate::matrix::hp::{Hc, HcMatrix};
use crate::matrix::norm::{certify_positive_definite, interval_matrix_norm, Definiteness};
use crate::matrix::{IntervalMatrix, RationalMatrix};

/// Branch angle `pi * num / 2^den_log2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchAngle {
    pub num: i64,
    pub den_log2: u32,
}

impl BranchAngle {
    pub fn enclosure(&self, prec: u32) -> DyadicInterval {
        DyadicInterval::pi(prec + 8)
            .mul_dyadic(&Dyadic::from_i64(self.num).shl(-(self.den_log2 as i64)))
            .round_out(prec)
    }

    pub fn to_f64(&self) -> f64 {
        std::f64::consts::PI * self.num as f64 / (1u64 << self.den_log2) as f64
    }
}

#[derive(Clone, Debug)]
pub struct SchurLog {
    /// Self-adjoint enclosure (a single exact point matrix).
    pub h: IntervalMatrix,
    pub theta: BranchAngle,
    /// One enclosure per eigenvalue, each inside `[theta, theta + 2 pi]`.
    pub eigenvalues: Vec<DyadicInterval>,
    /// Certified upper bound on `|exp(ih) - u|`.
    pub exp_error: Dyadic,
    /// Certified upper bound on `|h|`.
    pub norm_bound: Dyadic,
}

/// Angle in `(-pi, pi]` refined by Newton steps to about `prec` bits.
fn refine_arg(z: &Hc, prec: u32) -> Dyadic {
    let (x, y) = z.to_f64();
    let mut phi = Dyadic::from_f64(y.atan2(x));
    for _ in 0..8 {
        let (c, s) = DyadicInterval::point(phi.clone()).cos_sin(prec + 16);
        let (c, s) = (c.mid(), s.mid());
        // Im(z e^{-i phi}) / |z| ~ sin(arg z - phi)
        let im = z.im.mul(&c).sub(&z.re.mul(&s));
        let re = z.re.mul(&c).add(&z.im.mul(&s));
        if re.is_zero() {
            break;
        }
        let step = im.div(&re, prec + 8, Round::Down);
        phi = phi.add(&step).round(prec + 8, Round::Down);
        if step.is_zero() || step.abs().floor_log2() < -(prec as i64) - 4 {
            break;
        }
    }
    phi
}

fn choose_theta(angles: &[f64]) -> BranchAngle {
    let n = angles.len().max(1);
    let t = ((8 * n) as f64).log2().ceil() as u32 + 1;
    let steps = 1i64 << t;
    let margin = std::f64::consts::PI / (2.0 * n as f64);
    let dist = |theta: f64| {
        angles
            .iter()
            .map(|&a| {
                let d = (a - theta).rem_euclid(2.0 * std::f64::consts::PI);
                d.min(2.0 * std::f64::consts::PI - d)
            })
            .fold(f64::INFINITY, f64::min)
    };
    // Prefer the principal branch: theta = -pi, then move outward.
    for off in 0..=steps {
        for sign in [1i64, -1] {
            let num = -steps + sign * off;
            let ba = BranchAngle { num, den_log2: t };
            if dist(ba.to_f64()) >= margin {
                return ba;
            }
            if off == 0 {
                break;
            }
        }
    }
    unreachable!("an arc of length 2 pi / n always leaves room")
}

/// Certified logarithm `h` of an exactly unitary `u` with `|exp(ih) - u| < 2^-k`.
pub fn schur_log(u: &RationalMatrix, k: u32) -> Result<SchurLog> {
    if !u.is_unitary() {
        return Err(Error::InvalidInput(
            "schur_log needs an exactly unitary rational matrix".into(),
        ));
    }
    let n = u.dim();
    let wp = k + 64;
    let uf = u.to_f64();
    let m = DMatrix::from_fn(n, n, |i, j| Complex::new(uf[i * n + j].0, uf[i * n + j].1));
    let (q, t) = m.schur().unpack();
    let angles: Vec<f64> = (0..n).map(|j| t[(j, j)].arg()).collect();
    let theta = choose_theta(&angles);

    let mut qh = HcMatrix::zero(n);
    for i in 0..n {
        for j in 0..n {
            qh.a[i * n + j] = Hc::from_f64(q[(i, j)].re, q[(i, j)].im);
        }
    }
    let uh = HcMatrix {
        n,
        a: IntervalMatrix::from_rational(u, wp + 8)
            .entries()
            .iter()
            .map(Hc::from_interval_mid)
            .collect(),
    };
    let three_half = Hc {
        re: Dyadic::from_i64(3).shl(-1),
        im: Dyadic::zero(),
    };
    let half = Hc {
        re: Dyadic::pow2(-1),
        im: Dyadic::zero(),
    };
    let mut d;
    for _iter in 0..8 {
        // Newton-Schulz re-orthonormalization.
        for _ in 0..2 {
            let qq = qh.adjoint().mul(&qh, wp);
            let corr = HcMatrix::identity(n)
                .scale(&three_half, wp)
                .sub(&qq.scale(&half, wp));
            qh = qh.mul(&corr, wp);
        }
        d = qh.adjoint().mul(&uh, wp).mul(&qh, wp);
        let mut x = HcMatrix::zero(n);
        let mut biggest = Dyadic::zero();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let e = d.get(i, j);
                let g = d.get(j, j).sub(d.get(i, i));
                let e2 = e.abs_sqr();
                if e2.is_zero() {
                    continue;
                }
                if g.abs_sqr() > e2.shl(4) {
                    let xij = e.div(&g, wp);
                    biggest = biggest.max_with(&xij.re.abs()).max_with(&xij.im.abs());
                    x.a[i * n + j] = xij;
                }
            }
        }
        qh = qh.mul(&HcMatrix::identity(n).add(&x), wp);
        if biggest.is_zero() || biggest.floor_log2() < -(wp as i64) + 8 {
            break;
        }
    }
    for _ in 0..2 {
        let qq = qh.adjoint().mul(&qh, wp);
        let corr = HcMatrix::identity(n)
            .scale(&three_half, wp)
            .sub(&qq.scale(&half, wp));
        qh = qh.mul(&corr, wp);
    }
    d = qh.adjoint().mul(&uh, wp).mul(&qh, wp);

    // Branch-adjusted eigen-angles.
    let two_pi = DyadicInterval::pi(wp + 8).shl(1).mid();
    let th = theta.enclosure(wp + 8).mid();
    let mut lam = Vec::with_capacity(n);
    for j in 0..n {
        let mut a = refine_arg(d.get(j, j), wp);
        while a < th {
            a = a.add(&two_pi);
        }
        while a >= th.add(&two_pi) {
            a = a.sub(&two_pi);
        }
        lam.push(a);
    }
    let mut diag = HcMatrix::zero(n);
    for j in 0..n {
        diag.a[j * n + j] = Hc {
            re: lam[j].clone(),
            im: Dyadic::zero(),
        };
    }
    let hh = qh.mul(&diag, wp).mul(&qh.adjoint(), wp);
    let h = IntervalMatrix::from_fn(n, |i, j| {
        ComplexInterval::point(hh.get(i, j).re.clone(), hh.get(i, j).im.clone())
    })
    .hermitize()
    .mid();

    certify_log(u, h, theta, k)
}

/// Certify a candidate self-adjoint point matrix `h` as a logarithm of `u`.
pub fn certify_log(u: &RationalMatrix, h: IntervalMatrix, theta: BranchAngle, k: u32) -> Result<SchurLog> {
    let n = h.dim();
    let wp = k + 64;
    if !h.is_hermitian_symmetric() {
        return Err(Error::Certification("logarithm candidate is not self-adjoint".into()));
    }
    let th = theta.enclosure(wp);
    let top = th.add(&DyadicInterval::pi(wp).shl(1));
    let shifted = |c: &DyadicInterval, sign: i64| {
        IntervalMatrix::from_fn(n, |i, j| {
            let hij = if sign > 0 { h.get(i, j).clone() } else { h.get(i, j).neg() };
            if i == j {
                let cc = if sign > 0 { c.neg() } else { c.clone() };
                hij.add(&ComplexInterval::real(cc))
            } else {
                hij
            }
        })
    };
    // h - theta > 0 and theta + 2 pi - h > 0.
    if certify_positive_definite(&shifted(&th, 1), wp) != Definiteness::Positive
        || certify_positive_definite(&shifted(&top, -1), wp) != Definiteness::Positive
    {
        return Err(Error::Certification(
            "could not certify the spectrum of the logarithm inside the branch".into(),
        ));
    }
    let e = matrix_exp(&h.mul_i(), k + 12);
    let diff = e.sub(&IntervalMatrix::from_rational(u, wp));
    let err = interval_matrix_norm(&diff, k + 8).hi().clone();
    if err >= Dyadic::pow2(-(k as i64)) {
        return Err(Error::Certification(format!(
            "exp(ih) misses u by up to {:e}",
            err.to_f64()
        )));
    }
    let eigenvalues = eigen_enclosures(&h, &th, &top, wp);
    let norm_bound = interval_matrix_norm(&h, 20).hi().clone();
    Ok(SchurLog {
        h,
        theta,
        eigenvalues,
        exp_error: err,
        norm_bound,
    })
}

/// Eigenvalue enclosures of a Hermitian point matrix from residual bounds,
/// intersected with the certified branch interval.
fn eigen_enclosures(
    h: &IntervalMatrix,
    lo: &DyadicInterval,
    hi: &DyadicInterval,
    prec: u32,
) -> Vec<DyadicInterval> {
    let n = h.dim();
    let f = h.to_f64();
    let m = DMatrix::from_fn(n, n, |i, j| Complex::new(f[i * n + j].0, f[i * n + j].1));
    let eig = m.symmetric_eigen();
    let branch = DyadicInterval::new(lo.lo().clone(), hi.hi().clone());
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let v: Vec<ComplexInterval> = (0..n)
            .map(|i| {
                let z = eig.eigenvectors[(i, j)];
                ComplexInterval::point(Dyadic::from_f64(z.re), Dyadic::from_f64(z.im))
            })
            .collect();
        let lam = DyadicInterval::point(Dyadic::from_f64(eig.eigenvalues[j]));
        let hv = h.mul_vec(&v, prec);
        let mut res = DyadicInterval::zero();
        let mut vn = DyadicInterval::zero();
        for i in 0..n {
            let r = hv[i].sub(&v[i].mul_real(&lam));
            res = res.add(&r.abs_sqr());
            vn = vn.add(&v[i].abs_sqr());
        }
        // Some eigenvalue lies within |h v - lam v| / |v| of lam.
        let rad = res
            .div(&vn, prec)
            .and_then(|q| q.sqrt(prec))
            .map(|q| q.hi().clone())
            .unwrap_or_else(|| Dyadic::from_i64(16));
        let enc = lam.widen(&rad);
        out.push(enc.intersect(&branch).unwrap_or(branch.clone()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational;

    #[test]
    fn identity_has_zero_log() {
        let r = schur_log(&RationalMatrix::identity(3), 30).unwrap();
        assert!(r.h.contains_rational(&RationalMatrix::zero(3)));
    }

    #[test]
    fn minus_one_has_log_pi() {
        let u = RationalMatrix::scalar(1, GaussianRational::from_i64(-1));
        let r = schur_log(&u, 30).unwrap();
        let pi = DyadicInterval::pi(60);
        let h = &r.h.get(0, 0).re;
        assert!(h.sub(&pi).mag() < Dyadic::pow2(-30));
    }

    #[test]
    fn diag_one_i() {
        let mut u = RationalMatrix::identity(2);
        u.set(1, 1, GaussianRational::i());
        let r = schur_log(&u, 30).unwrap();
        assert!(r.exp_error < Dyadic::pow2(-30));
        let half_pi = DyadicInterval::pi(60).shl(-1);
        assert!(r.h.get(1, 1).re.sub(&half_pi).mag() < Dyadic::pow2(-28));
    }

    #[test]
    fn non_unitary_rejected() {
        let u = RationalMatrix::scalar(2, GaussianRational::from_i64(2));
        assert!(schur_log(&u, 10).is_err());
    }
}
