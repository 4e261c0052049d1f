//! Taylor order for `x^{-1/2}`, truncated-series polar parts and exponential
//! unitary paths.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::matrix::exp::expi_scaled;
use crate::matrix::log::SchurLog;
use crate::matrix::{interval_matrix_norm, matrix_norm, schur_log, IntervalMatrix, RationalMatrix};
use crate::scalar::{rat, GaussianRational, Rational};

/// `N(delta) = ceil(log2(1/delta)) + 1`; the tail of the binomial series of
/// `x^{-1/2}` about 1 after degree `N` is below `2^-N <= delta / 2` on
/// `[1/2, 3/2]` because every coefficient is at most 1.
pub fn taylor_order(delta: &Rational) -> Result<u32> {
    if !delta.is_positive() {
        return Err(Error::InvalidInput("taylor_order needs delta > 0".into()));
    }
    if *delta > Rational::one() {
        return Err(Error::InvalidInput("taylor_order needs delta <= 1".into()));
    }
    let inv = delta.recip();
    // ceil(log2(inv)) for inv >= 1
    let mut c = 0u32;
    let mut p = Rational::one();
    while p < inv {
        p *= rat(2, 1);
        c += 1;
    }
    Ok(c + 1)
}

/// Coefficients `binom(k - 1/2, k) = binom(2k, k) / 4^k`, `k = 0..=n`.
pub fn binomial_coefficients(n: u32) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut c = Rational::one();
    for k in 0..=n {
        out.push(c.clone());
        // c_{k+1} = c_k * (2k+1) / (2k+2)
        c = c * Rational::new(BigInt::from(2 * k + 1), BigInt::from(2 * k + 2));
    }
    out
}

/// `s_n(x) = sum_{k<=n} binom(k-1/2, k) (1-x)^k` for a rational scalar.
pub fn s_n_scalar(n: u32, x: &Rational) -> Rational {
    let y = Rational::one() - x;
    let coeffs = binomial_coefficients(n);
    let mut acc = Rational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * &y + c;
    }
    acc
}

/// A rational matrix certified to be an `eps`-almost unitary of norm at most 1.
#[derive(Clone, Debug)]
pub struct AlmostUnitary {
    pub a: RationalMatrix,
    pub eps: Rational,
    /// Certified upper bound on `|a|`.
    pub norm_upper: Rational,
}

impl AlmostUnitary {
    /// Certify `|a*a - 1| < eps`, `|aa* - 1| < eps` and `|a| <= 1`. Exact
    /// unitaries sit on the boundary of the last condition, so an upper bound
    /// up to `1 + 2^-30` is accepted and carried into the error bound.
    pub fn certify(a: RationalMatrix, eps: Rational) -> Result<Self> {
        if eps > rat(1, 2) {
            return Err(Error::InvalidInput(
                "the series for (a*a)^{-1/2} needs eps <= 1/2".into(),
            ));
        }
        let n = a.dim();
        let id = RationalMatrix::identity(n);
        let e = Dyadic::from_rational(&eps, 64, crate::dyadic::Round::Down);
        let d1 = matrix_norm(&a.adjoint().mul(&a).sub(&id), 40);
        let d2 = matrix_norm(&a.mul(&a.adjoint()).sub(&id), 40);
        if d1.hi() >= &e || d2.hi() >= &e {
            return Err(Error::Certification(format!(
                "not an eps-almost unitary: defects up to {:e}, {:e}",
                d1.hi().to_f64(),
                d2.hi().to_f64()
            )));
        }
        let nu = matrix_norm(&a, 40).hi().clone();
        if nu > Dyadic::one().add(&Dyadic::pow2(-30)) {
            return Err(Error::Certification("almost unitary must have norm at most 1".into()));
        }
        Ok(AlmostUnitary { a, eps, norm_upper: nu.to_rational() })
    }
}

/// Result of the truncated polar part.
#[derive(Clone, Debug)]
pub struct OmegaApprox {
    pub point: RationalMatrix,
    pub order: u32,
    /// Certified bound on `|omega(a) - point|`.
    pub error_bound: Rational,
}

/// `omega_n(a) = a s_N(a*a)` with `N = N(2^-n)`, so that
/// `|omega(a) - omega_n(a)| <= |a| 2^-N < 2^-n` since `N = n + 1`.
pub fn omega_n(au: &AlmostUnitary, n: u32) -> Result<OmegaApprox> {
    let delta = Rational::new(BigInt::one(), BigInt::one() << n);
    let order = taylor_order(&delta)?;
    let a = &au.a;
    let dim = a.dim();
    let id = RationalMatrix::identity(dim);
    let y = id.sub(&a.adjoint().mul(a));
    let coeffs = binomial_coefficients(order);
    let mut acc = RationalMatrix::zero(dim);
    for c in coeffs.iter().rev() {
        acc = acc.mul(&y).add(&RationalMatrix::scalar(dim, GaussianRational::real(c.clone())));
    }
    let point = a.mul(&acc);
    Ok(OmegaApprox {
        point,
        order,
        error_bound: &au.norm_upper / Rational::from_integer(BigInt::one() << order),
    })
}

/// Exponential path `t -> exp(i(1-t) h_u) exp(i t h_v)` between two exact
/// unitaries, with certified logarithms.
#[derive(Clone, Debug)]
pub struct UnitaryPath {
    pub u: RationalMatrix,
    pub v: RationalMatrix,
    pub log_u: SchurLog,
    pub log_v: SchurLog,
}

impl UnitaryPath {
    /// Logarithms are certified to `|exp(ih) - u| < 2^-k`.
    pub fn new(u: &RationalMatrix, v: &RationalMatrix, k: u32) -> Result<Self> {
        if u.dim() != v.dim() {
            return Err(Error::InvalidInput("path endpoints must have equal dimension".into()));
        }
        Ok(UnitaryPath {
            u: u.clone(),
            v: v.clone(),
            log_u: schur_log(u, k)?,
            log_v: schur_log(v, k)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    /// `|h_u| + |h_v|`, an upper bound on the Lipschitz constant.
    pub fn lipschitz(&self) -> Dyadic {
        self.log_u.norm_bound.add(&self.log_v.norm_bound)
    }

    /// Enclosure of the path at `t` in `[0, 1]` with width about `2^-k`.
    /// At `t = 0` and `t = 1` the enclosure is widened by the certified
    /// logarithm error so that it contains `u`, respectively `v`.
    pub fn eval(&self, t: &Rational, k: u32) -> Result<IntervalMatrix> {
        if t.is_negative() || *t > Rational::one() {
            return Err(Error::InvalidInput("path parameter outside [0, 1]".into()));
        }
        let prec = k + 64;
        let ti = DyadicInterval::from_rational(t, prec);
        let si = DyadicInterval::one().sub(&ti);
        let a = expi_scaled(&self.log_u.h, &si, k + 8);
        let b = expi_scaled(&self.log_v.h, &ti, k + 8);
        let w = a.mul(&b, prec);
        if t.is_zero() {
            return Ok(w.widen(&self.log_u.exp_error));
        }
        if t.is_one() {
            return Ok(w.widen(&self.log_v.exp_error));
        }
        Ok(w)
    }

    /// Certified upper bound on `|w(t)* w(t) - 1|`.
    pub fn unitarity_defect(&self, t: &Rational, k: u32) -> Result<Dyadic> {
        let w = self.eval(t, k)?;
        let prec = k + 64;
        let d = w.adjoint().mul(&w, prec).sub(&IntervalMatrix::identity(self.dim()));
        Ok(interval_matrix_norm(&d, k).hi().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_order_frozen_values() {
        assert_eq!(taylor_order(&rat(1, 1)).unwrap(), 1);
        assert_eq!(taylor_order(&rat(1, 4)).unwrap(), 3);
        assert_eq!(taylor_order(&Rational::new(1.into(), (1 << 20).into())).unwrap(), 21);
        assert!(taylor_order(&rat(0, 1)).is_err());
        assert!(taylor_order(&rat(-1, 3)).is_err());
    }

    #[test]
    fn binomial_coefficients_match_central_binomials() {
        let c = binomial_coefficients(4);
        assert_eq!(c, vec![rat(1, 1), rat(1, 2), rat(3, 8), rat(5, 16), rat(35, 128)]);
    }

    #[test]
    fn omega_of_unitary_is_close() {
        let mut u = RationalMatrix::zero(2);
        u.set(0, 1, GaussianRational::new(rat(3, 5), rat(4, 5)));
        u.set(1, 0, GaussianRational::one());
        let au = AlmostUnitary::certify(u.clone(), rat(1, 4)).unwrap();
        let w = omega_n(&au, 10).unwrap();
        assert_eq!(w.point, u);
    }

    #[test]
    fn omega_of_scaled_unitary() {
        let u = RationalMatrix::unit(2, 0, 1).add(&RationalMatrix::unit(2, 1, 0));
        let a = u.scale_rational(&rat(15, 16));
        let au = AlmostUnitary::certify(a, rat(1, 4)).unwrap();
        let w = omega_n(&au, 10).unwrap();
        let d = matrix_norm(&w.point.sub(&u), 30);
        assert!(d.hi() < &Dyadic::pow2(-10));
    }

    #[test]
    fn eps_above_half_rejected() {
        let u = RationalMatrix::identity(2);
        assert!(AlmostUnitary::certify(u, rat(3, 4)).is_err());
    }
}
