//! Prime dimension drop algebras and the Jiang-Su inductive system.
//!
//! Stage `m` is `Z_{p,q}` with `p_0 = 2`, `q_0 = 3`; `k, l` are the first two
//! primes above `2pq`, `p' = kp`, `q' = lq`, `r = kl mod q'`, `s = kl mod p'`.
//! The connecting map is
//! `Phi(f) = w* diag(f∘xi_1, ..., f∘xi_{kl}) w` with `w` the exponential path
//! from `u` to `v`, and `xi_i` equal to `t/2` for `i <= r`, `1/2` for
//! `r < i <= kl - s` and `(t+1)/2` above.

pub mod dimdrop;
pub mod perm;
pub mod phi;
pub mod primes;
pub mod system;
pub mod verify;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::Reparam;
use primes::{next_prime, PrimeCertificate};

pub use dimdrop::{dd_norm, DimensionDropPresentation};
pub use perm::{build_u, build_v, Permutation};
pub use phi::{phi, JiangSuMap, PhiImage};
pub use system::{jiangsu_presentation, scalar_value, JiangSuPresentation};

/// Exact parameters of stage `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JiangSuStage {
    pub m: u32,
    #[serde(serialize_with = "as_string")]
    pub p: BigUint,
    #[serde(serialize_with = "as_string")]
    pub q: BigUint,
    #[serde(serialize_with = "as_string")]
    pub k: BigUint,
    #[serde(serialize_with = "as_string")]
    pub l: BigUint,
    #[serde(serialize_with = "as_string")]
    pub p1: BigUint,
    #[serde(serialize_with = "as_string")]
    pub q1: BigUint,
    #[serde(serialize_with = "as_string")]
    pub r: BigUint,
    #[serde(serialize_with = "as_string")]
    pub s: BigUint,
    /// `r q = alpha q'`, `kl - r = beta q'`
    #[serde(serialize_with = "as_string")]
    pub alpha: BigUint,
    #[serde(serialize_with = "as_string")]
    pub beta: BigUint,
    /// `s p = alpha_v p'`, `kl - s = beta_v p'`
    #[serde(serialize_with = "as_string")]
    pub alpha_v: BigUint,
    #[serde(serialize_with = "as_string")]
    pub beta_v: BigUint,
    #[serde(skip)]
    pub certificates: (PrimeCertificate, PrimeCertificate),
}

fn as_string<S: serde::Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn exact_div(a: &BigUint, b: &BigUint, what: &str) -> Result<BigUint> {
    let (d, r) = a.div_rem(b);
    if !r.is_zero() {
        return Err(Error::Certification(format!("{what}: {a} is not divisible by {b}")));
    }
    Ok(d)
}

fn params_from(m: u32, p: BigUint, q: BigUint) -> Result<JiangSuStage> {
    let two_pq = BigUint::from(2u32) * &p * &q;
    let (k, ck) = next_prime(&two_pq);
    let (l, cl) = next_prime(&k);
    let kl = &k * &l;
    let p1 = &k * &p;
    let q1 = &l * &q;
    let r = &kl % &q1;
    let s = &kl % &p1;
    let alpha = exact_div(&(&r * &q), &q1, "r q = alpha q'")?;
    let beta = exact_div(&(&kl - &r), &q1, "kl - r = beta q'")?;
    let alpha_v = exact_div(&(&s * &p), &p1, "s p = alpha' p'")?;
    let beta_v = exact_div(&(&kl - &s), &p1, "kl - s = beta' p'")?;
    if !p1.gcd(&q1).to_u32().is_some_and(|g| g == 1) {
        return Err(Error::Certification(format!("gcd({p1}, {q1}) != 1")));
    }
    if &r + &s > kl {
        return Err(Error::Certification("r + s exceeds kl".into()));
    }
    Ok(JiangSuStage {
        m,
        p,
        q,
        k,
        l,
        p1,
        q1,
        r,
        s,
        alpha,
        beta,
        alpha_v,
        beta_v,
        certificates: (ck, cl),
    })
}

/// Parameters of stages `0..=m`, computed exactly; every divisibility and
/// coprimality requirement is checked and fails loudly.
pub fn stage_chain(m: u32) -> Result<Vec<JiangSuStage>> {
    let mut out = Vec::new();
    let (mut p, mut q) = (BigUint::from(2u32), BigUint::from(3u32));
    for i in 0..=m {
        let st = params_from(i, p, q)?;
        p = st.p1.clone();
        q = st.q1.clone();
        out.push(st);
    }
    Ok(out)
}

pub fn stage_params(m: u32) -> Result<JiangSuStage> {
    Ok(stage_chain(m)?.pop().expect("nonempty"))
}

/// Machine-size view of a stage whose matrices fit in memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallStage {
    pub m: u32,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub l: usize,
    pub p1: usize,
    pub q1: usize,
    pub r: usize,
    pub s: usize,
    pub alpha: usize,
    pub beta: usize,
    pub alpha_v: usize,
    pub beta_v: usize,
}

impl SmallStage {
    /// Fails with an infeasibility error when `p' q'` exceeds `max_dim`.
    pub fn from_stage(st: &JiangSuStage, max_dim: usize) -> Result<Self> {
        let dim = &st.p1 * &st.q1;
        let fits = dim.to_usize().is_some_and(|d| d <= max_dim);
        if !fits {
            return Err(Error::Infeasible(format!(
                "Jiang-Su stage {} maps into matrices of size {dim}; numerics are limited to {max_dim}",
                st.m
            )));
        }
        let u = |x: &BigUint| x.to_usize().expect("fits");
        Ok(SmallStage {
            m: st.m,
            p: u(&st.p),
            q: u(&st.q),
            k: u(&st.k),
            l: u(&st.l),
            p1: u(&st.p1),
            q1: u(&st.q1),
            r: u(&st.r),
            s: u(&st.s),
            alpha: u(&st.alpha),
            beta: u(&st.beta),
            alpha_v: u(&st.alpha_v),
            beta_v: u(&st.beta_v),
        })
    }

    pub fn slots(&self) -> usize {
        self.k * self.l
    }

    /// `n = pq`, the block size of a slot.
    pub fn block(&self) -> usize {
        self.p * self.q
    }

    pub fn dim(&self) -> usize {
        self.p1 * self.q1
    }

    /// Reparametrization used in slot `i` (0-based).
    pub fn xi(&self, slot: usize) -> Reparam {
        if slot < self.r {
            Reparam::Lower
        } else if slot < self.slots() - self.s {
            Reparam::Middle
        } else {
            Reparam::Upper
        }
    }
}
