//! Primality with certificates: deterministic Miller-Rabin below
//! 3.3 * 10^24 and recursive Pocklington certificates above.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

const MR_BASES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Miller-Rabin with the first 13 prime bases is exact below this bound.
fn mr_bound() -> BigUint {
    BigUint::parse_bytes(b"3317044064679887385961981", 10).expect("literal")
}

fn small_primes(limit: u32) -> Vec<u32> {
    let mut sieve = vec![true; limit as usize + 1];
    let mut out = Vec::new();
    for i in 2..=limit as usize {
        if sieve[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= limit as usize {
                sieve[j] = false;
                j += i;
            }
        }
    }
    out
}

/// One Miller-Rabin round; `false` proves `n` composite.
fn mr_round(n: &BigUint, a: &BigUint) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = a.modpow(&d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == nm1 {
            return true;
        }
    }
    false
}

/// Miller-Rabin with the 13 fixed bases: exact below 3.3 * 10^24, a probable
/// prime test above. A `false` answer is always a proof of compositeness.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    for &p in &MR_BASES {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    MR_BASES.iter().all(|&a| mr_round(n, &BigUint::from(a)))
}

/// Pollard-Brent rho; returns a nontrivial factor of a composite `n`.
fn rho(n: &BigUint) -> BigUint {
    if n.is_even() {
        return BigUint::from(2u32);
    }
    let one = BigUint::one();
    let mut c = BigUint::one();
    loop {
        let f = |x: &BigUint| (x * x + &c) % n;
        let (mut x, mut y, mut d) = (BigUint::from(2u32), BigUint::from(2u32), one.clone());
        while d == one {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            d = diff.gcd(n);
        }
        if &d != n {
            return d;
        }
        c += 1u32;
    }
}

/// Prime factorization (with multiplicity, sorted).
pub fn factor(n: &BigUint) -> Vec<BigUint> {
    let mut out = Vec::new();
    let mut m = n.clone();
    for p in small_primes(1 << 12) {
        let p = BigUint::from(p);
        while (&m % &p).is_zero() {
            out.push(p.clone());
            m /= &p;
        }
    }
    let mut stack = vec![m];
    while let Some(x) = stack.pop() {
        if x.is_one() {
            continue;
        }
        if is_probable_prime(&x) {
            out.push(x);
            continue;
        }
        let d = rho(&x);
        stack.push(&x / &d);
        stack.push(d);
    }
    out.sort();
    out
}

/// A primality certificate.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(tag = "kind")]
pub enum PrimeCertificate {
    /// Deterministic Miller-Rabin (n below 3.3 * 10^24).
    MillerRabin { n: String },
    /// Pocklington: for every prime q | n-1 a witness `a` with
    /// a^(n-1) = 1 and gcd(a^((n-1)/q) - 1, n) = 1, with certificates for the q.
    Pocklington { n: String, witnesses: Vec<(String, u32)>, factors: Vec<PrimeCertificate> },
}

/// Proves `n` prime, or returns `None` if it is composite.
pub fn prove_prime(n: &BigUint) -> Option<PrimeCertificate> {
    if !is_probable_prime(n) {
        return None;
    }
    if n < &mr_bound() {
        return Some(PrimeCertificate::MillerRabin { n: n.to_string() });
    }
    let one = BigUint::one();
    let nm1 = n - &one;
    let mut qs = factor(&nm1);
    qs.dedup();
    let mut witnesses = Vec::new();
    let mut certs = Vec::new();
    for q in &qs {
        let e = &nm1 / q;
        let a = (2u32..1000).find(|&a| {
            let a = BigUint::from(a);
            a.modpow(&nm1, n).is_one() && {
                let t = a.modpow(&e, n);
                t != BigUint::zero() && (&t + n - &one).gcd(n).is_one()
            }
        })?;
        witnesses.push((q.to_string(), a));
        certs.push(prove_prime(q)?);
    }
    Some(PrimeCertificate::Pocklington { n: n.to_string(), witnesses, factors: certs })
}

/// Smallest prime strictly greater than `n`, with its certificate.
pub fn next_prime(n: &BigUint) -> (BigUint, PrimeCertificate) {
    let mut c = n + 1u32;
    loop {
        if let Some(cert) = prove_prime(&c) {
            return (c, cert);
        }
        c += 1u32;
    }
}

/// Deterministic trial division, for small cross-checks.
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Checks a certificate independently of how it was produced.
pub fn verify_certificate(c: &PrimeCertificate) -> bool {
    match c {
        PrimeCertificate::MillerRabin { n } => {
            let n: BigUint = n.parse().expect("decimal");
            n < mr_bound() && is_probable_prime(&n)
        }
        PrimeCertificate::Pocklington { n, witnesses, factors } => {
            let n: BigUint = n.parse().expect("decimal");
            let one = BigUint::one();
            let nm1 = &n - &one;
            // n - 1 must be fully factored by the listed primes
            let mut rest = nm1.clone();
            for (q, a) in witnesses {
                let q: BigUint = q.parse().expect("decimal");
                if !(&nm1 % &q).is_zero() {
                    return false;
                }
                while (&rest % &q).is_zero() {
                    rest /= &q;
                }
                let a = BigUint::from(*a);
                if !a.modpow(&nm1, &n).is_one() {
                    return false;
                }
                let t = a.modpow(&(&nm1 / &q), &n);
                if !(&t + &n - &one).gcd(&n).is_one() {
                    return false;
                }
            }
            let qs_ok = factors.len() == witnesses.len()
                && factors.iter().zip(witnesses).all(|(f, (q, _))| {
                    let fq = match f {
                        PrimeCertificate::MillerRabin { n } | PrimeCertificate::Pocklington { n, .. } => n,
                    };
                    fq == q && verify_certificate(f)
                });
            rest.is_one() && qs_ok
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_with_trial_division() {
        for n in 0u64..3000 {
            assert_eq!(is_probable_prime(&BigUint::from(n)), is_prime_trial(n), "n = {n}");
        }
    }

    #[test]
    fn pocklington_for_large_primes() {
        let n: BigUint = "6577339140877086798310100078297".parse().unwrap();
        let c = prove_prime(&n).expect("prime");
        assert!(matches!(c, PrimeCertificate::Pocklington { .. }));
        assert!(verify_certificate(&c));
        let comp = &n * BigUint::from(3u32);
        assert!(prove_prime(&comp).is_none());
    }

    #[test]
    fn next_prime_small() {
        assert_eq!(next_prime(&BigUint::from(12u32)).0, BigUint::from(13u32));
        assert_eq!(next_prime(&BigUint::from(13u32)).0, BigUint::from(17u32));
    }
}
