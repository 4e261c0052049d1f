//! Exact rational and Gaussian-rational scalars.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Reduced fraction with positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// `2^e` exactly.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        BigRational::from_integer(BigInt::from(1) << e as u64)
    } else {
        BigRational::new(BigInt::from(1), BigInt::from(1) << (-e) as u64)
    }
}

/// Parse `"a"`, `"-a"` or `"a/b"` with integer `a`, nonzero integer `b`.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Exact fraction string: `"n"` or `"n/d"`.
pub fn rational_string(r: &Rational) -> String {
    format!("{r}")
}

/// `re + i im` with rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussianRational {
            re,
            im: Rational::zero(),
        }
    }

    pub fn from_i64(v: i64) -> Self {
        GaussianRational::real(rat_int(v))
    }

    pub fn zero() -> Self {
        GaussianRational::default()
    }

    pub fn one() -> Self {
        GaussianRational::from_i64(1)
    }

    pub fn i() -> Self {
        GaussianRational::new(Rational::zero(), Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), -&self.im)
    }

    /// `|z|^2`.
    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn scale(&self, r: &Rational) -> Self {
        GaussianRational::new(&self.re * r, &self.im * r)
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(GaussianRational::new(&self.re / &n, -&self.im / &n))
    }

    /// Upper bound on `|z|` as a rational (`|re| + |im|`).
    pub fn abs_upper(&self) -> Rational {
        self.re.abs() + self.im.abs()
    }

    /// Parse `"a/b"`, `"c/d i"`, `"a/b+c/d i"` or `"a/b-c/d i"` tokens.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("not an exact Gaussian rational: {s:?}"));
        if t.is_empty() {
            return Err(bad());
        }
        if let Some(body) = t.strip_suffix('i') {
            // Split at the last sign that is not the leading one.
            let split = body
                .char_indices()
                .filter(|&(k, c)| k > 0 && (c == '+' || c == '-'))
                .map(|(k, _)| k)
                .last();
            let (re, im) = match split {
                Some(k) => (&body[..k], &body[k..]),
                None => ("0", body),
            };
            let im = match im {
                "" | "+" => "1",
                "-" => "-1",
                other => other.strip_prefix('+').unwrap_or(other),
            };
            Ok(GaussianRational::new(
                parse_rational(re).map_err(|_| bad())?,
                parse_rational(im).map_err(|_| bad())?,
            ))
        } else {
            Ok(GaussianRational::real(parse_rational(&t).map_err(|_| bad())?))
        }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.im.is_negative() {
            write!(f, "{}{}i", self.re, self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: &GaussianRational) -> GaussianRational {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussianRational::real(&self.re * &o.re);
        }
        GaussianRational::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-&self.re, -&self.im)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for GaussianRational {
            type Output = GaussianRational;
            fn $m(self, o: GaussianRational) -> GaussianRational {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_roundtrip() {
        for s in ["1/2", "-3", "1/2+3/4i", "0+1i", "-1/3-2i", "5i", "-i"] {
            let z = GaussianRational::parse(s).unwrap();
            let again = GaussianRational::parse(&z.to_string()).unwrap();
            assert_eq!(z, again, "{s}");
        }
        assert_eq!(
            GaussianRational::parse("1/2 + 3/4 i").unwrap(),
            GaussianRational::new(rat(1, 2), rat(3, 4))
        );
        assert_eq!(GaussianRational::parse("-i").unwrap(), -GaussianRational::i());
        assert!(GaussianRational::parse("1/0").is_err());
        assert!(GaussianRational::parse("x").is_err());
    }

    #[test]
    fn field_ops() {
        let z = GaussianRational::new(rat(1, 2), rat(-2, 3));
        let w = z.inv().unwrap();
        assert!((&z * &w).is_one());
        assert_eq!((&z * &z.conj()).re, z.norm_sqr());
        assert_eq!((&GaussianRational::i() * &GaussianRational::i()), GaussianRational::from_i64(-1));
    }
}
