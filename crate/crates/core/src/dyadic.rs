//! Dyadic rationals and outward-rounded dyadic interval arithmetic.
//!
//! A [`Dyadic`] is an exact value `mantissa * 2^exponent`. A [`DyadicInterval`]
//! is a closed enclosure `[lo, hi]`; every operation that cannot be carried out
//! exactly rounds `lo` down and `hi` up, so the result always contains the true
//! value. Precision arguments count significant bits of the mantissa.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::{GaussianRational, Rational};

/// Exact dyadic rational `mantissa * 2^exponent`, normalized so the mantissa is
/// odd (or the value is zero with exponent 0).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
}

fn shr_floor(m: &BigInt, s: u64) -> BigInt {
    if m.sign() != Sign::Minus {
        m >> s
    } else {
        let mag = -m;
        let one = BigInt::one();
        -((mag + ((&one << s) - &one)) >> s)
    }
}

fn shr_ceil(m: &BigInt, s: u64) -> BigInt {
    -shr_floor(&-m, s)
}

impl Dyadic {
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        if mantissa.is_zero() {
            return Self::zero();
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        Dyadic {
            mantissa: mantissa >> tz,
            exponent: exponent + tz as i64,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic::from_i64(1)
    }

    pub fn from_i64(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Dyadic::new(v, 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: e,
        }
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite double has no dyadic value");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        Dyadic::new(BigInt::from(m) * sign, e)
    }

    /// Nearest double (ties and overflow handled loosely; for estimates only).
    pub fn to_f64(&self) -> f64 {
        if self.mantissa.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        let (m, e) = if bits > 60 {
            let s = (bits - 60) as u64;
            (shr_floor(&self.mantissa, s), self.exponent + s as i64)
        } else {
            (self.mantissa.clone(), self.exponent)
        };
        let mf = m.to_f64().unwrap_or(0.0);
        if e > 2000 {
            return mf.signum() * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0;
        }
        mf * 2f64.powi(e.clamp(-1000, 1000) as i32) * 2f64.powi((e - e.clamp(-1000, 1000)) as i32)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    pub fn signum(&self) -> i32 {
        match self.mantissa.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Bit length of the mantissa magnitude.
    pub fn bits(&self) -> u64 {
        self.mantissa.bits()
    }

    /// `floor(log2 |x|)` for nonzero `x`.
    pub fn floor_log2(&self) -> i64 {
        assert!(!self.is_zero());
        self.exponent + self.bits() as i64 - 1
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as u64;
        let b = &other.mantissa << (other.exponent - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        Dyadic {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: self.exponent + other.exponent,
        }
    }

    /// Multiply by `2^k`.
    pub fn shl(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return Self::zero();
        }
        Dyadic {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + k,
        }
    }

    /// Round to at most `prec` significant bits in the given direction.
    pub fn round(&self, prec: u32, dir: Round) -> Dyadic {
        let bits = self.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let s = bits - prec as u64;
        let m = match dir {
            Round::Down => shr_floor(&self.mantissa, s),
            Round::Up => shr_ceil(&self.mantissa, s),
        };
        Dyadic::new(m, self.exponent + s as i64)
    }

    /// Round to a multiple of `2^e` in the given direction.
    pub fn round_to_exponent(&self, e: i64, dir: Round) -> Dyadic {
        if self.is_zero() || self.exponent >= e {
            return self.clone();
        }
        let s = (e - self.exponent) as u64;
        let m = match dir {
            Round::Down => shr_floor(&self.mantissa, s),
            Round::Up => shr_ceil(&self.mantissa, s),
        };
        Dyadic::new(m, e)
    }

    pub fn to_rational(&self) -> Rational {
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa << self.exponent as u64)
        } else {
            BigRational::new(
                self.mantissa.clone(),
                BigInt::one() << (-self.exponent) as u64,
            )
        }
    }

    /// Directed rounding of a rational to a dyadic with `prec` significant bits.
    pub fn from_rational(r: &Rational, prec: u32, dir: Round) -> Dyadic {
        if r.is_zero() {
            return Self::zero();
        }
        let num = r.numer();
        let den = r.denom();
        let shift = prec as i64 + 2 - (num.bits() as i64 - den.bits() as i64);
        let scaled = if shift >= 0 {
            num << shift as u64
        } else {
            shr_floor(num, (-shift) as u64)
        };
        // Exact when shift < 0 would lose bits; redo with correct rounding.
        let (q, exact) = if shift >= 0 {
            let (q, rem) = scaled.div_mod_floor(den);
            (q, rem.is_zero())
        } else {
            let denom_scaled = den << (-shift) as u64;
            let (q, rem) = num.div_mod_floor(&denom_scaled);
            (q, rem.is_zero())
        };
        let q = match dir {
            Round::Down => q,
            Round::Up => {
                if exact {
                    q
                } else {
                    q + 1
                }
            }
        };
        Dyadic::new(q, -shift).round(prec, dir)
    }

    /// Directed-rounded quotient.
    pub fn div(&self, other: &Dyadic, prec: u32, dir: Round) -> Dyadic {
        assert!(!other.is_zero(), "dyadic division by zero");
        Dyadic::from_rational(&(self.to_rational() / other.to_rational()), prec, dir)
    }

    /// Directed-rounded square root of a nonnegative dyadic.
    pub fn sqrt(&self, prec: u32, dir: Round) -> Dyadic {
        assert!(!self.is_negative(), "square root of a negative dyadic");
        if self.is_zero() {
            return Self::zero();
        }
        let bits = self.bits() as i64;
        let mut s = 2 * prec as i64 + 4 - bits;
        if s < 0 {
            s = 0;
        }
        if (self.exponent - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let m = &self.mantissa << s as u64;
        let mu = m.magnitude().clone();
        let r = mu.sqrt();
        let exact = &r * &r == mu;
        let r = BigInt::from(r);
        let r = match dir {
            Round::Down => r,
            Round::Up => {
                if exact {
                    r
                } else {
                    r + 1
                }
            }
        };
        Dyadic::new(r, (self.exponent - s) / 2).round(prec, dir)
    }

    pub fn min_with(&self, other: &Dyadic) -> Dyadic {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn max_with(&self, other: &Dyadic) -> Dyadic {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Smallest `e` with `|x| <= 2^e` (for nonzero `x`).
    pub fn ceil_log2(&self) -> i64 {
        let f = self.floor_log2();
        if self.mantissa.abs().is_one() {
            f
        } else {
            f + 1
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as u64;
        let b = &other.mantissa << (other.exponent - e) as u64;
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_rational())
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (~{:e})", self.to_rational(), self.to_f64())
    }
}

/// Closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: {lo:?} > {hi:?}");
        DyadicInterval { lo, hi }
    }

    pub fn point(d: Dyadic) -> Self {
        DyadicInterval {
            lo: d.clone(),
            hi: d,
        }
    }

    pub fn zero() -> Self {
        Self::point(Dyadic::zero())
    }

    pub fn one() -> Self {
        Self::point(Dyadic::one())
    }

    pub fn from_i64(v: i64) -> Self {
        Self::point(Dyadic::from_i64(v))
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        DyadicInterval {
            lo: Dyadic::from_rational(r, prec, Round::Down),
            hi: Dyadic::from_rational(r, prec, Round::Up),
        }
    }

    /// Enclosure of a double that is known only up to `rad` (both exact).
    pub fn from_f64_ball(mid: f64, rad: f64) -> Self {
        let m = Dyadic::from_f64(mid);
        let r = Dyadic::from_f64(rad.abs());
        DyadicInterval::new(m.sub(&r), m.add(&r))
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    /// Midpoint (exact).
    pub fn mid(&self) -> Dyadic {
        self.lo.add(&self.hi).shl(-1)
    }

    /// Half-width (exact).
    pub fn rad(&self) -> Dyadic {
        self.width().shl(-1)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo.to_rational() <= *r && *r <= self.hi.to_rational()
    }

    pub fn contains_interval(&self, other: &DyadicInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &DyadicInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &DyadicInterval) -> DyadicInterval {
        DyadicInterval {
            lo: self.lo.min_with(&other.lo),
            hi: self.hi.max_with(&other.hi),
        }
    }

    pub fn intersect(&self, other: &DyadicInterval) -> Option<DyadicInterval> {
        let lo = self.lo.max_with(&other.lo);
        let hi = self.hi.min_with(&other.hi);
        if lo <= hi {
            Some(DyadicInterval { lo, hi })
        } else {
            None
        }
    }

    /// Certifiably positive.
    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    /// Certifiably negative.
    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    pub fn contains_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> Dyadic {
        self.lo.abs().max_with(&self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> Dyadic {
        if self.contains_zero() {
            Dyadic::zero()
        } else {
            self.lo.abs().min_with(&self.hi.abs())
        }
    }

    pub fn neg(&self) -> Self {
        DyadicInterval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn abs(&self) -> Self {
        DyadicInterval {
            lo: self.mig(),
            hi: self.mag(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        DyadicInterval {
            lo: self.lo.add(&o.lo),
            hi: self.hi.add(&o.hi),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        DyadicInterval {
            lo: self.lo.sub(&o.hi),
            hi: self.hi.sub(&o.lo),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_point() && o.is_point() {
            return Self::point(self.lo.mul(&o.lo));
        }
        if !self.lo.is_negative() && !o.lo.is_negative() {
            return DyadicInterval {
                lo: self.lo.mul(&o.lo),
                hi: self.hi.mul(&o.hi),
            };
        }
        let c = [
            self.lo.mul(&o.lo),
            self.lo.mul(&o.hi),
            self.hi.mul(&o.lo),
            self.hi.mul(&o.hi),
        ];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        DyadicInterval { lo, hi }
    }

    pub fn mul_dyadic(&self, d: &Dyadic) -> Self {
        let a = self.lo.mul(d);
        let b = self.hi.mul(d);
        if d.is_negative() {
            DyadicInterval { lo: b, hi: a }
        } else {
            DyadicInterval { lo: a, hi: b }
        }
    }

    /// `x^2`, nonnegative even when the interval straddles zero.
    pub fn sqr(&self) -> Self {
        let lo = self.mig();
        let hi = self.mag();
        DyadicInterval {
            lo: lo.mul(&lo),
            hi: hi.mul(&hi),
        }
    }

    pub fn shl(&self, k: i64) -> Self {
        DyadicInterval {
            lo: self.lo.shl(k),
            hi: self.hi.shl(k),
        }
    }

    /// Round both endpoints outward to `prec` significant bits.
    pub fn round_out(&self, prec: u32) -> Self {
        DyadicInterval {
            lo: self.lo.round(prec, Round::Down),
            hi: self.hi.round(prec, Round::Up),
        }
    }

    /// Round both endpoints outward to multiples of `2^e`.
    pub fn round_out_abs(&self, e: i64) -> Self {
        DyadicInterval {
            lo: self.lo.round_to_exponent(e, Round::Down),
            hi: self.hi.round_to_exponent(e, Round::Up),
        }
    }

    /// Widen by `r >= 0` on both sides.
    pub fn widen(&self, r: &Dyadic) -> Self {
        DyadicInterval {
            lo: self.lo.sub(r),
            hi: self.hi.add(r),
        }
    }

    pub fn recip(&self, prec: u32) -> Option<Self> {
        if self.contains_zero() {
            return None;
        }
        let one = Dyadic::one();
        Some(DyadicInterval {
            lo: one.div(&self.hi, prec, Round::Down),
            hi: one.div(&self.lo, prec, Round::Up),
        })
    }

    pub fn div(&self, o: &Self, prec: u32) -> Option<Self> {
        if self.is_point() && o.is_point() && !o.lo.is_zero() {
            return Some(DyadicInterval {
                lo: self.lo.div(&o.lo, prec, Round::Down),
                hi: self.lo.div(&o.lo, prec, Round::Up),
            });
        }
        o.recip(prec + 4).map(|r| self.mul(&r).round_out(prec))
    }

    /// Square root of the nonnegative part; `None` if the interval is negative.
    pub fn sqrt(&self, prec: u32) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let lo = if self.lo.is_negative() {
            Dyadic::zero()
        } else {
            self.lo.sqrt(prec, Round::Down)
        };
        Some(DyadicInterval {
            lo,
            hi: self.hi.sqrt(prec, Round::Up),
        })
    }

    pub fn max(&self, o: &Self) -> Self {
        DyadicInterval {
            lo: self.lo.max_with(&o.lo),
            hi: self.hi.max_with(&o.hi),
        }
    }

    pub fn min(&self, o: &Self) -> Self {
        DyadicInterval {
            lo: self.lo.min_with(&o.lo),
            hi: self.hi.min_with(&o.hi),
        }
    }

    /// Enclosure of `pi`.
    pub fn pi(prec: u32) -> Self {
        pi_enclosure(prec)
    }

    /// Enclosure of `exp(x)`.
    pub fn exp(&self, prec: u32) -> Self {
        exp_enclosure(self, prec)
    }

    /// Enclosures of `(cos x, sin x)`.
    pub fn cos_sin(&self, prec: u32) -> (Self, Self) {
        cos_sin_enclosure(self, prec)
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:e}, {:e}] (w={:e})",
            self.lo.to_f64(),
            self.hi.to_f64(),
            self.width().to_f64()
        )
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `atan(1/x)` for an integer `x >= 2`, as an enclosure.
fn atan_inv(x: u64, prec: u32) -> DyadicInterval {
    let wp = prec + 16;
    let x2 = BigInt::from(x) * BigInt::from(x);
    let mut sum = DyadicInterval::zero();
    let mut pow = BigInt::from(x);
    let mut k: u64 = 0;
    loop {
        let denom = &pow * BigInt::from(2 * k + 1);
        let term = DyadicInterval::from_rational(&BigRational::new(BigInt::one(), denom.clone()), wp);
        if k % 2 == 0 {
            sum = sum.add(&term);
        } else {
            sum = sum.sub(&term);
        }
        let next = &pow * &x2;
        // Alternating series: the tail is bounded by the next term.
        let tail_bound = BigRational::new(BigInt::one(), &next * BigInt::from(2 * k + 3));
        let tail = Dyadic::from_rational(&tail_bound, wp, Round::Up);
        if tail.floor_log2() < -(wp as i64) - 2 {
            return sum.widen(&tail).round_out(wp);
        }
        pow = next;
        k += 1;
    }
}

static PI_CACHE: Mutex<Option<(u32, DyadicInterval)>> = Mutex::new(None);

fn pi_enclosure(prec: u32) -> DyadicInterval {
    {
        let guard = PI_CACHE.lock().unwrap();
        if let Some((p, v)) = guard.as_ref() {
            if *p >= prec {
                return v.round_out(prec);
            }
        }
    }
    let wp = prec.max(64) + 8;
    // Machin: pi = 16 atan(1/5) - 4 atan(1/239)
    let v = atan_inv(5, wp)
        .shl(4)
        .sub(&atan_inv(239, wp).shl(2))
        .round_out(wp);
    *PI_CACHE.lock().unwrap() = Some((wp, v.clone()));
    v.round_out(prec)
}

fn factorial_rational_bound(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Bound `m^(n) / n!` from above, for `m >= 0`.
fn taylor_tail(m: &Dyadic, n: u64, prec: u32) -> Dyadic {
    let mut p = Dyadic::one();
    for _ in 0..n {
        p = p.mul(m).round(prec, Round::Up);
    }
    let f = Dyadic::from_bigint(BigInt::from(factorial_rational_bound(n)));
    p.div(&f, prec, Round::Up)
}

fn exp_enclosure(x: &DyadicInterval, prec: u32) -> DyadicInterval {
    let wp = prec + 32;
    let m = x.mag();
    // Halve until |x| <= 1/2, then square back up.
    let mut s: i64 = 0;
    if !m.is_zero() {
        let l = m.ceil_log2();
        if l > -1 {
            s = l + 1;
        }
    }
    let y = x.shl(-s);
    let my = y.mag();
    let mut sum = DyadicInterval::one();
    let mut term = DyadicInterval::one();
    let mut k = 1u64;
    loop {
        term = term
            .mul(&y)
            .div(&DyadicInterval::from_i64(k as i64), wp)
            .unwrap();
        sum = sum.add(&term).round_out(wp);
        k += 1;
        // Remainder of the series after degree k-1 is at most 2 |y|^k / k! for |y| <= 1/2.
        let tail = taylor_tail(&my, k, wp).shl(1);
        if tail.is_zero() || tail.floor_log2() < -(wp as i64) {
            sum = sum.widen(&tail);
            break;
        }
    }
    for _ in 0..s {
        sum = sum.sqr().round_out(wp);
    }
    sum.round_out(prec)
}

fn cos_sin_enclosure(x: &DyadicInterval, prec: u32) -> (DyadicInterval, DyadicInterval) {
    let wp = prec + 32 + (x.mag().floor_log2_or_zero().max(0) as u32);
    let half_pi = pi_enclosure(wp).shl(-1);
    // Quadrant from the midpoint; r = x - q pi/2 is an exact enclosure.
    let q_est = (x.mid().to_f64() / std::f64::consts::FRAC_PI_2).round();
    let q = q_est as i64;
    let r = x
        .sub(&half_pi.mul(&DyadicInterval::from_i64(q)))
        .round_out(wp);
    let mr = r.mag();
    let mut c = DyadicInterval::one();
    let mut s = r.clone();
    let mut term_c = DyadicInterval::one();
    let mut term_s = r.clone();
    let r2 = r.sqr().round_out(wp);
    let mut k = 1u64;
    loop {
        term_c = term_c
            .mul(&r2)
            .div(&DyadicInterval::from_i64(((2 * k - 1) * (2 * k)) as i64), wp)
            .unwrap()
            .neg();
        term_s = term_s
            .mul(&r2)
            .div(&DyadicInterval::from_i64(((2 * k) * (2 * k + 1)) as i64), wp)
            .unwrap()
            .neg();
        c = c.add(&term_c).round_out(wp);
        s = s.add(&term_s).round_out(wp);
        k += 1;
        let tail = taylor_tail(&mr, 2 * k, wp);
        if tail.is_zero() || tail.floor_log2() < -(wp as i64) {
            c = c.widen(&tail);
            s = s.widen(&tail);
            break;
        }
    }
    let (c, s) = match q.rem_euclid(4) {
        0 => (c, s),
        1 => (s.neg(), c),
        2 => (c.neg(), s.neg()),
        _ => (s, c.neg()),
    };
    let unit = DyadicInterval::new(Dyadic::from_i64(-1), Dyadic::one());
    (
        c.intersect(&unit).unwrap_or(unit.clone()).round_out(prec),
        s.intersect(&unit).unwrap_or(unit).round_out(prec),
    )
}

impl Dyadic {
    fn floor_log2_or_zero(&self) -> i64 {
        if self.is_zero() {
            0
        } else {
            self.floor_log2()
        }
    }
}

/// Complex enclosure as a rectangle `re + i im`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ComplexInterval {
    pub re: DyadicInterval,
    pub im: DyadicInterval,
}

impl ComplexInterval {
    pub fn new(re: DyadicInterval, im: DyadicInterval) -> Self {
        ComplexInterval { re, im }
    }

    pub fn zero() -> Self {
        ComplexInterval::new(DyadicInterval::zero(), DyadicInterval::zero())
    }

    pub fn one() -> Self {
        ComplexInterval::new(DyadicInterval::one(), DyadicInterval::zero())
    }

    pub fn i() -> Self {
        ComplexInterval::new(DyadicInterval::zero(), DyadicInterval::one())
    }

    pub fn real(re: DyadicInterval) -> Self {
        ComplexInterval::new(re, DyadicInterval::zero())
    }

    pub fn point(re: Dyadic, im: Dyadic) -> Self {
        ComplexInterval::new(DyadicInterval::point(re), DyadicInterval::point(im))
    }

    pub fn from_gaussian(z: &GaussianRational, prec: u32) -> Self {
        ComplexInterval::new(
            DyadicInterval::from_rational(&z.re, prec),
            DyadicInterval::from_rational(&z.im, prec),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_point() && self.im.is_point() && self.re.lo().is_zero() && self.im.lo().is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexInterval::new(self.re.add(&o.re), self.im.add(&o.im))
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexInterval::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }

    pub fn neg(&self) -> Self {
        ComplexInterval::new(self.re.neg(), self.im.neg())
    }

    pub fn conj(&self) -> Self {
        ComplexInterval::new(self.re.clone(), self.im.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let im_zero = |z: &ComplexInterval| z.im.is_point() && z.im.lo().is_zero();
        if im_zero(self) && im_zero(o) {
            return ComplexInterval::real(self.re.mul(&o.re));
        }
        ComplexInterval::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }

    pub fn mul_real(&self, r: &DyadicInterval) -> Self {
        ComplexInterval::new(self.re.mul(r), self.im.mul(r))
    }

    /// Multiply by `i`.
    pub fn mul_i(&self) -> Self {
        ComplexInterval::new(self.im.neg(), self.re.clone())
    }

    pub fn shl(&self, k: i64) -> Self {
        ComplexInterval::new(self.re.shl(k), self.im.shl(k))
    }

    /// Enclosure of `|z|^2`.
    pub fn abs_sqr(&self) -> DyadicInterval {
        self.re.sqr().add(&self.im.sqr())
    }

    /// Upper bound on `|z|` over the rectangle.
    pub fn mag(&self, prec: u32) -> Dyadic {
        let a = self.re.mag();
        let b = self.im.mag();
        a.mul(&a).add(&b.mul(&b)).sqrt(prec, Round::Up)
    }

    pub fn round_out(&self, prec: u32) -> Self {
        ComplexInterval::new(self.re.round_out(prec), self.im.round_out(prec))
    }

    pub fn round_out_abs(&self, e: i64) -> Self {
        ComplexInterval::new(self.re.round_out_abs(e), self.im.round_out_abs(e))
    }

    pub fn widen(&self, r: &Dyadic) -> Self {
        ComplexInterval::new(self.re.widen(r), self.im.widen(r))
    }

    pub fn mid(&self) -> (Dyadic, Dyadic) {
        (self.re.mid(), self.im.mid())
    }

    /// Upper bound on the distance from the midpoint to any point of the rectangle.
    pub fn rad(&self, prec: u32) -> Dyadic {
        let a = self.re.rad();
        let b = self.im.rad();
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return b;
        }
        a.mul(&a).add(&b.mul(&b)).sqrt(prec, Round::Up)
    }

    pub fn contains_gaussian(&self, z: &GaussianRational) -> bool {
        self.re.contains_rational(&z.re) && self.im.contains_rational(&z.im)
    }

    pub fn contains_interval(&self, o: &ComplexInterval) -> bool {
        self.re.contains_interval(&o.re) && self.im.contains_interval(&o.im)
    }

    pub fn hull(&self, o: &Self) -> Self {
        ComplexInterval::new(self.re.hull(&o.re), self.im.hull(&o.im))
    }

    /// `exp(i x)` for real `x`.
    pub fn expi(x: &DyadicInterval, prec: u32) -> Self {
        let (c, s) = x.cos_sin(prec);
        ComplexInterval::new(c, s)
    }

    pub fn div_real(&self, r: &DyadicInterval, prec: u32) -> Option<Self> {
        Some(ComplexInterval::new(self.re.div(r, prec)?, self.im.div(r, prec)?))
    }
}

impl fmt::Debug for ComplexInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + i{:?}", self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn normalization_makes_mantissa_odd() {
        let d = Dyadic::new(BigInt::from(12), 0);
        assert_eq!(d.mantissa(), &BigInt::from(3));
        assert_eq!(d.exponent(), 2);
        assert!(Dyadic::new(BigInt::zero(), 7).is_zero());
    }

    #[test]
    fn rounding_is_directed() {
        let third = q(1, 3);
        let lo = Dyadic::from_rational(&third, 20, Round::Down);
        let hi = Dyadic::from_rational(&third, 20, Round::Up);
        assert!(lo.to_rational() < third && third < hi.to_rational());
        assert!(hi.sub(&lo).floor_log2() <= -20);
        let neg = Dyadic::from_rational(&-third.clone(), 20, Round::Down);
        assert!(neg.to_rational() < -third);
    }

    #[test]
    fn sqrt_enclosure() {
        let two = DyadicInterval::from_i64(2);
        let r = two.sqrt(80).unwrap();
        let sq = r.sqr();
        assert!(sq.contains(&Dyadic::from_i64(2)));
        assert!(r.width().floor_log2() <= -78);
        let quarter = DyadicInterval::from_rational(&q(1, 4), 30);
        assert!(quarter.sqrt(30).unwrap().contains_rational(&q(1, 2)));
    }

    #[test]
    fn pi_digits() {
        let p = DyadicInterval::pi(200);
        assert!(p.width().floor_log2() < -190);
        // 3.14159265358979323846264338327950288
        let lo = q(314159265358979323, 100000000000000000);
        let hi = q(314159265358979324, 100000000000000000);
        assert!(p.lo().to_rational() > lo && p.hi().to_rational() < hi);
    }

    #[test]
    fn cos_sin_of_pi_and_exp() {
        let p = DyadicInterval::pi(120);
        let (c, s) = p.cos_sin(100);
        assert!(c.contains(&Dyadic::from_i64(-1)));
        assert!(s.contains(&Dyadic::zero()));
        assert!(c.width().floor_log2() < -90);
        let (c, s) = DyadicInterval::from_i64(7).cos_sin(60);
        assert!((c.mid().to_f64() - 7f64.cos()).abs() < 1e-14);
        assert!((s.mid().to_f64() - 7f64.sin()).abs() < 1e-14);
        let e = DyadicInterval::one().exp(100);
        assert!((e.mid().to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!(e.width().floor_log2() < -90);
        let e = DyadicInterval::from_i64(-3).exp(60);
        assert!((e.mid().to_f64() - (-3f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn f64_roundtrip() {
        for x in [0.1, -3.75, 1e-300, 6.02e23] {
            assert_eq!(Dyadic::from_f64(x).to_f64(), x);
        }
    }
}
