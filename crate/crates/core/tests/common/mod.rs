//! Test-only oracles: random rational inputs, 256-bit fixed-point complex
//! matrices, and double-precision SVD norms from nalgebra.
#![allow(dead_code)]

use cstar_effective::dyadic::Dyadic;
use cstar_effective::matrix::{IntervalMatrix, RationalMatrix};
use cstar_effective::scalar::{GaussianRational, Rational};
use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn random_rational(r: &mut ChaCha8Rng, num: i64, den: i64) -> Rational {
    rat(r.gen_range(-num..=num), r.gen_range(1..=den))
}

pub fn random_matrix(r: &mut ChaCha8Rng, n: usize, num: i64, den: i64, complex: bool) -> RationalMatrix {
    let mut m = RationalMatrix::zero(n);
    for i in 0..n {
        for j in 0..n {
            let im = if complex { random_rational(r, num, den) } else { Rational::zero() };
            m.set(i, j, GaussianRational::new(random_rational(r, num, den), im));
        }
    }
    m
}

/// Rational points on the unit circle.
const CIRCLE: [(i64, i64, i64); 5] = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25), (20, 21, 29)];

fn circle_point(r: &mut ChaCha8Rng) -> GaussianRational {
    let (a, b, c) = CIRCLE[r.gen_range(0..CIRCLE.len())];
    let (sa, sb) = (if r.gen() { 1 } else { -1 }, if r.gen() { 1 } else { -1 });
    let (a, b) = if r.gen() { (a, b) } else { (b, a) };
    GaussianRational::new(rat(sa * a, c), rat(sb * b, c))
}

/// Product of a permutation, unit-modulus phases and Givens rotations, all
/// with small rational entries; exactly unitary.
pub fn random_unitary(r: &mut ChaCha8Rng, n: usize, rotations: usize) -> RationalMatrix {
    let mut sigma: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        sigma.swap(i, r.gen_range(0..=i));
    }
    let mut u = RationalMatrix::permutation(&sigma);
    let mut d = RationalMatrix::zero(n);
    for i in 0..n {
        d.set(i, i, if r.gen_bool(0.5) { circle_point(r) } else { GaussianRational::one() });
    }
    u = u.mul(&d);
    if n < 2 {
        return u;
    }
    for _ in 0..rotations {
        let p = r.gen_range(0..n);
        let mut q = r.gen_range(0..n - 1);
        if q >= p {
            q += 1;
        }
        let z = circle_point(r);
        let (c, s) = (z.re.clone(), z.im.clone());
        let mut g = RationalMatrix::identity(n);
        g.set(p, p, GaussianRational::real(c.clone()));
        g.set(q, q, GaussianRational::real(c));
        g.set(p, q, GaussianRational::real(-s.clone()));
        g.set(q, p, GaussianRational::real(s));
        u = u.mul(&g);
    }
    u
}

pub fn to_nalgebra(m: &RationalMatrix) -> DMatrix<Complex<f64>> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| {
        let z = m.get(i, j);
        Complex::new(z.re.to_f64().unwrap(), z.im.to_f64().unwrap())
    })
}

/// Largest singular value in double precision.
pub fn svd_norm(m: &DMatrix<Complex<f64>>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub const P: u32 = 256;

/// Complex fixed point `(re + i im) 2^-P`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fx {
    pub re: BigInt,
    pub im: BigInt,
}

fn fx_of_rational(q: &Rational) -> BigInt {
    (q.numer() << P).div_floor(q.denom())
}

fn shr_round(x: BigInt) -> BigInt {
    (x + (BigInt::one() << (P - 1))) >> P
}

impl Fx {
    pub fn zero() -> Self {
        Fx { re: BigInt::zero(), im: BigInt::zero() }
    }
    pub fn one() -> Self {
        Fx { re: BigInt::one() << P, im: BigInt::zero() }
    }
    pub fn of(z: &GaussianRational) -> Self {
        Fx { re: fx_of_rational(&z.re), im: fx_of_rational(&z.im) }
    }
    pub fn of_dyadic(re: &Dyadic, im: &Dyadic) -> Self {
        Fx { re: fx_of_rational(&re.to_rational()), im: fx_of_rational(&im.to_rational()) }
    }
    pub fn add(&self, o: &Fx) -> Fx {
        Fx { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    pub fn sub(&self, o: &Fx) -> Fx {
        Fx { re: &self.re - &o.re, im: &self.im - &o.im }
    }
    pub fn mul(&self, o: &Fx) -> Fx {
        Fx {
            re: shr_round(&self.re * &o.re - &self.im * &o.im),
            im: shr_round(&self.re * &o.im + &self.im * &o.re),
        }
    }
    pub fn conj(&self) -> Fx {
        Fx { re: self.re.clone(), im: -&self.im }
    }
    pub fn to_f64(&self) -> Complex<f64> {
        let s = 2f64.powi(-(P as i32) / 2);
        let h = |x: &BigInt| ((x >> (P / 2)).to_f64().unwrap()) * s;
        Complex::new(h(&self.re), h(&self.im))
    }
    /// `x / d` for a small positive integer `d`.
    pub fn div_int(&self, d: i64) -> Fx {
        Fx { re: self.re.div_floor(&BigInt::from(d)), im: self.im.div_floor(&BigInt::from(d)) }
    }
}

#[derive(Clone, Debug)]
pub struct FxMatrix {
    pub n: usize,
    pub e: Vec<Fx>,
}

impl FxMatrix {
    pub fn zero(n: usize) -> Self {
        FxMatrix { n, e: vec![Fx::zero(); n * n] }
    }
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.e[i * n + i] = Fx::one();
        }
        m
    }
    pub fn of(m: &RationalMatrix) -> Self {
        let n = m.dim();
        FxMatrix { n, e: (0..n * n).map(|k| Fx::of(&m.get(k / n, k % n))).collect() }
    }
    /// Midpoints of an interval matrix.
    pub fn of_mid(m: &IntervalMatrix) -> Self {
        let n = m.dim();
        let mid = m.mid();
        FxMatrix {
            n,
            e: (0..n * n)
                .map(|k| {
                    let z = mid.get(k / n, k % n);
                    Fx::of_dyadic(z.re.lo(), z.im.lo())
                })
                .collect(),
        }
    }
    pub fn get(&self, i: usize, j: usize) -> &Fx {
        &self.e[i * self.n + j]
    }
    pub fn add(&self, o: &Self) -> Self {
        FxMatrix { n: self.n, e: self.e.iter().zip(&o.e).map(|(a, b)| a.add(b)).collect() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        FxMatrix { n: self.n, e: self.e.iter().zip(&o.e).map(|(a, b)| a.sub(b)).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut re = BigInt::zero();
                let mut im = BigInt::zero();
                for k in 0..n {
                    let (a, b) = (self.get(i, k), o.get(k, j));
                    re += &a.re * &b.re - &a.im * &b.im;
                    im += &a.re * &b.im + &a.im * &b.re;
                }
                out.e[i * n + j] = Fx { re: shr_round(re), im: shr_round(im) };
            }
        }
        out
    }
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.e[j * n + i] = self.get(i, j).conj();
            }
        }
        out
    }
    pub fn scale(&self, c: &Fx) -> Self {
        FxMatrix { n: self.n, e: self.e.iter().map(|a| a.mul(c)).collect() }
    }
    pub fn to_f64(&self) -> DMatrix<Complex<f64>> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64())
    }

    /// `exp(i c h)` for a real scalar `c` by scaling and squaring of the
    /// Taylor series.
    pub fn exp_i(&self, c: &Rational) -> Self {
        let n = self.n;
        let squarings = 8u32;
        // i c h / 2^s
        let f = Fx { re: BigInt::zero(), im: fx_of_rational(c) >> squarings };
        let x = self.scale(&f);
        let mut term = Self::identity(n);
        let mut sum = Self::identity(n);
        for k in 1..60 {
            term = term.mul(&x);
            term = FxMatrix { n, e: term.e.iter().map(|z| z.div_int(k)).collect() };
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// Positive definiteness of a Hermitian matrix by LDL*. Rounding is far
    /// below the `2^-200` slack the callers add.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.n;
        let mut a = self.clone();
        for k in 0..n {
            let d = a.get(k, k).re.clone();
            if !d.is_positive() {
                return false;
            }
            for i in k + 1..n {
                let lik = a.get(i, k).clone();
                if lik.re.is_zero() && lik.im.is_zero() {
                    continue;
                }
                // l = a_ik / d
                let l = Fx { re: (&lik.re << P).div_floor(&d), im: (&lik.im << P).div_floor(&d) };
                for j in k + 1..=i {
                    let akj = a.get(k, j).clone();
                    let v = a.get(i, j).sub(&l.mul(&akj));
                    a.e[i * n + j] = v.clone();
                    a.e[j * n + i] = v.conj();
                }
            }
        }
        true
    }
}

/// Frobenius norm of a fixed-point matrix as an `f64`.
pub fn fx_frobenius(m: &FxMatrix) -> f64 {
    m.to_f64().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Independent check that `sqrt(lambda_max(M*M))` lies in `[lo, hi]`:
/// `hi^2 (1 + 2^-200) + 2^-200 - M*M` is positive definite and
/// `lo^2 - 2^-200 - M*M` is not, both decided by 256-bit LDL*.
pub fn norm_in(m: &RationalMatrix, lo: &Dyadic, hi: &Dyadic) -> bool {
    let n = m.dim();
    let g = FxMatrix::of(m).adjoint().mul(&FxMatrix::of(m));
    let shifted = |mu: &Rational| {
        let mut s = FxMatrix::zero(n);
        let f = Fx::of(&GaussianRational::real(mu.clone()));
        for i in 0..n {
            for j in 0..n {
                let gij = g.get(i, j);
                let neg = Fx { re: -&gij.re, im: -&gij.im };
                s.e[i * n + j] = if i == j { neg.add(&f) } else { neg };
            }
        }
        s
    };
    let hi2 = hi.to_rational() * hi.to_rational();
    let slack = Rational::new(BigInt::one(), BigInt::one() << 200);
    let upper_ok = shifted(&(&hi2 + &hi2 * &slack + &slack)).is_positive_definite();
    let lo2 = lo.to_rational() * lo.to_rational() - &slack;
    let lower_ok = !shifted(&lo2).is_positive_definite();
    upper_ok && lower_ok
}

/// Reports a criterion line and records its outcome.
pub struct Report {
    pub failures: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Report { failures: Vec::new() }
    }

    pub fn line(&mut self, id: &str, passed: bool, detail: String) {
        println!("{} {id}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failures.push(id.to_string());
        }
    }
}
