//! Dense square matrices of complex dyadic intervals.

use std::fmt;

use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval, Round};
use crate::matrix::RationalMatrix;

#[derive(Clone, PartialEq, Eq)]
pub struct IntervalMatrix {
    n: usize,
    data: Vec<ComplexInterval>,
}

impl IntervalMatrix {
    pub fn zero(n: usize) -> Self {
        IntervalMatrix {
            n,
            data: vec![ComplexInterval::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, ComplexInterval::one());
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> ComplexInterval) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        IntervalMatrix { n, data }
    }

    /// Enclosure of a rational matrix; entries that are dyadic stay exact.
    pub fn from_rational(m: &RationalMatrix, prec: u32) -> Self {
        let mut r = Self::zero(m.dim());
        for (&(i, j), z) in m.iter() {
            r.set(i, j, ComplexInterval::from_gaussian(z, prec));
        }
        r
    }

    /// Exact point matrix from doubles.
    pub fn from_f64(n: usize, v: &[(f64, f64)]) -> Self {
        Self::from_fn(n, |i, j| {
            let (a, b) = v[i * n + j];
            ComplexInterval::point(Dyadic::from_f64(a), Dyadic::from_f64(b))
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &ComplexInterval {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: ComplexInterval) {
        self.data[i * self.n + j] = z;
    }

    pub fn entries(&self) -> &[ComplexInterval] {
        &self.data
    }

    fn zip(&self, o: &Self, f: impl Fn(&ComplexInterval, &ComplexInterval) -> ComplexInterval) -> Self {
        assert_eq!(self.n, o.n, "dimension mismatch");
        IntervalMatrix {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    fn map(&self, f: impl Fn(&ComplexInterval) -> ComplexInterval) -> Self {
        IntervalMatrix {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        self.map(|a| a.neg())
    }

    pub fn mul_i(&self) -> Self {
        self.map(|a| a.mul_i())
    }

    pub fn shl(&self, k: i64) -> Self {
        self.map(|a| a.shl(k))
    }

    pub fn scale(&self, c: &ComplexInterval, prec: u32) -> Self {
        self.map(|a| a.mul(c).round_out(prec))
    }

    pub fn scale_real(&self, c: &DyadicInterval, prec: u32) -> Self {
        self.map(|a| a.mul_real(c).round_out(prec))
    }

    pub fn round_out(&self, prec: u32) -> Self {
        self.map(|a| a.round_out(prec))
    }

    /// Round endpoints outward to multiples of `2^e`.
    pub fn round_out_abs(&self, e: i64) -> Self {
        self.map(|a| a.round_out_abs(e))
    }

    pub fn widen(&self, r: &Dyadic) -> Self {
        self.map(|a| a.widen(r))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    /// Product with each entry rounded outward to `prec` significant bits.
    pub fn mul(&self, o: &Self, prec: u32) -> Self {
        assert_eq!(self.n, o.n, "dimension mismatch");
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ComplexInterval::zero();
                for k in 0..n {
                    let a = &self.data[i * n + k];
                    let b = &o.data[k * n + j];
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b));
                }
                out.push(acc.round_out(prec));
            }
        }
        IntervalMatrix { n, data: out }
    }

    /// Point matrix of entry midpoints.
    pub fn mid(&self) -> Self {
        self.map(|a| {
            let (re, im) = a.mid();
            ComplexInterval::point(re, im)
        })
    }

    pub fn is_point(&self) -> bool {
        self.data.iter().all(|z| z.re.is_point() && z.im.is_point())
    }

    /// Upper bound on `||X - mid||` for every `X` in the enclosure.
    pub fn rad_norm_upper(&self, prec: u32) -> Dyadic {
        let mut s = Dyadic::zero();
        for z in &self.data {
            let a = z.re.rad();
            let b = z.im.rad();
            s = s.add(&a.mul(&a)).add(&b.mul(&b)).round(prec + 8, Round::Up);
        }
        s.sqrt(prec, Round::Up)
    }

    /// Upper bound on the Frobenius norm of every member.
    pub fn frobenius_upper(&self, prec: u32) -> Dyadic {
        let mut s = Dyadic::zero();
        for z in &self.data {
            s = s.add(z.abs_sqr().hi()).round(prec + 8, Round::Up);
        }
        s.sqrt(prec, Round::Up)
    }

    pub fn contains_rational(&self, m: &RationalMatrix) -> bool {
        assert_eq!(self.n, m.dim());
        for i in 0..self.n {
            for j in 0..self.n {
                if !self.get(i, j).contains_gaussian(&m.get(i, j)) {
                    return false;
                }
            }
        }
        true
    }

    pub fn contains(&self, o: &Self) -> bool {
        self.data.iter().zip(&o.data).all(|(a, b)| a.contains_interval(b))
    }

    /// Entry sets satisfy `M_ij = conj(M_ji)`.
    pub fn is_hermitian_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in i..self.n {
                if *self.get(i, j) != self.get(j, i).conj() {
                    return false;
                }
            }
        }
        true
    }

    /// Replace the enclosure by one that is exactly Hermitian-symmetric and
    /// contains the Hermitian part of every member.
    pub fn hermitize(&self) -> Self {
        let mut r = self.clone();
        for i in 0..self.n {
            for j in i..self.n {
                let z = self.get(i, j).add(&self.get(j, i).conj()).shl(-1);
                let z = if i == j {
                    ComplexInterval::real(z.re)
                } else {
                    z
                };
                r.set(j, i, z.conj());
                r.set(i, j, z);
            }
        }
        r
    }

    pub fn hull(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.hull(b))
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.data
            .iter()
            .map(|z| {
                let (a, b) = z.mid();
                (a.to_f64(), b.to_f64())
            })
            .collect()
    }

    /// Largest half-width over all real and imaginary parts.
    pub fn max_rad(&self) -> Dyadic {
        let mut m = Dyadic::zero();
        for z in &self.data {
            m = m.max_with(&z.re.rad()).max_with(&z.im.rad());
        }
        m
    }

    pub fn kron(&self, o: &Self, prec: u32) -> Self {
        let n = self.n * o.n;
        Self::from_fn(n, |i, j| {
            let (a, b) = (i / o.n, i % o.n);
            let (c, d) = (j / o.n, j % o.n);
            self.get(a, c).mul(o.get(b, d)).round_out(prec)
        })
    }

    pub fn block_diag(blocks: &[IntervalMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut r = Self::zero(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    r.set(off + i, off + j, b.get(i, j).clone());
                }
            }
            off += b.n;
        }
        r
    }

    /// Apply to a column vector.
    pub fn mul_vec(&self, v: &[ComplexInterval], prec: u32) -> Vec<ComplexInterval> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = ComplexInterval::zero();
                for k in 0..n {
                    acc = acc.add(&self.data[i * n + k].mul(&v[k]));
                }
                acc.round_out(prec)
            })
            .collect()
    }
}

impl fmt::Debug for IntervalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntervalMatrix({})", self.n)?;
        if self.n <= 6 {
            for i in 0..self.n {
                let row: Vec<String> = (0..self.n)
                    .map(|j| {
                        let (a, b) = self.get(i, j).mid();
                        format!("{:.6}{:+.6}i", a.to_f64(), b.to_f64())
                    })
                    .collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        }
        writeln!(f, "  max radius {:e}", self.max_rad().to_f64())
    }
}
