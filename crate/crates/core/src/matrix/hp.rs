//! Uncertified high-precision complex arithmetic on dyadics.
//!
//! Used only to produce good candidates (eigenvectors, logarithms) that are
//! then certified with interval arithmetic. Every operation truncates to the
//! working precision.

use crate::dyadic::{ComplexInterval, Dyadic, Round};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hc {
    pub re: Dyadic,
    pub im: Dyadic,
}

impl Hc {
    pub fn zero() -> Self {
        Hc {
            re: Dyadic::zero(),
            im: Dyadic::zero(),
        }
    }

    pub fn one() -> Self {
        Hc {
            re: Dyadic::one(),
            im: Dyadic::zero(),
        }
    }

    pub fn from_f64(a: f64, b: f64) -> Self {
        Hc {
            re: Dyadic::from_f64(a),
            im: Dyadic::from_f64(b),
        }
    }

    pub fn from_interval_mid(z: &ComplexInterval) -> Self {
        let (re, im) = z.mid();
        Hc { re, im }
    }

    pub fn to_interval(&self) -> ComplexInterval {
        ComplexInterval::point(self.re.clone(), self.im.clone())
    }

    pub fn round(&self, p: u32) -> Self {
        Hc {
            re: self.re.round(p, Round::Down),
            im: self.im.round(p, Round::Down),
        }
    }

    pub fn add(&self, o: &Hc) -> Hc {
        Hc {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    pub fn sub(&self, o: &Hc) -> Hc {
        Hc {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }

    pub fn neg(&self) -> Hc {
        Hc {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }

    pub fn conj(&self) -> Hc {
        Hc {
            re: self.re.clone(),
            im: self.im.neg(),
        }
    }

    pub fn mul(&self, o: &Hc, p: u32) -> Hc {
        Hc {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)).round(p, Round::Down),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)).round(p, Round::Down),
        }
    }

    pub fn abs_sqr(&self) -> Dyadic {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn div(&self, o: &Hc, p: u32) -> Hc {
        let d = o.abs_sqr();
        let num = self.mul(&o.conj(), p + 8);
        Hc {
            re: num.re.div(&d, p, Round::Down),
            im: num.im.div(&d, p, Round::Down),
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

/// Dense row-major square matrix of `Hc`.
#[derive(Clone, Debug)]
pub struct HcMatrix {
    pub n: usize,
    pub a: Vec<Hc>,
}

impl HcMatrix {
    pub fn zero(n: usize) -> Self {
        HcMatrix {
            n,
            a: vec![Hc::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.a[i * n + i] = Hc::one();
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Hc {
        &self.a[i * self.n + j]
    }

    pub fn from_f64(n: usize, v: &[(f64, f64)]) -> Self {
        HcMatrix {
            n,
            a: v.iter().map(|&(x, y)| Hc::from_f64(x, y)).collect(),
        }
    }

    pub fn mul(&self, o: &HcMatrix, p: u32) -> HcMatrix {
        let n = self.n;
        let mut r = HcMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Hc::zero();
                for k in 0..n {
                    acc = acc.add(&self.a[i * n + k].mul(&o.a[k * n + j], p + 8));
                }
                r.a[i * n + j] = acc.round(p);
            }
        }
        r
    }

    pub fn adjoint(&self) -> HcMatrix {
        let n = self.n;
        let mut r = HcMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                r.a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        r
    }

    pub fn add(&self, o: &HcMatrix) -> HcMatrix {
        HcMatrix {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x.add(y)).collect(),
        }
    }

    pub fn sub(&self, o: &HcMatrix) -> HcMatrix {
        HcMatrix {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x.sub(y)).collect(),
        }
    }

    pub fn scale(&self, c: &Hc, p: u32) -> HcMatrix {
        HcMatrix {
            n: self.n,
            a: self.a.iter().map(|x| x.mul(c, p)).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Hc], p: u32) -> Vec<Hc> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = Hc::zero();
                for k in 0..n {
                    acc = acc.add(&self.a[i * n + k].mul(&v[k], p + 8));
                }
                acc.round(p)
            })
            .collect()
    }

    /// Solve `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` on an exactly zero pivot.
    pub fn solve(&self, b: &[Hc], p: u32) -> Option<Vec<Hc>> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut x: Vec<Hc> = b.to_vec();
        for col in 0..n {
            let piv = (col..n).max_by(|&r, &s| {
                a[r * n + col]
                    .abs_sqr()
                    .cmp(&a[s * n + col].abs_sqr())
            })?;
            if a[piv * n + col].abs_sqr().is_zero() {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
                x.swap(piv, col);
            }
            let d = a[col * n + col].clone();
            for r in col + 1..n {
                let f = a[r * n + col].div(&d, p);
                if f.re.is_zero() && f.im.is_zero() {
                    continue;
                }
                for j in col..n {
                    let t = f.mul(&a[col * n + j], p);
                    a[r * n + j] = a[r * n + j].sub(&t).round(p);
                }
                let t = f.mul(&x[col], p);
                x[r] = x[r].sub(&t).round(p);
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i].clone();
            for j in i + 1..n {
                s = s.sub(&a[i * n + j].mul(&x[j], p));
            }
            x[i] = s.div(&a[i * n + i], p);
        }
        Some(x)
    }

    /// Inverse by solving against unit vectors.
    pub fn inverse(&self, p: u32) -> Option<HcMatrix> {
        let n = self.n;
        let mut r = HcMatrix::zero(n);
        for j in 0..n {
            let mut e = vec![Hc::zero(); n];
            e[j] = Hc::one();
            let c = self.solve(&e, p)?;
            for i in 0..n {
                r.a[i * n + j] = c[i].clone();
            }
        }
        Some(r)
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.a.iter().map(|z| z.to_f64()).collect()
    }
}

/// Normalize a vector so its largest component has magnitude about one.
pub fn normalize(v: &mut [Hc], p: u32) {
    let mut m = Dyadic::zero();
    for z in v.iter() {
        m = m.max_with(&z.re.abs()).max_with(&z.im.abs());
    }
    if m.is_zero() {
        return;
    }
    let s = -m.floor_log2();
    for z in v.iter_mut() {
        *z = Hc {
            re: z.re.shl(s),
            im: z.im.shl(s),
        }
        .round(p);
    }
}
