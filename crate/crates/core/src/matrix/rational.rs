//! Exact square matrices over the Gaussian rationals.
//!
//! Entries are kept in a sorted sparse map; the permutation-heavy matrices of
//! the dimension-drop stages are mostly zero.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::poly::StarAlgebra;
use crate::scalar::{GaussianRational, Rational};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), GaussianRational>,
}

impl RationalMatrix {
    pub fn zero(n: usize) -> Self {
        RationalMatrix {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, GaussianRational::one())
    }

    pub fn scalar(n: usize, z: GaussianRational) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, z.clone());
        }
        m
    }

    /// Matrix unit `e_{i+1, j+1}` (zero-based indices).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zero(n);
        m.set(i, j, GaussianRational::one());
        m
    }

    /// Row-major dense construction.
    pub fn from_rows(rows: Vec<Vec<GaussianRational>>) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zero(n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidInput("matrix rows must have length n".into()));
            }
            for (j, z) in r.into_iter().enumerate() {
                m.set(i, j, z);
            }
        }
        Ok(m)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| GaussianRational::from_i64(v)).collect())
                .collect(),
        )
        .expect("square")
    }

    /// Permutation matrix with `P e_j = e_{sigma[j]}`.
    pub fn permutation(sigma: &[usize]) -> Self {
        let mut m = Self::zero(sigma.len());
        for (j, &i) in sigma.iter().enumerate() {
            m.set(i, j, GaussianRational::one());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> GaussianRational {
        self.entries.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&GaussianRational> {
        self.entries.get(&(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, z: GaussianRational) {
        assert!(i < self.n && j < self.n, "index out of range");
        if z.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), z);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &GaussianRational)> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, o: &Self) {
        assert_eq!(self.n, o.n, "dimension mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        let mut r = self.clone();
        for (&(i, j), z) in &o.entries {
            let s = &r.get(i, j) + z;
            r.set(i, j, s);
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        RationalMatrix {
            n: self.n,
            entries: self.entries.iter().map(|(k, z)| (*k, -z)).collect(),
        }
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        let mut r = Self::zero(self.n);
        for (&(i, j), z) in &self.entries {
            r.set(i, j, z * c);
        }
        r
    }

    pub fn scale_rational(&self, c: &Rational) -> Self {
        self.scale(&GaussianRational::real(c.clone()))
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        let mut rows: Vec<Vec<(usize, &GaussianRational)>> = vec![Vec::new(); self.n];
        for (&(k, j), z) in &o.entries {
            rows[k].push((j, z));
        }
        let mut acc: BTreeMap<(usize, usize), GaussianRational> = BTreeMap::new();
        for (&(i, k), a) in &self.entries {
            for &(j, b) in &rows[k] {
                let p = a * b;
                let e = acc.entry((i, j)).or_default();
                *e = &*e + &p;
            }
        }
        acc.retain(|_, z| !z.is_zero());
        RationalMatrix {
            n: self.n,
            entries: acc,
        }
    }

    pub fn adjoint(&self) -> Self {
        RationalMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(&(i, j), z)| ((j, i), z.conj()))
                .collect(),
        }
    }

    pub fn trace(&self) -> GaussianRational {
        (0..self.n).fold(GaussianRational::zero(), |acc, i| &acc + &self.get(i, i))
    }

    pub fn is_self_adjoint(&self) -> bool {
        *self == self.adjoint()
    }

    /// Exact test of `u* u = 1` and `u u* = 1`.
    pub fn is_unitary(&self) -> bool {
        let id = Self::identity(self.n);
        self.adjoint().mul(self) == id && self.mul(&self.adjoint()) == id
    }

    /// Kronecker product; the left factor indexes the coarse blocks.
    pub fn kron(&self, o: &Self) -> Self {
        let mut r = Self::zero(self.n * o.n);
        for (&(i, j), a) in &self.entries {
            for (&(k, l), b) in &o.entries {
                r.set(i * o.n + k, j * o.n + l, a * b);
            }
        }
        r
    }

    pub fn block_diag(blocks: &[RationalMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut r = Self::zero(n);
        let mut off = 0;
        for b in blocks {
            for (&(i, j), z) in &b.entries {
                r.set(off + i, off + j, z.clone());
            }
            off += b.n;
        }
        r
    }

    /// Conjugate `P* M P` by the permutation `P e_j = e_{sigma[j]}`.
    pub fn conj_permutation(&self, sigma: &[usize]) -> Self {
        assert_eq!(sigma.len(), self.n);
        let mut inv = vec![0usize; self.n];
        for (j, &i) in sigma.iter().enumerate() {
            inv[i] = j;
        }
        RationalMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(&(i, j), z)| ((inv[i], inv[j]), z.clone()))
                .collect(),
        }
    }

    /// Dense row-major copy as doubles (estimates only).
    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        use num_traits::ToPrimitive;
        let mut v = vec![(0.0, 0.0); self.n * self.n];
        for (&(i, j), z) in &self.entries {
            v[i * self.n + j] = (
                z.re.to_f64().unwrap_or(f64::NAN),
                z.im.to_f64().unwrap_or(f64::NAN),
            );
        }
        v
    }

    /// Connected components of the bipartite row/column graph of the nonzero
    /// pattern; each component gives a block `(rows, cols)` and the matrix is
    /// the direct sum of its blocks up to row and column permutations.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let n = self.n;
        let mut parent: Vec<usize> = (0..2 * n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for &(i, j) in self.entries.keys() {
            let a = find(&mut parent, i);
            let b = find(&mut parent, n + j);
            if a != b {
                parent[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        let mut has_entry = vec![false; 2 * n];
        for &(i, j) in self.entries.keys() {
            has_entry[i] = true;
            has_entry[n + j] = true;
        }
        for x in 0..2 * n {
            if !has_entry[x] {
                continue;
            }
            let r = find(&mut parent, x);
            let g = groups.entry(r).or_default();
            if x < n {
                g.0.push(x);
            } else {
                g.1.push(x - n);
            }
        }
        let mut out: Vec<_> = groups.into_values().collect();
        out.sort();
        out
    }

    /// Submatrix on the given rows and columns, zero-padded to a square of
    /// size `max(rows, cols)`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let n = rows.len().max(cols.len());
        let mut r = Self::zero(n);
        let col_pos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        for (a, &i) in rows.iter().enumerate() {
            for (&(_, j), z) in self.entries.range((i, 0)..(i + 1, 0)) {
                if let Some(&b) = col_pos.get(&j) {
                    r.set(a, b, z.clone());
                }
            }
        }
        r
    }
}

impl StarAlgebra for RationalMatrix {
    fn add(&self, o: &Self) -> Self {
        RationalMatrix::add(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        RationalMatrix::mul(self, o)
    }
    fn adjoint(&self) -> Self {
        RationalMatrix::adjoint(self)
    }
    fn scale(&self, z: &GaussianRational) -> Self {
        RationalMatrix::scale(self, z)
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix({})", self.n)?;
        if self.n <= 8 {
            for i in 0..self.n {
                let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        } else {
            writeln!(f, "  {} nonzeros", self.nnz())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn matrix_unit_products() {
        let e12 = RationalMatrix::unit(2, 0, 1);
        let p = e12.adjoint().mul(&e12);
        assert_eq!(p, RationalMatrix::unit(2, 1, 1));
        assert!(e12.mul(&e12).is_zero());
    }

    #[test]
    fn permutation_is_unitary_and_conjugation_matches_product() {
        let sigma = [2, 0, 3, 1];
        let p = RationalMatrix::permutation(&sigma);
        assert!(p.is_unitary());
        let mut m = RationalMatrix::zero(4);
        for i in 0..4 {
            for j in 0..4 {
                m.set(i, j, GaussianRational::new(rat(i as i64 + 1, 3), rat(j as i64, 5)));
            }
        }
        assert_eq!(m.conj_permutation(&sigma), p.adjoint().mul(&m).mul(&p));
    }

    #[test]
    fn components_split_block_diagonal() {
        let a = RationalMatrix::from_i64_rows(&[&[1, 2], &[3, 4]]);
        let b = RationalMatrix::from_i64_rows(&[&[5]]);
        let m = RationalMatrix::block_diag(&[a, b]);
        let c = m.components();
        assert_eq!(c.len(), 2);
        assert_eq!(m.submatrix(&c[1].0, &c[1].1), RationalMatrix::from_i64_rows(&[&[5]]));
    }

    #[test]
    fn kron_of_units() {
        let a = RationalMatrix::unit(2, 0, 1);
        let b = RationalMatrix::unit(3, 2, 0);
        let k = a.kron(&b);
        assert_eq!(k, RationalMatrix::unit(6, 2, 3));
    }
}
