//! Tensor-leg utilities on Kronecker-ordered matrices: conditional
//! expectations onto a factor and the row-column lower bound for `A ⊗ M_n`.

use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::matrix::norm::{interval_matrix_norm, matrix_norm};
use crate::matrix::{IntervalMatrix, RationalMatrix};
use crate::scalar::{GaussianRational, Rational};

/// Which factor of `M_m ⊗ M_n` is retained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leg {
    Left,
    Right,
}

/// Trace-normalized partial trace of `b` in `M_m ⊗ M_n` (index `i*n + k`).
pub fn partial_trace_expectation(b: &RationalMatrix, m: usize, n: usize, keep: Leg) -> Result<RationalMatrix> {
    if b.dim() != m * n {
        return Err(Error::InvalidInput(format!(
            "matrix of size {} is not in M_{m} ⊗ M_{n}",
            b.dim()
        )));
    }
    let (out_dim, scale) = match keep {
        Leg::Left => (m, Rational::new(1.into(), (n as i64).into())),
        Leg::Right => (n, Rational::new(1.into(), (m as i64).into())),
    };
    let mut r = RationalMatrix::zero(out_dim);
    for (&(row, col), z) in b.iter() {
        let (i, k) = (row / n, row % n);
        let (j, l) = (col / n, col % n);
        let (a, c, diag) = match keep {
            Leg::Left => (i, j, k == l),
            Leg::Right => (k, l, i == j),
        };
        if diag {
            let s = &r.get(a, c) + &z.scale(&scale);
            r.set(a, c, s);
        }
    }
    Ok(r)
}

/// `x ⊗ 1_n` or `1_m ⊗ x` depending on the leg `x` sits on.
pub fn embed_leg(x: &RationalMatrix, m: usize, n: usize, leg: Leg) -> RationalMatrix {
    match leg {
        Leg::Left => x.kron(&RationalMatrix::identity(n)),
        Leg::Right => RationalMatrix::identity(m).kron(x),
    }
}

/// Certified upper bound on `|b - E(b)|` where `E(b)` is the expectation
/// onto the retained leg re-embedded; an upper bound for the distance from
/// `b` to that subalgebra.
pub fn distance_to_leg(b: &RationalMatrix, m: usize, n: usize, keep: Leg, k: u32) -> Result<Dyadic> {
    let e = partial_trace_expectation(b, m, n, keep)?;
    let d = b.sub(&embed_leg(&e, m, n, keep));
    Ok(matrix_norm(&d, k).hi().clone())
}

/// Interval version of the partial trace.
pub fn partial_trace_interval(b: &IntervalMatrix, m: usize, n: usize, keep: Leg, prec: u32) -> IntervalMatrix {
    assert_eq!(b.dim(), m * n);
    let (out_dim, count) = match keep {
        Leg::Left => (m, n),
        Leg::Right => (n, m),
    };
    let inv = DyadicInterval::one()
        .div(&DyadicInterval::from_i64(count as i64), prec)
        .expect("nonzero");
    IntervalMatrix::from_fn(out_dim, |a, c| {
        let mut acc = ComplexInterval::zero();
        for s in 0..count {
            let (row, col) = match keep {
                Leg::Left => (a * n + s, c * n + s),
                Leg::Right => (s * n + a, s * n + c),
            };
            acc = acc.add(b.get(row, col));
        }
        acc.mul_real(&inv).round_out(prec)
    })
}

pub fn distance_to_leg_interval(b: &IntervalMatrix, m: usize, n: usize, keep: Leg, k: u32) -> Dyadic {
    let prec = k + 64;
    let e = partial_trace_interval(b, m, n, keep, prec);
    let id = |d: usize| IntervalMatrix::identity(d);
    let emb = match keep {
        Leg::Left => e.kron(&id(n), prec),
        Leg::Right => id(m).kron(&e, prec),
    };
    interval_matrix_norm(&b.sub(&emb), k).hi().clone()
}

/// Entries `a_ij ∈ M_d` of `a ∈ M_d ⊗ M_n`, i.e. `a = sum a_ij ⊗ e_ij`.
pub fn blocks_of(a: &RationalMatrix, d: usize, n: usize) -> Vec<Vec<RationalMatrix>> {
    assert_eq!(a.dim(), d * n);
    let mut out = vec![vec![RationalMatrix::zero(d); n]; n];
    for (&(row, col), z) in a.iter() {
        let (p, i) = (row / n, row % n);
        let (q, j) = (col / n, col % n);
        out[i][j].set(p, q, z.clone());
    }
    out
}

/// Certified lower bound `|sum_ij x_i a_ij y_j*|` for `|a|`, valid when
/// `|sum x_i x_i*| < 1` and `|sum y_i y_i*| < 1`, which are certified first.
pub fn row_column_lower_bound(
    a: &[Vec<RationalMatrix>],
    x: &[RationalMatrix],
    y: &[RationalMatrix],
    k: u32,
) -> Result<Dyadic> {
    let n = a.len();
    if x.len() != n || y.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("tuple length must match the block size".into()));
    }
    let d = x.first().map(|m| m.dim()).unwrap_or(0);
    let gram = |t: &[RationalMatrix]| {
        t.iter()
            .fold(RationalMatrix::zero(d), |acc, v| acc.add(&v.mul(&v.adjoint())))
    };
    for (name, t) in [("x", x), ("y", y)] {
        let g = gram(t);
        if matrix_norm(&g, 40).hi() >= &Dyadic::one() {
            return Err(Error::InvalidInput(format!(
                "tuple {name} violates |sum {name}_i {name}_i*| < 1"
            )));
        }
    }
    let mut s = RationalMatrix::zero(d);
    for i in 0..n {
        for j in 0..n {
            if a[i][j].is_zero() {
                continue;
            }
            s = s.add(&x[i].mul(&a[i][j]).mul(&y[j].adjoint()));
        }
    }
    Ok(matrix_norm(&s, k).lo().clone())
}

/// A simple family of trial tuples: scaled matrix units `c e_pq` placed in
/// slot `i`.
pub fn unit_tuple(d: usize, n: usize, slot: usize, p: usize, q: usize, c: &Rational) -> Vec<RationalMatrix> {
    (0..n)
        .map(|i| {
            if i == slot {
                RationalMatrix::unit(d, p, q).scale(&GaussianRational::real(c.clone()))
            } else {
                RationalMatrix::zero(d)
            }
        })
        .collect()
}

/// Best lower bound over all unit tuples with the given scale.
pub fn row_column_search(a: &RationalMatrix, d: usize, n: usize, c: &Rational, k: u32) -> Result<Dyadic> {
    let blocks = blocks_of(a, d, n);
    let mut best = Dyadic::zero();
    for si in 0..n {
        for sj in 0..n {
            for p in 0..d {
                for q in 0..d {
                    for r in 0..d {
                        for s in 0..d {
                            // x_si = c e_pq, y_sj = c e_rs
                            let x = unit_tuple(d, n, si, p, q, c);
                            let y = unit_tuple(d, n, sj, r, s, c);
                            let lb = row_column_lower_bound(&blocks, &x, &y, k)?;
                            best = best.max_with(&lb);
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn expectation_of_simple_tensors() {
        let x = RationalMatrix::from_i64_rows(&[&[1, 2], &[3, 4]]);
        let y = RationalMatrix::from_i64_rows(&[&[5, 0, 1], &[0, 1, 0], &[2, 0, 3]]);
        let b = x.kron(&RationalMatrix::identity(3));
        assert_eq!(partial_trace_expectation(&b, 2, 3, Leg::Left).unwrap(), x);
        let b = RationalMatrix::identity(2).kron(&y);
        let e = partial_trace_expectation(&b, 2, 3, Leg::Left).unwrap();
        assert_eq!(e, RationalMatrix::scalar(2, GaussianRational::real(rat(9, 3))));
        assert_eq!(partial_trace_expectation(&b, 2, 3, Leg::Right).unwrap(), y);
    }

    #[test]
    fn row_column_witness() {
        let a = RationalMatrix::unit(2, 0, 0).kron(&RationalMatrix::unit(2, 0, 0));
        let blocks = blocks_of(&a, 2, 2);
        let c = Rational::new(1023.into(), 1024.into());
        let x = unit_tuple(2, 2, 0, 0, 0, &c);
        let lb = row_column_lower_bound(&blocks, &x, &x, 30).unwrap();
        assert!(lb.to_rational() >= &c * &c - rat(1, 1 << 30));
        let zero = vec![vec![RationalMatrix::zero(2); 2]; 2];
        assert!(row_column_lower_bound(&zero, &x, &x, 30).unwrap().is_zero());
        let big = unit_tuple(2, 2, 0, 0, 0, &rat(1, 1));
        assert!(row_column_lower_bound(&blocks, &big, &x, 30).is_err());
    }
}
