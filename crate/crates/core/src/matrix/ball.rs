//! Rigorous midpoint-radius complex matrices in double precision.
//!
//! Entry `(i, j)` encloses the disc of radius `rad[i,j]` around
//! `re[i,j] + i im[i,j]`. Products use four real `dgemm` calls for the
//! midpoint; the radius accounts for input radii and for floating-point error
//! through row/column Cauchy-Schwarz bounds:
//!
//! ```text
//! |fl(AB) - AB|_ij <= sqrt2 * gamma(n+1) * |row_i A| |col_j B|
//! |C - mid C|_ij   <= |row_i (|A|+R_A)| |col_j R_B| + |row_i R_A| |col_j B| + fp
//! ```
//!
//! Every radius computed in floating point is inflated by `1 + 2^-36` plus an
//! underflow floor, which dominates the rounding of the radius arithmetic for
//! the dimensions used here (`n < 2^20`).

use crate::dyadic::{ComplexInterval, Dyadic, DyadicInterval, Round};
use crate::matrix::{IntervalMatrix, RationalMatrix};

const U: f64 = 1.0 / 9007199254740992.0; // 2^-53
const INFLATE: f64 = 1.0 + 1.0 / 68719476736.0; // 1 + 2^-36
const FLOOR: f64 = 1e-300;

fn gamma(k: usize) -> f64 {
    let ku = k as f64 * U;
    ku / (1.0 - ku)
}

fn up(x: f64) -> f64 {
    (x * INFLATE + FLOOR).next_up()
}

/// Smallest double not below `d`.
pub fn f64_up(d: &Dyadic) -> f64 {
    let x = d.to_f64();
    if Dyadic::from_f64(x) >= *d {
        x
    } else {
        x.next_up()
    }
}

/// Largest double not above `d`.
pub fn f64_down(d: &Dyadic) -> f64 {
    -f64_up(&d.neg())
}

/// Ball enclosing a complex interval: (re, im, rad).
pub fn ball_of(z: &ComplexInterval) -> (f64, f64, f64) {
    let (mr, mi) = z.mid();
    let (fr, fi) = (mr.to_f64(), mi.to_f64());
    let dr = z
        .re
        .hi()
        .sub(&Dyadic::from_f64(fr))
        .abs()
        .max_with(&z.re.lo().sub(&Dyadic::from_f64(fr)).abs());
    let di = z
        .im
        .hi()
        .sub(&Dyadic::from_f64(fi))
        .abs()
        .max_with(&z.im.lo().sub(&Dyadic::from_f64(fi)).abs());
    let r = up(f64_up(&dr) + f64_up(&di));
    (fr, fi, r)
}

#[derive(Clone, Debug)]
pub struct BallMatrix {
    n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub rad: Vec<f64>,
}

impl BallMatrix {
    pub fn zero(n: usize) -> Self {
        BallMatrix {
            n,
            re: vec![0.0; n * n],
            im: vec![0.0; n * n],
            rad: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.re[i * n + i] = 1.0;
        }
        m
    }

    /// Permutation matrix with `P e_j = e_{sigma[j]}`.
    pub fn permutation(sigma: &[usize]) -> Self {
        let n = sigma.len();
        let mut m = Self::zero(n);
        for (j, &i) in sigma.iter().enumerate() {
            m.re[i * n + j] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, i: usize, j: usize, re: f64, im: f64, rad: f64) {
        let k = i * self.n + j;
        self.re[k] = re;
        self.im[k] = im;
        self.rad[k] = rad;
    }

    pub fn set_interval(&mut self, i: usize, j: usize, z: &ComplexInterval) {
        let (a, b, r) = ball_of(z);
        self.set(i, j, a, b, r);
    }

    pub fn from_interval(m: &IntervalMatrix) -> Self {
        let n = m.dim();
        let mut b = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                b.set_interval(i, j, m.get(i, j));
            }
        }
        b
    }

    pub fn from_rational(m: &RationalMatrix) -> Self {
        Self::from_interval(&IntervalMatrix::from_rational(m, 80))
    }

    /// Interval enclosure of each entry (square boxes around the discs).
    pub fn to_interval(&self) -> IntervalMatrix {
        IntervalMatrix::from_fn(self.n, |i, j| {
            let k = i * self.n + j;
            let r = Dyadic::from_f64(self.rad[k]);
            ComplexInterval::point(Dyadic::from_f64(self.re[k]), Dyadic::from_f64(self.im[k])).widen(&r)
        })
    }

    /// Block-diagonal matrix from interval blocks.
    pub fn block_diag(blocks: &[&IntervalMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = Self::zero(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    m.set_interval(off + i, off + j, b.get(i, j));
                }
            }
            off += b.dim();
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut m = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                let a = i * n + j;
                let b = j * n + i;
                m.re[b] = self.re[a];
                m.im[b] = -self.im[a];
                m.rad[b] = self.rad[a];
            }
        }
        m
    }

    fn combine(&self, o: &Self, sign: f64) -> Self {
        assert_eq!(self.n, o.n);
        let len = self.re.len();
        let mut m = Self::zero(self.n);
        for k in 0..len {
            let r = self.re[k] + sign * o.re[k];
            let i = self.im[k] + sign * o.im[k];
            m.re[k] = r;
            m.im[k] = i;
            m.rad[k] = up(self.rad[k] + o.rad[k] + U * (r.abs() + i.abs()));
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        self.combine(o, 1.0)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.combine(o, -1.0)
    }

    pub fn sub_identity(&self) -> Self {
        self.sub(&Self::identity(self.n))
    }

    fn row_norms(&self, f: impl Fn(usize) -> f64) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| up((0..n).map(|j| f(i * n + j).powi(2)).sum::<f64>().sqrt()))
            .collect()
    }

    fn col_norms(&self, f: impl Fn(usize) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut acc = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                acc[j] += f(i * n + j).powi(2);
            }
        }
        acc.into_iter().map(|s| up(s.sqrt())).collect()
    }

    fn mag(&self, k: usize) -> f64 {
        up(self.re[k].hypot(self.im[k]))
    }

    /// Rigorous product.
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let prod = |a: &[f64], b: &[f64], beta: f64, c: &mut [f64], alpha: f64| unsafe {
            matrixmultiply::dgemm(
                n,
                n,
                n,
                alpha,
                a.as_ptr(),
                n as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        };
        let mut re = vec![0.0; n * n];
        let mut tmp = vec![0.0; n * n];
        prod(&self.re, &o.re, 0.0, &mut re, 1.0);
        prod(&self.im, &o.im, 0.0, &mut tmp, 1.0);
        for (r, t) in re.iter_mut().zip(&tmp) {
            *r -= t;
        }
        let mut im = vec![0.0; n * n];
        prod(&self.re, &o.im, 0.0, &mut im, 1.0);
        prod(&self.im, &o.re, 0.0, &mut tmp, 1.0);
        for (r, t) in im.iter_mut().zip(&tmp) {
            *r += t;
        }
        let a_mid = self.row_norms(|k| self.mag(k));
        let a_full = self.row_norms(|k| self.mag(k) + self.rad[k]);
        let a_rad = self.row_norms(|k| self.rad[k]);
        let b_mid = o.col_norms(|k| o.mag(k));
        let b_rad = o.col_norms(|k| o.rad[k]);
        let g = std::f64::consts::SQRT_2 * gamma(2 * n + 2);
        let mut rad = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let r = a_full[i] * b_rad[j] + a_rad[i] * b_mid[j] + g * a_mid[i] * b_mid[j];
                rad[i * n + j] = up(r);
            }
        }
        BallMatrix { n, re, im, rad }
    }

    /// Product with a matrix given by its nonzero entries per row, exact
    /// accumulation bound per entry (for block-diagonal or permutation factors
    /// on the left).
    pub fn mul_sparse_left(sparse: &[Vec<(usize, (f64, f64, f64))>], b: &Self) -> Self {
        let n = b.n;
        assert_eq!(sparse.len(), n);
        let mut m = Self::zero(n);
        for (i, row) in sparse.iter().enumerate() {
            let g = std::f64::consts::SQRT_2 * gamma(2 * row.len() + 2);
            for j in 0..n {
                let (mut sr, mut si, mut abs_sum, mut rad) = (0.0, 0.0, 0.0, 0.0);
                for &(k, (ar, ai, arad)) in row {
                    let idx = k * n + j;
                    let (br, bi, brad) = (b.re[idx], b.im[idx], b.rad[idx]);
                    sr += ar * br - ai * bi;
                    si += ar * bi + ai * br;
                    let am = ar.hypot(ai);
                    let bm = br.hypot(bi);
                    abs_sum += am * bm;
                    rad += (am + arad) * brad + arad * bm;
                }
                m.re[i * n + j] = sr;
                m.im[i * n + j] = si;
                m.rad[i * n + j] = up(up(rad) + g * up(abs_sum));
            }
        }
        m
    }

    /// Upper bound on the Frobenius norm (hence the operator norm) of every member.
    pub fn frobenius_upper(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..self.re.len() {
            let v = self.mag(k) + self.rad[k];
            s += v * v;
        }
        up(s.sqrt())
    }

    /// Upper bound on the operator norm of every member, sharper than the
    /// Frobenius bound: `max(row sums) * max(column sums)` under a square root.
    pub fn norm_upper(&self) -> f64 {
        let n = self.n;
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let v = self.mag(k) + self.rad[k];
                rows[i] += v;
                cols[j] += v;
            }
        }
        let r = rows.into_iter().fold(0.0, f64::max);
        let c = cols.into_iter().fold(0.0, f64::max);
        up(up(up(r) * up(c)).sqrt()).min(self.frobenius_upper())
    }

    /// Lower bound on the operator norm of every member: a power-iteration
    /// vector `x` gives `|A x| / |x|` with `|A x|` bounded below rigorously.
    pub fn norm_lower(&self, iterations: usize) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let matvec = |xr: &[f64], xi: &[f64], adj: bool| -> (Vec<f64>, Vec<f64>) {
            let (mut yr, mut yi) = (vec![0.0; n], vec![0.0; n]);
            for i in 0..n {
                for j in 0..n {
                    let (k, s) = if adj { (j * n + i, -1.0) } else { (i * n + j, 1.0) };
                    let (ar, ai) = (self.re[k], s * self.im[k]);
                    yr[i] += ar * xr[j] - ai * xi[j];
                    yi[i] += ar * xi[j] + ai * xr[j];
                }
            }
            (yr, yi)
        };
        let normalize = |r: &mut Vec<f64>, i: &mut Vec<f64>| {
            let s = r.iter().chain(i.iter()).map(|v| v * v).sum::<f64>().sqrt();
            if s > 0.0 {
                r.iter_mut().chain(i.iter_mut()).for_each(|v| *v /= s);
            }
        };
        // deterministic start with every coordinate nonzero
        let mut xr: Vec<f64> = (0..n).map(|j| 1.0 + (j % 7) as f64 / 8.0).collect();
        let mut xi: Vec<f64> = (0..n).map(|j| (j % 5) as f64 / 16.0).collect();
        normalize(&mut xr, &mut xi);
        for _ in 0..iterations {
            let (yr, yi) = matvec(&xr, &xi, false);
            let (mut zr, mut zi) = matvec(&yr, &yi, true);
            normalize(&mut zr, &mut zi);
            if zr.iter().chain(zi.iter()).all(|v| *v == 0.0) {
                break;
            }
            xr = zr;
            xi = zi;
        }
        let g = std::f64::consts::SQRT_2 * gamma(2 * n + 2);
        let mut low = 0.0;
        for i in 0..n {
            let (mut sr, mut si, mut err, mut abs) = (0.0, 0.0, 0.0, 0.0);
            for j in 0..n {
                let k = i * n + j;
                let (ar, ai) = (self.re[k], self.im[k]);
                sr += ar * xr[j] - ai * xi[j];
                si += ar * xi[j] + ai * xr[j];
                let xm = xr[j].hypot(xi[j]);
                err += self.rad[k] * xm;
                abs += self.mag(k) * xm;
            }
            let e = up(err + g * abs + U * sr.hypot(si));
            let v = (sr.hypot(si) - e).max(0.0);
            low += v * v;
        }
        let xnorm = up(xr.iter().chain(xi.iter()).map(|v| v * v).sum::<f64>().sqrt());
        let r = (low.sqrt() / xnorm) * (1.0 - 1e-12);
        if r > 0.0 { r } else { 0.0 }
    }

    pub fn max_rad(&self) -> f64 {
        self.rad.iter().cloned().fold(0.0, f64::max)
    }

    /// Upper bound on `|b - E(b) ⊗ 1|` (left leg kept) or `|b - 1 ⊗ E(b)|`
    /// (right leg kept) for `b` in `M_p ⊗ M_q`, over all members.
    pub fn distance_to_leg_upper(&self, p: usize, q: usize, keep_left: bool) -> f64 {
        assert_eq!(self.n, p * q);
        let n = self.n;
        let (outer, count) = if keep_left { (p, q) } else { (q, p) };
        // Expectation midpoints and radii.
        let mut er = vec![0.0; outer * outer];
        let mut ei = vec![0.0; outer * outer];
        let mut erad = vec![0.0; outer * outer];
        let idx = |a: usize, s: usize| if keep_left { a * q + s } else { s * q + a };
        for a in 0..outer {
            for c in 0..outer {
                let (mut sr, mut si, mut sa, mut srad) = (0.0, 0.0, 0.0, 0.0);
                for s in 0..count {
                    let k = idx(a, s) * n + idx(c, s);
                    sr += self.re[k];
                    si += self.im[k];
                    sa += self.mag(k);
                    srad += self.rad[k];
                }
                let cnt = count as f64;
                er[a * outer + c] = sr / cnt;
                ei[a * outer + c] = si / cnt;
                erad[a * outer + c] = up((srad + gamma(count + 2) * sa * 2.0) / cnt);
            }
        }
        let mut s = 0.0;
        for row in 0..n {
            for col in 0..n {
                let k = row * n + col;
                let (a, sa) = if keep_left { (row / q, row % q) } else { (row % q, row / q) };
                let (c, sc) = if keep_left { (col / q, col % q) } else { (col % q, col / q) };
                let (dr, di, dr_rad) = if sa == sc {
                    let e = a * outer + c;
                    (
                        self.re[k] - er[e],
                        self.im[k] - ei[e],
                        self.rad[k] + erad[e] + U * (self.mag(k) + er[e].hypot(ei[e])),
                    )
                } else {
                    (self.re[k], self.im[k], self.rad[k])
                };
                let v = up(dr.hypot(di)) + up(dr_rad);
                s += v * v;
            }
        }
        up(s.sqrt())
    }

    /// Enclosure of a member's entry as a complex interval.
    pub fn entry_interval(&self, i: usize, j: usize) -> ComplexInterval {
        let k = i * self.n + j;
        ComplexInterval::point(Dyadic::from_f64(self.re[k]), Dyadic::from_f64(self.im[k]))
            .widen(&Dyadic::from_f64(self.rad[k]))
    }

    /// True if `m`'s exact entries all lie in the balls.
    pub fn contains_rational(&self, m: &RationalMatrix) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let z = m.get(i, j);
                let k = i * n + j;
                let dr = z.re.clone() - Dyadic::from_f64(self.re[k]).to_rational();
                let di = z.im.clone() - Dyadic::from_f64(self.im[k]).to_rational();
                let r = Dyadic::from_f64(self.rad[k]).to_rational();
                if &dr * &dr + &di * &di > &r * &r {
                    return false;
                }
            }
        }
        true
    }
}

/// Dyadic upper bound from a double upper bound.
pub fn dyadic_up(x: f64) -> Dyadic {
    Dyadic::from_f64(x)
}

/// Interval `[0, x]` for a nonnegative double bound.
pub fn bound_interval(x: f64) -> DyadicInterval {
    DyadicInterval::new(Dyadic::zero(), Dyadic::from_f64(x).round(53, Round::Up))
}
