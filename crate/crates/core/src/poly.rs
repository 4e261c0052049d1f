//! Noncommutative *-polynomials over the Gaussian rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{GaussianRational, Rational};

/// A generator occurrence, possibly starred.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter {
    pub gen: usize,
    pub star: bool,
}

impl Letter {
    pub fn new(gen: usize, star: bool) -> Self {
        Letter { gen, star }
    }

    pub fn adjoint(self) -> Self {
        Letter {
            gen: self.gen,
            star: !self.star,
        }
    }
}

/// Product of letters; the empty word is the unit.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn letter(gen: usize, star: bool) -> Self {
        Word(vec![Letter::new(gen, star)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, o: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + o.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&o.0);
        Word(v)
    }

    pub fn adjoint(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.adjoint()).collect())
    }
}

// Length first, then lexicographic on (generator, starred).
impl Ord for Word {
    fn cmp(&self, o: &Self) -> Ordering {
        self.len().cmp(&o.len()).then_with(|| self.0.cmp(&o.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Finite sum of words with nonzero Gaussian-rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct StarPoly {
    terms: BTreeMap<Word, GaussianRational>,
}

impl StarPoly {
    pub fn zero() -> Self {
        StarPoly::default()
    }

    pub fn unit() -> Self {
        StarPoly::scalar(GaussianRational::one())
    }

    pub fn scalar(z: GaussianRational) -> Self {
        StarPoly::monomial(Word::unit(), z)
    }

    pub fn gen(i: usize) -> Self {
        StarPoly::monomial(Word::letter(i, false), GaussianRational::one())
    }

    pub fn gen_star(i: usize) -> Self {
        StarPoly::monomial(Word::letter(i, true), GaussianRational::one())
    }

    pub fn monomial(w: Word, z: GaussianRational) -> Self {
        let mut p = StarPoly::zero();
        p.add_term(w, z);
        p
    }

    pub fn terms(&self) -> &BTreeMap<Word, GaussianRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Scalar value if the polynomial is a multiple of the unit.
    pub fn as_scalar(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => self.terms.get(&Word::unit()).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, w: Word, z: GaussianRational) {
        if z.is_zero() {
            return;
        }
        let entry = self.terms.entry(w);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(z);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &z;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, o: &StarPoly) -> StarPoly {
        let mut r = self.clone();
        for (w, z) in &o.terms {
            r.add_term(w.clone(), z.clone());
        }
        r
    }

    pub fn sub(&self, o: &StarPoly) -> StarPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> StarPoly {
        StarPoly {
            terms: self.terms.iter().map(|(w, z)| (w.clone(), -z)).collect(),
        }
    }

    pub fn scale(&self, c: &GaussianRational) -> StarPoly {
        let mut r = StarPoly::zero();
        for (w, z) in &self.terms {
            r.add_term(w.clone(), z * c);
        }
        r
    }

    pub fn scale_rational(&self, c: &Rational) -> StarPoly {
        self.scale(&GaussianRational::real(c.clone()))
    }

    pub fn mul(&self, o: &StarPoly) -> StarPoly {
        let mut r = StarPoly::zero();
        for (w1, z1) in &self.terms {
            for (w2, z2) in &o.terms {
                r.add_term(w1.concat(w2), z1 * z2);
            }
        }
        r
    }

    pub fn adjoint(&self) -> StarPoly {
        StarPoly {
            terms: self
                .terms
                .iter()
                .map(|(w, z)| (w.adjoint(), z.conj()))
                .collect(),
        }
    }

    pub fn sum<'a>(it: impl IntoIterator<Item = &'a StarPoly>) -> StarPoly {
        it.into_iter().fold(StarPoly::zero(), |acc, p| acc.add(p))
    }

    pub fn product<'a>(it: impl IntoIterator<Item = &'a StarPoly>) -> StarPoly {
        it.into_iter().fold(StarPoly::unit(), |acc, p| acc.mul(p))
    }

    /// Generator indices that occur, ascending.
    pub fn generators(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self
            .terms
            .keys()
            .flat_map(|w| w.0.iter().map(|l| l.gen))
            .collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    /// Replace every generator by a polynomial (letters starred get the adjoint).
    pub fn substitute(&self, f: &dyn Fn(usize) -> Option<StarPoly>) -> Result<StarPoly> {
        let mut cache: HashMap<Letter, StarPoly> = HashMap::new();
        let mut r = StarPoly::zero();
        for (w, z) in &self.terms {
            let mut acc = StarPoly::scalar(z.clone());
            for l in &w.0 {
                if !cache.contains_key(l) {
                    let base = f(l.gen).ok_or(Error::MissingGenerator(l.gen))?;
                    cache.insert(*l, if l.star { base.adjoint() } else { base });
                }
                acc = acc.mul(&cache[l]);
            }
            r = r.add(&acc);
        }
        Ok(r)
    }

    /// Bound on the norm given per-generator bounds: `sum |z| prod bounds`.
    pub fn norm_bound(&self, gen_bound: &dyn Fn(usize) -> Rational) -> Rational {
        let mut total = Rational::from_integer(0.into());
        for (w, z) in &self.terms {
            let mut t = z.abs_upper();
            for l in &w.0 {
                t *= gen_bound(l.gen);
            }
            total += t;
        }
        total
    }
}

impl fmt::Debug for StarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, z) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({z})")?;
            for l in &w.0 {
                write!(f, "·g{}{}", l.gen, if l.star { "*" } else { "" })?;
            }
        }
        Ok(())
    }
}

/// Elements that a *-polynomial can be evaluated in.
pub trait StarAlgebra: Clone {
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn adjoint(&self) -> Self;
    fn scale(&self, z: &GaussianRational) -> Self;
}

/// Homomorphic evaluation of `p` with `assignment(i)` for generator `i`.
/// `one` is the identity of the target algebra.
pub fn poly_apply<E: StarAlgebra>(
    p: &StarPoly,
    assignment: &dyn Fn(usize) -> Option<E>,
    one: &E,
) -> Result<E> {
    let mut cache: HashMap<Letter, E> = HashMap::new();
    let mut acc: Option<E> = None;
    for (w, z) in p.terms() {
        let mut term: Option<E> = None;
        for l in &w.0 {
            if !cache.contains_key(l) {
                let base = assignment(l.gen).ok_or(Error::MissingGenerator(l.gen))?;
                cache.insert(*l, if l.star { base.adjoint() } else { base });
            }
            let v = &cache[l];
            term = Some(match term {
                None => v.clone(),
                Some(t) => t.mul(v),
            });
        }
        let term = term.unwrap_or_else(|| one.clone()).scale(z);
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
    }
    Ok(acc.unwrap_or_else(|| one.scale(&GaussianRational::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn adjoint_reverses_and_conjugates() {
        let p = StarPoly::gen(0)
            .mul(&StarPoly::gen_star(1))
            .scale(&GaussianRational::i());
        let q = p.adjoint();
        let expect = StarPoly::gen(1)
            .mul(&StarPoly::gen_star(0))
            .scale(&-GaussianRational::i());
        assert_eq!(q, expect);
        assert_eq!(q.adjoint(), p);
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = StarPoly::gen(2).add(&StarPoly::gen(2).neg());
        assert!(p.is_zero());
        let u = StarPoly::unit().scale_rational(&rat(1, 2));
        assert_eq!(u.as_scalar().unwrap(), GaussianRational::real(rat(1, 2)));
    }

    #[test]
    fn word_order_is_length_lex() {
        let a = Word(vec![Letter::new(5, true)]);
        let b = Word(vec![Letter::new(0, false), Letter::new(0, false)]);
        let c = Word(vec![Letter::new(5, false)]);
        assert!(Word::unit() < a && a < b && c < a);
    }
}
