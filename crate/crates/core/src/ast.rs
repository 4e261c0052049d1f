//! Textual syntax for *-polynomials.
//!
//! ```text
//! expr := (gen N) | (adj expr) | (mul expr*) | (add expr*)
//!       | (scal RE IM expr) | (unit)
//!       | (iota) | (iota_sqrt) | (one_minus_iota_sqrt)
//! ```
//!
//! `RE` and `IM` are exact fractions such as `-3/4`. The three function literals
//! name the scalar generators of `C([0,1], M_n)`. `(mul)` is the unit and `(add)`
//! is zero.

use std::fmt;

use crate::error::{Error, Result};
use crate::poly::{Letter, StarPoly};
use crate::scalar::{parse_rational, GaussianRational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FnLiteral {
    Iota,
    IotaSqrt,
    OneMinusIotaSqrt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ast {
    Gen(usize),
    Adj(Box<Ast>),
    Mul(Vec<Ast>),
    Add(Vec<Ast>),
    Scal(Rational, Rational, Box<Ast>),
    Unit,
    Lit(FnLiteral),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn tokenize(s: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<Tok>| {
        if !cur.is_empty() {
            out.push(Tok::Atom(std::mem::take(cur)));
        }
    };
    for c in s.chars() {
        match c {
            '(' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Open);
            }
            ')' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Close);
            }
            c if c.is_whitespace() => flush(&mut cur, &mut out),
            c => cur.push(c),
        }
    }
    flush(&mut cur, &mut out);
    out
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn atom(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Atom(a)) => Ok(a),
            other => Err(Error::Parse(format!("expected atom, found {other:?}"))),
        }
    }

    fn close(&mut self) -> Result<()> {
        match self.next() {
            Some(Tok::Close) => Ok(()),
            other => Err(Error::Parse(format!("expected ')', found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        match self.next() {
            Some(Tok::Open) => {}
            other => return Err(Error::Parse(format!("expected '(', found {other:?}"))),
        }
        let head = self.atom()?;
        let node = match head.as_str() {
            "gen" => {
                let a = self.atom()?;
                let k = a
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad generator index {a:?}")))?;
                Ast::Gen(k)
            }
            "adj" => Ast::Adj(Box::new(self.expr()?)),
            "mul" | "add" => {
                let mut args = Vec::new();
                while self.peek() == Some(&Tok::Open) {
                    args.push(self.expr()?);
                }
                if head == "mul" {
                    Ast::Mul(args)
                } else {
                    Ast::Add(args)
                }
            }
            "scal" => {
                let re = parse_rational(&self.atom()?)?;
                let im = parse_rational(&self.atom()?)?;
                Ast::Scal(re, im, Box::new(self.expr()?))
            }
            "unit" => Ast::Unit,
            "iota" => Ast::Lit(FnLiteral::Iota),
            "iota_sqrt" => Ast::Lit(FnLiteral::IotaSqrt),
            "one_minus_iota_sqrt" => Ast::Lit(FnLiteral::OneMinusIotaSqrt),
            other => return Err(Error::Parse(format!("unknown node kind {other:?}"))),
        };
        self.close()?;
        Ok(node)
    }
}

impl Ast {
    pub fn parse(s: &str) -> Result<Ast> {
        let mut p = Parser {
            toks: tokenize(s),
            pos: 0,
        };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Parse("trailing input after expression".into()));
        }
        Ok(e)
    }

    /// Build the polynomial. `literals` gives the generator indices of the
    /// function literals; without it they are rejected.
    pub fn to_poly(&self, literals: Option<&dyn Fn(FnLiteral) -> usize>) -> Result<StarPoly> {
        Ok(match self {
            Ast::Gen(k) => StarPoly::gen(*k),
            Ast::Adj(a) => a.to_poly(literals)?.adjoint(),
            Ast::Mul(args) => {
                let mut acc = StarPoly::unit();
                for a in args {
                    acc = acc.mul(&a.to_poly(literals)?);
                }
                acc
            }
            Ast::Add(args) => {
                let mut acc = StarPoly::zero();
                for a in args {
                    acc = acc.add(&a.to_poly(literals)?);
                }
                acc
            }
            Ast::Scal(re, im, a) => a
                .to_poly(literals)?
                .scale(&GaussianRational::new(re.clone(), im.clone())),
            Ast::Unit => StarPoly::unit(),
            Ast::Lit(l) => match literals {
                Some(f) => StarPoly::gen(f(*l)),
                None => {
                    return Err(Error::InvalidInput(format!(
                        "function literal {l:?} needs a function presentation"
                    )))
                }
            },
        })
    }

    /// Canonical syntax tree of a polynomial (generators only, no literals).
    pub fn from_poly(p: &StarPoly) -> Ast {
        let mut terms = Vec::new();
        for (w, z) in p.terms() {
            let factors: Vec<Ast> = w
                .0
                .iter()
                .map(|l: &Letter| {
                    if l.star {
                        Ast::Adj(Box::new(Ast::Gen(l.gen)))
                    } else {
                        Ast::Gen(l.gen)
                    }
                })
                .collect();
            let body = if factors.is_empty() {
                Ast::Unit
            } else if factors.len() == 1 {
                factors.into_iter().next().unwrap()
            } else {
                Ast::Mul(factors)
            };
            if z.is_one() {
                terms.push(body);
            } else {
                terms.push(Ast::Scal(z.re.clone(), z.im.clone(), Box::new(body)));
            }
        }
        if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Ast::Add(terms)
        }
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, args: &[Ast]| -> fmt::Result {
            write!(f, "({head}")?;
            for a in args {
                write!(f, " {a}")?;
            }
            write!(f, ")")
        };
        match self {
            Ast::Gen(k) => write!(f, "(gen {k})"),
            Ast::Adj(a) => write!(f, "(adj {a})"),
            Ast::Mul(args) => list(f, "mul", args),
            Ast::Add(args) => list(f, "add", args),
            Ast::Scal(re, im, a) => write!(f, "(scal {re} {im} {a})"),
            Ast::Unit => write!(f, "(unit)"),
            Ast::Lit(FnLiteral::Iota) => write!(f, "(iota)"),
            Ast::Lit(FnLiteral::IotaSqrt) => write!(f, "(iota_sqrt)"),
            Ast::Lit(FnLiteral::OneMinusIotaSqrt) => write!(f, "(one_minus_iota_sqrt)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_print_roundtrip() {
        let src = "(add (scal 1/2 -3 (mul (gen 0) (adj (gen 1)))) (unit) (iota))";
        let a = Ast::parse(src).unwrap();
        assert_eq!(a.to_string(), src);
        assert_eq!(Ast::parse(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn parse_errors() {
        for bad in ["(gen x)", "(gen 0", "(foo)", "(gen 0) (gen 1)", "(scal 1/0 0 (unit))", ""] {
            assert!(Ast::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn poly_roundtrip_through_ast() {
        let p = StarPoly::gen(3)
            .mul(&StarPoly::gen_star(0))
            .add(&StarPoly::unit().scale(&GaussianRational::i()));
        let a = Ast::from_poly(&p);
        assert_eq!(Ast::parse(&a.to_string()).unwrap().to_poly(None).unwrap(), p);
        assert!(Ast::parse("(iota)").unwrap().to_poly(None).is_err());
    }
}
