//! Presentation descriptors used on the command line and in engine configs:
//!
//! ```text
//! matrix:n   fn:n   dimdrop:p,q   jiangsu   uhf:2^inf   uhf:2^inf*3^inf
//! tensor(D1,D2)   limit(matrix:d)
//! ```
//!
//! `limit(matrix:d)` is the limit of `M_d -> M_2d -> ...` along `x -> diag(x, x)`.

use std::sync::Arc;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::jiangsu::{jiangsu_presentation, DimensionDropPresentation};
use crate::presentation::{
    diagonal_limit, tensor_presentation, FunctionPresentation, MatrixPresentation, Presentation, TensorPresentation,
};
use crate::uhf::{uhf_presentation, SupernaturalNumber};

fn natural(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} in descriptor must be a natural number, got {s:?}")))
}

fn positive(s: &str, what: &str) -> Result<usize> {
    match natural(s, what)? {
        0 => Err(Error::Parse(format!("{what} must be at least 1"))),
        n => Ok(n),
    }
}

/// `inner` of `name(inner)`.
fn call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')
}

/// Byte offsets of the commas at parenthesis depth 0.
fn top_level_commas(s: &str) -> Vec<usize> {
    let mut depth = 0i32;
    let mut out = Vec::new();
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => out.push(i),
            _ => {}
        }
    }
    out
}

/// `tensor(D1,D2)` as its two legs. A comma inside `dimdrop:p,q` is also at
/// depth 0, so every split point is tried in order.
pub fn parse_tensor(s: &str, budget: &Budget) -> Result<TensorPresentation> {
    let s = s.trim();
    let inner = call(s, "tensor").ok_or_else(|| Error::Parse(format!("{s:?} is not tensor(D1,D2)")))?;
    let mut last = None;
    for c in top_level_commas(inner) {
        match (parse_presentation(&inner[..c], budget), parse_presentation(&inner[c + 1..], budget)) {
            (Ok(l), Ok(r)) => return tensor_presentation(l, r),
            (Err(e), _) | (_, Err(e)) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Parse(format!("{s:?} needs two comma-separated descriptors"))))
}

/// `cuntz:n`, `O2`, `O_inf` and spellings alike.
fn cuntz_index(s: &str) -> Option<String> {
    let t = s.to_ascii_lowercase().replace('_', "");
    let n = t.strip_prefix("cuntz:").or_else(|| t.strip_prefix('o'))?;
    match n {
        "inf" | "infinity" | "∞" => Some("inf".into()),
        _ => n.parse::<u32>().ok().filter(|&k| k >= 2).map(|k| k.to_string()),
    }
}

pub fn parse_presentation(s: &str, budget: &Budget) -> Result<Arc<dyn Presentation>> {
    let s = s.trim();
    let b = budget.clone();
    if let Some(n) = s.strip_prefix("matrix:") {
        return Ok(Arc::new(MatrixPresentation::new(positive(n, "matrix size")?, b)));
    }
    if let Some(n) = s.strip_prefix("fn:") {
        return Ok(Arc::new(FunctionPresentation::new(positive(n, "matrix size")?, b)));
    }
    if let Some(pq) = s.strip_prefix("dimdrop:") {
        let (p, q) = pq
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("{s:?} is not dimdrop:p,q")))?;
        return Ok(Arc::new(DimensionDropPresentation::new(
            positive(p, "p")?,
            positive(q, "q")?,
            b,
        )?));
    }
    if s == "jiangsu" {
        return Ok(Arc::new(jiangsu_presentation(b)?));
    }
    if let Some(n) = s.strip_prefix("uhf:") {
        return Ok(Arc::new(uhf_presentation(&SupernaturalNumber::parse(n)?, b)));
    }
    if s.starts_with("tensor(") {
        return Ok(Arc::new(parse_tensor(s, budget)?));
    }
    if let Some(inner) = call(s, "limit") {
        let d = inner
            .trim()
            .strip_prefix("matrix:")
            .ok_or_else(|| Error::Parse("limit(...) supports matrix:d stages only".into()))?;
        return Ok(Arc::new(diagonal_limit(positive(d, "matrix size")?, b)));
    }
    if let Some(n) = cuntz_index(s) {
        return Err(Error::Infeasible(format!(
            "O_{n} is purely infinite: it has no finite-dimensional or subhomogeneous backend, so no norm oracle can be built here"
        )));
    }
    Err(Error::Parse(format!("unknown presentation descriptor {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_round_trip() {
        let b = Budget::default();
        for d in ["matrix:2", "fn:3", "dimdrop:2,3", "jiangsu", "uhf:2^inf", "limit(matrix:2)"] {
            let p = parse_presentation(d, &b).unwrap();
            assert_eq!(p.descriptor(), d);
        }
        let t = parse_presentation("tensor(dimdrop:2,3,matrix:2)", &b).unwrap();
        assert_eq!(t.descriptor(), "tensor(dimdrop:2,3,matrix:2)");
        let t = parse_presentation("tensor(uhf:2^inf,uhf:2^inf)", &b).unwrap();
        assert_eq!(t.descriptor(), "tensor(uhf:2^inf,uhf:2^inf)");
        assert!(parse_presentation("matrix:0", &b).is_err());
        for d in ["cuntz:2", "O2", "O_inf", "cuntz:inf"] {
            assert!(matches!(parse_presentation(d, &b), Err(Error::Infeasible(_))), "{d}");
        }
        assert!(matches!(parse_presentation("toeplitz", &b), Err(Error::Parse(_))));
        assert!(parse_presentation("tensor(matrix:2)", &b).is_err());
    }
}
