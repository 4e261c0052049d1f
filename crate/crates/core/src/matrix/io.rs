//! Plain-text matrix files: the first line is `n`, then `n^2` entries in
//! row-major order, one exact Gaussian rational per line (`a/b+c/d i`).

use crate::error::{Error, Result};
use crate::matrix::RationalMatrix;
use crate::scalar::GaussianRational;

pub fn parse_matrix(text: &str) -> Result<RationalMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?
        .parse()
        .map_err(|_| Error::Parse("first line must be the dimension".into()))?;
    let rest: Vec<&str> = lines.collect();
    let tokens: Vec<String> = if rest.len() == n * n {
        rest.iter().map(|s| s.to_string()).collect()
    } else {
        // Whitespace-separated; a lone "i" after "a/b+c/d", or a "+..." token,
        // continues the previous entry.
        let mut out: Vec<String> = Vec::new();
        for t in rest.iter().flat_map(|l| l.split_whitespace()) {
            let continues = |prev: &String| {
                let signed = prev.char_indices().any(|(k, c)| k > 0 && (c == '+' || c == '-'));
                (t == "i" && signed && !prev.ends_with('i')) || t.starts_with('+')
            };
            match out.last_mut() {
                Some(prev) if continues(prev) => prev.push_str(t),
                _ => out.push(t.to_string()),
            }
        }
        out
    };
    if tokens.len() != n * n {
        return Err(Error::Parse(format!(
            "expected {} entries, found {}",
            n * n,
            tokens.len()
        )));
    }
    let mut m = RationalMatrix::zero(n);
    for (idx, t) in tokens.iter().enumerate() {
        m.set(idx / n, idx % n, GaussianRational::parse(t)?);
    }
    Ok(m)
}

pub fn format_matrix(m: &RationalMatrix) -> String {
    let n = m.dim();
    let mut s = format!("{n}\n");
    for i in 0..n {
        for j in 0..n {
            s.push_str(&m.get(i, j).to_string());
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn roundtrip() {
        let mut m = RationalMatrix::zero(2);
        m.set(0, 1, GaussianRational::new(rat(1, 2), rat(-3, 4)));
        m.set(1, 0, GaussianRational::i());
        let s = format_matrix(&m);
        assert_eq!(parse_matrix(&s).unwrap(), m);
        let spaced = "2\n0 1/2-3/4i\ni 0\n";
        assert_eq!(parse_matrix(spaced).unwrap(), m);
        let with_space_i = "1\n1/2+3/4 i\n";
        assert_eq!(
            parse_matrix(with_space_i).unwrap().get(0, 0),
            GaussianRational::new(rat(1, 2), rat(3, 4))
        );
        assert!(parse_matrix("2\n1\n2\n3\n").is_err());
    }
}
