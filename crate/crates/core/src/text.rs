//! Shared helpers for the plain-text input formats.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact rational for literals such as `3`, `-2/7`, `0.125` or `2.5e-3`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    if neg {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Ratio::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Meaningful lines of a text file: `#` comments and blank lines removed,
/// paired with 1-based line numbers.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Whitespace-separated integers on one line.
pub fn parse_ints(line_no: usize, s: &str) -> Result<Vec<i64>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<i64>()
                .map_err(|_| Error::parse(line_no, format!("expected integer, found `{tok}`")))
        })
        .collect()
}

/// `key = value` records; a key may appear only once.
pub fn key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (line_no, line) in content_lines(text) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, "expected `key = value`"))?;
        let key = k.trim().to_ascii_lowercase();
        if out.iter().any(|(_, existing, _)| *existing == key) {
            return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
        }
        out.push((line_no, key, v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators and denominators: scale through their bit lengths.
        let shift = r.numer().bits().max(r.denom().bits()) as i64 - 900;
        let n = (r.numer() >> shift.max(0) as usize).to_f64().unwrap_or(0.0);
        let d = (r.denom() >> shift.max(0) as usize).to_f64().unwrap_or(1.0);
        n / d
    })
}

pub(crate) fn one() -> BigRational {
    BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn rationals_from_literals() {
        assert_eq!(parse_rational("1/4"), Some(r(1, 4)));
        assert_eq!(parse_rational("-3"), Some(r(-3, 1)));
        assert_eq!(parse_rational("0.125"), Some(r(1, 8)));
        assert_eq!(parse_rational(".5"), Some(r(1, 2)));
        assert_eq!(parse_rational("2.5e-3"), Some(r(1, 400)));
        assert_eq!(parse_rational("1e2"), Some(r(100, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let lines: Vec<_> = content_lines("# head\n\n1 2 # tail\n  3\n").collect();
        assert_eq!(lines, vec![(3, "1 2"), (4, "3")]);
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(key_values("v = 1\nv = 2\n").is_err());
        let kv = key_values("V = 1 2\nshift=0 0").unwrap();
        assert_eq!(kv[0].1, "v");
        assert_eq!(kv[1].2, "0 0");
    }
}
