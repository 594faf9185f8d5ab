//! Text line format: `<re> <im> : a(+1) ab(-2) b(+2) bb(-1)`.
//!
//! `re` and `im` are integers or `p/q` fractions; `ab`, `bb` are the
//! conjugated variables; a repeated factor is written repeatedly. The
//! constant monomial is written as `1`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Coeff, Monomial, PolyHamiltonian, VariableId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected `<re> <im> : <factors>`")]
    Layout { line: usize },
    #[error("line {line}: bad rational `{text}`")]
    Rational { line: usize, text: String },
    #[error("line {line}: bad factor `{text}`")]
    Factor { line: usize, text: String },
}

fn parse_rational(text: &str, line: usize) -> Result<BigRational, ParseError> {
    let err = || ParseError::Rational { line, text: text.to_string() };
    let norm = text.replace('\u{2212}', "-");
    let (n, d) = match norm.split_once('/') {
        Some((n, d)) => (n.trim().to_string(), d.trim().to_string()),
        None => (norm.trim().to_string(), "1".to_string()),
    };
    let n: BigInt = n.trim_start_matches('+').parse().map_err(|_| err())?;
    let d: BigInt = d.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(BigRational::new(n, d))
}

fn parse_factor(text: &str, line: usize) -> Result<VariableId, ParseError> {
    let err = || ParseError::Factor { line, text: text.to_string() };
    let norm = text.replace('\u{2212}', "-");
    let (tag, rest) = norm.split_once('(').ok_or_else(err)?;
    let idx = rest.strip_suffix(')').ok_or_else(err)?;
    let index: i32 = idx.trim_start_matches('+').parse().map_err(|_| err())?;
    match tag {
        "a" => Ok(VariableId::a(index)),
        "ab" => Ok(VariableId::abar(index)),
        "b" => Ok(VariableId::b(index)),
        "bb" => Ok(VariableId::bbar(index)),
        _ => Err(err()),
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for PolyHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, c) in self.iter() {
            write_rational(f, &c.re)?;
            f.write_str(" ")?;
            write_rational(f, &c.im)?;
            writeln!(f, " : {m}")?;
        }
        Ok(())
    }
}

impl FromStr for PolyHamiltonian {
    type Err = ParseError;

    /// Blank lines and `#` comments are skipped; repeated monomials add up.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = PolyHamiltonian::zero();
        for (n, raw) in s.lines().enumerate() {
            let line = n + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (c, factors) = text.split_once(':').ok_or(ParseError::Layout { line })?;
            let parts: Vec<&str> = c.split_whitespace().collect();
            let [re, im] = parts[..] else { return Err(ParseError::Layout { line }) };
            let coeff = Coeff::new(parse_rational(re, line)?, parse_rational(im, line)?);
            let factors = factors.trim();
            let vars = if factors == "1" {
                Vec::new()
            } else {
                factors.split_whitespace().map(|t| parse_factor(t, line)).collect::<Result<Vec<_>, _>>()?
            };
            p.add_term(Monomial::from_vars(vars), coeff);
        }
        Ok(p)
    }
}
