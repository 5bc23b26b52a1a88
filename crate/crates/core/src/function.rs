//! Polynomials in creation operators and their textual grammar.
//!
//! A function of the chain's creation operators is a sum of monomials
//!
//! ```text
//! f = sum_t  c_t * prod_k (b_k^dag)^(e_tk)
//! ```
//!
//! written in the input grammar as terms joined by `+`, each term a `*`
//! product of an optional coefficient and variables `x<site>^<power>`:
//!
//! ```text
//! 0.5*x1^2 + [0,-1]*x1*x2 + 2
//! ```
//!
//! Site indices are 1-based. Coefficients are plain reals or `[re,im]`
//! pairs; `-` is accepted both as a sign and as a term separator. An
//! optional common shift turns every argument into `b_k^dag - shift`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One monomial: coefficient times a product of raised creation operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: Complex64,
    /// Exponent of `b_k^dag` per mode (0-based, full chain length).
    pub exponents: Vec<u32>,
}

impl Term {
    /// Total degree of the monomial.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// A polynomial in the chain's creation operators.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MonomialFunction {
    terms: Vec<Term>,
    shift: Option<Complex64>,
}

impl MonomialFunction {
    /// Empty function; populate with [`MonomialFunction::push_term`].
    pub fn new() -> MonomialFunction {
        MonomialFunction::default()
    }

    /// Single-monomial convenience constructor.
    pub fn monomial(coefficient: Complex64, exponents: Vec<u32>) -> Result<MonomialFunction> {
        let mut f = MonomialFunction::new();
        f.push_term(coefficient, exponents)?;
        Ok(f)
    }

    /// Append one monomial. Rejects zero coefficients, exponent lists whose
    /// length disagrees with earlier terms, and duplicate exponent lists.
    pub fn push_term(&mut self, coefficient: Complex64, exponents: Vec<u32>) -> Result<()> {
        if coefficient == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidFunction(
                "monomial with zero coefficient".into(),
            ));
        }
        if let Some(first) = self.terms.first() {
            if first.exponents.len() != exponents.len() {
                return Err(Error::InvalidFunction(format!(
                    "exponent list over {} modes after one over {}",
                    exponents.len(),
                    first.exponents.len()
                )));
            }
        }
        if self.terms.iter().any(|t| t.exponents == exponents) {
            return Err(Error::InvalidFunction(format!(
                "duplicate monomial with exponents {exponents:?}"
            )));
        }
        self.terms.push(Term {
            coefficient,
            exponents,
        });
        Ok(())
    }

    /// Shift applied to every argument: `f(b^dag - shift)`.
    pub fn set_shift(&mut self, shift: Option<Complex64>) {
        self.shift = match shift {
            Some(s) if s == Complex64::new(0.0, 0.0) => None,
            other => other,
        };
    }

    pub fn shift(&self) -> Option<Complex64> {
        self.shift
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Length of the exponent lists (0 while empty).
    pub fn modes(&self) -> usize {
        self.terms.first().map(|t| t.exponents.len()).unwrap_or(0)
    }

    /// Total degree of each term, in term order.
    pub fn term_degrees(&self) -> Vec<u32> {
        self.terms.iter().map(Term::degree).collect()
    }

    /// Largest term degree (0 for a constant).
    pub fn max_degree(&self) -> u32 {
        self.term_degrees().into_iter().max().unwrap_or(0)
    }

    /// True when every term has the same total degree.
    pub fn is_homogeneous(&self) -> bool {
        let d = self.term_degrees();
        d.windows(2).all(|w| w[0] == w[1])
    }

    /// 0-based modes that appear with a nonzero exponent somewhere.
    pub fn support(&self) -> Vec<usize> {
        let modes = self.modes();
        (0..modes)
            .filter(|&m| self.terms.iter().any(|t| t.exponents[m] > 0))
            .collect()
    }

    /// Validate non-emptiness; other invariants hold by construction.
    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidFunction("function has no terms".into()));
        }
        Ok(())
    }

    /// Parse the textual grammar over a chain of `modes` sites.
    pub fn parse(src: &str, modes: usize) -> Result<MonomialFunction> {
        Parser::new(src, modes).parse()
    }
}

impl fmt::Display for MonomialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let c = term.coefficient;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "[{},{}]", c.re, c.im)?;
            }
            for (mode, &e) in term.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", mode + 1)?,
                    _ => write!(f, "*x{}^{}", mode + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    modes: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, modes: usize) -> Parser<'a> {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            modes,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        match self.bump() {
            Some(got) if got == b => Ok(()),
            Some(got) => Err(self.err(format!(
                "expected '{}', found '{}'",
                b as char, got as char
            ))),
            None => Err(self.err(format!("expected '{}', found end of input", b as char))),
        }
    }

    fn parse(&mut self) -> Result<MonomialFunction> {
        let mut f = MonomialFunction::new();
        loop {
            let mut sign = 1.0f64;
            if let Some(b'-') = self.peek() {
                self.pos += 1;
                sign = -1.0;
            }
            let (coeff, exps) = self.parse_term()?;
            f.push_term(coeff * sign, exps)
                .map_err(|e| self.err(e.to_string()))?;
            match self.peek() {
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                }
                // a '-' both separates and signs the next term
                Some(b'-') => {}
                Some(other) => {
                    return Err(self.err(format!("expected '+' or '-', found '{}'", other as char)))
                }
            }
        }
        f.validate()?;
        Ok(f)
    }

    /// term := factor ('*' factor)*
    fn parse_term(&mut self) -> Result<(Complex64, Vec<u32>)> {
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut exps = vec![0u32; self.modes];
        loop {
            match self.peek() {
                Some(b'x') => {
                    let (mode, power) = self.parse_variable()?;
                    exps[mode] = exps[mode]
                        .checked_add(power)
                        .ok_or_else(|| self.err("exponent overflow"))?;
                }
                Some(b'[') => {
                    coeff *= self.parse_bracket()?;
                }
                Some(b) if b == b'.' || b.is_ascii_digit() => {
                    coeff *= Complex64::new(self.parse_real()?, 0.0);
                }
                Some(other) => {
                    return Err(self.err(format!("unexpected '{}' in term", other as char)))
                }
                None => return Err(self.err("unexpected end of input in term")),
            }
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        Ok((coeff, exps))
    }

    /// variable := 'x' digits ('^' digits)?
    fn parse_variable(&mut self) -> Result<(usize, u32)> {
        self.expect(b'x')?;
        let site = self.parse_uint()? as usize;
        if site == 0 || site > self.modes {
            return Err(self.err(format!(
                "site index {site} out of range 1..={}",
                self.modes
            )));
        }
        let power = if let Some(b'^') = self.peek() {
            self.pos += 1;
            self.parse_uint()?
        } else {
            1
        };
        Ok((site - 1, power))
    }

    /// bracket := '[' signed-real ',' signed-real ']'
    fn parse_bracket(&mut self) -> Result<Complex64> {
        self.expect(b'[')?;
        let re = self.parse_signed_real()?;
        self.expect(b',')?;
        let im = self.parse_signed_real()?;
        self.expect(b']')?;
        Ok(Complex64::new(re, im))
    }

    fn parse_signed_real(&mut self) -> Result<f64> {
        let sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1.0
            }
            Some(b'+') => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        Ok(sign * self.parse_real()?)
    }

    /// real := digits ['.' digits] [('e'|'E') ['+'|'-'] digits] | '.' digits ...
    fn parse_real(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        if self
            .bytes
            .get(self.pos)
            .is_some_and(|&b| b == b'e' || b == b'E')
        {
            self.pos += 1;
            if self
                .bytes
                .get(self.pos)
                .is_some_and(|&b| b == b'+' || b == b'-')
            {
                self.pos += 1;
            }
            let digits_start = self.pos;
            while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == digits_start {
                return Err(self.err("malformed exponent"));
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map_err(|e| self.err(format!("bad number '{}': {e}", &self.src[start..self.pos])))
    }

    fn parse_uint(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer"));
        }
        self.src[start..self.pos]
            .parse::<u32>()
            .map_err(|e| self.err(format!("bad integer: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_single_variable() {
        let f = MonomialFunction::parse("x1", 5).unwrap();
        assert_eq!(f.terms().len(), 1);
        assert_eq!(f.terms()[0].coefficient, c(1.0, 0.0));
        assert_eq!(f.terms()[0].exponents, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn parses_coefficient_and_power() {
        let f = MonomialFunction::parse("0.5*x2^3", 3).unwrap();
        assert_eq!(f.terms()[0].coefficient, c(0.5, 0.0));
        assert_eq!(f.terms()[0].exponents, vec![0, 3, 0]);
        assert_eq!(f.max_degree(), 3);
    }

    #[test]
    fn parses_complex_coefficient() {
        let f = MonomialFunction::parse("[0,-1]*x1*x2", 2).unwrap();
        assert_eq!(f.terms()[0].coefficient, c(0.0, -1.0));
        assert_eq!(f.terms()[0].exponents, vec![1, 1]);
    }

    #[test]
    fn parses_sum_with_constant() {
        let f = MonomialFunction::parse("2 + 0.25*x1^2", 2).unwrap();
        assert_eq!(f.terms().len(), 2);
        assert_eq!(f.terms()[0].exponents, vec![0, 0]);
        assert_eq!(f.terms()[0].coefficient, c(2.0, 0.0));
        assert!(!f.is_homogeneous());
    }

    #[test]
    fn minus_joins_and_negates() {
        let f = MonomialFunction::parse("-x1 - 2*x2", 2).unwrap();
        assert_eq!(f.terms()[0].coefficient, c(-1.0, 0.0));
        assert_eq!(f.terms()[1].coefficient, c(-2.0, 0.0));
    }

    #[test]
    fn scientific_notation() {
        let f = MonomialFunction::parse("1e-3*x1 + 2.5E+2*x2", 2).unwrap();
        assert_eq!(f.terms()[0].coefficient, c(1e-3, 0.0));
        assert_eq!(f.terms()[1].coefficient, c(250.0, 0.0));
    }

    #[test]
    fn repeated_variable_accumulates_power() {
        let f = MonomialFunction::parse("x1*x1^2", 1).unwrap();
        assert_eq!(f.terms()[0].exponents, vec![3]);
    }

    #[test]
    fn site_out_of_range() {
        let err = MonomialFunction::parse("x4", 3).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }

    #[test]
    fn duplicate_monomials_rejected() {
        let err = MonomialFunction::parse("x1 + 2*x1", 2).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }

    #[test]
    fn error_position_points_at_offender() {
        let err = MonomialFunction::parse("0.5*x1 ? x2", 2).unwrap_err();
        match err {
            Error::Parse { pos, .. } => assert_eq!(pos, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn display_round_trips() {
        for src in ["x1", "0.5*x2^3", "[0,-1]*x1*x2 + 2", "-1*x1 + -2.5*x3"] {
            let f = MonomialFunction::parse(src, 3).unwrap();
            let printed = f.to_string();
            let g = MonomialFunction::parse(&printed, 3).unwrap();
            assert_eq!(f, g, "round trip failed for {src} -> {printed}");
        }
    }

    #[test]
    fn support_and_homogeneity() {
        let f = MonomialFunction::parse("x1^2 + x1*x3", 4).unwrap();
        assert_eq!(f.support(), vec![0, 2]);
        assert!(f.is_homogeneous());
        assert_eq!(f.max_degree(), 2);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(MonomialFunction::parse("", 2).is_err());
        assert!(MonomialFunction::parse("   ", 2).is_err());
    }
}
