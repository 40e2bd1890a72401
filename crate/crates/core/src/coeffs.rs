//! Exact arithmetic in `Z[s, t]`.
//!
//! Every matrix entry, map coefficient and chain coefficient in this crate is a
//! [`Poly`]. Terms are kept in a `BTreeMap` keyed by [`Mono`], whose ordering is
//! graded-lexicographic, so iteration and serialization are deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A monomial `s^s_deg * t^t_deg`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Mono {
    pub s_deg: u32,
    pub t_deg: u32,
}

impl Mono {
    pub const ONE: Mono = Mono { s_deg: 0, t_deg: 0 };

    pub fn new(s_deg: u32, t_deg: u32) -> Self {
        Mono { s_deg, t_deg }
    }

    pub fn degree(&self) -> u32 {
        self.s_deg + self.t_deg
    }

    fn mul(self, other: Mono) -> Mono {
        Mono::new(self.s_deg + other.s_deg, self.t_deg + other.t_deg)
    }
}

impl Ord for Mono {
    // graded, then lex with s > t
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.s_deg.cmp(&self.s_deg))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in the commuting variables `s` and `t` with integer coefficients.
///
/// No stored coefficient is ever zero, so structural equality is ring equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        Poly::monomial(c, 0, 0)
    }

    pub fn s() -> Self {
        Poly::monomial(1, 1, 0)
    }

    pub fn t() -> Self {
        Poly::monomial(1, 0, 1)
    }

    pub fn monomial(c: i64, s_deg: u32, t_deg: u32) -> Self {
        let mut p = Poly::zero();
        p.add_term(Mono::new(s_deg, t_deg), BigInt::from(c));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Mono::ONE).is_some_and(|c| c.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigInt)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the constant term.
    pub fn constant_term(&self) -> BigInt {
        self.terms.get(&Mono::ONE).cloned().unwrap_or_default()
    }

    pub fn coeff(&self, m: Mono) -> BigInt {
        self.terms.get(&m).cloned().unwrap_or_default()
    }

    /// `self` is `c` for an integer `c`.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&Mono::ONE).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Mono, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_default();
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    /// Substitute integers for `s` and `t`.
    pub fn eval(&self, s0: &BigInt, t0: &BigInt) -> BigInt {
        self.terms
            .iter()
            .map(|(m, c)| c * s0.pow(m.s_deg) * t0.pow(m.t_deg))
            .sum()
    }

    pub fn eval_i64(&self, s0: i64, t0: i64) -> BigInt {
        self.eval(&BigInt::from(s0), &BigInt::from(t0))
    }

    /// Substitute integers and return the result as a constant polynomial.
    pub fn specialize(&self, s0: i64, t0: i64) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Mono::ONE, self.eval_i64(s0, t0));
        p
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    /// Whether every coefficient of `self` lies in `{0, ±1}` and there is at
    /// most one term.
    pub fn is_signed_monomial(&self) -> bool {
        self.terms.len() <= 1 && self.terms.values().all(|c| c.abs().is_one())
    }
}

impl From<i64> for Poly {
    fn from(c: i64) -> Self {
        Poly::constant(c)
    }
}

impl From<BigInt> for Poly {
    fn from(c: BigInt) -> Self {
        let mut p = Poly::zero();
        p.add_term(Mono::ONE, c);
        p
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, -c.clone());
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        self += &rhs;
        self
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(mut self, rhs: Poly) -> Poly {
        self -= &rhs;
        self
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(*mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

fn fmt_mono(m: &Mono) -> String {
    let mut parts = Vec::new();
    match m.s_deg {
        0 => {}
        1 => parts.push("s".to_string()),
        d => parts.push(format!("s^{d}")),
    }
    match m.t_deg {
        0 => {}
        1 => parts.push("t".to_string()),
        d => parts.push(format!("t^{d}")),
    }
    parts.join("*")
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let body = fmt_mono(m);
            if body.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{body}")?;
            } else {
                write!(f, "{abs}*{body}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot parse polynomial {input:?}: {reason}")]
pub struct ParsePolyError {
    pub input: String,
    pub reason: String,
}

impl FromStr for Poly {
    type Err = ParsePolyError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ParsePolyError {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty input"));
        }
        let mut out = Poly::zero();
        // split into signed terms
        let mut terms = Vec::new();
        let mut cur = String::new();
        for (i, ch) in compact.chars().enumerate() {
            if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        terms.push(cur);
        for term in terms {
            let (neg, body) = match term.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, term.strip_prefix('+').unwrap_or(&term)),
            };
            if body.is_empty() {
                return Err(err("dangling sign"));
            }
            let mut coeff = BigInt::one();
            let mut mono = Mono::ONE;
            for factor in body.split('*') {
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => (b, e.parse::<u32>().map_err(|_| err("bad exponent"))?),
                    None => (factor, 1),
                };
                match base {
                    "s" => mono.s_deg += exp,
                    "t" => mono.t_deg += exp,
                    digits => {
                        let c: BigInt = digits.parse().map_err(|_| err("bad factor"))?;
                        coeff *= c.pow(exp);
                    }
                }
            }
            out.add_term(mono, if neg { -coeff } else { coeff });
        }
        Ok(out)
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Convenience for tests and reports: the value as `i64` if it is a small constant.
pub fn small_constant(p: &Poly) -> Option<i64> {
    p.as_constant().and_then(|c| c.to_i64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        s.parse().unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(&p("s + t") + &p("-s"), Poly::t());
        let q = p("3 - 2*s*t^2");
        assert_eq!(&Poly::zero() + &q, q);
        assert_eq!(&p("1 + s*t") + &p("1 + s*t"), p("2 + 2*s*t"));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&Poly::s() * &Poly::t(), p("s*t"));
        let q = p("s^2 - 7*t + 4");
        assert_eq!(&Poly::one() * &q, q);
        assert_eq!(&p("s + t") * &p("s - t"), p("s^2 - t^2"));
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("1 + s + s*t").eval_i64(0, 0), BigInt::from(1));
        assert_eq!(Poly::s().eval_i64(1, 0), BigInt::from(1));
        assert_eq!(p("s^2 + 2*t").eval_i64(2, 3), BigInt::from(10));
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let q = &p("s + 1") - &p("s");
        assert_eq!(q.len(), 1);
        assert!(q.is_one());
        assert!((&q - &q).is_zero());
    }

    #[test]
    fn display_is_graded() {
        assert_eq!(
            p("t + s^2 + 1 - s*t + s").to_string(),
            "1 + s + t + s^2 - s*t"
        );
        assert_eq!(p("-2*t").to_string(), "-2*t");
        assert_eq!(Poly::zero().to_string(), "0");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("".parse::<Poly>().is_err());
        assert!("s + x".parse::<Poly>().is_err());
        assert!("s^".parse::<Poly>().is_err());
    }

    #[test]
    fn big_coefficients_do_not_overflow() {
        let big = Poly::constant(i64::MAX);
        let sq = &big * &big;
        let expect = BigInt::from(i64::MAX) * BigInt::from(i64::MAX);
        assert_eq!(sq.constant_term(), expect);
    }
}
