//! Exact scalars: Gaussian rationals with a symbolic (2π) factor.
//!
//! Differentiating a Fourier mode е^{2πi⟨k,x⟩} multiplies it by (2πi)k_a.
//! To keep everything exact the factor 2π is carried as a formal symbol
//! with an integer exponent, so a scalar is a finite sum of terms
//! (a + bi)·(2π)^p with a, b ∈ ℚ. Addition, multiplication and division
//! by a single-term scalar stay inside the ring.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational with reduced representation and positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from(BigInt::from(n))
}

/// a + b·i with exact rational parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussRat {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussRat { re, im }
    }

    pub fn from_rational(re: Rational) -> Self {
        GaussRat { re, im: Rational::zero() }
    }

    pub fn zero() -> Self {
        GaussRat::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        GaussRat::from_rational(Rational::one())
    }

    pub fn i() -> Self {
        GaussRat { re: Rational::zero(), im: Rational::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        GaussRat { re: &self.re + &other.re, im: &self.im + &other.im }
    }

    pub fn neg(&self) -> Self {
        GaussRat { re: -self.re.clone(), im: -self.im.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        GaussRat {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::Division("division by zero scalar".into()));
        }
        let norm = &other.re * &other.re + &other.im * &other.im;
        let num = self.mul(&other.conj());
        Ok(GaussRat { re: num.re / norm.clone(), im: num.im / norm })
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "({}{}i)", self.re, self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

/// Finite sum Σ c_p·(2π)^p with Gaussian-rational c_p, keyed by the exponent p.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Scalar {
    terms: BTreeMap<i32, GaussRat>,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Scalar::from_gauss(GaussRat::one())
    }

    pub fn from_gauss(c: GaussRat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(0, c);
        }
        Scalar { terms }
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar::from_gauss(GaussRat::from_rational(r))
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::from_rational(rat_int(n))
    }

    /// c·(2π)^p as a single term.
    pub fn monomial(p: i32, c: GaussRat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(p, c);
        }
        Scalar { terms }
    }

    /// The exact factor (2πi)·k used by Fourier differentiation.
    pub fn two_pi_i_times(k: i64) -> Self {
        Scalar::monomial(1, GaussRat { re: Rational::zero(), im: rat_int(k) })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i32, &GaussRat)> {
        self.terms.iter()
    }

    /// The Gaussian-rational part at (2π)^0; None when other powers are present.
    pub fn as_gauss(&self) -> Option<GaussRat> {
        if self.terms.is_empty() {
            return Some(GaussRat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&0) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.as_gauss().and_then(|g| if g.im.is_zero() { Some(g.re) } else { None })
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (p, c) in &other.terms {
            let entry = terms.entry(*p).or_insert_with(GaussRat::zero);
            *entry = entry.add(c);
            if entry.is_zero() {
                terms.remove(p);
            }
        }
        Scalar { terms }
    }

    pub fn neg(&self) -> Self {
        Scalar { terms: self.terms.iter().map(|(p, c)| (*p, c.neg())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<i32, GaussRat> = BTreeMap::new();
        for (p, c) in &self.terms {
            for (q, d) in &other.terms {
                let prod = c.mul(d);
                if prod.is_zero() {
                    continue;
                }
                let entry = out.entry(p + q).or_insert_with(GaussRat::zero);
                *entry = entry.add(&prod);
                if entry.is_zero() {
                    out.remove(&(p + q));
                }
            }
        }
        Scalar { terms: out }
    }

    pub fn conj(&self) -> Self {
        Scalar { terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect() }
    }

    /// Exact division; the divisor must be a single (2π)-term.
    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.terms.is_empty() {
            return Err(Error::Division("division by zero scalar".into()));
        }
        if other.terms.len() != 1 {
            return Err(Error::Division(format!(
                "scalar divisor must be a single (2pi)-power term, got {other}"
            )));
        }
        let (q, d) = other.terms.iter().next().unwrap();
        let mut out = BTreeMap::new();
        for (p, c) in &self.terms {
            out.insert(p - q, c.div(d)?);
        }
        Ok(Scalar { terms: out })
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Scalar::zero();
        }
        Scalar {
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (*p, GaussRat { re: &c.re * r, im: &c.im * r }))
                .collect(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *p == 0 {
                write!(f, "{c}")?;
            } else if *p == 1 {
                write!(f, "{c}*(2pi)")?;
            } else {
                write!(f, "{c}*(2pi)^{p}")?;
            }
        }
        Ok(())
    }
}

/// Render a rational as a canonical exact string ("3/4", "-2").
pub fn rational_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let parse_int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>().map_err(|_| Error::Invalid(format!("bad integer `{t}`")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::Invalid("zero denominator".into()));
            }
            Ok(BigRational::new(parse_int(n)?, den))
        }
        None => Ok(BigRational::from(parse_int(s)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_field_ops() {
        let a = GaussRat::new(rat(1, 2), rat(3, 1));
        let b = GaussRat::new(rat(-2, 1), rat(1, 4));
        let prod = a.mul(&b);
        let back = prod.div(&b).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.mul(&a.conj()).im, Rational::zero());
    }

    #[test]
    fn scalar_two_pi_bookkeeping() {
        let t = Scalar::two_pi_i_times(3);
        let t2 = t.mul(&t);
        // (2pi i 3)^2 = -(2pi)^2 * 9
        let mut expect = BTreeMap::new();
        expect.insert(2, GaussRat::from_rational(rat_int(-9)));
        assert_eq!(t2, Scalar { terms: expect });
        let q = t2.div(&t).unwrap();
        assert_eq!(q, t);
    }

    #[test]
    fn scalar_division_rejects_multiterm() {
        let s = Scalar::one().add(&Scalar::monomial(1, GaussRat::one()));
        assert!(Scalar::one().div(&s).is_err());
    }

    #[test]
    fn rational_round_trip() {
        for s in ["3/4", "-7", "0", "22/7"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(rational_string(&r), s);
        }
    }
}
