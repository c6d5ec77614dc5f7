//! Coefficient functions of the even coordinates.
//!
//! A term is x^e · e^{2πi⟨k,x⟩} with an exact [`Scalar`] in front; a
//! [`CoeffSum`] is a finite canonical sum of such terms and a
//! [`Coefficient`] is a quotient of two sums. Pure polynomials have all
//! frequencies zero, pure Fourier sums have all powers zero; the quotient
//! representation is what makes divergence, Hamiltonian solves and the
//! F-map exact without ever leaving the ring.
//!
//! Equality of quotients is decided by cross-multiplication, so no gcd
//! machinery is needed; a quotient with a single-term denominator is folded
//! back into a plain sum whenever the division is exact.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_string, GaussRat, Rational, Scalar};

/// Monomial key: per even coordinate a polynomial power and an integer frequency.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoeffKey {
    pub pows: Vec<u32>,
    pub freqs: Vec<i32>,
}

impl CoeffKey {
    pub fn unit(n: usize) -> Self {
        CoeffKey { pows: vec![0; n], freqs: vec![0; n] }
    }

    pub fn is_unit(&self) -> bool {
        self.pows.iter().all(|p| *p == 0) && self.freqs.iter().all(|k| *k == 0)
    }

    fn merge(&self, other: &Self) -> Self {
        debug_assert_eq!(self.pows.len(), other.pows.len());
        CoeffKey {
            pows: self.pows.iter().zip(&other.pows).map(|(a, b)| a + b).collect(),
            freqs: self.freqs.iter().zip(&other.freqs).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Canonical finite sum of coefficient terms; zero terms are never stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CoeffSum {
    nvars: usize,
    terms: BTreeMap<CoeffKey, Scalar>,
}

impl CoeffSum {
    pub fn zero(n: usize) -> Self {
        CoeffSum { nvars: n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Scalar) -> Self {
        let mut out = CoeffSum::zero(n);
        out.insert_add(CoeffKey::unit(n), c);
        out
    }

    pub fn one(n: usize) -> Self {
        CoeffSum::constant(n, Scalar::one())
    }

    pub fn term(key: CoeffKey, c: Scalar) -> Self {
        let mut out = CoeffSum::zero(key.pows.len());
        out.insert_add(key, c);
        out
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CoeffKey, &Scalar)> {
        self.terms.iter()
    }

    pub fn insert_add(&mut self, key: CoeffKey, c: Scalar) {
        debug_assert_eq!(key.pows.len(), self.nvars);
        debug_assert_eq!(key.freqs.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(Scalar::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert_add(k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        CoeffSum {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = CoeffSum::zero(self.nvars);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                out.insert_add(k1.merge(k2), c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut out = CoeffSum::zero(self.nvars);
        for (k, v) in &self.terms {
            out.insert_add(k.clone(), v.mul(c));
        }
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = CoeffSum::zero(self.nvars);
        for (k, v) in &self.terms {
            let key = CoeffKey { pows: k.pows.clone(), freqs: k.freqs.iter().map(|f| -f).collect() };
            out.insert_add(key, v.conj());
        }
        out
    }

    /// d/dx_a: power rule plus the exact (2πi)k_a mode factor.
    pub fn derivative(&self, a: usize) -> Self {
        let mut out = CoeffSum::zero(self.nvars);
        for (k, c) in &self.terms {
            if k.pows[a] > 0 {
                let mut key = k.clone();
                key.pows[a] -= 1;
                out.insert_add(key, c.scale(&Rational::from(num::BigInt::from(k.pows[a]))));
            }
            if k.freqs[a] != 0 {
                out.insert_add(k.clone(), c.mul(&Scalar::two_pi_i_times(k.freqs[a] as i64)));
            }
        }
        out
    }

    /// Substitute x_kill = 0, re-keying onto the kept coordinates. Terms
    /// carrying positive powers of a killed coordinate vanish; killed
    /// frequencies evaluate to one and the surviving modes merge.
    pub fn restrict_zero(&self, kill: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.nvars).filter(|i| !kill.contains(i)).collect();
        let mut out = CoeffSum::zero(keep.len());
        'term: for (k, c) in &self.terms {
            for &i in kill {
                if k.pows[i] > 0 {
                    continue 'term;
                }
            }
            let key = CoeffKey {
                pows: keep.iter().map(|&i| k.pows[i]).collect(),
                freqs: keep.iter().map(|&i| k.freqs[i]).collect(),
            };
            out.insert_add(key, c.clone());
        }
        out
    }

    /// Re-key into a chart with `new_n` even coordinates; `map[i]` is the new
    /// position of old coordinate i.
    pub fn extend(&self, new_n: usize, map: &[usize]) -> Self {
        let mut out = CoeffSum::zero(new_n);
        for (k, c) in &self.terms {
            let mut pows = vec![0u32; new_n];
            let mut freqs = vec![0i32; new_n];
            for (old, &new) in map.iter().enumerate() {
                pows[new] = k.pows[old];
                freqs[new] = k.freqs[old];
            }
            out.insert_add(CoeffKey { pows, freqs }, c.clone());
        }
        out
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        self.extend(perm.len(), perm)
    }

    fn try_div_term(&self, key: &CoeffKey, c: &Scalar) -> Option<CoeffSum> {
        let mut out = CoeffSum::zero(self.nvars);
        for (k, v) in &self.terms {
            let mut pows = Vec::with_capacity(k.pows.len());
            for (p, q) in k.pows.iter().zip(&key.pows) {
                if p < q {
                    return None;
                }
                pows.push(p - q);
            }
            let freqs = k.freqs.iter().zip(&key.freqs).map(|(a, b)| a - b).collect();
            let scalar = v.div(c).ok()?;
            out.insert_add(CoeffKey { pows, freqs }, scalar);
        }
        Some(out)
    }
}

/// Exact quotient of coefficient sums. The denominator is one in the common
/// case; it is nontrivial exactly where the formulas divide (1/ρ, α⁻¹,
/// inverse symplectic matrices).
#[derive(Debug, Clone)]
pub struct Coefficient {
    pub num: CoeffSum,
    pub den: CoeffSum,
}

impl Coefficient {
    pub fn from_sum(num: CoeffSum) -> Self {
        let n = num.nvars();
        Coefficient { num, den: CoeffSum::one(n) }.normalized()
    }

    pub fn zero(n: usize) -> Self {
        Coefficient { num: CoeffSum::zero(n), den: CoeffSum::one(n) }
    }

    pub fn one(n: usize) -> Self {
        Coefficient { num: CoeffSum::one(n), den: CoeffSum::one(n) }
    }

    pub fn constant(n: usize, c: Scalar) -> Self {
        Coefficient { num: CoeffSum::constant(n, c), den: CoeffSum::one(n) }
    }

    /// The coordinate function x_a.
    pub fn coordinate(n: usize, a: usize) -> Self {
        let mut key = CoeffKey::unit(n);
        key.pows[a] = 1;
        Coefficient { num: CoeffSum::term(key, Scalar::one()), den: CoeffSum::one(n) }
    }

    /// The mode e^{2πi⟨k,x⟩}.
    pub fn mode(n: usize, freqs: &[i32]) -> Self {
        let key = CoeffKey { pows: vec![0; n], freqs: freqs.to_vec() };
        Coefficient { num: CoeffSum::term(key, Scalar::one()), den: CoeffSum::one(n) }
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalized(mut self) -> Self {
        let n = self.num.nvars();
        if self.num.is_zero() {
            self.den = CoeffSum::one(n);
            return self;
        }
        if self.den.len() == 1 {
            let (k, c) = self.den.terms().next().unwrap();
            let already_one = k.is_unit() && c.as_gauss() == Some(GaussRat::one());
            if !already_one {
                if let Some(q) = self.num.try_div_term(k, c) {
                    return Coefficient { num: q, den: CoeffSum::one(n) };
                }
            }
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Coefficient { num: self.num.add(&other.num), den: self.den.clone() }
                .normalized();
        }
        Coefficient {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
        .normalized()
    }

    pub fn neg(&self) -> Self {
        Coefficient { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Coefficient { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }.normalized()
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        Coefficient { num: self.num.scale(c), den: self.den.clone() }.normalized()
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::Division("division by zero coefficient".into()));
        }
        Ok(Coefficient { num: self.num.mul(&other.den), den: self.den.mul(&other.num) }
            .normalized())
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Division("inverse of zero coefficient".into()));
        }
        Ok(Coefficient { num: self.den.clone(), den: self.num.clone() }.normalized())
    }

    pub fn derivative(&self, a: usize) -> Self {
        if self.den_is_one() {
            return Coefficient::from_sum(self.num.derivative(a));
        }
        // (n/d)' = (n'd - nd')/d^2
        let num = self
            .num
            .derivative(a)
            .mul(&self.den)
            .add(&self.num.mul(&self.den.derivative(a)).neg());
        Coefficient { num, den: self.den.mul(&self.den) }.normalized()
    }

    pub fn conj(&self) -> Self {
        Coefficient { num: self.num.conj(), den: self.den.conj() }.normalized()
    }

    pub fn real_part(&self) -> Self {
        let half = Scalar::from_rational(crate::scalar::rat(1, 2));
        self.add(&self.conj()).scale(&half)
    }

    pub fn imag_part(&self) -> Self {
        // (c - conj c) / 2i
        let minus_half_i = Scalar::from_gauss(GaussRat {
            re: Rational::from(num::BigInt::from(0)),
            im: crate::scalar::rat(-1, 2),
        });
        self.sub(&self.conj()).scale(&minus_half_i)
    }

    pub fn den_is_one(&self) -> bool {
        self.den.len() == 1
            && self
                .den
                .terms()
                .next()
                .map(|(k, c)| k.is_unit() && c.as_gauss() == Some(GaussRat::one()))
                .unwrap_or(false)
    }

    /// Invertible as a function germ: nonzero constant term, or a single
    /// pure mode. Quotients are units when both sides are.
    pub fn is_unit(&self) -> bool {
        let sum_unit = |s: &CoeffSum| -> bool {
            if s.is_zero() {
                return false;
            }
            let n = s.nvars();
            if s.terms().any(|(k, _)| *k == CoeffKey::unit(n)) {
                return true;
            }
            s.len() == 1
                && s.terms().next().map(|(k, _)| k.pows.iter().all(|p| *p == 0)).unwrap_or(false)
        };
        sum_unit(&self.num) && sum_unit(&self.den)
    }

    /// Constant term of a denominator-free coefficient.
    pub fn constant_part(&self) -> Result<Scalar> {
        if !self.den_is_one() {
            return Err(Error::Division("coefficient has a nontrivial denominator".into()));
        }
        let n = self.num.nvars();
        Ok(self
            .num
            .terms()
            .find(|(k, _)| **k == CoeffKey::unit(n))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Scalar::zero))
    }

    /// Average over the torus: the zero-frequency coefficient, with the
    /// volume normalized to one. Polynomial powers are rejected; circle
    /// coordinates carry Fourier modes only.
    pub fn zero_mode(&self) -> Result<Scalar> {
        if !self.den_is_one() {
            return Err(Error::NonCompact("cannot integrate a quotient coefficient".into()));
        }
        let mut out = Scalar::zero();
        for (k, c) in self.num.terms() {
            if k.pows.iter().any(|p| *p > 0) {
                return Err(Error::NonCompact(
                    "polynomial powers on circle coordinates cannot be integrated".into(),
                ));
            }
            if k.freqs.iter().all(|f| *f == 0) {
                out = out.add(c);
            }
        }
        Ok(out)
    }

    pub fn restrict_zero(&self, kill: &[usize]) -> Result<Self> {
        let den = self.den.restrict_zero(kill);
        if den.is_zero() {
            return Err(Error::Division("denominator vanishes on the restriction locus".into()));
        }
        Ok(Coefficient { num: self.num.restrict_zero(kill), den }.normalized())
    }

    pub fn extend(&self, new_n: usize, map: &[usize]) -> Self {
        Coefficient { num: self.num.extend(new_n, map), den: self.den.extend(new_n, map) }
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        Coefficient { num: self.num.permute(perm), den: self.den.permute(perm) }
    }

    /// Purely polynomial: no Fourier modes anywhere.
    pub fn is_polynomial(&self) -> bool {
        self.num.terms().chain(self.den.terms()).all(|(k, _)| k.freqs.iter().all(|f| *f == 0))
    }

    pub fn as_scalar(&self) -> Option<Scalar> {
        if !self.den_is_one() {
            return None;
        }
        if self.num.is_zero() {
            return Some(Scalar::zero());
        }
        if self.num.len() == 1 {
            let (k, c) = self.num.terms().next().unwrap();
            if k.is_unit() {
                return Some(c.clone());
            }
        }
        None
    }
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl Eq for Coefficient {}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_sum(f: &mut fmt::Formatter<'_>, s: &CoeffSum) -> fmt::Result {
            if s.is_zero() {
                return write!(f, "0");
            }
            let mut first = true;
            for (k, c) in s.terms() {
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "({c})")?;
                for (i, p) in k.pows.iter().enumerate() {
                    if *p == 1 {
                        write!(f, "*x{}", i + 1)?;
                    } else if *p > 1 {
                        write!(f, "*x{}^{}", i + 1, p)?;
                    }
                }
                if k.freqs.iter().any(|q| *q != 0) {
                    write!(f, "*e{:?}", k.freqs)?;
                }
            }
            Ok(())
        }
        if self.den_is_one() {
            write_sum(f, &self.num)
        } else {
            write!(f, "[")?;
            write_sum(f, &self.num)?;
            write!(f, "] / [")?;
            write_sum(f, &self.den)?;
            write!(f, "]")
        }
    }
}

// ---------------------------------------------------------------------------
// JSON round-trip: exact strings only.

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScalarTermDto {
    pub tau: i32,
    pub re: String,
    pub im: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoeffTermDto {
    pub pows: Vec<u32>,
    pub freqs: Vec<i32>,
    pub scalar: Vec<ScalarTermDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoefficientDto {
    pub num: Vec<CoeffTermDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<CoeffTermDto>>,
}

pub fn scalar_to_dto(s: &Scalar) -> Vec<ScalarTermDto> {
    s.terms()
        .map(|(p, c)| ScalarTermDto {
            tau: *p,
            re: rational_string(&c.re),
            im: rational_string(&c.im),
        })
        .collect()
}

pub fn scalar_from_dto(dto: &[ScalarTermDto]) -> Result<Scalar> {
    let mut out = Scalar::zero();
    for t in dto {
        out = out.add(&Scalar::monomial(
            t.tau,
            GaussRat { re: parse_rational(&t.re)?, im: parse_rational(&t.im)? },
        ));
    }
    Ok(out)
}

fn sum_to_dto(s: &CoeffSum) -> Vec<CoeffTermDto> {
    s.terms()
        .map(|(k, c)| CoeffTermDto {
            pows: k.pows.clone(),
            freqs: k.freqs.clone(),
            scalar: scalar_to_dto(c),
        })
        .collect()
}

fn sum_from_dto(dto: &[CoeffTermDto], n: usize) -> Result<CoeffSum> {
    let mut out = CoeffSum::zero(n);
    for t in dto {
        if t.pows.len() != n || t.freqs.len() != n {
            return Err(Error::Invalid(format!("coefficient term must have {n} entries")));
        }
        out.insert_add(
            CoeffKey { pows: t.pows.clone(), freqs: t.freqs.clone() },
            scalar_from_dto(&t.scalar)?,
        );
    }
    Ok(out)
}

impl Coefficient {
    pub fn to_dto(&self) -> CoefficientDto {
        CoefficientDto {
            num: sum_to_dto(&self.num),
            den: if self.den_is_one() { None } else { Some(sum_to_dto(&self.den)) },
        }
    }

    pub fn from_dto(dto: &CoefficientDto, n: usize) -> Result<Self> {
        let num = sum_from_dto(&dto.num, n)?;
        let den = match &dto.den {
            Some(d) => sum_from_dto(d, n)?,
            None => CoeffSum::one(n),
        };
        if den.is_zero() {
            return Err(Error::Invalid("zero denominator in coefficient".into()));
        }
        Ok(Coefficient { num, den })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn x(n: usize, a: usize) -> Coefficient {
        Coefficient::coordinate(n, a)
    }

    #[test]
    fn ring_ops_and_fractions() {
        let n = 2;
        let one = Coefficient::one(n);
        let f = x(n, 0).mul(&x(n, 0)).add(&one); // 1 + x1^2
        let g = x(n, 1);
        let q = f.div(&g).unwrap();
        assert_eq!(q.mul(&g), f);
        assert!(f.sub(&f).is_zero());
        assert_eq!(f.div(&f).unwrap(), one);
    }

    #[test]
    fn derivative_mixed_term() {
        let n = 1;
        // x * e^{2pi i x}
        let f = x(n, 0).mul(&Coefficient::mode(n, &[1]));
        let df = f.derivative(0);
        let expect = Coefficient::mode(n, &[1]).add(&f.scale(&Scalar::two_pi_i_times(1)));
        assert_eq!(df, expect);
    }

    #[test]
    fn quotient_derivative() {
        let n = 1;
        let f = Coefficient::one(n).div(&x(n, 0)).unwrap(); // 1/x
        let df = f.derivative(0);
        let expect = Coefficient::one(n).neg().div(&x(n, 0).mul(&x(n, 0))).unwrap();
        assert_eq!(df, expect);
    }

    #[test]
    fn restriction_merges_modes() {
        let n = 2;
        // e^{2pi i (x1 + x2)} + e^{2pi i x1} restricted to x2 = 0 gives 2 e^{2pi i x1}
        let f = Coefficient::mode(n, &[1, 1]).add(&Coefficient::mode(n, &[1, 0]));
        let r = f.restrict_zero(&[1]).unwrap();
        assert_eq!(r, Coefficient::mode(1, &[1]).scale(&Scalar::from_int(2)));
    }

    #[test]
    fn zero_mode_picks_average() {
        let n = 1;
        let f = Coefficient::mode(n, &[2]).add(&Coefficient::constant(n, Scalar::from_int(5)));
        assert_eq!(f.zero_mode().unwrap(), Scalar::from_int(5));
    }

    #[test]
    fn single_mode_division_is_exact() {
        let n = 1;
        let alpha = Coefficient::mode(n, &[1]).scale(&Scalar::from_int(2));
        let f = Coefficient::mode(n, &[3]);
        let q = f.div(&alpha).unwrap();
        assert!(q.den_is_one());
        assert_eq!(q.mul(&alpha), f);
    }

    #[test]
    fn real_and_imaginary_parts() {
        let n = 1;
        let i = Coefficient::constant(n, Scalar::from_gauss(GaussRat::i()));
        let f = x(n, 0).add(&i.mul(&x(n, 0)).scale(&Scalar::from_int(2)));
        assert_eq!(f.real_part(), x(n, 0));
        assert_eq!(f.imag_part(), x(n, 0).scale(&Scalar::from_int(2)));
        let m = Coefficient::mode(n, &[1]);
        let re2 = m.real_part().scale(&Scalar::from_int(2));
        assert_eq!(re2, m.add(&m.conj()));
    }

    #[test]
    fn zero_keeps_variable_count() {
        let n = 3;
        let z = x(n, 0).sub(&x(n, 0));
        assert!(z.is_zero());
        let back = z.add(&x(n, 2));
        assert_eq!(back, x(n, 2));
    }

    #[test]
    fn json_round_trip_exact() {
        let n = 2;
        let f = x(n, 0)
            .mul(&Coefficient::mode(n, &[1, -2]))
            .scale(&Scalar::monomial(1, GaussRat { re: rat(3, 4), im: rat_int(-1) }))
            .add(&Coefficient::one(n))
            .div(&x(n, 1).add(&Coefficient::one(n)))
            .unwrap();
        let dto = f.to_dto();
        let s = serde_json::to_string(&dto).unwrap();
        let back: CoefficientDto = serde_json::from_str(&s).unwrap();
        let g = Coefficient::from_dto(&back, n).unwrap();
        assert_eq!(f, g);
        assert_eq!(serde_json::to_string(&g.to_dto()).unwrap(), s);
    }
}
