//! Exact Grassmann-algebra arithmetic.
//!
//! A superfunction is a finite sum of (coefficient × odd monomial) terms
//! over a chart. Odd monomials are kept in strictly ascending index order;
//! every product is normalized by sorting with an inversion count, which is
//! the single source of truth for all Koszul signs in the crate. Odd
//! derivatives act from the left throughout.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One};
use serde::{Deserialize, Serialize};

use crate::chart::{ChartRef, ConormalSpec, CoordId, Topology};
use crate::coeff::{Coefficient, CoefficientDto};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_len(l: usize) -> Self {
        if l % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// Result of a parity query: homogeneous even/odd, or mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityCheck {
    Even,
    Odd,
    Inhomogeneous,
}

/// Strictly increasing list of odd-coordinate indices; empty = unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OddMonomial(pub Vec<u16>);

impl OddMonomial {
    pub fn unit() -> Self {
        OddMonomial(Vec::new())
    }

    pub fn single(a: usize) -> Self {
        OddMonomial(vec![a as u16])
    }

    pub fn new(indices: Vec<u16>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("odd monomial indices must be strictly increasing".into()));
        }
        Ok(OddMonomial(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parity(&self) -> Parity {
        Parity::from_len(self.len())
    }

    pub fn contains(&self, a: usize) -> bool {
        self.0.binary_search(&(a as u16)).is_ok()
    }
}

/// Merge two ascending lists of pairwise-anticommuting generators, counting
/// the inversions one block makes moving through the other. Returns None on
/// a repeated index (the product vanishes).
pub(crate) fn merge_anticommuting(a: &[u16], b: &[u16]) -> Option<(bool, Vec<u16>)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut neg = false;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining a-elements
            if (a.len() - i) % 2 == 1 {
                neg = !neg;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((neg, out))
}

/// Element of the Grassmann algebra over the coefficient ring of a chart.
#[derive(Debug, Clone)]
pub struct Superfunction {
    pub chart: ChartRef,
    terms: BTreeMap<OddMonomial, Coefficient>,
}

impl PartialEq for Superfunction {
    fn eq(&self, other: &Self) -> bool {
        self.chart == other.chart && self.terms == other.terms
    }
}

impl Eq for Superfunction {}

impl Superfunction {
    pub fn zero(chart: ChartRef) -> Self {
        Superfunction { chart, terms: BTreeMap::new() }
    }

    pub fn from_coeff(chart: ChartRef, c: Coefficient) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(OddMonomial::unit(), c);
        }
        Superfunction { chart, terms }
    }

    pub fn constant(chart: ChartRef, s: Scalar) -> Self {
        let n = chart.even_dim();
        Superfunction::from_coeff(chart, Coefficient::constant(n, s))
    }

    pub fn one(chart: ChartRef) -> Self {
        Superfunction::constant(chart, Scalar::one())
    }

    /// The even coordinate function x_a.
    pub fn even_coordinate(chart: ChartRef, a: usize) -> Result<Self> {
        if a >= chart.even_dim() {
            return Err(Error::IndexOutOfRange(format!("even index {a}")));
        }
        let n = chart.even_dim();
        Ok(Superfunction::from_coeff(chart, Coefficient::coordinate(n, a)))
    }

    /// The odd coordinate function psi_a.
    pub fn odd_coordinate(chart: ChartRef, a: usize) -> Result<Self> {
        if a >= chart.odd_dim() {
            return Err(Error::IndexOutOfRange(format!("odd index {a}")));
        }
        let n = chart.even_dim();
        let mut terms = BTreeMap::new();
        terms.insert(OddMonomial::single(a), Coefficient::one(n));
        Ok(Superfunction { chart, terms })
    }

    pub fn monomial(chart: ChartRef, m: OddMonomial, c: Coefficient) -> Result<Self> {
        if m.0.iter().any(|&a| a as usize >= chart.odd_dim()) {
            return Err(Error::IndexOutOfRange("odd monomial index beyond chart".into()));
        }
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Ok(Superfunction { chart, terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OddMonomial, &Coefficient)> {
        self.terms.iter()
    }

    pub fn coeff_of(&self, m: &OddMonomial) -> Coefficient {
        self.terms.get(m).cloned().unwrap_or_else(|| Coefficient::zero(self.chart.even_dim()))
    }

    pub fn insert_add(&mut self, m: OddMonomial, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(entry) => {
                *entry = entry.add(&c);
                if entry.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.chart, other.chart);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_add(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Superfunction {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let mut out = Superfunction::zero(self.chart.clone());
        for (m, c) in &self.terms {
            out.insert_add(m.clone(), c.scale(s));
        }
        out
    }

    pub fn scale_coeff(&self, c: &Coefficient) -> Self {
        let mut out = Superfunction::zero(self.chart.clone());
        for (m, v) in &self.terms {
            out.insert_add(m.clone(), v.mul(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.chart.check_same(&other.chart)?;
        let mut out = Superfunction::zero(self.chart.clone());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some((neg, merged)) = merge_anticommuting(&m1.0, &m2.0) {
                    let mut c = c1.mul(c2);
                    if neg {
                        c = c.neg();
                    }
                    out.insert_add(OddMonomial(merged), c);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut out = Superfunction::one(self.chart.clone());
        for _ in 0..e {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// d/dx_a, acting coefficient-wise.
    pub fn partial_even(&self, a: usize) -> Result<Self> {
        if a >= self.chart.even_dim() {
            return Err(Error::IndexOutOfRange(format!("even index {a}")));
        }
        let mut out = Superfunction::zero(self.chart.clone());
        for (m, c) in &self.terms {
            out.insert_add(m.clone(), c.derivative(a));
        }
        Ok(out)
    }

    /// Left derivative d/dpsi_a: remove psi_a, with the sign of the
    /// generators preceding it; terms without psi_a vanish.
    pub fn partial_odd(&self, a: usize) -> Result<Self> {
        if a >= self.chart.odd_dim() {
            return Err(Error::IndexOutOfRange(format!("odd index {a}")));
        }
        let mut out = Superfunction::zero(self.chart.clone());
        for (m, c) in &self.terms {
            if let Ok(pos) = m.0.binary_search(&(a as u16)) {
                let mut indices = m.0.clone();
                indices.remove(pos);
                let c = if pos % 2 == 0 { c.clone() } else { c.neg() };
                out.insert_add(OddMonomial(indices), c);
            }
        }
        Ok(out)
    }

    pub fn parity(&self) -> ParityCheck {
        let mut seen: Option<Parity> = None;
        for m in self.terms.keys() {
            match seen {
                None => seen = Some(m.parity()),
                Some(p) if p != m.parity() => return ParityCheck::Inhomogeneous,
                _ => {}
            }
        }
        match seen {
            // zero is homogeneous of either parity; report it as even
            None => ParityCheck::Even,
            Some(Parity::Even) => ParityCheck::Even,
            Some(Parity::Odd) => ParityCheck::Odd,
        }
    }

    pub fn homogeneous_parity(&self) -> Result<Parity> {
        match self.parity() {
            ParityCheck::Even => Ok(Parity::Even),
            ParityCheck::Odd => Ok(Parity::Odd),
            ParityCheck::Inhomogeneous => {
                Err(Error::Parity("expected a homogeneous superfunction".into()))
            }
        }
    }

    /// Split into (even, odd) homogeneous parts.
    pub fn parity_split(&self) -> (Self, Self) {
        let mut even = Superfunction::zero(self.chart.clone());
        let mut odd = Superfunction::zero(self.chart.clone());
        for (m, c) in &self.terms {
            match m.parity() {
                Parity::Even => even.insert_add(m.clone(), c.clone()),
                Parity::Odd => odd.insert_add(m.clone(), c.clone()),
            }
        }
        (even, odd)
    }

    /// The psi-free part, as a coefficient.
    pub fn body(&self) -> Coefficient {
        self.coeff_of(&OddMonomial::unit())
    }

    /// The part with odd degree >= 1 (nilpotent).
    pub fn soul(&self) -> Self {
        let mut out = Superfunction::zero(self.chart.clone());
        for (m, c) in &self.terms {
            if !m.is_empty() {
                out.insert_add(m.clone(), c.clone());
            }
        }
        out
    }

    pub fn max_odd_degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    /// Multiplicative inverse: the body must be invertible in the coefficient
    /// ring, the nilpotent part is handled by a finite geometric series.
    pub fn inverse(&self) -> Result<Self> {
        let body = self.body();
        if body.is_zero() {
            return Err(Error::NonUnit("superfunction with vanishing body".into()));
        }
        let binv = body.inverse()?;
        let nil = self.soul().scale_coeff(&binv);
        // (body(1 + nil/body))^{-1}
        let mut out = Superfunction::one(self.chart.clone());
        let mut power = Superfunction::one(self.chart.clone());
        for _ in 0..self.chart.odd_dim() {
            power = power.mul(&nil)?.neg();
            if power.is_zero() {
                break;
            }
            out = out.add(&power);
        }
        Ok(out.scale_coeff(&binv))
    }

    /// Pullback to a conormal sub-chart: kill the normal even coordinates and
    /// the tangent-indexed odd ones, re-index the survivors.
    pub fn restrict(&self, c: &ConormalSpec) -> Result<Self> {
        self.chart.check_same(&c.chart)?;
        let sub = c.sub_chart();
        let kept = c.kept_odd();
        let mut out = Superfunction::zero(sub);
        'term: for (m, coeff) in &self.terms {
            let mut new_indices = Vec::with_capacity(m.len());
            for &a in &m.0 {
                match kept.iter().position(|&k| k == a as usize) {
                    Some(pos) => new_indices.push(pos as u16),
                    None => continue 'term,
                }
            }
            let restricted = coeff.restrict_zero(&c.normal)?;
            out.insert_add(OddMonomial(new_indices), restricted);
        }
        Ok(out)
    }

    /// Relabel coordinates along a simultaneous permutation of the even
    /// coordinates and their odd partners: new index perm[i] <- old index i.
    pub fn permute_coords(&self, perm: &[usize], target: ChartRef) -> Result<Self> {
        if perm.len() != self.chart.even_dim() || self.chart.odd_dim() != self.chart.even_dim() {
            return Err(Error::Invalid("permutation length must match the paired chart".into()));
        }
        let mut out = Superfunction::zero(target);
        for (m, c) in &self.terms {
            let mut indices: Vec<u16> = m.0.iter().map(|&a| perm[a as usize] as u16).collect();
            // re-sort with sign
            let mut neg = false;
            for i in 0..indices.len() {
                for j in (i + 1)..indices.len() {
                    if indices[i] > indices[j] {
                        indices.swap(i, j);
                        neg = !neg;
                    }
                }
            }
            let c = c.permute(perm);
            out.insert_add(OddMonomial(indices), if neg { c.neg() } else { c });
        }
        Ok(out)
    }

    /// Ring substitution: each coordinate maps to a superfunction on the
    /// target chart of matching parity. Coordinates without an explicit image
    /// map to the same-named coordinate of the target. Fourier frequencies
    /// only tolerate images of the form (same circle coordinate) + nilpotent
    /// even correction; the exponential then expands as a finite Taylor series.
    pub fn substitute(
        &self,
        images: &BTreeMap<CoordId, Superfunction>,
        target: &ChartRef,
    ) -> Result<Self> {
        for (id, img) in images {
            img.chart.check_same(target)?;
            let want = match id {
                CoordId::Even(a) => {
                    if *a >= self.chart.even_dim() {
                        return Err(Error::IndexOutOfRange(format!("{id}")));
                    }
                    ParityCheck::Even
                }
                CoordId::Odd(a) => {
                    if *a >= self.chart.odd_dim() {
                        return Err(Error::IndexOutOfRange(format!("{id}")));
                    }
                    ParityCheck::Odd
                }
            };
            if !img.is_zero() && img.parity() != want {
                return Err(Error::Parity(format!("image of {id} must be homogeneous of the coordinate's parity")));
            }
        }

        let even_image = |a: usize| -> Result<Superfunction> {
            if let Some(img) = images.get(&CoordId::Even(a)) {
                return Ok(img.clone());
            }
            let name = &self.chart.even[a].name;
            match target.even.iter().position(|c| &c.name == name) {
                Some(pos) => Superfunction::even_coordinate(target.clone(), pos),
                None => Err(Error::Invalid(format!("no image for even coordinate {name}"))),
            }
        };
        let odd_image = |a: usize| -> Result<Superfunction> {
            if let Some(img) = images.get(&CoordId::Odd(a)) {
                return Ok(img.clone());
            }
            let name = &self.chart.odd[a];
            match target.odd.iter().position(|c| c == name) {
                Some(pos) => Superfunction::odd_coordinate(target.clone(), pos),
                None => Err(Error::Invalid(format!("no image for odd coordinate {name}"))),
            }
        };

        let mut out = Superfunction::zero(target.clone());
        for (m, c) in &self.terms {
            let num = substitute_sum(&c.num, &self.chart, target, &even_image)?;
            let mut image = if c.den_is_one() {
                num
            } else {
                let den = substitute_sum(&c.den, &self.chart, target, &even_image)?;
                num.mul(&den.inverse()?)?
            };
            for &a in &m.0 {
                image = image.mul(&odd_image(a as usize)?)?;
            }
            out = out.add(&image);
        }
        Ok(out)
    }
}

fn substitute_sum(
    sum: &crate::coeff::CoeffSum,
    source: &ChartRef,
    target: &ChartRef,
    even_image: &dyn Fn(usize) -> Result<Superfunction>,
) -> Result<Superfunction> {
    let mut out = Superfunction::zero(target.clone());
    for (key, s) in sum.terms() {
        let mut term = Superfunction::constant(target.clone(), s.clone());
        for a in 0..key.pows.len() {
            if key.pows[a] > 0 {
                term = term.mul(&even_image(a)?.pow(key.pows[a])?)?;
            }
            let k = key.freqs[a];
            if k != 0 {
                let img = even_image(a)?;
                let name = &source.even[a].name;
                let pos = target
                    .even
                    .iter()
                    .position(|c| &c.name == name && c.topology == Topology::Circle)
                    .ok_or_else(|| {
                        Error::FourierSubstitution(format!(
                            "frequency-carrying coordinate {name} has no circle counterpart"
                        ))
                    })?;
                let base = Superfunction::even_coordinate(target.clone(), pos)?;
                let nil = img.sub(&base);
                if !nil.is_zero() && !nil.body().is_zero() {
                    return Err(Error::FourierSubstitution(format!(
                        "image of {name} must be the coordinate plus a nilpotent correction"
                    )));
                }
                let mode = Superfunction::from_coeff(target.clone(), {
                    let n = target.even_dim();
                    let mut freqs = vec![0i32; n];
                    freqs[pos] = k;
                    Coefficient::mode(n, &freqs)
                });
                term = term.mul(&mode)?;
                // e^{2pi i k nu} = sum_j (2pi i k)^j nu^j / j!
                let mut taylor = Superfunction::one(target.clone());
                let mut power = Superfunction::one(target.clone());
                let mut factorial = BigRational::one();
                for j in 1..=target.odd_dim() as i64 {
                    power = power.mul(&nil)?;
                    if power.is_zero() {
                        break;
                    }
                    factorial = factorial * BigRational::from(BigInt::from(j));
                    let coef = Scalar::two_pi_i_times(k as i64);
                    let mut factor = Scalar::one();
                    for _ in 0..j {
                        factor = factor.mul(&coef);
                    }
                    factor = factor.scale(&factorial.recip());
                    taylor = taylor.add(&power.scale(&factor));
                }
                term = term.mul(&taylor)?;
            }
        }
        out = out.add(&term);
    }
    Ok(out)
}

impl fmt::Display for Superfunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for &a in &m.0 {
                let name = self
                    .chart
                    .odd
                    .get(a as usize)
                    .cloned()
                    .unwrap_or_else(|| format!("psi{}", a + 1));
                write!(f, "*{name}")?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON round-trip: {"terms":[{"odd":[1,2],"coeff":{...}}]} with 1-based indices.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperfunctionTermDto {
    pub odd: Vec<u16>,
    pub coeff: CoefficientDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperfunctionDto {
    pub terms: Vec<SuperfunctionTermDto>,
}

impl Superfunction {
    pub fn to_dto(&self) -> SuperfunctionDto {
        SuperfunctionDto {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| SuperfunctionTermDto {
                    odd: m.0.iter().map(|a| a + 1).collect(),
                    coeff: c.to_dto(),
                })
                .collect(),
        }
    }

    pub fn from_dto(dto: &SuperfunctionDto, chart: ChartRef) -> Result<Self> {
        let n = chart.even_dim();
        let mut out = Superfunction::zero(chart.clone());
        for t in &dto.terms {
            let indices: Vec<u16> = t
                .odd
                .iter()
                .map(|a| {
                    a.checked_sub(1).ok_or_else(|| Error::Invalid("odd indices are 1-based".into()))
                })
                .collect::<Result<_>>()?;
            let m = OddMonomial::new(indices)?;
            if m.0.iter().any(|&a| a as usize >= chart.odd_dim()) {
                return Err(Error::IndexOutOfRange("odd index beyond chart".into()));
            }
            out.insert_add(m, Coefficient::from_dto(&t.coeff, n)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{cotangent_chart, SuperChart};
    use crate::scalar::rat_int;
    use proptest::prelude::*;

    fn chart(n: usize) -> ChartRef {
        cotangent_chart(&SuperChart::base_affine(n)).unwrap()
    }

    fn psi(ch: &ChartRef, a: usize) -> Superfunction {
        Superfunction::odd_coordinate(ch.clone(), a).unwrap()
    }

    fn x(ch: &ChartRef, a: usize) -> Superfunction {
        Superfunction::even_coordinate(ch.clone(), a).unwrap()
    }

    #[test]
    fn odd_generators_are_nilpotent_and_anticommute() {
        let ch = chart(2);
        let p1 = psi(&ch, 0);
        let p2 = psi(&ch, 1);
        assert!(p1.mul(&p1).unwrap().is_zero());
        let p12 = p1.mul(&p2).unwrap();
        let p21 = p2.mul(&p1).unwrap();
        assert_eq!(p21, p12.neg());
    }

    #[test]
    fn square_of_even_with_nilpotent_part() {
        let ch = chart(2);
        let f = x(&ch, 0).add(&psi(&ch, 0).mul(&psi(&ch, 1)).unwrap());
        let sq = f.mul(&f).unwrap();
        let expect = x(&ch, 0)
            .mul(&x(&ch, 0))
            .unwrap()
            .add(&x(&ch, 0).mul(&psi(&ch, 0).mul(&psi(&ch, 1)).unwrap()).unwrap().scale(&Scalar::from_int(2)));
        assert_eq!(sq, expect);
    }

    #[test]
    fn left_odd_derivative_signs() {
        let ch = chart(2);
        let p12 = psi(&ch, 0).mul(&psi(&ch, 1)).unwrap();
        assert_eq!(p12.partial_odd(1).unwrap(), psi(&ch, 0).neg());
        assert_eq!(p12.partial_odd(0).unwrap(), psi(&ch, 1));
        let dd = p12.partial_odd(0).unwrap().partial_odd(0).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn even_derivative_rules() {
        let ch = chart(1);
        let f = x(&ch, 0).mul(&x(&ch, 0)).unwrap().mul(&psi(&ch, 0)).unwrap();
        let df = f.partial_even(0).unwrap();
        assert_eq!(df, x(&ch, 0).mul(&psi(&ch, 0)).unwrap().scale(&Scalar::from_int(2)));
        assert!(Superfunction::constant(ch.clone(), Scalar::from_int(7)).partial_even(0).unwrap().is_zero());

        let tch = cotangent_chart(&SuperChart::base_torus(1)).unwrap();
        let mode = Superfunction::from_coeff(tch.clone(), Coefficient::mode(1, &[1]));
        let f = mode.mul(&psi(&tch, 0)).unwrap();
        let df = f.partial_even(0).unwrap();
        assert_eq!(df, f.scale(&Scalar::two_pi_i_times(1)));
    }

    #[test]
    fn parity_classification() {
        let ch = chart(3);
        assert_eq!(x(&ch, 0).mul(&x(&ch, 0)).unwrap().parity(), ParityCheck::Even);
        let p123 = psi(&ch, 0).mul(&psi(&ch, 1)).unwrap().mul(&psi(&ch, 2)).unwrap();
        assert_eq!(p123.parity(), ParityCheck::Odd);
        let mixed = Superfunction::one(ch.clone()).add(&psi(&ch, 0));
        assert_eq!(mixed.parity(), ParityCheck::Inhomogeneous);
    }

    #[test]
    fn substitution_identity_taylor_and_zero_section() {
        let ch = chart(2);
        let f = x(&ch, 0).mul(&psi(&ch, 0)).unwrap();
        let id = BTreeMap::new();
        assert_eq!(f.substitute(&id, &ch).unwrap(), f);

        // x -> x + psi1 psi2 expands by a finite Taylor series
        let mut map = BTreeMap::new();
        map.insert(CoordId::Even(0), x(&ch, 0).add(&psi(&ch, 0).mul(&psi(&ch, 1)).unwrap()));
        let g = x(&ch, 0).mul(&x(&ch, 0)).unwrap();
        let image = g.substitute(&map, &ch).unwrap();
        let expect = g.add(&x(&ch, 0).mul(&psi(&ch, 0).mul(&psi(&ch, 1)).unwrap()).unwrap().scale(&Scalar::from_int(2)));
        assert_eq!(image, expect);

        let mut zero_map = BTreeMap::new();
        zero_map.insert(CoordId::Odd(0), Superfunction::zero(ch.clone()));
        assert!(psi(&ch, 0).substitute(&zero_map, &ch).unwrap().is_zero());
    }

    #[test]
    fn fourier_substitution_nilpotent_shift() {
        let ch = cotangent_chart(&SuperChart::base_torus(1)).unwrap();
        let _mode = Superfunction::from_coeff(ch.clone(), Coefficient::mode(1, &[2]));
        let nil = psi(&ch, 0); // odd: not an even image; use psi-psi on a 2-torus instead
        assert_eq!(nil.parity(), ParityCheck::Odd);

        let ch2 = cotangent_chart(&SuperChart::base_torus(2)).unwrap();
        let mode2 = Superfunction::from_coeff(ch2.clone(), Coefficient::mode(2, &[1, 0]));
        let nu = psi(&ch2, 0).mul(&psi(&ch2, 1)).unwrap();
        let mut map = BTreeMap::new();
        map.insert(CoordId::Even(0), x(&ch2, 0).add(&nu));
        let img = mode2.substitute(&map, &ch2).unwrap();
        let expect = mode2.add(&mode2.mul(&nu).unwrap().scale(&Scalar::two_pi_i_times(1)));
        assert_eq!(img, expect);

        // a genuinely shifted image is rejected
        let mut bad = BTreeMap::new();
        bad.insert(CoordId::Even(0), x(&ch2, 0).add(&Superfunction::one(ch2.clone())));
        assert!(mode2.substitute(&bad, &ch2).is_err());
    }

    #[test]
    fn inverse_of_unit() {
        let ch = chart(2);
        let f = Superfunction::one(ch.clone())
            .add(&x(&ch, 0))
            .add(&psi(&ch, 0).mul(&psi(&ch, 1)).unwrap());
        let inv = f.inverse().unwrap();
        assert_eq!(f.mul(&inv).unwrap(), Superfunction::one(ch.clone()));
        assert!(psi(&ch, 0).inverse().is_err());
    }

    #[test]
    fn json_round_trip_bit_exact() {
        let ch = chart(2);
        let f = x(&ch, 0)
            .mul(&psi(&ch, 0)).unwrap()
            .scale(&Scalar::from_rational(crate::scalar::rat(3, 4)))
            .add(&psi(&ch, 0).mul(&psi(&ch, 1)).unwrap());
        let dto = f.to_dto();
        let json = serde_json::to_string(&dto).unwrap();
        let back = Superfunction::from_dto(&serde_json::from_str(&json).unwrap(), ch.clone()).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back.to_dto()).unwrap(), json);
    }

    // ---- property tests ------------------------------------------------

    fn arb_superfunction(n: usize) -> impl Strategy<Value = Superfunction> {
        let ch = chart(n);
        let term = (
            prop::collection::btree_set(0..n as u16, 0..=n.min(3)),
            -4i64..=4,
            prop::collection::vec(0u32..3, n),
        );
        prop::collection::vec(term, 0..4).prop_map(move |terms| {
            let mut out = Superfunction::zero(ch.clone());
            for (odd, num, pows) in terms {
                let m = OddMonomial(odd.into_iter().collect());
                let key = crate::coeff::CoeffKey { pows, freqs: vec![0; n] };
                let c = Coefficient::from_sum(crate::coeff::CoeffSum::term(
                    key,
                    Scalar::from_rational(rat_int(num)),
                ));
                out.insert_add(m, c);
            }
            out
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mul_is_associative(a in arb_superfunction(3), b in arb_superfunction(3), c in arb_superfunction(3)) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn mul_is_supercommutative(a in arb_superfunction(3), b in arb_superfunction(3)) {
            let (ae, ao) = a.parity_split();
            let (be, bo) = b.parity_split();
            for (f, pf) in [(ae, 0u8), (ao, 1u8)] {
                for (g, pg) in [(be.clone(), 0u8), (bo.clone(), 1u8)] {
                    let fg = f.mul(&g).unwrap();
                    let gf = g.mul(&f).unwrap();
                    let expect = if pf * pg == 1 { gf.neg() } else { gf };
                    prop_assert_eq!(fg, expect);
                }
            }
        }

        #[test]
        fn odd_derivatives_anticommute(a in arb_superfunction(3)) {
            let d0d0 = a.partial_odd(0).unwrap().partial_odd(0).unwrap();
            prop_assert!(d0d0.is_zero());
            let d0d1 = a.partial_odd(1).unwrap().partial_odd(0).unwrap();
            let d1d0 = a.partial_odd(0).unwrap().partial_odd(1).unwrap();
            prop_assert_eq!(d0d1, d1d0.neg());
        }

        #[test]
        fn super_leibniz_for_odd_derivative(a in arb_superfunction(3), b in arb_superfunction(3)) {
            for (f, sign) in [(a.parity_split().0, 1i64), (a.parity_split().1, -1i64)] {
                let fg = f.mul(&b).unwrap();
                let lhs = fg.partial_odd(0).unwrap();
                let mut rhs = f.partial_odd(0).unwrap().mul(&b).unwrap();
                let second = f.mul(&b.partial_odd(0).unwrap()).unwrap();
                rhs = rhs.add(&if sign == 1 { second } else { second.neg() });
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn substitution_is_functorial(a in arb_superfunction(2)) {
            let ch = chart(2);
            let xc = x(&ch, 0);
            let p0 = psi(&ch, 0);
            let p1 = psi(&ch, 1);
            // first map: x1 -> x1 + psi1 psi2, psi1 -> psi2
            let mut m1 = BTreeMap::new();
            m1.insert(CoordId::Even(0), xc.add(&p0.mul(&p1).unwrap()));
            m1.insert(CoordId::Odd(0), p1.clone());
            // second map: psi2 -> psi1 + x1 psi2
            let mut m2 = BTreeMap::new();
            m2.insert(CoordId::Odd(1), p0.add(&xc.mul(&p1).unwrap()));

            let twice = a.substitute(&m1, &ch).unwrap().substitute(&m2, &ch).unwrap();
            // composite: apply m2 to the images of m1, and to the defaults
            let mut composite = BTreeMap::new();
            for (id, img) in &m1 {
                composite.insert(*id, img.substitute(&m2, &ch).unwrap());
            }
            composite.entry(CoordId::Odd(1)).or_insert_with(|| m2[&CoordId::Odd(1)].clone());
            let once = a.substitute(&composite, &ch).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}
