//! Supermanifold charts and coordinate sub-supermanifolds.
//!
//! A chart is a list of named even coordinates (each affine or circle) and
//! named odd coordinates, with a provenance tag recording how it was built.
//! Odd cotangent charts pair the i-th odd coordinate with the i-th even one;
//! contact charts carry exactly one extra odd coordinate at the end.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Affine,
    Circle,
}

/// Position of a coordinate inside a chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CoordId {
    Even(usize),
    Odd(usize),
}

impl CoordId {
    /// Coordinate parity: 0 for even, 1 for odd.
    pub fn parity(&self) -> u8 {
        match self {
            CoordId::Even(_) => 0,
            CoordId::Odd(_) => 1,
        }
    }
}

impl fmt::Display for CoordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordId::Even(a) => write!(f, "x{}", a + 1),
            CoordId::Odd(a) => write!(f, "psi{}", a + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvenCoord {
    pub name: String,
    pub topology: Topology,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// A purely even base manifold.
    Base,
    /// Odd cotangent bundle of a base chart: odd fibers paired with evens.
    PiOmega1,
    /// Odd tangent bundle of a base chart: odd coordinates stand for dx's.
    PiT,
    /// Contact extension: an odd cotangent chart with one extra odd direction.
    Contact,
    /// Conormal sub-chart of an odd cotangent chart.
    Conormal,
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperChart {
    pub even: Vec<EvenCoord>,
    pub odd: Vec<String>,
    pub provenance: Provenance,
}

pub type ChartRef = Arc<SuperChart>;

impl SuperChart {
    pub fn base(n: usize, topology: Topology) -> ChartRef {
        Arc::new(SuperChart {
            even: (1..=n).map(|i| EvenCoord { name: format!("x{i}"), topology }).collect(),
            odd: Vec::new(),
            provenance: Provenance::Base,
        })
    }

    pub fn base_affine(n: usize) -> ChartRef {
        SuperChart::base(n, Topology::Affine)
    }

    pub fn base_torus(n: usize) -> ChartRef {
        SuperChart::base(n, Topology::Circle)
    }

    pub fn even_dim(&self) -> usize {
        self.even.len()
    }

    pub fn odd_dim(&self) -> usize {
        self.odd.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.even_dim(), self.odd_dim())
    }

    pub fn all_circle(&self) -> bool {
        self.even.iter().all(|c| c.topology == Topology::Circle)
    }

    /// True for charts where the i-th odd coordinate is the odd conjugate of
    /// the i-th even one, so that the canonical one-form Σ dx^a ψ_a makes sense.
    pub fn has_cotangent_pairing(&self) -> bool {
        match self.provenance {
            Provenance::PiOmega1 => true,
            Provenance::Conormal => self.even_dim() == self.odd_dim(),
            _ => false,
        }
    }

    pub fn check_same(&self, other: &SuperChart) -> Result<()> {
        if self != other {
            return Err(Error::ChartMismatch(format!(
                "expected chart ({}|{}) {:?}, got ({}|{}) {:?}",
                self.even_dim(),
                self.odd_dim(),
                self.provenance,
                other.even_dim(),
                other.odd_dim(),
                other.provenance
            )));
        }
        Ok(())
    }
}

/// Odd cotangent chart of a purely even chart: (x^a ; psi_a), dimension (n|n).
pub fn cotangent_chart(base: &SuperChart) -> Result<ChartRef> {
    if base.odd_dim() != 0 {
        return Err(Error::Provenance(
            "odd cotangent charts are built from purely even charts".into(),
        ));
    }
    Ok(Arc::new(SuperChart {
        even: base.even.clone(),
        odd: (1..=base.even_dim()).map(|i| format!("psi{i}")).collect(),
        provenance: Provenance::PiOmega1,
    }))
}

/// Odd tangent chart: same shape as the cotangent one, but the odd
/// coordinates stand for the differentials dx^a themselves.
pub fn tangent_chart(base: &SuperChart) -> Result<ChartRef> {
    if base.odd_dim() != 0 {
        return Err(Error::Provenance("odd tangent charts are built from purely even charts".into()));
    }
    Ok(Arc::new(SuperChart {
        even: base.even.clone(),
        odd: (1..=base.even_dim()).map(|i| format!("dx{i}")).collect(),
        provenance: Provenance::PiT,
    }))
}

/// Contact extension: one extra odd coordinate appended to an odd cotangent chart.
pub fn contact_chart(cy: &SuperChart) -> Result<ChartRef> {
    if cy.provenance != Provenance::PiOmega1 {
        return Err(Error::Provenance("contact extension applies to odd cotangent charts".into()));
    }
    let mut odd = cy.odd.clone();
    odd.push("eps".into());
    Ok(Arc::new(SuperChart { even: cy.even.clone(), odd, provenance: Provenance::Contact }))
}

/// A coordinate submanifold X = {x^a = 0 : a ∈ normal} of the base of an odd
/// cotangent chart, together with its conormal sub-supermanifold
/// {x^a = 0 (a ∈ normal), psi_b = 0 (b ∉ normal)}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConormalSpec {
    pub chart: ChartRef,
    /// Indices of the even coordinates that vanish on X, strictly increasing.
    pub normal: Vec<usize>,
}

impl ConormalSpec {
    pub fn new(chart: ChartRef, normal: &[usize]) -> Result<Self> {
        if !matches!(chart.provenance, Provenance::PiOmega1 | Provenance::Contact) {
            return Err(Error::Provenance(
                "conormals live inside odd cotangent charts (or their contact extensions)".into(),
            ));
        }
        let n = chart.even_dim();
        let mut sorted = normal.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != normal.len() {
            return Err(Error::Invalid("duplicate normal indices".into()));
        }
        if sorted.iter().any(|&a| a >= n) {
            return Err(Error::IndexOutOfRange(format!("normal index beyond even dimension {n}")));
        }
        Ok(ConormalSpec { chart, normal: sorted })
    }

    /// Tangent (kept) even indices, strictly increasing.
    pub fn tangent(&self) -> Vec<usize> {
        (0..self.chart.even_dim()).filter(|a| !self.normal.contains(a)).collect()
    }

    /// Dimension (r | n-r) of the conormal, r = dim X.
    pub fn dims(&self) -> (usize, usize) {
        let r = self.chart.even_dim() - self.normal.len();
        (r, self.chart.even_dim() - r)
    }

    /// The conormal chart: kept evens, then the normal-indexed odd coordinates.
    pub fn sub_chart(&self) -> ChartRef {
        let even = self.tangent().iter().map(|&a| self.chart.even[a].clone()).collect();
        let odd = self.normal.iter().map(|&a| self.chart.odd[a].clone()).collect();
        Arc::new(SuperChart { even, odd, provenance: Provenance::Conormal })
    }

    /// Odd indices of the ambient chart that survive the restriction
    /// (the conormal directions), strictly increasing.
    pub fn kept_odd(&self) -> Vec<usize> {
        self.normal.clone()
    }

    /// Odd indices killed by the restriction. On contact charts this
    /// includes the contact direction (restriction along the zero section).
    pub fn killed_odd(&self) -> Vec<usize> {
        let mut killed: Vec<usize> =
            (0..self.chart.even_dim()).filter(|a| !self.normal.contains(a)).collect();
        if self.chart.provenance == Provenance::Contact {
            killed.push(self.chart.odd_dim() - 1);
        }
        killed
    }

    /// Sign of the permutation (tangent..., normal...) of (0..n): the
    /// orientation factor relating the split local frame to the ascending one.
    pub fn split_sign(&self) -> i8 {
        let mut seq: Vec<usize> = self.tangent();
        seq.extend(self.normal.iter().copied());
        let mut sign = 1i8;
        for i in 0..seq.len() {
            for j in (i + 1)..seq.len() {
                if seq[i] > seq[j] {
                    sign = -sign;
                }
            }
        }
        sign
    }
}

impl fmt::Display for SuperChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let evens: Vec<&str> = self.even.iter().map(|c| c.name.as_str()).collect();
        let odds: Vec<&str> = self.odd.iter().map(|s| s.as_str()).collect();
        write!(f, "({} ; {})", evens.join(","), odds.join(","))
    }
}

// ---------------------------------------------------------------------------
// JSON description per the documented schema:
// {"even":[{"name":"x1","topology":"circle"}],"odd":["psi1"],"provenance":"pi-omega1"}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartDto {
    pub even: Vec<EvenCoord>,
    pub odd: Vec<String>,
    pub provenance: Provenance,
}

impl SuperChart {
    pub fn to_dto(&self) -> ChartDto {
        ChartDto { even: self.even.clone(), odd: self.odd.clone(), provenance: self.provenance }
    }

    pub fn from_dto(dto: ChartDto) -> Result<ChartRef> {
        let mut names: Vec<&String> = dto.even.iter().map(|c| &c.name).chain(dto.odd.iter()).collect();
        names.sort();
        names.dedup();
        if names.len() != dto.even.len() + dto.odd.len() {
            return Err(Error::Invalid("coordinate names must be distinct".into()));
        }
        Ok(Arc::new(SuperChart { even: dto.even, odd: dto.odd, provenance: dto.provenance }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cotangent_pairs_coordinates() {
        let y = SuperChart::base_affine(1);
        let cy = cotangent_chart(&y).unwrap();
        assert_eq!(cy.dims(), (1, 1));
        assert_eq!(cy.odd, vec!["psi1"]);

        let t2 = SuperChart::base_torus(2);
        let ct = cotangent_chart(&t2).unwrap();
        assert_eq!(ct.dims(), (2, 2));
        assert!(ct.all_circle());

        // applying twice is a precondition error
        assert!(cotangent_chart(&ct).is_err());
    }

    #[test]
    fn contact_adds_one_odd() {
        let cy = cotangent_chart(&SuperChart::base_affine(2)).unwrap();
        let hat = contact_chart(&cy).unwrap();
        assert_eq!(hat.dims(), (2, 3));
        assert_eq!(hat.odd.last().unwrap(), "eps");
        assert!(contact_chart(&hat).is_err());
    }

    #[test]
    fn conormal_shapes() {
        let cy = cotangent_chart(&SuperChart::base_torus(3)).unwrap();
        let c = ConormalSpec::new(cy.clone(), &[2]).unwrap();
        assert_eq!(c.dims(), (2, 1));
        let sub = c.sub_chart();
        assert_eq!(sub.even.len(), 2);
        assert_eq!(sub.odd, vec!["psi3"]);
        assert_eq!(c.split_sign(), 1);

        let c2 = ConormalSpec::new(cy, &[0]).unwrap();
        // permutation (x2, x3, x1): two transpositions -> even
        assert_eq!(c2.split_sign(), 1);
    }

    #[test]
    fn split_sign_odd_case() {
        let cy = cotangent_chart(&SuperChart::base_torus(2)).unwrap();
        let c = ConormalSpec::new(cy, &[0]).unwrap();
        // sequence (x2, x1): one inversion
        assert_eq!(c.split_sign(), -1);
    }

    #[test]
    fn chart_json_schema() {
        let cy = cotangent_chart(&SuperChart::base_torus(1)).unwrap();
        let s = serde_json::to_string(&cy.to_dto()).unwrap();
        assert_eq!(
            s,
            "{\"even\":[{\"name\":\"x1\",\"topology\":\"circle\"}],\"odd\":[\"psi1\"],\"provenance\":\"pi-omega1\"}"
        );
        let back = SuperChart::from_dto(serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(*back, *cy);
    }
}
