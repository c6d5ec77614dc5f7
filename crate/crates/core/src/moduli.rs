//! Tangent-space calculators for the deformation problems: torus moduli at
//! desk scale, section counts of normal bundles over the projective line,
//! truncated section dimensions, and the real-slice linearization.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bv::{bv_delta, BerezinVolume};
use crate::cartan::canonical_odd_symplectic;
use crate::chart::{ChartRef, Provenance, SuperChart, Topology};
use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::grassmann::{ParityCheck, Superfunction};
use crate::hodge::FourierComplex;
use crate::scalar::{rat, GaussRat, Rational, Scalar};

/// Normal bundle of the projective line: a list of line-bundle degrees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub degrees: Vec<i64>,
}

impl BundleSpec {
    pub fn new(degrees: Vec<i64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::Invalid("a normal bundle needs at least one summand".into()));
        }
        Ok(BundleSpec { degrees })
    }
}

/// Graded tangent dimensions and their provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuliReport {
    pub target: String,
    pub mclean: usize,
    pub extended: usize,
    pub even: usize,
    pub odd: usize,
    pub per_degree: Vec<usize>,
    pub provenance: Vec<String>,
}

/// Sections of O(d) on the projective line.
fn h0_line_bundle(d: i64) -> usize {
    if d >= 0 {
        (d + 1) as usize
    } else {
        0
    }
}

/// Graded section count Σ_k h⁰(Λᵏ N) for N = ⊕ O(dᵢ): the even part sums
/// odd k, the odd part sums even k ≥ 2.
pub fn bundle_zariski_dims(spec: &BundleSpec) -> (usize, usize) {
    let r = spec.degrees.len();
    let mut even = 0usize;
    let mut odd = 0usize;
    for mask in 1u32..(1 << r) {
        let k = mask.count_ones() as usize;
        let total: i64 = (0..r).filter(|i| mask & (1 << i) != 0).map(|i| spec.degrees[i]).sum();
        let h = h0_line_bundle(total);
        if k % 2 == 1 {
            even += h;
        } else {
            odd += h;
        }
    }
    (even, odd)
}

pub fn projective_line_report(spec: &BundleSpec) -> ModuliReport {
    let (even, odd) = bundle_zariski_dims(spec);
    let r = spec.degrees.len();
    let mut per_degree = vec![0usize; r + 1];
    for mask in 1u32..(1 << r) {
        let k = mask.count_ones() as usize;
        let total: i64 = (0..r).filter(|i| mask & (1 << i) != 0).map(|i| spec.degrees[i]).sum();
        per_degree[k] += h0_line_bundle(total);
    }
    ModuliReport {
        target: format!("p1 degrees {:?}", spec.degrees),
        mclean: per_degree.get(1).copied().unwrap_or(0),
        extended: even + odd,
        even,
        odd,
        per_degree,
        provenance: vec![
            "bundle_zariski_dims: exterior-power section count over the projective line".into(),
        ],
    }
}

/// The torus report: first Betti number (classical deformations) and the
/// full graded tangent space, computed two independent ways which must agree.
pub fn torus_moduli(m: usize) -> Result<ModuliReport> {
    if !(1..=4).contains(&m) {
        return Err(Error::Range(format!("torus dimension m={m}, supported 1..=4")));
    }
    let complex = FourierComplex::new(m, 1)?;
    let harmonic = complex.betti()?;
    let kernel = complex.closed_coclosed_kernel_dim();
    if kernel != harmonic.total {
        return Err(Error::Invalid(format!(
            "Betti sum {} disagrees with the stacked kernel {kernel}",
            harmonic.total
        )));
    }
    let even: usize = harmonic.betti.iter().skip(1).step_by(2).sum();
    let odd: usize = harmonic.betti.iter().step_by(2).sum();
    Ok(ModuliReport {
        target: format!("torus m={m}"),
        mclean: harmonic.betti[1],
        extended: harmonic.total,
        even,
        odd,
        per_degree: harmonic.betti.clone(),
        provenance: vec![
            "hodge.betti: exact ranks of the truncated Fourier complex".into(),
            "hodge.closed_coclosed_kernel_dim: kernel of the stacked (d, star d star)".into(),
        ],
    })
}

/// Dimension of the truncated section space of a torus conormal modulo
/// constants: all (frequency, odd-subset) basis elements at cutoff K minus
/// the constants.
pub fn sections_mod_constants_dim(m: usize, cutoff: i32) -> Result<usize> {
    if !(1..=4).contains(&m) {
        return Err(Error::Range(format!("torus dimension m={m}, supported 1..=4")));
    }
    if cutoff < 0 {
        return Err(Error::Range("cutoff must be nonnegative".into()));
    }
    let modes = (2 * cutoff as usize + 1).pow(m as u32);
    Ok(modes * (1usize << m) - 1)
}

/// Sections of the contact model: the constants are restored.
pub fn contact_sections_dim(m: usize, cutoff: i32) -> Result<usize> {
    Ok(sections_mod_constants_dim(m, cutoff)? + 1)
}

/// Dual numbers over superfunctions: a + t·b with t even, t² = 0.
#[derive(Debug, Clone)]
struct Jet {
    val: Superfunction,
    slope: Superfunction,
}

impl Jet {
    fn constant(chart: ChartRef, s: Scalar) -> Self {
        Jet { val: Superfunction::constant(chart.clone(), s), slope: Superfunction::zero(chart) }
    }

    fn mul(&self, other: &Jet) -> Result<Jet> {
        Ok(Jet {
            val: self.val.mul(&other.val)?,
            slope: self.val.mul(&other.slope)?.add(&self.slope.mul(&other.val)?),
        })
    }

    fn add(&self, other: &Jet) -> Jet {
        Jet { val: self.val.add(&other.val), slope: self.slope.add(&other.slope) }
    }
}

fn superfunction_imag(f: &Superfunction) -> Superfunction {
    let mut out = Superfunction::zero(f.chart.clone());
    for (m, c) in f.terms() {
        out.insert_add(m.clone(), c.imag_part());
    }
    out
}

/// The affine local chart of the real-slice model: (x^1..x^m ; ψ_1..ψ_m)
/// with the conormal pairing.
pub fn slice_chart(m: usize) -> ChartRef {
    Arc::new(SuperChart {
        even: (1..=m).map(|i| crate::chart::EvenCoord { name: format!("x{i}"), topology: Topology::Affine }).collect(),
        odd: (1..=m).map(|i| format!("psi{i}")).collect(),
        provenance: Provenance::Conormal,
    })
}

/// Linearization of the special-slice condition along the graph family
/// generated by Ψ. Returns (lhs, rhs):
///   lhs — the first-order Berezinian expansion of the deformed holomorphic
///         density, imaginary part, divided by the real part at time zero,
///         with the deformation parameter normalized to half speed so the
///         slope matches the BV operator;
///   rhs — ΔΨ for the volume (Re ρ)·D* and the canonical odd symplectic form.
/// The contract lhs = rhs holds identically in the polynomial ring.
pub fn real_slice_linearization(
    psi: &Superfunction,
    rho: &Coefficient,
    m: usize,
) -> Result<(Superfunction, Superfunction)> {
    let chart = slice_chart(m);
    psi.chart.check_same(&chart)?;
    if !psi.is_zero() && psi.parity() != ParityCheck::Odd {
        return Err(Error::Parity("slice deformations are generated by odd functions".into()));
    }
    if !psi.terms().all(|(_, c)| c.is_polynomial() && c.den_is_one()) {
        return Err(Error::Invalid("slice deformations need polynomial coefficients".into()));
    }
    if !rho.is_polynomial() || !rho.den_is_one() {
        return Err(Error::Invalid("the density must be polynomial".into()));
    }
    let rho0 = rho.real_part();
    if !rho0.is_unit() {
        return Err(Error::NonUnit("the real part of the density must be a unit".into()));
    }

    // jets of the deformed even coordinates: z_j = x_j + t·i·∂Ψ/∂ψ_j
    let i_scalar = Scalar::from_gauss(GaussRat::i());
    let mut coords = Vec::with_capacity(m);
    for j in 0..m {
        coords.push(Jet {
            val: Superfunction::even_coordinate(chart.clone(), j)?,
            slope: psi.partial_odd(j)?.scale(&i_scalar),
        });
    }

    // ρ evaluated on the deformed slice
    let mut dens = Jet::constant(chart.clone(), Scalar::zero());
    for (key, s) in rho.num.terms() {
        let mut term = Jet::constant(chart.clone(), s.clone());
        for (j, p) in key.pows.iter().enumerate() {
            for _ in 0..*p {
                term = term.mul(&coords[j])?;
            }
        }
        dens = dens.add(&term);
    }

    // first-order Berezinian of the displayed block matrix: the off-diagonal
    // blocks are O(t²) after Schur reduction, so Ber = det(A)/det(D)
    // = 1 + t(tr A₁ − tr D₁) with A₁ = i Ψ_{xψ}, D₁ = −i Ψ_{xψ}
    let mut mixed = Superfunction::zero(chart.clone());
    for j in 0..m {
        mixed = mixed.add(&psi.partial_even(j)?.partial_odd(j)?);
    }
    let berezinian = Jet {
        val: Superfunction::one(chart.clone()),
        slope: mixed.scale(&i_scalar).scale(&Scalar::from_int(2)),
    };
    let dens = dens.mul(&berezinian)?;

    // lhs: half-speed slope of the imaginary part over the real part at t=0
    let half = Scalar::from_rational(rat(1, 2));
    let lhs = superfunction_imag(&dens.slope)
        .scale_coeff(&rho0.inverse()?)
        .scale(&half);

    // rhs: the BV operator for (Re ρ)·D* and the canonical odd symplectic form
    let mu = BerezinVolume::from_density(
        chart.clone(),
        Superfunction::from_coeff(chart.clone(), rho0),
    )?;
    let eta = canonical_odd_symplectic(&chart)?;
    let rhs = bv_delta(psi, &mu, &eta)?;
    Ok((lhs, rhs))
}

pub fn rational_dim(n: usize) -> Rational {
    Rational::from(num::BigInt::from(n as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::OddMonomial;

    #[test]
    fn projective_line_examples() {
        let spec = BundleSpec::new(vec![1, 1]).unwrap();
        assert_eq!(bundle_zariski_dims(&spec), (4, 3));
        let report = projective_line_report(&spec);
        assert_eq!((report.even, report.odd), (4, 3));
        assert_eq!(report.extended, 7);

        let neg = BundleSpec::new(vec![-1, -1]).unwrap();
        assert_eq!(bundle_zariski_dims(&neg), (0, 0));

        let trivial = BundleSpec::new(vec![0]).unwrap();
        assert_eq!(bundle_zariski_dims(&trivial), (1, 0));
    }

    #[test]
    fn torus_reports() {
        let r1 = torus_moduli(1).unwrap();
        assert_eq!((r1.mclean, r1.extended), (1, 2));
        let r2 = torus_moduli(2).unwrap();
        assert_eq!((r2.mclean, r2.extended), (2, 4));
        assert_eq!(r2.even + r2.odd, 4);
        let r3 = torus_moduli(3).unwrap();
        assert_eq!((r3.mclean, r3.extended), (3, 8));
        assert!(torus_moduli(9).is_err());
    }

    #[test]
    fn section_dimension_counts() {
        assert_eq!(sections_mod_constants_dim(1, 0).unwrap(), 1);
        assert_eq!(sections_mod_constants_dim(2, 0).unwrap(), 3);
        assert_eq!(contact_sections_dim(1, 0).unwrap(), 2);
        assert_eq!(contact_sections_dim(2, 0).unwrap(), 4);
        // monotone in the cutoff, and always exactly one more with constants
        let mut last = 0;
        for k in 0..3 {
            let d = sections_mod_constants_dim(2, k).unwrap();
            assert!(d >= last);
            assert_eq!(contact_sections_dim(2, k).unwrap(), d + 1);
            last = d;
        }
    }

    #[test]
    fn slice_linearization_examples() {
        let m = 1;
        let chart = slice_chart(m);
        // Ψ constant: both sides vanish (constants are odd only when zero,
        // so use the zero function)
        let zero = Superfunction::zero(chart.clone());
        let (lhs, rhs) = real_slice_linearization(&zero, &Coefficient::one(m), m).unwrap();
        assert!(lhs.is_zero() && rhs.is_zero());

        // Ψ = x¹ψ₁, ρ = 1: both sides equal the constant 1 = ΔΨ
        let psi = Superfunction::even_coordinate(chart.clone(), 0)
            .unwrap()
            .mul(&Superfunction::odd_coordinate(chart.clone(), 0).unwrap())
            .unwrap();
        let (lhs, rhs) = real_slice_linearization(&psi, &Coefficient::one(m), m).unwrap();
        assert_eq!(lhs, Superfunction::one(chart.clone()));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn slice_linearization_with_varying_density() {
        let m = 2;
        let chart = slice_chart(m);
        let x0 = Superfunction::even_coordinate(chart.clone(), 0).unwrap();
        let p0 = Superfunction::odd_coordinate(chart.clone(), 0).unwrap();
        let p1 = Superfunction::odd_coordinate(chart.clone(), 1).unwrap();
        let psi = x0
            .mul(&x0).unwrap()
            .mul(&p1).unwrap()
            .add(&Superfunction::even_coordinate(chart.clone(), 1).unwrap().mul(&p0).unwrap())
            .add(&p0.mul(&p1).unwrap().mul(&p0).unwrap()); // last term is zero
        // ρ = 1 + x₁ + (i/3) x₂²: complex with unit real part
        let rho = Coefficient::one(m)
            .add(&Coefficient::coordinate(m, 0))
            .add(
                &Coefficient::coordinate(m, 1)
                    .mul(&Coefficient::coordinate(m, 1))
                    .scale(&Scalar::from_gauss(GaussRat { re: rat(0, 1), im: rat(1, 3) })),
            );
        let (lhs, rhs) = real_slice_linearization(&psi, &rho, m).unwrap();
        assert_eq!(lhs, rhs);
        assert!(!lhs.is_zero());
    }

    #[test]
    fn slice_linearization_rejects_bad_input() {
        let m = 1;
        let chart = slice_chart(m);
        let even = Superfunction::even_coordinate(chart.clone(), 0).unwrap();
        assert!(real_slice_linearization(&even, &Coefficient::one(m), m).is_err());
        let odd = Superfunction::odd_coordinate(chart.clone(), 0).unwrap();
        let non_unit = Coefficient::coordinate(m, 0);
        assert!(real_slice_linearization(&odd, &non_unit, m).is_err());
        let _ = OddMonomial::unit();
    }
}
