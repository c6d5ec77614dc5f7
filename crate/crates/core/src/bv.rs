//! Berezinian volumes, divergence, the Batalin-Vilkovisky operator, the
//! form↔superfunction correspondence and Berezin integration.
//!
//! The divergence is the coordinate formula
//!   div V = (1/ρ) Σ_a (−1)^{ã(1+Ṽ)} ∂(V^a ρ)/∂x^a
//! summed over all coordinates (ã the coordinate parity), with left components
//! and left odd derivatives. The BV operator is Δf = ½ div V_f with V_f the
//! Hamiltonian field of the cartan module; under these conventions Δ is the
//! image of the exterior derivative under the correspondence below, which the
//! chain suite checks exactly.
//!
//! The correspondence F contracts the components of a k-form into the
//! Levi-Civita symbol with the k-form indices in reversed order, i.e. it
//! carries the degree sign (−1)^{k(k−1)/2} relative to the ascending-order
//! contraction. That normalization is forced by F∘d = Δ∘F; the computation
//! that pins it is in the chain tests. On the top degree F(α dx¹…dxⁿ) is
//! therefore (−1)^{n(n−1)/2}, not always +1.

use crate::cartan::{
    canonical_odd_symplectic, exterior_d, hamiltonian_field, hamiltonian_field_flipped_sign,
    FormKey, SuperForm, SuperVectorField,
};
use crate::chart::{ChartRef, ConormalSpec, CoordId, Provenance};
use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::grassmann::{OddMonomial, Superfunction};
use crate::scalar::{rat, Scalar};

/// Volume ρ·D*(coordinates) on a chart; ρ is even with a unit body.
#[derive(Debug, Clone, PartialEq)]
pub struct BerezinVolume {
    pub chart: ChartRef,
    pub density: Superfunction,
    /// Present when the density was built as α²; half-densities need it.
    pub sqrt: Option<Coefficient>,
}

impl BerezinVolume {
    pub fn from_density(chart: ChartRef, density: Superfunction) -> Result<Self> {
        density.chart.check_same(&chart)?;
        if density.parity() == crate::grassmann::ParityCheck::Odd {
            return Err(Error::Parity("volume density must be even".into()));
        }
        if !density.body().is_unit() {
            return Err(Error::NonUnit("volume density must have a unit body".into()));
        }
        Ok(BerezinVolume { chart, density, sqrt: None })
    }

    /// The flat volume D*(coordinates).
    pub fn flat(chart: ChartRef) -> Self {
        let n = chart.even_dim();
        let density = Superfunction::one(chart.clone());
        BerezinVolume { chart, density, sqrt: Some(Coefficient::one(n)) }
    }
}

/// The volume α²(x)·D*(dx, dψ) induced by the top form α dx¹∧…∧dxⁿ.
pub fn volume_from_top_form(alpha: &Coefficient, chart: &ChartRef) -> Result<BerezinVolume> {
    if !chart.has_cotangent_pairing() {
        return Err(Error::Provenance("induced volumes live on odd cotangent charts".into()));
    }
    if !alpha.is_unit() {
        return Err(Error::NonUnit("top-form coefficient must be a unit".into()));
    }
    let rho = alpha.mul(alpha);
    Ok(BerezinVolume {
        chart: chart.clone(),
        density: Superfunction::from_coeff(chart.clone(), rho),
        sqrt: Some(alpha.clone()),
    })
}

/// div V = (1/ρ) Σ_a (−1)^{ã(1+Ṽ)} ∂(V^a ρ)/∂x^a over all coordinates.
pub fn divergence(v: &SuperVectorField, mu: &BerezinVolume) -> Result<Superfunction> {
    v.chart.check_same(&mu.chart)?;
    let chart = &v.chart;
    let rho = &mu.density;
    let v_parity = v.parity.as_u8();
    let mut acc = Superfunction::zero(chart.clone());
    for a in 0..chart.even_dim() {
        let comp = v.component(CoordId::Even(a));
        if comp.is_zero() {
            continue;
        }
        acc = acc.add(&comp.mul(rho)?.partial_even(a)?);
    }
    let odd_negates = (1 + v_parity) % 2 == 1;
    for a in 0..chart.odd_dim() {
        let comp = v.component(CoordId::Odd(a));
        if comp.is_zero() {
            continue;
        }
        let term = comp.mul(rho)?.partial_odd(a)?;
        acc = acc.add(&if odd_negates { term.neg() } else { term });
    }
    acc.mul(&rho.inverse()?)
}

/// The Batalin-Vilkovisky operator Δf = ½ div V_f. Linear; inhomogeneous
/// arguments are handled by parity splitting.
pub fn bv_delta(f: &Superfunction, mu: &BerezinVolume, eta: &SuperForm) -> Result<Superfunction> {
    bv_delta_signed(f, mu, eta, false)
}

/// Same operator built on the opposite Hamiltonian convention; exists as the
/// negative control for the chain suite.
pub fn bv_delta_flipped(
    f: &Superfunction,
    mu: &BerezinVolume,
    eta: &SuperForm,
) -> Result<Superfunction> {
    bv_delta_signed(f, mu, eta, true)
}

fn bv_delta_signed(
    f: &Superfunction,
    mu: &BerezinVolume,
    eta: &SuperForm,
    flipped: bool,
) -> Result<Superfunction> {
    let half = Scalar::from_rational(rat(1, 2));
    let mut out = Superfunction::zero(f.chart.clone());
    let (even, odd) = f.parity_split();
    for part in [even, odd] {
        if part.is_zero() {
            continue;
        }
        let field = if flipped {
            hamiltonian_field_flipped_sign(&part, eta)?
        } else {
            hamiltonian_field(&part, eta)?
        };
        if field.is_zero() {
            continue;
        }
        out = out.add(&divergence(&field, mu)?);
    }
    Ok(out.scale(&half))
}

fn degree_sign(k: usize) -> bool {
    // (−1)^{k(k−1)/2}
    (k * k.saturating_sub(1) / 2) % 2 == 1
}

/// Complement of I in 0..n together with the sign of the shuffle (I, I^c).
fn complement_with_sign(indices: &[u16], n: usize) -> (Vec<u16>, bool) {
    let complement: Vec<u16> =
        (0..n as u16).filter(|a| !indices.contains(a)).collect();
    let mut inversions = 0usize;
    for &i in indices {
        inversions += complement.iter().filter(|&&j| j < i).count();
    }
    (complement, inversions % 2 == 1)
}

/// The correspondence F from forms on the base to superfunctions on the odd
/// cotangent chart: a k-form component w_I goes to ±α⁻¹ w_I ψ_{I^c}.
pub fn f_map(w: &SuperForm, alpha: &Coefficient, target: &ChartRef) -> Result<Superfunction> {
    if w.chart.odd_dim() != 0 {
        return Err(Error::Provenance("the correspondence takes forms on the even base".into()));
    }
    if !target.has_cotangent_pairing() || target.even != w.chart.even {
        return Err(Error::ChartMismatch(
            "target must be the odd cotangent chart of the form's base".into(),
        ));
    }
    if !alpha.is_unit() {
        return Err(Error::NonUnit("base volume coefficient must be a unit".into()));
    }
    let n = w.chart.even_dim();
    let alpha_inv = alpha.inverse()?;
    let mut out = Superfunction::zero(target.clone());
    for (key, c) in w.terms() {
        debug_assert!(key.psis.is_empty() && key.dpsis.is_empty());
        let k = key.dxs.len();
        let (complement, eps_neg) = complement_with_sign(&key.dxs, n);
        let neg = eps_neg ^ degree_sign(k);
        let coeff = c.mul(&alpha_inv);
        out.insert_add(OddMonomial(complement), if neg { coeff.neg() } else { coeff });
    }
    Ok(out)
}

/// Inverse of [`f_map`]: superfunctions on the odd cotangent chart back to
/// forms on the base.
pub fn f_map_inverse(
    phi: &Superfunction,
    alpha: &Coefficient,
    base: &ChartRef,
) -> Result<SuperForm> {
    if base.odd_dim() != 0 {
        return Err(Error::Provenance("the base chart must be purely even".into()));
    }
    if phi.chart.even != base.even || !phi.chart.has_cotangent_pairing() {
        return Err(Error::ChartMismatch("superfunction must live on the base's odd cotangent".into()));
    }
    let n = base.even_dim();
    let mut out = SuperForm::zero(base.clone());
    for (m, c) in phi.terms() {
        let (dxs, eps_neg) = complement_with_sign(&m.0, n);
        // the shuffle sign of (I, I^c) equals that of (I^c, I) up to k(n−k)
        let k = dxs.len();
        let swap_neg = (k * (n - k)) % 2 == 1;
        let neg = eps_neg ^ swap_neg ^ degree_sign(k);
        let coeff = c.mul(alpha);
        let coeff = if neg { coeff.neg() } else { coeff };
        out.insert_add(FormKey { psis: Vec::new(), dxs, dpsis: Vec::new() }, coeff);
    }
    Ok(out)
}

/// Exact check of the chain identity F(dw) = ΔF(w) for the volume α²D*.
pub fn chain_check(w: &SuperForm, alpha: &Coefficient, target: &ChartRef) -> Result<bool> {
    let lhs = f_map(&exterior_d(w), alpha, target)?;
    let mu = volume_from_top_form(alpha, target)?;
    let eta = canonical_odd_symplectic(target)?;
    let rhs = bv_delta(&f_map(w, alpha, target)?, &mu, &eta)?;
    Ok(lhs == rhs)
}

/// Berezin integral against μ: extract the top odd coefficient of f·ρ in the
/// frame order, then average the even part over the torus.
pub fn berezin_integral(f: &Superfunction, mu: &BerezinVolume) -> Result<Scalar> {
    f.chart.check_same(&mu.chart)?;
    if !f.chart.all_circle() {
        return Err(Error::NonCompact("Berezin integration needs circle even coordinates".into()));
    }
    let q = f.chart.odd_dim();
    let top = OddMonomial((0..q as u16).collect());
    let weighted = f.mul(&mu.density)?;
    weighted.coeff_of(&top).zero_mode()
}

/// Half-density on a conormal, with the orientation that makes the conormal
/// integral of an F-image equal the base integral of the form.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfDensity {
    pub conormal: ConormalSpec,
    pub chart: ChartRef,
    pub density: Coefficient,
    pub orientation: i8,
    pub parent_density: Superfunction,
}

pub fn half_density(mu: &BerezinVolume, c: &ConormalSpec) -> Result<HalfDensity> {
    mu.chart.check_same(&c.chart)?;
    let alpha = mu
        .sqrt
        .as_ref()
        .ok_or_else(|| Error::NonUnit("density is not presented as a perfect square".into()))?;
    let restricted = alpha.restrict_zero(&c.normal)?;
    if !restricted.is_unit() {
        return Err(Error::NonUnit("restricted square root must be a unit".into()));
    }
    let (r, _) = c.dims();
    let orientation = c.split_sign() * if degree_sign(r) { -1 } else { 1 };
    Ok(HalfDensity {
        conormal: c.clone(),
        chart: c.sub_chart(),
        density: restricted,
        orientation,
        parent_density: mu.density.clone(),
    })
}

impl HalfDensity {
    /// ∫ f · (this half-density) over the conormal.
    pub fn integrate(&self, f: &Superfunction) -> Result<Scalar> {
        f.chart.check_same(&self.chart)?;
        let mut density = Superfunction::from_coeff(self.chart.clone(), self.density.clone());
        if self.orientation < 0 {
            density = density.neg();
        }
        let mu = BerezinVolume::from_density(self.chart.clone(), density)?;
        berezin_integral(f, &mu)
    }

    /// Its square is the parent density restricted to the conormal.
    pub fn square_matches_parent(&self) -> Result<bool> {
        let sq = self.density.mul(&self.density);
        let parent = self.parent_density.restrict(&self.conormal)?;
        Ok(parent == Superfunction::from_coeff(self.chart.clone(), sq))
    }
}

/// Integral of a form over the base torus: the zero mode of its top-degree
/// component in ascending coordinate order.
pub fn base_torus_integral(w: &SuperForm) -> Result<Scalar> {
    if w.chart.odd_dim() != 0 {
        return Err(Error::Provenance("base integrals take forms on the even base".into()));
    }
    if !w.chart.all_circle() {
        return Err(Error::NonCompact("base integrals need a torus".into()));
    }
    let n = w.chart.even_dim();
    let top: Vec<u16> = (0..n as u16).collect();
    let mut out = Scalar::zero();
    for (key, c) in w.terms() {
        if key.dxs == top {
            out = out.add(&c.zero_mode()?);
        }
    }
    Ok(out)
}

/// Pull a base form back along the inclusion of the coordinate sub-torus
/// X = {x^a = 0 : a normal}.
pub fn restrict_base_form(w: &SuperForm, normal: &[usize]) -> Result<SuperForm> {
    if w.chart.odd_dim() != 0 {
        return Err(Error::Provenance("expected a form on the even base".into()));
    }
    let keep: Vec<usize> =
        (0..w.chart.even_dim()).filter(|a| !normal.contains(a)).collect();
    let sub = std::sync::Arc::new(crate::chart::SuperChart {
        even: keep.iter().map(|&a| w.chart.even[a].clone()).collect(),
        odd: Vec::new(),
        provenance: Provenance::Base,
    });
    let mut out = SuperForm::zero(sub);
    'term: for (key, c) in w.terms() {
        let mut dxs = Vec::with_capacity(key.dxs.len());
        for &a in &key.dxs {
            match keep.iter().position(|&i| i == a as usize) {
                Some(pos) => dxs.push(pos as u16),
                None => continue 'term,
            }
        }
        out.insert_add(
            FormKey { psis: Vec::new(), dxs, dpsis: Vec::new() },
            c.restrict_zero(normal)?,
        );
    }
    Ok(out)
}

/// Both sides of the conormal-integral identity: the Berezin integral of the
/// restricted F-image against the half-density, and the direct integral of
/// the form over the sub-torus. Equality is the test contract.
pub fn schwarz_integral(
    w: &SuperForm,
    c: &ConormalSpec,
    alpha: &Coefficient,
) -> Result<(Scalar, Scalar)> {
    let target = &c.chart;
    let phi = f_map(w, alpha, target)?;
    let mu = volume_from_top_form(alpha, target)?;
    let hd = half_density(&mu, c)?;
    let lhs = hd.integrate(&phi.restrict(c)?)?;
    let rhs = base_torus_integral(&restrict_base_form(w, &c.normal)?)?;
    Ok((lhs, rhs))
}
