//! Cartan calculus on supermanifold charts.
//!
//! Differential forms carry two gradings: coordinate parity and form degree.
//! The commutation table is fixed once and for all by total parity =
//! coordinate parity + form degree (mod 2), so dx is odd, dψ is even (and in
//! particular dψ's commute and admit repeated factors). Every term is stored
//! in the normal order  coefficient · ψ… · dx… · dψ…  with ascending indices,
//! and all signs come from inversion counting against that order. The two
//! anchors pinning the table are θ = Σ dx^a ψ_a and dθ = −Σ dx^a ∧ dψ^a.
//!
//! The Hamiltonian convention is ι_{V_f} η = −df; this is the sign under
//! which the Batalin-Vilkovisky chain identity of the bv module holds, and
//! the residual ι_{V_f}η + df is checked to vanish exactly after each solve.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chart::{ChartRef, ConormalSpec, CoordId, Provenance};
use crate::coeff::{Coefficient, CoefficientDto};
use crate::error::{Error, Result};
use crate::grassmann::{merge_anticommuting, OddMonomial, Parity, ParityCheck, Superfunction};
use crate::scalar::Scalar;

/// Normal-ordered graded monomial: ψ's, then dx's (both strictly ascending),
/// then a weakly ascending multiset of dψ's.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FormKey {
    pub psis: Vec<u16>,
    pub dxs: Vec<u16>,
    pub dpsis: Vec<u16>,
}

impl FormKey {
    pub fn degree(&self) -> usize {
        self.dxs.len() + self.dpsis.len()
    }

    pub fn parity(&self) -> Parity {
        Parity::from_len(self.psis.len() + self.dxs.len())
    }
}

/// Finite-degree differential form on a chart.
#[derive(Debug, Clone)]
pub struct SuperForm {
    pub chart: ChartRef,
    terms: BTreeMap<FormKey, Coefficient>,
}

impl PartialEq for SuperForm {
    fn eq(&self, other: &Self) -> bool {
        self.chart == other.chart && self.terms == other.terms
    }
}

impl Eq for SuperForm {}

impl SuperForm {
    pub fn zero(chart: ChartRef) -> Self {
        SuperForm { chart, terms: BTreeMap::new() }
    }

    pub fn from_superfunction(f: &Superfunction) -> Self {
        let mut out = SuperForm::zero(f.chart.clone());
        for (m, c) in f.terms() {
            out.insert_add(
                FormKey { psis: m.0.clone(), dxs: Vec::new(), dpsis: Vec::new() },
                c.clone(),
            );
        }
        out
    }

    pub fn term(chart: ChartRef, c: Coefficient, key: FormKey) -> Result<Self> {
        let (n, q) = chart.dims();
        if key.psis.iter().chain(&key.dpsis).any(|&a| a as usize >= q)
            || key.dxs.iter().any(|&a| a as usize >= n)
        {
            return Err(Error::IndexOutOfRange("form term index beyond chart".into()));
        }
        if key.psis.windows(2).any(|w| w[0] >= w[1]) || key.dxs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("anticommuting factors must be strictly ascending".into()));
        }
        let mut out = SuperForm::zero(chart);
        let mut key = key;
        key.dpsis.sort_unstable();
        out.insert_add(key, c);
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FormKey, &Coefficient)> {
        self.terms.iter()
    }

    pub fn insert_add(&mut self, key: FormKey, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(entry) => {
                *entry = entry.add(&c);
                if entry.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.chart, other.chart);
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert_add(k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        SuperForm {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let mut out = SuperForm::zero(self.chart.clone());
        for (k, c) in &self.terms {
            out.insert_add(k.clone(), c.scale(s));
        }
        out
    }

    pub fn scale_coeff(&self, c: &Coefficient) -> Self {
        let mut out = SuperForm::zero(self.chart.clone());
        for (k, v) in &self.terms {
            out.insert_add(k.clone(), v.mul(c));
        }
        out
    }

    /// Wedge product with inversion-count signs against the normal order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.chart.check_same(&other.chart)?;
        let mut out = SuperForm::zero(self.chart.clone());
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                // move the incoming psi block left through dx1 (dpsi1 is even)
                let mut neg = (k2.psis.len() * k1.dxs.len()) % 2 == 1;
                let Some((n1, psis)) = merge_anticommuting(&k1.psis, &k2.psis) else { continue };
                let Some((n2, dxs)) = merge_anticommuting(&k1.dxs, &k2.dxs) else { continue };
                neg ^= n1 ^ n2;
                let mut dpsis = k1.dpsis.clone();
                dpsis.extend_from_slice(&k2.dpsis);
                dpsis.sort_unstable();
                let c = c1.mul(c2);
                out.insert_add(FormKey { psis, dxs, dpsis }, if neg { c.neg() } else { c });
            }
        }
        Ok(out)
    }

    /// Degree-0 part as a superfunction; error if higher-degree terms exist.
    pub fn as_superfunction(&self) -> Result<Superfunction> {
        let mut out = Superfunction::zero(self.chart.clone());
        for (k, c) in &self.terms {
            if k.degree() != 0 {
                return Err(Error::Invalid("form has positive-degree terms".into()));
            }
            out.insert_add(OddMonomial(k.psis.clone()), c.clone());
        }
        Ok(out)
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn degree_part(&self, d: usize) -> Self {
        let mut out = SuperForm::zero(self.chart.clone());
        for (k, c) in &self.terms {
            if k.degree() == d {
                out.insert_add(k.clone(), c.clone());
            }
        }
        out
    }

    pub fn parity(&self) -> ParityCheck {
        let mut seen: Option<Parity> = None;
        for k in self.terms.keys() {
            match seen {
                None => seen = Some(k.parity()),
                Some(p) if p != k.parity() => return ParityCheck::Inhomogeneous,
                _ => {}
            }
        }
        match seen {
            None | Some(Parity::Even) => ParityCheck::Even,
            Some(Parity::Odd) => ParityCheck::Odd,
        }
    }

    /// Pullback along the inclusion of a conormal: the normal evens, their
    /// differentials, the tangent odds and their differentials all vanish;
    /// surviving indices are renumbered into the sub-chart. On contact charts
    /// the extra odd direction restricts along the zero section.
    pub fn restrict(&self, c: &ConormalSpec) -> Result<Self> {
        self.chart.check_same(&c.chart)?;
        let sub = c.sub_chart();
        let kept_odd = c.kept_odd();
        let tangent = c.tangent();
        let mut out = SuperForm::zero(sub);
        'term: for (k, coeff) in &self.terms {
            let mut psis = Vec::with_capacity(k.psis.len());
            for &a in &k.psis {
                match kept_odd.iter().position(|&i| i == a as usize) {
                    Some(pos) => psis.push(pos as u16),
                    None => continue 'term,
                }
            }
            let mut dxs = Vec::with_capacity(k.dxs.len());
            for &a in &k.dxs {
                match tangent.iter().position(|&i| i == a as usize) {
                    Some(pos) => dxs.push(pos as u16),
                    None => continue 'term,
                }
            }
            let mut dpsis = Vec::with_capacity(k.dpsis.len());
            for &a in &k.dpsis {
                match kept_odd.iter().position(|&i| i == a as usize) {
                    Some(pos) => dpsis.push(pos as u16),
                    None => continue 'term,
                }
            }
            let coeff = coeff.restrict_zero(&c.normal)?;
            out.insert_add(FormKey { psis, dxs, dpsis }, coeff);
        }
        Ok(out)
    }
}

impl fmt::Display for SuperForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for &a in &k.psis {
                write!(f, "*psi{}", a + 1)?;
            }
            for &a in &k.dxs {
                write!(f, "*dx{}", a + 1)?;
            }
            for &a in &k.dpsis {
                write!(f, "*dpsi{}", a + 1)?;
            }
        }
        Ok(())
    }
}

/// Exterior derivative: df = Σ dx^a ∂f/∂x^a + Σ dψ_a ∂f/∂ψ_a with left odd
/// derivatives, extended to forms as an odd derivation (d of a generator is 0).
pub fn exterior_d(w: &SuperForm) -> SuperForm {
    let mut out = SuperForm::zero(w.chart.clone());
    let (n, q) = w.chart.dims();
    for (key, c) in w.terms() {
        let psi_len = key.psis.len();
        // even differentials: dx^a jumps over the psi block
        for a in 0..n {
            let dc = c.derivative(a);
            if dc.is_zero() {
                continue;
            }
            if let Some((neg, dxs)) = merge_anticommuting(&[a as u16], &key.dxs) {
                let sign_neg = neg ^ (psi_len % 2 == 1);
                let k = FormKey { psis: key.psis.clone(), dxs, dpsis: key.dpsis.clone() };
                out.insert_add(k, if sign_neg { dc.neg() } else { dc });
            }
        }
        // odd differentials: left derivative of the psi monomial, dpsi commutes freely
        for (pos, &a) in key.psis.iter().enumerate() {
            let _ = q;
            let mut psis = key.psis.clone();
            psis.remove(pos);
            let mut dpsis = key.dpsis.clone();
            dpsis.push(a);
            dpsis.sort_unstable();
            let k = FormKey { psis, dxs: key.dxs.clone(), dpsis };
            out.insert_add(k, if pos % 2 == 1 { c.neg() } else { c.clone() });
        }
    }
    out
}

pub fn exterior_d_function(f: &Superfunction) -> SuperForm {
    exterior_d(&SuperForm::from_superfunction(f))
}

/// Homogeneous vector field with left components in the coordinate frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperVectorField {
    pub chart: ChartRef,
    pub parity: Parity,
    comps: BTreeMap<CoordId, Superfunction>,
}

impl SuperVectorField {
    pub fn new(
        chart: ChartRef,
        parity: Parity,
        comps: BTreeMap<CoordId, Superfunction>,
    ) -> Result<Self> {
        for (id, f) in &comps {
            f.chart.check_same(&chart)?;
            let want = if id.parity() ^ parity.as_u8() == 1 { ParityCheck::Odd } else { ParityCheck::Even };
            if !f.is_zero() && f.parity() != want {
                return Err(Error::Parity(format!(
                    "component at {id} must have parity (field + coordinate)"
                )));
            }
            match id {
                CoordId::Even(a) if *a >= chart.even_dim() => {
                    return Err(Error::IndexOutOfRange(format!("{id}")))
                }
                CoordId::Odd(a) if *a >= chart.odd_dim() => {
                    return Err(Error::IndexOutOfRange(format!("{id}")))
                }
                _ => {}
            }
        }
        let comps = comps.into_iter().filter(|(_, f)| !f.is_zero()).collect();
        Ok(SuperVectorField { chart, parity, comps })
    }

    /// The coordinate frame field ∂/∂(coord).
    pub fn unit(chart: ChartRef, id: CoordId) -> Result<Self> {
        let parity = if id.parity() == 1 { Parity::Odd } else { Parity::Even };
        let mut comps = BTreeMap::new();
        comps.insert(id, Superfunction::one(chart.clone()));
        SuperVectorField::new(chart, parity, comps)
    }

    pub fn zero(chart: ChartRef, parity: Parity) -> Self {
        SuperVectorField { chart, parity, comps: BTreeMap::new() }
    }

    pub fn component(&self, id: CoordId) -> Superfunction {
        self.comps.get(&id).cloned().unwrap_or_else(|| Superfunction::zero(self.chart.clone()))
    }

    pub fn components(&self) -> impl Iterator<Item = (&CoordId, &Superfunction)> {
        self.comps.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.parity != other.parity {
            return Err(Error::Parity("cannot add fields of different parity".into()));
        }
        let mut comps = self.comps.clone();
        for (id, f) in &other.comps {
            let entry = comps.entry(*id).or_insert_with(|| Superfunction::zero(self.chart.clone()));
            *entry = entry.add(f);
        }
        SuperVectorField::new(self.chart.clone(), self.parity, comps)
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        SuperVectorField {
            chart: self.chart.clone(),
            parity: self.parity,
            comps: self.comps.iter().map(|(id, f)| (*id, f.scale(s))).collect(),
        }
    }

    /// Apply to a superfunction: V(f) = Σ V^u ∂f/∂u (left components).
    pub fn apply(&self, f: &Superfunction) -> Result<Superfunction> {
        self.chart.check_same(&f.chart)?;
        let mut out = Superfunction::zero(self.chart.clone());
        for (id, comp) in &self.comps {
            let df = match id {
                CoordId::Even(a) => f.partial_even(*a)?,
                CoordId::Odd(a) => f.partial_odd(*a)?,
            };
            out = out.add(&comp.mul(&df)?);
        }
        Ok(out)
    }
}

impl fmt::Display for SuperVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (id, c) in &self.comps {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "[{c}] d/d{id}")?;
        }
        Ok(())
    }
}

/// Contraction with the coordinate frame field at `id`; a derivation of
/// parity (coordinate parity + 1) acting from the left.
fn contract_unit(id: CoordId, w: &SuperForm) -> SuperForm {
    let mut out = SuperForm::zero(w.chart.clone());
    for (key, c) in w.terms() {
        match id {
            CoordId::Even(a) => {
                // odd derivation: signs from the psi block and preceding dx's
                let base_neg = key.psis.len() % 2 == 1;
                for (pos, &b) in key.dxs.iter().enumerate() {
                    if b as usize == a {
                        let mut dxs = key.dxs.clone();
                        dxs.remove(pos);
                        let k = FormKey { psis: key.psis.clone(), dxs, dpsis: key.dpsis.clone() };
                        let neg = base_neg ^ (pos % 2 == 1);
                        out.insert_add(k, if neg { c.neg() } else { c.clone() });
                    }
                }
            }
            CoordId::Odd(a) => {
                // even derivation: acts as d/d(dpsi_a) on the symmetric block
                let mult = key.dpsis.iter().filter(|&&p| p as usize == a).count();
                if mult > 0 {
                    let mut dpsis = key.dpsis.clone();
                    let pos = dpsis.iter().position(|&p| p as usize == a).unwrap();
                    dpsis.remove(pos);
                    let k = FormKey { psis: key.psis.clone(), dxs: key.dxs.clone(), dpsis };
                    out.insert_add(k, c.scale(&Scalar::from_int(mult as i64)));
                }
            }
        }
    }
    out
}

/// Contraction ι_V, linear over left multiplication by the components:
/// ι_V = Σ_u V^u · ι_{∂u}. Satisfies ι_V(df) = V(f) exactly.
pub fn contract(v: &SuperVectorField, w: &SuperForm) -> Result<SuperForm> {
    v.chart.check_same(&w.chart)?;
    let mut out = SuperForm::zero(w.chart.clone());
    for (id, comp) in v.components() {
        let stripped = contract_unit(*id, w);
        if stripped.is_zero() {
            continue;
        }
        out = out.add(&SuperForm::from_superfunction(comp).mul(&stripped)?);
    }
    Ok(out)
}

/// Lie derivative as the graded derivation with L_V f = V(f) and
/// L_V(d coord) = (−1)^{p(V)} d(V coord). The Cartan identity it satisfies is
/// L_V = (−1)^{p(V)} d∘ι_V + ι_V∘d, the classical formula for even fields.
pub fn lie_derivative(v: &SuperVectorField, w: &SuperForm) -> Result<SuperForm> {
    v.chart.check_same(&w.chart)?;
    let pv = v.parity.as_u8();
    let mut out = SuperForm::zero(w.chart.clone());
    for (key, c) in w.terms() {
        // action on the coefficient superfunction
        let f = Superfunction::monomial(w.chart.clone(), OddMonomial(key.psis.clone()), c.clone())?;
        let vf = v.apply(&f)?;
        if !vf.is_zero() {
            let tail = SuperForm::term(
                w.chart.clone(),
                Coefficient::one(w.chart.even_dim()),
                FormKey { psis: Vec::new(), dxs: key.dxs.clone(), dpsis: key.dpsis.clone() },
            )?;
            out = out.add(&SuperForm::from_superfunction(&vf).mul(&tail)?);
        }
        // action on each differential generator
        let gens: Vec<(u8, u16)> = key
            .dxs
            .iter()
            .map(|&b| (0u8, b))
            .chain(key.dpsis.iter().map(|&p| (1u8, p)))
            .collect();
        let mut prefix_parity = key.psis.len() % 2;
        for (i, &(kind, idx)) in gens.iter().enumerate() {
            let comp = match kind {
                0 => v.component(CoordId::Even(idx as usize)),
                _ => v.component(CoordId::Odd(idx as usize)),
            };
            let gen_parity = if kind == 0 { 1 } else { 0 };
            if !comp.is_zero() {
                let mut replacement = exterior_d_function(&comp);
                if pv == 1 {
                    replacement = replacement.neg();
                }
                let sign_neg = (pv as usize * prefix_parity) % 2 == 1;
                // left part: coefficient and generators before position i
                let (left_dxs, left_dpsis): (Vec<u16>, Vec<u16>) = split_gens(&gens[..i]);
                let (right_dxs, right_dpsis): (Vec<u16>, Vec<u16>) = split_gens(&gens[i + 1..]);
                let left = SuperForm::term(
                    w.chart.clone(),
                    c.clone(),
                    FormKey { psis: key.psis.clone(), dxs: left_dxs, dpsis: left_dpsis },
                )?;
                let right = SuperForm::term(
                    w.chart.clone(),
                    Coefficient::one(w.chart.even_dim()),
                    FormKey { psis: Vec::new(), dxs: right_dxs, dpsis: right_dpsis },
                )?;
                let piece = left.mul(&replacement)?.mul(&right)?;
                out = out.add(&if sign_neg { piece.neg() } else { piece });
            }
            prefix_parity = (prefix_parity + gen_parity) % 2;
        }
    }
    Ok(out)
}

fn split_gens(gens: &[(u8, u16)]) -> (Vec<u16>, Vec<u16>) {
    let mut dxs = Vec::new();
    let mut dpsis = Vec::new();
    for &(kind, idx) in gens {
        if kind == 0 {
            dxs.push(idx);
        } else {
            dpsis.push(idx);
        }
    }
    (dxs, dpsis)
}

/// The canonical one-form θ = Σ dx^a ψ_a of an odd cotangent chart.
pub fn liouville_form(chart: &ChartRef) -> Result<SuperForm> {
    if !chart.has_cotangent_pairing() {
        return Err(Error::Provenance(
            "the canonical one-form needs an odd cotangent pairing".into(),
        ));
    }
    let n = chart.even_dim();
    let mut out = SuperForm::zero(chart.clone());
    for a in 0..n {
        // dx^a ψ_a = −ψ_a dx^a in normal order
        out.insert_add(
            FormKey { psis: vec![a as u16], dxs: vec![a as u16], dpsis: Vec::new() },
            Coefficient::one(n).neg(),
        );
    }
    Ok(out)
}

/// The canonical odd symplectic form η = dθ = −Σ dx^a ∧ dψ_a.
pub fn canonical_odd_symplectic(chart: &ChartRef) -> Result<SuperForm> {
    Ok(exterior_d(&liouville_form(chart)?))
}

/// The contact one-form dε + Σ dx^a ψ_a on a contact chart.
pub fn contact_form(chart: &ChartRef) -> Result<SuperForm> {
    if chart.provenance != Provenance::Contact {
        return Err(Error::Provenance("the contact form lives on contact charts".into()));
    }
    let n = chart.even_dim();
    let eps = chart.odd_dim() - 1;
    let mut out = SuperForm::zero(chart.clone());
    out.insert_add(
        FormKey { psis: Vec::new(), dxs: Vec::new(), dpsis: vec![eps as u16] },
        Coefficient::one(n),
    );
    for a in 0..n {
        out.insert_add(
            FormKey { psis: vec![a as u16], dxs: vec![a as u16], dpsis: Vec::new() },
            Coefficient::one(n).neg(),
        );
    }
    Ok(out)
}

/// Unique homogeneous field with ι_{V_f} η = −df. The Gram body of η must be
/// invertible over the coefficient ring; nilpotent corrections are handled by
/// a finite Neumann series.
pub fn hamiltonian_field(f: &Superfunction, eta: &SuperForm) -> Result<SuperVectorField> {
    hamiltonian_field_with_sign(f, eta, true)
}

/// Same solve with ι_{V_f} η = +df; exists so the chain-identity suite can
/// demonstrate that the opposite convention fails (negative control).
pub fn hamiltonian_field_flipped_sign(f: &Superfunction, eta: &SuperForm) -> Result<SuperVectorField> {
    hamiltonian_field_with_sign(f, eta, false)
}

fn hamiltonian_field_with_sign(
    f: &Superfunction,
    eta: &SuperForm,
    negate: bool,
) -> Result<SuperVectorField> {
    f.chart.check_same(&eta.chart)?;
    let fp = f.homogeneous_parity()?;
    if eta.parity() != ParityCheck::Odd || eta.terms().any(|(k, _)| k.degree() != 2) {
        return Err(Error::Degenerate("expected a homogeneous odd two-form".into()));
    }
    if !exterior_d(eta).is_zero() {
        return Err(Error::NotClosed);
    }
    let chart = &f.chart;
    let (n, q) = chart.dims();
    let dim = n + q;
    let coord = |i: usize| -> CoordId {
        if i < n {
            CoordId::Even(i)
        } else {
            CoordId::Odd(i - n)
        }
    };

    // gram[u][v] = coefficient superfunction of generator v in ι_{∂u} η
    let mut gram = vec![vec![Superfunction::zero(chart.clone()); dim]; dim];
    for u in 0..dim {
        let one_form = contract_unit(coord(u), eta);
        for (key, c) in one_form.terms() {
            let (v, psis) = match (key.dxs.as_slice(), key.dpsis.as_slice()) {
                ([b], []) => (*b as usize, key.psis.clone()),
                ([], [p]) => (n + *p as usize, key.psis.clone()),
                _ => unreachable!("contraction of a two-form is a one-form"),
            };
            gram[u][v].insert_add(OddMonomial(psis), c.clone());
        }
    }

    // right-hand side: ±df as a row of superfunctions
    let df = exterior_d_function(f);
    let mut rhs = vec![Superfunction::zero(chart.clone()); dim];
    for (key, c) in df.terms() {
        let (v, psis) = match (key.dxs.as_slice(), key.dpsis.as_slice()) {
            ([b], []) => (*b as usize, key.psis.clone()),
            ([], [p]) => (n + *p as usize, key.psis.clone()),
            _ => unreachable!("differential of a function is a one-form"),
        };
        let c = if negate { c.neg() } else { c.clone() };
        rhs[v].insert_add(OddMonomial(psis), c);
    }

    let inv = invert_superfunction_matrix(chart, &gram)?;
    // row solve: V^u = Σ_v rhs_v (C^{-1})_{vu}
    let mut comps = BTreeMap::new();
    for u in 0..dim {
        let mut acc = Superfunction::zero(chart.clone());
        for (v, r) in rhs.iter().enumerate() {
            if !r.is_zero() {
                acc = acc.add(&r.mul(&inv[v][u])?);
            }
        }
        if !acc.is_zero() {
            comps.insert(coord(u), acc);
        }
    }
    let field = SuperVectorField::new(chart.clone(), fp.flip(), comps)?;
    // involution check: the defining relation must hold exactly
    let residual = contract(&field, eta)?.sub(&if negate { df.neg() } else { df });
    if !residual.is_zero() {
        return Err(Error::Degenerate("hamiltonian solve residual is nonzero".into()));
    }
    Ok(field)
}

/// Invert a matrix of superfunctions whose body (ψ-free part) is invertible
/// over the coefficient fraction field; the soul is absorbed by a finite
/// Neumann series.
pub fn invert_superfunction_matrix(
    chart: &ChartRef,
    m: &[Vec<Superfunction>],
) -> Result<Vec<Vec<Superfunction>>> {
    let dim = m.len();
    let n = chart.even_dim();
    let body: Vec<Vec<Coefficient>> = m.iter().map(|row| row.iter().map(|f| f.body()).collect()).collect();
    let body_inv = invert_coeff_matrix(n, &body)?;
    let body_inv_sf: Vec<Vec<Superfunction>> = body_inv
        .iter()
        .map(|row| row.iter().map(|c| Superfunction::from_coeff(chart.clone(), c.clone())).collect())
        .collect();
    let soul: Vec<Vec<Superfunction>> =
        m.iter().map(|row| row.iter().map(|f| f.soul()).collect()).collect();
    if soul.iter().all(|row| row.iter().all(|f| f.is_zero())) {
        return Ok(body_inv_sf);
    }

    let mat_mul = |a: &[Vec<Superfunction>], b: &[Vec<Superfunction>]| -> Result<Vec<Vec<Superfunction>>> {
        let mut out = vec![vec![Superfunction::zero(chart.clone()); dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Superfunction::zero(chart.clone());
                for k in 0..dim {
                    if !a[i][k].is_zero() && !b[k][j].is_zero() {
                        acc = acc.add(&a[i][k].mul(&b[k][j])?);
                    }
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    };

    // (B + N)^{-1} = B^{-1} Σ_j (−N B^{-1})^j
    let step = {
        let mut s = mat_mul(&soul, &body_inv_sf)?;
        for row in &mut s {
            for e in row {
                *e = e.neg();
            }
        }
        s
    };
    let mut series = identity_sf(chart, dim);
    let mut power = identity_sf(chart, dim);
    for _ in 0..chart.odd_dim() {
        power = mat_mul(&power, &step)?;
        if power.iter().all(|row| row.iter().all(|f| f.is_zero())) {
            break;
        }
        for i in 0..dim {
            for j in 0..dim {
                series[i][j] = series[i][j].add(&power[i][j]);
            }
        }
    }
    mat_mul(&body_inv_sf, &series)
}

fn identity_sf(chart: &ChartRef, dim: usize) -> Vec<Vec<Superfunction>> {
    let mut out = vec![vec![Superfunction::zero(chart.clone()); dim]; dim];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = Superfunction::one(chart.clone());
    }
    out
}

/// Gauss-Jordan inverse over the exact coefficient fraction field.
pub fn invert_coeff_matrix(n: usize, m: &[Vec<Coefficient>]) -> Result<Vec<Vec<Coefficient>>> {
    let dim = m.len();
    let mut a: Vec<Vec<Coefficient>> = m.to_vec();
    let mut inv: Vec<Vec<Coefficient>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { Coefficient::one(n) } else { Coefficient::zero(n) }).collect())
        .collect();
    for col in 0..dim {
        let pivot_row = (col..dim)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Degenerate("matrix body is singular".into()))?;
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot_inv = a[col][col].inverse()?;
        for j in 0..dim {
            a[col][j] = a[col][j].mul(&pivot_inv);
            inv[col][j] = inv[col][j].mul(&pivot_inv);
        }
        for r in 0..dim {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for j in 0..dim {
                    let sub_a = a[col][j].mul(&factor);
                    a[r][j] = a[r][j].sub(&sub_a);
                    let sub_i = inv[col][j].mul(&factor);
                    inv[r][j] = inv[r][j].sub(&sub_i);
                }
            }
        }
    }
    Ok(inv)
}

/// The defect exp*(θ) − θ₀ of the normal exponential identification, in the
/// split coordinates of a coordinate conormal. It always equals
/// d(Σ_normal x^a ψ_a); see [`normal_exp_potential`].
pub fn normal_exp_defect(c: &ConormalSpec) -> Result<SuperForm> {
    if c.chart.provenance != Provenance::PiOmega1 {
        return Err(Error::Provenance("the normal exponential model lives on odd cotangent charts".into()));
    }
    let chart = &c.chart;
    let n = chart.even_dim();
    let pulled_back = liouville_form(chart)?;
    // θ₀: canonical one-form of the odd cotangent bundle of the conormal,
    // written in the identified split coordinates
    let mut theta0 = SuperForm::zero(chart.clone());
    for &a in &c.tangent() {
        theta0.insert_add(
            FormKey { psis: vec![a as u16], dxs: vec![a as u16], dpsis: Vec::new() },
            Coefficient::one(n).neg(),
        );
    }
    for &a in &c.normal {
        theta0.insert_add(
            FormKey { psis: Vec::new(), dxs: Vec::new(), dpsis: vec![a as u16] },
            Coefficient::coordinate(n, a).neg(),
        );
    }
    Ok(pulled_back.sub(&theta0))
}

/// The generating function Σ_normal x^a ψ_a whose differential is the defect.
pub fn normal_exp_potential(c: &ConormalSpec) -> Result<Superfunction> {
    let chart = &c.chart;
    let n = chart.even_dim();
    let mut out = Superfunction::zero(chart.clone());
    for &a in &c.normal {
        out.insert_add(OddMonomial::single(a), Coefficient::coordinate(n, a));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON term format shared with superfunctions: 1-based indices.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperFormTermDto {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub odd: Vec<u16>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dx: Vec<u16>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dpsi: Vec<u16>,
    pub coeff: CoefficientDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperFormDto {
    pub terms: Vec<SuperFormTermDto>,
}

impl SuperForm {
    pub fn to_dto(&self) -> SuperFormDto {
        SuperFormDto {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| SuperFormTermDto {
                    odd: k.psis.iter().map(|a| a + 1).collect(),
                    dx: k.dxs.iter().map(|a| a + 1).collect(),
                    dpsi: k.dpsis.iter().map(|a| a + 1).collect(),
                    coeff: c.to_dto(),
                })
                .collect(),
        }
    }

    pub fn from_dto(dto: &SuperFormDto, chart: ChartRef) -> Result<Self> {
        let n = chart.even_dim();
        let down = |v: &[u16]| -> Result<Vec<u16>> {
            v.iter()
                .map(|a| a.checked_sub(1).ok_or_else(|| Error::Invalid("indices are 1-based".into())))
                .collect()
        };
        let mut out = SuperForm::zero(chart.clone());
        for t in &dto.terms {
            let key = FormKey { psis: down(&t.odd)?, dxs: down(&t.dx)?, dpsis: down(&t.dpsi)? };
            let single = SuperForm::term(chart.clone(), Coefficient::from_dto(&t.coeff, n)?, key)?;
            out = out.add(&single);
        }
        Ok(out)
    }
}
