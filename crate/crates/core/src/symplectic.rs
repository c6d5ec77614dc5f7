//! Even symplectic structures on the base and their lifts to the odd
//! cotangent bundle: the inverse-matrix quadratic superfunction, its
//! square-zero Hamiltonian field, isotropy of conormals, the restriction of
//! the field to a Lagrangian conormal as the de Rham differential, and the
//! closedness of graph pullbacks.

use std::collections::BTreeMap;

use crate::cartan::{
    canonical_odd_symplectic, exterior_d, hamiltonian_field, FormKey, SuperForm, SuperVectorField,
};
use crate::chart::{cotangent_chart, ChartRef, ConormalSpec, CoordId, SuperChart, Topology};
use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::grassmann::{OddMonomial, ParityCheck, Superfunction};
use crate::scalar::Scalar;

/// Closed nondegenerate antisymmetric two-form on a purely even 2m-chart,
/// with its exact matrix inverse cached.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenSymplectic {
    pub base: ChartRef,
    pub phase: ChartRef,
    omega: Vec<Vec<Coefficient>>,
    inverse: Vec<Vec<Coefficient>>,
    closed: bool,
}

impl EvenSymplectic {
    pub fn new(base: ChartRef, omega: Vec<Vec<Coefficient>>) -> Result<Self> {
        Self::build(base, omega, true)
    }

    /// Skips the closedness check; the antisymmetry and invertibility checks
    /// stay. Exists for the negative control in which the lifted field fails
    /// to square to zero.
    pub fn new_unchecked_closedness(base: ChartRef, omega: Vec<Vec<Coefficient>>) -> Result<Self> {
        Self::build(base, omega, false)
    }

    fn build(base: ChartRef, omega: Vec<Vec<Coefficient>>, check_closed: bool) -> Result<Self> {
        if base.odd_dim() != 0 {
            return Err(Error::Provenance("even symplectic forms live on even charts".into()));
        }
        let n = base.even_dim();
        if n % 2 != 0 {
            return Err(Error::Range("even symplectic charts have even dimension".into()));
        }
        if omega.len() != n || omega.iter().any(|row| row.len() != n) {
            return Err(Error::Invalid(format!("component matrix must be {n}x{n}")));
        }
        for a in 0..n {
            for b in 0..n {
                if omega[a][b] != omega[b][a].neg() {
                    return Err(Error::NotAntisymmetric);
                }
            }
        }
        let closed = {
            let mut ok = true;
            'outer: for a in 0..n {
                for b in (a + 1)..n {
                    for c in (b + 1)..n {
                        let cyc = omega[b][c]
                            .derivative(a)
                            .sub(&omega[a][c].derivative(b))
                            .add(&omega[a][b].derivative(c));
                        if !cyc.is_zero() {
                            ok = false;
                            break 'outer;
                        }
                    }
                }
            }
            ok
        };
        if check_closed && !closed {
            return Err(Error::NotClosed);
        }
        let inverse = crate::cartan::invert_coeff_matrix(n, &omega)?;
        let phase = cotangent_chart(&base)?;
        Ok(EvenSymplectic { base, phase, omega, inverse, closed })
    }

    /// The standard form with pairs (i, m+i): ω_{i,m+i} = 1.
    pub fn darboux(m: usize, topology: Topology) -> Result<Self> {
        let base = SuperChart::base(2 * m, topology);
        let n = 2 * m;
        let mut omega = vec![vec![Coefficient::zero(n); n]; n];
        for i in 0..m {
            omega[i][m + i] = Coefficient::one(n);
            omega[m + i][i] = Coefficient::one(n).neg();
        }
        EvenSymplectic::new(base, omega)
    }

    pub fn dim(&self) -> usize {
        self.base.even_dim()
    }

    pub fn component(&self, a: usize, b: usize) -> &Coefficient {
        &self.omega[a][b]
    }

    pub fn inverse_component(&self, a: usize, b: usize) -> &Coefficient {
        &self.inverse[a][b]
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// True when the matrix entries are constants.
    pub fn is_constant(&self) -> bool {
        self.omega.iter().flatten().all(|c| c.as_scalar().is_some())
    }

    /// The even quadratic superfunction Σ ω^{ab} ψ_a ψ_b on the phase chart.
    pub fn bivector_superfunction(&self) -> Superfunction {
        let n = self.dim();
        let mut out = Superfunction::zero(self.phase.clone());
        for a in 0..n {
            for b in (a + 1)..n {
                // ω^{ab}ψ_aψ_b + ω^{ba}ψ_bψ_a = 2ω^{ab}ψ_aψ_b
                let c = self.inverse[a][b].scale(&Scalar::from_int(2));
                out.insert_add(OddMonomial(vec![a as u16, b as u16]), c);
            }
        }
        out
    }

    /// The odd Hamiltonian field of the bivector superfunction. For closed ω
    /// it squares to zero and annihilates the bivector; both are verified on
    /// the chart generators, and a failure is reported as an error.
    pub fn derham_lift_field(&self) -> Result<SuperVectorField> {
        let field = self.derham_lift_field_unverified()?;
        let w_hat = self.bivector_superfunction();
        if !field.apply(&w_hat)?.is_zero() {
            return Err(Error::Degenerate("lifted field does not annihilate the bivector".into()));
        }
        let n = self.dim();
        for a in 0..n {
            let x = Superfunction::even_coordinate(self.phase.clone(), a)?;
            let p = Superfunction::odd_coordinate(self.phase.clone(), a)?;
            if !field.apply(&field.apply(&x)?)?.is_zero()
                || !field.apply(&field.apply(&p)?)?.is_zero()
            {
                return Err(Error::Degenerate("lifted field does not square to zero".into()));
            }
        }
        Ok(field)
    }

    /// The same solve without the square-zero verification; the q-nilpotency
    /// suite uses it to demonstrate that non-closed forms are detected.
    pub fn derham_lift_field_unverified(&self) -> Result<SuperVectorField> {
        let eta = canonical_odd_symplectic(&self.phase)?;
        hamiltonian_field(&self.bivector_superfunction(), &eta)
    }

    /// ω-isotropy of a conormal: the bivector superfunction restricts to zero.
    pub fn is_isotropic_conormal(&self, c: &ConormalSpec) -> Result<bool> {
        c.chart.check_same(&self.phase)?;
        Ok(self.bivector_superfunction().restrict(c)?.is_zero())
    }

    /// Direct check that the reduced plane of the conormal is Lagrangian:
    /// middle dimension and ω vanishing on the tangent directions.
    pub fn reduced_plane_is_lagrangian(&self, c: &ConormalSpec) -> Result<bool> {
        c.chart.check_same(&self.phase)?;
        let tangent = c.tangent();
        if 2 * tangent.len() != self.dim() {
            return Ok(false);
        }
        for &a in &tangent {
            for &b in &tangent {
                if !self.omega[a][b].restrict_zero(&c.normal)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The lifted field restricted to an isotropic conormal; its components
    /// along the normal directions must vanish on the conormal (tangency).
    pub fn restricted_field(&self, c: &ConormalSpec) -> Result<SuperVectorField> {
        if !self.is_isotropic_conormal(c)? {
            return Err(Error::Degenerate("conormal is not isotropic".into()));
        }
        let field = self.derham_lift_field()?;
        let sub = c.sub_chart();
        let tangent = c.tangent();
        let mut comps: BTreeMap<CoordId, Superfunction> = BTreeMap::new();
        for a in 0..self.dim() {
            let comp = field.component(CoordId::Even(a)).restrict(c)?;
            match tangent.iter().position(|&t| t == a) {
                Some(j) => {
                    if !comp.is_zero() {
                        comps.insert(CoordId::Even(j), comp);
                    }
                }
                None => {
                    if !comp.is_zero() {
                        return Err(Error::Degenerate(
                            "restricted field is not tangent to the conormal".into(),
                        ));
                    }
                }
            }
            let ocomp = field.component(CoordId::Odd(a)).restrict(c)?;
            match c.normal.iter().position(|&s| s == a) {
                Some(j) => {
                    if !ocomp.is_zero() {
                        comps.insert(CoordId::Odd(j), ocomp);
                    }
                }
                None => {
                    if !ocomp.is_zero() {
                        return Err(Error::Degenerate(
                            "restricted field is not tangent to the conormal".into(),
                        ));
                    }
                }
            }
        }
        SuperVectorField::new(sub, field.parity, comps)
    }

    /// Action table of the restricted field on low-degree forms of the
    /// reduced plane, under the identification dx^j ↦ (restricted field)(x^j).
    /// Every row must satisfy lhs = rhs; equality is the test contract.
    pub fn derham_action_table(&self, c: &ConormalSpec) -> Result<DeRhamTable> {
        let field = self.restricted_field(c)?;
        let sub = c.sub_chart();
        let r = sub.even_dim();
        let base = std::sync::Arc::new(SuperChart {
            even: sub.even.clone(),
            odd: Vec::new(),
            provenance: crate::chart::Provenance::Base,
        });
        let mut scale = Vec::with_capacity(r);
        for j in 0..r {
            scale.push(field.apply(&Superfunction::even_coordinate(sub.clone(), j)?)?);
        }

        let identify = |w: &SuperForm| -> Result<Superfunction> {
            let mut out = Superfunction::zero(sub.clone());
            for (key, coeff) in w.terms() {
                let mut term = Superfunction::from_coeff(sub.clone(), coeff.clone());
                for &j in &key.dxs {
                    term = term.mul(&scale[j as usize])?;
                }
                out = out.add(&term);
            }
            Ok(out)
        };

        let coord_fn = |j: usize| -> Result<Superfunction> {
            if base.even[j].topology == Topology::Circle {
                let mut freqs = vec![0i32; r];
                freqs[j] = 1;
                Ok(Superfunction::from_coeff(base.clone(), Coefficient::mode(r, &freqs)))
            } else {
                Superfunction::even_coordinate(base.clone(), j)
            }
        };

        let mut inputs: Vec<SuperForm> = Vec::new();
        inputs.push(SuperForm::from_superfunction(&Superfunction::one(base.clone())));
        for j in 0..r {
            inputs.push(SuperForm::from_superfunction(&coord_fn(j)?));
            inputs.push(SuperForm::term(
                base.clone(),
                Coefficient::one(r),
                FormKey { psis: vec![], dxs: vec![j as u16], dpsis: vec![] },
            )?);
            let g = coord_fn((j + 1) % r)?;
            inputs.push(
                SuperForm::from_superfunction(&g)
                    .mul(&SuperForm::term(
                        base.clone(),
                        Coefficient::one(r),
                        FormKey { psis: vec![], dxs: vec![j as u16], dpsis: vec![] },
                    )?)?,
            );
        }
        if r >= 2 {
            inputs.push(SuperForm::term(
                base.clone(),
                Coefficient::one(r),
                FormKey { psis: vec![], dxs: vec![0, 1], dpsis: vec![] },
            )?);
        }

        let mut rows = Vec::new();
        for w in inputs {
            let lhs = field.apply(&identify(&w)?)?;
            let rhs = identify(&exterior_d(&w))?;
            rows.push(DeRhamRow { input: w, lhs, rhs });
        }
        Ok(DeRhamTable { base, sub_chart: sub, scale, rows })
    }

    /// Pullback of the bivector superfunction along the graph deformation of
    /// the standard Lagrangian conormal: the normal evens map to ∂f/∂ψ, the
    /// tangent odds to −∂f/∂x. The result lives on the conormal chart; it is
    /// annihilated by the fiber field Σ ψ_j ∂/∂x^j (checked by the caller).
    pub fn graph_restricted_bivector(&self, f: &Superfunction) -> Result<Superfunction> {
        if !self.is_constant() || !self.is_closed() {
            return Err(Error::Invalid("graph pullbacks are built in the constant model".into()));
        }
        let n = self.dim();
        let m = n / 2;
        let c = self.standard_lagrangian_conormal()?;
        let sub = c.sub_chart();
        f.chart.check_same(&sub)?;
        if !f.is_zero() && f.parity() != ParityCheck::Odd {
            return Err(Error::Parity("graph deformations are generated by odd functions".into()));
        }
        if !f.terms().all(|(_, c)| c.is_polynomial()) {
            return Err(Error::Invalid("graph deformations need polynomial coefficients".into()));
        }
        let mut images: BTreeMap<CoordId, Superfunction> = BTreeMap::new();
        for j in 0..m {
            images.insert(CoordId::Even(m + j), f.partial_odd(j)?);
            images.insert(CoordId::Odd(j), f.partial_even(j)?.neg());
        }
        // tangent evens and normal odds keep their names; ambient x^j has the
        // same name as sub-chart x^j, ambient ψ_{m+j} the same as sub odd j
        self.bivector_superfunction().substitute(&images, &sub)
    }

    /// The conormal of the plane spanned by the first m coordinates.
    pub fn standard_lagrangian_conormal(&self) -> Result<ConormalSpec> {
        let m = self.dim() / 2;
        ConormalSpec::new(self.phase.clone(), &(m..2 * m).collect::<Vec<_>>())
    }
}

/// The fiber de Rham field Σ_j ψ_j ∂/∂x^j of a conormal chart; closedness
/// under it is scale-independent.
pub fn fiber_derham_field(sub: &ChartRef) -> Result<SuperVectorField> {
    if sub.even_dim() != sub.odd_dim() {
        return Err(Error::Invalid("fiber field needs a paired chart".into()));
    }
    let mut comps = BTreeMap::new();
    for j in 0..sub.even_dim() {
        comps.insert(CoordId::Even(j), Superfunction::odd_coordinate(sub.clone(), j)?);
    }
    SuperVectorField::new(sub.clone(), crate::grassmann::Parity::Odd, comps)
}

#[derive(Debug, Clone)]
pub struct DeRhamRow {
    pub input: SuperForm,
    pub lhs: Superfunction,
    pub rhs: Superfunction,
}

#[derive(Debug, Clone)]
pub struct DeRhamTable {
    pub base: ChartRef,
    pub sub_chart: ChartRef,
    /// Images of the coordinate differentials under the identification.
    pub scale: Vec<Superfunction>,
    pub rows: Vec<DeRhamRow>,
}

impl DeRhamTable {
    pub fn all_rows_match(&self) -> bool {
        self.rows.iter().all(|r| r.lhs == r.rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    fn psi(ch: &ChartRef, a: usize) -> Superfunction {
        Superfunction::odd_coordinate(ch.clone(), a).unwrap()
    }

    fn x(ch: &ChartRef, a: usize) -> Superfunction {
        Superfunction::even_coordinate(ch.clone(), a).unwrap()
    }

    #[test]
    fn bivector_darboux_values() {
        let w = EvenSymplectic::darboux(1, Topology::Affine).unwrap();
        let cy = w.phase.clone();
        let expect = psi(&cy, 0).mul(&psi(&cy, 1)).unwrap().scale(&Scalar::from_int(-2));
        assert_eq!(w.bivector_superfunction(), expect);

        let w2 = EvenSymplectic::darboux(2, Topology::Affine).unwrap();
        let cy2 = w2.phase.clone();
        let expect2 = psi(&cy2, 0)
            .mul(&psi(&cy2, 2)).unwrap()
            .add(&psi(&cy2, 1).mul(&psi(&cy2, 3)).unwrap())
            .scale(&Scalar::from_int(-2));
        assert_eq!(w2.bivector_superfunction(), expect2);
    }

    #[test]
    fn lifted_field_darboux_is_twice_the_matrix_contraction() {
        let w = EvenSymplectic::darboux(1, Topology::Affine).unwrap();
        let cy = w.phase.clone();
        let q = w.derham_lift_field().unwrap();
        // components 2 Σ ω^{ab} ψ_b ∂/∂x^a
        assert_eq!(q.component(CoordId::Even(0)), psi(&cy, 1).scale(&Scalar::from_int(-2)));
        assert_eq!(q.component(CoordId::Even(1)), psi(&cy, 0).scale(&Scalar::from_int(2)));
        assert!(q.component(CoordId::Odd(0)).is_zero());
        assert!(q.component(CoordId::Odd(1)).is_zero());
        // exactly twice the printed matrix contraction, same signs
        for a in 0..2 {
            let mut printed = Superfunction::zero(cy.clone());
            for b in 0..2 {
                printed = printed.add(
                    &psi(&cy, b).scale_coeff(&w.inverse_component(a, b).extend(2, &[0, 1])),
                );
            }
            assert_eq!(q.component(CoordId::Even(a)), printed.scale(&Scalar::from_int(2)));
        }
    }

    #[test]
    fn lifted_field_annihilates_bivector_and_squares_to_zero() {
        // Darboux plus an exact polynomial perturbation stays closed
        let m = 1usize;
        let n = 2 * m;
        let base = SuperChart::base_affine(n);
        let mut omega = vec![vec![Coefficient::zero(n); n]; n];
        omega[0][1] = Coefficient::one(n);
        omega[1][0] = Coefficient::one(n).neg();
        // β = x0² x1 dx0 : dβ adds ∂1(x0²x1) = x0² to ω_{10}
        let beta0 = Coefficient::coordinate(n, 0)
            .mul(&Coefficient::coordinate(n, 0))
            .mul(&Coefficient::coordinate(n, 1));
        let d01 = beta0.derivative(1).neg(); // (dβ)_{01} = ∂0 β1 − ∂1 β0 with β1 = 0
        omega[0][1] = omega[0][1].add(&d01);
        omega[1][0] = omega[1][0].sub(&d01);
        let w = EvenSymplectic::new(base, omega).unwrap();
        let q = w.derham_lift_field().unwrap();

        let cy = w.phase.clone();
        let samples = [
            x(&cy, 0).mul(&psi(&cy, 1)).unwrap(),
            x(&cy, 1).mul(&x(&cy, 1)).unwrap().mul(&psi(&cy, 0)).unwrap().add(&psi(&cy, 1)),
            psi(&cy, 0).mul(&psi(&cy, 1)).unwrap().mul(&x(&cy, 0)).unwrap(),
        ];
        for f in samples {
            assert!(q.apply(&q.apply(&f).unwrap()).unwrap().is_zero());
        }
        assert!(q.apply(&w.bivector_superfunction()).unwrap().is_zero());
    }

    #[test]
    fn nonclosed_form_is_detected() {
        // ω = Darboux(pairs (0,2),(1,3)) with an x4-dependent (0,1)-entry
        let n = 4usize;
        let base = SuperChart::base_affine(n);
        let mut omega = vec![vec![Coefficient::zero(n); n]; n];
        for i in 0..2 {
            omega[i][2 + i] = Coefficient::one(n);
            omega[2 + i][i] = Coefficient::one(n).neg();
        }
        omega[0][1] = Coefficient::coordinate(n, 3);
        omega[1][0] = Coefficient::coordinate(n, 3).neg();
        assert_eq!(EvenSymplectic::new(base.clone(), omega.clone()), Err(Error::NotClosed));

        let w = EvenSymplectic::new_unchecked_closedness(base, omega).unwrap();
        assert!(!w.is_closed());
        assert!(w.derham_lift_field().is_err());
        let q = w.derham_lift_field_unverified().unwrap();
        let cy = w.phase.clone();
        let mut detected = false;
        for a in 0..n {
            let xx = x(&cy, a);
            let pp = psi(&cy, a);
            if !q.apply(&q.apply(&xx).unwrap()).unwrap().is_zero()
                || !q.apply(&q.apply(&pp).unwrap()).unwrap().is_zero()
            {
                detected = true;
            }
        }
        assert!(detected);
    }

    #[test]
    fn isotropy_of_coordinate_planes() {
        let w = EvenSymplectic::darboux(2, Topology::Affine).unwrap();
        let cy = w.phase.clone();
        // Lagrangian plane {x3 = x4 = 0}: isotropic, and Lagrangian by rank
        let lag = ConormalSpec::new(cy.clone(), &[2, 3]).unwrap();
        assert!(w.is_isotropic_conormal(&lag).unwrap());
        assert!(w.reduced_plane_is_lagrangian(&lag).unwrap());
        // normal set containing a conjugate pair: not isotropic, not Lagrangian
        let bad = ConormalSpec::new(cy.clone(), &[0, 2]).unwrap();
        assert!(!w.is_isotropic_conormal(&bad).unwrap());
        assert!(!w.reduced_plane_is_lagrangian(&bad).unwrap());
        // middle-dimensional sweep: isotropy iff Lagrangian
        for mask in 0..16u32 {
            let normal: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            if normal.len() != 2 {
                continue;
            }
            let c = ConormalSpec::new(cy.clone(), &normal).unwrap();
            assert_eq!(
                w.is_isotropic_conormal(&c).unwrap(),
                w.reduced_plane_is_lagrangian(&c).unwrap(),
                "mismatch at normal set {normal:?}"
            );
        }
    }

    #[test]
    fn isotropy_degenerate_zero_dim() {
        let w = EvenSymplectic::darboux(0, Topology::Affine).unwrap();
        let c = ConormalSpec::new(w.phase.clone(), &[]).unwrap();
        assert!(w.is_isotropic_conormal(&c).unwrap());
    }

    #[test]
    fn restricted_field_is_derham_on_tables() {
        for topology in [Topology::Affine, Topology::Circle] {
            for m in 1..=2usize {
                let w = EvenSymplectic::darboux(m, topology).unwrap();
                let c = w.standard_lagrangian_conormal().unwrap();
                let table = w.derham_action_table(&c).unwrap();
                assert!(table.all_rows_match(), "table mismatch at m={m}");
                // identification sends dx^j to a nonzero multiple of ψ_j
                for (j, s) in table.scale.iter().enumerate() {
                    let expect = Superfunction::odd_coordinate(table.sub_chart.clone(), j)
                        .unwrap()
                        .scale(&Scalar::from_int(-2));
                    assert_eq!(s, &expect);
                }
                // the restricted field still squares to zero
                let field = w.restricted_field(&c).unwrap();
                let sub = c.sub_chart();
                let probe = Superfunction::even_coordinate(sub.clone(), 0).unwrap();
                assert!(field.apply(&field.apply(&probe).unwrap()).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn graph_pullback_is_fiber_closed() {
        let w = EvenSymplectic::darboux(1, Topology::Affine).unwrap();
        let c = w.standard_lagrangian_conormal().unwrap();
        let sub = c.sub_chart();
        // f = x¹ ψ (the normal-paired odd coordinate): pullback vanishes
        let f = x(&sub, 0).mul(&psi(&sub, 0)).unwrap();
        let pulled = w.graph_restricted_bivector(&f).unwrap();
        assert!(pulled.is_zero());

        // f = 0: the restriction itself, zero by isotropy
        let z = Superfunction::zero(sub.clone());
        assert!(w.graph_restricted_bivector(&z).unwrap().is_zero());

        // a quadratic deformation at m = 2 gives a nonzero closed pullback
        let w2 = EvenSymplectic::darboux(2, Topology::Affine).unwrap();
        let c2 = w2.standard_lagrangian_conormal().unwrap();
        let sub2 = c2.sub_chart();
        let f2 = x(&sub2, 0)
            .mul(&x(&sub2, 0)).unwrap()
            .mul(&psi(&sub2, 1)).unwrap()
            .add(&x(&sub2, 1).mul(&psi(&sub2, 0)).unwrap().scale(&Scalar::from_rational(crate::scalar::rat(3, 2))));
        let pulled = w2.graph_restricted_bivector(&f2).unwrap();
        assert!(!pulled.is_zero());
        let q0 = fiber_derham_field(&sub2).unwrap();
        assert!(q0.apply(&pulled).unwrap().is_zero());

        // even deformations are rejected
        let even_f = x(&sub2, 0).clone();
        assert!(w2.graph_restricted_bivector(&even_f).is_err());
        let _ = rat_int(0);
    }
}
