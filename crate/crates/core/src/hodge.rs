//! Exact truncated-Fourier de Rham complex on flat tori.
//!
//! The basis is {e^{2πi⟨k,x⟩} dx_I : |k|_∞ ≤ K, I ⊆ {1..m}} with Gaussian
//! rational × (2π)-power scalars; d is the cartan exterior derivative
//! expressed in this basis and the Hodge star is the signed permutation
//! ⋆dx_I = ε(I, I^c) dx_{I^c} of the flat metric with unit periods. Betti
//! numbers come from exact Gaussian elimination, and the bridge report
//! compares the BV operator against 2⋆d⋆ under the conormal identification
//! dx^j ↦ ψ_j, recording the single global constant relating them.
//!
//! Adjointness on this basis reads ⟨dα, β⟩ = σ_p ⟨α, ⋆d⋆β⟩ for β of degree
//! p+1 with σ_p = (−1)^{mp+1}; the sign is exercised in the tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bv::{bv_delta, BerezinVolume};
use crate::cartan::{canonical_odd_symplectic, exterior_d, FormKey, SuperForm};
use crate::chart::{ChartRef, ConormalSpec, SuperChart};
use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::grassmann::{OddMonomial, Superfunction};
use crate::scalar::{rational_string, Scalar};

/// One basis element: a frequency vector and an ascending dx-subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BasisElem {
    pub degree: usize,
    pub subset: Vec<u16>,
    pub freqs: Vec<i32>,
}

type SparseCol = Vec<(usize, Scalar)>;

#[derive(Debug, Clone)]
pub struct FourierComplex {
    pub m: usize,
    pub cutoff: i32,
    pub base: ChartRef,
    basis: Vec<BasisElem>,
    index: BTreeMap<(Vec<u16>, Vec<i32>), usize>,
    d_cols: Vec<SparseCol>,
    star_cols: Vec<SparseCol>,
}

impl FourierComplex {
    pub fn new(m: usize, cutoff: i32) -> Result<Self> {
        if !(1..=4).contains(&m) {
            return Err(Error::Range(format!("torus dimension m={m}, supported 1..=4")));
        }
        if cutoff < 1 {
            return Err(Error::Range("frequency cutoff must be at least 1".into()));
        }
        let base = SuperChart::base_torus(m);

        let mut basis = Vec::new();
        let mut index = BTreeMap::new();
        let mut freq_list: Vec<Vec<i32>> = vec![Vec::new()];
        for _ in 0..m {
            let mut next = Vec::new();
            for f in &freq_list {
                for k in -cutoff..=cutoff {
                    let mut g = f.clone();
                    g.push(k);
                    next.push(g);
                }
            }
            freq_list = next;
        }
        for mask in 0..(1u32 << m) {
            let subset: Vec<u16> = (0..m as u16).filter(|i| mask & (1 << i) != 0).collect();
            for freqs in &freq_list {
                let elem = BasisElem { degree: subset.len(), subset: subset.clone(), freqs: freqs.clone() };
                index.insert((elem.subset.clone(), elem.freqs.clone()), basis.len());
                basis.push(elem);
            }
        }

        let mut complex = FourierComplex {
            m,
            cutoff,
            base,
            basis,
            index,
            d_cols: Vec::new(),
            star_cols: Vec::new(),
        };
        complex.d_cols = (0..complex.basis.len())
            .map(|j| complex.decompose(&exterior_d(&complex.basis_form(j))))
            .collect::<Result<_>>()?;
        complex.star_cols =
            (0..complex.basis.len()).map(|j| complex.star_column(j)).collect();
        Ok(complex)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[BasisElem] {
        &self.basis
    }

    /// The j-th basis element as a form on the base torus.
    pub fn basis_form(&self, j: usize) -> SuperForm {
        let e = &self.basis[j];
        let c = Coefficient::mode(self.m, &e.freqs);
        SuperForm::term(
            self.base.clone(),
            c,
            FormKey { psis: Vec::new(), dxs: e.subset.clone(), dpsis: Vec::new() },
        )
        .expect("basis element is a valid form")
    }

    /// Decompose a form on the base into basis coordinates.
    pub fn decompose(&self, w: &SuperForm) -> Result<SparseCol> {
        let mut out = Vec::new();
        for (key, c) in w.terms() {
            if !c.den_is_one() {
                return Err(Error::Invalid("complex coefficients must be denominator-free".into()));
            }
            for (ck, s) in c.num.terms() {
                if ck.pows.iter().any(|p| *p > 0) {
                    return Err(Error::Invalid("polynomial terms on the torus".into()));
                }
                if ck.freqs.iter().any(|f| f.abs() > self.cutoff) {
                    return Err(Error::Range("frequency beyond the cutoff".into()));
                }
                let idx = *self
                    .index
                    .get(&(key.dxs.clone(), ck.freqs.clone()))
                    .ok_or_else(|| Error::Invalid("term outside the complex".into()))?;
                out.push((idx, s.clone()));
            }
        }
        out.sort_by_key(|(i, _)| *i);
        Ok(out)
    }

    fn star_column(&self, j: usize) -> SparseCol {
        let e = &self.basis[j];
        let (complement, neg) = complement_with_sign(&e.subset, self.m);
        let idx = self.index[&(complement, e.freqs.clone())];
        let s = if neg { Scalar::from_int(-1) } else { Scalar::one() };
        vec![(idx, s)]
    }

    pub fn apply_d(&self, v: &BTreeMap<usize, Scalar>) -> BTreeMap<usize, Scalar> {
        self.apply_cols(&self.d_cols, v)
    }

    pub fn apply_star(&self, v: &BTreeMap<usize, Scalar>) -> BTreeMap<usize, Scalar> {
        self.apply_cols(&self.star_cols, v)
    }

    /// The codifferential-shaped operator ⋆d⋆ (no degree-dependent sign).
    pub fn apply_star_d_star(&self, v: &BTreeMap<usize, Scalar>) -> BTreeMap<usize, Scalar> {
        self.apply_star(&self.apply_d(&self.apply_star(v)))
    }

    fn apply_cols(
        &self,
        cols: &[SparseCol],
        v: &BTreeMap<usize, Scalar>,
    ) -> BTreeMap<usize, Scalar> {
        let mut out: BTreeMap<usize, Scalar> = BTreeMap::new();
        for (j, s) in v {
            for (i, c) in &cols[*j] {
                let add = c.mul(s);
                if add.is_zero() {
                    continue;
                }
                let entry = out.entry(*i).or_insert_with(Scalar::zero);
                *entry = entry.add(&add);
                if entry.is_zero() {
                    out.remove(i);
                }
            }
        }
        out
    }

    fn unit_vector(&self, j: usize) -> BTreeMap<usize, Scalar> {
        let mut v = BTreeMap::new();
        v.insert(j, Scalar::one());
        v
    }

    /// Hermitian inner product with unit total volume: conjugate, multiply,
    /// take the zero mode, summed over matching dx-subsets.
    pub fn inner_product(
        &self,
        a: &BTreeMap<usize, Scalar>,
        b: &BTreeMap<usize, Scalar>,
    ) -> Scalar {
        let mut out = Scalar::zero();
        for (i, s) in a {
            for (j, t) in b {
                let (ei, ej) = (&self.basis[*i], &self.basis[*j]);
                if ei.subset == ej.subset && ei.freqs == ej.freqs {
                    out = out.add(&s.mul(&t.conj()));
                }
            }
        }
        out
    }

    fn degree_indices(&self, p: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.basis[j].degree == p).collect()
    }

    /// Exact rank of the operator given by `cols`, restricted to the columns
    /// in `col_set` (with optional second operator stacked below).
    fn rank_of(&self, operators: &[&[SparseCol]], col_set: &[usize]) -> usize {
        let nrows = self.len();
        let mut rows: Vec<BTreeMap<usize, Scalar>> = Vec::new();
        for &j in col_set {
            let mut col: BTreeMap<usize, Scalar> = BTreeMap::new();
            for (block, cols) in operators.iter().enumerate() {
                for (i, s) in &cols[j] {
                    col.insert(block * nrows + i, s.clone());
                }
            }
            if !col.is_empty() {
                rows.push(col);
            }
        }
        rank_sparse(rows)
    }

    /// Per-degree Betti numbers, the closed∩coclosed dimensions, and the
    /// constant harmonic representatives (checked, not assumed).
    pub fn betti(&self) -> Result<HarmonicReport> {
        let m = self.m;
        let mut rank_d: Vec<usize> = Vec::with_capacity(m + 1);
        for p in 0..=m {
            rank_d.push(self.rank_of(&[&self.d_cols], &self.degree_indices(p)));
        }
        // ⋆d⋆ columns, computed once
        let sds_cols: Vec<SparseCol> = (0..self.len())
            .map(|j| {
                let v = self.apply_star_d_star(&self.unit_vector(j));
                v.into_iter().collect()
            })
            .collect();

        let mut betti = Vec::with_capacity(m + 1);
        let mut harmonic = Vec::with_capacity(m + 1);
        for p in 0..=m {
            let cols = self.degree_indices(p);
            let n_p = cols.len();
            let b = n_p - rank_d[p] - if p == 0 { 0 } else { rank_d[p - 1] };
            betti.push(b);
            let stacked = self.rank_of(&[&self.d_cols, &sds_cols], &cols);
            harmonic.push(n_p - stacked);
        }
        for p in 0..=m {
            if betti[p] != harmonic[p] {
                return Err(Error::Invalid(format!(
                    "degree {p}: Betti {} disagrees with closed∩coclosed {}",
                    betti[p], harmonic[p]
                )));
            }
        }

        // harmonic representatives: the zero-frequency forms, verified to
        // span by dimension count (they always lie in both kernels)
        let mut reps = Vec::new();
        let mut harmonic_is_constants = true;
        for p in 0..=m {
            let consts: Vec<usize> = self
                .degree_indices(p)
                .into_iter()
                .filter(|&j| self.basis[j].freqs.iter().all(|k| *k == 0))
                .collect();
            if consts.len() != harmonic[p] {
                harmonic_is_constants = false;
            }
            for j in consts {
                let d_img = self.apply_d(&self.unit_vector(j));
                let sds_img = self.apply_star_d_star(&self.unit_vector(j));
                if !d_img.is_empty() || !sds_img.is_empty() {
                    harmonic_is_constants = false;
                }
                reps.push(self.basis[j].clone());
            }
        }

        let total = betti.iter().sum();
        Ok(HarmonicReport {
            m,
            cutoff: self.cutoff,
            betti,
            total,
            harmonic_dims: harmonic,
            harmonic_is_constants,
            representatives: reps,
        })
    }

    /// Dimension of the kernel of the stacked operator (d, ⋆d⋆) over the
    /// whole graded space.
    pub fn closed_coclosed_kernel_dim(&self) -> usize {
        let sds_cols: Vec<SparseCol> = (0..self.len())
            .map(|j| self.apply_star_d_star(&self.unit_vector(j)).into_iter().collect())
            .collect();
        let all: Vec<usize> = (0..self.len()).collect();
        self.len() - self.rank_of(&[&self.d_cols, &sds_cols], &all)
    }

    /// Identify a base form with a superfunction on the conormal chart via
    /// dx^j ↦ ψ_j.
    pub fn identify_on(&self, w: &SuperForm, sub: &ChartRef) -> Result<Superfunction> {
        let mut out = Superfunction::zero(sub.clone());
        for (key, c) in w.terms() {
            out.insert_add(OddMonomial(key.dxs.clone()), c.clone());
        }
        Ok(out)
    }

    /// Compare the BV operator with 2⋆d⋆ across the whole basis under the
    /// conormal identification. The relation is Δ∘ι = constant·ι∘(2⋆d⋆) with
    /// one global constant, which the report records; any deviation after
    /// rescaling is a hard failure.
    pub fn bv_bridge(&self, conormal: &ConormalSpec) -> Result<BridgeReport> {
        let sub = conormal.sub_chart();
        if sub.even_dim() != self.m || sub.odd_dim() != self.m || !sub.all_circle() {
            return Err(Error::ChartMismatch(format!(
                "bridge conormal must be an (m|m) torus fiber, m={}",
                self.m
            )));
        }
        let mu = BerezinVolume::flat(sub.clone());
        let eta = canonical_odd_symplectic(&sub)?;

        let mut constant: Option<Scalar> = None;
        let mut checked = 0usize;
        for j in 0..self.len() {
            let w = self.basis_form(j);
            let phi = self.identify_on(&w, &sub)?;
            let lhs = bv_delta(&phi, &mu, &eta)?;
            let mut two_sds = self.apply_star_d_star(&self.unit_vector(j));
            for s in two_sds.values_mut() {
                *s = s.mul(&Scalar::from_int(2));
            }
            let mut rhs = Superfunction::zero(sub.clone());
            for (i, s) in &two_sds {
                let bw = self.basis_form(*i);
                rhs = rhs.add(&self.identify_on(&bw, &sub)?.scale(s));
            }
            checked += 1;
            if lhs.is_zero() && rhs.is_zero() {
                continue;
            }
            if lhs.is_zero() != rhs.is_zero() {
                return Err(Error::Invalid(format!(
                    "bridge mismatch on basis element {j}: one side vanishes"
                )));
            }
            // measure the ratio on the first nonzero pair, then enforce it
            let c = match &constant {
                Some(c) => c.clone(),
                None => {
                    let (m_l, c_l) = lhs.terms().next().expect("nonzero");
                    let c_r = rhs.coeff_of(m_l);
                    if c_r.is_zero() {
                        return Err(Error::Invalid("bridge terms do not align".into()));
                    }
                    let c = c_l
                        .div(&c_r)?
                        .as_scalar()
                        .ok_or_else(|| Error::Invalid("bridge ratio is not a constant".into()))?;
                    constant = Some(c.clone());
                    c
                }
            };
            if lhs != rhs.scale(&c) {
                return Err(Error::Invalid(format!(
                    "bridge deviates from the uniform constant on basis element {j}"
                )));
            }
        }
        let constant = constant.unwrap_or_else(Scalar::one);
        let constant_str = constant
            .as_rational()
            .map(|r| rational_string(&r))
            .unwrap_or_else(|| constant.to_string());
        Ok(BridgeReport { cases: checked, constant: constant_str, max_deviation_zero: true })
    }
}

/// Complement subset and the shuffle sign ε(I, I^c).
fn complement_with_sign(indices: &[u16], n: usize) -> (Vec<u16>, bool) {
    let complement: Vec<u16> = (0..n as u16).filter(|a| !indices.contains(a)).collect();
    let mut inversions = 0usize;
    for &i in indices {
        inversions += complement.iter().filter(|&&j| j < i).count();
    }
    (complement, inversions % 2 == 1)
}

/// Exact row-reduction rank of a sparse scalar matrix.
fn rank_sparse(mut rows: Vec<BTreeMap<usize, Scalar>>) -> usize {
    let mut pivots: BTreeMap<usize, BTreeMap<usize, Scalar>> = BTreeMap::new();
    while let Some(mut row) = rows.pop() {
        loop {
            let Some((&lead, _)) = row.iter().next() else { break };
            match pivots.get(&lead) {
                Some(prow) => {
                    let factor = row[&lead].div(&prow[&lead]).expect("monomial pivot");
                    for (col, val) in prow {
                        let sub = val.mul(&factor);
                        let entry = row.entry(*col).or_insert_with(Scalar::zero);
                        *entry = entry.sub(&sub);
                        if entry.is_zero() {
                            row.remove(col);
                        }
                    }
                }
                None => {
                    pivots.insert(lead, row);
                    break;
                }
            }
        }
    }
    pivots.len()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HarmonicReport {
    pub m: usize,
    #[serde(rename = "K")]
    pub cutoff: i32,
    pub betti: Vec<usize>,
    pub total: usize,
    pub harmonic_dims: Vec<usize>,
    pub harmonic_is_constants: bool,
    #[serde(skip)]
    pub representatives: Vec<BasisElem>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BridgeReport {
    pub cases: usize,
    /// The measured global constant c in Δ∘ι = c·ι∘(2⋆d⋆).
    pub constant: String,
    pub max_deviation_zero: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::cotangent_chart;

    #[test]
    fn basis_sizes() {
        let c = FourierComplex::new(1, 1).unwrap();
        assert_eq!(c.len(), 6); // two degrees × three frequencies
        let c = FourierComplex::new(2, 1).unwrap();
        assert_eq!(c.len(), 36);
        assert!(FourierComplex::new(0, 1).is_err());
        assert!(FourierComplex::new(5, 1).is_err());
        assert!(FourierComplex::new(2, 0).is_err());
    }

    #[test]
    fn d_squares_to_zero_and_star_involutes() {
        for (m, k) in [(1usize, 1i32), (2, 1), (3, 1)] {
            let c = FourierComplex::new(m, k).unwrap();
            for j in 0..c.len() {
                let v = c.unit_vector(j);
                let dd = c.apply_d(&c.apply_d(&v));
                assert!(dd.is_empty(), "d² ≠ 0 at m={m}, j={j}");
                let ss = c.apply_star(&c.apply_star(&v));
                let p = c.basis[j].degree;
                let sign = if (p * (m - p)) % 2 == 1 { Scalar::from_int(-1) } else { Scalar::one() };
                let mut expect = BTreeMap::new();
                expect.insert(j, sign);
                assert_eq!(ss, expect, "⋆⋆ sign at m={m}, degree {p}");
            }
        }
    }

    #[test]
    fn betti_numbers_match_binomials() {
        let c = FourierComplex::new(1, 1).unwrap();
        let r = c.betti().unwrap();
        assert_eq!(r.betti, vec![1, 1]);
        assert!(r.harmonic_is_constants);

        let c = FourierComplex::new(2, 1).unwrap();
        let r = c.betti().unwrap();
        assert_eq!(r.betti, vec![1, 2, 1]);
        assert_eq!(r.total, 4);

        let c = FourierComplex::new(3, 1).unwrap();
        let r = c.betti().unwrap();
        assert_eq!(r.betti, vec![1, 3, 3, 1]);
        assert_eq!(r.total, 8);
        assert!(r.harmonic_is_constants);
    }

    #[test]
    fn betti_is_cutoff_independent() {
        for m in 1..=2usize {
            let r1 = FourierComplex::new(m, 1).unwrap().betti().unwrap();
            let r2 = FourierComplex::new(m, 2).unwrap().betti().unwrap();
            assert_eq!(r1.betti, r2.betti);
        }
    }

    #[test]
    fn stacked_kernel_equals_betti_total() {
        for m in 1..=3usize {
            let c = FourierComplex::new(m, 1).unwrap();
            let r = c.betti().unwrap();
            assert_eq!(c.closed_coclosed_kernel_dim(), r.total);
            assert_eq!(r.total, 1 << m);
        }
    }

    #[test]
    fn adjointness_sign_on_basis() {
        for m in 1..=2usize {
            let c = FourierComplex::new(m, 1).unwrap();
            for i in 0..c.len() {
                for j in 0..c.len() {
                    let a = c.unit_vector(i);
                    let b = c.unit_vector(j);
                    let p = c.basis[j].degree;
                    if p == 0 {
                        continue;
                    }
                    let lhs = c.inner_product(&c.apply_d(&a), &b);
                    // β of degree p: σ = (−1)^{m(p−1)+1}
                    let sign = if (m * (p - 1) + 1) % 2 == 1 { -1i64 } else { 1 };
                    let rhs = c
                        .inner_product(&a, &c.apply_star_d_star(&b))
                        .mul(&Scalar::from_int(sign));
                    assert_eq!(lhs, rhs, "adjointness at m={m}, i={i}, j={j}");
                }
            }
        }
    }

    #[test]
    fn bridge_constant_is_one_half() {
        for m in 1..=2usize {
            let c = FourierComplex::new(m, 1).unwrap();
            let ambient = cotangent_chart(&SuperChart::base_torus(2 * m)).unwrap();
            let conormal =
                ConormalSpec::new(ambient, &(m..2 * m).collect::<Vec<_>>()).unwrap();
            let report = c.bv_bridge(&conormal).unwrap();
            assert_eq!(report.constant, "1/2");
            assert!(report.max_deviation_zero);
            assert_eq!(report.cases, c.len());
        }
    }

    #[test]
    fn bridge_handles_constant_forms() {
        // constant forms are harmonic: both sides vanish
        let c = FourierComplex::new(1, 1).unwrap();
        let ambient = cotangent_chart(&SuperChart::base_torus(2)).unwrap();
        let conormal = ConormalSpec::new(ambient, &[1]).unwrap();
        let sub = conormal.sub_chart();
        let mu = BerezinVolume::flat(sub.clone());
        let eta = canonical_odd_symplectic(&sub).unwrap();
        for j in 0..c.len() {
            if c.basis[j].freqs.iter().all(|k| *k == 0) {
                let phi = c.identify_on(&c.basis_form(j), &sub).unwrap();
                assert!(bv_delta(&phi, &mu, &eta).unwrap().is_zero());
                assert!(c.apply_star_d_star(&c.unit_vector(j)).is_empty());
            }
        }
    }
}
