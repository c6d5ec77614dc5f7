//! Seeded deterministic generators for the verification suites.
//!
//! One ChaCha stream per sampler; identical seeds and size parameters give
//! identical values, which the reports rely on for byte-stable output.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cartan::{FormKey, SuperForm, SuperVectorField};
use crate::chart::{ChartRef, CoordId, SuperChart};
use crate::coeff::{CoeffKey, CoeffSum, Coefficient};
use crate::error::Result;
use crate::grassmann::{OddMonomial, Parity, Superfunction};
use crate::scalar::{GaussRat, Rational, Scalar};
use crate::symplectic::EvenSymplectic;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream for a sub-task; deterministic in (seed, stream).
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng }
    }

    pub fn rational(&mut self) -> Rational {
        let num = self.rng.gen_range(-6i64..=6);
        let den = self.rng.gen_range(1i64..=3);
        crate::scalar::rat(num, den)
    }

    pub fn rational_nonzero(&mut self) -> Rational {
        loop {
            let r = self.rational();
            if !num::Zero::is_zero(&r) {
                return r;
            }
        }
    }

    pub fn scalar(&mut self) -> Scalar {
        Scalar::from_rational(self.rational())
    }

    pub fn scalar_nonzero(&mut self) -> Scalar {
        Scalar::from_rational(self.rational_nonzero())
    }

    pub fn gauss_scalar(&mut self) -> Scalar {
        Scalar::from_gauss(GaussRat { re: self.rational(), im: self.rational() })
    }

    fn poly_key(&mut self, n: usize, max_deg: u32) -> CoeffKey {
        let mut pows = vec![0u32; n];
        let budget = self.rng.gen_range(0..=max_deg);
        for _ in 0..budget {
            let j = self.rng.gen_range(0..n);
            pows[j] += 1;
        }
        CoeffKey { pows, freqs: vec![0; n] }
    }

    fn fourier_key(&mut self, n: usize, max_freq: i32) -> CoeffKey {
        let freqs = (0..n).map(|_| self.rng.gen_range(-max_freq..=max_freq)).collect();
        CoeffKey { pows: vec![0; n], freqs }
    }

    /// Random polynomial coefficient, degree ≤ max_deg.
    pub fn poly_coeff(&mut self, n: usize, max_deg: u32, terms: usize) -> Coefficient {
        let mut sum = CoeffSum::zero(n);
        for _ in 0..terms {
            let key = self.poly_key(n, max_deg);
            sum.insert_add(key, self.scalar());
        }
        Coefficient::from_sum(sum)
    }

    /// Random finite Fourier sum, |k|_∞ ≤ max_freq.
    pub fn fourier_coeff(&mut self, n: usize, max_freq: i32, terms: usize) -> Coefficient {
        let mut sum = CoeffSum::zero(n);
        for _ in 0..terms {
            let key = self.fourier_key(n, max_freq);
            sum.insert_add(key, self.scalar());
        }
        Coefficient::from_sum(sum)
    }

    /// Coefficient matching the chart topology.
    pub fn coeff_for(&mut self, chart: &ChartRef, max_size: u32, terms: usize) -> Coefficient {
        let n = chart.even_dim();
        if chart.all_circle() {
            self.fourier_coeff(n, max_size as i32, terms)
        } else {
            self.poly_coeff(n, max_size, terms)
        }
    }

    /// Unit polynomial: nonzero constant term plus higher terms.
    pub fn unit_poly(&mut self, n: usize, max_deg: u32, terms: usize) -> Coefficient {
        let mut sum = CoeffSum::zero(n);
        sum.insert_add(CoeffKey::unit(n), self.scalar_nonzero());
        for _ in 0..terms {
            let key = self.poly_key(n, max_deg);
            if key.is_unit() {
                continue;
            }
            sum.insert_add(key, self.scalar());
        }
        Coefficient::from_sum(sum)
    }

    /// Polynomial with every term of degree ≥ min_deg.
    pub fn poly_min_degree(&mut self, n: usize, min_deg: u32, max_deg: u32, terms: usize) -> Coefficient {
        let mut sum = CoeffSum::zero(n);
        for _ in 0..terms {
            let mut key = self.poly_key(n, max_deg);
            while key.pows.iter().sum::<u32>() < min_deg {
                let j = self.rng.gen_range(0..n);
                key.pows[j] += 1;
            }
            sum.insert_add(key, self.scalar());
        }
        Coefficient::from_sum(sum)
    }

    fn odd_monomial(&mut self, q: usize, max_len: usize) -> OddMonomial {
        let len = self.rng.gen_range(0..=max_len.min(q));
        let mut indices: Vec<u16> = Vec::new();
        while indices.len() < len {
            let a = self.rng.gen_range(0..q) as u16;
            if !indices.contains(&a) {
                indices.push(a);
            }
        }
        indices.sort_unstable();
        OddMonomial(indices)
    }

    /// Random superfunction with bounded odd degree and coefficient size.
    pub fn superfunction(&mut self, chart: &ChartRef, max_size: u32, terms: usize) -> Superfunction {
        let q = chart.odd_dim();
        let mut out = Superfunction::zero(chart.clone());
        for _ in 0..terms {
            let m = self.odd_monomial(q, q.min(3));
            out.insert_add(m, self.coeff_for(chart, max_size, 2));
        }
        out
    }

    /// Random homogeneous superfunction of the requested parity.
    pub fn homogeneous(
        &mut self,
        chart: &ChartRef,
        parity: Parity,
        max_size: u32,
        terms: usize,
    ) -> Superfunction {
        let (even, odd) = self.superfunction(chart, max_size, terms + 1).parity_split();
        match parity {
            Parity::Even => even,
            Parity::Odd => odd,
        }
    }

    /// Random homogeneous vector field.
    pub fn vector_field(&mut self, chart: &ChartRef, parity: Parity, max_size: u32) -> Result<SuperVectorField> {
        let (n, q) = chart.dims();
        let mut comps: BTreeMap<CoordId, Superfunction> = BTreeMap::new();
        for a in 0..n {
            if self.rng.gen_bool(0.6) {
                let f = self.homogeneous(chart, parity, max_size, 2);
                if !f.is_zero() {
                    comps.insert(CoordId::Even(a), f);
                }
            }
        }
        for a in 0..q {
            if self.rng.gen_bool(0.6) {
                let f = self.homogeneous(chart, parity.flip(), max_size, 2);
                if !f.is_zero() {
                    comps.insert(CoordId::Odd(a), f);
                }
            }
        }
        SuperVectorField::new(chart.clone(), parity, comps)
    }

    /// Random form on a purely even base chart, degrees 0..=max over mixed
    /// components.
    pub fn base_form(&mut self, base: &ChartRef, max_size: u32, terms: usize) -> Result<SuperForm> {
        let n = base.even_dim();
        let mut out = SuperForm::zero(base.clone());
        for _ in 0..terms {
            let mask = self.rng.gen_range(0..(1u32 << n));
            let dxs: Vec<u16> = (0..n as u16).filter(|i| mask & (1 << i) != 0).collect();
            let single = SuperForm::term(
                base.clone(),
                self.coeff_for(base, max_size, 2),
                FormKey { psis: Vec::new(), dxs, dpsis: Vec::new() },
            )?;
            out = out.add(&single);
        }
        Ok(out)
    }

    /// Standard form plus the differential of a random polynomial one-form
    /// with quadratic-and-higher coefficients: exactly closed, and the
    /// entries keep an invertible determinant.
    pub fn closed_symplectic(&mut self, m: usize) -> Result<EvenSymplectic> {
        let n = 2 * m;
        let base = SuperChart::base_affine(n);
        let mut omega = vec![vec![Coefficient::zero(n); n]; n];
        for i in 0..m {
            omega[i][m + i] = Coefficient::one(n);
            omega[m + i][i] = Coefficient::one(n).neg();
        }
        let beta: Vec<Coefficient> =
            (0..n).map(|_| self.poly_min_degree(n, 2, 3, 2)).collect();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                // (dβ)_{ab} = ∂_a β_b − ∂_b β_a
                let d_ab = beta[b].derivative(a).sub(&beta[a].derivative(b));
                omega[a][b] = omega[a][b].add(&d_ab);
            }
        }
        EvenSymplectic::new(base, omega)
    }

    /// Antisymmetric but non-closed perturbation of the standard form; the
    /// negative control for the square-zero property.
    pub fn nonclosed_antisymmetric(&mut self, m: usize) -> Result<EvenSymplectic> {
        assert!(m >= 2, "non-closed two-forms need dimension at least four");
        let n = 2 * m;
        let base = SuperChart::base_affine(n);
        let mut omega = vec![vec![Coefficient::zero(n); n]; n];
        for i in 0..m {
            omega[i][m + i] = Coefficient::one(n);
            omega[m + i][i] = Coefficient::one(n).neg();
        }
        // an x-dependent entry whose cyclic derivative cannot cancel
        let c = Coefficient::coordinate(n, n - 1).scale(&self.scalar_nonzero());
        omega[0][1] = omega[0][1].add(&c);
        omega[1][0] = omega[1][0].sub(&c);
        EvenSymplectic::new_unchecked_closedness(base, omega)
    }

    pub fn pick(&mut self, upper: usize) -> usize {
        self.rng.gen_range(0..upper)
    }

    pub fn bool(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::cotangent_chart;

    #[test]
    fn sampling_is_deterministic() {
        let chart = cotangent_chart(&SuperChart::base_affine(2)).unwrap();
        let mut a = Sampler::new(7);
        let mut b = Sampler::new(7);
        for _ in 0..5 {
            assert_eq!(a.superfunction(&chart, 3, 3), b.superfunction(&chart, 3, 3));
        }
        let mut c = Sampler::split(7, 1);
        let first = c.superfunction(&chart, 3, 3);
        let mut d = Sampler::split(7, 1);
        assert_eq!(first, d.superfunction(&chart, 3, 3));
    }

    #[test]
    fn closed_samples_are_closed_and_units_are_units() {
        let mut s = Sampler::new(11);
        for _ in 0..3 {
            let w = s.closed_symplectic(2).unwrap();
            assert!(w.is_closed());
            let alpha = s.unit_poly(2, 3, 3);
            assert!(alpha.is_unit());
        }
        let bad = s.nonclosed_antisymmetric(2).unwrap();
        assert!(!bad.is_closed());
    }

    #[test]
    fn homogeneous_parts_have_requested_parity() {
        let chart = cotangent_chart(&SuperChart::base_torus(2)).unwrap();
        let mut s = Sampler::new(3);
        for _ in 0..5 {
            let f = s.homogeneous(&chart, Parity::Odd, 1, 3);
            if !f.is_zero() {
                assert_eq!(f.parity(), crate::grassmann::ParityCheck::Odd);
            }
            let v = s.vector_field(&chart, Parity::Even, 1).unwrap();
            let _ = v;
        }
    }
}
