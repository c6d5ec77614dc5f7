//! Seeded verification suites behind the batch front-end: each suite sweeps
//! an exact identity over generated inputs and reports every violation with
//! a serialized counterexample. Identical (seed, sizes) give identical
//! reports.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bv::{
    berezin_integral, bv_delta, bv_delta_flipped, divergence, f_map, schwarz_integral,
    volume_from_top_form,
};
use crate::cartan::{
    canonical_odd_symplectic, contact_form, exterior_d, exterior_d_function, liouville_form,
    normal_exp_defect, normal_exp_potential, SuperForm,
};
use crate::chart::{contact_chart, cotangent_chart, ConormalSpec, SuperChart};
use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::gen::Sampler;
use crate::grassmann::{Parity, Superfunction};
use crate::moduli::{real_slice_linearization, slice_chart};
use crate::scalar::Scalar;
use crate::symplectic::fiber_derham_field;

pub const SUITE_NAMES: &[&str] = &[
    "liouville-restriction",
    "delta-squared",
    "f-chain",
    "q-nilpotent",
    "exp-identity",
    "schwarz",
    "graph-closedness",
    "slice-linearization",
    "div-parts",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub cutoff: i32,
    pub cases: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, n: 3, m: 2, cutoff: 1, cases: 100 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Failure {
    pub case: usize,
    pub description: String,
    pub witness: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub identity: String,
    pub seed: u64,
    pub cases: usize,
    pub failures: Vec<Failure>,
}

impl VerificationReport {
    fn new(suite: &str, identity: &str, seed: u64) -> Self {
        VerificationReport {
            suite: suite.into(),
            identity: identity.into(),
            seed,
            cases: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, description: &str, witness: serde_json::Value) {
        self.cases += 1;
        if !ok {
            self.failures.push(Failure {
                case: self.cases - 1,
                description: description.into(),
                witness,
            });
        }
    }
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<VerificationReport> {
    match name {
        "liouville-restriction" => liouville_restriction(cfg),
        "delta-squared" => delta_squared(cfg),
        "f-chain" => f_chain(cfg),
        "q-nilpotent" => q_nilpotent(cfg),
        "exp-identity" => exp_identity(cfg),
        "schwarz" => schwarz(cfg),
        "graph-closedness" => graph_closedness(cfg),
        "slice-linearization" => slice_linearization(cfg),
        "div-parts" => div_parts(cfg),
        other => Err(Error::UnknownSuite(other.into(), SUITE_NAMES.join(", "))),
    }
}

fn function_witness(label: &str, f: &Superfunction) -> serde_json::Value {
    json!({ label: serde_json::to_value(f.to_dto()).unwrap_or(serde_json::Value::Null) })
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..(1u32 << n)).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

fn liouville_restriction(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "liouville-restriction",
        "the canonical one-form, its differential and the contact form restrict to zero on every coordinate conormal",
        cfg.seed,
    );
    for n in 1..=cfg.n.min(3) {
        for torus in [false, true] {
            let base = if torus { SuperChart::base_torus(n) } else { SuperChart::base_affine(n) };
            let cy = cotangent_chart(&base)?;
            let hat = contact_chart(&cy)?;
            let theta = liouville_form(&cy)?;
            let eta = canonical_odd_symplectic(&cy)?;
            let tf = contact_form(&hat)?;
            for normal in subsets(n) {
                let c = ConormalSpec::new(cy.clone(), &normal)?;
                let witness = json!({"n": n, "torus": torus, "normal": normal});
                report.check(theta.restrict(&c)?.is_zero(), "canonical one-form restriction", witness.clone());
                report.check(eta.restrict(&c)?.is_zero(), "odd symplectic restriction", witness.clone());
                let chat = ConormalSpec::new(hat.clone(), &normal)?;
                report.check(tf.restrict(&chat)?.is_zero(), "contact form restriction", witness);
            }
        }
    }
    Ok(report)
}

fn delta_squared(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "delta-squared",
        "the Batalin-Vilkovisky operator of a squared unit density squares to zero",
        cfg.seed,
    );
    let mut sampler = Sampler::new(cfg.seed);
    for n in 1..=cfg.n.min(3) {
        let cy = cotangent_chart(&SuperChart::base_affine(n))?;
        let eta = canonical_odd_symplectic(&cy)?;
        for _ in 0..cfg.cases {
            let alpha = sampler.unit_poly(n, 3, 2);
            let mu = volume_from_top_form(&alpha, &cy)?;
            let f = sampler.superfunction(&cy, 3, 3);
            let twice = bv_delta(&bv_delta(&f, &mu, &eta)?, &mu, &eta)?;
            report.check(twice.is_zero(), "Δ² f = 0", function_witness("f", &f));
        }
    }
    Ok(report)
}

fn f_chain(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "f-chain",
        "the form-to-superfunction correspondence intertwines the exterior derivative with the BV operator",
        cfg.seed,
    );
    let mut sampler = Sampler::new(cfg.seed);

    // pinned case: w = x¹ on the line, F(dx¹) = 1 = ΔF(x¹)
    let base1 = SuperChart::base_affine(1);
    let cy1 = cotangent_chart(&base1)?;
    let w = SuperForm::from_superfunction(&Superfunction::even_coordinate(base1.clone(), 0)?);
    let one = Coefficient::one(1);
    let lhs = f_map(&exterior_d(&w), &one, &cy1)?;
    report.check(
        lhs == Superfunction::one(cy1.clone()),
        "pinned case: the line coordinate",
        json!({"case": "pinned"}),
    );
    report.check(
        crate::bv::chain_check(&w, &one, &cy1)?,
        "pinned chain case",
        json!({"case": "pinned"}),
    );

    let mut flipped_detected = false;
    for n in 1..=cfg.n.min(3) {
        let base = SuperChart::base_affine(n);
        let cy = cotangent_chart(&base)?;
        let eta = canonical_odd_symplectic(&cy)?;
        for _ in 0..cfg.cases {
            let alpha = sampler.unit_poly(n, 3, 2);
            let w = sampler.base_form(&base, 3, 3)?;
            let ok = crate::bv::chain_check(&w, &alpha, &cy)?;
            report.check(ok, "F(dw) = ΔF(w)", function_witness("F(w)", &f_map(&w, &alpha, &cy)?));
            // negative control: the flipped Hamiltonian convention must fail
            let mu = volume_from_top_form(&alpha, &cy)?;
            let lhs = f_map(&exterior_d(&w), &alpha, &cy)?;
            let rhs = bv_delta_flipped(&f_map(&w, &alpha, &cy)?, &mu, &eta)?;
            if lhs != rhs {
                flipped_detected = true;
            }
        }
    }
    report.check(
        flipped_detected,
        "negative control: flipping the Hamiltonian sign breaks the chain",
        json!({"case": "negative-control"}),
    );
    Ok(report)
}

fn q_nilpotent(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "q-nilpotent",
        "the lifted field of a closed even symplectic form squares to zero and annihilates its bivector",
        cfg.seed,
    );
    let mut sampler = Sampler::new(cfg.seed);
    for m in 1..=cfg.m.min(2) {
        // the standard form, then closed random perturbations
        for case in 0..cfg.cases.max(1) {
            let w = if case == 0 {
                crate::symplectic::EvenSymplectic::darboux(m, crate::chart::Topology::Affine)?
            } else {
                sampler.closed_symplectic(m)?
            };
            let witness = json!({"m": m, "case": case});
            match w.derham_lift_field() {
                Ok(q) => {
                    let f = sampler.superfunction(&w.phase, 2, 2);
                    let qq = q.apply(&q.apply(&f)?)?;
                    report.check(qq.is_zero(), "Q²f = 0", function_witness("f", &f));
                    let qw = q.apply(&w.bivector_superfunction())?;
                    report.check(qw.is_zero(), "Q(bivector) = 0", witness);
                }
                Err(e) => {
                    report.check(false, &format!("lifted field construction failed: {e}"), witness);
                }
            }
        }
    }
    // negative control: a non-closed antisymmetric form must be detected
    let bad = sampler.nonclosed_antisymmetric(2)?;
    report.check(
        bad.derham_lift_field().is_err(),
        "negative control: non-closed forms fail the square-zero verification",
        json!({"case": "negative-control"}),
    );
    Ok(report)
}

fn exp_identity(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "exp-identity",
        "the split-coordinate defect of the normal exponential is the differential of the pairing potential",
        cfg.seed,
    );
    for n in 1..=cfg.n.min(4) {
        let cy = cotangent_chart(&SuperChart::base_affine(n))?;
        for normal in subsets(n) {
            let c = ConormalSpec::new(cy.clone(), &normal)?;
            let defect = normal_exp_defect(&c)?;
            let expected = exterior_d_function(&normal_exp_potential(&c)?);
            let witness = json!({"n": n, "normal": normal});
            report.check(defect == expected, "defect equals d(potential)", witness.clone());
            report.check(exterior_d(&defect).is_zero(), "defect is closed", witness);
        }
    }
    Ok(report)
}

fn schwarz(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "schwarz",
        "the conormal Berezin integral of an F-image equals the base integral of the form",
        cfg.seed,
    );
    let mut sampler = Sampler::new(cfg.seed);
    for n in 2..=cfg.n.min(3).max(2) {
        let base = SuperChart::base_torus(n);
        let cy = cotangent_chart(&base)?;
        let one = Coefficient::one(n);
        for normal in subsets(n) {
            let c = ConormalSpec::new(cy.clone(), &normal)?;
            // random Fourier forms
            for _ in 0..cfg.cases.min(20).max(3) {
                let w = sampler.base_form(&base, 1, 3)?;
                let (lhs, rhs) = schwarz_integral(&w, &c, &one)?;
                report.check(
                    lhs == rhs,
                    "conormal integral equals base integral",
                    json!({"n": n, "normal": c.normal}),
                );
            }
            // exact forms with periodic primitive: both sides vanish
            let s = sampler.base_form(&base, 1, 2)?;
            let dw = exterior_d(&s);
            let (lhs, rhs) = schwarz_integral(&dw, &c, &one)?;
            report.check(
                lhs == rhs && lhs.is_zero(),
                "exact forms have vanishing conormal periods",
                json!({"n": n, "normal": c.normal}),
            );
        }
    }
    Ok(report)
}

fn graph_closedness(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "graph-closedness",
        "graph pullbacks of the bivector restriction are closed under the fiber field",
        cfg.seed,
    );
    let mut sampler = Sampler::new(cfg.seed);
    for m in 1..=cfg.m.min(2) {
        let w = crate::symplectic::EvenSymplectic::darboux(m, crate::chart::Topology::Affine)?;
        let c = w.standard_lagrangian_conormal()?;
        let sub = c.sub_chart();
        let q0 = fiber_derham_field(&sub)?;
        for _ in 0..cfg.cases {
            let f = sampler.homogeneous(&sub, Parity::Odd, 2, 3);
            let pulled = w.graph_restricted_bivector(&f)?;
            report.check(
                q0.apply(&pulled)?.is_zero(),
                "pullback is fiber-closed",
                function_witness("f", &f),
            );
        }
    }
    Ok(report)
}

fn slice_linearization(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "slice-linearization",
        "the first-order Berezinian slope of the deformed density equals the BV operator",
        cfg.seed,
    );
    let mut sampler = Sampler::new(cfg.seed);
    for m in 1..=cfg.m.min(2) {
        let chart = slice_chart(m);
        for _ in 0..cfg.cases {
            let psi = sampler.homogeneous(&chart, Parity::Odd, 2, 3);
            let mut rho = sampler.unit_poly(m, 2, 2);
            if sampler.bool(0.5) {
                let imag = sampler
                    .poly_coeff(m, 2, 2)
                    .scale(&Scalar::from_gauss(crate::scalar::GaussRat::i()));
                rho = rho.add(&imag);
            }
            let (lhs, rhs) = real_slice_linearization(&psi, &rho, m)?;
            report.check(lhs == rhs, "lhs = ΔΨ", function_witness("psi", &psi));
        }
    }
    Ok(report)
}

fn div_parts(cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "div-parts",
        "the divergence satisfies integration by parts against the Berezin integral",
        cfg.seed,
    );
    let mut sampler = Sampler::new(cfg.seed);
    for n in 1..=cfg.n.min(3) {
        let cy = cotangent_chart(&SuperChart::base_torus(n))?;
        for case in 0..cfg.cases {
            let alpha = if case % 2 == 0 {
                Coefficient::constant(n, sampler.scalar_nonzero())
            } else {
                // a unit Fourier mode
                let freqs: Vec<i32> = (0..n).map(|_| (sampler.pick(3) as i32) - 1).collect();
                Coefficient::mode(n, &freqs).scale(&sampler.scalar_nonzero())
            };
            let mu = volume_from_top_form(&alpha, &cy)?;
            let parity = if sampler.bool(0.5) { Parity::Even } else { Parity::Odd };
            let v = sampler.vector_field(&cy, parity, 1)?;
            let g = sampler.superfunction(&cy, 1, 3);
            let lhs = berezin_integral(&divergence(&v, &mu)?.mul(&g)?, &mu)?;
            let rhs = berezin_integral(&v.apply(&g)?, &mu)?.neg();
            report.check(lhs == rhs, "∫(div V) g μ = −∫ V(g) μ", function_witness("g", &g));
        }
    }
    Ok(report)
}

/// Deterministic hodge report with the bridge summary, shared by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HodgeSummary {
    pub m: usize,
    #[serde(rename = "K")]
    pub cutoff: i32,
    pub betti: Vec<usize>,
    pub total: usize,
    pub kernel_d_stard: usize,
    pub harmonic_is_constants: bool,
    pub bridge_constant: String,
    pub bridge_max_dev: String,
}

pub fn hodge_summary(m: usize, cutoff: i32) -> Result<HodgeSummary> {
    let complex = crate::hodge::FourierComplex::new(m, cutoff)?;
    let harmonic = complex.betti()?;
    let kernel = complex.closed_coclosed_kernel_dim();
    let ambient = cotangent_chart(&SuperChart::base_torus(2 * m))?;
    let conormal = ConormalSpec::new(ambient, &(m..2 * m).collect::<Vec<_>>())?;
    let bridge = complex.bv_bridge(&conormal)?;
    Ok(HodgeSummary {
        m,
        cutoff,
        betti: harmonic.betti,
        total: harmonic.total,
        kernel_d_stard: kernel,
        harmonic_is_constants: harmonic.harmonic_is_constants,
        bridge_constant: bridge.constant,
        bridge_max_dev: if bridge.max_deviation_zero { "0".into() } else { "nonzero".into() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_with_small_sizes() {
        let cfg = SuiteConfig { seed: 7, n: 2, m: 1, cutoff: 1, cases: 4 };
        for name in SUITE_NAMES {
            let report = run_suite(name, &cfg).unwrap();
            assert!(
                report.passed(),
                "suite {name} failed: {:?}",
                report.failures.first()
            );
            assert!(report.cases > 0);
        }
    }

    #[test]
    fn unknown_suite_lists_names() {
        let err = run_suite("nope", &SuiteConfig::default()).unwrap_err();
        match err {
            Error::UnknownSuite(name, list) => {
                assert_eq!(name, "nope");
                assert!(list.contains("f-chain"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = SuiteConfig { seed: 42, n: 2, m: 1, cutoff: 1, cases: 3 };
        let a = run_suite("delta-squared", &cfg).unwrap();
        let b = run_suite("delta-squared", &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn witnesses_round_trip() {
        let chart = cotangent_chart(&SuperChart::base_affine(2)).unwrap();
        let mut s = Sampler::new(5);
        let f = s.superfunction(&chart, 2, 3);
        let witness = function_witness("f", &f);
        let dto: crate::grassmann::SuperfunctionDto =
            serde_json::from_value(witness["f"].clone()).unwrap();
        let back = Superfunction::from_dto(&dto, chart).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn hodge_summary_shape() {
        let s = hodge_summary(2, 1).unwrap();
        assert_eq!(s.betti, vec![1, 2, 1]);
        assert_eq!(s.total, 4);
        assert_eq!(s.kernel_d_stard, 4);
        assert_eq!(s.bridge_constant, "1/2");
        assert_eq!(s.bridge_max_dev, "0");
        assert!(s.harmonic_is_constants);
    }
}
