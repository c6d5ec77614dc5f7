//! Acceptance suite: one test per criterion, every check exact (zero
//! tolerance). Each test prints a single PASS line; a failed assertion is
//! the FAIL line with the counterexample in the panic message.

use supercalc_core::chart::{contact_chart, cotangent_chart, ConormalSpec, SuperChart};
use supercalc_core::suites::{hodge_summary, run_suite, SuiteConfig};
use supercalc_core::{
    bundle_zariski_dims, canonical_odd_symplectic, contact_form, liouville_form, torus_moduli,
    BundleSpec, FourierComplex,
};

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..(1u32 << n)).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

fn run_passing(name: &str, cfg: &SuiteConfig) {
    let report = run_suite(name, cfg).expect("suite runs");
    assert!(
        report.passed(),
        "suite {name} reported {} failure(s); first: {:?}",
        report.failures.len(),
        report.failures.first()
    );
    assert!(report.cases > 0);
}

#[test]
fn criterion_01_liouville_restriction() {
    for n in 1..=3usize {
        for base in [SuperChart::base_affine(n), SuperChart::base_torus(n)] {
            let cy = cotangent_chart(&base).unwrap();
            let theta = liouville_form(&cy).unwrap();
            let eta = canonical_odd_symplectic(&cy).unwrap();
            for normal in subsets(n) {
                let c = ConormalSpec::new(cy.clone(), &normal).unwrap();
                assert!(theta.restrict(&c).unwrap().is_zero(), "theta at n={n}, S={normal:?}");
                assert!(eta.restrict(&c).unwrap().is_zero(), "eta at n={n}, S={normal:?}");
            }
        }
    }
    println!("criterion 01 (liouville restriction): PASS");
}

#[test]
fn criterion_02_contact_restriction() {
    for n in 1..=3usize {
        for base in [SuperChart::base_affine(n), SuperChart::base_torus(n)] {
            let cy = cotangent_chart(&base).unwrap();
            let hat = contact_chart(&cy).unwrap();
            let tf = contact_form(&hat).unwrap();
            for normal in subsets(n) {
                let c = ConormalSpec::new(hat.clone(), &normal).unwrap();
                assert!(tf.restrict(&c).unwrap().is_zero(), "contact at n={n}, S={normal:?}");
            }
        }
    }
    println!("criterion 02 (contact restriction): PASS");
}

#[test]
fn criterion_03_sp_condition_delta_squared() {
    // 200 seeded random functions per chart, n in {1,2,3}, density a squared
    // random unit polynomial
    let cfg = SuiteConfig { seed: 3, n: 3, m: 2, cutoff: 1, cases: 200 };
    run_passing("delta-squared", &cfg);
    println!("criterion 03 (SP condition, Δ² = 0): PASS");
}

#[test]
fn criterion_04_f_chain_with_negative_control() {
    // 200+ random polynomial forms over n ≤ 3 plus the pinned case; the
    // suite itself asserts that the flipped Hamiltonian sign breaks the chain
    let cfg = SuiteConfig { seed: 4, n: 3, m: 2, cutoff: 1, cases: 70 };
    run_passing("f-chain", &cfg);
    println!("criterion 04 (F-chain with sign control): PASS");
}

#[test]
fn criterion_05_q_identities() {
    // the standard form and 50 random closed perturbations across m ≤ 2;
    // the suite includes the non-closed negative control
    let cfg = SuiteConfig { seed: 5, n: 3, m: 2, cutoff: 1, cases: 26 };
    run_passing("q-nilpotent", &cfg);
    println!("criterion 05 (square-zero lifted field): PASS");
}

#[test]
fn criterion_06_normal_exponential_identity() {
    let cfg = SuiteConfig { seed: 6, n: 4, m: 2, cutoff: 1, cases: 1 };
    run_passing("exp-identity", &cfg);
    println!("criterion 06 (normal exponential defect): PASS");
}

#[test]
fn criterion_07_graph_closedness() {
    // 50 random odd generators per m in {1, 2}
    let cfg = SuiteConfig { seed: 7, n: 3, m: 2, cutoff: 1, cases: 50 };
    run_passing("graph-closedness", &cfg);
    println!("criterion 07 (graph pullback closedness): PASS");
}

#[test]
fn criterion_08_schwarz_integral() {
    let cfg = SuiteConfig { seed: 8, n: 3, m: 2, cutoff: 1, cases: 12 };
    run_passing("schwarz", &cfg);
    println!("criterion 08 (conormal/base integral identity): PASS");
}

#[test]
fn criterion_09_integration_by_parts() {
    // 100+ random cases on torus charts
    let cfg = SuiteConfig { seed: 9, n: 3, m: 2, cutoff: 1, cases: 34 };
    run_passing("div-parts", &cfg);
    println!("criterion 09 (divergence integration by parts): PASS");
}

#[test]
fn criterion_10_slice_linearization() {
    // 50 random (Ψ, ρ) across m in {1, 2}, polynomial identities
    let cfg = SuiteConfig { seed: 10, n: 3, m: 2, cutoff: 1, cases: 25 };
    run_passing("slice-linearization", &cfg);
    println!("criterion 10 (real-slice linearization): PASS");
}

#[test]
fn criterion_11_bv_hodge_bridge() {
    // full Fourier basis, m ≤ 2, K = 1: one uniform recorded constant and
    // zero deviation after rescaling
    for m in 1..=2usize {
        let complex = FourierComplex::new(m, 1).unwrap();
        let ambient = cotangent_chart(&SuperChart::base_torus(2 * m)).unwrap();
        let conormal = ConormalSpec::new(ambient, &(m..2 * m).collect::<Vec<_>>()).unwrap();
        let report = complex.bv_bridge(&conormal).unwrap();
        assert_eq!(report.cases, complex.len());
        assert_eq!(report.constant, "1/2", "recorded bridge constant at m={m}");
        assert!(report.max_deviation_zero);
    }
    println!("criterion 11 (BV vs 2*d* bridge, constant 1/2): PASS");
}

#[test]
fn criterion_12_torus_moduli_dimensions() {
    let expect = [(1usize, 1usize, 2usize), (2, 2, 4), (3, 3, 8)];
    for (m, mclean, extended) in expect {
        let report = torus_moduli(m).unwrap();
        assert_eq!(report.mclean, mclean, "classical dimension at m={m}");
        assert_eq!(report.extended, extended, "extended dimension at m={m}");
        // the report construction itself asserts the two computations agree;
        // cross-check against the complex here as well
        let complex = FourierComplex::new(m, 1).unwrap();
        assert_eq!(complex.closed_coclosed_kernel_dim(), extended);
        assert_eq!(complex.betti().unwrap().total, extended);
    }
    println!("criterion 12 (torus moduli (1,2),(2,4),(3,8)): PASS");
}

#[test]
fn criterion_13_projective_line_dimensions() {
    let spec = BundleSpec::new(vec![1, 1]).unwrap();
    assert_eq!(bundle_zariski_dims(&spec), (4, 3));
    println!("criterion 13 (projective line (4|3)): PASS");
}

#[test]
fn criterion_14_determinism() {
    let cfg = SuiteConfig { seed: 99, n: 2, m: 1, cutoff: 1, cases: 5 };
    for suite in ["delta-squared", "f-chain", "schwarz"] {
        let a = serde_json::to_string(&run_suite(suite, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_suite(suite, &cfg).unwrap()).unwrap();
        assert_eq!(a, b, "suite {suite} must be byte-stable");
    }
    let h1 = serde_json::to_string(&hodge_summary(2, 1).unwrap()).unwrap();
    let h2 = serde_json::to_string(&hodge_summary(2, 1).unwrap()).unwrap();
    assert_eq!(h1, h2);
    let m1 = serde_json::to_string(&torus_moduli(2).unwrap()).unwrap();
    let m2 = serde_json::to_string(&torus_moduli(2).unwrap()).unwrap();
    assert_eq!(m1, m2);
    println!("criterion 14 (byte-identical reports): PASS");
}
