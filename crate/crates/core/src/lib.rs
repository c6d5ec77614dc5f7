//! Exact computational kernel for Grassmann calculus on supermanifold charts,
//! the canonical odd-symplectic / contact / Batalin-Vilkovisky structures of
//! odd cotangent bundles, and truncated-Fourier Hodge theory on flat tori.
//!
//! Everything is exact: coefficients are quotients of polynomial/Fourier sums
//! over Gaussian rationals with a symbolic (2π) factor, all identities are
//! checked to literal zero, and every value is immutable after construction,
//! so the whole API is safe to share across threads.

pub mod error;
pub mod scalar;
pub mod coeff;
pub mod chart;
pub mod grassmann;
pub mod cartan;
pub mod bv;
pub mod symplectic;
pub mod hodge;
pub mod moduli;
pub mod gen;
pub mod suites;

pub use bv::{
    base_torus_integral, berezin_integral, bv_delta, chain_check, divergence, f_map,
    f_map_inverse, half_density, schwarz_integral, volume_from_top_form, BerezinVolume,
    HalfDensity,
};
pub use cartan::{
    canonical_odd_symplectic, contact_form, contract, exterior_d, exterior_d_function,
    hamiltonian_field, lie_derivative, liouville_form, normal_exp_defect, normal_exp_potential,
    FormKey, SuperForm, SuperVectorField,
};
pub use chart::{
    contact_chart, cotangent_chart, tangent_chart, ChartRef, ConormalSpec, CoordId, Provenance,
    SuperChart, Topology,
};
pub use coeff::Coefficient;
pub use error::{Error, Result};
pub use grassmann::{OddMonomial, Parity, ParityCheck, Superfunction};
pub use hodge::{BridgeReport, FourierComplex, HarmonicReport};
pub use moduli::{
    bundle_zariski_dims, contact_sections_dim, real_slice_linearization,
    sections_mod_constants_dim, torus_moduli, BundleSpec, ModuliReport,
};
pub use scalar::{GaussRat, Rational, Scalar};
pub use symplectic::{fiber_derham_field, EvenSymplectic};
