//! Entanglement and measurement visibility in scrambling dynamics.
//!
//! A reference register `R` is Bell-paired with a system `Q`; `Q` evolves
//! under a random circuit, a kicked Ising chain or a global Haar unitary, and
//! the crate measures how `R` correlates with a subsystem `S ⊂ Q`:
//! logarithmic negativity, mutual information and the projected-ensemble
//! visibility measures `D_RS` and `Δ_RS`. [`theory`] holds the exact Haar
//! averages and [`phase`] the `(p, τ)` sweeps built on top.

pub mod density;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod models;
pub mod phase;
pub mod rng;
pub mod state;
pub mod theory;
pub mod tripartite;

// Every listing in the guide runs as a doc-test.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/partitions.md")]
    mod partitions {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/phase.md")]
    mod phase {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
