use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{self, ProjectedEnsemble};
use crate::measures;
use crate::error::{Error, Result};
use crate::models;
use crate::rng::{self, Stream};
use crate::state::{self, PartitionSpec, ProductMode};
use crate::tripartite::Tripartite;

/// Quantities of one global-Haar realization. Outcome-dependent entries are
/// averaged over all outcomes, each of which has the same Haar average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarSample {
    pub purity_s: f64,
    pub purity_rs: f64,
    /// Mean of `p(o)²` over outcomes.
    pub prob_sq: f64,
    /// Mean of `Tr ρ̃_R(o)²` over outcomes.
    pub cond_weight_sq: f64,
    /// `||ρ_RS - I/d||_1`.
    pub distance_mixed: f64,
    pub mutual_info: f64,
    pub d_rs: f64,
    /// `S_0 ≥ S_vN ≥ S_2` held for `ρ_R`, `ρ_S`, `ρ_RS` and every conditional.
    pub sandwich_ok: bool,
    /// `2 Δ(o)² ≤ S_rel(o)` held for every outcome.
    pub pinsker_ok: bool,
}

const AUDIT_TOL: f64 = 1e-9;

/// Renyi ordering on the marginals of `t` and on every conditional of `ens`.
pub fn sandwich_audit(t: &Tripartite, ens: &ProjectedEnsemble) -> bool {
    let marginals = [t.spectrum_r(), t.spectrum_s(), t.spectrum_rs()];
    marginals.iter().all(|s| measures::renyi_sandwich_holds(s, AUDIT_TOL))
        && ens
            .entries()
            .iter()
            .filter_map(|e| e.conditional.as_ref())
            .all(|c| measures::renyi_sandwich_holds(&c.spectrum(), AUDIT_TOL))
}

/// Prepares `n_r` Bell pairs into `Q` (`|Q| = n`), applies one Haar unitary
/// on `Q` and measures the first `n_s` qubits of `Q`.
pub fn haar_samples(n: usize, n_r: usize, n_s: usize, realizations: u64, seed: u64) -> Result<Vec<HaarSample>> {
    if realizations == 0 {
        return Err(Error::Parameter("Monte-Carlo budget must be at least 1".into()));
    }
    if n_r == 0 || n_r > n || n_s > n {
        return Err(Error::Parameter(format!("invalid sizes N = {n}, n_R = {n_r}, |S| = {n_s}")));
    }
    ensemble::check_cap(n_s, ensemble::DEFAULT_OUTCOME_CAP)?;
    let part = PartitionSpec::contiguous(n, n_s, 0, (0..n_r).collect())?;
    (0..realizations)
        .into_par_iter()
        .map(|r| {
            let s = rng::realization_seed(seed, r);
            let mut psi = state::prepare_initial_state(&part, ProductMode::Zero, s)?;
            let u = models::sample_haar_unitary(1 << n, &mut rng::stream_rng(s, Stream::Circuit))?;
            psi.apply_global_unitary(u.as_ref())?;
            let t = Tripartite::new(&psi, &part)?;
            let weights = t.outcome_weights();
            let d_s = weights.len() as f64;
            let ens = t.ensemble()?;
            Ok(HaarSample {
                purity_s: t.purity_s(),
                purity_rs: t.purity_rs(),
                prob_sq: weights.iter().map(|w| w.0 * w.0).sum::<f64>() / d_s,
                cond_weight_sq: weights.iter().map(|w| w.1).sum::<f64>() / d_s,
                distance_mixed: t.distance_to_maximally_mixed(),
                mutual_info: t.mutual_information(),
                d_rs: ensemble::ensemble_d_rs(&ens),
                sandwich_ok: sandwich_audit(&t, &ens),
                pinsker_ok: ensemble::pinsker_holds(&ens, AUDIT_TOL),
            })
        })
        .collect()
}
