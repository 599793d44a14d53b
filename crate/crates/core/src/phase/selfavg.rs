use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models;
use crate::rng::{self, Stream};
use crate::state::{self, PartitionSpec, ProductMode};
use crate::tripartite::Tripartite;

/// Relative quenched/annealed gaps of one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiRecord {
    #[serde(rename = "N")]
    pub n: u32,
    /// Gap for `Tr ρ̃_R(o)²`.
    pub chi1: f64,
    /// Gap for `p(o)²`.
    pub chi2: f64,
    /// Outcomes dropped because some realization gave them zero weight.
    pub excluded: usize,
    /// Annealed `E Tr ρ̃_R(o)²` averaged over outcomes, with its standard error.
    pub cond_weight_sq: f64,
    pub cond_weight_sq_se: f64,
    pub prob_sq: f64,
    pub prob_sq_se: f64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// `χ = 2^{-pN} Σ_o |(ln E[x_o] - E[ln x_o]) / E[ln x_o]|` for
/// `x = Tr ρ̃_R(o)²` and `x = p(o)²` over global-Haar realizations.
pub fn self_averaging_chi(n_list: &[u32], realizations: u64, p: f64, gamma: f64, seed: u64) -> Result<Vec<ChiRecord>> {
    if realizations < 2 {
        return Err(Error::Parameter("self-averaging needs at least 2 realizations".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let params = crate::theory::TheoryParams::new(n, gamma, p)?;
            let (lr, ls, _) = params.log2_dims();
            let (n_r, n_s) = (lr.round() as usize, ls.round() as usize);
            let part = PartitionSpec::contiguous(n as usize, n_s, 0, (0..n_r).collect())?;
            let per_real: Vec<Vec<(f64, f64)>> = (0..realizations)
                .into_par_iter()
                .map(|r| {
                    let s = rng::realization_seed(seed, r);
                    let mut psi = state::prepare_initial_state(&part, ProductMode::Zero, s)?;
                    let u = models::sample_haar_unitary(1 << n, &mut rng::stream_rng(s, Stream::Circuit))?;
                    psi.apply_global_unitary(u.as_ref())?;
                    Ok(Tripartite::new(&psi, &part)?.outcome_weights())
                })
                .collect::<Result<_>>()?;
            let d_s = 1usize << n_s;
            let (mut chi1, mut chi2, mut kept, mut excluded) = (0.0, 0.0, 0usize, 0usize);
            for o in 0..d_s {
                let x1: Vec<f64> = per_real.iter().map(|w| w[o].1).collect();
                let x2: Vec<f64> = per_real.iter().map(|w| w[o].0 * w[o].0).collect();
                if x1.iter().chain(&x2).any(|&x| x <= 0.0) {
                    excluded += 1;
                    continue;
                }
                let gap = |xs: &[f64]| {
                    let annealed = (xs.iter().sum::<f64>() / xs.len() as f64).ln();
                    let quenched = xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64;
                    ((annealed - quenched) / quenched).abs()
                };
                chi1 += gap(&x1);
                chi2 += gap(&x2);
                kept += 1;
            }
            if kept == 0 {
                return Err(Error::Domain(format!("every outcome excluded at N = {n}")));
            }
            let avg1: Vec<f64> = per_real.iter().map(|w| w.iter().map(|x| x.1).sum::<f64>() / d_s as f64).collect();
            let avg2: Vec<f64> = per_real.iter().map(|w| w.iter().map(|x| x.0 * x.0).sum::<f64>() / d_s as f64).collect();
            let (cw, cw_se) = mean_se(&avg1);
            let (pq, pq_se) = mean_se(&avg2);
            Ok(ChiRecord {
                n,
                chi1: chi1 / kept as f64,
                chi2: chi2 / kept as f64,
                excluded,
                cond_weight_sq: cw,
                cond_weight_sq_se: cw_se,
                prob_sq: pq,
                prob_sq_se: pq_se,
            })
        })
        .collect()
}
