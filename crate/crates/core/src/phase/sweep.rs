use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Quantity, SweepConfig};
use crate::ensemble;
use crate::error::{Error, Result};
use crate::models::{self, FloquetOperator, ModelKind};
use crate::rng::{self, Stream};
use crate::state::{self, PartitionSpec};
use crate::tripartite::Tripartite;

/// One measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub tau: f64,
    pub realization: u64,
    pub quantity: Quantity,
    pub value: f64,
}

impl Record {
    fn sort_key(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then(self.p.total_cmp(&other.p))
            .then(self.tau.total_cmp(&other.tau))
            .then(self.realization.cmp(&other.realization))
            .then(self.quantity.cmp(&other.quantity))
    }
}

/// Mean and standard error (`sample stddev / √count`) of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub tau: f64,
    pub quantity: Quantity,
    pub count: u64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Sorted by `(N, p, τ, realization, quantity)`.
    pub records: Vec<Record>,
    pub cells: Vec<CellStat>,
}

/// Groups records by `(N, p, τ, quantity)`.
pub fn cell_statistics(records: &[Record]) -> Vec<CellStat> {
    let mut groups: BTreeMap<(u32, u64, u64, Quantity), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.p.to_bits(), r.tau.to_bits(), r.quantity)).or_default().push(r.value);
    }
    let mut cells: Vec<CellStat> = groups
        .into_iter()
        .map(|((n, p, tau, quantity), vals)| {
            let count = vals.len() as u64;
            let mean = vals.iter().sum::<f64>() / count as f64;
            let se = if count > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                (var / count as f64).sqrt()
            } else {
                0.0
            };
            CellStat { n, p: f64::from_bits(p), tau: f64::from_bits(tau), quantity, count, mean, se }
        })
        .collect();
    cells.sort_by(|a, b| {
        a.n.cmp(&b.n).then(a.p.total_cmp(&b.p)).then(a.tau.total_cmp(&b.tau)).then(a.quantity.cmp(&b.quantity))
    });
    cells
}

/// Combines runs at `n_R = ⌊γN⌋` and `⌈γN⌉` with weights `η_< = 1 - η_>`,
/// `η_> = γN - ⌊γN⌋`, so the weighted total size is `N + γN`.
pub fn weighted_size_average(floor: &[Record], ceil: &[Record], gamma: f64) -> Result<Vec<Record>> {
    if floor.len() != ceil.len() {
        return Err(Error::Shape(format!("{} records against {}", floor.len(), ceil.len())));
    }
    let mut a = floor.to_vec();
    let mut b = ceil.to_vec();
    a.sort_by(Record::sort_key);
    b.sort_by(Record::sort_key);
    a.iter()
        .zip(&b)
        .map(|(lo, hi)| {
            if lo.sort_key(hi) != Ordering::Equal {
                return Err(Error::Shape(format!("grids differ at N={} p={} tau={}", lo.n, lo.p, lo.tau)));
            }
            let g = gamma * lo.n as f64;
            let eta_hi = g - g.floor();
            let value = if eta_hi == 0.0 { lo.value } else { eta_hi * hi.value + (1.0 - eta_hi) * lo.value };
            Ok(Record { value, ..*lo })
        })
        .collect()
}

const BYTES_PER_AMP: u64 = 16;

/// Rough peak memory of one size, in bytes, for `threads` concurrent tasks.
fn estimated_bytes(config: &SweepConfig, n: u32, n_r: u32, threads: u64) -> Result<u64> {
    let total = n + n_r;
    if total > 40 {
        return Err(Error::Resource(format!("N + n_R = {total} qubits is beyond a dense state vector")));
    }
    let state = BYTES_PER_AMP << total;
    let model = match config.model {
        ModelKind::Fruc => 0,
        ModelKind::GlobalHaar => 3 * (BYTES_PER_AMP << (2 * n)),
        ModelKind::Fmfic => 4 * (BYTES_PER_AMP << (2 * n)),
    };
    let mut per_task = 4 * state;
    for k in config.p_grid.resolve(n)? {
        let (d_r, d_s, d_e) = (1u64 << n_r, 1u64 << k, 1u64 << (n - k));
        let neg = (d_r * d_s).min(d_r * d_r * d_e);
        let gram = (d_r * d_s).min(d_e);
        per_task = per_task.max(4 * state + 3 * BYTES_PER_AMP * (neg * neg + gram * gram));
    }
    let shared_model = if config.model == ModelKind::Fmfic { model } else { model * threads };
    Ok(shared_model + per_task * threads)
}

/// Fails with a resource error before any allocation when a size would not
/// fit `memory_limit_mb` or an ensemble would exceed `outcome_cap`.
pub fn check_resources(config: &SweepConfig) -> Result<()> {
    config.validate()?;
    let threads = rayon::current_num_threads() as u64;
    let limit = config.memory_limit_mb.saturating_mul(1 << 20);
    let needs_ensemble = config.quantities.iter().any(|q| matches!(q, Quantity::DRs | Quantity::DeltaRs));
    for &n in &config.n_list {
        for (n_r, _) in config.r_sizes(n) {
            let bytes = estimated_bytes(config, n, n_r, threads)?;
            if bytes > limit {
                return Err(Error::Resource(format!(
                    "N = {n}, n_R = {n_r} needs about {} MiB, above the {} MiB limit",
                    bytes >> 20,
                    config.memory_limit_mb
                )));
            }
        }
        if needs_ensemble {
            let max_s = *config.p_grid.resolve(n)?.last().expect("nonempty grid") as usize;
            ensemble::check_cap(max_s, config.outcome_cap)?;
        }
    }
    Ok(())
}

fn measure(t: &Tripartite, quantities: &[Quantity]) -> Result<Vec<f64>> {
    let ens = if quantities.iter().any(|q| matches!(q, Quantity::DRs | Quantity::DeltaRs)) {
        Some(t.ensemble()?)
    } else {
        None
    };
    Ok(quantities
        .iter()
        .map(|q| match q {
            Quantity::Negativity => t.log_negativity(),
            Quantity::DRs => ensemble::ensemble_d_rs(ens.as_ref().expect("ensemble built")),
            Quantity::DeltaRs => ensemble::ensemble_delta_rs(ens.as_ref().expect("ensemble built")),
            Quantity::MutualInfo => t.mutual_information(),
            Quantity::PurityS => t.purity_s(),
            Quantity::PurityRs => t.purity_rs(),
        })
        .collect())
}

struct Task {
    n: u32,
    n_r: u32,
    variant: usize,
    realization: u64,
}

fn run_task(config: &SweepConfig, task: &Task, shared: Option<&Arc<FloquetOperator>>) -> Result<Vec<Record>> {
    let (n, n_r) = (task.n as usize, task.n_r as usize);
    let seed = rng::realization_seed(config.seed, task.realization);
    let pairing_seed = if config.resample_pairing { seed } else { config.seed };
    let pairing = state::random_pairing(n, n_r, &mut rng::stream_rng(pairing_seed, Stream::Pairing));
    let base = PartitionSpec::contiguous(n, 0, config.s_offset, pairing.clone())?;
    let mut psi = state::prepare_initial_state(&base, config.product_mode(), seed)?;
    let owned;
    let op = match shared {
        Some(op) => op.as_ref(),
        None => {
            owned = models::build_model(config.model, n, &config.fmfic, seed)?;
            &owned
        }
    };
    let p_counts = config.p_grid.resolve(task.n)?;
    let t_steps = config.tau_grid.resolve(task.n)?;
    let mut out = Vec::with_capacity(p_counts.len() * t_steps.len() * config.quantities.len());
    let mut done = 0usize;
    for &t in &t_steps {
        let t = t as usize;
        if op.kind() == ModelKind::GlobalHaar {
            if done == 0 && t >= 1 {
                models::evolve_in_place(&mut psi, op, 1)?;
                done = 1;
            }
        } else {
            models::evolve_in_place(&mut psi, op, t - done)?;
            done = t;
        }
        for &k in &p_counts {
            let part = PartitionSpec::contiguous(n, k as usize, config.s_offset, pairing.clone())?;
            let tri = Tripartite::new(&psi, &part)?;
            let values = measure(&tri, &config.quantities)?;
            for (q, v) in config.quantities.iter().zip(values) {
                out.push(Record {
                    n: task.n,
                    p: k as f64 / task.n as f64,
                    tau: t as f64 / task.n as f64,
                    realization: task.realization,
                    quantity: *q,
                    value: v,
                });
            }
        }
    }
    Ok(out)
}

/// Runs every `(N, realization)` task in parallel. Output is independent of
/// the thread count.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    check_resources(config)?;
    let mut records = Vec::new();
    for &n in &config.n_list {
        let sizes = config.r_sizes(n);
        let shared = if config.model == ModelKind::Fmfic {
            Some(Arc::new(models::build_fmfic_floquet(n as usize, &config.fmfic)?))
        } else {
            None
        };
        let tasks: Vec<Task> = sizes
            .iter()
            .enumerate()
            .flat_map(|(variant, &(n_r, _))| {
                (0..config.realizations()).map(move |realization| Task { n, n_r, variant, realization })
            })
            .collect();
        let results: Vec<Result<Vec<Record>>> =
            tasks.par_iter().map(|task| run_task(config, task, shared.as_ref())).collect();
        let mut per_variant = vec![Vec::new(); sizes.len()];
        for (task, res) in tasks.iter().zip(results) {
            per_variant[task.variant].extend(res?);
        }
        let combined = match per_variant.len() {
            1 => per_variant.pop().expect("one variant"),
            _ => weighted_size_average(&per_variant[0], &per_variant[1], config.gamma)?,
        };
        records.extend(combined);
    }
    records.sort_by(Record::sort_key);
    let cells = cell_statistics(&records);
    Ok(SweepResult { config: config.clone(), records, cells })
}
