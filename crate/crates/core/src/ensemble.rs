//! Projected ensembles of `R` conditioned on computational-basis outcomes
//! of `S`, and the visibility measures built on them.

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;

use crate::density::{DensityMatrix, EIG_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::measures;
use crate::state::{self, PartitionSpec, Projection};

/// Default cap on the number of enumerated outcomes.
pub const DEFAULT_OUTCOME_CAP: usize = 1 << 20;

/// One outcome of the `S` measurement.
#[derive(Debug, Clone)]
pub struct EnsembleEntry {
    /// Bit `j` is the outcome of `s_indices[j]`.
    pub outcome: u64,
    pub prob: f64,
    /// `None` for unreachable outcomes (`prob <= P_FLOOR`).
    pub conditional: Option<DensityMatrix>,
}

/// `{ rho_R(o_S), p(o_S) }` over every outcome, plus the mean state `rho_R`.
#[derive(Debug, Clone)]
pub struct ProjectedEnsemble {
    entries: Vec<EnsembleEntry>,
    reference: DensityMatrix,
    n_s: usize,
}

impl ProjectedEnsemble {
    pub(crate) fn from_projections(projections: Vec<Projection>, reference: DensityMatrix, n_s: usize) -> Self {
        let entries = projections
            .into_iter()
            .enumerate()
            .map(|(o, p)| EnsembleEntry { outcome: o as u64, prob: p.prob, conditional: p.conditional })
            .collect();
        Self { entries, reference, n_s }
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    /// `rho_R`, the first moment of the ensemble.
    pub fn reference(&self) -> &DensityMatrix {
        &self.reference
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.prob).sum()
    }

    /// `sum_o p(o) rho_R(o)`.
    pub fn first_moment(&self) -> DensityMatrix {
        let d = self.reference.dim();
        let mut acc = Mat::<c64>::zeros(d, d);
        for e in &self.entries {
            if let Some(c) = &e.conditional {
                acc += c.matrix() * faer::Scale(c64::new(e.prob, 0.0));
            }
        }
        DensityMatrix::from_parts_unchecked(acc, vec![d])
    }

    /// Per-outcome `(p, S_rel(rho_R(o) || rho_R), ||rho_R(o) - rho_R||_1 / 2)`
    /// for every reachable outcome, in outcome order.
    pub fn outcome_measures(&self) -> Vec<(f64, f64, f64)> {
        self.entries
            .par_iter()
            .filter_map(|e| {
                e.conditional.as_ref().map(|c| {
                    let srel = measures::relative_entropy(c, &self.reference).expect("matching dimensions");
                    let td = measures::trace_distance(c, &self.reference).expect("matching dimensions");
                    (e.prob, srel, td)
                })
            })
            .collect()
    }
}

/// Enumerates every outcome of `S` (at most `cap` of them).
pub fn build_projected_ensemble(rho_rs: &DensityMatrix, part: &PartitionSpec) -> Result<ProjectedEnsemble> {
    build_projected_ensemble_capped(rho_rs, part, DEFAULT_OUTCOME_CAP)
}

pub fn build_projected_ensemble_capped(
    rho_rs: &DensityMatrix,
    part: &PartitionSpec,
    cap: usize,
) -> Result<ProjectedEnsemble> {
    let n_s = part.n_s();
    check_cap(n_s, cap)?;
    let (d_r, d_s) = (1usize << part.n_r(), 1usize << n_s);
    let rho_rs = rho_rs.regroup(vec![d_r, d_s])?;
    let projections: Vec<Projection> = (0..d_s as u64)
        .into_par_iter()
        .map(|o| state::project_outcome(&rho_rs, part, o))
        .collect::<Result<_>>()?;
    let reference = rho_rs.partial_trace(&[0])?;
    Ok(ProjectedEnsemble::from_projections(projections, reference, n_s))
}

pub(crate) fn check_cap(n_s: usize, cap: usize) -> Result<()> {
    if n_s >= 63 || (1usize << n_s) > cap {
        return Err(Error::Resource(format!(
            "2^{n_s} outcomes exceed the enumeration cap of {cap}; sample outcomes instead"
        )));
    }
    Ok(())
}

/// `D_RS = sum_o p(o) S_rel(rho_R(o) || rho_R)`.
pub fn ensemble_d_rs(ens: &ProjectedEnsemble) -> f64 {
    ens.outcome_measures().iter().map(|(p, s, _)| p * s).sum()
}

/// `D_RS` through `S_rel(rho || I/d) = ln d - S_vN(rho)`; valid only when
/// the reference state is maximally mixed.
pub fn ensemble_d_rs_mixed_reference(ens: &ProjectedEnsemble) -> f64 {
    let ln_d = (ens.reference.dim() as f64).ln();
    let terms: Vec<f64> = ens
        .entries
        .par_iter()
        .filter_map(|e| e.conditional.as_ref().map(|c| e.prob * (ln_d - measures::von_neumann_entropy(c))))
        .collect();
    terms.iter().sum()
}

/// `Delta_RS = sum_o p(o) ||rho_R(o) - rho_R||_1 / 2`.
pub fn ensemble_delta_rs(ens: &ProjectedEnsemble) -> f64 {
    ens.outcome_measures().iter().map(|(p, _, t)| p * t).sum()
}

/// Groups eigenpairs of a Hermitian matrix into spectral projectors, one per
/// distinct eigenvalue (tolerance 1e-9).
fn spectral_projectors(h: MatRef<'_, c64>) -> Vec<CMat> {
    let (vals, vecs) = linalg::hermitian_eigen(h);
    let n = h.nrows();
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some((g, members)) if (v - *g).abs() <= 1e-9 => members.push(k),
            _ => groups.push((v, vec![k])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            Mat::from_fn(n, n, |i, j| {
                members
                    .iter()
                    .map(|&k| vecs[(i, k)] * vecs[(j, k)].conj())
                    .fold(linalg::ZERO, |a, b| a + b)
            })
        })
        .collect()
}

/// Largest `|P(a_R, a_S) - P(a_R) P(a_S)|` over eigenvalue pairs of
/// `obs_r` and of the product observable `obs_s[0] ⊗ obs_s[1] ⊗ …` on `S`.
///
/// `obs_s[j]` is a 2x2 Hermitian operator on the `j`-th qubit of `S`.
/// Degenerate eigenvalues are merged into a single projector.
pub fn factorization_gap(rho_rs: &DensityMatrix, obs_r: MatRef<'_, c64>, obs_s: &[CMat]) -> Result<f64> {
    if rho_rs.factor_dims().len() != 2 {
        return Err(Error::Shape(format!("expected [R, S] factors, got {:?}", rho_rs.factor_dims())));
    }
    let (d_r, d_s) = (rho_rs.factor_dims()[0], rho_rs.factor_dims()[1]);
    if obs_r.nrows() != d_r || obs_r.ncols() != d_r || (1usize << obs_s.len()) != d_s {
        return Err(Error::Shape("observables do not match the R and S factors".into()));
    }
    for o in obs_s.iter().map(|o| o.as_ref()).chain(std::iter::once(obs_r)) {
        if linalg::hermiticity_defect(o) > measures::HERMITIAN_TOL {
            return Err(Error::Contract("observables must be Hermitian".into()));
        }
    }
    if obs_s.iter().any(|o| o.nrows() != 2 || o.ncols() != 2) {
        return Err(Error::Shape("S observables must be single-qubit".into()));
    }
    let proj_r = spectral_projectors(obs_r);

    // product eigenbasis of S
    let local: Vec<(Vec<f64>, CMat)> = obs_s.iter().map(|o| linalg::hermitian_eigen(o.as_ref())).collect();
    let mut w = Mat::<c64>::identity(1, 1);
    for (_, v) in &local {
        w = linalg::kron_le(w.as_ref(), v.as_ref());
    }
    let eig_s: Vec<f64> = (0..d_s)
        .map(|b| local.iter().enumerate().map(|(j, (vals, _))| vals[b >> j & 1]).product())
        .collect();
    let mut order: Vec<usize> = (0..d_s).collect();
    order.sort_by(|&a, &b| eig_s[a].total_cmp(&eig_s[b]));
    let mut groups_s: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NAN;
    for b in order {
        if groups_s.is_empty() || (eig_s[b] - last).abs() > 1e-9 {
            groups_s.push(Vec::new());
            last = eig_s[b];
        }
        groups_s.last_mut().unwrap().push(b);
    }

    let rot = linalg::kron_le(Mat::<c64>::identity(d_r, d_r).as_ref(), w.as_ref());
    let rotated = rot.adjoint() * rho_rs.matrix() * rot.as_ref();
    let joint_basis: Vec<Vec<f64>> = (0..d_s)
        .map(|b| {
            let block = Mat::from_fn(d_r, d_r, |i, j| rotated[(i + d_r * b, j + d_r * b)]);
            proj_r
                .iter()
                .map(|p| {
                    let m = p * &block;
                    linalg::trace_re(m.as_ref())
                })
                .collect()
        })
        .collect();

    let joint: Vec<Vec<f64>> = proj_r
        .iter()
        .enumerate()
        .map(|(a, _)| groups_s.iter().map(|g| g.iter().map(|&b| joint_basis[b][a]).sum()).collect())
        .collect();
    let p_r: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let p_s: Vec<f64> = (0..groups_s.len()).map(|g| joint.iter().map(|row| row[g]).sum()).collect();
    let mut gap = 0.0f64;
    for (a, row) in joint.iter().enumerate() {
        for (g, &pj) in row.iter().enumerate() {
            gap = gap.max((pj - p_r[a] * p_s[g]).abs());
        }
    }
    Ok(gap.min(1.0))
}

/// Per-outcome Pinsker check `2 (||rho(o) - rho||_1 / 2)^2 <= S_rel + tol`.
pub fn pinsker_holds(ens: &ProjectedEnsemble, tol: f64) -> bool {
    ens.outcome_measures().iter().all(|&(_, srel, td)| 2.0 * td * td <= srel + tol)
}

/// `true` if every conditional's entropy respects the Schmidt-rank ceiling
/// `min(n_e, n_r) ln 2`.
pub fn schmidt_ceiling_holds(ens: &ProjectedEnsemble, n_r: usize, n_e: usize, tol: f64) -> bool {
    let ceiling = n_r.min(n_e) as f64 * std::f64::consts::LN_2;
    ens.entries.iter().filter_map(|e| e.conditional.as_ref()).all(|c| {
        let s = c.spectrum();
        s.von_neumann() <= ceiling + tol && s.eigenvalues().iter().filter(|&&l| l > EIG_FLOOR).count() <= 1 << n_r.min(n_e)
    })
}
