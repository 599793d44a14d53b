//! Measures on a pure `R ∪ S ∪ E` state computed from the amplitude matrix
//! `A[(r + d_r s), e]`, always working on the smaller side of each cut.
//!
//! These agree with the generic [`DensityMatrix`] routes (see tests) but
//! avoid forming `rho_RS` when `E` is the smaller subsystem.

use faer::Mat;
use rayon::prelude::*;

use crate::density::{DensityMatrix, Spectrum};
use crate::ensemble::{self, ProjectedEnsemble};
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::state::{self, PartitionSpec, Projection, StateVector};

/// A pure state split as `(R, S) x E`.
#[derive(Debug, Clone)]
pub struct Tripartite {
    a: CMat,
    d_r: usize,
    d_s: usize,
    d_e: usize,
    n_s: usize,
}

impl Tripartite {
    pub fn new(psi: &StateVector, part: &PartitionSpec) -> Result<Self> {
        let mut rows = part.r_register();
        rows.extend(part.s_register());
        let a = psi.split_matrix(&rows)?;
        Ok(Self {
            a,
            d_r: 1 << part.n_r(),
            d_s: 1 << part.n_s(),
            d_e: 1 << part.n_e(),
            n_s: part.n_s(),
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d_r, self.d_s, self.d_e)
    }

    /// `rho_RS` with factors `[d_r, d_s]`.
    pub fn rho_rs(&self) -> DensityMatrix {
        DensityMatrix::from_parts_unchecked(linalg::outer_gram(self.a.as_ref()), vec![self.d_r, self.d_s])
    }

    /// Amplitudes regrouped as `S x (R, E)`.
    fn s_by_re(&self) -> CMat {
        let (d_r, d_s) = (self.d_r, self.d_s);
        Mat::from_fn(d_s, d_r * self.d_e, |s, col| {
            let (r, e) = (col % d_r, col / d_r);
            self.a[(r + d_r * s, e)]
        })
    }

    /// Amplitudes regrouped as `R x (S, E)`.
    fn r_by_se(&self) -> CMat {
        let (d_r, d_s) = (self.d_r, self.d_s);
        Mat::from_fn(d_r, d_s * self.d_e, |r, col| {
            let (s, e) = (col % d_s, col / d_s);
            self.a[(r + d_r * s, e)]
        })
    }

    /// Nonzero spectrum of `M M^dagger` through the smaller Gram matrix.
    fn cut_spectrum(m: &CMat) -> Spectrum {
        let g = if m.nrows() <= m.ncols() { linalg::outer_gram(m.as_ref()) } else { linalg::gram(m.as_ref()) };
        Spectrum::from_unsorted(linalg::hermitian_eigenvalues(g.as_ref()))
    }

    fn cut_purity(m: &CMat) -> f64 {
        let g = if m.nrows() <= m.ncols() { linalg::outer_gram(m.as_ref()) } else { linalg::gram(m.as_ref()) };
        linalg::frobenius_sq(g.as_ref())
    }

    pub fn rho_r(&self) -> DensityMatrix {
        DensityMatrix::from_parts_unchecked(linalg::outer_gram(self.r_by_se().as_ref()), vec![self.d_r])
    }

    /// Spectrum of `rho_RS` (length `min(d_r d_s, d_e)`).
    pub fn spectrum_rs(&self) -> Spectrum {
        Self::cut_spectrum(&self.a)
    }

    /// Spectrum of `rho_S` (length `min(d_s, d_r d_e)`).
    pub fn spectrum_s(&self) -> Spectrum {
        Self::cut_spectrum(&self.s_by_re())
    }

    pub fn spectrum_r(&self) -> Spectrum {
        Self::cut_spectrum(&self.r_by_se())
    }

    pub fn purity_rs(&self) -> f64 {
        Self::cut_purity(&self.a)
    }

    pub fn purity_s(&self) -> f64 {
        Self::cut_purity(&self.s_by_re())
    }

    pub fn mutual_information(&self) -> f64 {
        self.spectrum_r().von_neumann() + self.spectrum_s().von_neumann() - self.spectrum_rs().von_neumann()
    }

    /// `|| rho_RS - I/(d_r d_s) ||_1`, using that the identity commutes with
    /// everything: eigenvalues outside the computed support sit at zero.
    pub fn distance_to_maximally_mixed(&self) -> f64 {
        let d = (self.d_r * self.d_s) as f64;
        let spec = self.spectrum_rs();
        let m = spec.eigenvalues().len() as f64;
        spec.eigenvalues().iter().map(|l| (l - 1.0 / d).abs()).sum::<f64>() + (d - m) / d
    }

    /// `ln ||rho_RS^{T_S}||_1`, through whichever representation is smaller.
    pub fn log_negativity(&self) -> f64 {
        if self.d_r * self.d_s <= self.d_r * self.d_r * self.d_e {
            self.log_negativity_direct()
        } else {
            self.log_negativity_low_rank()
        }
    }

    /// Forms `rho_RS`, transposes `S`, and diagonalizes.
    pub fn log_negativity_direct(&self) -> f64 {
        let rho = self.rho_rs();
        let pt = rho.partial_transpose_matrix(1).expect("two factors");
        let ev = linalg::hermitian_eigenvalues(pt.as_ref());
        ev.iter().map(|l| l.abs()).sum::<f64>().ln()
    }

    /// Negativity from a `d_r^2 d_e`-dimensional Hermitian matrix.
    ///
    /// With `phi_{r,e} = A[(r, ·), e]`, the partial transpose on `R` is
    /// `X P X^dagger` where the columns of `X` are `|r'⟩ ⊗ phi_{r,e}` and `P`
    /// swaps `r <-> r'`. Its nonzero spectrum equals that of
    /// `G^{1/2} P G^{1/2}` with `G = X^dagger X = I ⊗ C`, `C` the Gram matrix
    /// of the `phi`. Transposing `R` instead of `S` leaves the trace norm
    /// unchanged.
    pub fn log_negativity_low_rank(&self) -> f64 {
        let (d_r, d_e) = (self.d_r, self.d_e);
        let k = d_r * d_e;
        // phi as d_s x (r + d_r e) columns
        let phi = Mat::from_fn(self.d_s, k, |s, col| {
            let (r, e) = (col % d_r, col / d_r);
            self.a[(r + d_r * s, e)]
        });
        let c = linalg::gram(phi.as_ref());
        let h = linalg::psd_sqrt(c.as_ref());
        // M[(r1', (r1, e1)), (r2', (r2, e2))] = sum_f h[(r1,e1),(r2',f)] h[(r1',f),(r2,e2)]
        let dim = d_r * k;
        let idx = |r: usize, e: usize| r + d_r * e;
        let m = Mat::from_fn(dim, dim, |row, col| {
            let (r1p, rest1) = (row % d_r, row / d_r);
            let (r2p, rest2) = (col % d_r, col / d_r);
            (0..d_e)
                .map(|f| h[(rest1, idx(r2p, f))] * h[(idx(r1p, f), rest2)])
                .fold(linalg::ZERO, |a, b| a + b)
        });
        let ev = linalg::hermitian_eigenvalues(m.as_ref());
        ev.iter().map(|l| l.abs()).sum::<f64>().ln()
    }

    /// Unnormalized conditional `Tr_S[Π_o rho_RS]` for one outcome.
    pub fn conditional_weight(&self, outcome: u64) -> CMat {
        let off = self.d_r * outcome as usize;
        let block = self.a.as_ref().subrows(off, self.d_r);
        linalg::outer_gram(block)
    }

    /// `(p(o), Tr[rho~_R(o)^2])` for every outcome, where
    /// `rho~_R(o) = Tr_S[Π_o rho_RS]` is unnormalized.
    pub fn outcome_weights(&self) -> Vec<(f64, f64)> {
        (0..self.d_s as u64)
            .map(|o| {
                let w = self.conditional_weight(o);
                (linalg::trace_re(w.as_ref()), linalg::frobenius_sq(w.as_ref()))
            })
            .collect()
    }

    pub fn ensemble(&self) -> Result<ProjectedEnsemble> {
        ensemble::check_cap(self.n_s, ensemble::DEFAULT_OUTCOME_CAP)?;
        let projections: Vec<Projection> = (0..self.d_s as u64)
            .into_par_iter()
            .map(|o| {
                let w = self.conditional_weight(o);
                let p = linalg::trace_re(w.as_ref());
                state::normalize_conditional(w, p, self.d_r)
            })
            .collect();
        Ok(ProjectedEnsemble::from_projections(projections, self.rho_r(), self.n_s))
    }
}
