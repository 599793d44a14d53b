//! Density matrices over a list of tensor factors.
//!
//! Composite indices are little-endian in the factor list: factor 0 is the
//! least significant digit. For a register this matches the bit layout of
//! [`StateVector`](crate::state::StateVector), where qubit 0 is bit 0.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Eigenvalues below this are treated as zero in logarithms and ranks.
pub const EIG_FLOOR: f64 = 1e-12;

/// Eigenvalues of a Hermitian operator, sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn from_unsorted(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Self { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `-sum(l ln l)` over eigenvalues above [`EIG_FLOOR`], in nats.
    pub fn von_neumann(&self) -> f64 {
        -self
            .eigenvalues
            .iter()
            .filter(|&&l| l > EIG_FLOOR)
            .map(|&l| l * l.ln())
            .sum::<f64>()
    }

    /// Logarithm of the number of eigenvalues above [`EIG_FLOOR`].
    pub fn renyi0(&self) -> f64 {
        let rank = self.eigenvalues.iter().filter(|&&l| l > EIG_FLOOR).count();
        if rank == 0 {
            0.0
        } else {
            (rank as f64).ln()
        }
    }

    /// Collision entropy `-ln sum(l^2)`.
    pub fn renyi2(&self) -> f64 {
        -self.purity().ln()
    }

    pub fn purity(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * l).sum()
    }

    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).sum()
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix with a recorded list
/// of tensor-factor dimensions.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMat,
    factor_dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validating constructor. Checks shape, Hermiticity (1e-10), unit trace
    /// (1e-10) and positivity (smallest eigenvalue >= -1e-9).
    pub fn new(matrix: CMat, factor_dims: Vec<usize>) -> Result<Self> {
        let rho = Self::from_parts(matrix, factor_dims)?;
        let herm = linalg::hermiticity_defect(rho.matrix.as_ref());
        if herm > 1e-10 {
            return Err(Error::Contract(format!("matrix is not Hermitian (defect {herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::Contract(format!("trace is {tr}, expected 1")));
        }
        let min = rho.spectrum().min();
        if min < -1e-9 {
            return Err(Error::Contract(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Shape-checked constructor without the spectral checks.
    pub fn from_parts(matrix: CMat, factor_dims: Vec<usize>) -> Result<Self> {
        let dim: usize = factor_dims.iter().product();
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != dim {
            return Err(Error::Shape(format!(
                "{}x{} matrix with factor dims {:?}",
                matrix.nrows(),
                matrix.ncols(),
                factor_dims
            )));
        }
        if factor_dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape("zero factor dimension".into()));
        }
        Ok(Self { matrix, factor_dims })
    }

    pub(crate) fn from_parts_unchecked(matrix: CMat, factor_dims: Vec<usize>) -> Self {
        debug_assert_eq!(matrix.nrows(), factor_dims.iter().product::<usize>());
        Self { matrix, factor_dims }
    }

    /// `|psi><psi|` for a normalized vector.
    pub fn from_pure(amplitudes: &[c64], factor_dims: Vec<usize>) -> Result<Self> {
        let n = amplitudes.len();
        let m = Mat::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj());
        Self::from_parts(m, factor_dims)
    }

    /// `I / d` with the given factors.
    pub fn maximally_mixed(factor_dims: Vec<usize>) -> Self {
        let d: usize = factor_dims.iter().product();
        let m = Mat::from_fn(d, d, |i, j| {
            if i == j {
                c64::new(1.0 / d as f64, 0.0)
            } else {
                linalg::ZERO
            }
        });
        Self { matrix: m, factor_dims }
    }

    /// Diagonal state with the given probabilities as a single factor.
    pub fn diagonal(probs: &[f64]) -> Self {
        let d = probs.len();
        let m = Mat::from_fn(d, d, |i, j| {
            if i == j {
                c64::new(probs[i], 0.0)
            } else {
                linalg::ZERO
            }
        });
        Self { matrix: m, factor_dims: vec![d] }
    }

    /// The 1x1 state of an empty subsystem.
    pub fn scalar_one() -> Self {
        Self {
            matrix: Mat::from_fn(1, 1, |_, _| linalg::ONE),
            factor_dims: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(self.matrix.as_ref())
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        linalg::frobenius_sq(self.matrix.as_ref())
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum { eigenvalues: linalg::hermitian_eigenvalues(self.matrix.as_ref()) }
    }

    /// `self (x) other`, with `self` occupying the lower factors.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let m = linalg::kron_le(self.matrix.as_ref(), other.matrix.as_ref());
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        Self { matrix: m, factor_dims: dims }
    }

    /// Merge runs of adjacent factors so that the factor list becomes `dims`.
    pub fn regroup(&self, dims: Vec<usize>) -> Result<DensityMatrix> {
        let mut it = self.factor_dims.iter();
        for &target in &dims {
            let mut acc = 1usize;
            while acc < target {
                match it.next() {
                    Some(&d) => acc *= d,
                    None => break,
                }
            }
            if acc != target {
                return Err(Error::Shape(format!(
                    "cannot regroup factors {:?} into {:?}",
                    self.factor_dims, dims
                )));
            }
        }
        if it.any(|&d| d != 1) {
            return Err(Error::Shape(format!(
                "cannot regroup factors {:?} into {:?}",
                self.factor_dims, dims
            )));
        }
        Ok(Self { matrix: self.matrix.clone(), factor_dims: dims })
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = Vec::with_capacity(self.factor_dims.len());
        let mut s = 1;
        for &d in &self.factor_dims {
            strides.push(s);
            s *= d;
        }
        strides
    }

    /// Trace out every factor not listed in `keep`. The output factors follow
    /// the order of `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let nf = self.factor_dims.len();
        let mut seen = vec![false; nf];
        for &k in keep {
            if k >= nf {
                return Err(Error::Index(format!("factor {k} out of range for {nf} factors")));
            }
            if seen[k] {
                return Err(Error::Index(format!("factor {k} listed twice")));
            }
            seen[k] = true;
        }
        let traced: Vec<usize> = (0..nf).filter(|f| !seen[*f]).collect();
        let strides = self.strides();
        let offsets = |factors: &[usize]| -> Vec<usize> {
            let total: usize = factors.iter().map(|&f| self.factor_dims[f]).product();
            (0..total)
                .map(|mut idx| {
                    let mut off = 0;
                    for &f in factors {
                        let d = self.factor_dims[f];
                        off += (idx % d) * strides[f];
                        idx /= d;
                    }
                    off
                })
                .collect()
        };
        let keep_off = offsets(keep);
        let trace_off = offsets(&traced);
        let dk = keep_off.len();
        let m = Mat::from_fn(dk, dk, |a, b| {
            let (ra, rb) = (keep_off[a], keep_off[b]);
            trace_off
                .iter()
                .map(|&t| self.matrix[(ra + t, rb + t)])
                .fold(linalg::ZERO, |acc, z| acc + z)
        });
        let dims = keep.iter().map(|&f| self.factor_dims[f]).collect();
        Ok(Self { matrix: m, factor_dims: dims })
    }

    /// Transpose of a single tensor factor.
    pub(crate) fn partial_transpose_matrix(&self, factor: usize) -> Result<CMat> {
        let nf = self.factor_dims.len();
        if factor >= nf {
            return Err(Error::Index(format!("factor {factor} out of range for {nf} factors")));
        }
        let stride = self.strides()[factor];
        let d = self.factor_dims[factor];
        let n = self.dim();
        Ok(Mat::from_fn(n, n, |i, j| {
            let di = (i / stride) % d;
            let dj = (j / stride) % d;
            let i2 = i - di * stride + dj * stride;
            let j2 = j - dj * stride + di * stride;
            self.matrix[(i2, j2)]
        }))
    }

    /// `u rho u^dagger` for a unitary on the full space.
    pub fn conjugate_by(&self, u: MatRef<'_, c64>) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::Shape(format!(
                "{}x{} unitary on a {}-dimensional state",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        let m = u * self.matrix.as_ref() * u.adjoint();
        Ok(Self { matrix: m, factor_dims: self.factor_dims.clone() })
    }

    /// Largest entrywise deviation from another matrix of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        worst
    }
}
