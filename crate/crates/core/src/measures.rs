//! Spectral entanglement and distinguishability measures.
//!
//! All entropies are in nats.

use faer::{c64, MatRef};

use crate::density::{DensityMatrix, Spectrum, EIG_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Hermiticity tolerance for [`trace_norm`] inputs.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Partial transpose of one tensor factor. Applying it twice returns the
/// input exactly.
pub fn partial_transpose(rho: &DensityMatrix, factor_index: usize) -> Result<CMat> {
    rho.partial_transpose_matrix(factor_index)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(h: MatRef<'_, c64>) -> Result<f64> {
    if h.nrows() != h.ncols() {
        return Err(Error::Shape(format!("{}x{} is not square", h.nrows(), h.ncols())));
    }
    let defect = linalg::hermiticity_defect(h);
    if defect > HERMITIAN_TOL {
        return Err(Error::Contract(format!("trace_norm needs a Hermitian input (defect {defect:.3e})")));
    }
    Ok(linalg::hermitian_eigenvalues(h).iter().map(|l| l.abs()).sum())
}

fn require_bipartite(rho: &DensityMatrix) -> Result<()> {
    if rho.factor_dims().len() != 2 {
        return Err(Error::Shape(format!(
            "expected an R (x) S factorization, got factors {:?}",
            rho.factor_dims()
        )));
    }
    Ok(())
}

/// `ln || rho^{T_S} ||_1` for a state with factors `[R, S]`.
pub fn log_negativity(rho_rs: &DensityMatrix) -> Result<f64> {
    require_bipartite(rho_rs)?;
    let pt = partial_transpose(rho_rs, 1)?;
    Ok(trace_norm(pt.as_ref())?.ln())
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.spectrum().von_neumann()
}

/// Renyi entropy of order 0 (log rank above the eigenvalue floor) or 2.
pub fn renyi_entropy(rho: &DensityMatrix, n: u32) -> Result<f64> {
    match n {
        0 => Ok(rho.spectrum().renyi0()),
        2 => Ok(-rho.purity().ln()),
        _ => Err(Error::Parameter(format!("Renyi order {n} unsupported (use 0 or 2)"))),
    }
}

/// `Tr[rho (ln rho - ln sigma)]`, or `+inf` when the support of `rho` is not
/// contained in the support of `sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Shape(format!("dimensions {} and {}", rho.dim(), sigma.dim())));
    }
    let neg_entropy = -von_neumann_entropy(rho);
    let (mu, vecs) = linalg::hermitian_eigen(sigma.matrix());
    // diagonal of rho in sigma's eigenbasis
    let rotated = vecs.adjoint() * rho.matrix() * vecs.as_ref();
    let mut cross = 0.0;
    for (j, &m) in mu.iter().enumerate() {
        let weight = rotated[(j, j)].re;
        if m <= EIG_FLOOR {
            if weight > 1e-10 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * m.ln();
    }
    Ok((neg_entropy - cross).max(0.0))
}

/// `(1/2) || rho - sigma ||_1`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Shape(format!("dimensions {} and {}", rho.dim(), sigma.dim())));
    }
    let diff = rho.matrix() - sigma.matrix();
    Ok(0.5 * trace_norm(diff.as_ref())?)
}

/// `S(R) + S(S) - S(RS)` for a state with factors `[R, S]`.
pub fn mutual_information(rho_rs: &DensityMatrix) -> Result<f64> {
    require_bipartite(rho_rs)?;
    let s_r = von_neumann_entropy(&rho_rs.partial_trace(&[0])?);
    let s_s = von_neumann_entropy(&rho_rs.partial_trace(&[1])?);
    Ok(s_r + s_s - von_neumann_entropy(rho_rs))
}

/// Checks `S0 >= SvN >= S2` on a spectrum, with slack `tol`.
pub fn renyi_sandwich_holds(spec: &Spectrum, tol: f64) -> bool {
    let (s0, s1, s2) = (spec.renyi0(), spec.von_neumann(), spec.renyi2());
    s0 + tol >= s1 && s1 + tol >= s2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use faer::Mat;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn bell() -> DensityMatrix {
        let s = FRAC_1_SQRT_2;
        let amps = [c64::new(s, 0.0), ZERO, ZERO, c64::new(s, 0.0)];
        DensityMatrix::from_pure(&amps, vec![2, 2]).unwrap()
    }

    fn ket0() -> DensityMatrix {
        DensityMatrix::diagonal(&[1.0, 0.0])
    }

    fn ket1() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.0, 1.0])
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&bell(), 1).unwrap();
        let ev = linalg::hermitian_eigenvalues(pt.as_ref());
        assert!((ev[3] + 0.5).abs() < 1e-14);
        assert!(ev[..3].iter().all(|l| (l - 0.5).abs() < 1e-14));
        assert!((trace_norm(pt.as_ref()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_product_stays_psd() {
        let a = DensityMatrix::diagonal(&[0.3, 0.7]);
        let h = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new(0.6, 0.0),
            (1, 1) => c64::new(0.4, 0.0),
            (0, 1) => c64::new(0.1, 0.2),
            _ => c64::new(0.1, -0.2),
        });
        let b = DensityMatrix::new(h.clone(), vec![2]).unwrap();
        let pt = partial_transpose(&a.tensor(&b), 1).unwrap();
        let expected = a.tensor(&DensityMatrix::new(h.transpose().to_owned(), vec![2]).unwrap());
        for j in 0..4 {
            for i in 0..4 {
                assert!((pt[(i, j)] - expected.matrix()[(i, j)]).norm() < 1e-15);
            }
        }
        assert!(linalg::hermitian_eigenvalues(pt.as_ref()).iter().all(|&l| l > -1e-14));
    }

    #[test]
    fn partial_transpose_mixed_unchanged() {
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        let pt = partial_transpose(&mixed, 0).unwrap();
        assert!(DensityMatrix::from_parts(pt, vec![2, 2]).unwrap().max_abs_diff(&mixed) == 0.0);
    }

    #[test]
    fn partial_transpose_bad_factor() {
        assert!(matches!(partial_transpose(&bell(), 2), Err(Error::Index(_))));
    }

    #[test]
    fn trace_norm_cases() {
        assert!((trace_norm(DensityMatrix::diagonal(&[0.2, 0.8]).matrix()).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(trace_norm(Mat::<c64>::zeros(3, 3).as_ref()).unwrap(), 0.0);
        let bad = Mat::from_fn(2, 2, |i, j| if i < j { c64::new(1.0, 0.0) } else { ZERO });
        assert!(matches!(trace_norm(bad.as_ref()), Err(Error::Contract(_))));
    }

    #[test]
    fn negativity_cases() {
        assert!((log_negativity(&bell()).unwrap() - LN_2).abs() < 1e-12);
        let two = bell().tensor(&bell()).partial_trace(&[0, 2, 1, 3]).unwrap();
        let two = two.regroup(vec![4, 4]).unwrap();
        assert!((log_negativity(&two).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        let prod = DensityMatrix::diagonal(&[0.3, 0.7]).tensor(&DensityMatrix::diagonal(&[0.5, 0.5]));
        assert!(log_negativity(&prod).unwrap().abs() < 1e-12);
    }

    #[test]
    fn entropy_values() {
        assert!(von_neumann_entropy(&ket0()).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2, 2]);
        assert!((von_neumann_entropy(&mixed) - 3.0 * LN_2).abs() < 1e-12);
        // 3/4 ln(4/3) + 1/4 ln 4, 30-digit reference
        let d = DensityMatrix::diagonal(&[0.75, 0.25]);
        assert!((von_neumann_entropy(&d) - 0.562_335_144_618_808_35).abs() < 1e-14);
        assert!((renyi_entropy(&d, 2).unwrap() - 0.470_003_629_245_735_55).abs() < 1e-14);
        assert!(renyi_entropy(&bell(), 2).unwrap().abs() < 1e-14);
        for n in [0, 2] {
            assert!((renyi_entropy(&mixed, n).unwrap() - 3.0 * LN_2).abs() < 1e-12);
        }
        assert!(matches!(renyi_entropy(&d, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn relative_entropy_cases() {
        let d = DensityMatrix::diagonal(&[0.75, 0.25]);
        assert!(relative_entropy(&d, &d).unwrap().abs() < 1e-12);
        let half = DensityMatrix::maximally_mixed(vec![2]);
        assert!((relative_entropy(&ket0(), &half).unwrap() - LN_2).abs() < 1e-12);
        assert_eq!(relative_entropy(&half, &ket0()).unwrap(), f64::INFINITY);
        assert!(matches!(relative_entropy(&half, &bell()), Err(Error::Shape(_))));
    }

    #[test]
    fn trace_distance_cases() {
        let half = DensityMatrix::maximally_mixed(vec![2]);
        assert!(trace_distance(&half, &half).unwrap().abs() < 1e-15);
        assert!((trace_distance(&ket0(), &ket1()).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&ket0(), &half).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_cases() {
        let prod = DensityMatrix::diagonal(&[0.3, 0.7]).tensor(&DensityMatrix::diagonal(&[0.5, 0.5]));
        assert!(mutual_information(&prod).unwrap().abs() < 1e-12);
        assert!((mutual_information(&bell()).unwrap() - 2.0 * LN_2).abs() < 1e-12);
    }
}
