//! Thin helpers over `faer` for the dense complex matrices used throughout.

use faer::{c64, Mat, MatRef, Side};

/// Dense complex matrix.
pub type CMat = Mat<c64>;

pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Eigenvalues of a Hermitian matrix in descending order.
///
/// Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut vals = m
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("hermitian eigenvalue decomposition failed to converge");
    vals.reverse();
    vals
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: MatRef<'_, c64>) -> (Vec<f64>, CMat) {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigendecomposition failed to converge");
    let s = evd.S();
    let vals = (0..s.dim()).map(|i| s[i].re).collect();
    (vals, evd.U().to_owned())
}

/// Largest entrywise modulus of `m - m^dagger`.
pub fn hermiticity_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise modulus of `u^dagger u - I`.
pub fn unitarity_defect(u: MatRef<'_, c64>) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let g: CMat = u.adjoint() * u;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// `a^dagger a`.
pub fn gram(a: MatRef<'_, c64>) -> CMat {
    a.adjoint() * a
}

/// `a a^dagger`.
pub fn outer_gram(a: MatRef<'_, c64>) -> CMat {
    a * a.adjoint()
}

/// Sum of squared moduli of all entries.
pub fn frobenius_sq(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc
}

/// Real part of the trace.
pub fn trace_re(m: MatRef<'_, c64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// Kronecker product with `a` on the least significant digit:
/// `out[(ia + da*ib, ja + da*jb)] = a[(ia, ja)] * b[(ib, jb)]`.
pub fn kron_le(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (ra, ca) = (a.nrows(), a.ncols());
    Mat::from_fn(ra * b.nrows(), ca * b.ncols(), |i, j| {
        a[(i % ra, j % ca)] * b[(i / ra, j / ca)]
    })
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// negative eigenvalues from rounding are clipped to zero.
pub fn psd_sqrt(m: MatRef<'_, c64>) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_ordering_is_little_endian() {
        let a = Mat::from_fn(2, 2, |i, j| c64::new((1 + i * 2 + j) as f64, 0.0));
        let b = Mat::from_fn(2, 2, |i, j| c64::new((10 * (1 + i * 2 + j)) as f64, 0.0));
        let k = kron_le(a.as_ref(), b.as_ref());
        // (ia=1, ib=0) row index 1; (ja=0, jb=1) column index 2
        assert_eq!(k[(1, 2)], a[(1, 0)] * b[(0, 1)]);
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Mat::from_fn(3, 3, |i, j| c64::new((i + j) as f64, i as f64 - j as f64));
        let p = gram(a.as_ref());
        let r = psd_sqrt(p.as_ref());
        let back = &r * &r;
        for j in 0..3 {
            for i in 0..3 {
                assert!((back[(i, j)] - p[(i, j)]).norm() < 1e-9);
            }
        }
    }
}
