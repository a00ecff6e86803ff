//! Thin wrappers over the dense faer routines used throughout.

use faer::prelude::*;
use faer::Side;
use num_complex::Complex64;

use crate::error::{GhoError, Result};

pub type CMat = Mat<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Ascending eigenvalues of a Hermitian matrix (lower triangle is read).
pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| GhoError::Eigensolver { dim: n, detail: format!("{e:?}") })
}

/// Ascending eigenvalues and orthonormal eigenvectors (columns).
pub fn eigh(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| GhoError::Eigensolver { dim: n, detail: format!("{e:?}") })?;
    let s = evd.S().column_vector();
    let values = (0..n).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let s = a
        .singular_values()
        .map_err(|_| GhoError::Svd { rows: a.nrows(), cols: a.ncols() })?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Norm of a Hermitian matrix from its extreme eigenvalues.
pub fn hermitian_norm(a: &CMat) -> Result<f64> {
    let v = eigvalsh(a)?;
    Ok(v.first().map_or(0.0, |lo| lo.abs().max(v.last().unwrap().abs())))
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

/// `a^{-1}` by LU with partial pivoting.
pub fn inverse(a: &CMat) -> CMat {
    solve(a, &CMat::identity(a.nrows(), a.nrows()))
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// `max |a_ij - conj(a_ji)|`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in j..n {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

/// `a - b` entrywise max norm.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Copies `a` with `shift` subtracted from the diagonal.
pub fn shifted(a: &CMat, shift: Complex64) -> CMat {
    let mut out = a.clone();
    for i in 0..a.nrows() {
        out[(i, i)] -= shift;
    }
    out
}

/// Maximum column sum of absolute values.
pub fn max_column_abs_sum(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum row sum of absolute values.
pub fn max_row_abs_sum(a: &CMat) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_x_spectrum() {
        let a = CMat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        let (v, u) = eigh(&a).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        let r = &a * &u - &u * CMat::from_fn(2, 2, |i, j| if i == j { Complex64::new(v[i], 0.0) } else { ZERO });
        assert!(max_abs(&r) < 1e-14);
    }

    #[test]
    fn inverse_of_diagonal() {
        let a = CMat::from_fn(2, 2, |i, j| if i == j { Complex64::new(1.0 + i as f64, 0.0) } else { ZERO });
        let g = inverse(&a);
        assert!((g[(1, 1)].re - 0.5).abs() < 1e-15 && g[(0, 1)].norm() == 0.0);
    }
}
