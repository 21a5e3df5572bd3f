//! Thin helpers over the dense backend.

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Decomposition)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Decomposition)?;
    let s = e.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((vals, e.U().to_owned()))
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
pub fn symmetric_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Decomposition)?;
    let s = e.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn symmetric_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Decomposition)
}

/// U·diag(g)·Uᵀ for real U.
pub fn spectral_compose(u: MatRef<'_, f64>, g: &[f64]) -> Mat<f64> {
    let scaled = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * g[j]);
    let mut out = &scaled * u.transpose();
    symmetrize(&mut out);
    out
}

/// U·diag(g)·Uᴴ for complex U.
pub fn hermitian_compose(u: MatRef<'_, c64>, g: &[f64]) -> Mat<c64> {
    let scaled = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * g[j]);
    let mut out = &scaled * u.adjoint();
    hermitize(&mut out);
    out
}

/// Averages with the transpose in place.
pub fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Averages with the adjoint in place.
pub fn hermitize(m: &mut Mat<c64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = c64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
}

pub fn to_complex(m: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

/// Eigenvalues of H·Hᴴ, computed on the smaller Gram side, ascending.
/// The larger side's extra eigenvalues are zero and omitted.
pub fn gram_eigenvalues(h: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let g = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    let mut v = hermitian_eigenvalues(g.as_ref())?;
    for x in &mut v {
        *x = x.max(0.0);
    }
    Ok(v)
}

/// Largest entrywise modulus of a − b.
pub fn max_abs_diff_c(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

pub fn frobenius_c(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn frobenius(a: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}
