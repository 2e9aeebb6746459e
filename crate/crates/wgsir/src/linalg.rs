//! Dense symmetric eigendecomposition and ridge-regularized solves.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Full spectrum of a symmetric matrix, eigenvalues descending, columns of
/// `vectors` matching the order.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition. The input is symmetrized as (A + A^T)/2
/// before decomposing; each eigenvector's sign is fixed so its
/// largest-magnitude component is positive.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<EigenResult> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    let n = a.nrows();
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        values.push(eig.eigenvalues[i]);
        let col = eig.eigenvectors.column(i);
        let mut best = 0;
        for r in 1..n {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        let sign = if col[best] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, k)] = sign * col[r];
        }
    }
    Ok(EigenResult { values, vectors })
}

/// Solves (A + eta I) X = B for symmetric PSD A and eta > 0.
pub fn ridge_inverse_apply(a: &DMatrix<f64>, eta: f64, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if eta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ridge constant must be positive, got {eta}"
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    let n = a.nrows();
    let mut shifted = (a + a.transpose()) * 0.5;
    for i in 0..n {
        shifted[(i, i)] += eta;
    }
    if let Some(chol) = shifted.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    // A PSD plus eta I should be PD; LU covers borderline indefiniteness.
    shifted
        .lu()
        .solve(b)
        .ok_or(Error::SingularCovariance)
}
