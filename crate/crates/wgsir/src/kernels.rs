//! RBF Gram matrices built from distance matrices, and their centered form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    /// exp(-gamma d^2)
    Gaussian,
    /// exp(-gamma d)
    Laplacian,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub gamma: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self { family, gamma })
    }

    pub fn eval(&self, d: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-self.gamma * d * d).exp(),
            KernelFamily::Laplacian => (-self.gamma * d).exp(),
        }
    }
}

/// Kernel matrix K together with its centered form G = QKQ,
/// Q = I - 11^T/n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramMatrix {
    pub k: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub spec: KernelSpec,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.k.nrows()
    }
}

/// Median-free default bandwidth: gamma = 1/(2 sigma^2) with sigma^2 the
/// mean squared distance over the C(n,2) unordered pairs.
pub fn default_gamma(d: &DistanceMatrix) -> Result<f64> {
    let n = d.n();
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = d.values[(i, j)];
            acc += v * v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::TooFewObservations { need: 2, found: n });
    }
    let sigma_sq = acc / count as f64;
    if sigma_sq <= 0.0 {
        return Err(Error::DegenerateDistances);
    }
    Ok(1.0 / (2.0 * sigma_sq))
}

/// QKQ computed without materializing Q.
pub fn center_gram(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut g = k.clone();
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] += grand - row_means[i] - col_means[j];
        }
    }
    Ok(g)
}

/// Builds K from a distance matrix and centers it in one pass.
pub fn gram_matrix(d: &DistanceMatrix, spec: KernelSpec) -> Result<GramMatrix> {
    let n = d.n();
    let k = DMatrix::from_fn(n, n, |i, j| spec.eval(d.values[(i, j)]));
    let g = center_gram(&k)?;
    Ok(GramMatrix { k, g, spec })
}
