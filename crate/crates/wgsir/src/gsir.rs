//! GSIR estimators of the central class for distributional predictors.
//!
//! Variant 1 solves the eigenproblem of
//! (G_X + eta_X I)^-1 G_X G_Y G_X (G_X + eta_X I)^-1, variant 2 inserts
//! the regularized inverse of G_Y in the middle. Coefficients
//! [f_j] = (G_X + eta_X I)^-1 v_j evaluate the sufficient predictors in-
//! and out-of-sample.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelSpec};
use crate::linalg::{ridge_inverse_apply, sym_eig};
use crate::measures::EmpiricalMeasure;
use crate::ot::{cross_matrix, Metric, SlicingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Gsir1,
    Gsir2,
}

impl Variant {
    /// Penalty constant for the order-determination criterion.
    pub fn c0(&self) -> f64 {
        match self {
            Variant::Gsir1 => 2.0,
            Variant::Gsir2 => 4.0,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Gsir1 => write!(f, "gsir1"),
            Variant::Gsir2 => write!(f, "gsir2"),
        }
    }
}

/// Relative ridge levels; the absolute constants are
/// eta = eps * lambda_max(G) at fit time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegularizationSpec {
    pub eps_x: f64,
    pub eps_y: f64,
}

impl RegularizationSpec {
    pub fn new(eps_x: f64, eps_y: f64) -> Result<Self> {
        if !(eps_x > 0.0 && eps_y > 0.0) {
            return Err(Error::InvalidParameter(
                "regularization constants must be positive".into(),
            ));
        }
        Ok(Self { eps_x, eps_y })
    }
}

/// Everything needed to evaluate the fitted predictors on new measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRefs {
    pub measures: Vec<EmpiricalMeasure>,
    pub kernel: KernelSpec,
    pub metric: Metric,
    pub slicing: Option<SlicingSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GsirFit {
    pub variant: Variant,
    /// Full spectrum of the assembled matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Top-d eigenvectors of the assembled matrix.
    pub v_matrix: DMatrix<f64>,
    /// Coefficients, column j = (G_X + eta_X I)^-1 v_j.
    pub coefficients: DMatrix<f64>,
    pub d: usize,
    pub eta_x: f64,
    pub train_gram: GramMatrix,
    pub train_refs: TrainRefs,
}

fn lambda_max(g: &DMatrix<f64>) -> Result<f64> {
    let eig = sym_eig(g)?;
    Ok(eig.values.first().copied().unwrap_or(0.0).max(0.0))
}

/// Fits the chosen GSIR variant, retaining the full spectrum (order
/// determination needs it) and the top-d coefficient columns.
pub fn fit(
    gx: &GramMatrix,
    gy: &GramMatrix,
    reg: RegularizationSpec,
    variant: Variant,
    d: usize,
    train_refs: TrainRefs,
) -> Result<GsirFit> {
    let n = gx.n();
    if gy.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: gy.n() });
    }
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!(
            "retained dimension must be in 1..={n}, got {d}"
        )));
    }
    if train_refs.measures.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: train_refs.measures.len(),
        });
    }

    let lx = lambda_max(&gx.g)?;
    let eta_x = reg.eps_x * if lx > 0.0 { lx } else { 1.0 };
    // A = (G_X + eta I)^-1 G_X, symmetric since the factors commute.
    let a = ridge_inverse_apply(&gx.g, eta_x, &gx.g)?;
    let lambda = match variant {
        Variant::Gsir1 => &a * &gy.g * &a,
        Variant::Gsir2 => {
            let ly = lambda_max(&gy.g)?;
            let eta_y = reg.eps_y * if ly > 0.0 { ly } else { 1.0 };
            let b = ridge_inverse_apply(&gy.g, eta_y, &gy.g)?;
            &a * b * &a
        }
    };
    let eig = sym_eig(&lambda)?;
    let v_matrix = eig.vectors.columns(0, d).into_owned();
    let coefficients = ridge_inverse_apply(&gx.g, eta_x, &v_matrix)?;
    Ok(GsirFit {
        variant,
        eigenvalues: eig.values,
        v_matrix,
        coefficients,
        d,
        eta_x,
        train_gram: gx.clone(),
        train_refs,
    })
}

impl GsirFit {
    pub fn n(&self) -> usize {
        self.train_gram.n()
    }

    /// Sufficient predictor values at the training points: G_X C, columns
    /// centered by construction.
    pub fn predictors_insample(&self) -> DMatrix<f64> {
        &self.train_gram.g * &self.coefficients
    }

    /// Row-centered kernel evaluation against the training sample,
    /// shifted by the training mean of each predictor so that evaluating
    /// at the training points reproduces `predictors_insample`.
    pub fn predictors_outsample(&self, test: &[EmpiricalMeasure]) -> Result<DMatrix<f64>> {
        if test.is_empty() {
            return Ok(DMatrix::zeros(0, self.d));
        }
        let train = &self.train_refs.measures;
        let dim = train[0].dim();
        if let Some(i) = test.iter().position(|m| m.dim() != dim) {
            return Err(Error::RaggedDimensions(i));
        }
        let dist = cross_matrix(
            test,
            train,
            self.train_refs.metric,
            self.train_refs.slicing.as_ref(),
        )?;
        let n = train.len() as f64;
        let kc = {
            let mut k = dist.map(|d| self.train_refs.kernel.eval(d));
            for t in 0..k.nrows() {
                let mean = k.row(t).sum() / n;
                for i in 0..k.ncols() {
                    k[(t, i)] -= mean;
                }
            }
            k
        };
        let raw = kc * &self.coefficients;
        let shift = self.train_column_shift();
        let mut out = raw;
        for j in 0..self.d {
            for t in 0..out.nrows() {
                out[(t, j)] -= shift[j];
            }
        }
        Ok(out)
    }

    /// Column means of the raw (row-centered, uncentered-in-sample)
    /// training evaluations; subtracting them aligns the out-of-sample
    /// path with G_X C.
    fn train_column_shift(&self) -> Vec<f64> {
        let k = &self.train_gram.k;
        let n = k.nrows();
        let nf = n as f64;
        let mut kc = k.clone();
        for t in 0..n {
            let mean = kc.row(t).sum() / nf;
            for i in 0..n {
                kc[(t, i)] -= mean;
            }
        }
        let raw = kc * &self.coefficients;
        (0..self.d).map(|j| raw.column(j).sum() / nf).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
