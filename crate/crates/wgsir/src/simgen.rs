//! Synthetic scenario generators with analytically known sufficient
//! predictors.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma as GammaDist, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::measures::{DatasetPair, EmpiricalMeasure};
use crate::ot::{hellinger_beta, hellinger_gaussian_sq, w2_gaussian, QUANTILE_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelId {
    I1,
    I2,
    I3,
    I4,
    II1,
    II2,
    II3,
    II4,
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::I1,
        ModelId::I2,
        ModelId::I3,
        ModelId::I4,
        ModelId::II1,
        ModelId::II2,
        ModelId::II3,
        ModelId::II4,
    ];

    /// True sufficient dimension of the model.
    pub fn d0(&self) -> usize {
        match self {
            ModelId::I1 | ModelId::II1 => 1,
            _ => 2,
        }
    }

    /// Dimension of the generated measures (both sides).
    pub fn dim(&self) -> usize {
        if self.is_multivariate() { 2 } else { 1 }
    }

    pub fn is_multivariate(&self) -> bool {
        matches!(self, ModelId::II1 | ModelId::II2 | ModelId::II3 | ModelId::II4)
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I-1" => Ok(ModelId::I1),
            "I-2" => Ok(ModelId::I2),
            "I-3" => Ok(ModelId::I3),
            "I-4" => Ok(ModelId::I4),
            "II-1" => Ok(ModelId::II1),
            "II-2" => Ok(ModelId::II2),
            "II-3" => Ok(ModelId::II3),
            "II-4" => Ok(ModelId::II4),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelId::I1 => "I-1",
            ModelId::I2 => "I-2",
            ModelId::I3 => "I-3",
            ModelId::I4 => "I-4",
            ModelId::II1 => "II-1",
            ModelId::II2 => "II-2",
            ModelId::II3 => "II-3",
            ModelId::II4 => "II-4",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimScenario {
    pub model: ModelId,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub data: DatasetPair,
    /// n x d0 matrix of the model's identified true predictors.
    pub true_predictors: DMatrix<f64>,
    pub d0: usize,
}

/// Inverse of the regularized incomplete Beta CDF by bisection to 1e-10.
pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&p));
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// One Gamma(shape, rate) draw.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gamma parameters must be positive: shape={shape}, rate={rate}"
        )));
    }
    let dist = GammaDist::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Gamma(shape, rate) draw restricted to (lo, hi) by rejection. Errors
/// after 10^6 proposals rather than falling back silently.
pub fn sample_truncated_gamma<R: Rng + ?Sized>(
    shape: f64,
    rate: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "invalid truncation range ({lo}, {hi})"
        )));
    }
    const MAX_PROPOSALS: usize = 1_000_000;
    for _ in 0..MAX_PROPOSALS {
        let v = sample_gamma(shape, rate, rng)?;
        if v > lo && v < hi {
            return Ok(v);
        }
    }
    Err(Error::RejectionFailure(MAX_PROPOSALS))
}

/// Quantile values of Beta(a, b) on the fixed midpoint grid.
fn beta_quantile_grid(a: f64, b: f64) -> Vec<f64> {
    (0..QUANTILE_GRID)
        .map(|j| beta_quantile(a, b, (j as f64 + 0.5) / QUANTILE_GRID as f64))
        .collect()
}

fn grid_w2(qa: &[f64], qb: &[f64]) -> f64 {
    let n = qa.len() as f64;
    let ss: f64 = qa.iter().zip(qb).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / n).sqrt()
}

struct BetaObservation {
    a: f64,
    b: f64,
    samples: Vec<f64>,
}

#[cfg(feature = "parallel")]
fn map_observations<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_observations<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Scenario I: univariate Beta predictors, Gaussian response samples.
pub fn gen_model_i<R: Rng + ?Sized>(
    model: ModelId,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<GeneratedData> {
    if model.is_multivariate() {
        return Err(Error::UnknownModel(format!("{model} is not a Scenario I model")));
    }
    // Draw all randomness sequentially for reproducibility; the
    // deterministic reference distances are computed in a second pass.
    let mut obs = Vec::with_capacity(n);
    for _ in 0..n {
        let a = sample_gamma(2.0, 1.0, rng)?;
        let b = sample_gamma(2.0, 3.0, rng)?;
        let beta = BetaDist::new(a, b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let samples: Vec<f64> = (0..m).map(|_| beta.sample(rng)).collect();
        obs.push(BetaObservation { a, b, samples });
    }

    // reference quantile grids for mu_1 = Beta(2,1), mu_2 = Beta(2,3)
    let q_mu1 = beta_quantile_grid(2.0, 1.0);
    let q_mu2 = beta_quantile_grid(2.0, 3.0);
    struct Derived {
        w1: f64,
        w2: f64,
        h1: f64,
        h2: f64,
        mean: f64,
        var: f64,
    }
    let derived: Vec<Result<Derived>> = map_observations(&obs, |o| {
        let q = beta_quantile_grid(o.a, o.b);
        let s = o.a + o.b;
        Ok(Derived {
            w1: grid_w2(&q, &q_mu1),
            w2: grid_w2(&q, &q_mu2),
            h1: hellinger_beta(o.a, o.b, 2.0, 1.0)?,
            h2: hellinger_beta(o.a, o.b, 2.0, 3.0)?,
            mean: o.a / s,
            var: o.a * o.b / (s * s * (s + 1.0)),
        })
    });

    let d0 = model.d0();
    let mut predictors = Vec::with_capacity(n);
    let mut responses = Vec::with_capacity(n);
    let mut truth = DMatrix::zeros(n, d0);
    for (i, (o, der)) in obs.iter().zip(derived).enumerate() {
        let der = der?;
        let (mu_y, sigma_y) = match model {
            ModelId::I1 => {
                let center = (der.w1 * der.w1).exp() + (der.w2 * der.w2).exp();
                (center + 0.2 * std_normal(rng), 1.0)
            }
            ModelId::I2 => {
                let center = (der.w1 * der.w1).exp();
                let sigma = sample_gamma(der.w2 * der.w2, der.w2, rng)?;
                (center + 0.2 * std_normal(rng), sigma)
            }
            ModelId::I3 => {
                let center = der.h1.exp();
                (center + 0.2 * std_normal(rng), der.h2.exp())
            }
            ModelId::I4 => {
                let sigma = sample_gamma(der.var, der.var.sqrt(), rng)?;
                (der.mean + 0.2 * std_normal(rng), sigma)
            }
            _ => unreachable!(),
        };
        let normal =
            Normal::new(mu_y, sigma_y).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let y: Vec<f64> = (0..m).map(|_| normal.sample(rng)).collect();
        predictors.push(EmpiricalMeasure::from_scalars(&o.samples)?);
        responses.push(EmpiricalMeasure::from_scalars(&y)?);
        match model {
            ModelId::I1 => truth[(i, 0)] = der.w1,
            ModelId::I2 => {
                truth[(i, 0)] = der.w1;
                truth[(i, 1)] = der.w2;
            }
            ModelId::I3 => {
                truth[(i, 0)] = der.h1;
                truth[(i, 1)] = der.h2;
            }
            ModelId::I4 => {
                truth[(i, 0)] = der.mean;
                truth[(i, 1)] = der.var;
            }
            _ => unreachable!(),
        }
    }
    let ids = (1..=n).map(|i| i.to_string()).collect();
    Ok(GeneratedData {
        data: DatasetPair::new(predictors, responses, ids)?,
        true_predictors: truth,
        d0,
    })
}

fn reference_gaussians() -> ((DVector<f64>, DMatrix<f64>), (DVector<f64>, DMatrix<f64>)) {
    let mu1 = (
        DVector::from_vec(vec![-1.0, 0.0]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5])),
    );
    let mu2 = (
        DVector::from_vec(vec![0.0, 1.0]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0])),
    );
    (mu1, mu2)
}

/// Scenario II: bivariate Gaussian predictors and responses.
pub fn gen_model_ii<R: Rng + ?Sized>(
    model: ModelId,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<GeneratedData> {
    if !model.is_multivariate() {
        return Err(Error::UnknownModel(format!("{model} is not a Scenario II model")));
    }
    let ((m1, s1), (m2, s2)) = reference_gaussians();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rotation = match model {
        ModelId::II4 => DMatrix::from_row_slice(2, 2, &[s, s, s, -s]),
        _ => DMatrix::from_row_slice(2, 2, &[s, s, -s, s]),
    };

    let d0 = model.d0();
    let mut predictors = Vec::with_capacity(n);
    let mut responses = Vec::with_capacity(n);
    let mut truth = DMatrix::zeros(n, d0);
    for i in 0..n {
        let a: f64 = 0.5 + 0.5 * std_normal(rng);
        let b: f64 = BetaDist::new(2.0, 3.0)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(rng);
        if !(b > 0.0) {
            return Err(Error::InvalidParameter("nonpositive predictor variance".into()));
        }
        let mean_x = DVector::from_vec(vec![a, a]);
        let cov_x = DMatrix::identity(2, 2) * b;
        let sd = b.sqrt();
        let x_samples: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let z1: f64 = std_normal(rng);
                let z2: f64 = std_normal(rng);
                vec![a + sd * z1, a + sd * z2]
            })
            .collect();

        let w1 = w2_gaussian(&mean_x, &cov_x, &m1, &s1)?;
        let w2 = w2_gaussian(&mean_x, &cov_x, &m2, &s2)?;
        let h1_sq = hellinger_gaussian_sq(&mean_x, &cov_x, &m1, &s1)?;
        let h2_sq = hellinger_gaussian_sq(&mean_x, &cov_x, &m2, &s2)?;

        let (mu_y, lambda) = match model {
            ModelId::II1 => {
                let z1: f64 = std_normal(rng);
                let z2: f64 = std_normal(rng);
                (DVector::from_vec(vec![w1 + z1, w1 + z2]), None)
            }
            ModelId::II2 => {
                let r = w1.sqrt();
                let l1: f64 = w2 + 0.5 * std_normal(rng);
                let l2: f64 = w2 + 0.5 * std_normal(rng);
                (DVector::from_vec(vec![r, r]), Some((l1.abs(), l2.abs())))
            }
            ModelId::II3 => {
                let z1: f64 = std_normal(rng);
                let z2: f64 = std_normal(rng);
                let l1 = sample_truncated_gamma(w2 * w2, w2, 0.2, 2.0, rng)?;
                let l2 = sample_truncated_gamma(w2 * w2, w2, 0.2, 2.0, rng)?;
                (DVector::from_vec(vec![w1 + z1, w1 + z2]), Some((l1, l2)))
            }
            ModelId::II4 => {
                let h2 = h2_sq.sqrt();
                let z1: f64 = std_normal(rng);
                let z2: f64 = std_normal(rng);
                let l1 = sample_truncated_gamma(h2_sq, h2, 0.2, 2.0, rng)?;
                let l2 = sample_truncated_gamma(h2_sq, h2, 0.2, 2.0, rng)?;
                (DVector::from_vec(vec![h1_sq + z1, h1_sq + z2]), Some((l1, l2)))
            }
            _ => unreachable!(),
        };
        // Sigma_Y = Gamma diag(l) Gamma^T; the sampling factor is
        // Gamma diag(sqrt l), which works even when an eigenvalue is 0.
        let factor = match lambda {
            None => DMatrix::identity(2, 2),
            Some((l1, l2)) => {
                &rotation
                    * DMatrix::from_diagonal(&DVector::from_vec(vec![l1.sqrt(), l2.sqrt()]))
            }
        };
        let y_samples: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let z = DVector::from_vec(vec![std_normal(rng), std_normal(rng)]);
                let y = &mu_y + &factor * z;
                vec![y[0], y[1]]
            })
            .collect();

        predictors.push(EmpiricalMeasure::from_samples(&x_samples)?);
        responses.push(EmpiricalMeasure::from_samples(&y_samples)?);
        match model {
            ModelId::II1 => truth[(i, 0)] = w1,
            ModelId::II2 | ModelId::II3 => {
                truth[(i, 0)] = w1;
                truth[(i, 1)] = w2;
            }
            ModelId::II4 => {
                truth[(i, 0)] = h1_sq.sqrt();
                truth[(i, 1)] = h2_sq.sqrt();
            }
            _ => unreachable!(),
        }
    }
    let ids = (1..=n).map(|i| i.to_string()).collect();
    Ok(GeneratedData {
        data: DatasetPair::new(predictors, responses, ids)?,
        true_predictors: truth,
        d0,
    })
}

/// Generates `n` observation pairs of the given model.
pub fn gen_dataset<R: Rng + ?Sized>(
    model: ModelId,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<GeneratedData> {
    if model.is_multivariate() {
        gen_model_ii(model, n, m, rng)
    } else {
        gen_model_i(model, n, m, rng)
    }
}

/// Deterministic per-replication RNG stream.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut raw = [0u8; 32];
    raw[..8].copy_from_slice(&seed.to_le_bytes());
    raw[8..16].copy_from_slice(&replication.to_le_bytes());
    raw[16] = 0x9e;
    raw[17] = 0x37;
    ChaCha8Rng::from_seed(raw)
}
