//! Wasserstein, sliced-Wasserstein, and Hellinger distances.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::measures::EmpiricalMeasure;

/// Number of midpoint quantile levels used when two univariate samples have
/// different sizes (and for reference-measure distances in the simulators).
pub const QUANTILE_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    W2,
    Sw2,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::W2 => write!(f, "w2"),
            Metric::Sw2 => write!(f, "sw2"),
        }
    }
}

/// Random slicing directions for the sliced-Wasserstein Monte Carlo
/// estimate. A single spec (hence a single direction set) must be shared
/// by every pair of a distance matrix: that is what makes the estimate
/// symmetric and keeps SW2 below W2 up to Monte Carlo error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlicingSpec {
    pub l: usize,
    pub seed: u64,
    pub dim: usize,
}

impl SlicingSpec {
    pub fn new(l: usize, seed: u64, dim: usize) -> Result<Self> {
        if l < 1 {
            return Err(Error::InvalidParameter("L must be at least 1".into()));
        }
        if dim < 2 {
            return Err(Error::InvalidParameter(
                "slicing requires dimension >= 2".into(),
            ));
        }
        Ok(Self { l, seed, dim })
    }

    /// Unit directions drawn uniformly on the sphere: normalized standard
    /// normal vectors, deterministic in the seed.
    pub fn directions(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = rand_distr::StandardNormal;
        (0..self.l)
            .map(|_| loop {
                let g: Vec<f64> = (0..self.dim).map(|_| normal.sample(&mut rng)).collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    return g.iter().map(|v| v / norm).collect();
                }
            })
            .collect()
    }
}

/// Symmetric n x n matrix of pairwise distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub values: DMatrix<f64>,
    pub metric: Metric,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Square, header-free CSV dump for debugging.
    pub fn write_csv<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| self.values[(i, j)].to_string()).collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn w2_sorted(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        let m = a.len() as f64;
        let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (ss / m).sqrt()
    } else {
        // quantile form on a common midpoint grid
        let n = QUANTILE_GRID as f64;
        let q = |s: &[f64], p: f64| {
            let idx = (p * s.len() as f64).ceil() as usize;
            s[idx.clamp(1, s.len()) - 1]
        };
        let mut ss = 0.0;
        for j in 0..QUANTILE_GRID {
            let s = (j as f64 + 0.5) / n;
            let d = q(a, s) - q(b, s);
            ss += d * d;
        }
        (ss / n).sqrt()
    }
}

/// 2-Wasserstein distance between two univariate empirical measures: the
/// order-statistic formula for equal sample sizes, the quantile-grid form
/// otherwise.
pub fn w2_empirical_1d(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    if a.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: a.dim() });
    }
    if b.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: b.dim() });
    }
    Ok(w2_sorted(a.sorted(), b.sorted()))
}

/// W2 between two parametric univariate laws given their quantile
/// functions, via the midpoint quantile grid.
pub fn w2_quantile_fns<F, G>(qa: F, qb: G, grid: usize) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let n = grid as f64;
    let mut ss = 0.0;
    for j in 0..grid {
        let s = (j as f64 + 0.5) / n;
        let d = qa(s) - qb(s);
        ss += d * d;
    }
    (ss / n).sqrt()
}

fn project_sorted(m: &EmpiricalMeasure, theta: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = m
        .iter_points()
        .map(|p| p.iter().zip(theta).map(|(x, t)| x * t).sum())
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn sw2_with_directions(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    directions: &[Vec<f64>],
) -> f64 {
    let mut acc = 0.0;
    for theta in directions {
        let pa = project_sorted(a, theta);
        let pb = project_sorted(b, theta);
        let w = w2_sorted(&pa, &pb);
        acc += w * w;
    }
    (acc / directions.len() as f64).sqrt()
}

/// Sliced 2-Wasserstein distance by Monte Carlo over the spec's
/// directions. Univariate inputs bypass slicing and return the exact 1-D
/// distance.
pub fn sw2_empirical(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    slicing: &SlicingSpec,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if a.dim() == 1 {
        return w2_empirical_1d(a, b);
    }
    if slicing.dim != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: slicing.dim });
    }
    Ok(sw2_with_directions(a, b, &slicing.directions()))
}

/// Sliced-Wasserstein estimate together with the Monte Carlo standard
/// error of the estimate (delta method through the square root).
pub fn sw2_with_se(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    slicing: &SlicingSpec,
) -> Result<(f64, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if a.dim() == 1 {
        return Ok((w2_empirical_1d(a, b)?, 0.0));
    }
    let dirs = slicing.directions();
    let sq: Vec<f64> = dirs
        .iter()
        .map(|theta| {
            let w = w2_sorted(&project_sorted(a, theta), &project_sorted(b, theta));
            w * w
        })
        .collect();
    let l = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / l;
    let var = sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (l - 1.0).max(1.0);
    let se_mean = (var / l).sqrt();
    let sw = mean.max(0.0).sqrt();
    let se = if sw > 1e-12 { se_mean / (2.0 * sw) } else { se_mean.sqrt() };
    Ok((sw, se))
}

fn check_covariance(s: &DMatrix<f64>) -> Result<()> {
    if (s - s.transpose()).norm() > 1e-8 * s.norm().max(1.0) {
        return Err(Error::IndefiniteCovariance(f64::NAN));
    }
    let eig = sym_eig(s)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -1e-10 {
        return Err(Error::IndefiniteCovariance(min));
    }
    Ok(())
}

/// Symmetric PSD square root via eigendecomposition with clamping at 0.
fn psd_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(s)?;
    let d = DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| l.max(0.0).sqrt()),
    );
    Ok(&eig.vectors * DMatrix::from_diagonal(&d) * eig.vectors.transpose())
}

/// Closed-form 2-Wasserstein distance between two Gaussians.
pub fn w2_gaussian(
    m1: &DVector<f64>,
    s1: &DMatrix<f64>,
    m2: &DVector<f64>,
    s2: &DMatrix<f64>,
) -> Result<f64> {
    if m1.len() != m2.len() || s1.nrows() != m1.len() || s2.nrows() != m2.len() {
        return Err(Error::DimensionMismatch { expected: m1.len(), found: m2.len() });
    }
    check_covariance(s1)?;
    check_covariance(s2)?;
    let root2 = psd_sqrt(s2)?;
    let inner = &root2 * s1 * &root2;
    let cross: f64 = sym_eig(&inner)?
        .values
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    let dm = m1 - m2;
    let sq = dm.norm_squared() + s1.trace() + s2.trace() - 2.0 * cross;
    Ok(sq.max(0.0).sqrt())
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Hellinger distance between Beta(a1, b1) and Beta(a2, b2) in the
/// one-minus-Bhattacharyya convention:
/// H = 1 - B((a1+a2)/2, (b1+b2)/2) / sqrt(B(a1,b1) B(a2,b2)).
pub fn hellinger_beta(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<f64> {
    for &p in &[a1, b1, a2, b2] {
        if !(p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Beta parameters must be positive, got {p}"
            )));
        }
    }
    let bc = (ln_beta_fn((a1 + a2) / 2.0, (b1 + b2) / 2.0)
        - 0.5 * (ln_beta_fn(a1, b1) + ln_beta_fn(a2, b2)))
    .exp();
    Ok((1.0 - bc).clamp(0.0, 1.0))
}

/// Squared Hellinger distance between two Gaussians (standard closed
/// form).
pub fn hellinger_gaussian_sq(
    m1: &DVector<f64>,
    s1: &DMatrix<f64>,
    m2: &DVector<f64>,
    s2: &DMatrix<f64>,
) -> Result<f64> {
    if m1.len() != m2.len() {
        return Err(Error::DimensionMismatch { expected: m1.len(), found: m2.len() });
    }
    check_covariance(s1)?;
    check_covariance(s2)?;
    let avg = (s1 + s2) * 0.5;
    let det1 = s1.determinant();
    let det2 = s2.determinant();
    let det_avg = avg.determinant();
    if det_avg <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let dm = m1 - m2;
    let solve = avg
        .clone()
        .cholesky()
        .ok_or(Error::SingularCovariance)?
        .solve(&dm);
    let quad = dm.dot(&solve);
    let h2 = 1.0 - (det1.max(0.0).powf(0.25) * det2.max(0.0).powf(0.25) / det_avg.sqrt())
        * (-0.125 * quad).exp();
    Ok(h2.clamp(0.0, 1.0))
}

/// Hellinger distance between two Gaussians, H = sqrt(H^2).
pub fn hellinger_gaussian(
    m1: &DVector<f64>,
    s1: &DMatrix<f64>,
    m2: &DVector<f64>,
    s2: &DMatrix<f64>,
) -> Result<f64> {
    Ok(hellinger_gaussian_sq(m1, s1, m2, s2)?.sqrt())
}

fn pair_distance(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    metric: Metric,
    directions: Option<&[Vec<f64>]>,
) -> Result<f64> {
    match metric {
        Metric::W2 => w2_empirical_1d(a, b),
        Metric::Sw2 => {
            if a.dim() == 1 {
                w2_empirical_1d(a, b)
            } else {
                let dirs = directions.ok_or_else(|| {
                    Error::InvalidParameter("SW2 on r >= 2 requires a SlicingSpec".into())
                })?;
                Ok(sw2_with_directions(a, b, dirs))
            }
        }
    }
}

fn validate_for_matrix(
    ms: &[EmpiricalMeasure],
    metric: Metric,
    slicing: Option<&SlicingSpec>,
) -> Result<Option<Vec<Vec<f64>>>> {
    if ms.len() < 2 {
        return Err(Error::TooFewObservations { need: 2, found: ms.len() });
    }
    let dim = ms[0].dim();
    if let Some(i) = ms.iter().position(|m| m.dim() != dim) {
        return Err(Error::RaggedDimensions(i));
    }
    if metric == Metric::W2 && dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: dim });
    }
    if metric == Metric::Sw2 && dim >= 2 {
        let spec = slicing.ok_or_else(|| {
            Error::InvalidParameter("SW2 on r >= 2 requires a SlicingSpec".into())
        })?;
        if spec.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: spec.dim });
        }
        return Ok(Some(spec.directions()));
    }
    Ok(None)
}

fn fill_pairs(
    ms: &[EmpiricalMeasure],
    metric: Metric,
    directions: Option<&[Vec<f64>]>,
    parallel: bool,
) -> Result<DMatrix<f64>> {
    let n = ms.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |k| (i, k)))
        .collect();
    let compute = |&(i, k): &(usize, usize)| pair_distance(&ms[i], &ms[k], metric, directions);

    let values: Vec<f64> = run_pairs(&pairs, compute, parallel)?;
    let mut out = DMatrix::zeros(n, n);
    for (&(i, k), v) in pairs.iter().zip(values) {
        out[(i, k)] = v;
        out[(k, i)] = v;
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_pairs<F>(pairs: &[(usize, usize)], compute: F, parallel: bool) -> Result<Vec<f64>>
where
    F: Fn(&(usize, usize)) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    if parallel {
        pairs.par_iter().map(|p| compute(p)).collect()
    } else {
        pairs.iter().map(|p| compute(p)).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn run_pairs<F>(pairs: &[(usize, usize)], compute: F, _parallel: bool) -> Result<Vec<f64>>
where
    F: Fn(&(usize, usize)) -> Result<f64> + Sync,
{
    pairs.iter().map(|p| compute(p)).collect()
}

/// Symmetric pairwise distance matrix with exact zero diagonal. Each
/// unordered pair is computed once and mirrored; with the `parallel`
/// feature the pairs are distributed across threads.
pub fn pairwise_matrix(
    ms: &[EmpiricalMeasure],
    metric: Metric,
    slicing: Option<&SlicingSpec>,
) -> Result<DistanceMatrix> {
    let directions = validate_for_matrix(ms, metric, slicing)?;
    let values = fill_pairs(ms, metric, directions.as_deref(), true)?;
    Ok(DistanceMatrix { values, metric })
}

/// Single-threaded variant of [`pairwise_matrix`], kept as a comparison
/// baseline for the benches.
pub fn pairwise_matrix_seq(
    ms: &[EmpiricalMeasure],
    metric: Metric,
    slicing: Option<&SlicingSpec>,
) -> Result<DistanceMatrix> {
    let directions = validate_for_matrix(ms, metric, slicing)?;
    let values = fill_pairs(ms, metric, directions.as_deref(), false)?;
    Ok(DistanceMatrix { values, metric })
}

/// Rectangular distance block between two measure lists (rows index `a`,
/// columns index `b`), sharing one direction set with the training matrix.
pub fn cross_matrix(
    a: &[EmpiricalMeasure],
    b: &[EmpiricalMeasure],
    metric: Metric,
    slicing: Option<&SlicingSpec>,
) -> Result<DMatrix<f64>> {
    if b.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = b[0].dim();
    for (i, m) in a.iter().chain(b.iter()).enumerate() {
        if m.dim() != dim {
            return Err(Error::RaggedDimensions(i));
        }
    }
    let directions = if metric == Metric::Sw2 && dim >= 2 {
        let spec = slicing.ok_or_else(|| {
            Error::InvalidParameter("SW2 on r >= 2 requires a SlicingSpec".into())
        })?;
        Some(spec.directions())
    } else {
        None
    };
    let mut out = DMatrix::zeros(a.len(), b.len());
    for (i, ma) in a.iter().enumerate() {
        for (j, mb) in b.iter().enumerate() {
            out[(i, j)] = pair_distance(ma, mb, metric, directions.as_deref())?;
        }
    }
    Ok(out)
}
