//! Agreement measures between estimated and true sufficient predictors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// n observations of k-dimensional predictor values.
#[derive(Debug, Clone)]
pub struct PredictorSample {
    rows: DMatrix<f64>,
}

impl PredictorSample {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() < 2 {
            return Err(Error::TooFewObservations { need: 2, found: rows.nrows() });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(0));
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn k(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }
}

/// An association value in [0, 1]; `degenerate` marks a zero-variance
/// input for which the ratio is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    pub value: f64,
    pub degenerate: bool,
}

/// Multivariate ranks: row i is the average of unit vectors from point i
/// to every other point; coincident points contribute zero.
pub fn multivariate_ranks(u: &PredictorSample) -> DMatrix<f64> {
    let n = u.n();
    let k = u.k();
    let x = u.rows();
    let mut out = DMatrix::zeros(n, k);
    for i in 0..n {
        for l in 0..n {
            let mut norm_sq = 0.0;
            for c in 0..k {
                let d = x[(l, c)] - x[(i, c)];
                norm_sq += d * d;
            }
            if norm_sq > 0.0 {
                let norm = norm_sq.sqrt();
                for c in 0..k {
                    out[(i, c)] += (x[(l, c)] - x[(i, c)]) / norm;
                }
            }
        }
        for c in 0..k {
            out[(i, c)] /= n as f64;
        }
    }
    out
}

fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let mut out = m.clone();
    for c in 0..m.ncols() {
        let mean = m.column(c).sum() / n;
        for r in 0..m.nrows() {
            out[(r, c)] -= mean;
        }
    }
    out
}

/// RV coefficient of the multivariate ranks:
/// tr(C_uv C_vu) / sqrt(tr(C_uu^2) tr(C_vv^2)) with 1/n covariances.
pub fn rvmr(u: &PredictorSample, v: &PredictorSample) -> Result<Association> {
    if u.n() != v.n() {
        return Err(Error::DimensionMismatch { expected: u.n(), found: v.n() });
    }
    let n = u.n() as f64;
    let ru = center_columns(&multivariate_ranks(u));
    let rv = center_columns(&multivariate_ranks(v));
    let cuv = ru.transpose() * &rv / n;
    let cuu = ru.transpose() * &ru / n;
    let cvv = rv.transpose() * &rv / n;
    let num = cuv.norm_squared(); // tr(C_uv C_vu) = ||C_uv||_F^2
    let den = (cuu.norm_squared() * cvv.norm_squared()).sqrt();
    if den <= 0.0 {
        return Ok(Association { value: 0.0, degenerate: true });
    }
    Ok(Association { value: (num / den).clamp(0.0, 1.0), degenerate: false })
}

fn euclid_dist_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                let diff = x[(i, c)] - x[(j, c)];
                s += diff * diff;
            }
            let v = s.sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn double_center(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let nf = n as f64;
    let row: Vec<f64> = (0..n).map(|i| d.row(i).sum() / nf).collect();
    let grand = row.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| d[(i, j)] - row[i] - row[j] + grand)
}

/// Sample distance correlation from double-centered pairwise Euclidean
/// distance matrices.
pub fn distance_correlation(u: &PredictorSample, v: &PredictorSample) -> Result<Association> {
    if u.n() != v.n() {
        return Err(Error::DimensionMismatch { expected: u.n(), found: v.n() });
    }
    let n2 = (u.n() * u.n()) as f64;
    let a = double_center(&euclid_dist_matrix(u.rows()));
    let b = double_center(&euclid_dist_matrix(v.rows()));
    let dcov2 = a.component_mul(&b).sum() / n2;
    let dvar_u = a.component_mul(&a).sum() / n2;
    let dvar_v = b.component_mul(&b).sum() / n2;
    let den = (dvar_u * dvar_v).sqrt();
    if den <= 0.0 {
        return Ok(Association { value: 0.0, degenerate: true });
    }
    Ok(Association { value: (dcov2 / den).max(0.0).sqrt().min(1.0), degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn sample(v: &[f64]) -> PredictorSample {
        PredictorSample::new(DMatrix::from_column_slice(v.len(), 1, v)).unwrap()
    }

    #[test]
    fn ranks_hand_values_1d() {
        let r = multivariate_ranks(&sample(&[1.0, 2.0, 3.0]));
        assert_abs_diff_eq!(r[(0, 0)], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(1, 0)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(2, 0)], -2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn ranks_identical_points_zero() {
        let r = multivariate_ranks(&sample(&[1.5, 1.5, 1.5]));
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ranks_translation_invariant() {
        let u = sample(&[0.3, -1.0, 2.0, 0.7]);
        let shifted = sample(&[10.3, 9.0, 12.0, 10.7]);
        assert_eq!(multivariate_ranks(&u), multivariate_ranks(&shifted));
    }

    #[test]
    fn rvmr_self_is_one() {
        let u = sample(&[1.0, 2.0, 3.0, 5.0]);
        let r = rvmr(&u, &u).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
        assert!(!r.degenerate);
    }

    #[test]
    fn rvmr_negation_is_one() {
        let u = sample(&[1.0, 2.0, 3.0]);
        let v = sample(&[-1.0, -2.0, -3.0]);
        assert_abs_diff_eq!(rvmr(&u, &v).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rvmr_symmetric() {
        let u = sample(&[0.0, 1.0, 4.0, 2.0]);
        let v = sample(&[3.0, -1.0, 0.5, 2.0]);
        assert_eq!(rvmr(&u, &v).unwrap().value, rvmr(&v, &u).unwrap().value);
    }

    #[test]
    fn rvmr_monotone_invariance_1d() {
        let u = sample(&[0.1, 0.9, 0.4, 0.7, 0.2]);
        let cubed = sample(&[0.1f64.powi(3), 0.9f64.powi(3), 0.4f64.powi(3), 0.7f64.powi(3), 0.2f64.powi(3)]);
        let v = sample(&[1.0, -0.5, 2.0, 0.3, 0.8]);
        assert_abs_diff_eq!(
            rvmr(&u, &v).unwrap().value,
            rvmr(&cubed, &v).unwrap().value,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rvmr_degenerate_flag() {
        let u = sample(&[1.0, 1.0, 1.0]);
        let v = sample(&[1.0, 2.0, 3.0]);
        let r = rvmr(&u, &v).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn independent_null_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draw = |rng: &mut ChaCha8Rng| {
            DMatrix::from_fn(500, 1, |_, _| StandardNormal.sample(rng))
        };
        let u = PredictorSample::new(draw(&mut rng)).unwrap();
        let v = PredictorSample::new(draw(&mut rng)).unwrap();
        assert!(rvmr(&u, &v).unwrap().value < 0.05);
        assert!(distance_correlation(&u, &v).unwrap().value < 0.1);
    }

    #[test]
    fn dcor_self_is_one_constant_is_degenerate() {
        let u = sample(&[1.0, 2.0, 5.0, 3.0]);
        assert_abs_diff_eq!(distance_correlation(&u, &u).unwrap().value, 1.0, epsilon = 1e-12);
        let c = sample(&[2.0, 2.0, 2.0, 2.0]);
        let r = distance_correlation(&u, &c).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn dcor_matches_brute_force_oracle() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 2.0, -1.0, 0.5, 0.5, 3.0, 2.0]);
        let y = DMatrix::from_row_slice(4, 1, &[1.0, 0.0, 2.0, -2.0]);
        let u = PredictorSample::new(x.clone()).unwrap();
        let v = PredictorSample::new(y.clone()).unwrap();
        let got = distance_correlation(&u, &v).unwrap().value;

        // straight-line reimplementation
        let n = 4usize;
        let dist = |m: &DMatrix<f64>, i: usize, j: usize| {
            let mut s = 0.0;
            for c in 0..m.ncols() {
                s += (m[(i, c)] - m[(j, c)]).powi(2);
            }
            s.sqrt()
        };
        let centered = |m: &DMatrix<f64>| {
            let mut d = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = dist(m, i, j);
                }
            }
            let rm: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
            let gm: f64 = rm.iter().sum::<f64>() / n as f64;
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    a[i][j] = d[i][j] - rm[i] - rm[j] + gm;
                }
            }
            a
        };
        let a = centered(&x);
        let b = centered(&y);
        let mean_prod = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += p[i][j] * q[i][j];
                }
            }
            s / (n * n) as f64
        };
        let oracle = (mean_prod(&a, &b) / (mean_prod(&a, &a) * mean_prod(&b, &b)).sqrt())
            .max(0.0)
            .sqrt();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
    }

    #[test]
    fn joint_permutation_invariance() {
        let u = sample(&[0.0, 1.0, 4.0, 2.0, -1.0]);
        let v = sample(&[3.0, -1.0, 0.5, 2.0, 1.0]);
        let perm = [4usize, 2, 0, 3, 1];
        let up = sample(&perm.map(|i| u.rows()[(i, 0)]));
        let vp = sample(&perm.map(|i| v.rows()[(i, 0)]));
        assert_abs_diff_eq!(
            rvmr(&u, &v).unwrap().value,
            rvmr(&up, &vp).unwrap().value,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            distance_correlation(&u, &v).unwrap().value,
            distance_correlation(&up, &vp).unwrap().value,
            epsilon = 1e-12
        );
    }
}
