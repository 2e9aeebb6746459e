//! Tuning-parameter selection: GCV for the ridge constants and the
//! BIC-type criterion for the reduction dimension.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{ridge_inverse_apply, sym_eig};

/// Grid the ridge constants are searched over.
pub const EPSILON_GRID: [f64; 7] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];

#[derive(Debug, Clone)]
pub struct OrderSelectionResult {
    pub d_hat: usize,
    /// Criterion values for k = 0..=k_max.
    pub scores: Vec<f64>,
    pub c0: f64,
}

/// GCV criterion for the ridge constant of the predictor side:
/// ||K_Y - K_X (K_X + eps lmax I)^-1 K_Y||_F^2 over the squared trace of
/// the residual smoother. Uses the uncentered kernel matrices.
pub fn gcv(kx: &DMatrix<f64>, ky: &DMatrix<f64>, eps: f64) -> Result<f64> {
    let n = kx.nrows();
    if ky.nrows() != n || ky.ncols() != n || kx.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ky.nrows() });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let lmax = sym_eig(kx)?.values.first().copied().unwrap_or(0.0).max(0.0);
    let ridge = eps * if lmax > 0.0 { lmax } else { 1.0 };
    // S = K_X (K_X + ridge I)^-1, symmetric since the factors commute.
    let s = ridge_inverse_apply(kx, ridge, kx)?;
    let num = (ky - &s * ky).norm_squared();
    let den = n as f64 - s.trace();
    if den.abs() < 1e-12 {
        return Err(Error::DegenerateGcv);
    }
    Ok(num / (den * den))
}

/// Minimizes GCV for each side over [`EPSILON_GRID`]; ties break to the
/// smallest grid value.
pub fn select_epsilon(kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> Result<(f64, f64)> {
    let pick = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> Result<f64> {
        let mut best: Option<(f64, f64)> = None;
        for &eps in &EPSILON_GRID {
            match gcv(a, b, eps) {
                Ok(score) => {
                    if best.map_or(true, |(s, _)| score < s) {
                        best = Some((score, eps));
                    }
                }
                Err(Error::DegenerateGcv) => continue,
                Err(e) => return Err(e),
            }
        }
        best.map(|(_, e)| e).ok_or(Error::DegenerateGcv)
    };
    Ok((pick(kx, ky)?, pick(ky, kx)?))
}

/// BIC-type order determination:
/// G_n(k) = sum_{i<=k} lambda_i - c0 lambda_1 n^{-1/2} log(n) k,
/// d_hat = argmax over k = 0..=k_max with smallest-k tie-break.
pub fn bic_order(
    eigenvalues: &[f64],
    n: usize,
    c0: f64,
    k_max: Option<usize>,
) -> Result<OrderSelectionResult> {
    if n < 2 {
        return Err(Error::TooFewObservations { need: 2, found: n });
    }
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    let lambda1 = eigenvalues.first().copied().unwrap_or(0.0);
    if lambda1 < -1e-8 {
        return Err(Error::InvalidParameter(format!(
            "leading eigenvalue is negative: {lambda1}"
        )));
    }
    let lambda1 = lambda1.max(0.0);
    let k_max = k_max.unwrap_or(eigenvalues.len()).min(eigenvalues.len());
    let penalty = c0 * lambda1 * (n as f64).ln() / (n as f64).sqrt();

    let mut scores = Vec::with_capacity(k_max + 1);
    let mut partial = 0.0;
    scores.push(0.0);
    for k in 1..=k_max {
        partial += eigenvalues[k - 1];
        scores.push(partial - penalty * k as f64);
    }
    let mut d_hat = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[d_hat] {
            d_hat = k;
        }
    }
    Ok(OrderSelectionResult { d_hat, scores, c0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &a * a.transpose()
    }

    #[test]
    fn gcv_zero_response() {
        let kx = random_psd(4, 1);
        let ky = DMatrix::zeros(4, 4);
        assert_abs_diff_eq!(gcv(&kx, &ky, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn gcv_hand_value_n1() {
        let kx = DMatrix::from_row_slice(1, 1, &[2.0]);
        let ky = DMatrix::from_row_slice(1, 1, &[1.0]);
        // ridge = eps * lmax = 2; S = 2/4; num = (1 - 1/2)^2; den = (1 - 1/2)^2
        assert_abs_diff_eq!(gcv(&kx, &ky, 1.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gcv_matches_elementwise_oracle() {
        let kx = random_psd(5, 3);
        let ky = random_psd(5, 4);
        let eps = 0.01;
        let got = gcv(&kx, &ky, eps).unwrap();

        let lmax = sym_eig(&kx).unwrap().values[0];
        let smoother = &kx
            * (kx.clone() + DMatrix::identity(5, 5) * (eps * lmax))
                .try_inverse()
                .unwrap();
        let resid = &ky - &smoother * &ky;
        let mut num = 0.0;
        for v in resid.iter() {
            num += v * v;
        }
        let mut tr = 0.0;
        for i in 0..5 {
            tr += 1.0 - smoother[(i, i)];
        }
        assert_abs_diff_eq!(got, num / (tr * tr), epsilon = 1e-10 * got.max(1.0));
    }

    #[test]
    fn select_epsilon_tie_breaks_small() {
        let kx = random_psd(4, 9);
        let ky = DMatrix::zeros(4, 4);
        // flat zero GCV in eps: smallest grid value wins
        let (ex, _) = select_epsilon(&kx, &ky).unwrap();
        assert_eq!(ex, 1e-6);
    }

    #[test]
    fn select_epsilon_matches_exhaustive_scan() {
        let kx = random_psd(6, 21);
        let ky = random_psd(6, 22);
        let (ex, ey) = select_epsilon(&kx, &ky).unwrap();
        let scan = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            EPSILON_GRID
                .iter()
                .copied()
                .min_by(|&p, &q| {
                    gcv(a, b, p).unwrap().partial_cmp(&gcv(a, b, q).unwrap()).unwrap()
                })
                .unwrap()
        };
        assert_eq!(ex, scan(&kx, &ky));
        assert_eq!(ey, scan(&ky, &kx));
    }

    #[test]
    fn gcv_continuous_in_eps() {
        let kx = random_psd(5, 30);
        let ky = random_psd(5, 31);
        let a = gcv(&kx, &ky, 0.01).unwrap();
        let b = gcv(&kx, &ky, 0.0100001).unwrap();
        assert!((a - b).abs() < 1e-3 * a.max(1.0));
    }

    #[test]
    fn bic_all_zero_eigenvalues() {
        let r = bic_order(&[0.0, 0.0, 0.0], 100, 2.0, None).unwrap();
        assert_eq!(r.d_hat, 0);
        assert_eq!(r.scores[0], 0.0);
    }

    #[test]
    fn bic_hand_example() {
        let lambda = [0.9, 0.05, 0.01];
        let r = bic_order(&lambda, 100, 2.0, None).unwrap();
        // single-step penalty = 2 * 0.9 * 0.1 * ln(100)
        let step = 2.0 * 0.9 * 0.1 * (100f64).ln();
        assert_abs_diff_eq!(r.scores[1], 0.9 - step, epsilon = 1e-12);
        assert_eq!(r.d_hat, 1);

        let r4 = bic_order(&lambda, 100, 4.0, None).unwrap();
        assert_eq!(r4.d_hat, 0);
    }

    #[test]
    fn bic_scale_equivariance() {
        let lambda = [0.9, 0.05, 0.01];
        for s in [0.1, 10.0, 12345.0] {
            let scaled: Vec<f64> = lambda.iter().map(|v| v * s).collect();
            let a = bic_order(&lambda, 100, 2.0, None).unwrap();
            let b = bic_order(&scaled, 100, 2.0, None).unwrap();
            assert_eq!(a.d_hat, b.d_hat);
        }
    }

    #[test]
    fn bic_nonincreasing_in_c0() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..20 {
            let mut lambda: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let d2 = bic_order(&lambda, 50, 2.0, None).unwrap().d_hat;
            let d4 = bic_order(&lambda, 50, 4.0, None).unwrap().d_hat;
            assert!(d4 <= d2);
        }
    }
}
