//! Replicated experiment runner and the real-data estimation path.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsir::{fit, GsirFit, RegularizationSpec, TrainRefs, Variant};
use crate::kernels::{default_gamma, gram_matrix, KernelFamily, KernelSpec};
use crate::measures::{load_measures_csv, DatasetPair, EmpiricalMeasure};
use crate::metrics::{distance_correlation, rvmr, PredictorSample};
use crate::ot::{pairwise_matrix, Metric, SlicingSpec};
use crate::selection::{bic_order, select_epsilon};
use crate::simgen::{gen_dataset, replication_rng, ModelId};

fn default_n() -> usize {
    100
}
fn default_m() -> usize {
    50
}
fn default_l() -> usize {
    50
}
fn default_reps() -> usize {
    20
}
fn default_seed() -> u64 {
    0
}
fn default_variant() -> Variant {
    Variant::Gsir1
}
fn default_family() -> KernelFamily {
    KernelFamily::Gaussian
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Synthetic scenario id ("I-1".."II-4"); absent in real-data mode.
    pub scenario: Option<String>,
    /// Predictor / response CSV paths for real-data mode.
    pub x_path: Option<String>,
    pub y_path: Option<String>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_l")]
    pub l: usize,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_family")]
    pub kernel: KernelFamily,
    /// Fixed ridge constants; GCV-selected when absent.
    #[serde(default)]
    pub eps_x: Option<f64>,
    #[serde(default)]
    pub eps_y: Option<f64>,
    /// Fixed reduction dimension; BIC-selected when absent.
    #[serde(default)]
    pub d: Option<usize>,
    /// Distance for real-data mode; inferred from the data dimension
    /// when absent.
    #[serde(default)]
    pub metric: Option<Metric>,
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.scenario.is_none() && (self.x_path.is_none() || self.y_path.is_none()) {
            return Err(Error::Config(
                "either a scenario or both --x and --y paths are required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub variant: Variant,
    pub n: usize,
    pub m: usize,
    pub replication: usize,
    pub rvmr: f64,
    pub dcor: f64,
    pub d_hat: usize,
    pub eps_x: f64,
    pub eps_y: f64,
    /// Measured per-replication wall time. Kept out of the emitted CSV
    /// so that (config, seed) fully determines the output bytes.
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub replications: usize,
    pub failures: usize,
    pub mean_rvmr: f64,
    pub se_rvmr: f64,
    pub mean_dcor: f64,
    pub se_dcor: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
    pub failures: Vec<(usize, String)>,
}

struct FittedReplication {
    fit: GsirFit,
    eps_x: f64,
    eps_y: f64,
    d_hat: usize,
    d_use: usize,
}

/// Shared train-side pipeline: distances, bandwidths, GCV, fit, BIC.
fn fit_pipeline(
    train_x: &[EmpiricalMeasure],
    train_y: &[EmpiricalMeasure],
    cfg: &ExperimentConfig,
    slicing_x: Option<SlicingSpec>,
    slicing_y: Option<SlicingSpec>,
) -> Result<FittedReplication> {
    let n = train_x.len();
    let metric_x = if train_x[0].dim() == 1 { Metric::W2 } else { Metric::Sw2 };
    let metric_y = if train_y[0].dim() == 1 { Metric::W2 } else { Metric::Sw2 };
    let dx = pairwise_matrix(train_x, metric_x, slicing_x.as_ref())?;
    let dy = pairwise_matrix(train_y, metric_y, slicing_y.as_ref())?;
    let spec_x = KernelSpec::new(cfg.kernel, default_gamma(&dx)?)?;
    let spec_y = KernelSpec::new(cfg.kernel, default_gamma(&dy)?)?;
    let gx = gram_matrix(&dx, spec_x)?;
    let gy = gram_matrix(&dy, spec_y)?;

    let (eps_x, eps_y) = match (cfg.eps_x, cfg.eps_y) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            let (gx_eps, gy_eps) = select_epsilon(&gx.k, &gy.k)?;
            (cfg.eps_x.unwrap_or(gx_eps), cfg.eps_y.unwrap_or(gy_eps))
        }
    };
    let reg = RegularizationSpec::new(eps_x, eps_y)?;
    let d_fit = cfg.d.unwrap_or(n).min(n);
    let refs = TrainRefs {
        measures: train_x.to_vec(),
        kernel: spec_x,
        metric: metric_x,
        slicing: slicing_x,
    };
    let fitted = fit(&gx, &gy, reg, cfg.variant, d_fit, refs)?;
    let d_hat = match cfg.d {
        Some(d) => d,
        None => bic_order(&fitted.eigenvalues, n, cfg.variant.c0(), None)?.d_hat,
    };
    let d_use = d_hat.clamp(1, d_fit);
    Ok(FittedReplication { fit: fitted, eps_x, eps_y, d_hat, d_use })
}

fn run_replication(model: ModelId, cfg: &ExperimentConfig, rep: usize) -> Result<ResultRow> {
    let start = Instant::now();
    let n = cfg.n;
    let mut rng = replication_rng(cfg.seed, rep as u64);
    let generated = gen_dataset(model, 2 * n, cfg.m, &mut rng)?;
    let (slicing_x, slicing_y) = if model.is_multivariate() {
        let sx = SlicingSpec::new(cfg.l, rng.random(), 2)?;
        let sy = SlicingSpec::new(cfg.l, rng.random(), 2)?;
        (Some(sx), Some(sy))
    } else {
        (None, None)
    };

    let train_x = &generated.data.predictors[..n];
    let train_y = &generated.data.responses[..n];
    let test_x = &generated.data.predictors[n..];

    let rep_fit = fit_pipeline(train_x, train_y, cfg, slicing_x, slicing_y)?;
    let preds = rep_fit.fit.predictors_outsample(test_x)?;
    let est = PredictorSample::new(preds.columns(0, rep_fit.d_use).into_owned())?;
    let truth = PredictorSample::new(generated.true_predictors.rows(n, n).into_owned())?;

    let rv = rvmr(&est, &truth)?;
    let dc = distance_correlation(&est, &truth)?;
    Ok(ResultRow {
        scenario: model.to_string(),
        variant: cfg.variant,
        n,
        m: cfg.m,
        replication: rep,
        rvmr: rv.value,
        dcor: dc.value,
        d_hat: rep_fit.d_hat,
        eps_x: rep_fit.eps_x,
        eps_y: rep_fit.eps_y,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(feature = "parallel")]
fn run_replications(model: ModelId, cfg: &ExperimentConfig) -> Vec<Result<ResultRow>> {
    use rayon::prelude::*;
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(model, cfg, rep))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_replications(model: ModelId, cfg: &ExperimentConfig) -> Vec<Result<ResultRow>> {
    (0..cfg.replications)
        .map(|rep| run_replication(model, cfg, rep))
        .collect()
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let xs: Vec<f64> = values.collect();
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the replicated synthetic benchmark. Failed replications are
/// reported and skipped; result rows come back in replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let scenario = cfg
        .scenario
        .as_deref()
        .ok_or_else(|| Error::Config("run mode requires --scenario".into()))?;
    let model: ModelId = scenario.parse()?;

    let results = run_replications(model, cfg);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    let (mean_rvmr, se_rvmr) = mean_se(rows.iter().map(|r| r.rvmr));
    let (mean_dcor, se_dcor) = mean_se(rows.iter().map(|r| r.dcor));
    Ok(ExperimentOutput {
        summary: Summary {
            replications: cfg.replications,
            failures: failures.len(),
            mean_rvmr,
            se_rvmr,
            mean_dcor,
            se_dcor,
        },
        rows,
        failures,
    })
}

/// Writes rows plus a commented summary trailer. Byte-deterministic in
/// (config, seed).
pub fn write_results_csv<W: Write + ?Sized>(w: &mut W, out: &ExperimentOutput) -> Result<()> {
    writeln!(w, "scenario,variant,n,m,replication,rvmr,dcor,d_hat,eps_x,eps_y")?;
    for r in &out.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario, r.variant, r.n, r.m, r.replication, r.rvmr, r.dcor, r.d_hat, r.eps_x,
            r.eps_y
        )?;
    }
    let s = &out.summary;
    writeln!(w, "# replications={} failures={}", s.replications, s.failures)?;
    writeln!(w, "# mean_rvmr={} se_rvmr={}", s.mean_rvmr, s.se_rvmr)?;
    writeln!(w, "# mean_dcor={} se_dcor={}", s.mean_dcor, s.se_dcor)?;
    for (rep, msg) in &out.failures {
        writeln!(w, "# failed replication {rep}: {msg}")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RealDataOutput {
    pub ids: Vec<String>,
    /// n x d_hat sufficient predictor values at the observations.
    pub predictors: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub d_hat: usize,
    pub eps_x: f64,
    pub eps_y: f64,
    pub fit: GsirFit,
}

/// Fits on all observations of a predictor/response CSV pair and returns
/// plot-ready per-observation predictors.
pub fn run_real_data(cfg: &ExperimentConfig) -> Result<RealDataOutput> {
    let x_path = cfg
        .x_path
        .as_deref()
        .ok_or_else(|| Error::Config("fit mode requires --x".into()))?;
    let y_path = cfg
        .y_path
        .as_deref()
        .ok_or_else(|| Error::Config("fit mode requires --y".into()))?;
    let xs = load_measures_csv(x_path)?;
    let ys = load_measures_csv(y_path)?;

    for id in &xs.ids {
        if !ys.ids.contains(id) {
            return Err(Error::IdMismatch(format!("id '{id}' missing from response file")));
        }
    }
    for id in &ys.ids {
        if !xs.ids.contains(id) {
            return Err(Error::IdMismatch(format!("id '{id}' missing from predictor file")));
        }
    }
    let responses: Vec<EmpiricalMeasure> = xs
        .ids
        .iter()
        .map(|id| {
            let k = ys.ids.iter().position(|y| y == id).unwrap();
            ys.measures[k].clone()
        })
        .collect();
    let data = DatasetPair::new(xs.measures, responses, xs.ids)?;

    let mut rng = replication_rng(cfg.seed, 0);
    let dim_x = data.predictors[0].dim();
    let dim_y = data.responses[0].dim();
    let slicing_x = if dim_x >= 2 {
        Some(SlicingSpec::new(cfg.l, rng.random(), dim_x)?)
    } else {
        None
    };
    let slicing_y = if dim_y >= 2 {
        Some(SlicingSpec::new(cfg.l, rng.random(), dim_y)?)
    } else {
        None
    };
    let rep_fit = fit_pipeline(&data.predictors, &data.responses, cfg, slicing_x, slicing_y)?;
    let all = rep_fit.fit.predictors_insample();
    Ok(RealDataOutput {
        ids: data.ids,
        predictors: all.columns(0, rep_fit.d_use).into_owned(),
        eigenvalues: rep_fit.fit.eigenvalues.clone(),
        d_hat: rep_fit.d_hat,
        eps_x: rep_fit.eps_x,
        eps_y: rep_fit.eps_y,
        fit: rep_fit.fit,
    })
}

/// Predictor table with the eigenvalue spectrum as a commented trailer.
pub fn write_real_data_csv<W: Write + ?Sized>(w: &mut W, out: &RealDataOutput) -> Result<()> {
    let d = out.predictors.ncols();
    let mut header = vec!["id".to_string()];
    for j in 1..=d {
        header.push(format!("sp{j}"));
    }
    writeln!(w, "{}", header.join(","))?;
    for (i, id) in out.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        for j in 0..d {
            rec.push(out.predictors[(i, j)].to_string());
        }
        writeln!(w, "{}", rec.join(","))?;
    }
    writeln!(w, "# d_hat={} eps_x={} eps_y={}", out.d_hat, out.eps_x, out.eps_y)?;
    let spectrum: Vec<String> = out.eigenvalues.iter().map(|v| v.to_string()).collect();
    writeln!(w, "# eigenvalues={}", spectrum.join(","))?;
    Ok(())
}

pub fn write_to_path_or_stdout<F>(path: Option<&str>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(Path::new(p))?;
            write(&mut f)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::write_measures_csv;
    use tempfile::tempdir;

    fn small_cfg(scenario: &str) -> ExperimentConfig {
        ExperimentConfig {
            scenario: Some(scenario.to_string()),
            x_path: None,
            y_path: None,
            n: 20,
            m: 15,
            l: 10,
            replications: 3,
            seed: 42,
            variant: Variant::Gsir1,
            kernel: KernelFamily::Gaussian,
            eps_x: None,
            eps_y: None,
            d: None,
            metric: None,
            out: None,
        }
    }

    #[test]
    fn bookkeeping_three_rows() {
        let out = run_experiment(&small_cfg("I-1")).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert_eq!(out.summary.failures, 0);
        for (i, r) in out.rows.iter().enumerate() {
            assert_eq!(r.replication, i);
            assert!(r.rvmr >= 0.0 && r.rvmr <= 1.0);
            assert!(r.dcor >= 0.0 && r.dcor <= 1.0);
        }
    }

    #[test]
    fn summary_recomputable_from_rows() {
        let out = run_experiment(&small_cfg("I-2")).unwrap();
        let n = out.rows.len() as f64;
        let mean = out.rows.iter().map(|r| r.rvmr).sum::<f64>() / n;
        assert!((mean - out.summary.mean_rvmr).abs() < 1e-12);
        let var = out
            .rows
            .iter()
            .map(|r| (r.rvmr - mean) * (r.rvmr - mean))
            .sum::<f64>()
            / (n - 1.0);
        assert!(((var / n).sqrt() - out.summary.se_rvmr).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_identical_bytes() {
        let cfg = small_cfg("II-2");
        let render = || {
            let out = run_experiment(&cfg).unwrap();
            let mut buf = Vec::new();
            write_results_csv(&mut buf, &out).unwrap();
            buf
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn real_data_round_trip_matches_in_memory() {
        let dir = tempdir().unwrap();
        let mut rng = replication_rng(3, 0);
        let g = gen_dataset(ModelId::I1, 12, 10, &mut rng).unwrap();
        let xp = dir.path().join("x.csv");
        let yp = dir.path().join("y.csv");
        write_measures_csv(&xp, &g.data.ids, &g.data.predictors).unwrap();
        write_measures_csv(&yp, &g.data.ids, &g.data.responses).unwrap();

        let cfg = ExperimentConfig {
            scenario: None,
            x_path: Some(xp.to_string_lossy().into_owned()),
            y_path: Some(yp.to_string_lossy().into_owned()),
            n: 12,
            m: 10,
            l: 10,
            replications: 1,
            seed: 5,
            variant: Variant::Gsir1,
            kernel: KernelFamily::Gaussian,
            eps_x: None,
            eps_y: None,
            d: None,
            metric: None,
            out: None,
        };
        let out = run_real_data(&cfg).unwrap();
        assert_eq!(out.ids.len(), 12);

        // in-memory pipeline on the same observations
        let mem = fit_pipeline(&g.data.predictors, &g.data.responses, &cfg, None, None).unwrap();
        let mem_preds = mem.fit.predictors_insample();
        for i in 0..12 {
            for j in 0..out.predictors.ncols() {
                assert!((out.predictors[(i, j)] - mem_preds[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn real_data_extra_id_is_named() {
        let dir = tempdir().unwrap();
        std::fs::write(dir.path().join("x.csv"), "id,v1\na,1\na,2\nb,1\nb,3\n").unwrap();
        std::fs::write(
            dir.path().join("y.csv"),
            "id,v1\na,1\na,2\nb,1\nb,3\nzz,9\nzz,8\n",
        )
        .unwrap();
        let cfg = ExperimentConfig {
            scenario: None,
            x_path: Some(dir.path().join("x.csv").to_string_lossy().into_owned()),
            y_path: Some(dir.path().join("y.csv").to_string_lossy().into_owned()),
            ..small_cfg("I-1")
        };
        let err = run_real_data(&cfg).unwrap_err();
        assert!(err.to_string().contains("zz"), "{err}");
    }
}
