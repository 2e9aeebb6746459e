use clap::{Args, Parser, Subcommand};
use wgsir::gsir::Variant;
use wgsir::harness::{
    run_experiment, run_real_data, write_real_data_csv, write_results_csv,
    write_to_path_or_stdout, ExperimentConfig,
};
use wgsir::kernels::KernelFamily;
use wgsir::ot::Metric;

#[derive(Parser)]
#[command(name = "wgsir", about = "Kernel dimension reduction for distributional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Number of slicing directions for multivariate distances.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<KernelFamily>,
    #[arg(long)]
    eps_x: Option<f64>,
    #[arg(long)]
    eps_y: Option<f64>,
    /// Fixed reduction dimension (skips order selection).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated synthetic benchmark scenario.
    Run {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit on predictor/response CSV files and emit sufficient predictors.
    Fit {
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long, value_parser = parse_metric)]
        metric: Option<Metric>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    match s.to_ascii_lowercase().as_str() {
        "gsir1" => Ok(Variant::Gsir1),
        "gsir2" => Ok(Variant::Gsir2),
        _ => Err(format!("unknown variant '{s}' (expected gsir1 or gsir2)")),
    }
}

fn parse_kernel(s: &str) -> Result<KernelFamily, String> {
    match s.to_ascii_lowercase().as_str() {
        "gaussian" => Ok(KernelFamily::Gaussian),
        "laplacian" => Ok(KernelFamily::Laplacian),
        _ => Err(format!("unknown kernel '{s}' (expected gaussian or laplacian)")),
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    match s.to_ascii_lowercase().as_str() {
        "w2" => Ok(Metric::W2),
        "sw2" => Ok(Metric::Sw2),
        _ => Err(format!("unknown metric '{s}' (expected w2 or sw2)")),
    }
}

fn base_config(common: &Common) -> Result<ExperimentConfig, wgsir::error::Error> {
    let mut cfg: ExperimentConfig = match &common.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => serde_json::from_str("{}")?,
    };
    if let Some(v) = common.n {
        cfg.n = v;
    }
    if let Some(v) = common.m {
        cfg.m = v;
    }
    if let Some(v) = common.l {
        cfg.l = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.variant {
        cfg.variant = v;
    }
    if let Some(v) = common.kernel {
        cfg.kernel = v;
    }
    if common.eps_x.is_some() {
        cfg.eps_x = common.eps_x;
    }
    if common.eps_y.is_some() {
        cfg.eps_y = common.eps_y;
    }
    if common.d.is_some() {
        cfg.d = common.d;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, reps, common } => (|| {
            let mut cfg = base_config(&common)?;
            if scenario.is_some() {
                cfg.scenario = scenario;
            }
            if let Some(r) = reps {
                cfg.replications = r;
            }
            let out = run_experiment(&cfg)?;
            write_to_path_or_stdout(cfg.out.as_deref(), |w| write_results_csv(w, &out))?;
            eprintln!(
                "{} rows, {} failures, mean rvmr {:.4}, mean dcor {:.4}",
                out.rows.len(),
                out.summary.failures,
                out.summary.mean_rvmr,
                out.summary.mean_dcor
            );
            Ok::<(), wgsir::error::Error>(())
        })(),
        Command::Fit { x, y, metric, common } => (|| {
            let mut cfg = base_config(&common)?;
            if x.is_some() {
                cfg.x_path = x;
            }
            if y.is_some() {
                cfg.y_path = y;
            }
            if metric.is_some() {
                cfg.metric = metric;
            }
            let out = run_real_data(&cfg)?;
            write_to_path_or_stdout(cfg.out.as_deref(), |w| write_real_data_csv(w, &out))?;
            eprintln!("fit {} observations, d_hat={}", out.ids.len(), out.d_hat);
            Ok::<(), wgsir::error::Error>(())
        })(),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
