//! Nonlinear sufficient dimension reduction for samples whose
//! observations are themselves distributions, using Wasserstein and
//! sliced-Wasserstein kernels.
//!
//! The crate covers the full pipeline: empirical measures and CSV I/O
//! ([`measures`]), optimal-transport distances ([`ot`]), RBF Gram
//! matrices ([`kernels`]), the generalized sliced inverse regression
//! estimators ([`gsir`]), ridge and order selection ([`selection`]),
//! association diagnostics ([`metrics`]), synthetic data generators
//! ([`simgen`]), and a replicated experiment harness ([`harness`]).

pub mod error;
pub mod gsir;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod measures;
pub mod metrics;
pub mod ot;
pub mod selection;
pub mod simgen;

pub use error::{Error, Result};
pub use gsir::{fit, GsirFit, RegularizationSpec, Variant};
pub use kernels::{default_gamma, gram_matrix, GramMatrix, KernelFamily, KernelSpec};
pub use measures::{DatasetPair, EmpiricalMeasure};
pub use metrics::{distance_correlation, rvmr, PredictorSample};
pub use ot::{pairwise_matrix, DistanceMatrix, Metric, SlicingSpec};
pub use selection::{bic_order, gcv, select_epsilon};
pub use simgen::{gen_dataset, replication_rng, ModelId};
