//! Nonparametric modal regression.
//!
//! Estimates the set of conditional local modes of `Y` given `X = x` from a
//! kernel density estimate of the joint distribution, via the partial
//! mean-shift fixed-point iteration. On top of the mode estimator the crate
//! provides:
//!
//! - bootstrap confidence sets (pointwise and uniform) for the modal set,
//! - prediction sets built from dilations of the modal set, and their
//!   Lebesgue volume,
//! - bandwidth selection by minimizing prediction-set volume,
//! - clustering of observations by mean-shift destination, with modal
//!   proportions and dispersions,
//! - a density-ridge membership diagnostic for `d = 1`,
//! - seeded Gaussian-mixture generators and population-level oracles, and
//! - Monte Carlo harnesses for convergence-rate and coverage studies.
//!
//! The central types are [`DataSet`], [`KdeModel`], and [`ModalSet`]. A
//! typical flow:
//!
//! ```
//! use modalreg::{DataSet, KdeModel, Kernel};
//!
//! let xs: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 200.0]).collect();
//! let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0]).collect();
//! let data = DataSet::new(xs, ys).unwrap();
//! let model = KdeModel::new(data, 0.1, Kernel::Gaussian).unwrap();
//! let modes = modalreg::conditional_mode_set(&model, &[0.5]).unwrap();
//! assert_eq!(modes.len(), 1);
//! assert!((modes[0].y - 1.0).abs() < 0.05);
//! ```

pub mod bandwidth;
pub mod bootstrap;
pub mod cluster;
pub mod data;
pub mod error;
pub mod experiment;
pub mod kde;
pub mod mode;
pub mod predict;
pub mod ridge;
pub mod set1d;
pub mod synth;

pub use bandwidth::{default_h_grid, rule_of_thumb, select_bandwidth, BandwidthSelection, SplitConfig};
pub use bootstrap::{
    bootstrap_pointwise, bootstrap_uniform, replicate_quantile, BootstrapConfig, ConfidenceBand,
};
pub use cluster::{assign_clusters, ClusterModel, ClusterSummary};
pub use data::DataSet;
pub use experiment::{coverage_study, rate_study, CoverageReport, RateReport};
pub use predict::{
    pointwise_epsilon, residual_distances, residual_quantile, uniform_epsilon, uniform_volume,
    BandKind, PredictionBand,
};
pub use error::{ModalError, Result};
pub use kde::{DensityEval, KdeModel, Kernel};
pub use mode::{
    build_modal_set, conditional_mode_set, conditional_modes, mean_shift_ascent, ModalSet, ModePoint,
};
pub use ridge::{lemma11_scan, ridge_test, HessianEval, Lemma11Report, RidgeReport};
pub use set1d::{dilate_intervals, dilate_length, hausdorff, FiniteSet1D};
pub use synth::{
    generate, lemma12_bound, lemma12_threshold, population_modes, theorem10_oracle,
    GaussianJointSpec, GmSpec,
};
