//! Bandwidth selection by minimizing prediction-set volume on a held-out
//! split: manifolds are fit on the training half, the width on the
//! validation half, and `h*` is the grid value with the smallest band.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::DataSet;
use crate::error::{ModalError, Result};
use crate::kde::{KdeModel, Kernel};
use crate::mode::{build_modal_set, interior_mesh};
use crate::predict::{residual_distances, residual_quantile, uniform_volume};

/// Train/validation split used during selection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitConfig {
    pub train_frac: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_frac: 0.5, seed: 0 }
    }
}

/// One grid evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub h: f64,
    /// Band volume on the evaluation mesh; infinite when no modes exist or
    /// the width is unbounded.
    pub volume: f64,
    /// Mean number of modes per mesh point at this `h` (trained half).
    pub k_hat: f64,
    /// Validation-residual width at the requested level.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandwidthSelection {
    pub h_star: f64,
    pub curve: Vec<CurvePoint>,
}

/// Normal-reference bandwidth for the `(d+1)`-variate kernel density:
/// `sigma_bar * (4/(D+2))^{1/(D+4)} n^{-1/(D+4)}` with `D = d + 1` and
/// `sigma_bar` the average per-coordinate standard deviation of the pooled
/// `(x, y)` sample.
pub fn rule_of_thumb(data: &DataSet) -> f64 {
    let n = data.n() as f64;
    let d = data.d();
    let big_d = (d + 1) as f64;
    let mut sds = Vec::with_capacity(d + 1);
    for j in 0..d {
        sds.push(column_sd(&(0..data.n()).map(|i| data.x_row(i)[j]).collect::<Vec<_>>()));
    }
    sds.push(column_sd(data.ys()));
    let sigma_bar = sds.iter().sum::<f64>() / sds.len() as f64;
    sigma_bar * (4.0 / (big_d + 2.0)).powf(1.0 / (big_d + 4.0)) * n.powf(-1.0 / (big_d + 4.0))
}

fn column_sd(col: &[f64]) -> f64 {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(2.0);
    var.sqrt()
}

/// Twenty log-spaced grid points spanning `[0.2, 2] x` the normal-reference
/// bandwidth.
pub fn default_h_grid(data: &DataSet) -> Vec<f64> {
    let h0 = rule_of_thumb(data);
    let (lo, hi) = (0.2 * h0, 2.0 * h0);
    let m = 20;
    (0..m)
        .map(|k| lo * (hi / lo).powf(k as f64 / (m - 1) as f64))
        .collect()
}

/// Pick `h*` from `h_grid` (ascending) by the smallest held-out band
/// volume; ties break toward larger `h`. Also returns the full diagnostic
/// curve.
pub fn select_bandwidth(
    data: &DataSet,
    h_grid: &[f64],
    alpha: f64,
    split: &SplitConfig,
) -> Result<BandwidthSelection> {
    if h_grid.is_empty() {
        return Err(ModalError::InvalidArgument("h_grid must be nonempty".into()));
    }
    for w in h_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(ModalError::InvalidArgument("h_grid must be strictly ascending".into()));
        }
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(ModalError::InvalidArgument("alpha must be in (0, 1)".into()));
    }
    let (train, valid) = data.split(split.train_frac, split.seed)?;

    let curve: Vec<CurvePoint> = h_grid
        .par_iter()
        .map(|&h| {
            let model = KdeModel::new(train.clone(), h, Kernel::Gaussian)?;
            let mesh = interior_mesh(&model, 30, 0.05);
            let modal = build_modal_set(&model, &mesh)?;
            if modal.is_all_empty() {
                return Ok(CurvePoint { h, volume: f64::INFINITY, k_hat: 0.0, epsilon: f64::INFINITY });
            }
            let residuals = residual_distances(&model, &valid)?;
            let epsilon = residual_quantile(&residuals, alpha)?;
            let volume = if epsilon.is_finite() {
                uniform_volume(&model, &modal, epsilon)?
            } else {
                f64::INFINITY
            };
            Ok(CurvePoint { h, volume, k_hat: modal.mean_mode_count(), epsilon })
        })
        .collect::<Result<_>>()?;

    let mut best: Option<&CurvePoint> = None;
    for pt in &curve {
        if !pt.volume.is_finite() {
            continue;
        }
        // ascending scan with <=: later (larger) h wins ties
        if best.map_or(true, |b| pt.volume <= b.volume) {
            best = Some(pt);
        }
    }
    let Some(best) = best else {
        return Err(ModalError::SelectionFailure);
    };
    Ok(BandwidthSelection { h_star: best.h, curve })
}
