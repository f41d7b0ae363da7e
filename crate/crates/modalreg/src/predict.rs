//! Prediction sets: dilations of the estimated modal set sized to capture a
//! target share of the conditional (pointwise) or empirical (uniform) mass.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::DataSet;
use crate::error::{ModalError, Result};
use crate::kde::KdeModel;
use crate::mode::{conditional_mode_set, ModalSet};
use crate::set1d::{dilate_intervals, dilate_length, FiniteSet1D};

/// Band flavor shared by confidence and prediction sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    Pointwise,
    Uniform,
}

/// A prediction band around the modal set.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionBand {
    pub kind: BandKind,
    pub alpha: f64,
    /// Per-query widths (pointwise) or a single entry (uniform).
    pub epsilon: Vec<f64>,
    /// Lebesgue size: mesh quadrature of the per-`x` dilation length.
    pub volume: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(ModalError::InvalidArgument("alpha must be in (0, 1)".into()));
    }
    Ok(())
}

/// Mass of `p(y|x)` over disjoint intervals. The estimated conditional is a
/// Gaussian mixture with weights proportional to the predictor kernels, so
/// the mass is an exact sum of normal CDF differences.
pub(crate) fn conditional_interval_mass(model: &KdeModel, kx: &[f64], intervals: &[(f64, f64)]) -> f64 {
    let data = model.data();
    let h = model.h();
    let total: f64 = kx.iter().sum();
    let std = Normal::standard();
    let mut mass = 0.0;
    for i in 0..data.n() {
        if kx[i] == 0.0 {
            continue;
        }
        let y = data.y(i);
        for &(a, b) in intervals {
            mass += kx[i] * (std.cdf((b - y) / h) - std.cdf((a - y) / h));
        }
    }
    mass / total
}

/// Smallest `eps` such that the conditional mass of `M̂(x) ⊕ eps` reaches
/// `1 - alpha`, by bisection.
pub fn pointwise_epsilon(model: &KdeModel, x: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let modes = conditional_mode_set(model, x)?;
    if modes.is_empty() {
        return Err(ModalError::NoModes { x: x.to_vec() });
    }
    let set: FiniteSet1D = modes.iter().map(|m| m.y).collect();
    let kx = model.x_weights(x);
    let target = 1.0 - alpha;
    let cap = model.data().y_range() + 5.0 * model.h();
    let mass_at = |eps: f64| conditional_interval_mass(model, &kx, &dilate_intervals(&set, eps));
    let max_mass = mass_at(cap);
    if max_mass < target {
        return Err(ModalError::UnreachableMass { target, max_mass });
    }
    let (mut a, mut b) = (0.0, cap);
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        if mass_at(mid) >= target {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(b)
}

/// Distance of each response in `data` to the modal set estimated by
/// `model` at the same predictor value. Empty modal sets (including
/// low-density queries) give infinite distances.
pub fn residual_distances(model: &KdeModel, data: &DataSet) -> Result<Vec<f64>> {
    (0..data.n())
        .into_par_iter()
        .map(|i| {
            let x = data.x_row(i);
            let modes = match conditional_mode_set(model, x) {
                Ok(m) => m,
                Err(ModalError::LowDensity { .. }) => Vec::new(),
                Err(e) => return Err(e),
            };
            let set: FiniteSet1D = modes.iter().map(|m| m.y).collect();
            Ok(set.distance_to(data.y(i)))
        })
        .collect()
}

/// Order statistic at `ceil((1 - alpha) n)` of the residual distances.
/// Infinite entries sort above every finite value.
pub fn residual_quantile(residuals: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if residuals.is_empty() {
        return Err(ModalError::InvalidArgument("need at least one residual".into()));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let rank = (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Uniform prediction width: the `(1 - alpha)` quantile of the distances
/// from each training response to the modal set at its own predictor. The
/// `modal` argument must have been built with the training predictors as
/// its mesh, in data order.
pub fn uniform_epsilon(model: &KdeModel, modal: &ModalSet, alpha: f64) -> Result<f64> {
    let data = model.data();
    if modal.queries.len() != data.n() {
        return Err(ModalError::InvalidArgument(
            "modal set must be built on the training predictors".into(),
        ));
    }
    let residuals: Vec<f64> = (0..data.n())
        .map(|i| modal.mode_set(i).distance_to(data.y(i)))
        .collect();
    residual_quantile(&residuals, alpha)
}

/// Lebesgue volume of the band `{(x, M̂(x) ⊕ eps)}`: trapezoidal quadrature
/// over the (sorted, one-dimensional) mesh of the per-`x` dilation length,
/// with overlapping intervals merged. Only `d = 1` meshes are supported.
pub fn uniform_volume(model: &KdeModel, modal: &ModalSet, epsilon: f64) -> Result<f64> {
    if model.data().d() != 1 {
        return Err(ModalError::Unsupported("volume quadrature requires d = 1".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(ModalError::InvalidArgument("epsilon must be nonnegative".into()));
    }
    let m = modal.queries.len();
    if m < 2 {
        return Err(ModalError::InvalidArgument("need at least two mesh points".into()));
    }
    let mut vol = 0.0;
    let mut prev_x = modal.queries[0][0];
    let mut prev_len = dilate_length(&modal.mode_set(0), epsilon);
    for qi in 1..m {
        let x = modal.queries[qi][0];
        if x < prev_x {
            return Err(ModalError::InvalidArgument("mesh must be sorted ascending".into()));
        }
        let len = dilate_length(&modal.mode_set(qi), epsilon);
        vol += 0.5 * (len + prev_len) * (x - prev_x);
        prev_x = x;
        prev_len = len;
    }
    Ok(vol)
}

/// Pointwise band over a mesh: per-query widths plus the integrated volume.
pub fn pointwise_band(model: &KdeModel, modal: &ModalSet, alpha: f64) -> Result<PredictionBand> {
    check_alpha(alpha)?;
    let eps: Vec<f64> = modal
        .queries
        .par_iter()
        .map(|q| pointwise_epsilon(model, q, alpha))
        .collect::<Result<_>>()?;
    let mut vol = 0.0;
    if model.data().d() == 1 && modal.queries.len() >= 2 {
        for qi in 1..modal.queries.len() {
            let dl = dilate_length(&modal.mode_set(qi), eps[qi]);
            let dp = dilate_length(&modal.mode_set(qi - 1), eps[qi - 1]);
            vol += 0.5 * (dl + dp) * (modal.queries[qi][0] - modal.queries[qi - 1][0]);
        }
    }
    Ok(PredictionBand { kind: BandKind::Pointwise, alpha, epsilon: eps, volume: vol })
}

/// Uniform band from a modal set built on the training predictors; the
/// volume is reported on `mesh_modal` (a plotting mesh) when given, else on
/// the training-predictor modal set itself.
pub fn uniform_band(
    model: &KdeModel,
    modal_at_data: &ModalSet,
    mesh_modal: Option<&ModalSet>,
    alpha: f64,
) -> Result<PredictionBand> {
    let eps = uniform_epsilon(model, modal_at_data, alpha)?;
    let vol_modal = mesh_modal.unwrap_or(modal_at_data);
    let volume = if eps.is_finite() { uniform_volume(model, vol_modal, eps)? } else { f64::INFINITY };
    Ok(PredictionBand { kind: BandKind::Uniform, alpha, epsilon: vec![eps], volume })
}
