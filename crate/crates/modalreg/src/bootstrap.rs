//! Bootstrap confidence sets for the modal set, pointwise and uniform.
//!
//! Each replicate resamples observation pairs with replacement, refits the
//! estimator at the same bandwidth, and records the Hausdorff distance to
//! the original modal set. Band widths are empirical quantiles of those
//! distances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ModalError, Result};
use crate::kde::KdeModel;
use crate::mode::{build_modal_set, conditional_modes, default_starts, ModalSet};
use crate::predict::BandKind;
use crate::set1d::{hausdorff, FiniteSet1D};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BootstrapConfig {
    /// Replicate count.
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(ModalError::InvalidArgument("need B >= 1 replicates".into()));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(ModalError::InvalidArgument("alpha must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A bootstrap confidence band: the set-valued region `M̂(x) ⊕ delta`.
#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceBand {
    pub kind: BandKind,
    pub alpha: f64,
    pub b: usize,
    pub seed: u64,
    /// Per-query widths (pointwise) or a single entry (uniform). Infinite
    /// when more than `alpha * B` replicates disagreed on the mode count.
    pub delta: Vec<f64>,
    /// Queries whose width is infinite (unstable mode structure).
    pub unstable: Vec<bool>,
}

/// Empirical `(1 - alpha)` quantile of replicate distances: the order
/// statistic at rank `floor((1 - alpha) B) + 1` (clamped to `B`), i.e. the
/// smallest width exceeded by strictly fewer than `alpha B` replicates.
/// Infinities sort above all finite values.
pub fn replicate_quantile(distances: &[f64], alpha: f64) -> f64 {
    let mut sorted = distances.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let b = sorted.len();
    let rank = ((((1.0 - alpha) * b as f64).floor() as usize) + 1).clamp(1, b);
    sorted[rank - 1]
}

/// The `B x m` matrix of replicate distances: entry `(j, i)` is the
/// Hausdorff distance between the `j`-th bootstrap modal set and the
/// original one at mesh point `i`. Replicate RNGs are independent streams
/// of the seed, so the matrix is identical under any thread count.
///
/// Bootstrap mode searches start from the default policy plus the original
/// modes, so each original mode is tracked into the replicate.
pub fn bootstrap_distances(model: &KdeModel, modal: &ModalSet, cfg: &BootstrapConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if modal.is_all_empty() {
        return Err(ModalError::NoModes { x: modal.queries[0].clone() });
    }
    let originals: Vec<FiniteSet1D> = (0..modal.queries.len()).map(|i| modal.mode_set(i)).collect();
    (0..cfg.b)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(j as u64 + 1);
            let resampled = model.data().resample(&mut rng);
            let bmodel = KdeModel::new(resampled, model.h(), model.kernel())?;
            modal
                .queries
                .iter()
                .zip(&originals)
                .map(|(q, orig)| {
                    let mut starts = default_starts(&bmodel, q);
                    starts.extend(orig.points());
                    let modes = match conditional_modes(&bmodel, q, &starts) {
                        Ok(m) => m,
                        Err(ModalError::LowDensity { .. }) => Vec::new(),
                        Err(e) => return Err(e),
                    };
                    let bset: FiniteSet1D = modes.iter().map(|m| m.y).collect();
                    Ok(hausdorff(&bset, orig))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

fn band_from_deltas(deltas: Vec<f64>, kind: BandKind, cfg: &BootstrapConfig) -> ConfidenceBand {
    let unstable = deltas.iter().map(|d| !d.is_finite()).collect();
    ConfidenceBand { kind, alpha: cfg.alpha, b: cfg.b, seed: cfg.seed, delta: deltas, unstable }
}

/// Pointwise widths over the modal set's mesh, one quantile per query.
pub fn bootstrap_pointwise_over(model: &KdeModel, modal: &ModalSet, cfg: &BootstrapConfig) -> Result<ConfidenceBand> {
    let matrix = bootstrap_distances(model, modal, cfg)?;
    let m = modal.queries.len();
    let deltas: Vec<f64> = (0..m)
        .map(|i| {
            let col: Vec<f64> = matrix.iter().map(|row| row[i]).collect();
            replicate_quantile(&col, cfg.alpha)
        })
        .collect();
    Ok(band_from_deltas(deltas, BandKind::Pointwise, cfg))
}

/// Confidence width at a single query point.
pub fn bootstrap_pointwise(model: &KdeModel, x: &[f64], cfg: &BootstrapConfig) -> Result<ConfidenceBand> {
    let modal = build_modal_set(model, std::slice::from_ref(&x.to_vec()))?;
    if modal.modes[0].is_empty() {
        return Err(ModalError::NoModes { x: x.to_vec() });
    }
    bootstrap_pointwise_over(model, &modal, cfg)
}

/// One uniform width: the quantile of per-replicate suprema over the mesh.
pub fn bootstrap_uniform(model: &KdeModel, mesh: &[Vec<f64>], cfg: &BootstrapConfig) -> Result<ConfidenceBand> {
    let modal = build_modal_set(model, mesh)?;
    bootstrap_uniform_over(model, &modal, cfg)
}

/// As [`bootstrap_uniform`] with a prebuilt modal set.
pub fn bootstrap_uniform_over(model: &KdeModel, modal: &ModalSet, cfg: &BootstrapConfig) -> Result<ConfidenceBand> {
    let matrix = bootstrap_distances(model, modal, cfg)?;
    Ok(uniform_from_distances(&matrix, cfg))
}

/// Reduce a replicate-distance matrix to the uniform band (sup over mesh
/// within each replicate, then the quantile across replicates).
pub fn uniform_from_distances(matrix: &[Vec<f64>], cfg: &BootstrapConfig) -> ConfidenceBand {
    let sups: Vec<f64> = matrix
        .iter()
        .map(|row| row.iter().cloned().fold(0.0f64, f64::max))
        .collect();
    let delta = replicate_quantile(&sups, cfg.alpha);
    band_from_deltas(vec![delta], BandKind::Uniform, cfg)
}

/// Reduce a replicate-distance matrix to pointwise widths.
pub fn pointwise_from_distances(matrix: &[Vec<f64>], cfg: &BootstrapConfig) -> ConfidenceBand {
    let m = matrix[0].len();
    let deltas: Vec<f64> = (0..m)
        .map(|i| {
            let col: Vec<f64> = matrix.iter().map(|row| row[i]).collect();
            replicate_quantile(&col, cfg.alpha)
        })
        .collect();
    band_from_deltas(deltas, BandKind::Pointwise, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSet;
    use crate::kde::Kernel;
    use crate::synth::{generate, two_band_spec};

    fn band_model() -> (KdeModel, Vec<Vec<f64>>) {
        let spec = two_band_spec(4.0, 0.5, 0.5);
        let (data, _) = generate(&spec, 250, 31).unwrap();
        let model = KdeModel::new(data, 0.35, Kernel::Gaussian).unwrap();
        let mesh: Vec<Vec<f64>> = (0..10).map(|k| vec![0.1 + 0.8 * k as f64 / 9.0]).collect();
        (model, mesh)
    }

    #[test]
    fn quantile_counting_rule() {
        // 0 of 4 exceed 0.4 at alpha = 0.25, so delta = 0.4
        assert_eq!(replicate_quantile(&[0.1, 0.2, 0.3, 0.4], 0.25), 0.4);
        assert_eq!(replicate_quantile(&[0.4, 0.1, 0.3, 0.2], 0.5), 0.3);
        assert_eq!(replicate_quantile(&[0.1], 0.25), 0.1);
    }

    #[test]
    fn infinities_sort_last() {
        let d = [0.1, f64::INFINITY, 0.2, 0.3];
        assert_eq!(replicate_quantile(&d, 0.25), f64::INFINITY);
        assert_eq!(replicate_quantile(&d, 0.5), 0.3);
    }

    #[test]
    fn degenerate_data_gives_zero_width() {
        let data = DataSet::with_bounds(
            vec![vec![0.0]; 20],
            vec![1.0; 20],
            vec![(-1.0, 1.0)],
            (0.0, 2.0),
        )
        .unwrap();
        let model = KdeModel::new(data, 0.5, Kernel::Gaussian).unwrap();
        let cfg = BootstrapConfig { b: 16, alpha: 0.1, seed: 5 };
        let band = bootstrap_pointwise(&model, &[0.0], &cfg).unwrap();
        assert_eq!(band.delta, vec![0.0]);
        let band = bootstrap_uniform(&model, &[vec![0.0], vec![0.0]], &cfg).unwrap();
        assert_eq!(band.delta, vec![0.0]);
    }

    #[test]
    fn uniform_dominates_pointwise_on_shared_replicates() {
        let (model, mesh) = band_model();
        let modal = build_modal_set(&model, &mesh).unwrap();
        let cfg = BootstrapConfig { b: 24, alpha: 0.1, seed: 6 };
        let matrix = bootstrap_distances(&model, &modal, &cfg).unwrap();
        let point = pointwise_from_distances(&matrix, &cfg);
        let unif = uniform_from_distances(&matrix, &cfg);
        let max_point = point.delta.iter().cloned().fold(0.0f64, f64::max);
        assert!(unif.delta[0] >= max_point - 1e-12);
    }

    #[test]
    fn width_monotone_in_alpha() {
        let (model, mesh) = band_model();
        let modal = build_modal_set(&model, &mesh).unwrap();
        let cfg = BootstrapConfig { b: 24, alpha: 0.1, seed: 7 };
        let matrix = bootstrap_distances(&model, &modal, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for alpha in [0.05, 0.1, 0.3, 0.5] {
            let c = BootstrapConfig { alpha, ..cfg };
            let d = uniform_from_distances(&matrix, &c).delta[0];
            assert!(d <= prev + 1e-12);
            prev = d;
        }
    }

    #[test]
    fn reproducible_given_seed() {
        let (model, mesh) = band_model();
        let cfg = BootstrapConfig { b: 12, alpha: 0.1, seed: 8 };
        let a = bootstrap_uniform(&model, &mesh, &cfg).unwrap();
        let b = bootstrap_uniform(&model, &mesh, &cfg).unwrap();
        assert_eq!(a.delta, b.delta);
        let modal = build_modal_set(&model, &mesh).unwrap();
        let m1 = bootstrap_distances(&model, &modal, &cfg).unwrap();
        let m2 = bootstrap_distances(&model, &modal, &cfg).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (model, mesh) = band_model();
        let modal = build_modal_set(&model, &mesh).unwrap();
        let cfg = BootstrapConfig { b: 12, alpha: 0.1, seed: 9 };
        let base = bootstrap_distances(&model, &modal, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| bootstrap_distances(&model, &modal, &cfg).unwrap());
        assert_eq!(base, single);
    }

    #[test]
    fn empty_modal_set_rejected() {
        let (model, _) = band_model();
        let cfg = BootstrapConfig { b: 4, alpha: 0.1, seed: 1 };
        match bootstrap_pointwise(&model, &[40.0], &cfg) {
            Err(ModalError::NoModes { .. }) | Err(ModalError::LowDensity { .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn bad_config_rejected() {
        let (model, mesh) = band_model();
        assert!(bootstrap_uniform(&model, &mesh, &BootstrapConfig { b: 0, alpha: 0.1, seed: 1 }).is_err());
        assert!(bootstrap_uniform(&model, &mesh, &BootstrapConfig { b: 4, alpha: 0.0, seed: 1 }).is_err());
    }
}
