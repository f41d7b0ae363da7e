//! Clustering by mean-shift destination: each observation ascends from its
//! own response value, and observations sharing a modal manifold share a
//! cluster. Reports per-cluster proportions and dispersions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ModalError, Result};
use crate::kde::KdeModel;
use crate::mode::{mean_shift_ascent, ModalSet};

/// Per-cluster summary.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub label: usize,
    pub count: usize,
    /// `N_j / n` with `n` the full sample size (unassigned observations
    /// stay in the denominator).
    pub proportion: f64,
    /// Mean squared distance of responses to their destinations.
    pub dispersion: f64,
}

/// Mean-shift clustering of the training observations.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterModel {
    /// Ascent destination of each observation (its own response as start).
    pub destinations: Vec<f64>,
    /// Manifold label per observation; `None` when the ascent failed to
    /// converge or no manifold mode lies within the linking tolerance.
    pub labels: Vec<Option<usize>>,
    pub clusters: Vec<ClusterSummary>,
    pub n_unassigned: usize,
}

/// Assign every observation to a modal manifold by running the ascent from
/// `(X_i, Y_i)` and matching the destination to the nearest mode of
/// `modal` at `X_i` (the modal set must be built with the training
/// predictors as its mesh, in data order).
pub fn assign_clusters(model: &KdeModel, modal: &ModalSet) -> Result<ClusterModel> {
    let data = model.data();
    if modal.queries.len() != data.n() {
        return Err(ModalError::InvalidArgument(
            "modal set must be built on the training predictors".into(),
        ));
    }
    let link_tol = model.h();

    let per_obs: Vec<(f64, Option<usize>)> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let x = data.x_row(i);
            let dest = match mean_shift_ascent(model, x, data.y(i)) {
                Ok(m) if m.converged => m.y,
                Ok(m) => return Ok((m.y, None)),
                Err(ModalError::LowDensity { .. }) => return Ok((data.y(i), None)),
                Err(e) => return Err(e),
            };
            // nearest mode of the modal set at this predictor
            let mut best: Option<(f64, usize)> = None;
            for (mp, &lab) in modal.modes[i].iter().zip(&modal.labels[i]) {
                let dist = (mp.y - dest).abs();
                if best.map_or(true, |(bd, _)| dist < bd) {
                    best = Some((dist, lab));
                }
            }
            match best {
                Some((dist, lab)) if dist <= link_tol => Ok((dest, Some(lab))),
                _ => Ok((dest, None)),
            }
        })
        .collect::<Result<_>>()?;

    let destinations: Vec<f64> = per_obs.iter().map(|p| p.0).collect();
    let labels: Vec<Option<usize>> = per_obs.iter().map(|p| p.1).collect();

    let mut clusters: Vec<ClusterSummary> = Vec::new();
    for lab in 0..modal.n_manifolds {
        let members: Vec<usize> = (0..data.n()).filter(|&i| labels[i] == Some(lab)).collect();
        if members.is_empty() {
            continue;
        }
        let count = members.len();
        let dispersion =
            members.iter().map(|&i| (data.y(i) - destinations[i]).powi(2)).sum::<f64>() / count as f64;
        clusters.push(ClusterSummary {
            label: lab,
            count,
            proportion: count as f64 / data.n() as f64,
            dispersion,
        });
    }
    let n_unassigned = labels.iter().filter(|l| l.is_none()).count();
    Ok(ClusterModel { destinations, labels, clusters, n_unassigned })
}
