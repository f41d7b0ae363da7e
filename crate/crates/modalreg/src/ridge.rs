//! Density-ridge membership diagnostics for `d = 1`.
//!
//! A point `(x, y)` lies on the ridge of the joint density when the
//! gradient is orthogonal to the minor Hessian eigenvector `v2` and the
//! curvature along `v2` is negative. Mode points always satisfy `p_y = 0`
//! and `p_yy < 0`, but ridge membership additionally needs `v2' grad p = 0`,
//! which holds when either `p_x = 0`, or `p_xy = 0` with the vertical
//! curvature dominating (`p_yy <= p_xx`, so that `v2` is the y axis) — the
//! two sets differ in general.

use serde::Serialize;

use crate::error::{ModalError, Result};
use crate::kde::KdeModel;
use crate::mode::ModalSet;

const ISOTROPY_TOL: f64 = 1e-10;

/// Gradient and 2x2 Hessian of the joint density with its eigensystem.
#[derive(Debug, Clone, Serialize)]
pub struct HessianEval {
    pub grad: [f64; 2],
    pub h: [[f64; 2]; 2],
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unit eigenvector for `lambda2`; arbitrary at isotropic points.
    pub v2: [f64; 2],
    /// Eigenvalue gap below tolerance: `v2` is not identifiable.
    pub isotropic: bool,
}

impl HessianEval {
    /// Closed-form symmetric 2x2 eigensystem:
    /// `lambda = tr/2 ± sqrt(((H11-H22)/2)^2 + H12^2)`.
    pub fn new(grad: [f64; 2], h: [[f64; 2]; 2]) -> Self {
        let tr = h[0][0] + h[1][1];
        let half_diff = 0.5 * (h[0][0] - h[1][1]);
        let sd = (half_diff * half_diff + h[0][1] * h[0][1]).sqrt();
        let lambda1 = 0.5 * tr + sd;
        let lambda2 = 0.5 * tr - sd;
        let isotropic = sd < ISOTROPY_TOL;
        let v2 = if isotropic {
            [0.0, 1.0]
        } else {
            // rows of (H - lambda1 I) are orthogonal to v2's complement;
            // pick the better-conditioned representation
            let a = [h[0][1], lambda2 - h[0][0]];
            let b = [lambda2 - h[1][1], h[0][1]];
            let (na, nb) = (a[0] * a[0] + a[1] * a[1], b[0] * b[0] + b[1] * b[1]);
            let v = if na >= nb { a } else { b };
            let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / norm, v[1] / norm]
        };
        Self { grad, h, lambda1, lambda2, v2, isotropic }
    }
}

/// Ridge-membership report at one point.
#[derive(Debug, Clone, Serialize)]
pub struct RidgeReport {
    pub x: f64,
    pub y: f64,
    /// `|v2' grad p|` (or the gradient norm at isotropic points).
    pub alignment: f64,
    /// `v2' H v2` (equals `lambda2`).
    pub curvature: f64,
    pub tol: f64,
    pub member: bool,
    pub isotropic: bool,
    pub eval: HessianEval,
}

/// Absolute alignment tolerance at `(x, y)`: `1e-4` times the local
/// gradient scale `p(x, y)/h`.
pub fn default_ridge_tol(model: &KdeModel, x: f64, y: f64) -> Result<f64> {
    let p = model.eval_joint(&[x], y)?.p;
    Ok(1e-4 * p / model.h())
}

/// Test ridge membership of `(x, y)` with alignment tolerance `tol`.
pub fn ridge_test(model: &KdeModel, x: f64, y: f64, tol: f64) -> Result<RidgeReport> {
    if model.data().d() != 1 {
        return Err(ModalError::Unsupported("ridge test requires d = 1".into()));
    }
    let (grad, h) = model.eval_hessian2(x, y)?;
    let eval = HessianEval::new(grad, h);
    let curvature = eval.lambda2;
    let (alignment, member) = if eval.isotropic {
        // v2 is undefined; decide by the gradient norm alone
        let gn = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
        (gn, gn <= tol && curvature < 0.0)
    } else {
        let a = (eval.v2[0] * grad[0] + eval.v2[1] * grad[1]).abs();
        (a, a <= tol && curvature < 0.0)
    };
    Ok(RidgeReport { x, y, alignment, curvature, tol, member, isotropic: eval.isotropic, eval })
}

/// Scan every mode point of a modal set for ridge membership.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma11Report {
    pub n_points: usize,
    pub n_members: usize,
    /// Points where `p_x ~ 0` within tolerance (first sufficient condition).
    pub n_zero_px: usize,
    /// Points where `p_xy ~ 0` and `p_yy <= p_xx` within tolerance (second
    /// sufficient condition; without curvature dominance `v2` flips to the
    /// x axis and the mode leaves the ridge).
    pub n_zero_pxy: usize,
    /// Points satisfying either condition but failing membership — the
    /// equivalence violations; should be empty.
    pub n_violations: usize,
    pub worst_alignment: f64,
    /// `lambda2 < 0` held at every mode point.
    pub all_lambda2_negative: bool,
    pub points: Vec<RidgeReport>,
}

/// Evaluate the two sufficient conditions (`p_x = 0`, or `p_xy = 0` with
/// `p_yy <= p_xx`) and ridge membership at every mode point. `tol_rel`
/// scales the per-point alignment tolerance (`tol_rel * p/h`; pass `1e-4`
/// for the default).
pub fn lemma11_scan(model: &KdeModel, modal: &ModalSet, tol_rel: f64) -> Result<Lemma11Report> {
    if model.data().d() != 1 {
        return Err(ModalError::Unsupported("ridge scan requires d = 1".into()));
    }
    let mut points = Vec::new();
    let mut n_members = 0;
    let mut n_zero_px = 0;
    let mut n_zero_pxy = 0;
    let mut n_violations = 0;
    let mut worst: f64 = 0.0;
    let mut all_neg = true;
    for (qi, modes) in modal.modes.iter().enumerate() {
        let x = modal.queries[qi][0];
        for mp in modes {
            let p = model.eval_joint(&[x], mp.y)?.p;
            let tol = tol_rel * p / model.h();
            let report = ridge_test(model, x, mp.y, tol)?;
            let e = model.eval_joint(&[x], mp.y)?;
            // second-derivative scale for the p_xy comparison
            let curv_scale = tol_rel * p / (model.h() * model.h());
            let zero_px = e.p_x[0].abs() <= tol;
            let zero_pxy = e.p_yx[0].abs() <= curv_scale
                && report.eval.h[1][1] <= report.eval.h[0][0] + curv_scale;
            if zero_px {
                n_zero_px += 1;
            }
            if zero_pxy {
                n_zero_pxy += 1;
            }
            if (zero_px || zero_pxy) && !report.member {
                n_violations += 1;
            }
            if report.member {
                n_members += 1;
            }
            worst = worst.max(report.alignment / tol.max(f64::MIN_POSITIVE));
            if report.eval.lambda2 >= 0.0 {
                all_neg = false;
            }
            points.push(report);
        }
    }
    Ok(Lemma11Report {
        n_points: points.len(),
        n_members,
        n_zero_px,
        n_zero_pxy,
        n_violations,
        worst_alignment: worst,
        all_lambda2_negative: all_neg,
        points,
    })
}
