use std::sync::OnceLock;

use crate::data::DataSet;
use crate::error::{ModalError, Result};

pub(crate) const SQRT_2PI: f64 = 2.5066282746310002;

/// Kernel identifier. Only the Gaussian kernel is implemented; the enum
/// exists so alternates can be added behind the same model type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Kernel {
    Gaussian,
}

/// Joint density value and the partial derivatives used downstream.
#[derive(Debug, Clone)]
pub struct DensityEval {
    /// Joint density `p(x, y) >= 0`.
    pub p: f64,
    /// First partial in `y`.
    pub p_y: f64,
    /// Second partial in `y`.
    pub p_yy: f64,
    /// Gradient in `x` (length `d`).
    pub p_x: Vec<f64>,
    /// Mixed partial gradient `d/dx (dp/dy)` (length `d`).
    pub p_yx: Vec<f64>,
}

/// Joint kernel density estimator
///
/// ```text
/// p(x, y) = 1/(n h^{d+1}) sum_i K(|x - X_i| / h) K((y - Y_i) / h)
/// ```
///
/// with a shared bandwidth `h` for all coordinates and `K` the standard
/// Gaussian kernel. Derivatives are closed-form, never finite differences.
/// The model is immutable after construction; every evaluation is a pure
/// function and safe to call concurrently.
#[derive(Debug)]
pub struct KdeModel {
    data: DataSet,
    h: f64,
    kernel: Kernel,
    /// Normalization `1 / (n h^{d+1})`.
    norm: f64,
    marginal_floor: OnceLock<f64>,
    tol_grad: OnceLock<f64>,
}

impl Clone for KdeModel {
    fn clone(&self) -> Self {
        KdeModel {
            data: self.data.clone(),
            h: self.h,
            kernel: self.kernel,
            norm: self.norm,
            marginal_floor: self.marginal_floor.clone(),
            tol_grad: self.tol_grad.clone(),
        }
    }
}

#[inline]
fn gauss(u: f64) -> f64 {
    (-0.5 * u * u).exp() / SQRT_2PI
}

impl KdeModel {
    pub fn new(data: DataSet, h: f64, kernel: Kernel) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(ModalError::InvalidArgument(format!("bandwidth h = {h} must be positive")));
        }
        let norm = 1.0 / (data.n() as f64 * h.powi(data.d() as i32 + 1));
        Ok(Self { data, h, kernel, norm, marginal_floor: OnceLock::new(), tol_grad: OnceLock::new() })
    }

    pub fn data(&self) -> &DataSet {
        &self.data
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    fn check_query(&self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.data.d() {
            return Err(ModalError::InvalidArgument(format!(
                "query has dimension {} but data has d = {}",
                x.len(),
                self.data.d()
            )));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(ModalError::InvalidArgument("non-finite query point".into()));
        }
        Ok(())
    }

    /// Per-observation predictor weights `K(|x - X_i| / h)`.
    pub(crate) fn x_weights(&self, x: &[f64]) -> Vec<f64> {
        let d = self.data.d();
        let inv_2h2 = 0.5 / (self.h * self.h);
        (0..self.data.n())
            .map(|i| {
                let row = self.data.x_row(i);
                let mut r2 = 0.0;
                for j in 0..d {
                    let dx = x[j] - row[j];
                    r2 += dx * dx;
                }
                (-r2 * inv_2h2).exp() / SQRT_2PI
            })
            .collect()
    }

    /// Joint density and partial derivatives at `(x, y)`.
    pub fn eval_joint(&self, x: &[f64], y: f64) -> Result<DensityEval> {
        self.check_query(x, y)?;
        let kx = self.x_weights(x);
        Ok(self.eval_joint_with_weights(&kx, x, y))
    }

    /// Same as [`eval_joint`](Self::eval_joint) but reusing precomputed
    /// predictor weights; the hot path for mean-shift over a fixed `x`.
    pub(crate) fn eval_joint_with_weights(&self, kx: &[f64], x: &[f64], y: f64) -> DensityEval {
        let d = self.data.d();
        let h = self.h;
        let h2 = h * h;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut sx = vec![0.0; d];
        let mut syx = vec![0.0; d];
        for i in 0..self.data.n() {
            // entries zeroed by the hot-path cutoff contribute nothing
            if kx[i] == 0.0 {
                continue;
            }
            let u = (y - self.data.y(i)) / h;
            let ky = gauss(u);
            let ky1 = -u * ky;
            let w0 = kx[i] * ky;
            let w1 = kx[i] * ky1;
            s0 += w0;
            s1 += w1;
            s2 += kx[i] * (u * u - 1.0) * ky;
            let row = self.data.x_row(i);
            for j in 0..d {
                let g = -(x[j] - row[j]) / h2;
                sx[j] += g * w0;
                syx[j] += g * w1;
            }
        }
        DensityEval {
            p: self.norm * s0,
            p_y: self.norm / h * s1,
            p_yy: self.norm / h2 * s2,
            p_x: sx.iter().map(|v| self.norm * v).collect(),
            p_yx: syx.iter().map(|v| self.norm / h * v).collect(),
        }
    }

    /// Marginal predictor density `p(x) = 1/(n h^d) sum_i K(|x - X_i| / h)`,
    /// so that `p(y | x) = p(x, y) / p(x)` integrates to one over `y`.
    pub fn marginal(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x, self.data.y(0))?;
        Ok(self.marginal_from_weights(&self.x_weights(x)))
    }

    pub(crate) fn marginal_from_weights(&self, kx: &[f64]) -> f64 {
        kx.iter().sum::<f64>() / (self.data.n() as f64 * self.h.powi(self.data.d() as i32))
    }

    /// Support floor for the marginal: `1e-6` times the peak marginal over a
    /// deterministic subsample of the data rows.
    pub fn marginal_floor(&self) -> f64 {
        *self.marginal_floor.get_or_init(|| {
            let n = self.data.n();
            let stride = (n / 50).max(1);
            let mut peak = 0.0f64;
            for i in (0..n).step_by(stride) {
                let m = self.marginal_from_weights(&self.x_weights(self.data.x_row(i)));
                peak = peak.max(m);
            }
            1e-6 * peak
        })
    }

    pub(crate) fn check_support(&self, x: &[f64], marginal: f64) -> Result<()> {
        let floor = self.marginal_floor();
        if marginal < floor {
            return Err(ModalError::LowDensity { x: x.to_vec(), marginal, floor });
        }
        Ok(())
    }

    /// Conditional density `p(y | x)`. Errors when `x` lies below the
    /// marginal support floor.
    pub fn eval_conditional(&self, x: &[f64], y: f64) -> Result<f64> {
        self.check_query(x, y)?;
        let kx = self.x_weights(x);
        let marginal = self.marginal_from_weights(&kx);
        self.check_support(x, marginal)?;
        let joint = self.eval_joint_with_weights(&kx, x, y);
        Ok(joint.p / marginal)
    }

    /// Gradient-magnitude tolerance used to accept fixed points as modes:
    /// `1e-6` times the peak of `|p_y|` over a coarse probe grid.
    pub fn tol_grad(&self) -> f64 {
        *self.tol_grad.get_or_init(|| {
            let n = self.data.n();
            let stride = (n / 20).max(1);
            let (y_lo, y_hi) = self.data.y_bounds();
            let n_y = 16;
            let mut peak = 0.0f64;
            for i in (0..n).step_by(stride) {
                let x = self.data.x_row(i);
                let kx = self.x_weights(x);
                for k in 0..n_y {
                    let y = if n_y == 1 {
                        0.5 * (y_lo + y_hi)
                    } else {
                        y_lo + (y_hi - y_lo) * k as f64 / (n_y - 1) as f64
                    };
                    let e = self.eval_joint_with_weights(&kx, x, y);
                    peak = peak.max(e.p_y.abs());
                }
            }
            1e-6 * peak.max(f64::MIN_POSITIVE)
        })
    }

    /// Step tolerance for the mean-shift iteration: `1e-8` of the y range.
    pub fn tol_step(&self) -> f64 {
        1e-8 * self.data.y_range()
    }

    /// Modes closer than this in `y` are treated as one basin.
    pub fn merge_tol(&self) -> f64 {
        self.h / 10.0
    }

    /// Tangent direction of the modal function through `(x, y)`:
    /// `-p_yx / p_yy`. Requires `|p_yy|` above the curvature floor.
    pub fn modal_gradient(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        let eval = self.eval_joint(x, y)?;
        const CURVATURE_FLOOR: f64 = 1e-8;
        if eval.p_yy.abs() <= CURVATURE_FLOOR {
            return Err(ModalError::DegenerateCurvature { x: x.to_vec(), y, p_yy: eval.p_yy });
        }
        Ok(eval.p_yx.iter().map(|&v| -v / eval.p_yy).collect())
    }

    /// Full gradient and Hessian of the joint density for `d = 1`, needed by
    /// the density-ridge diagnostic.
    pub fn eval_hessian2(&self, x: f64, y: f64) -> Result<([f64; 2], [[f64; 2]; 2])> {
        if self.data.d() != 1 {
            return Err(ModalError::Unsupported("ridge evaluation requires d = 1".into()));
        }
        let xq = [x];
        self.check_query(&xq, y)?;
        let h = self.h;
        let h2 = h * h;
        let kx = self.x_weights(&xq);
        let mut s_y = 0.0;
        let mut s_yy = 0.0;
        let mut s_x = 0.0;
        let mut s_xx = 0.0;
        let mut s_xy = 0.0;
        for i in 0..self.data.n() {
            let u = (y - self.data.y(i)) / h;
            let ky = gauss(u);
            let ky1 = -u * ky;
            let dx = x - self.data.x_row(i)[0];
            let g = -dx / h2;
            s_y += kx[i] * ky1;
            s_yy += kx[i] * (u * u - 1.0) * ky;
            s_x += g * kx[i] * ky;
            s_xx += (dx * dx / (h2 * h2) - 1.0 / h2) * kx[i] * ky;
            s_xy += g * kx[i] * ky1;
        }
        let grad = [self.norm * s_x, self.norm / h * s_y];
        let hess = [
            [self.norm * s_xx, self.norm / h * s_xy],
            [self.norm / h * s_xy, self.norm / h2 * s_yy],
        ];
        Ok((grad, hess))
    }
}
