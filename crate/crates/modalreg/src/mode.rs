//! Partial mean-shift and modal-set construction.
//!
//! For a fixed query `x`, the mean-shift update
//!
//! ```text
//! y <- sum_i Y_i w_i / sum_i w_i,   w_i = K(|x - X_i|/h) K((y - Y_i)/h)
//! ```
//!
//! is a gradient-ascent scheme on `y -> p(x, y)` with an implicit step size.
//! Fixed points with `p_y = 0` and `p_yy < 0` are conditional modes.

use rayon::prelude::*;

use crate::error::{ModalError, Result};
use crate::kde::KdeModel;
use crate::set1d::FiniteSet1D;

/// Iteration cap per start. Near a flat mode the mean-shift contraction
/// factor approaches 1 - h^2 |p_yy| / p, which can be ~0.99; the cap must
/// leave room for a few thousand such steps before declaring failure.
pub const MAX_ITER: u32 = 5000;

/// Number of uniform grid starts over the response bounds.
const GRID_STARTS: usize = 8;
/// Cap on observation-derived starts per query; beyond this the neighbor
/// responses are thinned to evenly spaced order statistics. A basin
/// holding a few percent of the local mass still receives a start, which
/// matches the `REL_MODE_FLOOR` reporting threshold.
pub const MAX_OBS_STARTS: usize = 16;
/// Modes whose joint density falls below this fraction of the dominant
/// mode's density at the same query point are discarded as tail debris.
pub const REL_MODE_FLOOR: f64 = 0.05;

/// One mean-shift destination at a query point.
#[derive(Debug, Clone)]
pub struct ModePoint {
    pub x: Vec<f64>,
    pub y: f64,
    /// Curvature `p_yy` at `(x, y)`.
    pub p_yy: f64,
    pub iterations: u32,
    /// True only when the step converged, `|p_y|` is within tolerance, and
    /// the curvature is negative. Antimodes and saddles stay false.
    pub converged: bool,
}

/// Modal sets over an ordered mesh of query points, with manifold labels
/// from single-linkage over mesh-adjacent mode points.
#[derive(Debug, Clone)]
pub struct ModalSet {
    pub queries: Vec<Vec<f64>>,
    /// Converged mode points per query, sorted by `y`.
    pub modes: Vec<Vec<ModePoint>>,
    /// Manifold id (0-based) per mode point, parallel to `modes`.
    pub labels: Vec<Vec<usize>>,
    pub n_manifolds: usize,
}

impl ModalSet {
    /// Number of estimated modal manifolds.
    pub fn k_hat(&self) -> usize {
        self.n_manifolds
    }

    /// The estimated mode set at mesh index `qi` as a finite set in `y`.
    pub fn mode_set(&self, qi: usize) -> FiniteSet1D {
        self.modes[qi].iter().map(|m| m.y).collect()
    }

    pub fn is_all_empty(&self) -> bool {
        self.modes.iter().all(|m| m.is_empty())
    }

    /// Mean number of modes per query; the `K(x)` average in the
    /// prediction-volume formula.
    pub fn mean_mode_count(&self) -> f64 {
        if self.queries.is_empty() {
            return 0.0;
        }
        self.modes.iter().map(|m| m.len() as f64).sum::<f64>() / self.queries.len() as f64
    }
}

/// Run the mean-shift iteration from `y0` with `x` fixed, returning the full
/// iterate trajectory (starting at `y0`).
pub fn mean_shift_path(model: &KdeModel, x: &[f64], y0: f64) -> Result<(ModePoint, Vec<f64>)> {
    let kx = model.x_weights(x);
    let marginal = model.marginal_from_weights(&kx);
    model.check_support(x, marginal)?;
    if !y0.is_finite() {
        return Err(ModalError::InvalidArgument("non-finite start".into()));
    }
    let tol_step = model.tol_step();
    let tol_grad = model.tol_grad();
    let mut y = y0;
    let mut path = vec![y0];
    let mut step_converged = false;
    let mut iters = 0;
    while iters < MAX_ITER {
        iters += 1;
        let Some(y_next) = shift_once(model, &kx, y) else {
            break;
        };
        let step = (y_next - y).abs();
        y = y_next;
        path.push(y);
        // small steps do not yet guarantee a small gradient (the implicit
        // step size shrinks with h^2), so both must settle before stopping
        if step <= tol_step && model.eval_joint_with_weights(&kx, x, y).p_y.abs() <= tol_grad {
            step_converged = true;
            break;
        }
    }
    Ok((classify(model, &kx, x, y, iters, step_converged), path))
}

/// Mean-shift ascent from a single start. See [`mean_shift_path`].
pub fn mean_shift_ascent(model: &KdeModel, x: &[f64], y0: f64) -> Result<ModePoint> {
    mean_shift_path(model, x, y0).map(|(m, _)| m)
}

#[inline]
fn shift_once(model: &KdeModel, kx: &[f64], y: f64) -> Option<f64> {
    let data = model.data();
    let h = model.h();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..data.n() {
        if kx[i] == 0.0 {
            continue;
        }
        let u = (y - data.y(i)) / h;
        let w = kx[i] * (-0.5 * u * u).exp();
        num += data.y(i) * w;
        den += w;
    }
    if den <= 0.0 || !den.is_finite() {
        None
    } else {
        Some(num / den)
    }
}

/// Quadratic polish once mean-shift has carried an iterate into a concave
/// basin: Newton steps on `p_y` (the second derivative is analytic) reach
/// the fixed point in a handful of evaluations where the mean-shift
/// contraction `1 - h^2 |p_yy| / p` would need thousands near flat modes.
/// Returns the polished point and the evaluations spent, or `None` when the
/// iterate is not in a concave basin or a step escapes it.
fn newton_polish(
    model: &KdeModel,
    kx: &[f64],
    x: &[f64],
    y0: f64,
    tol_step: f64,
    tol_grad: f64,
) -> Option<(f64, u32)> {
    let h = model.h();
    let mut y = y0;
    for k in 1..=50u32 {
        let e = model.eval_joint_with_weights(kx, x, y);
        if e.p_yy >= 0.0 {
            return None;
        }
        let dy = -e.p_y / e.p_yy;
        if !dy.is_finite() || dy.abs() > h {
            return None;
        }
        y += dy;
        if dy.abs() <= tol_step {
            let e2 = model.eval_joint_with_weights(kx, x, y);
            if e2.p_y.abs() <= tol_grad && e2.p_yy < 0.0 {
                return Some((y, k));
            }
        }
    }
    None
}

/// Attempt a Newton polish every this many mean-shift iterations.
const POLISH_EVERY: u32 = 4;

fn classify(model: &KdeModel, kx: &[f64], x: &[f64], y: f64, iters: u32, step_converged: bool) -> ModePoint {
    let eval = model.eval_joint_with_weights(kx, x, y);
    let converged = step_converged && eval.p_y.abs() <= model.tol_grad() && eval.p_yy < 0.0;
    ModePoint { x: x.to_vec(), y, p_yy: eval.p_yy, iterations: iters, converged }
}

/// Default start policy: response values of observations within predictor
/// radius `3h` of `x` (thinned to at most [`MAX_OBS_STARTS`] quantiles so
/// the multi-start cost stays bounded in `n`), plus a uniform grid over the
/// response bounds.
pub fn default_starts(model: &KdeModel, x: &[f64]) -> Vec<f64> {
    let data = model.data();
    let d = data.d();
    let r2 = (3.0 * model.h()).powi(2);
    let mut starts = Vec::new();
    for i in 0..data.n() {
        let row = data.x_row(i);
        let dist2: f64 = (0..d).map(|j| (x[j] - row[j]).powi(2)).sum();
        if dist2 <= r2 {
            starts.push(data.y(i));
        }
    }
    if starts.len() > MAX_OBS_STARTS {
        starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = starts.len();
        starts = (0..MAX_OBS_STARTS).map(|k| starts[k * (m - 1) / (MAX_OBS_STARTS - 1)]).collect();
    }
    let (lo, hi) = data.y_bounds();
    for k in 0..GRID_STARTS {
        starts.push(lo + (hi - lo) * k as f64 / (GRID_STARTS - 1) as f64);
    }
    starts
}

/// All conditional modes at `x` found by multi-start mean-shift from
/// `starts`, deduplicated within the merge tolerance. Only points satisfying
/// the mode conditions are returned, sorted by `y`. An empty result is
/// valid: `x` may lie outside every modal manifold's domain.
pub fn conditional_modes(model: &KdeModel, x: &[f64], starts: &[f64]) -> Result<Vec<ModePoint>> {
    if starts.is_empty() {
        return Err(ModalError::InvalidArgument("starts must be nonempty".into()));
    }
    let mut kx = model.x_weights(x);
    let marginal = model.marginal_from_weights(&kx);
    model.check_support(x, marginal)?;
    // observations far from x in predictor space contribute below double
    // rounding noise; zeroing them lets the inner loops skip the kernel
    let peak_kx = kx.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = 1e-15 * peak_kx;
    for w in &mut kx {
        if *w < cutoff {
            *w = 0.0;
        }
    }

    let tol_step = model.tol_step();
    // Iterates within the same basin collapse onto each other quickly;
    // coalescing them keeps the multi-start cost near the number of modes
    // rather than the number of starts. Distinct modes are at least
    // merge_tol = h/10 apart, so coalescing at h/200 is conservative.
    let coalesce_tol = tol_step.max(5e-3 * model.h());

    let mut active: Vec<(f64, u32)> = {
        let mut s: Vec<f64> = starts.iter().copied().filter(|v| v.is_finite()).collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.dedup_by(|a, b| (*a - *b).abs() <= coalesce_tol);
        s.into_iter().map(|y| (y, 0)).collect()
    };
    let mut finished: Vec<(f64, u32, bool)> = Vec::new();

    while !active.is_empty() {
        let mut next: Vec<(f64, u32)> = Vec::with_capacity(active.len());
        for &(y, it) in &active {
            match shift_once(model, &kx, y) {
                Some(y_next) => {
                    let step = (y_next - y).abs();
                    let settled = step <= tol_step
                        && model.eval_joint_with_weights(&kx, x, y_next).p_y.abs() <= model.tol_grad();
                    let polished = if !settled && (it + 1) % POLISH_EVERY == 0 {
                        newton_polish(model, &kx, x, y_next, tol_step, model.tol_grad())
                    } else {
                        None
                    };
                    if settled {
                        finished.push((y_next, it + 1, true));
                    } else if let Some((y_p, extra)) = polished {
                        finished.push((y_p, it + 1 + extra, true));
                    } else if it + 1 >= MAX_ITER {
                        finished.push((y_next, it + 1, false));
                    } else {
                        next.push((y_next, it + 1));
                    }
                }
                None => finished.push((y, it, false)),
            }
        }
        next.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        next.dedup_by(|a, b| (a.0 - b.0).abs() <= coalesce_tol);
        active = next;
    }

    let mut points: Vec<ModePoint> = finished
        .into_iter()
        .map(|(y, it, ok)| classify(model, &kx, x, y, it, ok))
        .filter(|m| m.converged)
        .collect();

    // Merge modes within merge_tol, keeping the highest-density member.
    points.sort_by(|a, b| a.y.partial_cmp(&b.y).unwrap());
    let merge_tol = model.merge_tol();
    let mut merged: Vec<(ModePoint, f64)> = Vec::new();
    for p in points {
        let p_new = model.eval_joint_with_weights(&kx, x, p.y).p;
        match merged.last_mut() {
            Some((last, p_last)) if (p.y - last.y).abs() <= merge_tol => {
                if p_new > *p_last {
                    *last = p;
                    *p_last = p_new;
                }
            }
            _ => merged.push((p, p_new)),
        }
    }

    // Drop modes whose density is negligible next to the dominant one at
    // this x: isolated tail observations produce genuine but meaningless
    // local maxima of the KDE, and those would otherwise dominate set
    // distances. A genuine secondary manifold has comparable density and
    // is far above this floor.
    let peak = merged.iter().map(|&(_, p)| p).fold(0.0f64, f64::max);
    let floor = REL_MODE_FLOOR * peak;
    Ok(merged.into_iter().filter(|&(_, p)| p >= floor).map(|(m, _)| m).collect())
}

/// [`conditional_modes`] with the default start policy.
pub fn conditional_mode_set(model: &KdeModel, x: &[f64]) -> Result<Vec<ModePoint>> {
    let starts = default_starts(model, x);
    conditional_modes(model, x, &starts)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Mesh adjacency for manifold linking: consecutive points for `d = 1`
/// (the mesh must be sorted ascending), nearest neighbors for `d >= 2`.
fn mesh_adjacency(mesh: &[Vec<f64>], d: usize) -> Result<Vec<(usize, usize)>> {
    if d == 1 {
        for w in mesh.windows(2) {
            if w[1][0] < w[0][0] {
                return Err(ModalError::InvalidArgument("mesh must be sorted ascending for d = 1".into()));
            }
        }
        return Ok((1..mesh.len()).map(|i| (i - 1, i)).collect());
    }
    // k-nearest-neighbor adjacency; the paper leaves d >= 2 connectivity
    // unspecified, so this is a documented heuristic.
    let k = (2 * d).min(mesh.len().saturating_sub(1));
    let mut edges = Vec::new();
    for i in 0..mesh.len() {
        let mut dists: Vec<(f64, usize)> = (0..mesh.len())
            .filter(|&j| j != i)
            .map(|j| {
                let d2: f64 = (0..d).map(|c| (mesh[i][c] - mesh[j][c]).powi(2)).sum();
                (d2, j)
            })
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, j) in dists.iter().take(k) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Run [`conditional_mode_set`] at every mesh point and label mode points
/// into manifolds by single linkage: two mode points connect iff their
/// queries are mesh-adjacent and their `y` values differ by at most `h`.
///
/// Mesh points below the marginal support floor contribute empty mode sets.
pub fn build_modal_set(model: &KdeModel, mesh: &[Vec<f64>]) -> Result<ModalSet> {
    if mesh.is_empty() {
        return Err(ModalError::InvalidArgument("mesh must be nonempty".into()));
    }
    let d = model.data().d();
    for q in mesh {
        if q.len() != d {
            return Err(ModalError::InvalidArgument("mesh point dimension mismatch".into()));
        }
    }
    let adjacency = mesh_adjacency(mesh, d)?;

    let modes: Vec<Vec<ModePoint>> = mesh
        .par_iter()
        .map(|q| match conditional_mode_set(model, q) {
            Ok(m) => Ok(m),
            Err(ModalError::LowDensity { .. }) => Ok(Vec::new()),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    // Flatten (query, mode) pairs and link.
    let mut offsets = Vec::with_capacity(mesh.len());
    let mut total = 0;
    for m in &modes {
        offsets.push(total);
        total += m.len();
    }
    let mut uf = UnionFind::new(total);
    let link_tol = model.h();
    for &(a, b) in &adjacency {
        for (ia, pa) in modes[a].iter().enumerate() {
            for (ib, pb) in modes[b].iter().enumerate() {
                if (pa.y - pb.y).abs() <= link_tol {
                    uf.union(offsets[a] + ia, offsets[b] + ib);
                }
            }
        }
    }

    let mut label_of_root: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(mesh.len());
    for (qi, m) in modes.iter().enumerate() {
        let mut row = Vec::with_capacity(m.len());
        for mi in 0..m.len() {
            let root = uf.find(offsets[qi] + mi);
            let next = label_of_root.len();
            let label = *label_of_root.entry(root).or_insert(next);
            row.push(label);
        }
        labels.push(row);
    }

    Ok(ModalSet { queries: mesh.to_vec(), modes, labels, n_manifolds: label_of_root.len() })
}

/// Equispaced interior mesh over the first predictor's bounds (`d = 1`),
/// trimming a fraction of each boundary.
pub fn interior_mesh(model: &KdeModel, points: usize, trim: f64) -> Vec<Vec<f64>> {
    let (lo, hi) = model.data().x_bounds()[0];
    let span = hi - lo;
    let (a, b) = (lo + trim * span, hi - trim * span);
    (0..points)
        .map(|k| {
            let t = if points == 1 { 0.5 } else { k as f64 / (points - 1) as f64 };
            vec![a + (b - a) * t]
        })
        .collect()
}
