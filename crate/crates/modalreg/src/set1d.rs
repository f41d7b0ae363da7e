//! Finite subsets of the real line, Hausdorff distance, and dilations.

const DEDUP_TOL: f64 = 1e-12;

/// A sorted finite set of reals, possibly empty. Points closer than `1e-12`
/// are collapsed.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSet1D {
    points: Vec<f64>,
}

impl FiniteSet1D {
    pub fn new(mut points: Vec<f64>) -> Self {
        points.retain(|p| p.is_finite());
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_TOL);
        Self { points }
    }

    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance from a point to the set; infinite for the empty set.
    pub fn distance_to(&self, y: f64) -> f64 {
        self.points
            .iter()
            .map(|&p| (p - y).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl FromIterator<f64> for FiniteSet1D {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Hausdorff distance between finite sets.
///
/// Conventions: 0 when both sets are empty, infinite when exactly one is.
/// The infinite value keeps error comparisons total when mode counts differ.
pub fn hausdorff(a: &FiniteSet1D, b: &FiniteSet1D) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        (false, false) => {
            let dir = |from: &FiniteSet1D, to: &FiniteSet1D| {
                from.points
                    .iter()
                    .map(|&p| to.distance_to(p))
                    .fold(0.0f64, f64::max)
            };
            dir(a, b).max(dir(b, a))
        }
    }
}

/// The dilation `a ⊕ r` as a merged, disjoint list of closed intervals.
pub fn dilate_intervals(a: &FiniteSet1D, r: f64) -> Vec<(f64, f64)> {
    assert!(r >= 0.0, "dilation radius must be nonnegative");
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &p in &a.points {
        let (lo, hi) = (p - r, p + r);
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Lebesgue measure of `a ⊕ r`, with overlapping intervals merged.
pub fn dilate_length(a: &FiniteSet1D, r: f64) -> f64 {
    dilate_intervals(a, r).iter().map(|(lo, hi)| hi - lo).sum()
}
