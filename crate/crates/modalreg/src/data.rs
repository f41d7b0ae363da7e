use crate::error::{ModalError, Result};

/// Paired observations `(x_i, y_i)` with closed domain bounds.
///
/// Predictors are stored row-major (`n` rows of length `d`). Bounds default
/// to the per-coordinate data range and must contain every observation.
#[derive(Debug, Clone)]
pub struct DataSet {
    xs: Vec<f64>,
    ys: Vec<f64>,
    n: usize,
    d: usize,
    x_bounds: Vec<(f64, f64)>,
    y_bounds: (f64, f64),
}

impl DataSet {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        Self::build(xs, ys, None, None)
    }

    pub fn with_bounds(
        xs: Vec<Vec<f64>>,
        ys: Vec<f64>,
        x_bounds: Vec<(f64, f64)>,
        y_bounds: (f64, f64),
    ) -> Result<Self> {
        Self::build(xs, ys, Some(x_bounds), Some(y_bounds))
    }

    fn build(
        xs: Vec<Vec<f64>>,
        ys: Vec<f64>,
        x_bounds: Option<Vec<(f64, f64)>>,
        y_bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        let n = xs.len();
        if n == 0 {
            return Err(ModalError::InvalidArgument("need n >= 1 observations".into()));
        }
        if ys.len() != n {
            return Err(ModalError::InvalidArgument(format!(
                "xs has {n} rows but ys has {} entries",
                ys.len()
            )));
        }
        let d = xs[0].len();
        if d == 0 {
            return Err(ModalError::InvalidArgument("need d >= 1 predictor dimensions".into()));
        }
        let mut flat = Vec::with_capacity(n * d);
        for (i, row) in xs.iter().enumerate() {
            if row.len() != d {
                return Err(ModalError::InvalidArgument(format!(
                    "row {i} has length {} but d = {d}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(ModalError::InvalidArgument(format!("non-finite predictor in row {i}")));
                }
                flat.push(v);
            }
        }
        for (i, &y) in ys.iter().enumerate() {
            if !y.is_finite() {
                return Err(ModalError::InvalidArgument(format!("non-finite response at index {i}")));
            }
        }

        let x_bounds = match x_bounds {
            Some(b) => {
                if b.len() != d {
                    return Err(ModalError::InvalidArgument("x_bounds length must equal d".into()));
                }
                b
            }
            None => (0..d)
                .map(|j| {
                    let col = flat.iter().skip(j).step_by(d);
                    let lo = col.clone().cloned().fold(f64::INFINITY, f64::min);
                    let hi = col.cloned().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                })
                .collect(),
        };
        let y_bounds = y_bounds.unwrap_or_else(|| {
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        });

        for (j, &(lo, hi)) in x_bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ModalError::InvalidArgument(format!("bad x_bounds for dimension {j}")));
            }
            for i in 0..n {
                let v = flat[i * d + j];
                if v < lo || v > hi {
                    return Err(ModalError::InvalidArgument(format!(
                        "x[{i}][{j}] = {v} outside x_bounds [{lo}, {hi}]"
                    )));
                }
            }
        }
        if !(y_bounds.0.is_finite() && y_bounds.1.is_finite() && y_bounds.0 <= y_bounds.1) {
            return Err(ModalError::InvalidArgument("bad y_bounds".into()));
        }
        for (i, &y) in ys.iter().enumerate() {
            if y < y_bounds.0 || y > y_bounds.1 {
                return Err(ModalError::InvalidArgument(format!(
                    "y[{i}] = {y} outside y_bounds [{}, {}]",
                    y_bounds.0, y_bounds.1
                )));
            }
        }

        Ok(Self { xs: flat, ys, n, d, x_bounds, y_bounds })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_bounds(&self) -> &[(f64, f64)] {
        &self.x_bounds
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        self.y_bounds
    }

    /// Width of the response bounds; the unit for scale-relative tolerances.
    pub fn y_range(&self) -> f64 {
        let (lo, hi) = self.y_bounds;
        (hi - lo).max(f64::MIN_POSITIVE)
    }

    /// Draw a new data set of the same size by sampling rows with
    /// replacement. Bounds are inherited from the original so bootstrap
    /// replicates share the start-grid and tolerance scales.
    pub fn resample<R: rand::Rng>(&self, rng: &mut R) -> DataSet {
        let mut xs = Vec::with_capacity(self.n * self.d);
        let mut ys = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let i = rng.random_range(0..self.n);
            xs.extend_from_slice(self.x_row(i));
            ys.push(self.ys[i]);
        }
        DataSet {
            xs,
            ys,
            n: self.n,
            d: self.d,
            x_bounds: self.x_bounds.clone(),
            y_bounds: self.y_bounds,
        }
    }

    /// Split rows into a train/validation pair by a seeded shuffle.
    pub fn split(&self, train_frac: f64, seed: u64) -> Result<(DataSet, DataSet)> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        if !(0.0 < train_frac && train_frac < 1.0) {
            return Err(ModalError::InvalidArgument("train_frac must be in (0, 1)".into()));
        }
        let mut idx: Vec<usize> = (0..self.n).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        let n_train = ((self.n as f64) * train_frac).round().max(1.0) as usize;
        let n_train = n_train.min(self.n - 1);
        let take = |ids: &[usize]| -> DataSet {
            let mut xs = Vec::with_capacity(ids.len() * self.d);
            let mut ys = Vec::with_capacity(ids.len());
            for &i in ids {
                xs.extend_from_slice(self.x_row(i));
                ys.push(self.ys[i]);
            }
            DataSet {
                xs,
                ys,
                n: ids.len(),
                d: self.d,
                x_bounds: self.x_bounds.clone(),
                y_bounds: self.y_bounds,
            }
        };
        Ok((take(&idx[..n_train]), take(&idx[n_train..])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty() {
        assert!(DataSet::new(vec![], vec![]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(DataSet::new(vec![vec![f64::NAN]], vec![0.0]).is_err());
        assert!(DataSet::new(vec![vec![0.0]], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(DataSet::new(vec![vec![0.0], vec![0.0, 1.0]], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn default_bounds_cover_data() {
        let data = DataSet::new(vec![vec![0.0], vec![2.0], vec![1.0]], vec![-1.0, 3.0, 0.0]).unwrap();
        assert_eq!(data.x_bounds(), &[(0.0, 2.0)]);
        assert_eq!(data.y_bounds(), (-1.0, 3.0));
    }

    #[test]
    fn bounds_must_contain_data() {
        let r = DataSet::with_bounds(vec![vec![0.0], vec![2.0]], vec![0.0, 1.0], vec![(0.0, 1.0)], (0.0, 1.0));
        assert!(r.is_err());
    }

    #[test]
    fn split_partitions_rows() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let data = DataSet::new(xs, ys).unwrap();
        let (a, b) = data.split(0.5, 3).unwrap();
        assert_eq!(a.n() + b.n(), 10);
        let (a2, b2) = data.split(0.5, 3).unwrap();
        assert_eq!(a.ys(), a2.ys());
        assert_eq!(b.ys(), b2.ys());
    }
}
