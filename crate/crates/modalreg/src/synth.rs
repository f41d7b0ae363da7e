//! Seeded synthetic designs and population-level oracles.
//!
//! The generators draw from conditional Gaussian mixtures
//! `p(y|x) = sum_j pi_j N(y; mu_j(x), sigma_j^2)` with `x` uniform on an
//! interval, plus a jointly Gaussian design used by the coverage studies.
//! The oracles compute population mode sets, prediction-set lengths for the
//! modal-vs-mean size comparison, and the smoothed (kernel-convolved)
//! conditional mode in closed form.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::DataSet;
use crate::error::{ModalError, Result};
use crate::set1d::{dilate_intervals, FiniteSet1D};

/// Component mean as a function of `x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XFn {
    Const { value: f64 },
    Linear { intercept: f64, slope: f64 },
    /// `offset + amp * sin(freq * x + phase)`
    Sine { offset: f64, amp: f64, freq: f64, phase: f64 },
    /// Coefficients in increasing degree order.
    Poly { coeffs: Vec<f64> },
}

impl XFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            XFn::Const { value } => *value,
            XFn::Linear { intercept, slope } => intercept + slope * x,
            XFn::Sine { offset, amp, freq, phase } => offset + amp * (freq * x + phase).sin(),
            XFn::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }
}

/// One mixture component: weight, mean function, and (constant) sd.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmComponent {
    pub weight: f64,
    pub mean: XFn,
    pub sd: f64,
}

/// A conditional Gaussian-mixture design over `x ~ Uniform(x_range)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmSpec {
    pub components: Vec<GmComponent>,
    pub x_range: (f64, f64),
}

impl GmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(ModalError::InvalidArgument("spec needs at least one component".into()));
        }
        let mut wsum = 0.0;
        for c in &self.components {
            if !(c.weight > 0.0) {
                return Err(ModalError::InvalidArgument("component weights must be positive".into()));
            }
            if !(c.sd > 0.0) {
                return Err(ModalError::InvalidArgument("component sds must be positive".into()));
            }
            wsum += c.weight;
        }
        if (wsum - 1.0).abs() > 1e-9 {
            return Err(ModalError::InvalidArgument(format!("weights sum to {wsum}, expected 1")));
        }
        let (lo, hi) = self.x_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ModalError::InvalidArgument("bad x_range".into()));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.components.iter().map(|c| c.sd).fold(0.0, f64::max)
    }

    pub fn sigma_min(&self) -> f64 {
        self.components.iter().map(|c| c.sd).fold(f64::INFINITY, f64::min)
    }

    /// Minimum spacing of adjacent component means at `x` (infinite for K=1).
    pub fn delta_min(&self, x: f64) -> f64 {
        let mut means: Vec<f64> = self.components.iter().map(|c| c.mean.eval(x)).collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        means.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Separation-to-scale ratio `W(x)`.
    pub fn w(&self, x: f64) -> f64 {
        self.delta_min(x) / self.sigma_max()
    }

    /// Conditional density `p(y|x)`.
    pub fn conditional_density(&self, x: f64, y: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let u = (y - c.mean.eval(x)) / c.sd;
                c.weight * (-0.5 * u * u).exp() / (c.sd * crate::kde::SQRT_2PI)
            })
            .sum()
    }

    /// `d/dy p(y|x)`.
    pub fn conditional_density_dy(&self, x: f64, y: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let u = (y - c.mean.eval(x)) / c.sd;
                -c.weight * u * (-0.5 * u * u).exp() / (c.sd * c.sd * crate::kde::SQRT_2PI)
            })
            .sum()
    }

    /// Mixture mass of a union of disjoint intervals, by exact Gaussian CDFs.
    pub fn interval_mass(&self, x: f64, intervals: &[(f64, f64)]) -> f64 {
        let mut mass = 0.0;
        for c in &self.components {
            let dist = Normal::new(c.mean.eval(x), c.sd).unwrap();
            for &(a, b) in intervals {
                mass += c.weight * (dist.cdf(b) - dist.cdf(a));
            }
        }
        mass
    }

    /// Conditional mean `mu(x) = sum_j pi_j mu_j(x)`.
    pub fn conditional_mean(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean.eval(x)).sum()
    }
}

/// Draw `n` labeled observations from the design.
pub fn generate(spec: &GmSpec, n: usize, seed: u64) -> Result<(DataSet, Vec<usize>)> {
    spec.validate()?;
    if n == 0 {
        return Err(ModalError::InvalidArgument("need n >= 1 observations".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = spec.x_range;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random_range(lo..hi);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut j = spec.components.len() - 1;
        for (idx, c) in spec.components.iter().enumerate() {
            acc += c.weight;
            if u <= acc {
                j = idx;
                break;
            }
        }
        let c = &spec.components[j];
        let z = standard_normal(&mut rng);
        xs.push(vec![x]);
        ys.push(c.mean.eval(x) + c.sd * z);
        labels.push(j);
    }
    Ok((DataSet::new(xs, ys)?, labels))
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids u = 0.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// All local maxima of `p(y|x)`: sign-change scan of the `y`-derivative on a
/// grid of step `sigma_min/100`, refined by bisection to `1e-8`.
pub fn population_modes(spec: &GmSpec, x: f64) -> FiniteSet1D {
    scan_critical(spec, x, true)
}

/// Local minima of `p(y|x)` (for Morse-structure checks).
pub fn population_antimodes(spec: &GmSpec, x: f64) -> FiniteSet1D {
    scan_critical(spec, x, false)
}

fn scan_critical(spec: &GmSpec, x: f64, maxima: bool) -> FiniteSet1D {
    let means: Vec<f64> = spec.components.iter().map(|c| c.mean.eval(x)).collect();
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min) - 6.0 * spec.sigma_max();
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 6.0 * spec.sigma_max();
    let step = spec.sigma_min() / 100.0;
    let steps = ((hi - lo) / step).ceil() as usize;
    let mut out = Vec::new();
    let mut prev_y = lo;
    let mut prev_d = spec.conditional_density_dy(x, lo);
    for k in 1..=steps {
        let y = lo + (hi - lo) * k as f64 / steps as f64;
        let d = spec.conditional_density_dy(x, y);
        let crossing = if maxima { prev_d > 0.0 && d <= 0.0 } else { prev_d < 0.0 && d >= 0.0 };
        if crossing {
            let (mut a, mut b) = (prev_y, y);
            while b - a > 1e-8 {
                let mid = 0.5 * (a + b);
                let dm = spec.conditional_density_dy(x, mid);
                let left_sign = if maxima { dm > 0.0 } else { dm < 0.0 };
                if left_sign {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev_y = y;
        prev_d = d;
    }
    FiniteSet1D::new(out)
}

/// Smallest `eps` such that the mixture mass of `modes ⊕ eps` reaches
/// `1 - alpha`, found by bisection with exact Gaussian CDF sums.
fn population_epsilon(spec: &GmSpec, x: f64, modes: &FiniteSet1D, alpha: f64) -> f64 {
    let span = 20.0 * spec.sigma_max()
        + spec
            .components
            .iter()
            .map(|c| c.mean.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
        - spec.components.iter().map(|c| c.mean.eval(x)).fold(f64::INFINITY, f64::min);
    let mass_at = |eps: f64| spec.interval_mass(x, &dilate_intervals(modes, eps));
    let (mut a, mut b) = (0.0, span);
    debug_assert!(mass_at(b) >= 1.0 - alpha);
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        if mass_at(mid) >= 1.0 - alpha {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Population size comparison of the modal prediction set against the
/// symmetric interval about the conditional mean, at one query point.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem10Report {
    pub x: f64,
    pub alpha: f64,
    pub w: f64,
    pub premise_holds: bool,
    pub modal_length: f64,
    pub mean_length: f64,
    /// False only when the premise holds and the modal set is not smaller.
    pub implication_holds: bool,
}

/// Check, at one `x`, that whenever the separation premise
///
/// ```text
/// W > max{ 1.1 (K/(K-1)) z_{1-alpha/2},
///          sqrt(max(6.4, 2 ln(4 (max(K,3)-1))) + 2 ln(pi_max/pi_min)) }
/// ```
///
/// holds (with `alpha < 0.1` and extreme weights above `alpha`), the modal
/// prediction set is strictly shorter than the mean-centered interval of the
/// same level. Both lengths come from bisection with exact Gaussian CDFs.
pub fn theorem10_oracle(spec: &GmSpec, x: f64, alpha: f64) -> Result<Theorem10Report> {
    spec.validate()?;
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(ModalError::InvalidArgument("alpha must be in (0, 1)".into()));
    }
    let k = spec.k();
    let w = spec.w(x);
    let pi_max = spec.components.iter().map(|c| c.weight).fold(0.0, f64::max);
    let pi_min = spec.components.iter().map(|c| c.weight).fold(f64::INFINITY, f64::min);

    let premise_holds = if k < 2 {
        false
    } else {
        let std = Normal::standard();
        let z = std.inverse_cdf(1.0 - alpha / 2.0);
        let t1 = 1.1 * (k as f64 / (k as f64 - 1.0)) * z;
        let t2 = (f64::max(6.4, 2.0 * (4.0 * (k.max(3) as f64 - 1.0)).ln()) + 2.0 * (pi_max / pi_min).ln())
            .sqrt();
        let weights_ok = {
            let first = spec.components.first().unwrap().weight;
            let last = spec.components.last().unwrap().weight;
            first > alpha && last > alpha
        };
        alpha < 0.1 && weights_ok && w > t1.max(t2)
    };

    let modes = population_modes(spec, x);
    let eps = population_epsilon(spec, x, &modes, alpha);
    let modal_length: f64 = dilate_intervals(&modes, eps).iter().map(|(a, b)| b - a).sum();

    let mu = spec.conditional_mean(x);
    let eta = {
        let mass_at = |eta: f64| spec.interval_mass(x, &[(mu - eta, mu + eta)]);
        let (mut a, mut b) = (0.0, 40.0 * spec.sigma_max() + spec.delta_min(x).min(1e6) * k as f64);
        while b - a > 1e-10 {
            let mid = 0.5 * (a + b);
            if mass_at(mid) >= 1.0 - alpha {
                b = mid;
            } else {
                a = mid;
            }
        }
        b
    };
    let mean_length = 2.0 * eta;

    Ok(Theorem10Report {
        x,
        alpha,
        w,
        premise_holds,
        modal_length,
        mean_length,
        implication_holds: !premise_holds || modal_length < mean_length,
    })
}

/// Separation threshold above which [`lemma12_bound`] applies:
/// `sqrt(2 log(4 (max(K,3)-1) pi_max/pi_min))`.
pub fn lemma12_threshold(spec: &GmSpec) -> f64 {
    let k = spec.k();
    let pi_max = spec.components.iter().map(|c| c.weight).fold(0.0, f64::max);
    let pi_min = spec.components.iter().map(|c| c.weight).fold(f64::INFINITY, f64::min);
    (2.0 * (4.0 * (k.max(3) as f64 - 1.0) * pi_max / pi_min).ln()).sqrt()
}

/// Displacement bound between mixture modes and component means at `x`:
/// `sigma_max * 4 (pi_max/pi_min) W e^{-W^2/2}` for `W` above
/// [`lemma12_threshold`].
///
/// For a neighbor at distance `Delta = W sigma`, the pull it exerts at a
/// component mean scales as `W e^{-W^2/2}` while the local restoring
/// curvature is order one, so the displacement is linear in `W e^{-W^2/2}`;
/// the factor 4 absorbs the remaining components and second-order terms.
/// (A `1/W` variant of this bound circulates but fails numerically already
/// at `W = 4` with two equal components, where the true displacement is
/// `~ sigma W e^{-W^2/2}`.)
pub fn lemma12_bound(spec: &GmSpec, x: f64) -> f64 {
    let pi_max = spec.components.iter().map(|c| c.weight).fold(0.0, f64::max);
    let pi_min = spec.components.iter().map(|c| c.weight).fold(f64::INFINITY, f64::min);
    let w = spec.w(x);
    spec.sigma_max() * 4.0 * (pi_max / pi_min) * w * (-0.5 * w * w).exp()
}

/// A jointly Gaussian `(X, Y)` population: the design whose smoothed
/// conditional mode is available in closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianJointSpec {
    pub mean: (f64, f64),
    pub sxx: f64,
    pub sxy: f64,
    pub syy: f64,
}

impl GaussianJointSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sxx > 0.0 && self.syy > 0.0 && self.sxy * self.sxy < self.sxx * self.syy) {
            return Err(ModalError::InvalidArgument("covariance must be positive definite".into()));
        }
        Ok(())
    }

    /// The conditional mode of the population density convolved with a
    /// Gaussian kernel of bandwidth `h` in both coordinates. Convolution
    /// inflates the covariance to `Sigma + h^2 I`, so the smoothed mode is
    /// the conditional mean of the inflated Gaussian:
    /// `m~(x) = mu_y + sxy/(sxx + h^2) (x - mu_x)` — linear in `x`.
    pub fn smoothed_mode(&self, h: f64, x: f64) -> f64 {
        self.mean.1 + self.sxy / (self.sxx + h * h) * (x - self.mean.0)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<DataSet> {
        self.validate()?;
        if n == 0 {
            return Err(ModalError::InvalidArgument("need n >= 1 observations".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sx = self.sxx.sqrt();
        let b = self.sxy / self.sxx;
        let resid_sd = (self.syy - self.sxy * self.sxy / self.sxx).sqrt();
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.mean.0 + sx * standard_normal(&mut rng);
            let y = self.mean.1 + b * (x - self.mean.0) + resid_sd * standard_normal(&mut rng);
            xs.push(vec![x]);
            ys.push(y);
        }
        DataSet::new(xs, ys)
    }
}

/// The two-band design used throughout the examples: horizontal bands at
/// `±sep/2` with weights `(w, 1-w)` and common sd.
pub fn two_band_spec(sep: f64, sd: f64, w: f64) -> GmSpec {
    GmSpec {
        components: vec![
            GmComponent { weight: w, mean: XFn::Const { value: -sep / 2.0 }, sd },
            GmComponent { weight: 1.0 - w, mean: XFn::Const { value: sep / 2.0 }, sd },
        ],
        x_range: (0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::Continuous;

    fn k1_spec(mu: f64, sd: f64) -> GmSpec {
        GmSpec {
            components: vec![GmComponent { weight: 1.0, mean: XFn::Const { value: mu }, sd }],
            x_range: (0.0, 1.0),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&k1_spec(0.0, 1.0), 0, 1).is_err());
        let mut bad = k1_spec(0.0, 1.0);
        bad.components[0].weight = 0.7;
        assert!(bad.validate().is_err());
        bad.components[0].weight = 1.0;
        bad.components[0].sd = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lln_sanity_for_single_component() {
        let (data, _) = generate(&k1_spec(0.0, 1.0), 4000, 11).unwrap();
        let mean = data.ys().iter().sum::<f64>() / data.n() as f64;
        assert!(mean.abs() < 3.0 / (data.n() as f64).sqrt() * 1.5, "mean = {mean}");
    }

    #[test]
    fn labeled_proportions_match_weights() {
        let spec = two_band_spec(4.0, 0.5, 0.6);
        let n = 5000;
        let (_, labels) = generate(&spec, n, 3).unwrap();
        let p0 = labels.iter().filter(|&&l| l == 0).count() as f64 / n as f64;
        // binomial sd ~ sqrt(0.6*0.4/5000) ~ 0.0069; 4 sigma tolerance
        assert!((p0 - 0.6).abs() < 0.028, "p0 = {p0}");
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = two_band_spec(4.0, 0.5, 0.5);
        let (a, la) = generate(&spec, 100, 9).unwrap();
        let (b, lb) = generate(&spec, 100, 9).unwrap();
        assert_eq!(a.ys(), b.ys());
        assert_eq!(la, lb);
    }

    #[test]
    fn density_matches_statrs() {
        let spec = two_band_spec(4.0, 0.7, 0.3);
        let n0 = Normal::new(-2.0, 0.7).unwrap();
        let n1 = Normal::new(2.0, 0.7).unwrap();
        for y in [-3.0, -1.0, 0.0, 2.5] {
            assert_relative_eq!(
                spec.conditional_density(0.5, y),
                0.3 * n0.pdf(y) + 0.7 * n1.pdf(y),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn k1_mode_is_the_mean() {
        let modes = population_modes(&k1_spec(1.5, 0.4), 0.3);
        assert_eq!(modes.len(), 1);
        assert_relative_eq!(modes.points()[0], 1.5, epsilon = 1e-7);
    }

    #[test]
    fn two_gaussian_mode_criterion() {
        // equal weights and variances: 2 modes iff separation > 2 sd
        for (sep, expect) in [(1.5, 1usize), (2.0, 1), (2.5, 2), (4.0, 2)] {
            let spec = two_band_spec(sep, 1.0, 0.5);
            assert_eq!(population_modes(&spec, 0.5).len(), expect, "sep = {sep}");
        }
    }

    #[test]
    fn morse_alternation() {
        let spec = two_band_spec(4.0, 0.6, 0.5);
        let modes = population_modes(&spec, 0.2);
        let antis = population_antimodes(&spec, 0.2);
        assert_eq!(modes.len(), 2);
        assert_eq!(antis.len(), 1);
        assert!(modes.points()[0] < antis.points()[0] && antis.points()[0] < modes.points()[1]);
    }

    #[test]
    fn lemma12_displacement_bound() {
        // modes sit within sigma_max * 4 (pi_max/pi_min) W exp(-W^2/2)
        // of the component means once W clears the threshold
        for (sep, w0) in [(2.5, 0.5), (3.0, 0.45), (4.0, 0.5), (5.0, 0.4), (6.0, 0.35)] {
            let spec = two_band_spec(sep, 1.0, w0);
            if spec.w(0.5) < lemma12_threshold(&spec) {
                continue;
            }
            let bound = lemma12_bound(&spec, 0.5);
            let modes = population_modes(&spec, 0.5);
            assert_eq!(modes.len(), 2);
            for (m, c) in modes.points().iter().zip(&spec.components) {
                let mu = c.mean.eval(0.5);
                assert!((m - mu).abs() <= bound + 1e-8, "sep={sep}: |{m} - {mu}| > {bound}");
            }
        }
    }

    #[test]
    fn joint_vs_conditional_modes_agree() {
        // modes of p(y|x) and of pi(x) p(y|x) in y coincide for fixed x
        // (the x factor scales the density without moving critical points);
        // verify by scanning the joint at two different "marginal" scales.
        let spec = two_band_spec(4.0, 0.8, 0.45);
        let base = population_modes(&spec, 0.5);
        for scale in [0.1, 7.3] {
            let scan = {
                let mut out = Vec::new();
                let (lo, hi) = (-5.0, 5.0);
                let steps = 4000;
                let f = |y: f64| scale * spec.conditional_density(0.5, y);
                let mut prev = f(lo);
                let mut prev_prev = prev;
                for k in 1..=steps {
                    let y = lo + (hi - lo) * k as f64 / steps as f64;
                    let cur = f(y);
                    if prev > prev_prev && prev >= cur {
                        out.push(lo + (hi - lo) * (k as f64 - 1.0) / steps as f64);
                    }
                    prev_prev = prev;
                    prev = cur;
                }
                FiniteSet1D::new(out)
            };
            assert_eq!(scan.len(), base.len());
            for (a, b) in scan.points().iter().zip(base.points()) {
                assert!((a - b).abs() < 5e-3);
            }
        }
    }

    #[test]
    fn theorem10_reference_case() {
        // K=2, equal weights, sd 1, separation 6, alpha 0.05:
        // premise threshold max{1.1*2*1.959964, sqrt(6.4)} = 4.3119...
        let spec = two_band_spec(6.0, 1.0, 0.5);
        let r = theorem10_oracle(&spec, 0.5, 0.05).unwrap();
        assert_relative_eq!(r.w, 6.0, epsilon = 1e-12);
        assert!(r.premise_holds);
        assert!(r.modal_length < r.mean_length, "{} vs {}", r.modal_length, r.mean_length);
        assert!(r.implication_holds);
    }

    #[test]
    fn theorem10_k1_lengths_equal() {
        let r = theorem10_oracle(&k1_spec(0.0, 1.0), 0.5, 0.05).unwrap();
        assert!(!r.premise_holds);
        assert_relative_eq!(r.modal_length, r.mean_length, epsilon = 1e-6);
        // both equal the two-sided Gaussian interval length
        assert_relative_eq!(r.mean_length, 2.0 * 1.959964, epsilon = 1e-4);
    }

    #[test]
    fn theorem10_epsilon_monotone_in_alpha() {
        let spec = two_band_spec(5.0, 1.0, 0.5);
        let modes = population_modes(&spec, 0.5);
        let mut prev = f64::INFINITY;
        for alpha in [0.01, 0.05, 0.1, 0.3, 0.6] {
            let eps = population_epsilon(&spec, 0.5, &modes, alpha);
            assert!(eps <= prev + 1e-9);
            prev = eps;
        }
    }

    #[test]
    fn smoothed_mode_closed_form() {
        let indep = GaussianJointSpec { mean: (0.0, 3.0), sxx: 1.0, sxy: 0.0, syy: 1.0 };
        assert_relative_eq!(indep.smoothed_mode(1.0, 2.0), 3.0);

        let spec = GaussianJointSpec { mean: (0.0, 0.0), sxx: 1.0, sxy: 0.5, syy: 1.0 };
        assert_relative_eq!(spec.smoothed_mode(0.5, 1.0), 0.4, epsilon = 1e-12);
        // h -> 0 recovers the population regression slope
        assert_relative_eq!(spec.smoothed_mode(1e-9, 1.0), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn smoothed_mode_matches_numerical_convolution() {
        // convolve the population density with the kernel by quadrature in
        // both coordinates and locate the argmax over y at fixed x
        let spec = GaussianJointSpec { mean: (0.0, 0.0), sxx: 1.0, sxy: 0.5, syy: 1.0 };
        let h = 0.5;
        let x = 1.0;
        let det = spec.sxx * spec.syy - spec.sxy * spec.sxy;
        let pop = |px: f64, py: f64| {
            let q = (spec.syy * px * px - 2.0 * spec.sxy * px * py + spec.sxx * py * py) / det;
            (-0.5 * q).exp()
        };
        let smoothed = |qx: f64, qy: f64| {
            // 2d quadrature of pop(u,v) * K_h(qx-u) K_h(qy-v)
            let m = 60;
            let span = 4.0;
            let mut acc = 0.0;
            for i in 0..=m {
                let u = qx - span + 2.0 * span * i as f64 / m as f64;
                for j in 0..=m {
                    let v = qy - span + 2.0 * span * j as f64 / m as f64;
                    let ku = ((qx - u) / h).powi(2);
                    let kv = ((qy - v) / h).powi(2);
                    acc += pop(u, v) * (-0.5 * (ku + kv)).exp();
                }
            }
            acc
        };
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut y = -1.0;
        while y <= 1.5 {
            let val = smoothed(x, y);
            if val > best.0 {
                best = (val, y);
            }
            y += 0.005;
        }
        assert!((best.1 - spec.smoothed_mode(h, x)).abs() < 0.02, "argmax {} vs {}", best.1, spec.smoothed_mode(h, x));
    }

    #[test]
    fn gaussian_sample_moments() {
        let spec = GaussianJointSpec { mean: (1.0, -1.0), sxx: 2.0, sxy: 0.8, syy: 1.5 };
        let data = spec.sample(20000, 4).unwrap();
        let n = data.n() as f64;
        let mx = (0..data.n()).map(|i| data.x_row(i)[0]).sum::<f64>() / n;
        let my = data.ys().iter().sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut syy = 0.0;
        for i in 0..data.n() {
            let dx = data.x_row(i)[0] - mx;
            let dy = data.y(i) - my;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        assert!((mx - 1.0).abs() < 0.05 && (my + 1.0).abs() < 0.05);
        assert!((sxx / n - 2.0).abs() < 0.1);
        assert!((sxy / n - 0.8).abs() < 0.1);
        assert!((syy / n - 1.5).abs() < 0.1);
    }
}
