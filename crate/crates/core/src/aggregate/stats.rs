//! Statistics helpers: mergeable mean folds, t-intervals, seeded percentile
//! bootstrap, Pearson correlation, and report rounding.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Streaming mean with a deterministic merge, so sharded aggregation agrees
/// with single-pass aggregation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    pub sum: f64,
    pub count: usize,
}

impl MeanAccumulator {
    pub fn push(&mut self, value: f64) {
        self.sum += value;
        self.count += 1;
    }

    pub fn merge(&mut self, other: MeanAccumulator) {
        self.sum += other.sum;
        self.count += other.count;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (n - 1 denominator); `None` below two values.
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// Two-sided Student-t confidence interval for the mean:
/// `mean +- t_{1-(1-level)/2, n-1} * s / sqrt(n)`. `None` below two values.
pub fn t_interval(values: &[f64], level: f64) -> Option<(f64, f64)> {
    if values.len() < 2 || !(0.0..1.0).contains(&level) {
        return None;
    }
    let n = values.len() as f64;
    let m = mean(values)?;
    let s = sample_std(values)?;
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).ok()?;
    let quantile = dist.inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let half_width = quantile * s / n.sqrt();
    Some((m - half_width, m + half_width))
}

/// Seeded percentile bootstrap of the mean. Deterministic given the seed;
/// `None` on empty input.
pub fn bootstrap_interval(
    values: &[f64],
    level: f64,
    replicates: usize,
    seed: u64,
) -> Option<(f64, f64)> {
    if values.is_empty() || replicates == 0 || !(0.0..1.0).contains(&level) {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut means = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let mut total = 0.0;
        for _ in 0..n {
            total += values[rng.gen_range(0..n)];
        }
        means.push(total / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = (1.0 - level) / 2.0;
    Some((quantile_sorted(&means, alpha), quantile_sorted(&means, 1.0 - alpha)))
}

/// Linear-interpolation quantile of an already sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let position = q * (n - 1) as f64;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    let frac = position - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Pearson correlation; `None` below three pairs or when either side has
/// zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Round to `digits` decimal places, ties to even; report tables round this
/// way while internal values keep full precision.
pub fn round_half_even(value: f64, digits: usize) -> f64 {
    format!("{value:.digits$}").parse().unwrap_or(value)
}
