//! Small statistical helpers shared by the Monte Carlo estimators.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

/// A Wilson score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    /// Wilson interval at normal quantile `z`.
    pub fn wilson(hits: u64, trials: u64, z: f64) -> Self {
        assert!(trials > 0, "Wilson interval needs at least one trial");
        assert!(hits <= trials);
        let n = trials as f64;
        let p = hits as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Proportion {
            hits,
            trials,
            estimate: p,
            lower: (centre - half).max(0.0),
            upper: (centre + half).min(1.0),
        }
    }

    pub fn wilson99(hits: u64, trials: u64) -> Self {
        Self::wilson(hits, trials, Z_99)
    }

    /// Half-width of the Wilson interval at z = 1, used as a standard error.
    pub fn standard_error(&self) -> f64 {
        let one = Self::wilson(self.hits, self.trials, 1.0);
        (one.upper - one.lower) / 2.0
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-task seed from `(master, stream, index)`.
///
/// Depends only on its arguments, so results never depend on which worker
/// ran a trial.
pub fn derive_seed(master: u64, stream: &str, index: u64) -> u64 {
    let mut h = mix64(master ^ 0x9e37_79b9_7f4a_7c15);
    for b in stream.bytes() {
        h = mix64(h ^ u64::from(b));
    }
    mix64(h ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// One standard normal draw by the Box-Muller transform.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // u1 in (0, 1] keeps the logarithm finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Ordinary least squares fit `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Empirical quantile by linear interpolation on a sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wilson_contains_estimate() {
        let p = Proportion::wilson99(30, 100);
        assert!(p.lower < 0.3 && 0.3 < p.upper);
        let zero = Proportion::wilson99(0, 50);
        assert_eq!(zero.lower, 0.0);
        assert!(zero.upper > 0.0);
    }

    #[test]
    fn derived_seeds_differ_by_stream_and_index() {
        assert_ne!(derive_seed(1, "tail", 0), derive_seed(1, "tail", 1));
        assert_ne!(derive_seed(1, "tail", 0), derive_seed(1, "cond", 0));
        assert_eq!(derive_seed(7, "x", 3), derive_seed(7, "x", 3));
    }

    #[test]
    fn box_muller_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| -1.0 * x + 2.0).collect();
        let (s, c) = linear_fit(&xs, &ys).unwrap();
        assert!((s + 1.0).abs() < 1e-12 && (c - 2.0).abs() < 1e-12);
    }
}
