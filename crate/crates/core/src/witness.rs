//! Witness vectors for near-singular matrices and the geometry around them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::concentration::{classify_rich, ConcentrationQuery, Richness, WeightVector, RICH_OFFSET};
use crate::error::{Error, Result};
use crate::linalg::{norm2, IntegerMatrix};
use crate::noise::DiscreteDistribution;
use crate::stats::{derive_seed, standard_normal, Proportion};

/// Largest rounding scale; beyond `2^53` doubles no longer hold every integer.
const MAX_SCALE: u64 = 1 << 53;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WitnessClass {
    Poor,
    RichSingular,
    RichNonsingular,
    Unclassified,
}

impl std::fmt::Display for WitnessClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WitnessClass::Poor => "poor",
            WitnessClass::RichSingular => "rich-singular",
            WitnessClass::RichNonsingular => "rich-nonsingular",
            WitnessClass::Unclassified => "unclassified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessVector {
    pub w: Vec<i64>,
    pub norm: f64,
    pub b_exponent: u32,
    pub class: WitnessClass,
}

impl WitnessVector {
    pub fn from_integers(w: Vec<i64>, b_exponent: u32) -> Self {
        let norm = norm2(&w.iter().map(|&x| x as f64).collect::<Vec<_>>());
        WitnessVector {
            w,
            norm,
            b_exponent,
            class: WitnessClass::Unclassified,
        }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }
}

/// `6 (C + K + 2) + 1`, the smallest integer `B > 6 (C + K + 2)`.
pub fn default_b_exponent(c: u32, k: u32) -> u32 {
    6 * (c + k + 2) + 1
}

/// `n^(B+2)` as an exact double, or an overflow error.
pub fn rounding_scale(n: usize, b: u32) -> Result<u64> {
    (n as u64)
        .checked_pow(b + 2)
        .filter(|&s| s <= MAX_SCALE)
        .ok_or_else(|| Error::Overflow(format!("{n}^{} exceeds 2^53", b + 2)))
}

/// `w = round(n^(B+2) v)` with `n = len(v)`.
///
/// The result is checked against the window
/// `0.9 n^(B+2) <= |w| <= 1.1 n^(B+2)`.
pub fn round_witness(v: &[f64], b: u32) -> Result<WitnessVector> {
    let n = v.len();
    if n == 0 {
        return Err(Error::validation("empty vector"));
    }
    let norm_v = norm2(v);
    if !(0.99..=1.01).contains(&norm_v) {
        return Err(Error::validation(format!("|v| = {norm_v} is outside [0.99, 1.01]")));
    }
    let scale = rounding_scale(n, b)? as f64;
    let w: Vec<i64> = v.iter().map(|&x| (scale * x).round() as i64).collect();
    let out = WitnessVector::from_integers(w, b);
    if !(0.9 * scale..=1.1 * scale).contains(&out.norm) {
        return Err(Error::validation(format!(
            "rounded norm {} leaves [0.9, 1.1] n^(B+2); B = {b} is too small for n = {n}",
            out.norm
        )));
    }
    Ok(out)
}

/// `(|M w|, n^(B+2) |M v| + (sqrt(n) / 2) |M|_F)`; the first never exceeds
/// the second because `|w - n^(B+2) v| <= sqrt(n) / 2`.
pub fn rounded_image_bound(m: &IntegerMatrix, v: &[f64], w: &WitnessVector) -> Result<(f64, f64)> {
    let n = m.n();
    if v.len() != n || w.n() != n {
        return Err(Error::validation("dimension mismatch"));
    }
    let real = m.to_real();
    let mw = m
        .mul_vec(&w.w)
        .ok_or_else(|| Error::Overflow("M w overflows 128 bits".into()))?;
    let mw = norm2(&mw.iter().map(|&x| x as f64).collect::<Vec<_>>());
    let scale = rounding_scale(n, w.b_exponent)? as f64;
    let bound = scale * norm2(&real.mul_vec(v)) + (n as f64).sqrt() / 2.0 * real.frobenius_norm();
    Ok((mw, bound))
}

/// Exponents of the witness partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessThresholds {
    /// `A` in the richness threshold `n^(-A - offset)`.
    pub a_exponent: f64,
    pub rich_offset: f64,
    /// Coordinates are large when `|w_i| >= ceil(n^large_exponent)`.
    pub large_exponent: f64,
    /// Rich witnesses with fewer than `ceil(n^count_exponent)` large
    /// coordinates are singular.
    pub count_exponent: f64,
}

impl WitnessThresholds {
    pub fn new(a_exponent: f64, b: u32) -> Self {
        WitnessThresholds {
            a_exponent,
            rich_offset: RICH_OFFSET,
            large_exponent: f64::from(b) / 2.0,
            count_exponent: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub class: WitnessClass,
    /// Concentration used for the rich/poor split.
    pub sup: f64,
    pub rich_threshold: f64,
    pub large_count: usize,
    pub large_level: u64,
    pub count_threshold: u64,
}

pub fn classify_witness(
    w: &WitnessVector,
    rows: &[ConcentrationQuery],
    t: &WitnessThresholds,
) -> Result<WitnessReport> {
    let n = w.n();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation("row laws must match the witness length"));
    }
    let rich = classify_rich(rows, &WeightVector::new(w.w.clone()), t.a_exponent, t.rich_offset)?;
    let nf = n as f64;
    let large_level = nf.powf(t.large_exponent).ceil() as u64;
    let count_threshold = nf.powf(t.count_exponent).ceil() as u64;
    let large_count = w.w.iter().filter(|x| x.unsigned_abs() >= large_level).count();
    let class = match rich.class {
        Richness::Poor => WitnessClass::Poor,
        Richness::Rich if (large_count as u64) < count_threshold => WitnessClass::RichSingular,
        Richness::Rich => WitnessClass::RichNonsingular,
    };
    Ok(WitnessReport {
        class,
        sup: rich.sup,
        rich_threshold: rich.threshold,
        large_count,
        large_level,
        count_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonNet {
    pub dimension: usize,
    pub epsilon: f64,
    pub points: Vec<Vec<f64>>,
    pub proposals: u64,
    /// Rejections in a row when the search stopped.
    pub final_streak: u64,
    /// About `3 / final_streak`: a 95% upper bound on the fraction of the
    /// sphere left uncovered.
    pub uncovered_bound: f64,
}

impl EpsilonNet {
    /// `(1 + 2 / eps)^l`.
    pub fn packing_bound(&self) -> f64 {
        (1.0 + 2.0 / self.epsilon).powi(self.dimension as i32)
    }

    /// Distance from `x` to the nearest net point.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.points.iter().map(|p| dist(p, x)).fold(f64::INFINITY, f64::min)
    }

    /// Smallest pairwise distance between net points.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.min(dist(p, q));
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|x| format!("{x:.17e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Uniform point on the unit sphere in `R^l`.
pub fn random_unit_vector(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..l).map(|_| standard_normal(rng)).collect();
        let r = norm2(&x);
        if r > 1e-300 {
            return x.into_iter().map(|v| v / r).collect();
        }
    }
}

/// Greedy maximal `eps`-separated set on the unit sphere of `R^l`.
///
/// Uniform proposals are kept when they are farther than `eps` from every
/// kept point; the search ends after `patience` rejections in a row.
pub fn greedy_net(l: usize, eps: f64, seed: u64, patience: u64) -> Result<EpsilonNet> {
    if l == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    if !(eps > 0.0 && eps <= 1.0) && !(l <= 2 && eps > 0.0 && eps <= 2.0) {
        return Err(Error::validation(format!("epsilon {eps} must lie in (0, 1]")));
    }
    if patience == 0 {
        return Err(Error::validation("patience must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut streak = 0;
    let mut proposals = 0;
    while streak < patience {
        proposals += 1;
        let x = random_unit_vector(&mut rng, l);
        if points.iter().all(|p| dist(p, &x) > eps) {
            points.push(x);
            streak = 0;
        } else {
            streak += 1;
        }
    }
    Ok(EpsilonNet {
        dimension: l,
        epsilon: eps,
        points,
        proposals,
        final_streak: streak,
        uncovered_bound: (3.0 / streak as f64).min(1.0),
    })
}

/// Net points extended to `R^n` by trailing zeros.
pub fn embed_zero_padded(net: &EpsilonNet, n: usize) -> Result<Vec<Vec<f64>>> {
    if net.dimension > n {
        return Err(Error::validation(format!(
            "cannot embed dimension {} into {n}",
            net.dimension
        )));
    }
    Ok(net
        .points
        .iter()
        .map(|p| {
            let mut x = p.clone();
            x.resize(n, 0.0);
            x
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallImageEstimate {
    pub probability: Proportion,
    /// `n^-2`.
    pub radius: f64,
    /// `(1 - mu / 2)^n`.
    pub proof_bound: f64,
    /// Estimate at most `proof_bound` plus three standard errors.
    pub within_bound: bool,
}

/// Matrices with i.i.d. entries from `dist`.
pub fn iid_sampler(dist: &DiscreteDistribution, n: usize) -> impl Fn(u64) -> IntegerMatrix + Sync + '_ {
    move |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<i64> = (0..n * n).map(|_| dist.sample(&mut rng)).collect();
        IntegerMatrix::new(n, entries, dist.max_abs_value()).expect("samples respect the support bound")
    }
}

/// Monte Carlo estimate of `P(|M y| <= n^-2)`.
pub fn small_image_event<F>(sampler: F, y: &[f64], mu: f64, trials: u64, seed: u64) -> Result<SmallImageEstimate>
where
    F: Fn(u64) -> IntegerMatrix + Sync,
{
    let n = y.len();
    if (norm2(y) - 1.0).abs() > 1e-12 {
        return Err(Error::validation("y must be a unit vector"));
    }
    if trials == 0 {
        return Err(Error::validation("empty experiment: zero trials"));
    }
    let radius = (n as f64).powi(-2);
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let m = sampler(derive_seed(seed, "small-image", t));
            let mut acc = 0.0;
            for i in 0..n {
                let r: f64 = m.row(i).iter().zip(y).map(|(&a, &b)| a as f64 * b).sum();
                acc += r * r;
                if acc > radius * radius {
                    return false;
                }
            }
            true
        })
        .count() as u64;
    let probability = Proportion::wilson99(hits, trials);
    let proof_bound = (1.0 - mu / 2.0).powi(n as i32);
    Ok(SmallImageEstimate {
        probability,
        radius,
        proof_bound,
        within_bound: probability.estimate <= proof_bound + 3.0 * probability.standard_error(),
    })
}
