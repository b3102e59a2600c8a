use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::sampling::{draw, NoiseModel, TrialSpectrum};
use super::{ExperimentConfig, ExperimentKind, Precision};
use crate::error::{Error, Result};
use crate::linalg::{exact_inverse, exact_solve, integer_det, rational_norm, FrozenMask, IntegerMatrix, RealMatrix};
use crate::noise::DiscreteDistribution;
use crate::stats::{derive_seed, linear_fit, Proportion};

/// Largest number of matrices the exact singularity count enumerates.
pub const SINGULARITY_BUDGET: u128 = 1 << 34;

/// Per-trial records, written as CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self, kind: ExperimentKind) -> String {
        let mut out = format!("# smoothlab records v1 experiment={kind}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// Records plus typed summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub kind: ExperimentKind,
    #[serde(skip)]
    pub records: Table,
    pub config: ExperimentConfig,
    pub wall_seconds: f64,
    pub results: Summary,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Summary {
    Tail(Vec<TailSummary>),
    CondTail(Vec<CondTailSummary>),
    Singularity(Vec<SingularityResult>),
    GeCheck(Vec<GeSummary>),
    Minors(Vec<MinorsSummary>),
    Frozen(Vec<FrozenSummary>),
}

impl RunOutput {
    pub fn csv(&self) -> String {
        self.records.to_csv(self.kind)
    }

    pub fn json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema: &'static str,
            #[serde(flatten)]
            run: &'a RunOutput,
        }
        serde_json::to_string_pretty(&Doc {
            schema: "smoothlab summary v1",
            run: self,
        })
        .expect("summaries serialize")
    }
}

/// Write `<base>.csv` and `<base>.json`.
pub fn write_outputs(out: &RunOutput, base: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let csv = base.with_extension("csv");
    let json = base.with_extension("json");
    std::fs::write(&csv, out.csv())?;
    std::fs::write(&json, out.json() + "\n")?;
    Ok((csv, json))
}

/// Run the experiment named by `cfg.kind` on a pool of `cfg.threads` workers.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let kind = cfg.kind()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::resource(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let (records, results) = pool.install(|| match kind {
        ExperimentKind::Tail => tail_curve(cfg).map(|(t, s)| (t, Summary::Tail(s))),
        ExperimentKind::CondTail => condition_tail(cfg).map(|(t, s)| (t, Summary::CondTail(s))),
        ExperimentKind::Singularity => singularity_run(cfg).map(|(t, s)| (t, Summary::Singularity(s))),
        ExperimentKind::GeCheck => ge_error_experiment(cfg).map(|(t, s)| (t, Summary::GeCheck(s))),
        ExperimentKind::Minors => minors_experiment(cfg).map(|(t, s)| (t, Summary::Minors(s))),
        ExperimentKind::Frozen => frozen_entries_experiment(cfg).map(|(t, s)| (t, Summary::Frozen(s))),
    })?;
    Ok(RunOutput {
        kind,
        records,
        config: cfg.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
        results,
    })
}

fn trial_index(n: usize, t: u64) -> u64 {
    ((n as u64) << 40) | t
}

struct SpectrumRecord {
    n: usize,
    trial: u64,
    seed: u64,
    spec: TrialSpectrum,
}

/// The configured mask, held to the per-row cap.
fn checked_mask(cfg: &ExperimentConfig, base: &IntegerMatrix) -> Result<Option<FrozenMask>> {
    let mask = cfg.mask.build(base)?;
    if let Some(k) = &mask {
        k.check_row_cap()?;
    }
    Ok(mask)
}

fn spectrum_trials(
    base: &IntegerMatrix,
    noise: &NoiseModel,
    mask: Option<&FrozenMask>,
    master: u64,
    stream: &str,
    trials: u64,
) -> Result<Vec<SpectrumRecord>> {
    let n = base.n();
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(master, stream, trial_index(n, trial));
            let spec = TrialSpectrum::of(&draw(base, noise, mask, seed)?)?;
            Ok(SpectrumRecord { n, trial, seed, spec })
        })
        .collect()
}

const SPECTRUM_COLUMNS: [&str; 8] = [
    "n", "trial", "seed", "sigma_1", "sigma_n", "kappa", "singular", "tail_hit",
];

fn spectrum_row(r: &SpectrumRecord, tail_hit: bool) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.trial.to_string(),
        r.seed.to_string(),
        num(r.spec.sigma_1),
        num(r.spec.sigma_n),
        num(r.spec.kappa.value()),
        flag(r.spec.singular),
        flag(tail_hit),
    ]
}

/// Nearest-rank quantile of a sorted sample that may end in infinities.
fn rank_quantile(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub exceedance: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSummary {
    pub n: usize,
    pub trials: u64,
    pub singular: u64,
    /// `P(|(M+N)^-1| = inf)`, the limit of the curve as `x -> inf`.
    pub limit_exceedance: f64,
    /// Least-squares slope of `log P` against `log x` over the grid.
    pub slope: Option<f64>,
    pub curve: Vec<CurvePoint>,
}

/// `P(|(M+N)^-1| >= x)` on a log grid between the median and the 99th
/// percentile of the sampled inverse norms.
pub fn tail_curve(cfg: &ExperimentConfig) -> Result<(Table, Vec<TailSummary>)> {
    if cfg.trials < 100 {
        return Err(Error::validation(format!(
            "tail needs at least 100 trials, got {}",
            cfg.trials
        )));
    }
    let noise = cfg.noise.model()?;
    let mut table = Table::new(&SPECTRUM_COLUMNS);
    table.columns.push("inverse_norm");
    let mut out = Vec::new();
    for &n in &cfg.n {
        let base = cfg.matrix.build(n)?;
        let mask = cfg.mask.build(&base)?;
        let recs = spectrum_trials(&base, &noise, mask.as_ref(), cfg.seed, "tail", cfg.trials)?;
        let mut inv: Vec<f64> = recs.iter().map(|r| r.spec.inverse_norm()).collect();
        inv.sort_by(f64::total_cmp);
        let largest_finite = inv.iter().rev().copied().find(|v| v.is_finite());
        let mut lo = rank_quantile(&inv, 0.5);
        if !lo.is_finite() {
            lo = largest_finite.unwrap_or(1.0);
        }
        let mut hi = rank_quantile(&inv, 0.99);
        if !hi.is_finite() || hi <= lo {
            hi = largest_finite.unwrap_or(lo);
        }
        if hi <= lo {
            hi = lo * 10.0;
        }
        let m = cfg.grid_points;
        let curve: Vec<CurvePoint> = (0..m)
            .map(|i| {
                let x = lo * (hi / lo).powf(i as f64 / (m - 1) as f64);
                let hits = inv.iter().filter(|&&v| v >= x).count() as u64;
                CurvePoint {
                    x,
                    exceedance: Proportion::wilson99(hits, cfg.trials),
                }
            })
            .collect();
        let (lx, ly): (Vec<f64>, Vec<f64>) = curve
            .iter()
            .filter(|p| p.exceedance.hits > 0)
            .map(|p| (p.x.ln(), p.exceedance.estimate.ln()))
            .unzip();
        let x_max = curve.last().map_or(f64::INFINITY, |p| p.x);
        let singular = recs.iter().filter(|r| r.spec.singular).count() as u64;
        for r in &recs {
            let inv = r.spec.inverse_norm();
            let mut row = spectrum_row(r, inv >= x_max);
            row.push(num(inv));
            table.rows.push(row);
        }
        out.push(TailSummary {
            n,
            trials: cfg.trials,
            singular,
            limit_exceedance: singular as f64 / cfg.trials as f64,
            slope: linear_fit(&lx, &ly).map(|f| f.0),
            curve,
        });
    }
    Ok((table, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub b: f64,
    /// `n^B`.
    pub threshold: f64,
    pub exceedance: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondTailSummary {
    pub n: usize,
    pub trials: u64,
    pub singular: u64,
    pub curve: Vec<ThresholdPoint>,
    /// Same sizes and base matrix with unit Gaussian noise.
    pub gaussian: Option<Vec<ThresholdPoint>>,
    /// No `B` where the discrete exceedance is significantly above the
    /// Gaussian one (99% intervals).
    pub comparable: Option<bool>,
}

fn threshold_curve(recs: &[SpectrumRecord], n: usize, b_values: &[f64]) -> Vec<ThresholdPoint> {
    b_values
        .iter()
        .map(|&b| {
            let threshold = (n as f64).powf(b);
            let hits = recs.iter().filter(|r| r.spec.kappa.value() >= threshold).count() as u64;
            ThresholdPoint {
                b,
                threshold,
                exceedance: Proportion::wilson99(hits, recs.len() as u64),
            }
        })
        .collect()
}

fn cond_tail_core(
    cfg: &ExperimentConfig,
    n: usize,
    mask_override: Option<Option<FrozenMask>>,
    table: &mut Table,
) -> Result<CondTailSummary> {
    let noise = cfg.noise.model()?;
    let base = cfg.matrix.build(n)?;
    let mask = match mask_override {
        Some(m) => m,
        None => cfg.mask.build(&base)?,
    };
    let recs = spectrum_trials(&base, &noise, mask.as_ref(), cfg.seed, "cond-tail", cfg.trials)?;
    let curve = threshold_curve(&recs, n, &cfg.b_values);
    let top = cfg.b_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top_threshold = (n as f64).powf(top);
    for r in &recs {
        table.rows.push(spectrum_row(r, r.spec.kappa.value() >= top_threshold));
    }
    let (gaussian, comparable) = if cfg.compare_gaussian && !cfg.noise.is_gaussian() {
        let g = spectrum_trials(
            &base,
            &NoiseModel::Gaussian { sigma: 1.0 },
            mask.as_ref(),
            cfg.seed,
            "gaussian-baseline",
            cfg.trials,
        )?;
        let gc = threshold_curve(&g, n, &cfg.b_values);
        let ok = curve
            .iter()
            .zip(&gc)
            .all(|(d, g)| d.exceedance.lower <= g.exceedance.upper);
        (Some(gc), Some(ok))
    } else {
        (None, None)
    };
    Ok(CondTailSummary {
        n,
        trials: cfg.trials,
        singular: recs.iter().filter(|r| r.spec.singular).count() as u64,
        curve,
        gaussian,
        comparable,
    })
}

/// `P(kappa(M+N) >= n^B)` for each configured `B`.
pub fn condition_tail(cfg: &ExperimentConfig) -> Result<(Table, Vec<CondTailSummary>)> {
    let mut table = Table::new(&SPECTRUM_COLUMNS);
    let out = cfg
        .n
        .iter()
        .map(|&n| cond_tail_core(cfg, n, None, &mut table))
        .collect::<Result<_>>()?;
    Ok((table, out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrozenSummary {
    pub masked: CondTailSummary,
    /// Same seeds, noise on every entry.
    pub unmasked: CondTailSummary,
    pub max_frozen_per_row: usize,
    pub row_cap: usize,
    pub identical_records: bool,
}

/// `cond-tail` with the configured entries frozen, next to the unmasked run
/// at the same seeds.
pub fn frozen_entries_experiment(cfg: &ExperimentConfig) -> Result<(Table, Vec<FrozenSummary>)> {
    let mut table = Table::new(&SPECTRUM_COLUMNS);
    let mut out = Vec::new();
    for &n in &cfg.n {
        let base = cfg.matrix.build(n)?;
        let mask = checked_mask(cfg, &base)?;
        let max_frozen_per_row = mask
            .as_ref()
            .map_or(0, |k| (0..n).map(|i| k.frozen_in_row(i)).max().unwrap_or(0));
        let start = table.rows.len();
        let masked = cond_tail_core(cfg, n, Some(mask), &mut table)?;
        let mut plain = Table::new(&SPECTRUM_COLUMNS);
        let unmasked = cond_tail_core(cfg, n, Some(None), &mut plain)?;
        out.push(FrozenSummary {
            masked,
            unmasked,
            max_frozen_per_row,
            row_cap: FrozenMask::row_cap(n),
            identical_records: table.rows[start..] == plain.rows[..],
        });
    }
    Ok((table, out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorsSummary {
    pub n: usize,
    pub trials: u64,
    /// `n^B`.
    pub threshold: f64,
    /// Trials where every leading minor has `kappa <= n^B`.
    pub all_good: Proportion,
    pub largest_kappa: f64,
}

/// Condition numbers of all leading principal minors of `M + N`.
pub fn minors_experiment(cfg: &ExperimentConfig) -> Result<(Table, Vec<MinorsSummary>)> {
    let noise = cfg.noise.model()?;
    let mut table = Table::new(&["n", "trial", "seed", "max_minor_kappa", "worst_order", "all_good"]);
    let mut out = Vec::new();
    for &n in &cfg.n {
        if n > 300 {
            return Err(Error::validation("minors supports n <= 300"));
        }
        let base = cfg.matrix.build(n)?;
        let mask = cfg.mask.build(&base)?;
        let threshold = (n as f64).powf(cfg.b);
        let recs: Vec<(u64, u64, f64, usize)> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(cfg.seed, "minors", trial_index(n, trial));
                let d = draw(&base, &noise, mask.as_ref(), seed)?;
                let mut worst = (0.0, 1);
                for k in 1..=n {
                    let kappa = TrialSpectrum::of(&d.leading_minor(k))?.kappa.value();
                    if kappa > worst.0 {
                        worst = (kappa, k);
                    }
                }
                Ok((trial, seed, worst.0, worst.1))
            })
            .collect::<Result<_>>()?;
        let good = recs.iter().filter(|r| r.2 <= threshold).count() as u64;
        for &(trial, seed, kappa, order) in &recs {
            table.rows.push(vec![
                n.to_string(),
                trial.to_string(),
                seed.to_string(),
                num(kappa),
                order.to_string(),
                flag(kappa <= threshold),
            ]);
        }
        out.push(MinorsSummary {
            n,
            trials: cfg.trials,
            threshold,
            all_good: Proportion::wilson99(good, cfg.trials),
            largest_kappa: recs.iter().map(|r| r.2).fold(0.0, f64::max),
        });
    }
    Ok((table, out))
}

/// Gaussian elimination with partial pivoting carried out in `T`.
///
/// Returns `None` when a pivot column is entirely zero.
pub fn gepp_solve<T: Float>(a: &RealMatrix, b: &[f64]) -> Option<Vec<T>> {
    let n = a.n();
    let cast = |x: f64| T::from(x).expect("finite input");
    let mut m: Vec<T> = a.data().iter().map(|&x| cast(x)).collect();
    let mut rhs: Vec<T> = b.iter().map(|&x| cast(x)).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i * n + k].abs().partial_cmp(&m[j * n + k].abs()).expect("finite"))?;
        if m[p * n + k] == T::zero() {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            rhs.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                m[i * n + j] = m[i * n + j] - f * m[k * n + j];
            }
            rhs[i] = rhs[i] - f * rhs[k];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s = s - m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// `|x~ - x| / |x|` with the difference taken exactly.
fn relative_error(approx: &[f64], exact: &[BigRational]) -> f64 {
    let diff: Vec<BigRational> = approx
        .iter()
        .zip(exact)
        .map(|(&a, e)| BigRational::from_float(a).expect("finite solution") - e)
        .collect();
    rational_norm(&diff) / rational_norm(exact)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeSummary {
    pub n: usize,
    pub trials: u64,
    pub singular: u64,
    /// Nonsingular draws with `kappa <= max_kappa`.
    pub eligible: u64,
    pub epsilon: f64,
    /// Eligible draws with `error / (eps kappa) <= ratio_cap`.
    pub within_cap: Option<Proportion>,
    pub ratio_median: Option<f64>,
    pub ratio_max: Option<f64>,
}

/// Relative error of `(M+N) x = b` solved at reduced precision, scored
/// against `eps_machine * kappa`.
pub fn ge_error_experiment(cfg: &ExperimentConfig) -> Result<(Table, Vec<GeSummary>)> {
    let dist = cfg.noise.discrete().map_err(|_| {
        Error::validation("ge-check needs discrete noise: the reference solve is exact on integer systems")
    })?;
    let noise = NoiseModel::Discrete(dist);
    let eps = cfg.precision.epsilon();
    let mut table = Table::new(&[
        "n",
        "trial",
        "seed",
        "kappa",
        "singular",
        "eligible",
        "rel_error",
        "ratio",
    ]);
    let mut out = Vec::new();
    for &n in &cfg.n {
        let base = cfg.matrix.build(n)?;
        let mask = cfg.mask.build(&base)?;
        let recs: Vec<(u64, u64, f64, bool, f64, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let idx = trial_index(n, trial);
                let seed = derive_seed(cfg.seed, "ge-check", idx);
                let d = draw(&base, &noise, mask.as_ref(), seed)?;
                let super::Draw::Integer(a) = &d else {
                    unreachable!("discrete noise gives integer draws")
                };
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "ge-check-rhs", idx));
                let mut b: Vec<i64> = (0..n).map(|_| rng.gen_range(-10..=10)).collect();
                if b.iter().all(|&x| x == 0) {
                    b[0] = 1;
                }
                let spec = TrialSpectrum::of(&d)?;
                let Some(exact) = exact_solve(a, &b).filter(|_| !spec.singular) else {
                    return Ok((trial, seed, f64::INFINITY, true, f64::NAN, f64::NAN));
                };
                let bf: Vec<f64> = b.iter().map(|&x| x as f64).collect();
                let approx: Option<Vec<f64>> = match cfg.precision {
                    Precision::Single => {
                        gepp_solve::<f32>(&d.to_real(), &bf).map(|x| x.into_iter().map(f64::from).collect())
                    }
                    Precision::Double => gepp_solve::<f64>(&d.to_real(), &bf),
                    Precision::Exact => Some(Vec::new()),
                };
                let kappa = spec.kappa.value();
                let rel = match (cfg.precision, approx) {
                    (Precision::Exact, _) => {
                        // Second exact path: x = M^-1 b.
                        let inv = exact_inverse(a).expect("nonsingular draw");
                        let diff: Vec<BigRational> = (0..n)
                            .map(|i| {
                                let xi: BigRational = (0..n)
                                    .map(|j| inv.get(i, j) * BigRational::from_integer(b[j].into()))
                                    .sum();
                                xi - &exact[i]
                            })
                            .collect();
                        rational_norm(&diff) / rational_norm(&exact)
                    }
                    (_, Some(x)) if x.iter().all(|v| v.is_finite()) => relative_error(&x, &exact),
                    _ => f64::INFINITY,
                };
                let ratio = if rel == 0.0 { 0.0 } else { rel / (eps * kappa) };
                Ok((trial, seed, kappa, false, rel, ratio))
            })
            .collect::<Result<_>>()?;
        let mut ratios = Vec::new();
        let mut singular = 0;
        for &(trial, seed, kappa, sing, rel, ratio) in &recs {
            let eligible = !sing && kappa <= cfg.max_kappa;
            singular += u64::from(sing);
            if eligible {
                ratios.push(ratio);
            }
            table.rows.push(vec![
                n.to_string(),
                trial.to_string(),
                seed.to_string(),
                num(kappa),
                flag(sing),
                flag(eligible),
                num(rel),
                num(ratio),
            ]);
        }
        ratios.sort_by(f64::total_cmp);
        let eligible = ratios.len() as u64;
        let within = ratios.iter().filter(|&&r| r <= cfg.ratio_cap).count() as u64;
        out.push(GeSummary {
            n,
            trials: cfg.trials,
            singular,
            eligible,
            epsilon: eps,
            within_cap: (eligible > 0).then(|| Proportion::wilson99(within, eligible)),
            ratio_median: (eligible > 0).then(|| rank_quantile(&ratios, 0.5)),
            ratio_max: ratios.last().copied(),
        });
    }
    Ok((table, out))
}

/// Exact `P(det = 0)` for an `n x n` matrix of i.i.d. entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityResult {
    pub n: usize,
    pub probability: BigRational,
    /// Singular matrices among all support configurations.
    pub singular_matrices: u64,
    pub total_matrices: u64,
}

impl Serialize for SingularityResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            n: usize,
            probability: String,
            probability_approx: f64,
            singular_matrices: &'a u64,
            total_matrices: &'a u64,
        }
        Out {
            n: self.n,
            probability: self.probability.to_string(),
            probability_approx: self.probability.to_f64().unwrap_or(f64::NAN),
            singular_matrices: &self.singular_matrices,
            total_matrices: &self.total_matrices,
        }
        .serialize(s)
    }
}

/// Fraction-free elimination on a small integer matrix; `None` on overflow.
fn small_det_is_zero(a: &mut [i128], n: usize) -> Option<bool> {
    let mut prev = 1i128;
    for k in 0..n {
        if a[k * n + k] == 0 {
            let Some(r) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                return Some(true);
            };
            for j in 0..n {
                a.swap(k * n + j, r * n + j);
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i * n + j]
                    .checked_mul(a[k * n + k])?
                    .checked_sub(a[i * n + k].checked_mul(a[k * n + j])?)?;
                a[i * n + j] = v / prev;
            }
        }
        prev = a[k * n + k];
    }
    Some(a[n * n - 1] == 0)
}

fn det_is_zero_exact(entries: &[i64], n: usize) -> bool {
    let mut a: Vec<i128> = entries.iter().map(|&x| i128::from(x)).collect();
    match small_det_is_zero(&mut a, n) {
        Some(z) => z,
        None => {
            let bound = entries.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0);
            let m = IntegerMatrix::new(n, entries.to_vec(), bound).expect("entries within bound");
            integer_det(&m).is_zero()
        }
    }
}

/// Exhaustive `P(det = 0)` over all `|support|^(n^2)` matrices.
pub fn singularity_probability(n: usize, dist: &DiscreteDistribution) -> Result<SingularityResult> {
    if n == 0 {
        return Err(Error::validation("n must be positive"));
    }
    let probs = dist
        .exact_probs()
        .ok_or_else(|| Error::validation("exact enumeration needs rational probabilities"))?;
    let s = dist.values().len();
    let total = (s as u128)
        .checked_pow((n * n) as u32)
        .filter(|&t| t <= SINGULARITY_BUDGET)
        .ok_or_else(|| {
            Error::resource(format!(
                "{s}^{} matrices exceed the enumeration budget 2^34; estimate by Monte Carlo instead",
                n * n
            ))
        })? as u64;
    let denom = probs.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let weights: Vec<BigUint> = probs
        .iter()
        .map(|p| {
            (p * BigRational::from_integer(denom.clone()))
                .to_integer()
                .to_biguint()
                .expect("nonnegative")
        })
        .collect();
    let rows_count = s.pow(n as u32);
    let rows: Vec<(Vec<i64>, BigUint)> = (0..rows_count)
        .map(|mut r| {
            let mut vals = Vec::with_capacity(n);
            let mut w = BigUint::one();
            for _ in 0..n {
                vals.push(dist.values()[r % s]);
                w *= &weights[r % s];
                r /= s;
            }
            (vals, w)
        })
        .collect();
    let uniform = rows.iter().all(|r| r.1 == rows[0].1);
    let (count, weight) = (0..rows_count)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; n];
            idx[0] = first;
            let mut entries = vec![0i64; n * n];
            let mut count = 0u64;
            let mut weight = BigUint::zero();
            loop {
                for (i, &r) in idx.iter().enumerate() {
                    entries[i * n..(i + 1) * n].copy_from_slice(&rows[r].0);
                }
                if det_is_zero_exact(&entries, n) {
                    count += 1;
                    if !uniform {
                        weight += idx.iter().fold(BigUint::one(), |acc, &r| acc * &rows[r].1);
                    }
                }
                // Odometer over rows 1..n.
                let mut pos = 1;
                loop {
                    if pos == n {
                        return (count, weight);
                    }
                    idx[pos] += 1;
                    if idx[pos] < rows_count {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        })
        .reduce(|| (0, BigUint::zero()), |a, b| (a.0 + b.0, a.1 + b.1));
    let weight = if uniform {
        BigUint::from(count) * rows[0].1.pow(n as u32)
    } else {
        weight
    };
    let full = denom.to_biguint().expect("positive").pow((n * n) as u32);
    Ok(SingularityResult {
        n,
        probability: BigRational::new(weight.into(), full.into()),
        singular_matrices: count,
        total_matrices: total,
    })
}

fn singularity_run(cfg: &ExperimentConfig) -> Result<(Table, Vec<SingularityResult>)> {
    let dist = cfg.noise.discrete()?;
    let mut table = Table::new(&[
        "n",
        "singular_matrices",
        "total_matrices",
        "probability",
        "probability_approx",
    ]);
    let mut out = Vec::new();
    for &n in &cfg.n {
        let r = singularity_probability(n, &dist)?;
        table.rows.push(vec![
            n.to_string(),
            r.singular_matrices.to_string(),
            r.total_matrices.to_string(),
            r.probability.to_string(),
            num(r.probability.to_f64().unwrap_or(f64::NAN)),
        ]);
        out.push(r);
    }
    Ok((table, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::NoiseSpec;

    fn cfg(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig::defaults(kind)
    }

    #[test]
    fn singularity_small_cases() {
        let b = DiscreteDistribution::bernoulli();
        let one = singularity_probability(1, &b).unwrap();
        assert!(one.probability.is_zero());
        let two = singularity_probability(2, &b).unwrap();
        assert_eq!(two.probability, BigRational::new(1.into(), 2.into()));
        assert_eq!((two.singular_matrices, two.total_matrices), (8, 16));
        assert!(matches!(singularity_probability(6, &b), Err(Error::Resource(_))));
        let dg = DiscreteDistribution::discretized_gaussian(6).unwrap();
        assert!(singularity_probability(2, &dg).is_err());
    }

    #[test]
    fn nonuniform_singularity_weights() {
        // Lazy coin with alpha = 1/2: P(0) = 1/2, P(+-1) = 1/4. For n = 1
        // the matrix is singular exactly when the entry is zero.
        let lazy = DiscreteDistribution::lazy_coin(&BigRational::new(1.into(), 2.into())).unwrap();
        let r = singularity_probability(1, &lazy).unwrap();
        assert_eq!(r.probability, BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn gepp_matches_known_solution() {
        let a = RealMatrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let x = gepp_solve::<f64>(&a, &[4.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        let s = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert!(gepp_solve::<f64>(&s, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn identity_ge_is_exact() {
        let mut c = cfg(ExperimentKind::GeCheck);
        c.matrix = "identity".parse().unwrap();
        c.mask = "all".parse().unwrap();
        c.n = vec![6];
        c.trials = 5;
        let (t, s) = ge_error_experiment(&c).unwrap();
        assert_eq!(s[0].eligible, 5);
        assert!(t
            .column("rel_error")
            .unwrap()
            .iter()
            .all(|e| e.parse::<f64>().unwrap() <= 6.0 * 2f64.powi(-24)));
        c.noise = "gaussian".parse().unwrap();
        assert!(ge_error_experiment(&c).is_err());
    }

    #[test]
    fn frozen_identity_minors_are_perfect() {
        let mut c = cfg(ExperimentKind::Minors);
        c.matrix = "identity".parse().unwrap();
        c.mask = "all".parse().unwrap();
        c.n = vec![7];
        c.trials = 3;
        let (t, s) = minors_experiment(&c).unwrap();
        assert_eq!(s[0].largest_kappa, 1.0);
        assert_eq!(s[0].all_good.hits, 3);
        assert!(t.column("max_minor_kappa").unwrap().iter().all(|k| *k == "1e0"));
    }

    #[test]
    fn exact_precision_has_zero_error() {
        let mut c = cfg(ExperimentKind::GeCheck);
        c.precision = Precision::Exact;
        c.trials = 20;
        let (_, s) = ge_error_experiment(&c).unwrap();
        assert_eq!(s[0].ratio_max, Some(0.0));
    }

    #[test]
    fn cond_tail_b_zero_is_certain() {
        let mut c = cfg(ExperimentKind::CondTail);
        c.n = vec![8];
        c.trials = 50;
        c.b_values = vec![0.0, 1.0, 2.0, 40.0];
        let (t, s) = condition_tail(&c).unwrap();
        assert_eq!(t.rows.len(), 50);
        let hits: Vec<u64> = s[0].curve.iter().map(|p| p.exceedance.hits).collect();
        assert_eq!(hits[0], 50);
        assert!(hits.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn tail_refuses_small_runs() {
        let mut c = cfg(ExperimentKind::Tail);
        c.trials = 99;
        assert!(tail_curve(&c).is_err());
        c.noise = NoiseSpec::Bernoulli;
        c.n = vec![2];
        c.trials = 400;
        let (_, s) = tail_curve(&c).unwrap();
        assert!(s[0].curve[0].exceedance.estimate >= 0.5);
    }

    #[test]
    fn frozen_mask_over_cap_is_rejected() {
        let mut c = cfg(ExperimentKind::Frozen);
        c.n = vec![50];
        c.trials = 5;
        c.mask = "row:0".parse().unwrap();
        assert!(matches!(frozen_entries_experiment(&c), Err(Error::Validation(_))));
        c.mask = "none".parse().unwrap();
        let (_, s) = frozen_entries_experiment(&c).unwrap();
        assert!(s[0].identical_records);
    }
}
