//! Small-ball probabilities of integer linear forms `(Z + X) . v`.
//!
//! [`exact_concentration`] convolves the laws of `xi_i v_i` exactly;
//! [`fourier_bound`] evaluates the integral
//! `int_0^1 prod_i ((1 - mu) + mu cos(2 pi a_i v_i t)) dt`
//! that dominates it when every `xi_i` carries a `(mu, a_i)` certificate.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::TAU;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::FrozenMask;
use crate::noise::{BoundednessCertificate, DiscreteDistribution, CERTIFICATE_SLACK};
use crate::stats::Proportion;
use crate::text::ratio_to_f64;

/// Default cap on the number of DP states.
pub const DEFAULT_STATE_BUDGET: u64 = 100_000_000;

/// Ranges wider than this use a sparse map instead of a dense table.
pub const DENSE_RANGE_LIMIT: u64 = 1_000_000;

/// Largest sample count the equispaced Fourier average will use.
pub const MAX_FOURIER_POINTS: u64 = 1 << 32;

/// Integer weight vector `v` with its sup-norm.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    v: Vec<i64>,
    bound: u64,
}

impl WeightVector {
    pub fn new(v: Vec<i64>) -> Self {
        let bound = v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        WeightVector { v, bound }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }
}

impl From<Vec<i64>> for WeightVector {
    fn from(v: Vec<i64>) -> Self {
        Self::new(v)
    }
}

/// The random row `Z + X` together with the Fourier-side data: multipliers
/// `a_i` (lcm at most `n^K`) and an exclusion set `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationQuery {
    dists: Vec<DiscreteDistribution>,
    shift: Option<Vec<i64>>,
    multipliers: Vec<u64>,
    lcm_exponent: Option<f64>,
    exclusions: BTreeSet<usize>,
}

impl ConcentrationQuery {
    /// Independent coordinates with the given laws, unit multipliers, no
    /// shift and no exclusions.
    pub fn new(dists: Vec<DiscreteDistribution>) -> Self {
        let n = dists.len();
        ConcentrationQuery {
            dists,
            shift: None,
            multipliers: vec![1; n],
            lcm_exponent: None,
            exclusions: BTreeSet::new(),
        }
    }

    pub fn iid(dist: DiscreteDistribution, n: usize) -> Self {
        Self::new(vec![dist; n])
    }

    pub fn with_shift(mut self, shift: Vec<i64>) -> Result<Self> {
        if shift.len() != self.len() {
            return Err(Error::validation("shift length differs from dimension"));
        }
        self.shift = Some(shift);
        Ok(self)
    }

    /// Set `a_1..a_n`, checking `lcm(a_i : i not in E) <= n^K` when `K` is given.
    pub fn with_multipliers(mut self, a: Vec<u64>, lcm_exponent: Option<f64>) -> Result<Self> {
        if a.len() != self.len() {
            return Err(Error::validation("multiplier count differs from dimension"));
        }
        if a.contains(&0) {
            return Err(Error::validation("multipliers must be positive integers"));
        }
        self.multipliers = a;
        self.lcm_exponent = lcm_exponent;
        self.check_lcm()?;
        Ok(self)
    }

    /// Multipliers `a_i = k_i` taken from per-coordinate certificates.
    pub fn with_certificates(self, certs: &[BoundednessCertificate]) -> Result<Self> {
        if certs.len() != self.len() {
            return Err(Error::validation("certificate count differs from dimension"));
        }
        let a = certs.iter().map(|c| c.k).collect();
        let k = self.lcm_exponent;
        self.with_multipliers(a, k)
    }

    /// Exclusion set `E`, at most `ceil(n^0.99)` coordinates.
    pub fn with_exclusions(mut self, e: impl IntoIterator<Item = usize>) -> Result<Self> {
        let e: BTreeSet<usize> = e.into_iter().collect();
        let n = self.len();
        if e.iter().any(|&i| i >= n) {
            return Err(Error::validation("exclusion index out of range"));
        }
        let cap = FrozenMask::row_cap(n);
        if e.len() > cap {
            return Err(Error::validation(format!(
                "exclusion set of size {} exceeds ceil(n^0.99) = {cap}",
                e.len()
            )));
        }
        self.exclusions = e;
        self.check_lcm()?;
        Ok(self)
    }

    fn check_lcm(&self) -> Result<()> {
        let Some(k) = self.lcm_exponent else {
            return Ok(());
        };
        let lcm = self.multiplier_lcm();
        let cap = (self.len() as f64).powf(k);
        if lcm.to_f64().unwrap_or(f64::INFINITY) > cap * (1.0 + 1e-12) {
            return Err(Error::validation(format!(
                "lcm of multipliers {lcm} exceeds n^K = {cap}"
            )));
        }
        Ok(())
    }

    /// `lcm(a_i : i not in E)`.
    pub fn multiplier_lcm(&self) -> BigUint {
        self.multipliers
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.exclusions.contains(i))
            .fold(BigUint::one(), |acc, (_, &a)| acc.lcm(&BigUint::from(a)))
    }

    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }

    pub fn dists(&self) -> &[DiscreteDistribution] {
        &self.dists
    }

    pub fn shift(&self) -> Option<&[i64]> {
        self.shift.as_deref()
    }

    pub fn multipliers(&self) -> &[u64] {
        &self.multipliers
    }

    pub fn exclusions(&self) -> &BTreeSet<usize> {
        &self.exclusions
    }

    fn check_weights(&self, v: &WeightVector) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::validation(format!(
                "weight vector has length {}, query has {}",
                v.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// `sup_a P((Z + X) . v = a)` and the smallest maximizing `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concentration {
    pub sup: f64,
    #[serde(skip)]
    pub sup_exact: Option<BigRational>,
    pub argmax: i64,
}

/// Limits for [`exact_concentration_with`].
#[derive(Debug, Clone, Copy)]
pub struct DpBudget {
    pub max_states: u64,
}

impl Default for DpBudget {
    fn default() -> Self {
        DpBudget {
            max_states: DEFAULT_STATE_BUDGET,
        }
    }
}

pub fn exact_concentration(q: &ConcentrationQuery, v: &WeightVector) -> Result<Concentration> {
    exact_concentration_with(q, v, DpBudget::default())
}

/// Exact distribution of `X . v` by sequential convolution.
///
/// With all weights rational and a range of at most [`DENSE_RANGE_LIMIT`],
/// the convolution runs on integer numerators over the common denominator
/// and the supremum is returned exactly. Otherwise it runs in `f64`, dense
/// or sparse depending on the width of the range.
pub fn exact_concentration_with(q: &ConcentrationQuery, v: &WeightVector, budget: DpBudget) -> Result<Concentration> {
    q.check_weights(v)?;
    let offset: i128 = match q.shift() {
        Some(z) => z
            .iter()
            .zip(v.as_slice())
            .map(|(&a, &b)| i128::from(a) * i128::from(b))
            .sum(),
        None => 0,
    };
    let active: Vec<(usize, i64)> = v
        .as_slice()
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, w)| w != 0)
        .collect();
    let (mut lo, mut hi) = (0i128, 0i128);
    for &(i, w) in &active {
        let vals = q.dists[i].values();
        let (a, b) = (
            i128::from(vals[0]) * i128::from(w),
            i128::from(*vals.last().unwrap()) * i128::from(w),
        );
        lo += a.min(b);
        hi += a.max(b);
    }
    let width = u64::try_from(hi - lo + 1).unwrap_or(u64::MAX);
    if width > budget.max_states {
        return Err(Error::resource(format!(
            "range of X.v spans {width} values, above the budget of {}; use a Monte Carlo estimate",
            budget.max_states
        )));
    }
    let to_a = |index: i128| -> i64 { i64::try_from(index + lo + offset).expect("argmax fits in 64 bits") };
    let exact_ok = width <= DENSE_RANGE_LIMIT && active.iter().all(|&(i, _)| q.dists[i].is_exact());
    if exact_ok {
        let (index, count, denom) = exact_dense(q, &active, lo, width as usize);
        let sup = BigRational::new(BigInt::from(count), BigInt::from(denom));
        return Ok(Concentration {
            sup: ratio_to_f64(&sup),
            sup_exact: Some(sup),
            argmax: to_a(index as i128),
        });
    }
    let (index, sup) = if width <= DENSE_RANGE_LIMIT {
        float_dense(q, &active, lo, width as usize)
    } else {
        float_sparse(q, &active, lo)
    };
    Ok(Concentration {
        sup,
        sup_exact: None,
        argmax: to_a(index),
    })
}

fn exact_dense(q: &ConcentrationQuery, active: &[(usize, i64)], lo: i128, width: usize) -> (usize, BigUint, BigUint) {
    // Per coordinate: numerators over the lcm of the denominators.
    let mut denom = BigUint::one();
    let mut coords = Vec::with_capacity(active.len());
    for &(i, w) in active {
        let dist = &q.dists[i];
        let probs = dist.exact_probs().expect("checked exact");
        let d = probs.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let nums: Vec<BigUint> = probs
            .iter()
            .map(|p| (p.numer() * (&d / p.denom())).to_biguint().expect("nonnegative"))
            .collect();
        let steps: Vec<i128> = dist.values().iter().map(|&m| i128::from(m) * i128::from(w)).collect();
        denom *= d.to_biguint().expect("positive");
        coords.push((steps, nums));
    }
    let mut table = vec![BigUint::zero(); width];
    table[(-lo) as usize] = BigUint::one();
    let mut span = (0i128, 0i128);
    for (steps, nums) in coords {
        let smin = *steps.iter().min().unwrap();
        let smax = *steps.iter().max().unwrap();
        let next_span = (span.0 + smin, span.1 + smax);
        let mut next = vec![BigUint::zero(); (next_span.1 - next_span.0 + 1) as usize];
        for x in span.0..=span.1 {
            let c = &table[(x - lo) as usize];
            if c.is_zero() {
                continue;
            }
            for (s, num) in steps.iter().zip(&nums) {
                next[(x + s - next_span.0) as usize] += c * num;
            }
        }
        table.iter_mut().for_each(|c| c.set_zero());
        for (k, c) in next.into_iter().enumerate() {
            table[(next_span.0 + k as i128 - lo) as usize] = c;
        }
        span = next_span;
    }
    let mut best = 0usize;
    for (k, c) in table.iter().enumerate() {
        if *c > table[best] {
            best = k;
        }
    }
    let count = table.swap_remove(best);
    (best, count, denom)
}

fn float_dense(q: &ConcentrationQuery, active: &[(usize, i64)], lo: i128, width: usize) -> (i128, f64) {
    let mut table = vec![0.0f64; width];
    let mut span = (0i128, 0i128);
    table[(-lo) as usize] = 1.0;
    let mut scratch = vec![0.0f64; width];
    for &(i, w) in active {
        let dist = &q.dists[i];
        let steps: Vec<i128> = dist.values().iter().map(|&m| i128::from(m) * i128::from(w)).collect();
        let smin = *steps.iter().min().unwrap();
        let smax = *steps.iter().max().unwrap();
        let next_span = (span.0 + smin, span.1 + smax);
        scratch[(next_span.0 - lo) as usize..=(next_span.1 - lo) as usize].fill(0.0);
        for x in span.0..=span.1 {
            let p = table[(x - lo) as usize];
            if p == 0.0 {
                continue;
            }
            for (s, &pr) in steps.iter().zip(dist.probs()) {
                scratch[(x + s - lo) as usize] += p * pr;
            }
        }
        std::mem::swap(&mut table, &mut scratch);
        span = next_span;
    }
    let mut best = 0usize;
    for (k, &p) in table.iter().enumerate() {
        if p > table[best] {
            best = k;
        }
    }
    (best as i128, table[best])
}

fn float_sparse(q: &ConcentrationQuery, active: &[(usize, i64)], lo: i128) -> (i128, f64) {
    let mut table: HashMap<i128, f64> = HashMap::from([(0, 1.0)]);
    for &(i, w) in active {
        let dist = &q.dists[i];
        let mut next: HashMap<i128, f64> = HashMap::with_capacity(table.len() * dist.values().len());
        for (&x, &p) in &table {
            for (m, pr) in dist.atoms() {
                *next.entry(x + i128::from(m) * i128::from(w)).or_insert(0.0) += p * pr;
            }
        }
        table = next;
    }
    // Smallest key among maximizers, independent of hash order.
    let (key, p) = table
        .into_iter()
        .fold((i128::MAX, f64::NEG_INFINITY), |(bk, bp), (k, p)| {
            if p > bp || (p == bp && k < bk) {
                (k, p)
            } else {
                (bk, bp)
            }
        });
    (key - lo, p)
}

/// `int_0^1 prod_{i not in E} ((1 - mu) + mu cos(2 pi a_i v_i t)) dt`.
///
/// The integrand is a trigonometric polynomial of degree
/// `D = sum |a_i v_i|`, so its mean over `N = D + 1` equispaced points
/// equals its constant Fourier coefficient exactly.
pub fn fourier_bound(q: &ConcentrationQuery, v: &WeightVector, mu: f64) -> Result<f64> {
    q.check_weights(v)?;
    let freqs = fourier_frequencies(q, v)?;
    fourier_integral(&freqs, mu)
}

fn fourier_frequencies(q: &ConcentrationQuery, v: &WeightVector) -> Result<Vec<u64>> {
    v.as_slice()
        .iter()
        .zip(q.multipliers())
        .enumerate()
        .filter(|(i, _)| !q.exclusions().contains(i))
        .map(|(_, (&w, &a))| {
            w.unsigned_abs()
                .checked_mul(a)
                .ok_or_else(|| Error::Overflow("a_i v_i exceeds 64 bits".into()))
        })
        .filter(|f| !matches!(f, Ok(0)))
        .collect()
}

/// The integral for explicit frequencies `f_i = |a_i v_i|`.
pub fn fourier_integral(freqs: &[u64], mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= 0.5) {
        return Err(Error::validation(format!(
            "mu = {mu} outside (0, 1/2]; the integrand could turn negative"
        )));
    }
    let degree: u128 = freqs.iter().map(|&f| u128::from(f)).sum();
    let points = degree + 1;
    if points > u128::from(MAX_FOURIER_POINTS) {
        return Err(Error::resource(format!(
            "{points} sample points needed for the Fourier average"
        )));
    }
    let n = points as u64;
    let mut acc = 0.0f64;
    for j in 0..n {
        let mut prod = 1.0;
        for &f in freqs {
            // Exact phase reduction: (f * j mod N) / N.
            let r = (u128::from(f) * u128::from(j) % points) as f64 / n as f64;
            prod *= (1.0 - mu) + mu * (TAU * r).cos();
        }
        acc += prod;
    }
    Ok(acc / n as f64)
}

/// Result of comparing the exact concentration with its Fourier bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceCheck {
    pub exact: f64,
    pub bound: f64,
    pub mu: f64,
    /// `bound - exact`.
    pub gap: f64,
    pub holds: bool,
}

/// Check `sup_a P((Z+X).v = a) <= int prod ((1-mu) + mu cos 2 pi a_i v_i t) dt`
/// with `a_i = k_i` and `mu = min_i mu_i` from the coordinate certificates.
pub fn check_dominance(
    q: &ConcentrationQuery,
    v: &WeightVector,
    certs: &[BoundednessCertificate],
) -> Result<DominanceCheck> {
    if let Some(i) = certs.iter().position(|c| c.verified_grid_points == 0) {
        return Err(Error::validation(format!(
            "certificate of coordinate {i} was never verified"
        )));
    }
    let q = q.clone().with_certificates(certs)?;
    let mu = certs.iter().map(|c| c.mu).fold(0.5, f64::min);
    let exact = exact_concentration(&q, v)?.sup;
    let bound = fourier_bound(&q, v, mu)?;
    Ok(DominanceCheck {
        exact,
        bound,
        mu,
        gap: bound - exact,
        holds: exact <= bound + CERTIFICATE_SLACK,
    })
}

/// Monte Carlo estimate of `P(|(Z + X) . y| <= n^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NondegeneracyEstimate {
    pub probability: Proportion,
    /// `1 - mu / 2`.
    pub threshold: f64,
    /// The whole 99% interval lies above the threshold.
    pub violation: bool,
}

pub fn check_nondegeneracy(
    dists: &[DiscreteDistribution],
    shift: Option<&[i64]>,
    y: &[f64],
    mu: f64,
    trials: u64,
    seed: u64,
) -> Result<NondegeneracyEstimate> {
    let n = dists.len();
    if y.len() != n || shift.is_some_and(|z| z.len() != n) {
        return Err(Error::validation("dimension mismatch"));
    }
    if (crate::linalg::norm2(y) - 1.0).abs() > 1e-12 {
        return Err(Error::validation("y must be a unit vector"));
    }
    if trials == 0 {
        return Err(Error::validation("empty experiment: zero trials"));
    }
    let radius = (n as f64).powi(-2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let dot: f64 = dists
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let z = shift.map_or(0, |z| z[i]);
                (z + d.sample(&mut rng)) as f64 * y[i]
            })
            .sum();
        if dot.abs() <= radius {
            hits += 1;
        }
    }
    let probability = Proportion::wilson99(hits, trials);
    let threshold = 1.0 - mu / 2.0;
    Ok(NondegeneracyEstimate {
        probability,
        threshold,
        violation: probability.lower > threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Richness {
    Rich,
    Poor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichnessReport {
    pub class: Richness,
    /// `sup_{a, i} P(X_i . w = a)`.
    pub sup: f64,
    pub row: usize,
    /// `n^(-A - offset)`.
    pub threshold: f64,
}

/// Default offset in the threshold `n^(-A - 4)`.
pub const RICH_OFFSET: f64 = 4.0;

/// `w` is rich when `sup_{a, i} P(X_i . w = a) >= n^(-A - offset)`.
/// Identical row laws are evaluated once.
pub fn classify_rich(
    rows: &[ConcentrationQuery],
    w: &WeightVector,
    a_exponent: f64,
    offset: f64,
) -> Result<RichnessReport> {
    if rows.is_empty() {
        return Err(Error::validation("no rows to classify against"));
    }
    let n = w.len() as f64;
    let threshold = n.powf(-a_exponent - offset);
    let mut best: Option<(usize, f64)> = None;
    let mut seen: Vec<&ConcentrationQuery> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if seen.contains(&row) {
            continue;
        }
        seen.push(row);
        let c = exact_concentration(row, w)?;
        if best.is_none_or(|(_, s)| c.sup > s) {
            best = Some((i, c.sup));
        }
    }
    let (row, sup) = best.expect("at least one row");
    Ok(RichnessReport {
        class: if sup >= threshold {
            Richness::Rich
        } else {
            Richness::Poor
        },
        sup,
        row,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::certificate_from_symmetric;

    fn bern(n: usize) -> ConcentrationQuery {
        ConcentrationQuery::iid(DiscreteDistribution::bernoulli(), n)
    }

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn small_sign_sums() {
        let c = exact_concentration(&bern(2), &vec![1, 1].into()).unwrap();
        assert_eq!(c.sup_exact, Some(rat(1, 2)));
        assert_eq!(c.argmax, 0);
        let c = exact_concentration(&bern(4), &vec![1, 1, 1, 1].into()).unwrap();
        assert_eq!(c.sup_exact, Some(rat(6, 16)));
        assert_eq!(c.argmax, 0);
    }

    #[test]
    fn zero_form_concentrates_at_shift() {
        let q = bern(3).with_shift(vec![4, -1, 7]).unwrap();
        let c = exact_concentration(&q, &WeightVector::zeros(3)).unwrap();
        assert_eq!(c.sup, 1.0);
        assert_eq!(c.argmax, 0);
        let c = exact_concentration(&q, &vec![0, 2, 0].into()).unwrap();
        assert_eq!(c.sup, 0.5);
        assert_eq!(c.argmax, -4);
    }

    #[test]
    fn float_path_matches_exact() {
        let g = DiscreteDistribution::discretized_gaussian(8).unwrap();
        let q = ConcentrationQuery::iid(g.clone(), 2);
        let c = exact_concentration(&q, &vec![1, 1].into()).unwrap();
        assert!(c.sup_exact.is_none());
        let direct: f64 = g.atoms().map(|(m, p)| p * g.prob_of(-m)).sum();
        assert!((c.sup - direct).abs() < 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        let q = bern(3);
        let err = exact_concentration_with(
            &q,
            &vec![1, 1_000_000, 1_000_000_000].into(),
            DpBudget { max_states: 1000 },
        );
        assert!(matches!(err, Err(Error::Resource(_))));
    }

    #[test]
    fn sparse_path_for_wide_ranges() {
        let q = bern(3);
        let c = exact_concentration(&q, &vec![1, 1_000_000, 1_000_000].into()).unwrap();
        assert_eq!(c.sup, 0.25);
        assert_eq!(c.argmax, -1);
    }

    #[test]
    fn fourier_examples() {
        let one = ConcentrationQuery::iid(DiscreteDistribution::bernoulli(), 1);
        assert!((fourier_bound(&one, &vec![1].into(), 0.5).unwrap() - 0.5).abs() < 1e-15);
        let q = bern(2).with_multipliers(vec![2, 2], None).unwrap();
        assert!((fourier_bound(&q, &vec![1, 1].into(), 0.25).unwrap() - 19.0 / 32.0).abs() < 1e-15);
        assert_eq!(fourier_bound(&q, &WeightVector::zeros(2), 0.25).unwrap(), 1.0);
        assert!(matches!(
            fourier_bound(&q, &vec![1, 1].into(), 0.6),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn dominance_on_sign_pair() {
        let cert = certificate_from_symmetric(&DiscreteDistribution::bernoulli()).unwrap();
        let r = check_dominance(&bern(2), &vec![1, 1].into(), &[cert, cert]).unwrap();
        assert!(r.holds);
        assert!((r.gap - 3.0 / 32.0).abs() < 1e-15);
        let r = check_dominance(&bern(2), &WeightVector::zeros(2), &[cert, cert]).unwrap();
        assert!(r.holds && r.gap.abs() < 1e-15);
        let unverified = BoundednessCertificate::new(0.25, 2);
        assert!(check_dominance(&bern(2), &vec![1, 1].into(), &[unverified, unverified]).is_err());
    }

    #[test]
    fn query_invariants() {
        let q = bern(4);
        assert!(q.clone().with_multipliers(vec![2, 3, 4, 5], Some(1.0)).is_err());
        assert!(q.clone().with_multipliers(vec![2, 2, 4, 4], Some(1.0)).is_ok());
        assert!(q.clone().with_multipliers(vec![0, 1, 1, 1], None).is_err());
        // ceil(4^0.99) = 4, so every subset is allowed at n = 4.
        assert!(q.clone().with_exclusions([0, 1, 2, 3]).is_ok());
        assert!(bern(100).with_exclusions(0..97).is_err());
        assert!(bern(100).with_exclusions(0..96).is_ok());
        assert!(q.clone().with_exclusions([7]).is_err());
        let qe = q.with_exclusions([1, 2]).unwrap();
        assert_eq!(qe.exclusions().len(), 2);
    }

    #[test]
    fn exclusions_drop_factors() {
        let q = bern(3).with_multipliers(vec![2, 2, 2], None).unwrap();
        let v: WeightVector = vec![1, 3, 2].into();
        let full = fourier_bound(&q, &v, 0.25).unwrap();
        let dropped = fourier_bound(&q.clone().with_exclusions([1]).unwrap(), &v, 0.25).unwrap();
        assert!(dropped >= full);
    }

    #[test]
    fn nondegeneracy_examples() {
        let n = 10;
        let b = vec![DiscreteDistribution::bernoulli(); n];
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let r = check_nondegeneracy(&b, None, &e1, 0.25, 10_000, 1).unwrap();
        assert_eq!(r.probability.hits, 0);
        assert!(!r.violation);
        let mut y = vec![0.0; n];
        y[0] = std::f64::consts::FRAC_1_SQRT_2;
        y[1] = std::f64::consts::FRAC_1_SQRT_2;
        let r = check_nondegeneracy(&b, None, &y, 0.25, 20_000, 2).unwrap();
        assert!((r.probability.estimate - 0.5).abs() < 0.03);
        assert!(r.probability.upper < 7.0 / 8.0);
        let pm = vec![DiscreteDistribution::point_mass(0); n];
        let r = check_nondegeneracy(&pm, None, &e1, 0.25, 1000, 3).unwrap();
        assert_eq!(r.probability.estimate, 1.0);
        assert!(r.violation);
        assert!(check_nondegeneracy(&b, None, &vec![1.0; n], 0.25, 10, 1).is_err());
    }

    #[test]
    fn richness_examples() {
        let n = 10;
        let rows = vec![bern(n); n];
        let mut en = vec![0; n];
        en[n - 1] = 1;
        let r = classify_rich(&rows, &en.into(), 1.0, RICH_OFFSET).unwrap();
        assert_eq!(r.class, Richness::Rich);
        assert_eq!(r.sup, 0.5);
        let r = classify_rich(&rows, &WeightVector::zeros(n), 1.0, RICH_OFFSET).unwrap();
        assert_eq!((r.class, r.sup), (Richness::Rich, 1.0));

        let binary = |n: usize| WeightVector::new((0..n).map(|i| 1i64 << i).collect());
        let r = classify_rich(&vec![bern(12); 12], &binary(12), 1.0, RICH_OFFSET).unwrap();
        assert_eq!(r.sup, 2f64.powi(-12));
        assert_eq!(r.class, Richness::Rich);
    }

    #[test]
    fn binary_weights_turn_poor_at_23() {
        // 2^-n < n^-5 first holds at n = 23; at n = 22 the weights are still rich.
        let binary = |n: usize| WeightVector::new((0..n).map(|i| 1i64 << i).collect());
        let r = classify_rich(&[bern(23)], &binary(23), 1.0, RICH_OFFSET).unwrap();
        assert_eq!(r.sup, 2f64.powi(-23));
        assert_eq!(r.class, Richness::Poor);
        assert!(2f64.powi(-22) >= 22f64.powi(-5));
    }
}
