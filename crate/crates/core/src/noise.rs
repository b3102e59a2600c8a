//! Discrete noise laws on the integers.
//!
//! A [`DiscreteDistribution`] is a finite integer-supported law. Laws built
//! from finite data keep exact rational weights alongside the `f64` copy so
//! the concentration code downstream can run exactly. The discretized
//! Gaussian only has floating weights.
//!
//! [`BoundednessCertificate`] records a pair `(mu, k)` with
//! `|E e(xi t)| <= (1 - mu) + mu cos(2 pi k t)` for every `t`, where
//! `e(x) = exp(2 pi i x)`.

use std::f64::consts::{SQRT_2, TAU};
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{self, content_lines, parse_rational};

/// Tolerance on the total mass of a floating-weight law.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Slack allowed when comparing a characteristic function with its bound.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

/// Grid size used for automatically issued certificates.
pub const DEFAULT_CERT_GRID: usize = 4096;

/// Finite probability law on the integers.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    name: String,
    values: Vec<i64>,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for DiscreteDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.probs == other.probs && self.exact == other.exact
    }
}

impl DiscreteDistribution {
    /// Law with exact rational weights. Repeated values are merged and
    /// zero-weight atoms dropped; the weights must sum to exactly one.
    pub fn from_rationals(
        name: impl Into<String>,
        atoms: impl IntoIterator<Item = (i64, BigRational)>,
    ) -> Result<Self> {
        let mut atoms: Vec<(i64, BigRational)> = atoms.into_iter().collect();
        if atoms.iter().any(|(_, p)| p.is_negative()) {
            return Err(Error::validation("negative probability"));
        }
        atoms.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(i64, BigRational)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += p,
                _ => merged.push((v, p)),
            }
        }
        merged.retain(|(_, p)| !p.is_zero());
        let total: BigRational = merged.iter().map(|(_, p)| p.clone()).sum();
        if total != text::one() {
            return Err(Error::validation(format!("probabilities sum to {total}, not 1")));
        }
        let values = merged.iter().map(|(v, _)| *v).collect();
        let probs = merged.iter().map(|(_, p)| text::ratio_to_f64(p)).collect();
        let exact = merged.into_iter().map(|(_, p)| p).collect();
        Self::assemble(name.into(), values, probs, Some(exact))
    }

    /// Law with floating weights that must sum to one within
    /// [`MASS_TOLERANCE`].
    pub fn from_floats(name: impl Into<String>, atoms: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(i64, f64)> = atoms.into_iter().collect();
        if atoms.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(Error::validation("probabilities must be finite and nonnegative"));
        }
        atoms.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += p,
                _ => merged.push((v, p)),
            }
        }
        merged.retain(|(_, p)| *p > 0.0);
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::validation(format!(
                "probabilities sum to {total}, not 1 within {MASS_TOLERANCE:e}"
            )));
        }
        let (values, probs) = merged.into_iter().unzip();
        Self::assemble(name.into(), values, probs, None)
    }

    fn assemble(name: String, values: Vec<i64>, probs: Vec<f64>, exact: Option<Vec<BigRational>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("distribution has empty support"));
        }
        let sampler = WeightedIndex::new(&probs).map_err(|e| Error::validation(format!("unusable weights: {e}")))?;
        Ok(DiscreteDistribution {
            name,
            values,
            probs,
            exact,
            sampler,
        })
    }

    pub fn point_mass(value: i64) -> Self {
        Self::from_rationals(format!("point({value})"), [(value, text::one())]).expect("a point mass is a valid law")
    }

    /// Uniform random sign.
    pub fn bernoulli() -> Self {
        let half = BigRational::new(1.into(), 2.into());
        Self::from_rationals("bernoulli", [(-1, half.clone()), (1, half)]).expect("bernoulli is a valid law")
    }

    /// Zero with probability `1 - alpha`, otherwise a uniform sign.
    pub fn lazy_coin(alpha: &BigRational) -> Result<Self> {
        if !alpha.is_positive() || *alpha > text::one() {
            return Err(Error::validation(format!("lazy coin parameter {alpha} outside (0, 1]")));
        }
        let side = alpha / BigRational::from_integer(2.into());
        Self::from_rationals(
            format!("lazy({alpha})"),
            [(-1, side.clone()), (0, text::one() - alpha), (1, side)],
        )
    }

    /// `P(xi = m) = P(m - 1/2 <= Z <= m + 1/2)` for a standard Gaussian `Z`,
    /// truncated at `|m| <= radius` with the outer tail folded into the two
    /// extreme atoms.
    pub fn discretized_gaussian(radius: u32) -> Result<Self> {
        if radius < 6 {
            return Err(Error::validation(format!(
                "truncation radius {radius} is below six standard deviations"
            )));
        }
        // Upper tail P(Z >= x) through erfc to avoid cancellation.
        let upper = |x: f64| 0.5 * statrs::function::erf::erfc(x / SQRT_2);
        let r = i64::from(radius);
        let mut atoms = Vec::with_capacity(2 * radius as usize + 1);
        for m in -r..=r {
            let a = m.unsigned_abs() as f64;
            let p = if m == 0 {
                1.0 - 2.0 * upper(0.5)
            } else if m.abs() == r {
                upper(a - 0.5)
            } else {
                upper(a - 0.5) - upper(a + 0.5)
            };
            atoms.push((m, p));
        }
        Self::from_floats(format!("dgauss({radius})"), atoms)
    }

    /// Discretization of a symmetric continuous law given by its CDF
    /// tabulated on `x >= 0` (linear interpolation between points).
    pub fn symmetric_discretization(table: &SymmetricCdfTable, radius: u32) -> Result<Self> {
        if radius == 0 {
            return Err(Error::validation("radius must be positive"));
        }
        let cdf = |x: f64| table.eval(x);
        let r = i64::from(radius);
        let mut atoms = Vec::new();
        for m in -r..=r {
            let a = m.unsigned_abs() as f64;
            let p = if m == 0 {
                2.0 * (cdf(0.5) - 0.5)
            } else if m.abs() == r {
                1.0 - cdf(a - 0.5)
            } else {
                cdf(a + 0.5) - cdf(a - 0.5)
            };
            atoms.push((m, p.max(0.0)));
        }
        Self::from_floats(format!("symtab({radius})"), atoms)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Atoms `(value, probability)` in increasing value order.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Exact weights, parallel to [`values`](Self::values), when known.
    pub fn exact_probs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn max_abs_value(&self) -> u64 {
        self.values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn prob_of(&self, value: i64) -> f64 {
        self.values.binary_search(&value).map(|i| self.probs[i]).unwrap_or(0.0)
    }

    fn exact_prob_of(&self, value: i64) -> Option<BigRational> {
        let exact = self.exact.as_ref()?;
        Some(
            self.values
                .binary_search(&value)
                .map(|i| exact[i].clone())
                .unwrap_or_else(|_| BigRational::zero()),
        )
    }

    pub fn is_point_mass(&self) -> bool {
        self.values.len() == 1
    }

    /// Symmetric about zero: exactly for rational weights, to within
    /// `1e-15` otherwise.
    pub fn is_symmetric(&self) -> bool {
        self.values.iter().all(|&m| match &self.exact {
            Some(_) => self.exact_prob_of(m) == self.exact_prob_of(-m),
            None => (self.prob_of(m) - self.prob_of(-m)).abs() <= 1e-15,
        })
    }

    /// `|E e(xi t)| = |sum_m P(xi = m) exp(2 pi i m t)|`, clamped into `[0, 1]`.
    pub fn char_magnitude(&self, t: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (m, p) in self.atoms() {
            // Reduce the phase first so large m * t keeps its precision.
            let phase = TAU * (m as f64 * t).rem_euclid(1.0);
            re += p * phase.cos();
            im += p * phase.sin();
        }
        re.hypot(im).min(1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.values[self.sampler.sample(rng)]
    }

    /// Parse the `value probability` literal format. Probabilities may be
    /// decimals or `p/q`; both are read as exact rationals.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for (line_no, line) in content_lines(text) {
            let mut parts = line.split_whitespace();
            let (Some(v), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(line_no, "expected `value probability`"));
            };
            let value: i64 = v
                .parse()
                .map_err(|_| Error::parse(line_no, format!("support value `{v}` is not an integer")))?;
            let prob = parse_rational(p).ok_or_else(|| Error::parse(line_no, format!("bad probability `{p}`")))?;
            atoms.push((value, prob));
        }
        Self::from_rationals(name, atoms)
    }

    /// Render in the literal format read by [`parse`](Self::parse).
    pub fn to_literal(&self) -> String {
        let mut out = format!("# {}\n", self.name);
        for (i, (v, p)) in self.atoms().enumerate() {
            match &self.exact {
                Some(ex) => out.push_str(&format!("{v} {}\n", ex[i])),
                None => out.push_str(&format!("{v} {p:e}\n")),
            }
        }
        out
    }
}

impl fmt::Display for DiscreteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// CDF of a symmetric law tabulated at increasing points `x >= 0`.
/// The first point must be `(0, 1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricCdfTable {
    points: Vec<(f64, f64)>,
}

impl SymmetricCdfTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        match points.first() {
            Some(&(x, f)) if x == 0.0 && (f - 0.5).abs() <= 1e-12 => {}
            _ => return Err(Error::validation("table must start at (0, 1/2)")),
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 < w[0].1 || w[1].1 > 1.0 {
                return Err(Error::validation("table must be increasing and bounded by 1"));
            }
        }
        Ok(SymmetricCdfTable { points })
    }

    fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - self.eval(-x);
        }
        let i = self.points.partition_point(|&(px, _)| px <= x);
        if i == self.points.len() {
            return self.points[i - 1].1;
        }
        let (x0, f0) = self.points[i - 1];
        let (x1, f1) = self.points[i];
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }
}

/// The built-in families.
#[derive(Debug, Clone, PartialEq)]
pub enum StandardNoise {
    Bernoulli,
    LazyCoin(BigRational),
    DiscretizedGaussian { radius: u32 },
    SymmetricDiscretization { table: SymmetricCdfTable, radius: u32 },
}

/// Build one of the standard families.
pub fn make_standard(kind: &StandardNoise) -> Result<DiscreteDistribution> {
    match kind {
        StandardNoise::Bernoulli => Ok(DiscreteDistribution::bernoulli()),
        StandardNoise::LazyCoin(alpha) => DiscreteDistribution::lazy_coin(alpha),
        StandardNoise::DiscretizedGaussian { radius } => DiscreteDistribution::discretized_gaussian(*radius),
        StandardNoise::SymmetricDiscretization { table, radius } => {
            DiscreteDistribution::symmetric_discretization(table, *radius)
        }
    }
}

/// Witness that a law is `(mu, D)`-bounded through the frequency `k <= D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCertificate {
    pub mu: f64,
    pub k: u64,
    pub d_bound: u64,
    /// Grid size of the last successful verification, 0 if never verified.
    pub verified_grid_points: usize,
}

impl BoundednessCertificate {
    pub fn new(mu: f64, k: u64) -> Self {
        BoundednessCertificate {
            mu,
            k,
            d_bound: k,
            verified_grid_points: 0,
        }
    }

    pub fn with_d_bound(mut self, d_bound: u64) -> Self {
        self.d_bound = d_bound;
        self
    }

    /// The dominating trigonometric polynomial `(1 - mu) + mu cos(2 pi k t)`.
    pub fn bound_at(&self, t: f64) -> f64 {
        let phase = TAU * (self.k as f64 * t).rem_euclid(1.0);
        (1.0 - self.mu) + self.mu * phase.cos()
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 0.5) {
            return Err(Error::validation(format!(
                "certificate rejected: mu = {} outside (0, 1/2]",
                self.mu
            )));
        }
        if self.k == 0 || self.k > self.d_bound {
            return Err(Error::validation(format!(
                "certificate rejected: k = {} outside [1, D = {}]",
                self.k, self.d_bound
            )));
        }
        Ok(())
    }
}

/// Outcome of a grid check of a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub holds: bool,
    /// Minimum of `bound(t) - |phi(t)|` over the grid.
    pub min_slack: f64,
    pub worst_t: f64,
    /// Largest possible drop of the slack between grid points.
    pub lipschitz_margin: f64,
    pub grid_points: usize,
}

/// Minimum grid size for a certificate on `dist`: four points per period of
/// the fastest oscillation on either side of the inequality.
pub fn min_grid_size(dist: &DiscreteDistribution, cert: &BoundednessCertificate) -> usize {
    4 * (cert.k as usize + dist.max_abs_value() as usize)
}

/// Check the certificate at `t = j / grid_size`, `j = 0..grid_size`.
///
/// Both sides are trigonometric polynomials. `|phi|` has derivative at most
/// `2 pi E|xi|` and the bound at most `2 pi mu k`, so between grid points the
/// slack can drop by at most `pi (E|xi| + mu k) / grid_size`, reported as
/// `lipschitz_margin`.
pub fn verify_certificate(
    dist: &DiscreteDistribution,
    cert: &BoundednessCertificate,
    grid_size: usize,
) -> Result<CertificateCheck> {
    cert.validate()?;
    let needed = min_grid_size(dist, cert);
    if grid_size < needed {
        return Err(Error::validation(format!(
            "grid of {grid_size} points cannot resolve frequencies up to {}; need >= {needed}",
            needed / 4
        )));
    }
    let mut min_slack = f64::INFINITY;
    let mut worst_t = 0.0;
    for j in 0..grid_size {
        let t = j as f64 / grid_size as f64;
        let slack = cert.bound_at(t) - dist.char_magnitude(t);
        if slack < min_slack {
            min_slack = slack;
            worst_t = t;
        }
    }
    let mean_abs: f64 = dist.atoms().map(|(m, p)| p * m.unsigned_abs() as f64).sum();
    Ok(CertificateCheck {
        holds: min_slack >= -CERTIFICATE_SLACK,
        min_slack,
        worst_t,
        lipschitz_margin: std::f64::consts::PI * (mean_abs + cert.mu * cert.k as f64) / grid_size as f64,
        grid_points: grid_size,
    })
}

/// Issue the `(eps/2, 2s)` certificate of a symmetric law with an atom of
/// mass `eps` at a positive integer `s`.
///
/// The heaviest positive atom is used; ties go to the smallest `s`. The
/// certificate is grid-verified before it is returned.
pub fn certificate_from_symmetric(dist: &DiscreteDistribution) -> Result<BoundednessCertificate> {
    if !dist.is_symmetric() {
        return Err(Error::validation(format!("{} is not symmetric", dist.name())));
    }
    let (s, eps) = heaviest_positive_atom(dist)
        .ok_or_else(|| Error::validation(format!("{} has no positive atom", dist.name())))?;
    let mut cert = BoundednessCertificate::new(eps / 2.0, 2 * s as u64);
    let grid = DEFAULT_CERT_GRID.max(min_grid_size(dist, &cert));
    let check = verify_certificate(dist, &cert, grid)?;
    if !check.holds {
        return Err(Error::validation(format!(
            "issued certificate fails at t = {} (slack {:e})",
            check.worst_t, check.min_slack
        )));
    }
    cert.verified_grid_points = grid;
    Ok(cert)
}

fn heaviest_positive_atom(dist: &DiscreteDistribution) -> Option<(i64, f64)> {
    // Values are sorted, so strict comparison keeps the smallest s on ties.
    dist.atoms()
        .filter(|&(m, _)| m > 0)
        .fold(None, |best: Option<(i64, f64)>, (m, p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((m, p)),
        })
}

/// Pointwise report on the two inequalities behind the symmetric
/// certificate: `|phi(t)| <= (1 - 2 eps) + |2 eps cos 2 pi s t|` and
/// `(1 - 2 eps) + |2 eps cos 2 pi s t| <= (1 - eps/2) + (eps/2) cos 4 pi s t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricChainReport {
    pub eps: f64,
    pub s: i64,
    pub first_holds: bool,
    pub second_holds: bool,
    pub worst_first: f64,
    pub worst_second: f64,
}

pub fn symmetric_chain(dist: &DiscreteDistribution, grid_size: usize) -> Result<SymmetricChainReport> {
    if !dist.is_symmetric() {
        return Err(Error::validation(format!("{} is not symmetric", dist.name())));
    }
    let (s, eps) = heaviest_positive_atom(dist)
        .ok_or_else(|| Error::validation(format!("{} has no positive atom", dist.name())))?;
    let mut worst_first = f64::INFINITY;
    let mut worst_second = f64::INFINITY;
    for j in 0..grid_size {
        let t = j as f64 / grid_size as f64;
        let c = (TAU * (s as f64 * t).rem_euclid(1.0)).cos();
        let middle = (1.0 - 2.0 * eps) + (2.0 * eps * c).abs();
        let c2 = (TAU * (2.0 * s as f64 * t).rem_euclid(1.0)).cos();
        let right = (1.0 - eps / 2.0) + eps / 2.0 * c2;
        worst_first = worst_first.min(middle - dist.char_magnitude(t));
        worst_second = worst_second.min(right - middle);
    }
    Ok(SymmetricChainReport {
        eps,
        s,
        first_holds: worst_first >= -CERTIFICATE_SLACK,
        second_holds: worst_second >= -CERTIFICATE_SLACK,
        worst_first,
        worst_second,
    })
}

/// One draw per coordinate, deterministic in `seed`.
pub fn sample_vector(dists: &[DiscreteDistribution], seed: u64) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dists.iter().map(|d| d.sample(&mut rng)).collect()
}
