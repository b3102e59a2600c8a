//! Symmetric generalized arithmetic progressions over the rationals.
//!
//! A [`Gap`] with generators `g_1..g_d` and dimensions `N_1..N_d` is the set
//! `{ sum x_i g_i : |x_i| <= N_i }`. Its volume is `prod (2 N_i + 1)`, the
//! number of coefficient vectors; the element set can be smaller when the
//! generators are dependent.
//!
//! All arithmetic is exact (`Ratio<i128>`).

use std::fmt::Write as _;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::concentration::{fourier_integral, WeightVector};
use crate::error::{Error, Result};
use crate::text::{content_lines, parse_rational};

pub type Rational = Ratio<i128>;

/// Largest volume [`Gap::enumerate`] will expand.
pub const ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gap {
    generators: Vec<Rational>,
    dims: Vec<u64>,
}

impl Gap {
    pub fn new(generators: Vec<Rational>, dims: Vec<u64>) -> Result<Self> {
        if generators.len() != dims.len() {
            return Err(Error::validation("one dimension per generator is required"));
        }
        Ok(Gap { generators, dims })
    }

    /// Rank-1 progression `{x g : |x| <= n}`.
    pub fn progression(g: impl Into<Rational>, n: u64) -> Self {
        Gap {
            generators: vec![g.into()],
            dims: vec![n],
        }
    }

    /// The progression `{0}` of rank 0.
    pub fn zero() -> Self {
        Gap {
            generators: Vec::new(),
            dims: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Rational] {
        &self.generators
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    /// `prod (2 N_i + 1)`, saturating at `u128::MAX`.
    pub fn volume(&self) -> u128 {
        self.dims
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(2 * u128::from(n) + 1))
    }

    /// Largest element, `sum N_i |g_i|`.
    pub fn max_abs(&self) -> Rational {
        self.generators
            .iter()
            .zip(&self.dims)
            .map(|(g, &n)| g.abs() * Rational::from(i128::from(n)))
            .sum()
    }

    /// Sorted element set with duplicates collapsed.
    pub fn enumerate(&self) -> Result<Vec<Rational>> {
        let (nums, denom) = self.enumerate_scaled()?;
        Ok(nums.into_iter().map(|x| Rational::new(x, denom)).collect())
    }

    /// Elements as sorted numerators over a common denominator.
    fn enumerate_scaled(&self) -> Result<(Vec<i128>, i128)> {
        if self.volume() > ENUMERATION_CAP {
            return Err(Error::resource(format!(
                "volume {} exceeds the enumeration cap {ENUMERATION_CAP}",
                self.volume()
            )));
        }
        let denom = self.generators.iter().fold(1i128, |acc, g| acc.lcm(g.denom()));
        let mut set = vec![0i128];
        for (g, &n) in self.generators.iter().zip(&self.dims) {
            let step = (g * Rational::from(denom)).to_integer();
            let n = i128::from(n);
            let mut next = Vec::with_capacity(set.len() * (2 * n as usize + 1));
            for &s in &set {
                for x in -n..=n {
                    next.push(s + x * step);
                }
            }
            next.sort_unstable();
            next.dedup();
            set = next;
        }
        Ok((set, denom))
    }

    /// `k . P = { k x : x in P }`.
    pub fn dilate(&self, k: Rational) -> Gap {
        Gap {
            generators: self.generators.iter().map(|g| g * k).collect(),
            dims: self.dims.clone(),
        }
    }

    /// `P + Q = { x + y }`, concatenating generator lists.
    pub fn sumset(&self, other: &Gap) -> Gap {
        Gap {
            generators: self.generators.iter().chain(&other.generators).copied().collect(),
            dims: self.dims.iter().chain(&other.dims).copied().collect(),
        }
    }

    /// Exact membership; coefficient search up to rank 2, enumeration above.
    pub fn contains(&self, x: Rational) -> Result<bool> {
        match self.rank() {
            0 => Ok(x.is_zero()),
            1 => Ok(coefficient(x, self.generators[0]).is_some_and(|c| c.unsigned_abs() <= u128::from(self.dims[0]))),
            2 => {
                // Iterate the smaller dimension, solve for the other.
                let (i, j) = if self.dims[0] <= self.dims[1] { (0, 1) } else { (1, 0) };
                let (gi, gj) = (self.generators[i], self.generators[j]);
                let (ni, nj) = (i128::from(self.dims[i]), u128::from(self.dims[j]));
                Ok((-ni..=ni)
                    .any(|c| coefficient(x - gi * Rational::from(c), gj).is_some_and(|d| d.unsigned_abs() <= nj)))
            }
            _ => Ok(self.enumerate()?.binary_search(&x).is_ok()),
        }
    }

    /// Membership in `{ x / a : x in P, a != 0, |a| <= a_bound }`.
    pub fn contains_quotient(&self, y: Rational, a_bound: u64) -> Result<bool> {
        // P is symmetric, so a > 0 suffices.
        for a in 1..=i128::from(a_bound) {
            if self.contains(y * Rational::from(a))? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Parse `rank d` followed by `d` lines `generator dim`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        Self::parse_lines(&mut lines, 1)
    }

    fn parse_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, fallback_line: usize) -> Result<Self> {
        let (no, head) = lines
            .next()
            .ok_or_else(|| Error::parse(fallback_line, "expected `rank d`"))?;
        let d: usize = head
            .strip_prefix("rank")
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| Error::parse(no, "expected `rank d`"))?;
        let mut generators = Vec::with_capacity(d);
        let mut dims = Vec::with_capacity(d);
        for _ in 0..d {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::parse(no, format!("expected {d} generator lines")))?;
            let mut parts = line.split_whitespace();
            let (Some(g), Some(n), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(no, "expected `generator dim`"));
            };
            generators.push(parse_small_rational(g).ok_or_else(|| Error::parse(no, format!("bad generator `{g}`")))?);
            dims.push(
                n.parse()
                    .map_err(|_| Error::parse(no, format!("bad dimension `{n}`")))?,
            );
        }
        Gap::new(generators, dims)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("rank {}\n", self.rank());
        for (g, n) in self.generators.iter().zip(&self.dims) {
            let _ = writeln!(out, "{g} {n}");
        }
        out
    }
}

/// `x / g` when it is an integer.
fn coefficient(x: Rational, g: Rational) -> Option<i128> {
    if g.is_zero() {
        return x.is_zero().then_some(0);
    }
    let c = x / g;
    c.is_integer().then(|| c.to_integer())
}

fn parse_small_rational(s: &str) -> Option<Rational> {
    let r = parse_rational(s)?;
    Some(Rational::new(r.numer().to_i128()?, r.denom().to_i128()?))
}

/// Output of the discretization: `P` is covered by `P_small + P_sparse`,
/// with `P_small` inside `[-R/S, R/S]` and `S P_sparse` separated by `R S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretizationResult {
    pub p_small: Gap,
    pub p_sparse: Gap,
    pub scale_r: Rational,
    pub s: u64,
    pub r0: u64,
    /// Smallest `d'` with `R <= (S V)^d' R_0`.
    pub d_prime: u32,
}

impl DiscretizationResult {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text).peekable();
        let mut scale_r = None;
        let mut s = None;
        let mut r0 = None;
        let mut d_prime = None;
        let mut small = None;
        let mut sparse = None;
        while let Some((no, line)) = lines.next() {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let value = parts.next();
            let bad = || Error::parse(no, format!("bad value for `{key}`"));
            match key {
                "R" => scale_r = Some(value.and_then(parse_small_rational).ok_or_else(bad)?),
                "S" => s = Some(value.and_then(|v| v.parse().ok()).ok_or_else(bad)?),
                "R0" => r0 = Some(value.and_then(|v| v.parse().ok()).ok_or_else(bad)?),
                "dprime" => d_prime = Some(value.and_then(|v| v.parse().ok()).ok_or_else(bad)?),
                "small" => small = Some(Gap::parse_lines(&mut lines, no)?),
                "sparse" => sparse = Some(Gap::parse_lines(&mut lines, no)?),
                other => return Err(Error::parse(no, format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::parse(0, format!("missing `{k}`"));
        Ok(DiscretizationResult {
            p_small: small.ok_or_else(|| missing("small"))?,
            p_sparse: sparse.ok_or_else(|| missing("sparse"))?,
            scale_r: scale_r.ok_or_else(|| missing("R"))?,
            s: s.ok_or_else(|| missing("S"))?,
            r0: r0.ok_or_else(|| missing("R0"))?,
            d_prime: d_prime.ok_or_else(|| missing("dprime"))?,
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "R {}\nS {}\nR0 {}\ndprime {}\nsmall\n{}sparse\n{}",
            self.scale_r,
            self.s,
            self.r0,
            self.d_prime,
            self.p_small.to_text(),
            self.p_sparse.to_text()
        )
    }
}

/// Per-clause outcome of [`verify_discretization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClauseReport {
    pub scale: bool,
    pub smallness: bool,
    pub sparseness: bool,
    pub covering: bool,
}

impl ClauseReport {
    pub fn all(&self) -> bool {
        self.scale && self.smallness && self.sparseness && self.covering
    }

    fn first_failure(&self) -> Option<&'static str> {
        [
            (self.scale, "scale"),
            (self.smallness, "smallness"),
            (self.sparseness, "sparseness"),
            (self.covering, "covering"),
        ]
        .into_iter()
        .find_map(|(ok, name)| (!ok).then_some(name))
    }
}

/// `(S V)^d R_0` compared with `R`, exactly.
fn within_scale(r: Rational, s: u64, v: u128, r0: u64, d: u32) -> bool {
    let base = u128::from(s).saturating_mul(v);
    let mut bound = u128::from(r0);
    for _ in 0..d {
        bound = bound.saturating_mul(base);
    }
    if bound == u128::MAX {
        return true;
    }
    // R <= bound  <=>  numer <= bound * denom (denom > 0).
    let (n, q) = (*r.numer(), *r.denom());
    match i128::try_from(bound).ok().and_then(|b| b.checked_mul(q)) {
        Some(rhs) => n <= rhs,
        None => true,
    }
}

/// Check the four clauses exactly by enumeration and rational arithmetic.
pub fn verify_discretization(p: &Gap, r: &DiscretizationResult) -> Result<ClauseReport> {
    if r.s == 0 || r.r0 == 0 {
        return Err(Error::validation("S and R_0 must be positive integers"));
    }
    let d = p.rank();
    let v = p.volume();
    let s = Rational::from(i128::from(r.s));
    let scale = r.scale_r >= Rational::from(1) && within_scale(r.scale_r, r.s, v, r.r0, r.d_prime);

    let smallness = r.p_small.rank() <= d && r.p_small.volume() <= v && r.p_small.max_abs() <= r.scale_r / s;

    let sparse = r.p_sparse.enumerate()?;
    let separated = sparse.windows(2).all(|w| (w[1] - w[0]) * s >= r.scale_r * s);
    let sparseness = r.p_sparse.rank() <= d && r.p_sparse.volume() <= v && separated;

    let small = r.p_small.enumerate()?;
    let elements = p.enumerate()?;
    let covering = elements
        .iter()
        .all(|&x| sparse.iter().any(|&y| small.binary_search(&(x - y)).is_ok()));

    Ok(ClauseReport {
        scale,
        smallness,
        sparseness,
        covering,
    })
}

/// Constructive discretization of a rank-1 integer progression
/// `P = {x g : |x| <= N}`.
///
/// Each coefficient is split as `x = q m + r` with `|r| <= floor(q/2)`,
/// giving `P_small = {r g : |r| <= min(floor(q/2), N)}` and
/// `P_sparse = {m q g : |m| <= M}`. A split is feasible when some `R >= 1`
/// satisfies `S max|P_small| <= R <= q g` (no upper limit if `P_sparse = {0}`);
/// `R` is then the feasible value closest to `R_0`. Among all `q` in
/// `1..=2N+1` the one with `R` closest to `R_0` (in ratio) wins, ties going
/// to the smaller `P_sparse` and then the smaller `q`.
pub fn discretize_rank1(p: &Gap, r0: u64, s: u64) -> Result<DiscretizationResult> {
    if p.rank() != 1 {
        return Err(Error::validation("discretize_rank1 needs a rank-1 progression"));
    }
    if r0 == 0 || s == 0 {
        return Err(Error::validation("R_0 and S must be positive"));
    }
    let g_rat = p.generators()[0];
    if !g_rat.is_integer() || g_rat < Rational::from(1) {
        return Err(Error::validation("generator must be a positive integer"));
    }
    let g = g_rat.to_integer() as u128;
    let n = u128::from(p.dims()[0]);
    let (s_w, r0_w) = (u128::from(s), u128::from(r0));

    // (score, sparse volume, q, R, r_max, m_max)
    let mut best: Option<(f64, u128, u128, u128, u128, u128)> = None;
    for q in 1..=2 * n + 1 {
        let half = q / 2;
        let r_max = half.min(n);
        let m_max = if n <= half { 0 } else { (n - half).div_ceil(q) };
        let lo = (s_w * r_max * g).max(1);
        let hi = if m_max == 0 { u128::MAX } else { q * g };
        if lo > hi {
            continue;
        }
        let r = r0_w.clamp(lo, hi);
        let score = ((r as f64) / (r0_w as f64)).ln().abs();
        let cand = (score, 2 * m_max + 1, q, r, r_max, m_max);
        let better = match &best {
            None => true,
            Some(b) => (cand.0, cand.1, cand.2) < (b.0, b.1, b.2),
        };
        if better {
            best = Some(cand);
        }
    }
    let (_, _, q, r, r_max, m_max) = best.ok_or_else(|| Error::validation("no feasible split of the progression"))?;
    let to_rat = |x: u128| Rational::from(x as i128);
    let v = p.volume();
    let mut d_prime = 0;
    while !within_scale(to_rat(r), s, v, r0, d_prime) {
        d_prime += 1;
    }
    let result = DiscretizationResult {
        p_small: Gap::progression(to_rat(g), r_max as u64),
        p_sparse: Gap::progression(to_rat(q * g), m_max as u64),
        scale_r: to_rat(r),
        s,
        r0,
        d_prime,
    };
    let report = verify_discretization(p, &result)?;
    if let Some(clause) = report.first_failure() {
        return Err(Error::validation(format!(
            "constructed discretization fails the {clause} clause"
        )));
    }
    Ok(result)
}

/// Knobs for [`inverse_lo_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseLoConfig {
    pub mu: f64,
    /// Search runs when the Fourier integral is at least `n^-A`.
    pub a_exponent: f64,
    pub rank_cap: usize,
    pub volume_cap: u64,
    pub except_cap: usize,
    /// Largest `s` in the candidate generators `v_i / s`.
    pub multiplier_cap: u64,
}

impl InverseLoConfig {
    /// Defaults for dimension `n`: `mu = 1/4`, `A = 2`, rank 2, volume
    /// `n^3`, no exceptions, `s <= n`.
    pub fn for_dimension(n: usize) -> Self {
        InverseLoConfig {
            mu: 0.25,
            a_exponent: 2.0,
            rank_cap: 2,
            volume_cap: (n as u64).pow(3).max(1),
            except_cap: 0,
            multiplier_cap: n as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseLoHit {
    pub gap: Gap,
    /// Indices `i` with `v_i` outside the progression.
    pub excluded: Vec<usize>,
    /// `s u` is an entry of `v` for every generator `u`.
    pub s: u64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InverseLoOutcome {
    /// The Fourier integral is below `n^-A`; nothing to search for.
    NotTriggered {
        bound: f64,
        threshold: f64,
    },
    Found(InverseLoHit),
    /// High concentration but no progression within the caps.
    CounterexampleCandidate {
        bound: f64,
        threshold: f64,
    },
}

/// Hard cap on candidate pairs times search depth for the rank-2 search.
const RANK2_WORK_CAP: u128 = 2_000_000_000;

/// Small-`n` search for a progression containing almost all of `v` when
/// `int prod ((1 - mu) + mu cos 2 pi v_i t) dt >= n^-A`.
///
/// Generators are drawn from `{ |v_i| / s : 1 <= s <= multiplier_cap }` with
/// one `s` shared by all generators. Rank 1 is tried first, then rank 2.
pub fn inverse_lo_search(v: &WeightVector, cfg: &InverseLoConfig) -> Result<InverseLoOutcome> {
    let n = v.len();
    if n == 0 || n > 16 {
        return Err(Error::validation("inverse search is exhaustive only for 1 <= n <= 16"));
    }
    if cfg.rank_cap == 0 || cfg.rank_cap > 2 {
        return Err(Error::validation("rank cap must be 1 or 2"));
    }
    if cfg.multiplier_cap == 0 || cfg.volume_cap == 0 {
        return Err(Error::validation("caps must be positive"));
    }
    let freqs: Vec<u64> = v
        .as_slice()
        .iter()
        .map(|x| x.unsigned_abs())
        .filter(|&f| f > 0)
        .collect();
    let bound = fourier_integral(&freqs, cfg.mu)?;
    let threshold = (n as f64).powf(-cfg.a_exponent);
    if bound < threshold {
        return Ok(InverseLoOutcome::NotTriggered { bound, threshold });
    }
    let values: Vec<Rational> = v.as_slice().iter().map(|&x| Rational::from(i128::from(x))).collect();
    if values.iter().all(|x| x.is_zero()) {
        return Ok(InverseLoOutcome::Found(InverseLoHit {
            gap: Gap::zero(),
            excluded: Vec::new(),
            s: 1,
            bound,
        }));
    }
    let mut distinct: Vec<i128> = values
        .iter()
        .filter(|x| !x.is_zero())
        .map(|x| x.numer().abs())
        .collect();
    distinct.sort_unstable();
    distinct.dedup();

    if let Some(hit) = rank1_search(&values, &distinct, cfg, bound) {
        return Ok(InverseLoOutcome::Found(hit));
    }
    if cfg.rank_cap >= 2 {
        let pairs = (distinct.len() * distinct.len()) as u128 * u128::from(cfg.multiplier_cap);
        let depth = u128::from(cfg.volume_cap) * n as u128;
        if pairs.saturating_mul(depth) > RANK2_WORK_CAP {
            return Err(Error::resource(format!(
                "rank-2 search space of {pairs} generator pairs times depth {depth} is too large"
            )));
        }
        if let Some(hit) = rank2_search(&values, &distinct, cfg, bound) {
            return Ok(InverseLoOutcome::Found(hit));
        }
    }
    log::warn!(
        "counterexample candidate: no progression of rank <= {} and volume <= {} covers v = {:?} (integral {bound:e} >= {threshold:e})",
        cfg.rank_cap,
        cfg.volume_cap,
        v.as_slice()
    );
    Ok(InverseLoOutcome::CounterexampleCandidate { bound, threshold })
}

fn rank1_search(values: &[Rational], distinct: &[i128], cfg: &InverseLoConfig, bound: f64) -> Option<InverseLoHit> {
    let mut best: Option<(u128, usize, u64, Rational, InverseLoHit)> = None;
    for s in 1..=cfg.multiplier_cap {
        for &d in distinct {
            let u = Rational::new(d, i128::from(s));
            let mut excluded = Vec::new();
            let mut dim = 0u128;
            for (i, &x) in values.iter().enumerate() {
                match coefficient(x, u) {
                    Some(c) => dim = dim.max(c.unsigned_abs()),
                    None => excluded.push(i),
                }
            }
            if excluded.len() > cfg.except_cap {
                continue;
            }
            let volume = 2 * dim + 1;
            if volume > u128::from(cfg.volume_cap) {
                continue;
            }
            let key = (volume, excluded.len(), s, u);
            if best.as_ref().is_none_or(|b| key < (b.0, b.1, b.2, b.3)) {
                let hit = InverseLoHit {
                    gap: Gap::progression(u, dim as u64),
                    excluded,
                    s,
                    bound,
                };
                best = Some((key.0, key.1, key.2, key.3, hit));
            }
        }
    }
    best.map(|b| b.4)
}

fn rank2_search(values: &[Rational], distinct: &[i128], cfg: &InverseLoConfig, bound: f64) -> Option<InverseLoHit> {
    let x1_max = ((cfg.volume_cap - 1) / 2) as i128;
    let mut best: Option<(u128, usize, InverseLoHit)> = None;
    for s in 1..=cfg.multiplier_cap {
        for (a, &d1) in distinct.iter().enumerate() {
            for &d2 in &distinct[a + 1..] {
                let u1 = Rational::new(d1, i128::from(s));
                let u2 = Rational::new(d2, i128::from(s));
                // Smallest |x2| reachable with |x1| <= N1, per element.
                let mut reach: Vec<Option<u128>> = vec![None; values.len()];
                for n1 in 0..=x1_max {
                    for (i, &x) in values.iter().enumerate() {
                        for c in [n1, -n1] {
                            if let Some(x2) = coefficient(x - u1 * Rational::from(c), u2) {
                                let m = x2.unsigned_abs();
                                if reach[i].is_none_or(|r| m < r) {
                                    reach[i] = Some(m);
                                }
                            }
                        }
                    }
                    let mut need: Vec<u128> = reach.iter().map(|r| r.unwrap_or(u128::MAX)).collect();
                    need.sort_unstable();
                    let kept = &need[..need.len() - cfg.except_cap.min(need.len())];
                    let n2 = kept.last().copied().unwrap_or(0);
                    if n2 == u128::MAX {
                        continue;
                    }
                    let volume = (2 * n1 as u128 + 1).saturating_mul(2 * n2 + 1);
                    if volume > u128::from(cfg.volume_cap) {
                        continue;
                    }
                    let excluded: Vec<usize> = (0..values.len()).filter(|&i| reach[i].is_none_or(|r| r > n2)).collect();
                    if excluded.len() > cfg.except_cap {
                        continue;
                    }
                    if best.as_ref().is_none_or(|b| (volume, excluded.len()) < (b.0, b.1)) {
                        let gap = Gap::new(vec![u1, u2], vec![n1 as u64, n2 as u64]).expect("matched lengths");
                        best = Some((
                            volume,
                            excluded.len(),
                            InverseLoHit {
                                gap,
                                excluded,
                                s,
                                bound,
                            },
                        ));
                    }
                }
            }
        }
    }
    best.map(|b| b.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: i128) -> Rational {
        Rational::from(x)
    }

    fn ints(p: &Gap) -> Vec<i128> {
        p.enumerate().unwrap().into_iter().map(|x| x.to_integer()).collect()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(ints(&Gap::progression(r(3), 2)), vec![-6, -3, 0, 3, 6]);
        let p = Gap::new(vec![r(1), r(10)], vec![1, 1]).unwrap();
        assert_eq!(ints(&p), vec![-11, -10, -9, -1, 0, 1, 9, 10, 11]);
        assert_eq!(ints(&Gap::progression(r(1), 0)), vec![0]);
        let dup = Gap::new(vec![r(1), r(2)], vec![2, 1]).unwrap();
        assert!(dup.enumerate().unwrap().len() < dup.volume() as usize);
    }

    #[test]
    fn dilate_versus_sumset() {
        let p = Gap::progression(r(1), 1);
        assert_eq!(ints(&p.dilate(r(2))), vec![-2, 0, 2]);
        assert_eq!(ints(&p.sumset(&p)), vec![-2, -1, 0, 1, 2]);
        assert_eq!(p.dilate(r(1)).enumerate().unwrap(), p.enumerate().unwrap());
        assert_eq!(p.sumset(&Gap::zero()).enumerate().unwrap(), p.enumerate().unwrap());
    }

    #[test]
    fn membership() {
        let p = Gap::progression(r(3), 2);
        assert!(p.contains(r(6)).unwrap());
        assert!(!p.contains(r(5)).unwrap());
        assert!(p.contains_quotient(Rational::new(3, 2), 2).unwrap());
        assert!(!p.contains_quotient(Rational::new(3, 2), 1).unwrap());
        let q = Gap::new(vec![Rational::new(1, 2), r(7), r(100)], vec![1, 2, 1]).unwrap();
        for x in q.enumerate().unwrap() {
            assert!(q.contains(x).unwrap());
        }
        assert!(q.contains(r(0)).unwrap());
        assert!(!q.contains(Rational::new(1, 3)).unwrap());
    }

    #[test]
    fn text_round_trip() {
        let p = Gap::new(vec![Rational::new(3, 2), r(-4)], vec![5, 0]).unwrap();
        assert_eq!(Gap::parse(&p.to_text()).unwrap(), p);
        assert!(Gap::parse("rank 2\n1 1\n").is_err());
        let d = discretize_rank1(&Gap::progression(r(5), 20), 25, 5).unwrap();
        assert_eq!(DiscretizationResult::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn discretization_examples() {
        let p = Gap::progression(r(1), 100);
        let d = discretize_rank1(&p, 10, 2).unwrap();
        assert!(verify_discretization(&p, &d).unwrap().all());
        assert_eq!(d.scale_r, r(10));

        let small = Gap::progression(r(1), 5);
        let d = discretize_rank1(&small, 20, 2).unwrap();
        assert_eq!(d.p_small, small);
        assert_eq!(d.p_sparse.volume(), 1);
        assert_eq!(d.scale_r, r(20));

        let p = Gap::progression(r(5), 20);
        let d = discretize_rank1(&p, 25, 5).unwrap();
        assert!(verify_discretization(&p, &d).unwrap().all());
    }

    #[test]
    fn verifier_rejects_bad_results() {
        let p = Gap::progression(r(1), 5);
        let trivial = DiscretizationResult {
            p_small: Gap::progression(r(1), 0),
            p_sparse: Gap::progression(r(1), 0),
            scale_r: r(1),
            s: 2,
            r0: 10,
            d_prime: 0,
        };
        assert!(!verify_discretization(&p, &trivial).unwrap().covering);

        let mut d = discretize_rank1(&p, 20, 2).unwrap();
        d.scale_r /= r(100);
        let rep = verify_discretization(&p, &d).unwrap();
        assert!(!rep.smallness || !rep.sparseness);
    }

    #[test]
    fn inverse_search_examples() {
        let n = 8;
        let cfg = InverseLoConfig::for_dimension(n);
        let InverseLoOutcome::Found(hit) = inverse_lo_search(&vec![7; n].into(), &cfg).unwrap() else {
            panic!("constant vector must be covered");
        };
        assert_eq!(hit.gap, Gap::progression(r(7), 1));
        assert!(hit.excluded.is_empty());

        let ap: Vec<i64> = (1..=n as i64).collect();
        let InverseLoOutcome::Found(hit) = inverse_lo_search(&ap.into(), &cfg).unwrap() else {
            panic!("progression must be covered");
        };
        assert_eq!(hit.gap, Gap::progression(r(1), n as u64));

        let spread: Vec<i64> = (0..16).map(|i| 1 << i).collect();
        let mut cfg = InverseLoConfig::for_dimension(16);
        cfg.mu = 0.5;
        let out = inverse_lo_search(&spread.into(), &cfg).unwrap();
        assert!(matches!(out, InverseLoOutcome::NotTriggered { .. }));
    }

    #[test]
    fn rank2_search_finds_two_generators() {
        // {1, 100} mixture: no rank-1 progression of volume <= 125 covers it.
        let v = vec![1, 100, 1, 100, 101, 99];
        let mut cfg = InverseLoConfig::for_dimension(v.len());
        cfg.a_exponent = 3.0;
        cfg.volume_cap = 125;
        let InverseLoOutcome::Found(hit) = inverse_lo_search(&v.clone().into(), &cfg).unwrap() else {
            panic!("rank-2 progression expected");
        };
        assert_eq!(hit.gap.rank(), 2);
        assert!(hit.gap.volume() <= 125);
        for &x in &v {
            assert!(hit.gap.contains(r(x as i128)).unwrap());
        }
    }

    #[test]
    fn inverse_search_preconditions() {
        let cfg = InverseLoConfig::for_dimension(17);
        assert!(inverse_lo_search(&vec![1; 17].into(), &cfg).is_err());
        let mut cfg = InverseLoConfig::for_dimension(4);
        cfg.rank_cap = 3;
        assert!(inverse_lo_search(&vec![1; 4].into(), &cfg).is_err());
    }
}
