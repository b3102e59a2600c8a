//! Seeded Monte Carlo experiments on perturbed matrices.
//!
//! Every experiment reads an [`ExperimentConfig`], runs its trials in
//! parallel with per-trial seeds from [`derive_seed`](crate::stats::derive_seed),
//! and returns a [`RunOutput`]: a CSV record table plus a JSON summary.
//! Records never depend on the worker count.

mod files;
mod runs;
mod sampling;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{worst_case_generator, FrozenMask, IntegerMatrix, WorstCase};
use crate::noise::DiscreteDistribution;
use crate::text::parse_rational;

pub use files::{LoCheckRow, LoQueryFile, WitnessFile};
pub use runs::{
    condition_tail, frozen_entries_experiment, ge_error_experiment, gepp_solve, minors_experiment, run,
    singularity_probability, tail_curve, write_outputs, CondTailSummary, CurvePoint, FrozenSummary, GeSummary,
    MinorsSummary, RunOutput, SingularityResult, Summary, Table, TailSummary, ThresholdPoint,
};
pub use sampling::{draw, Draw, NoiseModel, TrialSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    Tail,
    CondTail,
    Singularity,
    GeCheck,
    Minors,
    Frozen,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Tail,
        ExperimentKind::CondTail,
        ExperimentKind::Singularity,
        ExperimentKind::GeCheck,
        ExperimentKind::Minors,
        ExperimentKind::Frozen,
    ];

    /// Config section and CLI subcommand name.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Tail => "tail",
            ExperimentKind::CondTail => "cond-tail",
            ExperimentKind::Singularity => "singularity",
            ExperimentKind::GeCheck => "ge-check",
            ExperimentKind::Minors => "minors",
            ExperimentKind::Frozen => "frozen",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown experiment `{s}`")))
    }
}

/// Noise law added to the base matrix.
///
/// Written as `gaussian`, `gaussian:<sigma>`, `bernoulli`, `lazy:<alpha>`,
/// `dgauss:<radius>` or `file:<path>` (a distribution literal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    Bernoulli,
    LazyCoin(BigRational),
    DiscretizedGaussian { radius: u32 },
    File(PathBuf),
}

impl NoiseSpec {
    pub fn is_gaussian(&self) -> bool {
        matches!(self, NoiseSpec::Gaussian { .. })
    }

    pub fn discrete(&self) -> Result<DiscreteDistribution> {
        match self {
            NoiseSpec::Gaussian { .. } => Err(Error::validation("Gaussian noise is not a discrete law")),
            NoiseSpec::Bernoulli => Ok(DiscreteDistribution::bernoulli()),
            NoiseSpec::LazyCoin(alpha) => DiscreteDistribution::lazy_coin(alpha),
            NoiseSpec::DiscretizedGaussian { radius } => DiscreteDistribution::discretized_gaussian(*radius),
            NoiseSpec::File(path) => {
                DiscreteDistribution::parse(path.display().to_string(), &std::fs::read_to_string(path)?)
            }
        }
    }

    pub fn model(&self) -> Result<NoiseModel> {
        match self {
            NoiseSpec::Gaussian { sigma } => Ok(NoiseModel::Gaussian { sigma: *sigma }),
            _ => Ok(NoiseModel::Discrete(self.discrete()?)),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Gaussian { sigma } if *sigma == 1.0 => f.write_str("gaussian"),
            NoiseSpec::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            NoiseSpec::Bernoulli => f.write_str("bernoulli"),
            NoiseSpec::LazyCoin(alpha) => write!(f, "lazy:{alpha}"),
            NoiseSpec::DiscretizedGaussian { radius } => write!(f, "dgauss:{radius}"),
            NoiseSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = split_spec(s);
        let bad = || Error::validation(format!("bad noise spec `{s}`"));
        match (head, arg) {
            ("gaussian", None) => Ok(NoiseSpec::Gaussian { sigma: 1.0 }),
            ("gaussian", Some(a)) => {
                let sigma: f64 = a.parse().map_err(|_| bad())?;
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(bad());
                }
                Ok(NoiseSpec::Gaussian { sigma })
            }
            ("bernoulli", None) => Ok(NoiseSpec::Bernoulli),
            ("lazy", Some(a)) => Ok(NoiseSpec::LazyCoin(parse_rational(a).ok_or_else(bad)?)),
            ("dgauss", Some(a)) => Ok(NoiseSpec::DiscretizedGaussian {
                radius: a.parse().map_err(|_| bad())?,
            }),
            ("file", Some(a)) => Ok(NoiseSpec::File(a.into())),
            _ => Err(bad()),
        }
    }
}

/// Base matrix `M`.
///
/// Written as `zero`, `identity`, `graded:<C>`, `ones`, `dup`,
/// `band:<half_width>:<diag>:<off>` or `file:<path>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MatrixSpec {
    Identity,
    Worst(WorstCase),
}

impl MatrixSpec {
    pub fn build(&self, n: usize) -> Result<IntegerMatrix> {
        match self {
            MatrixSpec::Identity => Ok(IntegerMatrix::identity(n)),
            MatrixSpec::Worst(WorstCase::Zero) => Ok(IntegerMatrix::zeros(n)),
            MatrixSpec::Worst(kind) => worst_case_generator(kind, n),
        }
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSpec::Identity => f.write_str("identity"),
            MatrixSpec::Worst(WorstCase::Zero) => f.write_str("zero"),
            MatrixSpec::Worst(WorstCase::GradedDiagonal { c }) => write!(f, "graded:{c}"),
            MatrixSpec::Worst(WorstCase::RankOneOnes) => f.write_str("ones"),
            MatrixSpec::Worst(WorstCase::DuplicatedColumn) => f.write_str("dup"),
            MatrixSpec::Worst(WorstCase::Band { half_width, diag, off }) => {
                write!(f, "band:{half_width}:{diag}:{off}")
            }
            MatrixSpec::Worst(WorstCase::UserFile(p)) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for MatrixSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = split_spec(s);
        let bad = || Error::validation(format!("bad matrix spec `{s}`"));
        let kind = match (head, arg) {
            ("identity", None) => return Ok(MatrixSpec::Identity),
            ("zero", None) => WorstCase::Zero,
            ("graded", Some(a)) => WorstCase::GradedDiagonal {
                c: a.parse().map_err(|_| bad())?,
            },
            ("ones", None) => WorstCase::RankOneOnes,
            ("dup", None) => WorstCase::DuplicatedColumn,
            ("band", Some(a)) => {
                let parts: Vec<&str> = a.split(':').collect();
                let [w, d, o] = parts[..] else { return Err(bad()) };
                WorstCase::Band {
                    half_width: w.parse().map_err(|_| bad())?,
                    diag: d.parse().map_err(|_| bad())?,
                    off: o.parse().map_err(|_| bad())?,
                }
            }
            ("file", Some(a)) => WorstCase::UserFile(a.into()),
            _ => return Err(bad()),
        };
        Ok(MatrixSpec::Worst(kind))
    }
}

/// Entries exempt from noise: `none`, `zeros` (every zero of `M`),
/// `all`, `row:<i>` or `file:<path>` (an `n x n` 0/1 matrix, 1 = frozen).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MaskSpec {
    None,
    Zeros,
    All,
    Row(usize),
    File(PathBuf),
}

impl MaskSpec {
    /// The mask for base matrix `m`; `None` when nothing is frozen.
    pub fn build(&self, m: &IntegerMatrix) -> Result<Option<FrozenMask>> {
        let n = m.n();
        let mask = match self {
            MaskSpec::None => return Ok(None),
            MaskSpec::Zeros => FrozenMask::zeros_of(m),
            MaskSpec::All => FrozenMask::all(n),
            MaskSpec::Row(i) => {
                if *i >= n {
                    return Err(Error::validation(format!("row {i} out of range for n = {n}")));
                }
                let mut k = FrozenMask::none(n);
                (0..n).for_each(|j| k.set(*i, j, true));
                k
            }
            MaskSpec::File(path) => {
                let bits = IntegerMatrix::parse(&std::fs::read_to_string(path)?, Some(1))?;
                if bits.n() != n || bits.entries().iter().any(|&b| b < 0) {
                    return Err(Error::validation(format!(
                        "{} is not an n x n 0/1 mask",
                        path.display()
                    )));
                }
                FrozenMask::new(n, bits.entries().iter().map(|&b| b == 1).collect())?
            }
        };
        Ok(Some(mask))
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskSpec::None => f.write_str("none"),
            MaskSpec::Zeros => f.write_str("zeros"),
            MaskSpec::All => f.write_str("all"),
            MaskSpec::Row(i) => write!(f, "row:{i}"),
            MaskSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for MaskSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("bad mask spec `{s}`"));
        match split_spec(s) {
            ("none", None) => Ok(MaskSpec::None),
            ("zeros", None) => Ok(MaskSpec::Zeros),
            ("all", None) => Ok(MaskSpec::All),
            ("row", Some(a)) => Ok(MaskSpec::Row(a.parse().map_err(|_| bad())?)),
            ("file", Some(a)) => Ok(MaskSpec::File(a.into())),
            _ => Err(bad()),
        }
    }
}

/// Arithmetic of the elimination in `ge-check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
    Exact,
}

impl Precision {
    /// Unit roundoff: half the gap from 1 to the next representable number.
    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Single => 2f64.powi(-24),
            Precision::Double => 2f64.powi(-53),
            Precision::Exact => 0.0,
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "single" => Ok(Precision::Single),
            "double" => Ok(Precision::Double),
            "exact" => Ok(Precision::Exact),
            other => Err(Error::validation(format!("unknown precision `{other}`"))),
        }
    }
}

fn split_spec(s: &str) -> (&str, Option<&str>) {
    match s.trim().split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (s.trim(), None),
    }
}

macro_rules! string_serde {
    ($($t:ty),*) => {$(
        impl TryFrom<String> for $t {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }

        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
    )*};
}

string_serde!(NoiseSpec, MatrixSpec, MaskSpec);

mod wide_seed {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(v),
            Raw::Text(t) => t
                .trim()
                .parse()
                .map_err(|_| de::Error::custom(format!("seed `{t}` is not an unsigned 64-bit integer"))),
        }
    }
}

/// Full parameter set of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip)]
    pub kind: Option<ExperimentKind>,
    pub n: Vec<usize>,
    pub trials: u64,
    /// Seeds above `i64::MAX` are written as strings, which TOML integers
    /// cannot hold.
    #[serde(with = "wide_seed")]
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub noise: NoiseSpec,
    pub matrix: MatrixSpec,
    pub mask: MaskSpec,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
    pub alpha: f64,
    /// Exponents `B` of the thresholds `n^B` in `cond-tail` and `frozen`.
    pub b_values: Vec<f64>,
    /// Points on the log grid of `tail`.
    pub grid_points: usize,
    pub precision: Precision,
    /// Also run the Gaussian baseline in `cond-tail`.
    pub compare_gaussian: bool,
    /// `ge-check` only scores draws with `kappa <= max_kappa`.
    pub max_kappa: f64,
    /// `ge-check` passes a draw when error / (eps kappa) <= ratio_cap.
    pub ratio_cap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind: Some(kind),
            n: vec![50],
            trials: 1000,
            seed: 0,
            threads: 0,
            noise: NoiseSpec::Bernoulli,
            matrix: MatrixSpec::Worst(WorstCase::Zero),
            mask: MaskSpec::None,
            a: 1.0,
            b: 6.0,
            c: 1.0,
            k: 1.0,
            alpha: 0.99,
            b_values: (0..=6).map(f64::from).collect(),
            grid_points: 20,
            precision: Precision::Single,
            compare_gaussian: false,
            max_kappa: f64::INFINITY,
            ratio_cap: 100.0,
            out: None,
        };
        match kind {
            ExperimentKind::Tail => ExperimentConfig {
                trials: 2000,
                noise: NoiseSpec::Gaussian { sigma: 1.0 },
                ..base
            },
            ExperimentKind::CondTail => ExperimentConfig {
                n: vec![100],
                matrix: MatrixSpec::Worst(WorstCase::GradedDiagonal { c: 1.0 }),
                ..base
            },
            ExperimentKind::Singularity => ExperimentConfig {
                n: vec![1, 2, 3],
                trials: 1,
                ..base
            },
            ExperimentKind::GeCheck => ExperimentConfig {
                n: vec![10],
                trials: 600,
                max_kappa: 1e3,
                ..base
            },
            ExperimentKind::Minors => ExperimentConfig {
                trials: 500,
                matrix: MatrixSpec::Worst(WorstCase::GradedDiagonal { c: 1.0 }),
                ..base
            },
            ExperimentKind::Frozen => ExperimentConfig {
                n: vec![100],
                trials: 500,
                matrix: MatrixSpec::Worst(WorstCase::Band {
                    half_width: 2,
                    diag: 5,
                    off: 1,
                }),
                mask: MaskSpec::Zeros,
                b_values: vec![6.0],
                ..base
            },
        }
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::validation("config has no experiment kind"))
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        if self.trials == 0 {
            return Err(Error::validation("trial count must be at least 1"));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(Error::validation("n must be a nonempty list of positive sizes"));
        }
        if kind == ExperimentKind::Tail && self.trials < 100 {
            return Err(Error::validation(format!(
                "tail needs at least 100 trials, got {}",
                self.trials
            )));
        }
        if kind == ExperimentKind::Minors && self.n.iter().any(|&n| n > 300) {
            return Err(Error::validation("minors supports n <= 300"));
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("k", self.k)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(format!(
                    "exponent {name} = {v} must be finite and >= 0"
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.b_values.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(Error::validation("b_values must be finite and >= 0"));
        }
        if self.grid_points < 2 {
            return Err(Error::validation("grid_points must be at least 2"));
        }
        if self.max_kappa.is_nan() || self.max_kappa < 1.0 || self.ratio_cap.is_nan() || self.ratio_cap <= 0.0 {
            return Err(Error::validation("max_kappa must be >= 1 and ratio_cap > 0"));
        }
        Ok(())
    }

    /// Config for `kind` from a TOML file: top-level `seed`, `threads` and
    /// `out` apply to every experiment, and the `[<kind>]` section overrides
    /// the defaults.
    pub fn from_toml(text: &str, kind: ExperimentKind) -> Result<Self> {
        let file: toml::Table = text.parse().map_err(|e| toml_error(text, &e))?;
        let mut table = toml::Table::try_from(Self::defaults(kind)).map_err(|e| Error::validation(e.to_string()))?;
        for (key, value) in &file {
            match (key.as_str(), value) {
                ("seed" | "threads" | "out", _) => {
                    table.insert(key.clone(), value.clone());
                }
                (name, toml::Value::Table(section)) => {
                    let section_kind: ExperimentKind = name.parse()?;
                    if section_kind == kind {
                        table.extend(section.clone());
                    }
                }
                (other, _) => return Err(Error::validation(format!("unknown top-level key `{other}`"))),
            }
        }
        let mut cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::validation(format!("[{kind}] {}", e.message())))?;
        cfg.kind = Some(kind);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, kind: ExperimentKind) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?, kind)
    }

    /// A file that [`from_toml`](Self::from_toml) reads back to `self`.
    pub fn to_toml(&self) -> Result<String> {
        let kind = self.kind()?;
        let body = toml::to_string(self).map_err(|e| Error::validation(e.to_string()))?;
        Ok(format!("[{kind}]\n{body}"))
    }
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::parse(line, e.message())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip() {
        for s in [
            "gaussian",
            "gaussian:0.5",
            "bernoulli",
            "lazy:1/3",
            "dgauss:8",
            "file:x.txt",
        ] {
            assert_eq!(s.parse::<NoiseSpec>().unwrap().to_string(), s);
        }
        for s in [
            "zero",
            "identity",
            "graded:1",
            "graded:1.5",
            "ones",
            "dup",
            "band:2:5:1",
            "file:m.txt",
        ] {
            assert_eq!(s.parse::<MatrixSpec>().unwrap().to_string(), s);
        }
        for s in ["none", "zeros", "all", "row:3", "file:k.txt"] {
            assert_eq!(s.parse::<MaskSpec>().unwrap().to_string(), s);
        }
        assert!("lazy".parse::<NoiseSpec>().is_err());
        assert!("gaussian:-1".parse::<NoiseSpec>().is_err());
        assert!("band:1:2".parse::<MatrixSpec>().is_err());
    }

    #[test]
    fn config_round_trips() {
        for kind in ExperimentKind::ALL {
            let mut cfg = ExperimentConfig::defaults(kind);
            cfg.seed = 99;
            cfg.out = Some("runs/x".into());
            let text = cfg.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text, kind).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn config_sections_and_globals() {
        let text = "seed = 7\nthreads = 2\n\n[tail]\nn = [20]\ntrials = 300\n\n[minors]\nb = 4.0\n";
        let tail = ExperimentConfig::from_toml(text, ExperimentKind::Tail).unwrap();
        assert_eq!(
            (tail.seed, tail.threads, tail.n.clone(), tail.trials),
            (7, 2, vec![20], 300)
        );
        let minors = ExperimentConfig::from_toml(text, ExperimentKind::Minors).unwrap();
        assert_eq!(minors.b, 4.0);
        assert_eq!(minors.n, vec![50]);
    }

    #[test]
    fn config_rejections() {
        let k = ExperimentKind::Tail;
        assert!(ExperimentConfig::from_toml("[tail]\ntrials = 50\n", k).is_err());
        assert!(ExperimentConfig::from_toml("[tail]\ntrials = 0\n", k).is_err());
        assert!(ExperimentConfig::from_toml("[tail]\nbogus = 1\n", k).is_err());
        assert!(ExperimentConfig::from_toml("[nope]\nn = [1]\n", k).is_err());
        assert!(ExperimentConfig::from_toml("[tail]\nnoise = \"cauchy\"\n", k).is_err());
        assert!(matches!(
            ExperimentConfig::from_toml("seed = \n", k),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
