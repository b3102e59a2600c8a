//! `key = value` input files for the single-shot CLI checks.

use serde::Serialize;

use super::NoiseSpec;
use crate::concentration::{exact_concentration, fourier_bound, ConcentrationQuery, WeightVector};
use crate::error::{Error, Result};
use crate::noise::{certificate_from_symmetric, CERTIFICATE_SLACK};
use crate::text::{key_values, parse_ints};
use crate::witness::{classify_witness, WitnessReport, WitnessThresholds, WitnessVector};

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("`{key}` must be a number, found `{v}`")))
}

fn parse_indices(line: usize, v: &str) -> Result<Vec<usize>> {
    parse_ints(line, v)?
        .into_iter()
        .map(|x| usize::try_from(x).map_err(|_| Error::parse(line, format!("index {x} is negative"))))
        .collect()
}

/// A concentration query:
///
/// ```text
/// noise = bernoulli
/// v = 1 2 3
/// shift = 0 0 1        # optional Z
/// a = 2 2 2            # optional multipliers
/// k = 1                # optional lcm exponent K
/// exclude = 0          # optional exclusion set E
/// mu = 0.25            # optional
/// ```
///
/// Without `mu` the law's symmetric certificate supplies `mu`, and without
/// `a` it supplies the multipliers too.
#[derive(Debug, Clone, PartialEq)]
pub struct LoQueryFile {
    pub noise: NoiseSpec,
    pub v: Vec<i64>,
    pub shift: Option<Vec<i64>>,
    pub multipliers: Option<Vec<u64>>,
    pub lcm_exponent: Option<f64>,
    pub exclude: Vec<usize>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoCheckRow {
    pub exact: f64,
    pub bound: f64,
    pub gap: f64,
    pub mu: f64,
    pub argmax: i64,
    pub holds: bool,
}

impl LoCheckRow {
    pub const CSV_HEADER: &'static str = "exact,bound,gap,mu,argmax,holds";

    pub fn to_csv(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{},{}",
            self.exact,
            self.bound,
            self.gap,
            self.mu,
            self.argmax,
            u8::from(self.holds)
        )
    }
}

impl LoQueryFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut noise = None;
        let mut v = None;
        let mut out = LoQueryFile {
            noise: NoiseSpec::Bernoulli,
            v: Vec::new(),
            shift: None,
            multipliers: None,
            lcm_exponent: None,
            exclude: Vec::new(),
            mu: None,
        };
        for (line, key, value) in key_values(text)? {
            match key.as_str() {
                "noise" => {
                    noise = Some(
                        value
                            .parse::<NoiseSpec>()
                            .map_err(|e| Error::parse(line, e.to_string()))?,
                    )
                }
                "v" => v = Some(parse_ints(line, &value)?),
                "shift" => out.shift = Some(parse_ints(line, &value)?),
                "a" => {
                    out.multipliers = Some(
                        parse_ints(line, &value)?
                            .into_iter()
                            .map(|x| u64::try_from(x).map_err(|_| Error::parse(line, "multipliers must be positive")))
                            .collect::<Result<_>>()?,
                    )
                }
                "k" => out.lcm_exponent = Some(parse_f64(line, &key, &value)?),
                "exclude" => out.exclude = parse_indices(line, &value)?,
                "mu" => out.mu = Some(parse_f64(line, &key, &value)?),
                other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
            }
        }
        out.noise = noise.ok_or_else(|| Error::parse(0, "missing `noise`"))?;
        out.v = v.ok_or_else(|| Error::parse(0, "missing `v`"))?;
        if out.v.is_empty() {
            return Err(Error::validation("`v` is empty"));
        }
        Ok(out)
    }

    pub fn evaluate(&self) -> Result<LoCheckRow> {
        let dist = self.noise.discrete()?;
        let n = self.v.len();
        let cert = certificate_from_symmetric(&dist).ok();
        let mu = match (self.mu, &cert) {
            (Some(mu), _) => mu,
            (None, Some(c)) => c.mu,
            (None, None) => {
                return Err(Error::validation(format!(
                    "{} has no symmetric certificate; give `mu` explicitly",
                    dist.name()
                )))
            }
        };
        let a = match (&self.multipliers, &cert) {
            (Some(a), _) => a.clone(),
            (None, Some(c)) if self.mu.is_none() => vec![c.k; n],
            _ => vec![1; n],
        };
        let mut q = ConcentrationQuery::iid(dist, n).with_multipliers(a, self.lcm_exponent)?;
        if let Some(z) = &self.shift {
            q = q.with_shift(z.clone())?;
        }
        q = q.with_exclusions(self.exclude.iter().copied())?;
        let v = WeightVector::new(self.v.clone());
        let c = exact_concentration(&q, &v)?;
        let bound = fourier_bound(&q, &v, mu)?;
        Ok(LoCheckRow {
            exact: c.sup,
            bound,
            gap: bound - c.sup,
            mu,
            argmax: c.argmax,
            holds: c.sup <= bound + CERTIFICATE_SLACK,
        })
    }
}

/// A witness to classify:
///
/// ```text
/// noise = bernoulli
/// b = 4
/// a = 1
/// w = 950000 0 0 0 0 0 0 0 0 0
/// ```
///
/// `offset` and `count_exponent` optionally override the partition
/// exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessFile {
    pub noise: NoiseSpec,
    pub witness: WitnessVector,
    pub thresholds: WitnessThresholds,
}

impl WitnessFile {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = key_values(text)?;
        let get = |k: &str| kv.iter().find(|(_, key, _)| key == k).map(|(l, _, v)| (*l, v.as_str()));
        if let Some((line, key, _)) = kv
            .iter()
            .find(|(_, k, _)| !["noise", "b", "a", "w", "offset", "count_exponent"].contains(&k.as_str()))
        {
            return Err(Error::parse(*line, format!("unknown key `{key}`")));
        }
        let (nl, noise) = get("noise").ok_or_else(|| Error::parse(0, "missing `noise`"))?;
        let noise: NoiseSpec = noise.parse().map_err(|e: Error| Error::parse(nl, e.to_string()))?;
        let (bl, b) = get("b").ok_or_else(|| Error::parse(0, "missing `b`"))?;
        let b: u32 = b
            .parse()
            .map_err(|_| Error::parse(bl, "`b` must be a nonnegative integer"))?;
        let a = match get("a") {
            Some((l, v)) => parse_f64(l, "a", v)?,
            None => 1.0,
        };
        let (wl, w) = get("w").ok_or_else(|| Error::parse(0, "missing `w`"))?;
        let w = parse_ints(wl, w)?;
        if w.is_empty() {
            return Err(Error::parse(wl, "`w` is empty"));
        }
        let mut thresholds = WitnessThresholds::new(a, b);
        if let Some((l, v)) = get("offset") {
            thresholds.rich_offset = parse_f64(l, "offset", v)?;
        }
        if let Some((l, v)) = get("count_exponent") {
            thresholds.count_exponent = parse_f64(l, "count_exponent", v)?;
        }
        Ok(WitnessFile {
            noise,
            witness: WitnessVector::from_integers(w, b),
            thresholds,
        })
    }

    /// Classify against i.i.d. rows of the file's noise law.
    pub fn classify(&self) -> Result<WitnessReport> {
        let dist = self.noise.discrete()?;
        let rows = vec![ConcentrationQuery::iid(dist, self.witness.n())];
        classify_witness(&self.witness, &rows, &self.thresholds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::WitnessClass;

    #[test]
    fn lo_query_defaults_from_certificate() {
        let q = LoQueryFile::parse("noise = bernoulli\nv = 1 1\n").unwrap();
        let row = q.evaluate().unwrap();
        assert_eq!(row.exact, 0.5);
        assert!((row.bound - 19.0 / 32.0).abs() < 1e-12);
        assert!((row.gap - 3.0 / 32.0).abs() < 1e-12);
        assert!(row.holds);
    }

    #[test]
    fn lo_query_errors() {
        assert!(LoQueryFile::parse("v = 1 2\n").is_err());
        assert!(LoQueryFile::parse("noise = bernoulli\nv = 1 x\n").is_err());
        assert!(LoQueryFile::parse("noise = bernoulli\nv = 1\nzap = 2\n").is_err());
        let q = LoQueryFile::parse("noise = bernoulli\nv = 1 1\nmu = 0.9\n").unwrap();
        assert!(q.evaluate().is_err());
    }

    #[test]
    fn witness_file_classifies() {
        let f = WitnessFile::parse("noise = bernoulli\nb = 4\na = 1\nw = 950000 0 0 0 0 0 0 0 0 0\n").unwrap();
        let r = f.classify().unwrap();
        assert_eq!(r.class, WitnessClass::RichSingular);
        assert_eq!(r.sup, 0.5);
        assert!(WitnessFile::parse("noise = bernoulli\nb = 4\n").is_err());
    }
}
