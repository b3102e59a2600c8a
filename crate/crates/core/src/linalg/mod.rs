//! Dense square matrices, singular spectra and condition numbers.

mod exact;
mod generators;
mod svd;

pub(crate) use exact::rational_norm;
pub use exact::{det_is_zero_modular, exact_inverse, exact_solve, integer_det, RationalMatrix};
pub use generators::{perturb, worst_case_generator, FrozenMask, WorstCase};
pub use svd::{condition_number, operator_norm, svd, Kappa, SingularSpectrum};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::text::{content_lines, parse_ints};

/// Square matrix of 64-bit integers with a recorded bound on `|entry|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerMatrix {
    n: usize,
    entries: Vec<i64>,
    entry_bound: u64,
}

impl IntegerMatrix {
    /// Row-major construction; every entry must satisfy `|e| <= entry_bound`.
    pub fn new(n: usize, entries: Vec<i64>, entry_bound: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("matrix dimension must be positive"));
        }
        if entries.len() != n * n {
            return Err(Error::validation(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| e.unsigned_abs() > entry_bound) {
            return Err(Error::validation(format!(
                "entry {bad} exceeds the declared bound {entry_bound}"
            )));
        }
        Ok(IntegerMatrix {
            n,
            entries,
            entry_bound,
        })
    }

    /// Bound taken as the actual largest `|entry|`.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("matrix must be square"));
        }
        let entries: Vec<i64> = rows.iter().flatten().copied().collect();
        let bound = entries.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0);
        Self::new(n, entries, bound)
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, vec![0; n * n], 0).expect("valid zero matrix")
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![0; n * n];
        for i in 0..n {
            e[i * n + i] = 1;
        }
        Self::new(n, e, 1).expect("valid identity")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry_bound(&self) -> u64 {
        self.entry_bound
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs_entry(&self) -> u64 {
        self.entries.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0)
    }

    /// Leading principal `k x k` block.
    pub fn leading_minor(&self, k: usize) -> IntegerMatrix {
        assert!(k >= 1 && k <= self.n);
        let entries = (0..k).flat_map(|i| self.row(i)[..k].iter().copied()).collect();
        IntegerMatrix {
            n: k,
            entries,
            entry_bound: self.entry_bound,
        }
    }

    pub fn to_real(&self) -> RealMatrix {
        RealMatrix {
            n: self.n,
            data: self.entries.iter().map(|&e| e as f64).collect(),
        }
    }

    /// Integer matrix-vector product, `None` on overflow.
    pub fn mul_vec(&self, w: &[i64]) -> Option<Vec<i128>> {
        (0..self.n)
            .map(|i| {
                self.row(i).iter().zip(w).try_fold(0i128, |acc, (&a, &b)| {
                    acc.checked_add(i128::from(a).checked_mul(i128::from(b))?)
                })
            })
            .collect()
    }

    /// Parse the matrix file format: a line with `n`, then `n` rows of `n`
    /// integers. With `declared_bound`, every entry is checked against it.
    pub fn parse(text: &str, declared_bound: Option<u64>) -> Result<Self> {
        let mut lines = content_lines(text);
        let (first_no, first) = lines.next().ok_or_else(|| Error::parse(1, "empty matrix file"))?;
        let n: usize = first
            .parse()
            .map_err(|_| Error::parse(first_no, "first line must be the dimension n"))?;
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::parse(first_no, format!("expected {n} rows")))?;
            let row = parse_ints(no, line)?;
            if row.len() != n {
                return Err(Error::parse(no, format!("expected {n} entries, found {}", row.len())));
            }
            entries.extend(row);
        }
        if let Some((no, _)) = lines.next() {
            return Err(Error::parse(no, "trailing content after matrix rows"));
        }
        let actual = entries.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0);
        Self::new(n, entries, declared_bound.unwrap_or(actual))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(i64::to_string).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Square matrix of finite doubles, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::validation(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("matrix entries must be finite"));
        }
        Ok(RealMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("matrix must be square"));
        }
        Self::new(n, rows.iter().flatten().copied().collect())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut data = vec![0.0; n * n];
        for (i, &x) in d.iter().enumerate() {
            data[i * n + i] = x;
        }
        RealMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> RealMatrix {
        RealMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn transpose(&self) -> RealMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j];
            }
        }
        RealMatrix { n, data }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, other: &RealMatrix) -> Result<RealMatrix> {
        if self.n != other.n {
            return Err(Error::validation("dimension mismatch"));
        }
        RealMatrix::new(self.n, self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect())
    }

    /// Rows and columns reordered: entry `(i, j)` becomes `(row_perm[i], col_perm[j])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> RealMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[row_perm[i] * n + col_perm[j]] = self.data[i * n + j];
            }
        }
        RealMatrix { n, data }
    }

    pub fn leading_minor(&self, k: usize) -> RealMatrix {
        assert!(k >= 1 && k <= self.n);
        let data = (0..k)
            .flat_map(|i| self.data[i * self.n..i * self.n + k].iter().copied())
            .collect();
        RealMatrix { n: k, data }
    }
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
