use std::path::PathBuf;

use super::IntegerMatrix;
use crate::error::{Error, Result};

/// Deterministic ill-conditioned or singular starting matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum WorstCase {
    Zero,
    /// `diag(1, 2, 4, ...)` capped at `floor(n^c)`.
    GradedDiagonal {
        c: f64,
    },
    RankOneOnes,
    /// Bidiagonal `2, 1` pattern whose last column repeats the first.
    DuplicatedColumn,
    /// Circulant band: `diag` on the diagonal, `off` on the next
    /// `half_width` cyclic super- and sub-diagonals, zero elsewhere.
    Band {
        half_width: usize,
        diag: i64,
        off: i64,
    },
    UserFile(PathBuf),
}

/// `floor(n^c)` as an entry bound, or an overflow error.
pub fn power_floor(n: usize, c: f64) -> Result<u64> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::validation(format!("exponent {c} must be finite and >= 0")));
    }
    if c.fract() == 0.0 && c <= f64::from(u32::MAX) {
        return (n as u64)
            .checked_pow(c as u32)
            .filter(|&v| v <= i64::MAX as u64)
            .ok_or_else(|| Error::Overflow(format!("{n}^{c} exceeds the 64-bit entry range")));
    }
    let v = (n as f64).powf(c).floor();
    if v >= i64::MAX as f64 {
        return Err(Error::Overflow(format!("{n}^{c} exceeds the 64-bit entry range")));
    }
    Ok(v as u64)
}

pub fn worst_case_generator(kind: &WorstCase, n: usize) -> Result<IntegerMatrix> {
    if n < 2 {
        return Err(Error::validation("worst-case generators need n >= 2"));
    }
    let mut e = vec![0i64; n * n];
    match kind {
        WorstCase::Zero => {}
        WorstCase::GradedDiagonal { c } => {
            let cap = power_floor(n, *c)?;
            for i in 0..n {
                let grade = 1u64.checked_shl(i as u32).filter(|&g| g <= cap).unwrap_or(cap);
                e[i * n + i] = grade as i64;
            }
            return IntegerMatrix::new(n, e, cap);
        }
        WorstCase::RankOneOnes => e.fill(1),
        WorstCase::DuplicatedColumn => {
            for i in 0..n {
                e[i * n + i] = 2;
                if i + 1 < n {
                    e[i * n + i + 1] = 1;
                }
            }
            for i in 0..n {
                e[i * n + n - 1] = e[i * n];
            }
        }
        WorstCase::Band { half_width, diag, off } => {
            if 2 * half_width + 1 > n {
                return Err(Error::validation("band wider than the matrix"));
            }
            for i in 0..n {
                e[i * n + i] = *diag;
                for d in 1..=*half_width {
                    e[i * n + (i + d) % n] = *off;
                    e[i * n + (i + n - d) % n] = *off;
                }
            }
        }
        WorstCase::UserFile(path) => {
            let m = IntegerMatrix::parse(&std::fs::read_to_string(path)?, None)?;
            if m.n() != n {
                return Err(Error::validation(format!(
                    "{} holds a {}x{} matrix, expected n = {n}",
                    path.display(),
                    m.n(),
                    m.n()
                )));
            }
            return Ok(m);
        }
    }
    IntegerMatrix::from_rows(&e.chunks(n).map(<[i64]>::to_vec).collect::<Vec<_>>())
}

/// Positions exempt from noise (`true` = frozen).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenMask {
    n: usize,
    frozen: Vec<bool>,
}

impl FrozenMask {
    pub fn new(n: usize, frozen: Vec<bool>) -> Result<Self> {
        if frozen.len() != n * n {
            return Err(Error::validation("mask shape does not match the matrix"));
        }
        Ok(FrozenMask { n, frozen })
    }

    pub fn none(n: usize) -> Self {
        FrozenMask {
            n,
            frozen: vec![false; n * n],
        }
    }

    pub fn all(n: usize) -> Self {
        FrozenMask {
            n,
            frozen: vec![true; n * n],
        }
    }

    /// Freeze every zero entry of `m`.
    pub fn zeros_of(m: &IntegerMatrix) -> Self {
        FrozenMask {
            n: m.n(),
            frozen: m.entries().iter().map(|&x| x == 0).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_frozen(&self, i: usize, j: usize) -> bool {
        self.frozen[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, frozen: bool) {
        self.frozen[i * self.n + j] = frozen;
    }

    pub fn frozen_in_row(&self, i: usize) -> usize {
        self.frozen[i * self.n..(i + 1) * self.n].iter().filter(|&&f| f).count()
    }

    /// Frozen column indices of row `i`.
    pub fn row_exclusions(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.is_frozen(i, j)).collect()
    }

    /// `ceil(n^0.99)`, the most frozen entries a row may have.
    pub fn row_cap(n: usize) -> usize {
        (n as f64).powf(0.99).ceil() as usize
    }

    pub fn check_row_cap(&self) -> Result<()> {
        let cap = Self::row_cap(self.n);
        for i in 0..self.n {
            let count = self.frozen_in_row(i);
            if count > cap {
                return Err(Error::validation(format!(
                    "row {i} freezes {count} entries, more than ceil(n^0.99) = {cap}"
                )));
            }
        }
        Ok(())
    }
}

/// `M + N` entrywise, keeping `M` at frozen positions.
pub fn perturb(m: &IntegerMatrix, noise: &IntegerMatrix, mask: Option<&FrozenMask>) -> Result<IntegerMatrix> {
    let n = m.n();
    if noise.n() != n || mask.is_some_and(|k| k.n() != n) {
        return Err(Error::validation("shapes of matrix, noise and mask must agree"));
    }
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let base = m.get(i, j);
            let v = if mask.is_some_and(|k| k.is_frozen(i, j)) {
                base
            } else {
                base.checked_add(noise.get(i, j))
                    .ok_or_else(|| Error::Overflow(format!("entry ({i}, {j}) overflows 64 bits")))?
            };
            entries.push(v);
        }
    }
    let bound = m
        .entry_bound()
        .checked_add(noise.entry_bound())
        .filter(|&b| b <= i64::MAX as u64)
        .unwrap_or(i64::MAX as u64);
    IntegerMatrix::new(n, entries, bound)
}
