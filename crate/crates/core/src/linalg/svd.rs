use serde::{Deserialize, Serialize};

use super::RealMatrix;
use crate::error::{Error, Result};

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 80;

/// Ratio below which `sigma_n` is treated as exactly zero.
pub const SINGULAR_RATIO: f64 = 1e-300;

/// Singular values in nonincreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub sigma: Vec<f64>,
    /// Largest `|a_p . a_q| / (|a_p| |a_q|)` over column pairs at exit.
    pub convergence_residual: f64,
    pub sweeps: usize,
}

impl SingularSpectrum {
    pub fn largest(&self) -> f64 {
        self.sigma[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.sigma.last().expect("nonempty spectrum")
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }
}

/// Singular values by one-sided (Hestenes) Jacobi rotations.
///
/// Columns are orthogonalized pairwise in cyclic order `(0,1), (0,2), ...`
/// until every pair satisfies `|a_p . a_q| <= tol |a_p| |a_q|` with
/// `tol = n * eps`; columns whose norm drops below `tol * |A|_F` count as
/// zero. The relative criterion is what keeps tiny singular values
/// accurate to high relative precision.
pub fn svd(m: &RealMatrix) -> Result<SingularSpectrum> {
    let n = m.n();
    // Column-major working copy.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).collect()).collect();
    let tol = n as f64 * f64::EPSILON;
    // Columns below this squared norm are rounding noise and never rotated.
    let floor = (tol * m.frobenius_norm()).powi(2);
    let mut residual = 0.0;
    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        sweeps += 1;
        residual = 0.0_f64;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (left, right) = cols.split_at_mut(q);
                let (a, b) = (&mut left[p], &mut right[0]);
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b.iter()) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let cosine = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(cosine);
                if cosine <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let (xv, yv) = (*x, *y);
                    *x = c * xv - s * yv;
                    *y = s * xv + c * yv;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    Ok(SingularSpectrum {
        sigma,
        convergence_residual: residual,
        sweeps,
    })
}

/// `sigma_1` by power iteration on the Gram matrix `A^T A`.
///
/// The start vector is fixed (`x_i = 1 + i / (n + 1)`, normalized), so the
/// result is deterministic.
pub fn operator_norm(m: &RealMatrix) -> f64 {
    let n = m.n();
    if m.data().iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mt = m.transpose();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / (n as f64 + 1.0)).collect();
    let norm = super::norm2(&x);
    x.iter_mut().for_each(|v| *v /= norm);
    let mut lambda = 0.0_f64;
    for _ in 0..20_000 {
        let y = mt.mul_vec(&m.mul_vec(&x));
        let ny = super::norm2(&y);
        if ny == 0.0 {
            // Start vector in the null space; fall back to the full spectrum.
            return svd(m).map(|s| s.largest()).unwrap_or(0.0);
        }
        // Rayleigh quotient x^T A^T A x with |x| = 1.
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// `kappa = sigma_1 / sigma_n`, with singular matrices tagged infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kappa {
    Finite(f64),
    Infinite,
}

impl Kappa {
    pub fn value(self) -> f64 {
        match self {
            Kappa::Finite(k) => k,
            Kappa::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Kappa::Infinite)
    }

    pub fn from_spectrum(spec: &SingularSpectrum) -> Result<Kappa> {
        let (s1, sn) = (spec.largest(), spec.smallest());
        if s1 == 0.0 {
            return Err(Error::UndefinedCondition);
        }
        if sn < SINGULAR_RATIO * s1 {
            Ok(Kappa::Infinite)
        } else {
            Ok(Kappa::Finite(s1 / sn))
        }
    }
}

pub fn condition_number(m: &RealMatrix) -> Result<Kappa> {
    Kappa::from_spectrum(&svd(m)?)
}
