use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{det_is_zero_modular, perturb, svd, FrozenMask, IntegerMatrix, Kappa, RealMatrix};
use crate::noise::DiscreteDistribution;
use crate::stats::standard_normal;

#[derive(Debug, Clone)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    Discrete(DiscreteDistribution),
}

/// A perturbed matrix `M + N`.
#[derive(Debug, Clone)]
pub enum Draw {
    Integer(IntegerMatrix),
    Real(RealMatrix),
}

impl Draw {
    pub fn n(&self) -> usize {
        match self {
            Draw::Integer(m) => m.n(),
            Draw::Real(m) => m.n(),
        }
    }

    pub fn to_real(&self) -> RealMatrix {
        match self {
            Draw::Integer(m) => m.to_real(),
            Draw::Real(m) => m.clone(),
        }
    }

    pub fn leading_minor(&self, k: usize) -> Draw {
        match self {
            Draw::Integer(m) => Draw::Integer(m.leading_minor(k)),
            Draw::Real(m) => Draw::Real(m.leading_minor(k)),
        }
    }
}

/// `M + N` with `N` drawn entrywise in row-major order from `seed`.
///
/// All `n^2` noise entries are drawn even where `mask` freezes `M`, so a
/// masked and an unmasked run at the same seed share their noise.
pub fn draw(base: &IntegerMatrix, noise: &NoiseModel, mask: Option<&FrozenMask>, seed: u64) -> Result<Draw> {
    let n = base.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match noise {
        NoiseModel::Discrete(dist) => {
            let entries: Vec<i64> = (0..n * n).map(|_| dist.sample(&mut rng)).collect();
            let noise = IntegerMatrix::new(n, entries, dist.max_abs_value())?;
            Ok(Draw::Integer(perturb(base, &noise, mask)?))
        }
        NoiseModel::Gaussian { sigma } => {
            let mut data = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let z = sigma * standard_normal(&mut rng);
                    let frozen = mask.is_some_and(|k| k.is_frozen(i, j));
                    data.push(base.get(i, j) as f64 + if frozen { 0.0 } else { z });
                }
            }
            Ok(Draw::Real(RealMatrix::new(n, data)?))
        }
    }
}

/// Below `sigma_n / sigma_1` of this size integer draws get the exact
/// singularity test.
const EXACT_CHECK_RATIO: f64 = 1e-6;

/// Extreme singular values of a draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpectrum {
    pub sigma_1: f64,
    pub sigma_n: f64,
    pub kappa: Kappa,
    /// Exactly singular (integer draws) or numerically so.
    pub singular: bool,
}

impl TrialSpectrum {
    pub fn of(d: &Draw) -> Result<Self> {
        let spec = svd(&d.to_real())?;
        let (sigma_1, sigma_n) = (spec.largest(), spec.smallest());
        // The computed sigma_n is within a small multiple of n eps sigma_1 of
        // the truth, so only near-zero values need the exact test.
        let exact_singular = match d {
            Draw::Integer(m) => sigma_n <= EXACT_CHECK_RATIO * sigma_1 && det_is_zero_modular(m),
            Draw::Real(_) => false,
        };
        let kappa = match Kappa::from_spectrum(&spec) {
            Ok(k) if !exact_singular => k,
            Ok(_) | Err(Error::UndefinedCondition) => Kappa::Infinite,
            Err(e) => return Err(e),
        };
        Ok(TrialSpectrum {
            sigma_1,
            sigma_n,
            kappa,
            singular: kappa.is_infinite(),
        })
    }

    /// `|(M + N)^-1|`, infinite for singular draws.
    pub fn inverse_norm(&self) -> f64 {
        if self.singular {
            f64::INFINITY
        } else {
            1.0 / self.sigma_n
        }
    }
}
