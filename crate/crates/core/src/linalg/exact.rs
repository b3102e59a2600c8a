//! Exact arithmetic on integer matrices: rational Gauss-Jordan elimination,
//! fraction-free determinants and modular singularity tests.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{IntegerMatrix, RealMatrix};
use crate::text::ratio_to_f64;

/// Dense square matrix of exact rationals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    n: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.n + j]
    }

    pub fn to_real(&self) -> RealMatrix {
        RealMatrix::new(self.n, self.data.iter().map(ratio_to_f64).collect())
            .expect("rational entries convert to finite doubles")
    }
}

/// Gauss-Jordan on the augmented system `[M | rhs]`; `None` when singular.
fn gauss_jordan(
    m: &IntegerMatrix,
    rhs_cols: usize,
    rhs: impl Fn(usize, usize) -> BigRational,
) -> Option<Vec<Vec<BigRational>>> {
    let n = m.n();
    let width = n + rhs_cols;
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| BigRational::from_integer(BigInt::from(m.get(i, j))))
                .chain((0..rhs_cols).map(|j| rhs(i, j)))
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for j in col..width {
            a[col][j] = &a[col][j] * &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in col..width {
                let delta = &factor * &a[col][j];
                a[r][j] -= delta;
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Exact inverse, `None` for a singular matrix.
pub fn exact_inverse(m: &IntegerMatrix) -> Option<RationalMatrix> {
    let n = m.n();
    let rows = gauss_jordan(m, n, |i, j| {
        if i == j {
            BigRational::one()
        } else {
            BigRational::zero()
        }
    })?;
    Some(RationalMatrix {
        n,
        data: rows.into_iter().flatten().collect(),
    })
}

/// Exact solution of `M x = b`, `None` for a singular matrix.
pub fn exact_solve(m: &IntegerMatrix, b: &[i64]) -> Option<Vec<BigRational>> {
    assert_eq!(b.len(), m.n());
    let rows = gauss_jordan(m, 1, |i, _| BigRational::from_integer(BigInt::from(b[i])))?;
    Some(rows.into_iter().map(|mut r| r.remove(0)).collect())
}

/// Determinant by Bareiss fraction-free elimination.
pub fn integer_det(m: &IntegerMatrix) -> BigInt {
    let n = m.n();
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|i| m.row(i).iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v.div_floor(&prev);
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Primes near 2^61, 2^62 and 2^63.
const PRIMES: [u64; 3] = [
    2_305_843_009_213_693_951,
    4_611_686_018_427_387_847,
    9_223_372_036_854_775_783,
];

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(p)) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn det_mod(m: &IntegerMatrix, p: u64) -> u64 {
    let n = m.n();
    let mut a: Vec<u64> = m
        .entries()
        .iter()
        .map(|&x| (i128::from(x).rem_euclid(i128::from(p))) as u64)
        .collect();
    let mut det = 1u64;
    for k in 0..n {
        let Some(piv) = (k..n).find(|&r| a[r * n + k] != 0) else {
            return 0;
        };
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = p - det;
        }
        let pivot = a[k * n + k];
        det = mul_mod(det, pivot, p);
        let inv = pow_mod(pivot, p - 2, p);
        for i in k + 1..n {
            let f = mul_mod(a[i * n + k], inv, p);
            if f == 0 {
                continue;
            }
            for j in k..n {
                let sub = mul_mod(f, a[k * n + j], p);
                a[i * n + j] = (a[i * n + j] + p - sub) % p;
            }
        }
    }
    det % p
}

/// Singularity test modulo three large primes.
///
/// A nonzero residue proves `det != 0`. Zero residues for all three primes
/// are reported as singular; a nonsingular matrix is misreported only if its
/// determinant is divisible by all three primes (about 2^-185 for a random
/// determinant).
pub fn det_is_zero_modular(m: &IntegerMatrix) -> bool {
    PRIMES.iter().all(|&p| det_mod(m, p) == 0)
}

/// `|x|_2` of an exact vector, in floating point.
pub(crate) fn rational_norm(x: &[BigRational]) -> f64 {
    x.iter()
        .map(|v| {
            let f = ratio_to_f64(&v.abs());
            f * f
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntegerMatrix {
        IntegerMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn inverse_of_small_matrix() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = exact_inverse(&a).unwrap();
        let expect = [[1, -1], [-1, 2]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(*inv.get(i, j), BigRational::from_integer(expect[i][j].into()));
            }
        }
        assert!(exact_inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn solve_is_exact() {
        let a = m(&[&[3, 1, 0], &[1, 4, 1], &[0, 1, 5]]);
        let x = exact_solve(&a, &[1, 2, 3]).unwrap();
        // Back-substitute in exact arithmetic.
        for i in 0..3 {
            let lhs: BigRational = (0..3)
                .map(|j| BigRational::from_integer(a.get(i, j).into()) * &x[j])
                .sum();
            assert_eq!(lhs, BigRational::from_integer([1, 2, 3][i].into()));
        }
    }

    #[test]
    fn determinants_agree() {
        let a = m(&[&[0, 2, 1], &[3, -1, 4], &[5, 9, -2]]);
        // Cofactor expansion by hand: 0*(2-36) - 2*(-6-20) + 1*(27+5) = 84.
        assert_eq!(integer_det(&a), BigInt::from(84));
        assert!(!det_is_zero_modular(&a));
        let s = m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        assert_eq!(integer_det(&s), BigInt::zero());
        assert!(det_is_zero_modular(&s));
        assert_eq!(integer_det(&m(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
    }
}
