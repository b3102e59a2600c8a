use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothlab::experiment::{
    condition_tail, gepp_solve, run, singularity_probability, tail_curve, ExperimentConfig, ExperimentKind,
};
use smoothlab::linalg::{exact_solve, IntegerMatrix};
use smoothlab::noise::DiscreteDistribution;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(kind);
    match kind {
        ExperimentKind::Tail => {
            c.n = vec![6];
            c.trials = 120;
        }
        ExperimentKind::Singularity => c.n = vec![1, 2],
        ExperimentKind::Frozen => {
            c.n = vec![12];
            c.trials = 30;
        }
        _ => {
            c.n = vec![6];
            c.trials = 30;
        }
    }
    c
}

fn rel_error(x: &[f32], exact: &[BigRational]) -> f64 {
    let diff: f64 = x
        .iter()
        .zip(exact)
        .map(|(&a, e)| {
            let d = BigRational::from_float(f64::from(a)).unwrap() - e;
            let d: f64 = num_traits::ToPrimitive::to_f64(&d).unwrap();
            d * d
        })
        .sum();
    let norm: f64 = exact
        .iter()
        .map(|e| num_traits::ToPrimitive::to_f64(e).unwrap().powi(2))
        .sum();
    (diff / norm).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn csv_is_independent_of_thread_count(seed in any::<u64>(), which in 0usize..6) {
        let mut c = small(ExperimentKind::ALL[which]);
        c.seed = seed;
        c.threads = 1;
        let one = run(&c).unwrap().csv();
        c.threads = 4;
        prop_assert_eq!(one, run(&c).unwrap().csv());
    }

    #[test]
    fn tail_curves_are_nonincreasing(seed in any::<u64>()) {
        let mut c = small(ExperimentKind::Tail);
        c.seed = seed;
        c.noise = "lazy:1/2".parse().unwrap();
        let (_, s) = tail_curve(&c).unwrap();
        for w in s[0].curve.windows(2) {
            prop_assert!(w[0].x < w[1].x);
            prop_assert!(w[1].exceedance.estimate <= w[0].exceedance.estimate);
        }
    }

    #[test]
    fn threshold_curves_are_nonincreasing(seed in any::<u64>()) {
        let mut c = small(ExperimentKind::CondTail);
        c.seed = seed;
        let (_, s) = condition_tail(&c).unwrap();
        for w in s[0].curve.windows(2) {
            prop_assert!(w[1].exceedance.estimate <= w[0].exceedance.estimate);
        }
    }

    #[test]
    fn config_files_round_trip(seed in any::<u64>(), trials in 1u64..10_000, which in 0usize..6) {
        let mut c = ExperimentConfig::defaults(ExperimentKind::ALL[which]);
        c.seed = seed;
        c.trials = trials.max(100);
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap(), c.kind.unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_of_two_rhs_scaling_keeps_relative_error(seed in any::<u64>(), n in 2usize..=8, shift in -20i32..=20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<i64> = (0..n * n).map(|_| rng.gen_range(-5..=5)).collect();
        let m = IntegerMatrix::new(n, entries, 5).unwrap();
        let b: Vec<i64> = (0..n).map(|_| rng.gen_range(-10..=10)).collect();
        prop_assume!(b.iter().any(|&x| x != 0));
        let Some(exact) = exact_solve(&m, &b) else {
            return Ok(());
        };
        let bf: Vec<f64> = b.iter().map(|&x| x as f64).collect();
        let c = 2f64.powi(shift);
        let scaled: Vec<f64> = bf.iter().map(|x| x * c).collect();
        let exact_scaled: Vec<BigRational> = exact
            .iter()
            .map(|x| x * BigRational::from_float(c).unwrap())
            .collect();
        let (Some(x), Some(y)) = (gepp_solve::<f32>(&m.to_real(), &bf), gepp_solve::<f32>(&m.to_real(), &scaled)) else {
            return Ok(());
        };
        prop_assume!(x.iter().chain(&y).all(|v| v.is_finite()));
        let (e1, e2) = (rel_error(&x, &exact), rel_error(&y, &exact_scaled));
        prop_assert!((e1 - e2).abs() <= 1e-12, "{e1} vs {e2}");
    }
}

/// Determinant by cofactor expansion along the first row.
fn det(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        1 => m[0][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] * det(&minor)
            })
            .sum(),
    }
}

#[test]
fn singularity_counts_are_integral_over_the_support() {
    for n in 1..=3 {
        let r = singularity_probability(n, &DiscreteDistribution::bernoulli()).unwrap();
        assert_eq!(r.total_matrices, 1u64 << (n * n));
        let expected = BigRational::new(BigInt::from(r.singular_matrices), BigInt::from(r.total_matrices));
        assert_eq!(r.probability, expected);
        let mut count = 0u64;
        for bits in 0u64..(1 << (n * n)) {
            let m: Vec<Vec<i64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if bits >> (i * n + j) & 1 == 1 { 1 } else { -1 })
                        .collect()
                })
                .collect();
            count += u64::from(det(&m) == 0);
        }
        assert_eq!(count, r.singular_matrices, "n = {n}");
    }
    let half = singularity_probability(2, &DiscreteDistribution::bernoulli())
        .unwrap()
        .probability;
    assert_eq!(half, BigRational::new(1.into(), 2.into()));
}
