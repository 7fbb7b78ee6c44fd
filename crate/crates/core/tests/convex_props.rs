use flatcone::convex::{cone_combine, lp_distance, ConeOp, DiscreteMeasure, Normalization, PLFunction, RationalPL};
use num::{BigInt, BigRational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Convex decreasing on `[0, 1]` with up to four pieces.
fn random_pl<R: Rng>(rng: &mut R) -> PLFunction {
    let pieces = rng.gen_range(1..=4);
    let mut xs: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.05..0.95)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    xs.insert(0, 0.0);
    xs.push(1.0);
    let mut slopes: Vec<f64> = (0..xs.len() - 1).map(|_| -rng.gen_range(0.0..3.0)).collect();
    slopes.sort_by(f64::total_cmp);
    let mut vals = vec![rng.gen_range(-2.0..2.0)];
    for j in 0..slopes.len() {
        let next = vals[j] + slopes[j] * (xs[j + 1] - xs[j]);
        vals.push(next);
    }
    PLFunction::new(xs, vals, true).unwrap()
}

fn random_measure<R: Rng>(rng: &mut R) -> DiscreteMeasure {
    let n = rng.gen_range(2..=12);
    let atoms = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    DiscreteMeasure::new(atoms, weights, Normalization::Probability).unwrap()
}

const PS: [f64; 4] = [1.0, 2.0, 3.5, f64::INFINITY];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lp_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g, h) = (random_pl(&mut rng), random_pl(&mut rng), random_pl(&mut rng));
        let mu = random_measure(&mut rng);
        for p in PS {
            let d = |a: &PLFunction, b: &PLFunction| lp_distance(a, b, &mu, p).unwrap().value;
            prop_assert_eq!(d(&f, &f), 0.0);
            prop_assert!((d(&f, &g) - d(&g, &f)).abs() <= 1e-14 * d(&f, &g).max(1.0));
            prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
        }
    }

    #[test]
    fn lp_is_monotone_in_p(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_pl(&mut rng), random_pl(&mut rng));
        let mu = random_measure(&mut rng);
        let d: Vec<f64> = PS.iter().map(|&p| lp_distance(&f, &g, &mu, p).unwrap().value).collect();
        for w in d.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-12) + 1e-14, "{:?}", d);
        }
    }

    #[test]
    fn lp_is_homogeneous(seed in any::<u64>(), c in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_pl(&mut rng), random_pl(&mut rng));
        let mu = random_measure(&mut rng);
        let (cf, cg) = (cone_combine(&ConeOp::Scale(c), &f, None).unwrap(), cone_combine(&ConeOp::Scale(c), &g, None).unwrap());
        for p in PS {
            let lhs = lp_distance(&cf, &cg, &mu, p).unwrap().value;
            let rhs = c * lp_distance(&f, &g, &mu, p).unwrap().value;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn max_and_sum_stay_in_the_cone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_pl(&mut rng), random_pl(&mut rng));
        for op in [ConeOp::PointwiseMax, ConeOp::Sum] {
            let h = cone_combine(&op, &f, Some(&g)).unwrap();
            let revalidated = PLFunction::new(h.breakpoints().to_vec(), h.values().to_vec(), true);
            prop_assert!(revalidated.is_ok());
            for j in 0..=50 {
                let x = j as f64 / 50.0;
                let (a, b) = (f.eval(&x).unwrap(), g.eval(&x).unwrap());
                let expected = if op == ConeOp::PointwiseMax { a.max(b) } else { a + b };
                prop_assert!((h.eval(&x).unwrap() - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn exact_max_is_exact(a in -20i64..0, b in -20i64..0, c in -10i64..10) {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let f = RationalPL::new(vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(a, 7)], true).unwrap();
        let g = RationalPL::new(vec![q(0, 1), q(1, 1)], vec![q(c, 5), q(c, 5) + q(b, 3)], true).unwrap();
        let h = cone_combine(&ConeOp::PointwiseMax, &f, Some(&g)).unwrap();
        for x in h.breakpoints() {
            let (fx, gx) = (f.eval(x).unwrap(), g.eval(x).unwrap());
            prop_assert_eq!(h.eval(x).unwrap(), if fx > gx { fx } else { gx });
        }
    }
}
