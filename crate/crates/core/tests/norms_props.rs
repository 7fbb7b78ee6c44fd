mod common;

use flatcone::norms::{
    dp_distance, geodesic, max_norm, relative_volume, rescale_in_apartment, successive_minima, HermitianNorm,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

fn triple(seed: u64, n: usize) -> (HermitianNorm, HermitianNorm, HermitianNorm) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        common::random_hermitian(n, &mut rng),
        common::random_hermitian(n, &mut rng),
        common::random_hermitian(n, &mut rng),
    )
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangle_and_quasi_triangle(seed in any::<u64>(), n in 1usize..=8) {
        let (a, b, c) = triple(seed, n);
        for p in PS {
            let ab = dp_distance(&a, &b, p).unwrap();
            let ac = dp_distance(&a, &c, p).unwrap();
            let cb = dp_distance(&c, &b, p).unwrap();
            prop_assert!(ab <= ac + cb + (n as f64).ln() + 1e-12);
            prop_assert!(ab <= (ac + cb) * (1.0 + 1e-10) + 1e-12, "p = {}: {} > {} + {}", p, ab, ac, cb);
        }
    }

    #[test]
    fn monotone_in_p(seed in any::<u64>(), n in 1usize..=8) {
        let (a, b, _) = triple(seed, n);
        let d: Vec<f64> = PS.iter().map(|&p| dp_distance(&a, &b, p).unwrap()).collect();
        for w in d.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-10) + 1e-12, "{:?}", d);
        }
    }

    #[test]
    fn geodesic_has_constant_speed(seed in any::<u64>(), n in 1usize..=8, t in 0.0f64..=1.0) {
        let (a, b, _) = triple(seed, n);
        let mid = geodesic(&a, &b, t).unwrap();
        for p in PS {
            let full = dp_distance(&a, &b, p).unwrap();
            prop_assert!(close(dp_distance(&a, &mid, p).unwrap(), t * full, 1e-9));
            prop_assert!(close(dp_distance(&mid, &b, p).unwrap(), (1.0 - t) * full, 1e-9));
        }
    }

    #[test]
    fn max_identity(seed in any::<u64>(), n in 1usize..=8) {
        let (a, b, _) = triple(seed, n);
        let join = max_norm(&a, &b).unwrap();
        let lhs = dp_distance(&a, &b, 1.0).unwrap();
        let rhs = dp_distance(&a, &join, 1.0).unwrap() + dp_distance(&b, &join, 1.0).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn domination_gives_volume(seed in any::<u64>(), n in 1usize..=8) {
        let (a, b, _) = triple(seed, n);
        let join = max_norm(&a, &b).unwrap();
        prop_assert!(successive_minima(&a, &join).unwrap().values().iter().all(|&l| l >= -1e-12));
        let d1 = dp_distance(&a, &join, 1.0).unwrap();
        prop_assert!(close(d1, relative_volume(&a, &join).unwrap(), 1e-10));
    }

    #[test]
    fn volume_is_lipschitz(seed in any::<u64>(), n in 1usize..=8) {
        let (a, b, c) = triple(seed, n);
        let gap = (relative_volume(&a, &c).unwrap() - relative_volume(&b, &c).unwrap()).abs();
        prop_assert!(gap <= dp_distance(&a, &b, 1.0).unwrap() * (1.0 + 1e-10) + 1e-12);
        prop_assert!(close(relative_volume(&a, &b).unwrap(), -relative_volume(&b, &a).unwrap(), 1e-10));
    }

    #[test]
    fn minima_are_antisymmetric(seed in any::<u64>(), n in 1usize..=8) {
        let (a, b, _) = triple(seed, n);
        let ab = successive_minima(&a, &b).unwrap();
        let ba = successive_minima(&b, &a).unwrap();
        for (x, y) in ab.values().iter().zip(ba.values().iter().rev()) {
            prop_assert!((x + y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn rescale_round_trip(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let apartment = common::random_apartment(n, &mut rng);
        let norm = common::random_in_apartment(&apartment, &mut rng);
        let a = common::random_values(n, -1.0, 1.0, &mut rng);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let back = rescale_in_apartment(&rescale_in_apartment(&norm, &apartment, &a).unwrap(), &apartment, &neg).unwrap();
        let scale = norm.gram().iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let err = (back.gram() - norm.gram()).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        prop_assert!(err <= 1e-12 * scale, "round-trip error {:e} at scale {:e}", err, scale);
    }
}
