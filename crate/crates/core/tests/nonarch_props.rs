mod common;

use flatcone::nonarch::{adapt_joint_basis, default_schemes, envelope_hermitian, envelope_upper_bound, NANorm, RationalNANorm};
use flatcone::norms::HermitianNorm;
use flatcone::{CVector, C64};
use num::{BigInt, BigRational, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(seed: u64, n: usize) -> (ChaCha8Rng, HermitianNorm, NANorm) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = common::random_hermitian(n, &mut rng);
    let apartment = common::random_apartment(n, &mut rng);
    // repeated values exercise ties in the filtration
    let values = (0..n).map(|_| rng.gen_range(-3i32..=3) as f64 * 0.5).collect();
    let na = NANorm::from_apartment(apartment, values).unwrap();
    (rng, norm, na)
}

/// Random combination of the columns of a basis with some coefficients zeroed.
fn sparse_combination<R: Rng>(basis: &flatcone::CMatrix, rng: &mut R) -> (CVector, Vec<bool>) {
    let n = basis.ncols();
    loop {
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        if mask.iter().any(|&b| b) {
            let c = CVector::from_fn(n, |i, _| {
                if mask[i] {
                    C64::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0))
                } else {
                    C64::zero()
                }
            });
            return (basis * c, mask);
        }
    }
}

#[test]
fn ultrametric_on_sampled_triples() {
    for seed in 0..5 {
        let (mut rng, _, na) = fixture(seed, 2 + seed as usize);
        let n = na.dim();
        for _ in 0..1000 {
            let (v, _) = sparse_combination(na.apartment().basis(), &mut rng);
            let w = if rng.gen_bool(0.5) { -v.clone() + common::random_vector(n, &mut rng) } else { common::random_vector(n, &mut rng) };
            let lhs = na.eval(&(&v + &w)).unwrap();
            let rhs = na.eval(&v).unwrap().max(na.eval(&w).unwrap());
            assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
        }
    }
}

#[test]
fn exact_ultrametric_on_sampled_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 7;
    let values: Vec<BigRational> = (0..n).map(|_| BigRational::new(rng.gen_range(-9..=9).into(), rng.gen_range(1..=4).into())).collect();
    let na = RationalNANorm::new(values);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<BigInt> { (0..n).map(|_| BigInt::from(rng.gen_range(-2..=2))).collect() };
    for _ in 0..1000 {
        let (v, w) = (draw(&mut rng), draw(&mut rng));
        let sum: Vec<BigInt> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        let (Some(lv), Some(lw)) = (na.log_value(&v).unwrap(), na.log_value(&w).unwrap()) else { continue };
        if let Some(ls) = na.log_value(&sum).unwrap() {
            assert!(ls >= lv.clone().min(lw.clone()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_basis_certificate(seed in any::<u64>(), n in 1usize..=8) {
        let (mut rng, norm, na) = fixture(seed, n);
        let joint = adapt_joint_basis(&norm, &na).unwrap();
        let g = norm.basis_gram(joint.basis());
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let scale = (g[(i, i)].re * g[(j, j)].re).sqrt();
                    prop_assert!(g[(i, j)].norm() <= 1e-10 * scale);
                }
            }
        }
        let col_values: Vec<f64> = (0..n).map(|i| na.eval(&joint.column(i)).unwrap()).collect();
        for _ in 0..20 {
            let (w, mask) = sparse_combination(joint.basis(), &mut rng);
            let expected = col_values.iter().zip(&mask).filter(|(_, &m)| m).map(|(v, _)| *v).fold(0.0, f64::max);
            prop_assert_eq!(na.eval(&w).unwrap(), expected);
        }
    }

    #[test]
    fn envelope_is_monotone_in_values(seed in any::<u64>(), n in 1usize..=8) {
        let (mut rng, norm, na) = fixture(seed, n);
        let bumped: Vec<f64> = na.values().iter().map(|a| if rng.gen_bool(0.5) { a + rng.gen_range(0.0..1.0) } else { *a }).collect();
        let larger = na.with_values(bumped).unwrap();
        let (e, e_larger) = (envelope_hermitian(&norm, &na).unwrap(), envelope_hermitian(&norm, &larger).unwrap());
        for _ in 0..20 {
            let w = common::random_vector(n, &mut rng);
            prop_assert!(e_larger.norm(&w).unwrap() <= e.norm(&w).unwrap() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn upper_bound_is_sandwiched(seed in any::<u64>(), n in 1usize..=8) {
        let (mut rng, norm, na) = fixture(seed, n);
        let envelope = envelope_hermitian(&norm, &na).unwrap();
        let eval = |v: &CVector| norm.norm(v).unwrap();
        for _ in 0..20 {
            let w = common::random_vector(n, &mut rng);
            let bound = envelope_upper_bound(eval, &na, &default_schemes(), &w).unwrap();
            let one_term = eval(&w) * na.eval(&w).unwrap();
            prop_assert!(bound <= one_term);
            prop_assert!(envelope.norm(&w).unwrap() <= bound * (1.0 + 1e-10));
        }
    }
}
