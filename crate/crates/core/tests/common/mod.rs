//! Random fixtures shared by the integration suites.
#![allow(dead_code)]

use flatcone::norms::{Apartment, HermitianNorm};
use flatcone::{CMatrix, C64};
use rand::Rng;

pub fn random_matrix<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// `B B^* + eps I` with entries of `B` uniform in the unit square.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> HermitianNorm {
    let b = random_matrix(n, rng);
    let g = &b * b.adjoint() + CMatrix::identity(n, n).map(|z| z * 0.1);
    HermitianNorm::from_gram(g).expect("positive definite")
}

/// `I + 0.9 G / |G|_2`, with condition number below 19.
pub fn random_apartment<R: Rng>(n: usize, rng: &mut R) -> Apartment {
    let g = random_matrix(n, rng);
    let top = g.clone().svd(false, false).singular_values.max();
    Apartment::new(CMatrix::identity(n, n) + g.unscale(top / 0.9)).expect("well conditioned")
}

pub fn random_values<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// A norm in the apartment of `a` with random squared lengths.
pub fn random_in_apartment<R: Rng>(a: &Apartment, rng: &mut R) -> HermitianNorm {
    let d = random_values(a.dim(), 0.1, 10.0, rng);
    HermitianNorm::with_orthogonal_basis(a, &d).expect("positive lengths")
}

pub fn random_vector<R: Rng>(n: usize, rng: &mut R) -> flatcone::CVector {
    flatcone::CVector::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}
