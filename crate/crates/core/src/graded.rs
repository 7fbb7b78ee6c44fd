//! Sequences of norms indexed by the degree `k`.
//!
//! A graded norm is a generator `k |-> norm on V_k`. Limits are never taken
//! here: asymptotic quantities are reported as per-`k` sequences
//! ([`KRecord`]) with successive differences as a convergence diagnostic.

use std::sync::Arc;

use num::{BigInt, BigRational, Signed, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::convex::{ConvexError, DiscreteMeasure, Normalization, PLFunction, RationalPL};
use crate::model_p1::ModelError;
use crate::nonarch::{self, NANorm, NaError, RationalNANorm};
use crate::norms::{self, Apartment, HermitianNorm, NormError};
use crate::{CVector, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradedError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Na(#[from] NaError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("degree {k}: expected dimension {expected}, got {got}")]
    DimensionMismatch { k: usize, expected: usize, got: usize },
    #[error("degree k must be at least 1")]
    DegreeZero,
    #[error("k list is empty")]
    EmptyKList,
    #[error("k list is not strictly increasing at position {0}")]
    UnsortedKList(usize),
    #[error("function must be decreasing unless the norm is multiplicative on its basis and nondecreasing functions are allowed")]
    NotDecreasing,
    #[error("degree {k}: pair is not jointly diagonal on the distinguished basis")]
    NonDiagonalPair { k: usize },
    #[error("degree {k}: modified squared norm e^{log_sq_norm:.1} is outside floating-point range")]
    OutOfRange { k: usize, log_sq_norm: f64 },
}

pub type Result<T> = std::result::Result<T, GradedError>;

/// One entry of a per-degree sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KRecord {
    pub k: usize,
    pub value: f64,
    /// Change from the previous record, or a check residual; `None` when absent.
    pub diagnostic: Option<f64>,
}

pub fn check_k_list(k_list: &[usize]) -> Result<()> {
    if k_list.is_empty() {
        return Err(GradedError::EmptyKList);
    }
    if k_list[0] == 0 {
        return Err(GradedError::DegreeZero);
    }
    if let Some(i) = k_list.windows(2).position(|w| w[1] <= w[0]) {
        return Err(GradedError::UnsortedKList(i + 1));
    }
    Ok(())
}

pub type DimFn = Arc<dyn Fn(usize) -> usize + Send + Sync>;

/// A Hermitian norm on `V_k` with its distinguished basis.
#[derive(Debug, Clone)]
pub struct HermitianLevel {
    pub norm: HermitianNorm,
    pub basis: Apartment,
}

pub type HermitianGenerator = Arc<dyn Fn(usize) -> Result<HermitianLevel> + Send + Sync>;

/// `k |-> (||.||_k, distinguished basis of V_k)`.
#[derive(Clone)]
pub struct GradedHermitian {
    dims: DimFn,
    generator: HermitianGenerator,
}

impl GradedHermitian {
    pub fn new(dims: DimFn, generator: HermitianGenerator) -> Self {
        GradedHermitian { dims, generator }
    }

    pub fn dim(&self, k: usize) -> usize {
        (self.dims)(k)
    }

    pub fn at(&self, k: usize) -> Result<HermitianLevel> {
        let level = (self.generator)(k)?;
        let expected = self.dim(k);
        for got in [level.norm.dim(), level.basis.dim()] {
            if got != expected {
                return Err(GradedError::DimensionMismatch { k, expected, got });
            }
        }
        Ok(level)
    }

    /// `k |-> e^{-k t} ||.||_k`.
    pub fn scaled(&self, t: f64) -> Self {
        let inner = self.clone();
        GradedHermitian::new(
            self.dims.clone(),
            Arc::new(move |k| {
                let level = inner.at(k)?;
                Ok(HermitianLevel { norm: level.norm.scaled(k as f64 * t), basis: level.basis })
            }),
        )
    }
}

pub type NaGenerator = Arc<dyn Fn(usize) -> Result<NANorm> + Send + Sync>;

/// `k |-> ||.||^NA_k`, an orthogonal basis being part of each level.
#[derive(Clone)]
pub struct GradedNA {
    dims: DimFn,
    generator: NaGenerator,
    dim_exponent: i32,
    multiplicative_on_basis: bool,
}

impl GradedNA {
    /// `dim_exponent` is the `n` with `N_k ~ k^n`; `multiplicative_on_basis`
    /// records that products of basis vectors are basis vectors with added values.
    pub fn new(dims: DimFn, generator: NaGenerator, dim_exponent: i32, multiplicative_on_basis: bool) -> Self {
        GradedNA { dims, generator, dim_exponent, multiplicative_on_basis }
    }

    pub fn dim(&self, k: usize) -> usize {
        (self.dims)(k)
    }

    pub fn dim_exponent(&self) -> i32 {
        self.dim_exponent
    }

    pub fn multiplicative_on_basis(&self) -> bool {
        self.multiplicative_on_basis
    }

    pub fn at(&self, k: usize) -> Result<NANorm> {
        let level = (self.generator)(k)?;
        let expected = self.dim(k);
        if level.dim() != expected {
            return Err(GradedError::DimensionMismatch { k, expected, got: level.dim() });
        }
        Ok(level)
    }
}

pub type RationalGenerator = Arc<dyn Fn(usize) -> Result<RationalNANorm> + Send + Sync>;

/// Exact graded norm on the standard bases of the `V_k`.
#[derive(Clone)]
pub struct GradedRationalNA {
    generator: RationalGenerator,
    dim_exponent: i32,
    multiplicative_on_basis: bool,
}

impl GradedRationalNA {
    pub fn new(generator: RationalGenerator, dim_exponent: i32, multiplicative_on_basis: bool) -> Self {
        GradedRationalNA { generator, dim_exponent, multiplicative_on_basis }
    }

    pub fn at(&self, k: usize) -> Result<RationalNANorm> {
        (self.generator)(k)
    }

    pub fn dim_exponent(&self) -> i32 {
        self.dim_exponent
    }

    pub fn multiplicative_on_basis(&self) -> bool {
        self.multiplicative_on_basis
    }
}

/// `sigma_k = k^-n sum_i delta_{a_i / k}` (raw) or its normalization to mass one.
pub fn dh_measure_at_k(filtration: &GradedNA, k: usize, normalization: Normalization) -> Result<DiscreteMeasure> {
    if k == 0 {
        return Err(GradedError::DegreeZero);
    }
    let level = filtration.at(k)?;
    let kf = k as f64;
    let atoms: Vec<f64> = level.jumping_numbers().iter().map(|a| a / kf).collect();
    let weight = kf.powi(-filtration.dim_exponent);
    let weights = vec![weight; atoms.len()];
    Ok(DiscreteMeasure::new(atoms, weights, normalization)?)
}

/// `sigma` at the largest `k` plus Kolmogorov distances between consecutive
/// normalized `sigma_k`. Records carry the distance as `value` and the change
/// from the previous distance as `diagnostic`.
pub fn dh_limit_estimate(filtration: &GradedNA, k_list: &[usize]) -> Result<(DiscreteMeasure, Vec<KRecord>)> {
    check_k_list(k_list)?;
    let mut records: Vec<KRecord> = Vec::new();
    let mut prev: Option<DiscreteMeasure> = None;
    for &k in k_list {
        let mu = dh_measure_at_k(filtration, k, Normalization::Probability)?;
        if let Some(p) = &prev {
            let value = p.kolmogorov(&mu);
            let diagnostic = records.last().map(|r| value - r.value);
            records.push(KRecord { k, value, diagnostic });
        }
        prev = Some(mu);
    }
    let last = dh_measure_at_k(filtration, k_list[k_list.len() - 1], Normalization::Probability)?;
    Ok((last, records))
}

/// Worst log-margin `log(||s|| ||t|| / ||s t||)` found by a submultiplicativity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmultReport {
    pub worst_margin: f64,
    pub basis_pairs: usize,
    pub random_pairs: usize,
    /// Basis indices of the worst basis pair, when the worst case was a basis pair.
    pub worst_basis_pair: Option<(usize, usize)>,
}

fn random_section<R: Rng>(basis: &Apartment, rng: &mut R) -> CVector {
    let n = basis.dim();
    let mut c = CVector::zeros(n);
    while c.iter().all(|z| *z == C64::zero()) {
        for i in 0..n {
            if rng.gen_bool(0.5) {
                c[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    basis.basis() * c
}

/// Checks `||s t||_{m+n} <= ||s||_m ||t||_n` on all pairs of basis vectors and
/// on `samples` random pairs. Margins are `-log||s|| - log||t|| + log||st||`
/// negated, i.e. `a(st) - a(s) - a(t)`; nonnegative means the inequality holds.
pub fn check_submultiplicative_na<F, R>(
    filtration: &GradedNA,
    ring: F,
    m: usize,
    n: usize,
    samples: usize,
    rng: &mut R,
) -> Result<SubmultReport>
where
    F: Fn(&CVector, &CVector) -> CVector,
    R: Rng,
{
    let (fm, fn_, fmn) = (filtration.at(m)?, filtration.at(n)?, filtration.at(m + n)?);
    let margin = |s: &CVector, t: &CVector| -> Result<f64> {
        let st = ring(s, t);
        let v = fmn.log_value(&st)?;
        Ok(if v.is_infinite() { f64::INFINITY } else { v - fm.log_value(s)? - fn_.log_value(t)? })
    };
    let mut report = SubmultReport { worst_margin: f64::INFINITY, basis_pairs: 0, random_pairs: 0, worst_basis_pair: None };
    for i in 0..fm.dim() {
        for j in 0..fn_.dim() {
            let g = margin(&fm.apartment().column(i), &fn_.apartment().column(j))?;
            report.basis_pairs += 1;
            if g < report.worst_margin {
                report.worst_margin = g;
                report.worst_basis_pair = Some((i, j));
            }
        }
    }
    for _ in 0..samples {
        let s = random_section(fm.apartment(), rng);
        let t = random_section(fn_.apartment(), rng);
        let g = margin(&s, &t)?;
        report.random_pairs += 1;
        if g < report.worst_margin {
            report.worst_margin = g;
            report.worst_basis_pair = None;
        }
    }
    Ok(report)
}

/// Exact counterpart of [`SubmultReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSubmultReport {
    pub worst_margin: Option<BigRational>,
    pub basis_pairs: usize,
    pub random_pairs: usize,
}

fn random_integer_section<R: Rng>(n: usize, rng: &mut R) -> Vec<BigInt> {
    loop {
        let c: Vec<BigInt> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { BigInt::from(rng.gen_range(-3i64..=3)) } else { BigInt::zero() })
            .collect();
        if c.iter().any(|x| !x.is_zero()) {
            return c;
        }
    }
}

/// Submultiplicativity in exact arithmetic on standard bases, with
/// integer-coefficient random sections.
pub fn check_submultiplicative_exact<F, R>(
    filtration: &GradedRationalNA,
    ring: F,
    m: usize,
    n: usize,
    samples: usize,
    rng: &mut R,
) -> Result<ExactSubmultReport>
where
    F: Fn(&[BigInt], &[BigInt]) -> Vec<BigInt>,
    R: Rng,
{
    let (fm, fn_, fmn) = (filtration.at(m)?, filtration.at(n)?, filtration.at(m + n)?);
    let margin = |s: &[BigInt], t: &[BigInt]| -> Result<Option<BigRational>> {
        let st = ring(s, t);
        let (Some(vst), Some(vs), Some(vt)) = (fmn.log_value(&st)?, fm.log_value(s)?, fn_.log_value(t)?) else {
            return Ok(None);
        };
        Ok(Some(vst - vs - vt))
    };
    let mut worst: Option<BigRational> = None;
    let mut update = |g: Option<BigRational>| {
        if let Some(g) = g {
            if worst.as_ref().map_or(true, |w| g < *w) {
                worst = Some(g);
            }
        }
    };
    let unit = |len: usize, i: usize| -> Vec<BigInt> {
        (0..len).map(|j| if j == i { BigInt::from(1) } else { BigInt::zero() }).collect()
    };
    let (dm, dn) = (fm.dim(), fn_.dim());
    for i in 0..dm {
        for j in 0..dn {
            update(margin(&unit(dm, i), &unit(dn, j))?);
        }
    }
    for _ in 0..samples {
        let s = random_integer_section(dm, rng);
        let t = random_integer_section(dn, rng);
        update(margin(&s, &t)?);
    }
    Ok(ExactSubmultReport { worst_margin: worst, basis_pairs: dm * dn, random_pairs: samples })
}

/// `max_k max_i |a_{i,k}| / k`, a bound on the boundedness constant `delta`.
pub fn check_bounded_na(filtration: &GradedNA, k_list: &[usize]) -> Result<f64> {
    check_k_list(k_list)?;
    let mut delta: f64 = 0.0;
    for &k in k_list {
        let level = filtration.at(k)?;
        for a in level.values() {
            delta = delta.max(a.abs() / k as f64);
        }
    }
    Ok(delta)
}

fn check_decreasing(decreasing: bool, multiplicative: bool, allow_nondecreasing: bool) -> Result<()> {
    if decreasing || (multiplicative && allow_nondecreasing) {
        Ok(())
    } else {
        Err(GradedError::NotDecreasing)
    }
}

/// Modification by a convex function: same bases, values
/// `a'_{i,k} = a_{i,k} - k f(a_{i,k} / k)`, i.e. `||s_i||' = ||s_i|| e^{k f(a_i / k)}`.
pub fn modify_na(filtration: &GradedNA, f: &PLFunction, allow_nondecreasing: bool) -> Result<GradedNA> {
    check_decreasing(f.is_decreasing(), filtration.multiplicative_on_basis, allow_nondecreasing)?;
    let inner = filtration.clone();
    let f = f.clone();
    Ok(GradedNA::new(
        filtration.dims.clone(),
        Arc::new(move |k| {
            let level = inner.at(k)?;
            let kf = k as f64;
            let values = level
                .values()
                .iter()
                .map(|&a| Ok(a - kf * f.eval(&(a / kf))?))
                .collect::<Result<Vec<f64>>>()?;
            Ok(level.with_values(values)?)
        }),
        filtration.dim_exponent,
        filtration.multiplicative_on_basis,
    ))
}

pub fn modify_na_exact(filtration: &GradedRationalNA, f: &RationalPL, allow_nondecreasing: bool) -> Result<GradedRationalNA> {
    check_decreasing(f.is_decreasing(), filtration.multiplicative_on_basis, allow_nondecreasing)?;
    let inner = filtration.clone();
    let f = f.clone();
    Ok(GradedRationalNA::new(
        Arc::new(move |k| {
            let level = inner.at(k)?;
            let kq = BigRational::from_integer(BigInt::from(k));
            let values = level
                .values()
                .iter()
                .map(|a| Ok(a.clone() - kq.clone() * f.eval(&(a.clone() / kq.clone()))?))
                .collect::<Result<Vec<BigRational>>>()?;
            Ok(RationalNANorm::new(values))
        }),
        filtration.dim_exponent,
        filtration.multiplicative_on_basis,
    ))
}

/// `iota(||.||_k, f)`: in a basis `(s_i)` orthogonal for both `H_k` and `F_k`,
/// the norm with `||s_i||' = ||s_i||_{H_k} e^{k f(a_i / k)}` where
/// `a_i = -log ||s_i||_{F_k}`.
pub fn modify_hermitian(hermitian: &GradedHermitian, filtration: &GradedNA, f: &PLFunction) -> Result<GradedHermitian> {
    let (h, fl, f) = (hermitian.clone(), filtration.clone(), f.clone());
    Ok(GradedHermitian::new(
        hermitian.dims.clone(),
        Arc::new(move |k| {
            let level = h.at(k)?;
            let na = fl.at(k)?;
            let joint = nonarch::adapt_joint_basis(&level.norm, &na)?;
            let kf = k as f64;
            let gram = level.norm.basis_gram(joint.basis());
            let sq = (0..joint.dim())
                .map(|i| {
                    let a = na.log_value(&joint.column(i))?;
                    let log_sq = gram[(i, i)].re.ln() + 2.0 * kf * f.eval(&(a / kf))?;
                    let sq = log_sq.exp();
                    if !(sq.is_normal()) {
                        return Err(GradedError::OutOfRange { k, log_sq_norm: log_sq });
                    }
                    Ok(sq)
                })
                .collect::<Result<Vec<f64>>>()?;
            let norm = HermitianNorm::with_orthogonal_basis(&joint, &sq)?;
            Ok(HermitianLevel { norm, basis: joint })
        }),
    ))
}

fn with_diffs(mut records: Vec<KRecord>) -> Vec<KRecord> {
    for i in 1..records.len() {
        records[i].diagnostic = Some(records[i].value - records[i - 1].value);
    }
    records
}

/// `k^-1 d_p(A_k, B_k)` for each `k`, with successive differences.
pub fn asymptotic_dp(a: &GradedHermitian, b: &GradedHermitian, p: f64, k_list: &[usize]) -> Result<Vec<KRecord>> {
    check_k_list(k_list)?;
    norms::check_exponent(p)?;
    let records = k_list
        .iter()
        .map(|&k| {
            let value = norms::dp_distance(&a.at(k)?.norm, &b.at(k)?.norm, p)? / k as f64;
            Ok(KRecord { k, value, diagnostic: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_diffs(records))
}

/// `k^-1 vol(A_k, B_k)` for each `k`. The diagnostic is the residual
/// `k^-1 |d_1(A,B) - d_1(A, A v B) - d_1(B, A v B)|` of the max-operator identity.
pub fn asymptotic_vol(a: &GradedHermitian, b: &GradedHermitian, k_list: &[usize]) -> Result<Vec<KRecord>> {
    check_k_list(k_list)?;
    k_list
        .iter()
        .map(|&k| {
            let (na, nb) = (a.at(k)?.norm, b.at(k)?.norm);
            let kf = k as f64;
            let value = norms::relative_volume(&na, &nb)? / kf;
            let join = norms::max_norm(&na, &nb)?;
            let lhs = norms::dp_distance(&na, &nb, 1.0)?;
            let rhs = norms::dp_distance(&na, &join, 1.0)? + norms::dp_distance(&nb, &join, 1.0)?;
            Ok(KRecord { k, value, diagnostic: Some((lhs - rhs).abs() / kf) })
        })
        .collect()
}

/// Norms of the distinguished basis vectors of `V_k`, as logarithms.
pub type DiagonalOracle = Arc<dyn Fn(usize) -> Result<Vec<f64>> + Send + Sync>;

/// The comparison side of a Bernstein–Markov check.
#[derive(Clone)]
pub enum NormSequence {
    Hermitian(GradedHermitian),
    /// A (possibly non-Hermitian) norm known only through `log ||e_i||` on the
    /// standard basis, assumed diagonal there.
    Diagonal(DiagonalOracle),
}

/// `k^-1 d_inf(A_k, B_k)`. Against a diagonal oracle, `A_k` must have a
/// diagonal Gram matrix on the standard basis and the distance is
/// `max_i |log ||e_i||_A - log ||e_i||_B|`.
pub fn bernstein_markov_gap(a: &GradedHermitian, b: &NormSequence, k_list: &[usize]) -> Result<Vec<KRecord>> {
    check_k_list(k_list)?;
    let records = k_list
        .iter()
        .map(|&k| {
            let na = a.at(k)?.norm;
            let d = match b {
                NormSequence::Hermitian(bh) => norms::dp_distance(&na, &bh.at(k)?.norm, f64::INFINITY)?,
                NormSequence::Diagonal(oracle) => {
                    if !na.is_diagonal(crate::tolerances::JOINT_DIAGONAL) {
                        return Err(GradedError::NonDiagonalPair { k });
                    }
                    let logs = oracle(k)?;
                    if logs.len() != na.dim() {
                        return Err(GradedError::DimensionMismatch { k, expected: na.dim(), got: logs.len() });
                    }
                    na.diagonal()
                        .iter()
                        .zip(&logs)
                        .map(|(g, l)| (0.5 * g.ln() - l).abs())
                        .fold(0.0, f64::max)
                }
            };
            Ok(KRecord { k, value: d / k as f64, diagnostic: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_diffs(records))
}

/// Whether a rational margin is nonnegative.
pub fn margin_ok(m: &Option<BigRational>) -> bool {
    m.as_ref().map_or(true, |g| !g.is_negative())
}
