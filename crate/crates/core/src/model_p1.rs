//! Torus-invariant geometry of `(P^1, O(1))`.
//!
//! Sections of `O(k)` are polynomials of degree `<= k` in the affine
//! coordinate `z`, with the monomial basis `z^0, ..., z^k`. A torus-invariant
//! metric is a convex potential `u(t)` of `t = log |z|^2` with asymptotic
//! slopes 0 and 1, and pointwise lengths are `|s|^2 e^{-k u(t)}`. The
//! reference volume form is the Fubini–Study form of mass one,
//! `e^t (1 + e^t)^{-2} dt` in the `t` variable.
//!
//! Torus invariance makes every `L^2` Gram matrix diagonal on monomials, with
//! `G_ii = int e^{(i+1) t - k u(t)} (1 + e^t)^{-2} dt`.

use std::ops::{Add, Mul};
use std::sync::Arc;

use num::{BigRational, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::literal::RealLiteral;
use crate::graded::{GradedError, GradedHermitian, GradedNA, GradedRationalNA, HermitianLevel, KRecord};
use crate::nonarch::{NANorm, NaError, RationalNANorm};
use crate::norms::{self, Apartment, HermitianNorm, NormError};
use crate::quadrature::{integrate_pieces, QuadratureControl, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("quadrature failed for k = {k}, i = {i}: {source}")]
    Quadrature { k: usize, i: usize, source: QuadratureError },
    #[error("monomial index {i} out of range for degree {k}")]
    IndexOutOfRange { k: usize, i: usize },
    #[error("degree k must be positive")]
    DegreeZero,
    #[error("gram matrix is not diagonal on monomials")]
    NotDiagonal,
    #[error("{got} weights for degree {k}")]
    WeightLength { k: usize, got: usize },
    #[error("Legendre variable x = {0} outside [0, 1]")]
    OutsideMomentInterval(f64),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Na(#[from] NaError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// `log(1 + e^t)` without overflow.
pub fn log1p_exp(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Shape of a torus-invariant potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `u(t) = log(1 + e^t)`.
    FubiniStudy,
    /// Convex piecewise-linear `u` with `u = 0` left of the first breakpoint
    /// and slope `slopes[j]` on the `j`-th piece; `slopes` runs from 0 to 1.
    PlPotential { breakpoints: Vec<f64>, slopes: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TorusMetricSpec {
    #[serde(flatten)]
    potential: Potential,
    #[serde(default, skip_serializing_if = "is_zero")]
    shift: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// A torus-invariant bounded positive metric on `O(1)`, stored as its
/// potential `u(t) = base(t) + shift`.
///
/// The metric weight in the `log |z|` variable is `u / 2`; its Legendre
/// transform on the moment interval `[0, 1]` is `u^* / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusMetricSpec", into = "TorusMetricSpec")]
pub struct TorusMetric {
    potential: Potential,
    shift: f64,
}

impl TryFrom<TorusMetricSpec> for TorusMetric {
    type Error = ModelError;
    fn try_from(spec: TorusMetricSpec) -> Result<Self> {
        TorusMetric::new(spec.potential, spec.shift)
    }
}

impl From<TorusMetric> for TorusMetricSpec {
    fn from(m: TorusMetric) -> Self {
        TorusMetricSpec { potential: m.potential, shift: m.shift }
    }
}

impl TorusMetric {
    pub fn new(potential: Potential, shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(ModelError::InvalidMetric("shift must be finite".into()));
        }
        if let Potential::PlPotential { breakpoints, slopes } = &potential {
            if slopes.len() != breakpoints.len() + 1 {
                return Err(ModelError::InvalidMetric(format!(
                    "{} slopes for {} breakpoints",
                    slopes.len(),
                    breakpoints.len()
                )));
            }
            if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ModelError::InvalidMetric("breakpoints must be finite and strictly increasing".into()));
            }
            if slopes.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(ModelError::InvalidMetric("slopes must lie in [0, 1]".into()));
            }
            if slopes.windows(2).any(|w| w[1] < w[0]) {
                return Err(ModelError::InvalidMetric("slopes must be nondecreasing".into()));
            }
            if slopes[0] != 0.0 || slopes[slopes.len() - 1] != 1.0 {
                return Err(ModelError::InvalidMetric("asymptotic slopes must be 0 and 1".into()));
            }
        }
        Ok(TorusMetric { potential, shift })
    }

    pub fn fubini_study() -> Self {
        TorusMetric { potential: Potential::FubiniStudy, shift: 0.0 }
    }

    pub fn pl_potential(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        Self::new(Potential::PlPotential { breakpoints, slopes }, 0.0)
    }

    /// The same metric with potential `u + c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.potential.clone(), self.shift + c)
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Kinks of `u` (empty for smooth potentials).
    pub fn kinks(&self) -> &[f64] {
        match &self.potential {
            Potential::FubiniStudy => &[],
            Potential::PlPotential { breakpoints, .. } => breakpoints,
        }
    }

    pub fn u(&self, t: f64) -> f64 {
        let base = match &self.potential {
            Potential::FubiniStudy => log1p_exp(t),
            Potential::PlPotential { breakpoints, slopes } => breakpoints
                .iter()
                .enumerate()
                .map(|(j, &b)| (slopes[j + 1] - slopes[j]) * (t - b).max(0.0))
                .sum(),
        };
        base + self.shift
    }

    /// Right derivative `u'(t+)`.
    pub fn slope(&self, t: f64) -> f64 {
        match &self.potential {
            Potential::FubiniStudy => logistic(t),
            Potential::PlPotential { breakpoints, slopes } => slopes[breakpoints.partition_point(|&b| b <= t)],
        }
    }

    /// Legendre transform `u^*(x) = sup_t (x t - u(t))` on `[0, 1]`.
    pub fn legendre(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(ModelError::OutsideMomentInterval(x));
        }
        let base = match &self.potential {
            Potential::FubiniStudy => xlogx(x) + xlogx(1.0 - x),
            // concave piecewise-linear in t, maximal at a breakpoint
            Potential::PlPotential { breakpoints, .. } => breakpoints
                .iter()
                .map(|&b| x * b - (self.u(b) - self.shift))
                .fold(f64::NEG_INFINITY, f64::max),
        };
        Ok(base - self.shift)
    }

    /// Legendre transform of the metric weight `u / 2` in the `log |z|` variable.
    pub fn weight_legendre(&self, x: f64) -> Result<f64> {
        Ok(0.5 * self.legendre(x)?)
    }

    /// Kinks of `u^*` inside `(0, 1)`: the interior slopes of a PL potential.
    fn legendre_kinks(&self) -> Vec<f64> {
        match &self.potential {
            Potential::FubiniStudy => vec![],
            Potential::PlPotential { slopes, .. } => slopes.iter().cloned().filter(|&s| s > 0.0 && s < 1.0).collect(),
        }
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Maximizes a concave function with nonincreasing right derivative `dh`
/// by bisection on the sign of `dh`. Returns the maximizer.
fn concave_argmax<D: Fn(f64) -> f64>(dh: D) -> f64 {
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    while dh(lo) <= 0.0 && lo > -1e6 {
        lo *= 2.0;
    }
    while dh(hi) >= 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dh(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `sup_t (x t - u(t))` by concave maximization, for `x` strictly inside `(0, 1)`.
/// Serves as an independent check of [`TorusMetric::legendre`].
pub fn legendre_by_search(metric: &TorusMetric, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(ModelError::OutsideMomentInterval(x));
    }
    let h = |t: f64| x * t - metric.u(t);
    let t = concave_argmax(|t| x - metric.slope(t));
    let mut best = h(t);
    for &b in metric.kinks() {
        best = best.max(h(b));
    }
    Ok(best)
}

/// Log of the `L^2` Gram diagonal, `log G_ii` for `i = 0..=k`.
///
/// Each integrand `exp(g(t))` has concave `g`; it is integrated as
/// `exp(g - max g)` between the points where `g` drops 60 below its peak,
/// cut at the peak and at the kinks of `u`.
pub fn l2_log_gram(k: usize, metric: &TorusMetric, control: &QuadratureControl) -> Result<Vec<f64>> {
    let kf = k as f64;
    (0..=k)
        .map(|i| {
            let a = (i + 1) as f64;
            let g = |t: f64| a * t - kf * metric.u(t) - 2.0 * log1p_exp(t);
            let peak = concave_argmax(|t| a - kf * metric.slope(t) - 2.0 * logistic(t));
            let gmax = g(peak);
            let drop = 60.0;
            let mut step = 1.0;
            while g(peak - step) > gmax - drop {
                step *= 2.0;
            }
            let left = peak - step;
            step = 1.0;
            while g(peak + step) > gmax - drop {
                step *= 2.0;
            }
            let right = peak + step;
            let mut cuts: Vec<f64> = vec![left, peak, right];
            cuts.extend(metric.kinks().iter().cloned().filter(|&b| b > left && b < right));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let integral = integrate_pieces(|t| (g(t) - gmax).exp(), &cuts, control)
                .map_err(|source| ModelError::Quadrature { k, i, source })?;
            Ok(gmax + integral.ln())
        })
        .collect()
}

/// Diagonal `L^2` norm `||s||^2 = int |s|^2 e^{-k u} dV` on `V_k`.
pub fn l2_gram(k: usize, metric: &TorusMetric, control: &QuadratureControl) -> Result<HermitianNorm> {
    let log_gram = l2_log_gram(k, metric, control)?;
    let diag: Vec<f64> = log_gram.iter().map(|g| g.exp()).collect();
    Ok(HermitianNorm::from_diagonal(&diag)?)
}

/// `log sup |z^i| e^{-k u / 2} = (k / 2) u^*(i / k)`.
pub fn log_sup_norm_monomial(k: usize, metric: &TorusMetric, i: usize) -> Result<f64> {
    if i > k {
        return Err(ModelError::IndexOutOfRange { k, i });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    Ok(0.5 * kf * metric.legendre(i as f64 / kf)?)
}

pub fn sup_norm_monomial(k: usize, metric: &TorusMetric, i: usize) -> Result<f64> {
    Ok(log_sup_norm_monomial(k, metric, i)?.exp())
}

/// Fubini–Study weight `u_k(t) = k^-1 log sum_i e^{i t} / G_ii` from the log
/// Gram diagonal.
pub fn fs_weight_from_log_gram(log_gram: &[f64], t: f64) -> Result<f64> {
    let k = log_gram.len().saturating_sub(1);
    if k == 0 {
        return Err(ModelError::DegreeZero);
    }
    let terms: Vec<f64> = log_gram.iter().enumerate().map(|(i, g)| i as f64 * t - g).collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|x| (x - m).exp()).sum();
    Ok((m + s.ln()) / k as f64)
}

/// Fubini–Study weight of a norm that is diagonal on monomials.
pub fn fs_weight(norm: &HermitianNorm, k: usize, t: f64) -> Result<f64> {
    if norm.dim() != k + 1 {
        return Err(ModelError::Norm(NormError::DimensionMismatch { left: k + 1, right: norm.dim() }));
    }
    if !norm.is_diagonal(1e-12) {
        return Err(ModelError::NotDiagonal);
    }
    let log_gram: Vec<f64> = norm.diagonal().iter().map(|g| g.ln()).collect();
    fs_weight_from_log_gram(&log_gram, t)
}

/// Filtrations of `V_k` diagonal on monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiltrationKind {
    /// `a_i = i`: order of vanishing at `z = 0`.
    VanishingOrder,
    /// Explicit weights on the monomials of one degree.
    Weighted { weights: Vec<f64> },
}

pub fn standard_filtration(k: usize, kind: &FiltrationKind) -> Result<NANorm> {
    let values = match kind {
        FiltrationKind::VanishingOrder => (0..=k).map(|i| i as f64).collect(),
        FiltrationKind::Weighted { weights } => {
            if weights.len() != k + 1 {
                return Err(ModelError::WeightLength { k, got: weights.len() });
            }
            weights.clone()
        }
    };
    Ok(NANorm::standard(values)?)
}

/// Graded filtrations on the section ring, diagonal on monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiltrationRule {
    /// `a_{i,k} = 0`.
    Trivial,
    /// `a_{i,k} = i`.
    VanishingOrder,
    /// `a_{i,k} = scale * i`.
    LinearWeight { scale: RealLiteral },
}

impl FiltrationRule {
    fn scale(&self) -> std::result::Result<BigRational, GradedError> {
        Ok(match self {
            FiltrationRule::Trivial => BigRational::zero(),
            FiltrationRule::VanishingOrder => BigRational::from_integer(1.into()),
            FiltrationRule::LinearWeight { scale } => scale.to_rational().map_err(NaError::from)?,
        })
    }

    /// Exact log-values `a_{i,k}`, `i = 0..=k`.
    pub fn exact_values(&self, k: usize) -> std::result::Result<Vec<BigRational>, GradedError> {
        let c = self.scale()?;
        Ok((0..=k).map(|i| c.clone() * BigRational::from_integer(i.into())).collect())
    }
}

/// `N_k = k + 1`.
pub fn section_dim(k: usize) -> usize {
    k + 1
}

/// `k |-> L^2(k u)` on monomials.
pub fn l2_graded(metric: &TorusMetric, control: QuadratureControl) -> GradedHermitian {
    let metric = metric.clone();
    GradedHermitian::new(
        Arc::new(section_dim),
        Arc::new(move |k| {
            let norm = l2_gram(k, &metric, &control)?;
            Ok(HermitianLevel { norm, basis: Apartment::standard(k + 1) })
        }),
    )
}

/// Graded filtration of the section ring; monomial-diagonal rules are
/// multiplicative on the monomial basis.
pub fn graded_filtration(rule: &FiltrationRule) -> std::result::Result<GradedNA, GradedError> {
    let exact = graded_filtration_exact(rule)?;
    Ok(GradedNA::new(
        Arc::new(section_dim),
        Arc::new(move |k| Ok(exact.at(k)?.to_float())),
        1,
        true,
    ))
}

pub fn graded_filtration_exact(rule: &FiltrationRule) -> std::result::Result<GradedRationalNA, GradedError> {
    rule.scale()?;
    let rule = rule.clone();
    Ok(GradedRationalNA::new(Arc::new(move |k| Ok(RationalNANorm::new(rule.exact_values(k)?))), 1, true))
}

/// Sup-norms of the monomials `z^0..z^k`, for Bernstein–Markov comparisons.
pub fn sup_norm_oracle(metric: &TorusMetric) -> crate::graded::DiagonalOracle {
    let metric = metric.clone();
    Arc::new(move |k| Ok((0..=k).map(|i| log_sup_norm_monomial(k, &metric, i)).collect::<Result<Vec<_>>>()?))
}

/// Product of sections of `O(m)` and `O(n)` given by monomial coefficients.
pub fn ring_multiply<T>(s: &[T], t: &[T]) -> Vec<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    if s.is_empty() || t.is_empty() {
        return vec![];
    }
    let mut out = vec![T::zero(); s.len() + t.len() - 1];
    for (i, a) in s.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in t.iter().enumerate() {
            out[i + j] = out[i + j].clone() + a.clone() * b.clone();
        }
    }
    out
}

/// Per-degree quantised distances `k^-1 d_p(L^2(k phi), L^2(k psi))`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantisedDistance {
    pub per_k: Vec<KRecord>,
    /// Value at the largest `k`.
    pub estimate: f64,
}

pub fn metric_distance_via_quantisation(
    phi: &TorusMetric,
    psi: &TorusMetric,
    p: f64,
    k_list: &[usize],
    control: &QuadratureControl,
) -> std::result::Result<QuantisedDistance, GradedError> {
    crate::graded::check_k_list(k_list)?;
    norms::check_exponent(p)?;
    let mut per_k: Vec<KRecord> = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let a = l2_gram(k, phi, control)?;
        let b = l2_gram(k, psi, control)?;
        let value = norms::dp_distance(&a, &b, p)? / k as f64;
        let diagnostic = per_k.last().map(|r| value - r.value);
        per_k.push(KRecord { k, value, diagnostic });
    }
    let estimate = per_k.last().map(|r| r.value).unwrap_or(0.0);
    Ok(QuantisedDistance { per_k, estimate })
}

/// Toric distance `(int_0^1 |phi^* - psi^*|^p dx)^(1/p)` between the Legendre
/// transforms of the two metric weights.
pub fn toric_distance_oracle(phi: &TorusMetric, psi: &TorusMetric, p: f64, control: &QuadratureControl) -> Result<f64> {
    norms::check_exponent(p)?;
    if p.is_infinite() {
        return Err(ModelError::Norm(NormError::InvalidExponent(p)));
    }
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(phi.legendre_kinks());
    cuts.extend(psi.legendre_kinks());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let integrand = |x: f64| {
        let d = phi.weight_legendre(x).unwrap_or(f64::NAN) - psi.weight_legendre(x).unwrap_or(f64::NAN);
        d.abs().powf(p)
    };
    let integral = integrate_pieces(integrand, &cuts, control)
        .map_err(|source| ModelError::Quadrature { k: 0, i: 0, source })?;
    Ok(integral.powf(1.0 / p))
}
