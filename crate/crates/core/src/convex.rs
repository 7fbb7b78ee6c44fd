//! Piecewise-linear convex functions on a closed interval and discrete
//! measures on the line.
//!
//! The cone `C` of bounded, decreasing, convex functions on the support of a
//! Duistermaat–Heckman measure is represented by [`PiecewiseLinear`] over
//! either `f64` or exact rationals. Distances between cone elements are
//! `L^p` distances against a [`DiscreteMeasure`].

use std::fmt::Debug;

use num::{BigRational, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::literal::{LiteralError, RealLiteral};
use crate::quadrature::{integrate_pieces, QuadratureControl, QuadratureError};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexError {
    #[error("no breakpoints")]
    Empty,
    #[error("{breakpoints} breakpoints but {values} values")]
    LengthMismatch { breakpoints: usize, values: usize },
    #[error("breakpoints are not strictly increasing at index {0}")]
    UnsortedBreakpoints(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("function is not convex at breakpoint {0}")]
    NotConvex(usize),
    #[error("function is not decreasing on segment {0}")]
    NotDecreasing(usize),
    #[error("x = {x} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("negative scale factor {0}")]
    NegativeScale(f64),
    #[error("domains differ: [{0}, {1}] vs [{2}, {3}]")]
    DomainMismatch(f64, f64, f64, f64),
    #[error("exponent p = {0} is not in [1, inf]")]
    InvalidExponent(f64),
    #[error("negative weight at atom {0}")]
    NegativeWeight(usize),
    #[error("{atoms} atoms but {weights} weights")]
    MeasureLength { atoms: usize, weights: usize },
    #[error("operation needs a second operand")]
    MissingOperand,
    #[error(transparent)]
    Literal(#[from] LiteralError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

pub type Result<T> = std::result::Result<T, ConvexError>;

/// Ordered field scalars a piecewise-linear function can be built over.
pub trait PlScalar: Clone + PartialOrd + Debug + num::Num + Signed {
    /// Allowed negative slope increment given the largest absolute slope.
    fn convexity_slack(max_abs_slope: &Self) -> Self;
    /// Distance outside the domain that is still clamped to the endpoint.
    fn domain_slack() -> Self;
    fn to_f64(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl PlScalar for f64 {
    fn convexity_slack(max_abs_slope: &f64) -> f64 {
        tolerances::CONVEXITY * max_abs_slope
    }
    fn domain_slack() -> f64 {
        tolerances::DOMAIN_CLAMP
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl PlScalar for BigRational {
    fn convexity_slack(_: &BigRational) -> BigRational {
        BigRational::zero()
    }
    fn domain_slack() -> BigRational {
        BigRational::zero()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_finite_value(&self) -> bool {
        true
    }
}

/// A continuous piecewise-linear function on `[x_0, x_m]` interpolating
/// `values` at `breakpoints`. Construction validates convexity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
}

pub type PLFunction = PiecewiseLinear<f64>;
pub type RationalPL = PiecewiseLinear<BigRational>;

impl<T: PlScalar> PiecewiseLinear<T> {
    /// Validates sorted breakpoints, convexity and, when asked, monotone decrease.
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, require_decreasing: bool) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(ConvexError::Empty);
        }
        if breakpoints.len() != values.len() {
            return Err(ConvexError::LengthMismatch { breakpoints: breakpoints.len(), values: values.len() });
        }
        for (i, (x, y)) in breakpoints.iter().zip(&values).enumerate() {
            if !x.is_finite_value() || !y.is_finite_value() {
                return Err(ConvexError::NonFinite(i));
            }
        }
        for i in 1..breakpoints.len() {
            if breakpoints[i] <= breakpoints[i - 1] {
                return Err(ConvexError::UnsortedBreakpoints(i));
            }
        }
        let f = PiecewiseLinear { breakpoints, values };
        let slopes = f.slopes();
        let max_abs = slopes.iter().fold(T::zero(), |m, s| if s.abs() > m { s.abs() } else { m });
        let slack = T::convexity_slack(&max_abs);
        for j in 1..slopes.len() {
            if slopes[j].clone() - slopes[j - 1].clone() < -slack.clone() {
                return Err(ConvexError::NotConvex(j));
            }
        }
        if require_decreasing {
            if let Some(j) = f.first_increasing_segment() {
                return Err(ConvexError::NotDecreasing(j));
            }
        }
        Ok(f)
    }

    /// The constant function `c` on `[lo, hi]`.
    pub fn constant(lo: T, hi: T, c: T) -> Result<Self> {
        if lo == hi {
            Self::new(vec![lo], vec![c], true)
        } else {
            Self::new(vec![lo, hi], vec![c.clone(), c], true)
        }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn domain(&self) -> (T, T) {
        (self.breakpoints[0].clone(), self.breakpoints[self.breakpoints.len() - 1].clone())
    }

    pub fn slopes(&self) -> Vec<T> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1].clone() - y[0].clone()) / (x[1].clone() - x[0].clone()))
            .collect()
    }

    fn first_increasing_segment(&self) -> Option<usize> {
        self.slopes().iter().position(|s| *s > T::zero())
    }

    pub fn is_decreasing(&self) -> bool {
        self.first_increasing_segment().is_none()
    }

    /// `sup |f|`, attained at a breakpoint.
    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    /// Value at `x` together with a flag set when `x` was clamped onto the domain.
    pub fn eval_reporting(&self, x: &T) -> Result<(T, bool)> {
        let (lo, hi) = self.domain();
        let slack = T::domain_slack();
        let (x, clamped) = if *x < lo {
            if lo.clone() - x.clone() > slack {
                return Err(self.out_of_domain(x));
            }
            (lo, true)
        } else if *x > hi {
            if x.clone() - hi.clone() > slack {
                return Err(self.out_of_domain(x));
            }
            (hi, true)
        } else {
            (x.clone(), false)
        };
        let bp = &self.breakpoints;
        // index of the last breakpoint <= x
        let j = match bp.binary_search_by(|b| b.partial_cmp(&x).expect("ordered scalars")) {
            Ok(j) => return Ok((self.values[j].clone(), clamped)),
            Err(j) => j - 1,
        };
        let t = (x - bp[j].clone()) / (bp[j + 1].clone() - bp[j].clone());
        let v = self.values[j].clone() + t * (self.values[j + 1].clone() - self.values[j].clone());
        Ok((v, clamped))
    }

    pub fn eval(&self, x: &T) -> Result<T> {
        Ok(self.eval_reporting(x)?.0)
    }

    fn out_of_domain(&self, x: &T) -> ConvexError {
        let (lo, hi) = self.domain();
        ConvexError::OutOfDomain { x: x.to_f64(), lo: lo.to_f64(), hi: hi.to_f64() }
    }

    pub fn to_f64(&self) -> PLFunction {
        PiecewiseLinear {
            breakpoints: self.breakpoints.iter().map(PlScalar::to_f64).collect(),
            values: self.values.iter().map(PlScalar::to_f64).collect(),
        }
    }
}

impl PLFunction {
    pub fn pl_eval(&self, x: f64) -> Result<f64> {
        self.eval(&x)
    }
}

pub fn pl_make<T: PlScalar>(breakpoints: Vec<T>, values: Vec<T>, require_decreasing: bool) -> Result<PiecewiseLinear<T>> {
    PiecewiseLinear::new(breakpoints, values, require_decreasing)
}

/// Serialized form `{breakpoints: [...], values: [...]}`; entries may be
/// numbers or exact rational strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlSpec {
    pub breakpoints: Vec<RealLiteral>,
    pub values: Vec<RealLiteral>,
}

impl PlSpec {
    pub fn is_exact(&self) -> bool {
        self.breakpoints.iter().chain(&self.values).all(RealLiteral::is_exact)
    }

    pub fn to_f64(&self, require_decreasing: bool) -> Result<PLFunction> {
        let b = self.breakpoints.iter().map(RealLiteral::to_f64).collect::<std::result::Result<_, _>>()?;
        let v = self.values.iter().map(RealLiteral::to_f64).collect::<std::result::Result<_, _>>()?;
        PiecewiseLinear::new(b, v, require_decreasing)
    }

    pub fn to_rational(&self, require_decreasing: bool) -> Result<RationalPL> {
        let b = self.breakpoints.iter().map(RealLiteral::to_rational).collect::<std::result::Result<_, _>>()?;
        let v = self.values.iter().map(RealLiteral::to_rational).collect::<std::result::Result<_, _>>()?;
        PiecewiseLinear::new(b, v, require_decreasing)
    }
}

impl From<&PLFunction> for PlSpec {
    fn from(f: &PLFunction) -> Self {
        PlSpec {
            breakpoints: f.breakpoints.iter().map(|&x| RealLiteral::Number(x)).collect(),
            values: f.values.iter().map(|&x| RealLiteral::Number(x)).collect(),
        }
    }
}

/// Cone operations: sums, nonnegative scalings and pointwise maxima.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeOp<T> {
    Sum,
    Scale(T),
    PointwiseMax,
}

fn same_point<T: PlScalar>(a: &T, b: &T) -> bool {
    let scale = T::one() + if a.abs() > b.abs() { a.abs() } else { b.abs() };
    (a.clone() - b.clone()).abs() <= T::convexity_slack(&scale)
}

fn check_domains<T: PlScalar>(f: &PiecewiseLinear<T>, g: &PiecewiseLinear<T>) -> Result<()> {
    let (a, b) = f.domain();
    let (c, d) = g.domain();
    if same_point(&a, &c) && same_point(&b, &d) {
        Ok(())
    } else {
        Err(ConvexError::DomainMismatch(a.to_f64(), b.to_f64(), c.to_f64(), d.to_f64()))
    }
}

fn merged_breakpoints<T: PlScalar>(f: &PiecewiseLinear<T>, g: &PiecewiseLinear<T>) -> Vec<T> {
    let mut all: Vec<T> = f.breakpoints.iter().chain(&g.breakpoints).cloned().collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("ordered scalars"));
    let mut out: Vec<T> = Vec::with_capacity(all.len());
    for x in all {
        if out.last().map_or(true, |last| !same_point(last, &x)) {
            out.push(x);
        }
    }
    // keep f's exact endpoints so evaluation never leaves the domain
    let (lo, hi) = f.domain();
    let n = out.len();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// Combines cone elements. The result is revalidated as convex, and as
/// decreasing whenever every operand is decreasing.
pub fn cone_combine<T: PlScalar>(op: &ConeOp<T>, f: &PiecewiseLinear<T>, g: Option<&PiecewiseLinear<T>>) -> Result<PiecewiseLinear<T>> {
    match op {
        ConeOp::Scale(c) => {
            if *c < T::zero() {
                return Err(ConvexError::NegativeScale(c.to_f64()));
            }
            let values = f.values.iter().map(|v| c.clone() * v.clone()).collect();
            PiecewiseLinear::new(f.breakpoints.clone(), values, f.is_decreasing())
        }
        ConeOp::Sum => {
            let g = g.ok_or(ConvexError::MissingOperand)?;
            check_domains(f, g)?;
            let xs = merged_breakpoints(f, g);
            let values = xs.iter().map(|x| Ok(f.eval(x)? + g.eval(x)?)).collect::<Result<Vec<T>>>()?;
            PiecewiseLinear::new(xs, values, f.is_decreasing() && g.is_decreasing())
        }
        ConeOp::PointwiseMax => {
            let g = g.ok_or(ConvexError::MissingOperand)?;
            check_domains(f, g)?;
            let xs = merged_breakpoints(f, g);
            let mut points: Vec<T> = Vec::with_capacity(2 * xs.len());
            for w in xs.windows(2) {
                points.push(w[0].clone());
                let dl = f.eval(&w[0])? - g.eval(&w[0])?;
                let dr = f.eval(&w[1])? - g.eval(&w[1])?;
                if (dl < T::zero() && dr > T::zero()) || (dl > T::zero() && dr < T::zero()) {
                    let t = dl.clone() / (dl - dr);
                    let cross = w[0].clone() + t * (w[1].clone() - w[0].clone());
                    if cross > w[0] && cross < w[1] {
                        points.push(cross);
                    }
                }
            }
            points.push(xs[xs.len() - 1].clone());
            let values = points
                .iter()
                .map(|x| {
                    let (a, b) = (f.eval(x)?, g.eval(x)?);
                    Ok(if a > b { a } else { b })
                })
                .collect::<Result<Vec<T>>>()?;
            PiecewiseLinear::new(points, values, f.is_decreasing() && g.is_decreasing())
        }
    }
}

/// Mass convention of a discrete measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Weights as given (total mass `k^-n N_k` for DH measures).
    Raw,
    /// Total mass one.
    Probability,
}

/// Finitely many atoms with nonnegative weights, kept sorted by atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    normalization: Normalization,
}

#[derive(Deserialize)]
struct MeasureSpec {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    normalization: Normalization,
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = MeasureSpec::deserialize(d)?;
        DiscreteMeasure::new(spec.atoms, spec.weights, spec.normalization).map_err(serde::de::Error::custom)
    }
}

impl DiscreteMeasure {
    /// Builds a measure; `Probability` weights are rescaled to total mass one.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(ConvexError::MeasureLength { atoms: atoms.len(), weights: weights.len() });
        }
        if atoms.is_empty() {
            return Err(ConvexError::Empty);
        }
        for (i, (&a, &w)) in atoms.iter().zip(&weights).enumerate() {
            if !a.is_finite() || !w.is_finite() {
                return Err(ConvexError::NonFinite(i));
            }
            if w < 0.0 {
                return Err(ConvexError::NegativeWeight(i));
            }
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (atoms, mut weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if normalization == Normalization::Probability {
            let mass: f64 = weights.iter().sum();
            if mass > 0.0 {
                weights.iter_mut().for_each(|w| *w /= mass);
            }
        }
        Ok(DiscreteMeasure { atoms, weights, normalization })
    }

    /// Equal-weight probability measure on the given atoms.
    pub fn empirical(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0; n], Normalization::Probability)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Smallest closed interval containing every atom.
    pub fn support(&self) -> (f64, f64) {
        (self.atoms[0], self.atoms[self.atoms.len() - 1])
    }

    pub fn to_probability(&self) -> Self {
        Self::new(self.atoms.clone(), self.weights.clone(), Normalization::Probability)
            .expect("already validated")
    }

    /// `mu((-inf, x]) / mass`.
    pub fn cdf(&self, x: f64) -> f64 {
        let upto = self.atoms.partition_point(|&a| a <= x);
        self.weights[..upto].iter().sum::<f64>() / self.mass()
    }

    /// Kolmogorov distance `sup_x |F(x) - G(x)|` between normalized CDFs.
    pub fn kolmogorov(&self, other: &DiscreteMeasure) -> f64 {
        let mut jumps: Vec<f64> = self.atoms.iter().chain(&other.atoms).cloned().collect();
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        jumps.iter().map(|&x| (self.cdf(x) - other.cdf(x)).abs()).fold(0.0, f64::max)
    }

    /// Kolmogorov distance to a continuous CDF; the supremum is attained at
    /// an atom, approached from the left or the right.
    pub fn kolmogorov_to<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let mass = self.mass();
        let mut below = 0.0;
        let mut worst: f64 = 0.0;
        let mut i = 0;
        while i < self.atoms.len() {
            let x = self.atoms[i];
            let mut w = 0.0;
            while i < self.atoms.len() && self.atoms[i] == x {
                w += self.weights[i];
                i += 1;
            }
            let c = cdf(x);
            worst = worst.max((below / mass - c).abs());
            below += w;
            worst = worst.max((below / mass - c).abs());
        }
        worst
    }
}

/// An `L^p` distance tagged with the mass convention it was computed under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpDistance {
    pub value: f64,
    pub normalization: Normalization,
}

/// `(sum_i w_i |f(x_i) - g(x_i)|^p / mass)^(1/p)`; for raw measures the
/// weights are used as they are. `p = inf` gives the max over charged atoms.
pub fn lp_distance(f: &PLFunction, g: &PLFunction, mu: &DiscreteMeasure, p: f64) -> Result<LpDistance> {
    if p.is_nan() || p < 1.0 {
        return Err(ConvexError::InvalidExponent(p));
    }
    let diffs = mu
        .atoms
        .iter()
        .map(|x| Ok((f.eval(x)? - g.eval(x)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let charged = diffs.iter().zip(&mu.weights).filter(|(_, &w)| w > 0.0);
    let max = charged.clone().fold(0.0_f64, |m, (d, _)| m.max(*d));
    let value = if max == 0.0 {
        0.0
    } else if p.is_infinite() {
        max
    } else {
        let sum: f64 = charged.map(|(d, w)| w * (d / max).powf(p)).sum();
        let denom = match mu.normalization {
            Normalization::Probability => mu.mass(),
            Normalization::Raw => 1.0,
        };
        max * (sum / denom).powf(1.0 / p)
    };
    Ok(LpDistance { value, normalization: mu.normalization })
}

/// `L^p` distance against the uniform probability measure on `[lo, hi]`,
/// integrated piecewise between breakpoints.
pub fn lp_distance_uniform(f: &PLFunction, g: &PLFunction, lo: f64, hi: f64, p: f64, control: &QuadratureControl) -> Result<f64> {
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(ConvexError::InvalidExponent(p));
    }
    let mut cuts: Vec<f64> = f.breakpoints.iter().chain(&g.breakpoints).cloned().filter(|&x| x > lo && x < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    // validate the domain once so the integrand cannot fail
    for x in [lo, hi] {
        f.eval(&x)?;
        g.eval(&x)?;
    }
    let integrand = |x: f64| {
        let d = f.eval(&x).unwrap_or(f64::NAN) - g.eval(&x).unwrap_or(f64::NAN);
        d.abs().powf(p)
    };
    let integral = integrate_pieces(integrand, &cuts, control)?;
    Ok((integral / (hi - lo)).powf(1.0 / p))
}
