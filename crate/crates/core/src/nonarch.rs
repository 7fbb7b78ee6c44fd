//! Non-Archimedean norms on a finite-dimensional complex space, relative to
//! the trivial absolute value.
//!
//! Every such norm admits an orthogonal basis `(v_i)`; with `a_i = -log ||v_i||`
//! the norm is `||sum c_i v_i|| = max_{c_i != 0} e^{-a_i}`. The filtration it
//! induces is `F^lambda = span{v_i : a_i >= lambda}` and the `a_i` are its
//! jumping numbers.

use num::{BigRational, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::literal::{LiteralError, RealLiteral};
use crate::norms::{self, Apartment, HermitianNorm, NormError};
use crate::tolerances;
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NaError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("{values} values for a space of dimension {dim}")]
    ValueCount { dim: usize, values: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("vector of length {got} for a space of dimension {dim}")]
    DimensionMismatch { dim: usize, got: usize },
    #[error("no decomposition schemes supplied")]
    EmptySchemeSet,
    #[error("decomposition pieces do not sum to the vector (residual {0:e})")]
    BadDecomposition(f64),
    #[error("exact mode needs the standard basis")]
    InexactBasis,
    #[error(transparent)]
    Literal(#[from] LiteralError),
}

pub type Result<T> = std::result::Result<T, NaError>;

/// A non-Archimedean norm given by an orthogonal basis and log-values `a_i`,
/// with `||v_i|| = e^{-a_i}`.
#[derive(Debug, Clone)]
pub struct NANorm {
    apartment: Apartment,
    values: Vec<f64>,
}

impl NANorm {
    pub fn from_basis(basis: CMatrix, values: Vec<f64>) -> Result<Self> {
        Self::from_apartment(Apartment::new(basis)?, values)
    }

    /// The gauge norm of an apartment: `max_{c_i != 0} e^{-a_i}`.
    pub fn from_apartment(apartment: Apartment, values: Vec<f64>) -> Result<Self> {
        if values.len() != apartment.dim() {
            return Err(NaError::ValueCount { dim: apartment.dim(), values: values.len() });
        }
        if let Some(i) = values.iter().position(|a| !a.is_finite()) {
            return Err(NaError::NonFinite(i));
        }
        Ok(NANorm { apartment, values })
    }

    /// Diagonal on the standard basis.
    pub fn standard(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::from_apartment(Apartment::standard(n), values)
    }

    /// `||v|| = 1` for every nonzero `v`.
    pub fn trivial(dim: usize) -> Self {
        NANorm { apartment: Apartment::standard(dim), values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn apartment(&self) -> &Apartment {
        &self.apartment
    }

    /// Log-values `a_i` in basis order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same basis, new log-values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_apartment(self.apartment.clone(), values)
    }

    fn check_len(&self, w: &CVector) -> Result<()> {
        if w.len() != self.dim() {
            Err(NaError::DimensionMismatch { dim: self.dim(), got: w.len() })
        } else {
            Ok(())
        }
    }

    /// `min { a_i : c_i != 0 }` for the coordinates `c` of `w`; `+inf` for `w = 0`.
    pub fn log_value(&self, w: &CVector) -> Result<f64> {
        self.check_len(w)?;
        let c = self.apartment.coordinates(w);
        let cmax = c.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if cmax == 0.0 {
            return Ok(f64::INFINITY);
        }
        let cutoff = tolerances::NA_ZERO * cmax;
        Ok(c.iter()
            .zip(&self.values)
            .filter(|(z, _)| z.norm() > cutoff)
            .map(|(_, &a)| a)
            .fold(f64::INFINITY, f64::min))
    }

    pub fn eval(&self, w: &CVector) -> Result<f64> {
        Ok((-self.log_value(w)?).exp())
    }

    /// The multiset `{a_i}` sorted descending.
    pub fn jumping_numbers(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// `dim F^lambda = #{i : a_i >= lambda}`.
    pub fn filtration_dim(&self, lambda: f64) -> usize {
        self.values.iter().filter(|&&a| a >= lambda).count()
    }
}

pub fn na_from_basis(basis: CMatrix, values: Vec<f64>) -> Result<NANorm> {
    NANorm::from_basis(basis, values)
}

pub fn na_eval(norm: &NANorm, w: &CVector) -> Result<f64> {
    norm.eval(w)
}

pub fn jumping_numbers(norm: &NANorm) -> Vec<f64> {
    norm.jumping_numbers()
}

pub fn gauge(apartment: &Apartment, a: &[f64]) -> Result<NANorm> {
    NANorm::from_apartment(apartment.clone(), a.to_vec())
}

/// A basis orthogonal for both the Hermitian norm and the filtration.
///
/// The filtration basis is ordered by descending `a_i` and orthonormalized
/// under `norm` by modified Gram–Schmidt. Each partial span is then a piece
/// of the filtration flag, so every output vector keeps the value of the
/// input vector it was built from.
pub fn adapt_joint_basis(norm: &HermitianNorm, filtration: &NANorm) -> Result<Apartment> {
    let n = norm.dim();
    if filtration.dim() != n {
        return Err(NaError::DimensionMismatch { dim: n, got: filtration.dim() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| filtration.values[j].total_cmp(&filtration.values[i]));
    let source = filtration.apartment.basis();
    let mut out = CMatrix::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        let mut v = source.column(src).into_owned();
        for i in 0..j {
            let b = out.column(i).into_owned();
            let proj = norm.inner(&b, &v);
            v -= b * proj;
        }
        let len = norm.norm(&v)?;
        out.set_column(j, &(v / C64::new(len, 0.0)));
    }
    Ok(Apartment::new(out)?)
}

/// The Hermitian envelope `iota^1(N, F)`: `N` rescaled in a jointly orthogonal
/// basis `(b_i)` by `a'_i = -log ||b_i||_F`. The values `a'` are recomputed
/// from the joint basis, never taken from the filtration's own basis.
pub fn envelope_hermitian(norm: &HermitianNorm, filtration: &NANorm) -> Result<HermitianNorm> {
    let joint = adapt_joint_basis(norm, filtration)?;
    let a = (0..joint.dim())
        .map(|i| filtration.log_value(&joint.column(i)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(norms::rescale_in_apartment(norm, &joint, &a)?)
}

/// A way of writing a vector as a finite sum of pieces.
#[derive(Debug, Clone)]
pub enum Decomposition {
    /// `w` itself.
    OneTerm,
    /// `w = sum_i c_i v_i` along the filtration's basis.
    AlongBasis,
    /// Caller-supplied pieces, checked to sum to `w`.
    Explicit(Vec<CVector>),
}

pub fn default_schemes() -> Vec<Decomposition> {
    vec![Decomposition::OneTerm, Decomposition::AlongBasis]
}

/// Upper bound on the envelope `iota^1(norm, F)(w)` by the minimum of
/// `sum_i ||w_i|| ||w_i||_F` over the supplied decompositions.
pub fn envelope_upper_bound<F>(norm_eval: F, filtration: &NANorm, schemes: &[Decomposition], w: &CVector) -> Result<f64>
where
    F: Fn(&CVector) -> f64,
{
    filtration.check_len(w)?;
    if schemes.is_empty() {
        return Err(NaError::EmptySchemeSet);
    }
    let cost = |pieces: &[CVector]| -> Result<f64> {
        pieces.iter().try_fold(0.0, |acc, p| Ok(acc + norm_eval(p) * filtration.eval(p)?))
    };
    let mut best = f64::INFINITY;
    for scheme in schemes {
        let value = match scheme {
            Decomposition::OneTerm => cost(std::slice::from_ref(w))?,
            Decomposition::AlongBasis => {
                let c = filtration.apartment.coordinates(w);
                let pieces: Vec<CVector> = (0..filtration.dim())
                    .filter(|&i| c[i] != C64::zero())
                    .map(|i| filtration.apartment.column(i) * c[i])
                    .collect();
                cost(&pieces)?
            }
            Decomposition::Explicit(pieces) => {
                let sum = pieces.iter().fold(CVector::zeros(w.len()), |acc, p| acc + p);
                let residual = (&sum - w).norm();
                if residual > 1e-12 * (1.0 + w.norm()) {
                    return Err(NaError::BadDecomposition(residual));
                }
                cost(pieces)?
            }
        };
        best = best.min(value);
    }
    Ok(best)
}

/// Exact non-Archimedean norm on the standard basis with rational log-values.
///
/// Evaluation works on exact coefficient vectors, so ultrametric and
/// submultiplicativity checks compare log-values without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalNANorm {
    values: Vec<BigRational>,
}

impl RationalNANorm {
    pub fn new(values: Vec<BigRational>) -> Self {
        RationalNANorm { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    /// `min { a_i : c_i != 0 }`, or `None` for the zero vector.
    pub fn log_value<T: Zero>(&self, coeffs: &[T]) -> Result<Option<BigRational>> {
        if coeffs.len() != self.dim() {
            return Err(NaError::DimensionMismatch { dim: self.dim(), got: coeffs.len() });
        }
        Ok(coeffs
            .iter()
            .zip(&self.values)
            .filter(|(c, _)| !c.is_zero())
            .map(|(_, a)| a)
            .min()
            .cloned())
    }

    pub fn jumping_numbers(&self) -> Vec<BigRational> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.cmp(a));
        v
    }

    pub fn to_float(&self) -> NANorm {
        let values = self.values.iter().map(|a| num::ToPrimitive::to_f64(a).unwrap_or(f64::NAN)).collect();
        NANorm::standard(values).expect("finite rational values")
    }
}

/// Filtration fixture: `{basis?: [[[re, im], ...], ...], values: [...]}` with
/// basis vectors listed as columns; a missing basis means the standard one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<[f64; 2]>>>,
    pub values: Vec<RealLiteral>,
}

impl FiltrationSpec {
    /// Weights on a distinguished (standard) basis.
    pub fn from_weights(weights: &[f64]) -> Self {
        FiltrationSpec { basis: None, values: weights.iter().map(|&w| RealLiteral::Number(w)).collect() }
    }

    pub fn to_norm(&self) -> Result<NANorm> {
        let values = self.values.iter().map(RealLiteral::to_f64).collect::<std::result::Result<Vec<_>, _>>()?;
        match &self.basis {
            None => NANorm::standard(values),
            Some(cols) => {
                let n = cols.len();
                if let Some(bad) = cols.iter().find(|c| c.len() != n) {
                    return Err(NaError::DimensionMismatch { dim: n, got: bad.len() });
                }
                let m = CMatrix::from_fn(n, n, |r, c| C64::new(cols[c][r][0], cols[c][r][1]));
                NANorm::from_basis(m, values)
            }
        }
    }

    pub fn to_rational(&self) -> Result<RationalNANorm> {
        if self.basis.is_some() {
            return Err(NaError::InexactBasis);
        }
        let values = self.values.iter().map(RealLiteral::to_rational).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(RationalNANorm::new(values))
    }
}
