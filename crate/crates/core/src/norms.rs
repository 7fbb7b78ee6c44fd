//! Hermitian norms on a finite-dimensional complex vector space.
//!
//! A norm is stored as its Gram matrix in a fixed ambient basis together with
//! the lower Cholesky factor. Everything comparing two norms goes through the
//! pencil `gram' x = mu gram x`, reduced by the Cholesky factor of `gram` to a
//! standard Hermitian eigenproblem. Its eigenvalues give the successive minima
//! `lambda_i = log(||v_i||' / ||v_i||) = 0.5 log mu_i` and its eigenvectors a
//! basis orthogonal for both norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::tolerances;
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("zero-dimensional space")]
    Empty,
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("gram matrix is not Hermitian at ({row}, {col})")]
    NotHermitian { row: usize, col: usize },
    #[error("gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("exponent p = {0} is not in [1, inf]")]
    InvalidExponent(f64),
    #[error("geodesic parameter t = {0} is outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("basis is not orthogonal for the norm (off-diagonal ratio {ratio:e} at ({row}, {col}))")]
    NotInApartment { row: usize, col: usize, ratio: f64 },
    #[error("basis is singular")]
    SingularBasis,
}

pub type Result<T> = std::result::Result<T, NormError>;

/// Exponent `p` of a `d_p` distance. `f64::INFINITY` selects `d_inf`.
pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        Err(NormError::InvalidExponent(p))
    } else {
        Ok(())
    }
}

/// `(N^-1 sum |x_i|^p)^(1/p)`, or `max |x_i|` when `p` is infinite.
///
/// Values are scaled by their maximum before raising to `p`.
pub fn power_mean(values: &[f64], p: f64) -> f64 {
    let max = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if values.is_empty() || max == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return max;
    }
    let mean = values.iter().map(|x| (x.abs() / max).powf(p)).sum::<f64>() / values.len() as f64;
    max * mean.powf(1.0 / p)
}

fn check_square(m: &CMatrix) -> Result<usize> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(NormError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(NormError::Empty);
    }
    for row in 0..rows {
        for col in 0..cols {
            let z = m[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(NormError::NonFinite { row, col });
            }
        }
    }
    Ok(rows)
}

/// Lower Cholesky factor of a Hermitian matrix; `None` when a pivot is not positive.
fn cholesky_lower(g: &CMatrix) -> Option<CMatrix> {
    let n = g.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = g[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        let d = pivot.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// A basis `v = (v_i)` of the ambient space, stored column-wise, together
/// with its inverse. The set of Hermitian norms admitting this basis as an
/// orthogonal basis is the apartment of `v`.
#[derive(Debug, Clone)]
pub struct Apartment {
    basis: CMatrix,
    inverse: CMatrix,
    condition: f64,
}

impl Apartment {
    /// Conditioning is measured on the column-normalized basis, since the
    /// apartment does not depend on the lengths of the basis vectors.
    pub fn new(basis: CMatrix) -> Result<Self> {
        check_square(&basis)?;
        let lengths: Vec<f64> = basis.column_iter().map(|c| c.norm()).collect();
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(NormError::SingularBasis);
        }
        let mut unit = basis.clone();
        for (j, &l) in lengths.iter().enumerate() {
            unit.column_mut(j).unscale_mut(l);
        }
        let singular = unit.clone().svd(false, false).singular_values;
        let smax = singular.iter().cloned().fold(0.0, f64::max);
        let smin = singular.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin <= 0.0 || !(smax / smin).is_finite() {
            return Err(NormError::SingularBasis);
        }
        let mut inverse = unit.try_inverse().ok_or(NormError::SingularBasis)?;
        for (i, &l) in lengths.iter().enumerate() {
            inverse.row_mut(i).unscale_mut(l);
        }
        Ok(Apartment { basis, inverse, condition: smax / smin })
    }

    pub fn standard(dim: usize) -> Self {
        Apartment {
            basis: CMatrix::identity(dim, dim),
            inverse: CMatrix::identity(dim, dim),
            condition: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.inverse
    }

    pub fn column(&self, i: usize) -> CVector {
        self.basis.column(i).into_owned()
    }

    /// Coordinates of `w` in this basis.
    pub fn coordinates(&self, w: &CVector) -> CVector {
        &self.inverse * w
    }

    /// Ratio of extreme singular values of the basis matrix.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition > tolerances::ILL_CONDITIONED
    }
}

/// A Hermitian norm `||w|| = sqrt(w* G w)` for a positive-definite Gram matrix `G`.
#[derive(Debug, Clone)]
pub struct HermitianNorm {
    gram: CMatrix,
    chol: CMatrix,
}

impl HermitianNorm {
    /// Validates conjugate symmetry and positive definiteness.
    pub fn from_gram(gram: CMatrix) -> Result<Self> {
        let n = check_square(&gram)?;
        for row in 0..n {
            for col in row..n {
                let a = gram[(row, col)];
                let b = gram[(col, row)].conj();
                let scale = a.norm().max(b.norm());
                let diag_scale = (gram[(row, row)].norm() * gram[(col, col)].norm()).sqrt();
                if (a - b).norm() > tolerances::SYMMETRY * scale.max(diag_scale * f64::EPSILON) {
                    return Err(NormError::NotHermitian { row, col });
                }
            }
        }
        let gram = hermitian_part(&gram);
        let chol = cholesky_lower(&gram).ok_or(NormError::NotPositiveDefinite)?;
        Ok(HermitianNorm { gram, chol })
    }

    pub fn euclidean(dim: usize) -> Self {
        HermitianNorm { gram: CMatrix::identity(dim, dim), chol: CMatrix::identity(dim, dim) }
    }

    /// Norm with a diagonal Gram matrix in the ambient basis.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::from_gram(CMatrix::from_diagonal(&d))
    }

    /// The norm admitting the columns of `apartment` as an orthogonal basis
    /// with `||v_i||^2 = sq_norms[i]`.
    pub fn with_orthogonal_basis(apartment: &Apartment, sq_norms: &[f64]) -> Result<Self> {
        if sq_norms.len() != apartment.dim() {
            return Err(NormError::DimensionMismatch { left: apartment.dim(), right: sq_norms.len() });
        }
        let inv = apartment.inverse();
        let mut scaled = inv.clone();
        for (i, &d) in sq_norms.iter().enumerate() {
            scaled.row_mut(i).scale_mut(d);
        }
        Self::from_gram(inv.adjoint() * scaled)
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Lower-triangular `L` with `gram = L L*`.
    pub fn cholesky_factor(&self) -> &CMatrix {
        &self.chol
    }

    pub fn inner(&self, v: &CVector, w: &CVector) -> C64 {
        (v.adjoint() * &self.gram * w)[(0, 0)]
    }

    pub fn norm(&self, w: &CVector) -> Result<f64> {
        if w.len() != self.dim() {
            return Err(NormError::DimensionMismatch { left: self.dim(), right: w.len() });
        }
        // ||L* w|| avoids cancellation in w* G w
        Ok((self.chol.adjoint() * w).norm())
    }

    /// `e^{-t} ||.||`, i.e. the Gram matrix scaled by `e^{-2t}`.
    pub fn scaled(&self, t: f64) -> Self {
        let s = (-t).exp();
        HermitianNorm { gram: self.gram.map(|z| z * (s * s)), chol: self.chol.map(|z| z * s) }
    }

    /// Gram matrix of the columns of `basis` under this norm.
    pub fn basis_gram(&self, basis: &CMatrix) -> CMatrix {
        let half = self.chol.adjoint() * basis;
        half.adjoint() * half
    }

    /// Whether every off-diagonal entry satisfies `|g_ij| <= tol * sqrt(g_ii g_jj)`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        off_diagonal_violation(&self.gram, tol).is_none()
    }

    /// Diagonal of the Gram matrix (squared norms of the ambient basis vectors).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.gram[(i, i)].re).collect()
    }
}

pub fn hermitian_from_gram(gram: CMatrix) -> Result<HermitianNorm> {
    HermitianNorm::from_gram(gram)
}

/// First off-diagonal entry of a Hermitian matrix exceeding `tol` relative
/// to the geometric mean of its diagonal entries.
pub(crate) fn off_diagonal_violation(m: &CMatrix, tol: f64) -> Option<(usize, usize, f64)> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = (m[(i, i)].norm() * m[(j, j)].norm()).sqrt();
            let ratio = if scale > 0.0 { m[(i, j)].norm() / scale } else { f64::INFINITY };
            if ratio > tol {
                return Some((i, j, ratio));
            }
        }
    }
    None
}

/// Sorted logarithmic relative eigenvalues `lambda_1 >= ... >= lambda_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeSpectrum {
    values: Vec<f64>,
}

impl RelativeSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Generalized eigen-decomposition of the pencil `(b.gram, a.gram)`.
struct Pencil {
    /// Eigenvalues `mu_i`, descending.
    mu: Vec<f64>,
    /// Unitary `W` whose columns are eigenvectors of `L^-1 G' L^-*`.
    white: CMatrix,
}

impl Pencil {
    fn new(a: &HermitianNorm, b: &HermitianNorm) -> Result<Self> {
        same_dim(a, b)?;
        let l = a.cholesky_factor();
        let half = l.solve_lower_triangular(b.gram()).ok_or(NormError::NotPositiveDefinite)?;
        let reduced = l
            .solve_lower_triangular(&half.adjoint())
            .ok_or(NormError::NotPositiveDefinite)?;
        let reduced = hermitian_part(&reduced);
        let eig = SymmetricEigen::new(reduced);

        let n = a.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mu: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(f64::MIN_POSITIVE)).collect();
        let mut white = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            white.set_column(dst, &eig.eigenvectors.column(src));
        }

        // Re-orthonormalize inside clusters of (numerically) equal eigenvalues.
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n
                && (mu[end - 1] - mu[end]) <= tolerances::EIGEN_CLUSTER * mu[end - 1].abs()
            {
                end += 1;
            }
            if end - start > 1 {
                modified_gram_schmidt(&mut white, start, end);
            }
            start = end;
        }
        Ok(Pencil { mu, white })
    }

    /// Gram matrix of the norm diagonal in the joint basis with squared norms
    /// `d_i` relative to `a`: `L W diag(d) W* L*`.
    fn gram_with(&self, a: &HermitianNorm, d: &[f64]) -> Result<HermitianNorm> {
        let lw = a.cholesky_factor() * &self.white;
        let mut scaled = lw.clone();
        for (i, &di) in d.iter().enumerate() {
            scaled.column_mut(i).scale_mut(di);
        }
        HermitianNorm::from_gram(scaled * lw.adjoint())
    }

    /// Joint orthogonal basis `X = L^-* W`, orthonormal for `a`.
    fn basis(&self, a: &HermitianNorm) -> Result<CMatrix> {
        a.cholesky_factor()
            .adjoint()
            .solve_upper_triangular(&self.white)
            .ok_or(NormError::NotPositiveDefinite)
    }
}

/// Euclidean modified Gram–Schmidt on columns `start..end`.
fn modified_gram_schmidt(m: &mut CMatrix, start: usize, end: usize) {
    for j in start..end {
        for i in start..j {
            let qi = m.column(i).into_owned();
            let proj = qi.dotc(&m.column(j));
            let mut cj = m.column_mut(j);
            cj -= qi * proj;
        }
        let nrm = m.column(j).norm();
        if nrm > 0.0 {
            m.column_mut(j).unscale_mut(nrm);
        }
    }
}

fn same_dim(a: &HermitianNorm, b: &HermitianNorm) -> Result<()> {
    if a.dim() != b.dim() {
        Err(NormError::DimensionMismatch { left: a.dim(), right: b.dim() })
    } else {
        Ok(())
    }
}

/// Successive minima `lambda_i(N, N')`, i.e. `log(||v_i||' / ||v_i||)` in a
/// common orthogonal basis, sorted descending.
pub fn successive_minima(a: &HermitianNorm, b: &HermitianNorm) -> Result<RelativeSpectrum> {
    let pencil = Pencil::new(a, b)?;
    Ok(RelativeSpectrum { values: pencil.mu.iter().map(|m| 0.5 * m.ln()).collect() })
}

pub fn dp_distance(a: &HermitianNorm, b: &HermitianNorm, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let spectrum = successive_minima(a, b)?;
    Ok(power_mean(spectrum.values(), p))
}

/// `N^-1 sum_i lambda_i(N, N')`.
pub fn relative_volume(a: &HermitianNorm, b: &HermitianNorm) -> Result<f64> {
    Ok(successive_minima(a, b)?.mean())
}

/// A basis orthogonal for both norms (orthonormal for `a`), ordered by
/// descending successive minimum.
pub fn common_orthogonal_basis(a: &HermitianNorm, b: &HermitianNorm) -> Result<Apartment> {
    let pencil = Pencil::new(a, b)?;
    Apartment::new(pencil.basis(a)?)
}

/// Point at time `t` on the geodesic from `a` to `b`:
/// `||v_i||_t = ||v_i||^{1-t} ||v_i||'^t` in a common orthogonal basis.
pub fn geodesic(a: &HermitianNorm, b: &HermitianNorm, t: f64) -> Result<HermitianNorm> {
    if !(0.0..=1.0).contains(&t) {
        return Err(NormError::ParameterOutOfRange(t));
    }
    let pencil = Pencil::new(a, b)?;
    let d: Vec<f64> = pencil.mu.iter().map(|m| m.powf(t)).collect();
    pencil.gram_with(a, &d)
}

/// `max(||v_i||, ||v_i||')` on a common orthogonal basis.
pub fn max_norm(a: &HermitianNorm, b: &HermitianNorm) -> Result<HermitianNorm> {
    let pencil = Pencil::new(a, b)?;
    let d: Vec<f64> = pencil.mu.iter().map(|m| m.max(1.0)).collect();
    pencil.gram_with(a, &d)
}

/// `iota(N, a)`: the norm in the apartment with `||v_i|| e^{-a_i}` on each basis vector.
pub fn rescale_in_apartment(norm: &HermitianNorm, apartment: &Apartment, a: &[f64]) -> Result<HermitianNorm> {
    if norm.dim() != apartment.dim() {
        return Err(NormError::DimensionMismatch { left: norm.dim(), right: apartment.dim() });
    }
    if a.len() != norm.dim() {
        return Err(NormError::DimensionMismatch { left: norm.dim(), right: a.len() });
    }
    let g = norm.basis_gram(apartment.basis());
    if let Some((row, col, ratio)) = off_diagonal_violation(&g, tolerances::JOINT_DIAGONAL) {
        return Err(NormError::NotInApartment { row, col, ratio });
    }
    let d: Vec<f64> = (0..norm.dim()).map(|i| g[(i, i)].re * (-2.0 * a[i]).exp()).collect();
    HermitianNorm::with_orthogonal_basis(apartment, &d)
}

/// Real diagonal matrix helper used by tests and callers building fixtures.
pub fn real_diagonal(values: &[f64]) -> CMatrix {
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
    d.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn gram2(a: f64, b: f64, cc: f64, d: f64) -> HermitianNorm {
        HermitianNorm::from_gram(CMatrix::from_row_slice(2, 2, &[c(a), c(b), c(cc), c(d)])).unwrap()
    }

    #[test]
    fn scaled_permutation_basis_is_well_conditioned() {
        let mut b = CMatrix::zeros(3, 3);
        b[(1, 0)] = c(1e-30);
        b[(2, 1)] = c(1.0);
        b[(0, 2)] = c(1e30);
        let ap = Apartment::new(b.clone()).unwrap();
        assert_relative_eq!(ap.condition_number(), 1.0, epsilon = 1e-12);
        let id = ap.inverse() * &b;
        assert!((id - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    fn vec2(x: f64, y: f64) -> CVector {
        CVector::from_vec(vec![c(x), c(y)])
    }

    #[test]
    fn evaluation() {
        let e = HermitianNorm::euclidean(2);
        assert_relative_eq!(e.norm(&vec2(1.0, 0.0)).unwrap(), 1.0);
        let four = HermitianNorm::from_diagonal(&[4.0]).unwrap();
        let v = CVector::from_vec(vec![C64::new(0.0, -3.0)]);
        assert_relative_eq!(four.norm(&v).unwrap(), 6.0, epsilon = 1e-14);
        let g = gram2(2.0, 1.0, 1.0, 2.0);
        assert_relative_eq!(g.norm(&vec2(1.0, -1.0)).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_grams() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.4), c(1.0)]);
        assert!(matches!(HermitianNorm::from_gram(bad), Err(NormError::NotHermitian { .. })));
        let indefinite = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(1.0)]);
        assert_eq!(HermitianNorm::from_gram(indefinite).unwrap_err(), NormError::NotPositiveDefinite);
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(HermitianNorm::from_gram(rect), Err(NormError::NotSquare { .. })));
        let imag_diag = CMatrix::from_row_slice(1, 1, &[C64::new(1.0, 0.1)]);
        assert!(HermitianNorm::from_gram(imag_diag).is_err());
    }

    #[test]
    fn minima_examples() {
        let e = HermitianNorm::euclidean(2);
        let same = successive_minima(&e, &e).unwrap();
        assert!(same.values().iter().all(|x| x.abs() < 1e-15));

        let (a, b) = (0.7, -0.3);
        let diag = HermitianNorm::from_diagonal(&[(2.0 * b as f64).exp(), (2.0 * a as f64).exp()]).unwrap();
        let s = successive_minima(&e, &diag).unwrap();
        assert_relative_eq!(s.values()[0], a, epsilon = 1e-14);
        assert_relative_eq!(s.values()[1], b, epsilon = 1e-14);

        let g = gram2(2.0, 1.0, 1.0, 2.0);
        let s = successive_minima(&e, &g).unwrap();
        assert_relative_eq!(s.values()[0], 0.5 * 3f64.ln(), epsilon = 1e-14);
        assert!(s.values()[1].abs() < 1e-14);
    }

    #[test]
    fn distance_examples() {
        let e = HermitianNorm::euclidean(2);
        let t = 0.37;
        let scaled = e.scaled(-t);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_relative_eq!(dp_distance(&e, &scaled, p).unwrap(), t, max_relative = 1e-12);
        }
        let d = HermitianNorm::from_diagonal(&[1f64.exp().powi(2), (-2f64).exp()]).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            assert_relative_eq!(dp_distance(&e, &d, p).unwrap(), 1.0, max_relative = 1e-12);
        }
        let g = gram2(2.0, 1.0, 1.0, 2.0);
        assert_relative_eq!(dp_distance(&e, &g, 1.0).unwrap(), 0.274_653_072_167_027, max_relative = 1e-12);
        assert_relative_eq!(
            dp_distance(&e, &g, f64::INFINITY).unwrap(),
            0.549_306_144_334_054_8,
            max_relative = 1e-12
        );
        assert_eq!(dp_distance(&e, &g, 0.5).unwrap_err(), NormError::InvalidExponent(0.5));
        assert!(matches!(
            dp_distance(&e, &HermitianNorm::euclidean(3), 1.0),
            Err(NormError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn joint_basis_examples() {
        let e = HermitianNorm::euclidean(2);
        let g = gram2(2.0, 1.0, 1.0, 2.0);
        let a = common_orthogonal_basis(&e, &g).unwrap();
        // first column pairs with mu = 3: direction (1, 1)/sqrt 2 up to phase
        let v0 = a.column(0);
        assert_relative_eq!(v0[0].norm(), 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!((v0[0] - v0[1]).norm(), 0.0, epsilon = 1e-12);
        let v1 = a.column(1);
        assert_relative_eq!((v1[0] + v1[1]).norm(), 0.0, epsilon = 1e-12);
        assert!(off_diagonal_violation(&g.basis_gram(a.basis()), 1e-10).is_none());

        let d = HermitianNorm::from_diagonal(&[3.0, 5.0]).unwrap();
        let b = common_orthogonal_basis(&HermitianNorm::from_diagonal(&[1.0, 2.0]).unwrap(), &d).unwrap();
        for j in 0..2 {
            let col = b.column(j);
            let nonzero = col.iter().filter(|z| z.norm() > 1e-14).count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn degenerate_pencil_is_jointly_orthogonal() {
        let e = HermitianNorm::euclidean(3);
        let a = common_orthogonal_basis(&e, &e.scaled(0.4)).unwrap();
        assert!(off_diagonal_violation(&e.basis_gram(a.basis()), 1e-12).is_none());
    }

    #[test]
    fn geodesic_examples() {
        let e = HermitianNorm::euclidean(2);
        let g = gram2(2.0, 1.0, 1.0, 2.0);
        let g0 = geodesic(&e, &g, 0.0).unwrap();
        let g1 = geodesic(&e, &g, 1.0).unwrap();
        assert!((g0.gram() - e.gram()).norm() < 1e-12);
        assert!((g1.gram() - g.gram()).norm() < 1e-12);

        let half = geodesic(&e, &e.scaled(2.0), 0.5).unwrap();
        assert!((half.gram() - e.scaled(1.0).gram()).norm() < 1e-12);

        let d = HermitianNorm::from_diagonal(&[4f64.exp(), 1.0]).unwrap();
        let mid = geodesic(&e, &d, 0.5).unwrap();
        assert!((mid.gram() - real_diagonal(&[2f64.exp(), 1.0])).norm() < 1e-12);
        assert_eq!(geodesic(&e, &d, 1.5).unwrap_err(), NormError::ParameterOutOfRange(1.5));
    }

    #[test]
    fn volume_examples() {
        let e = HermitianNorm::euclidean(2);
        assert!(relative_volume(&e, &e).unwrap().abs() < 1e-15);
        let t = 0.8;
        assert_relative_eq!(relative_volume(&e, &e.scaled(-t)).unwrap(), t, max_relative = 1e-12);
        let g = gram2(2.0, 1.0, 1.0, 2.0);
        assert_relative_eq!(relative_volume(&e, &g).unwrap(), 0.25 * 3f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn max_examples() {
        let e = HermitianNorm::euclidean(2);
        assert!((max_norm(&e, &e).unwrap().gram() - e.gram()).norm() < 1e-12);
        let d = HermitianNorm::from_diagonal(&[2f64.exp(), (-2f64).exp()]).unwrap();
        let m = max_norm(&e, &d).unwrap();
        assert!((m.gram() - real_diagonal(&[2f64.exp(), 1.0])).norm() < 1e-12);

        let g = gram2(2.0, 1.0, 1.0, 2.0);
        let m = max_norm(&e, &g).unwrap();
        let joint = common_orthogonal_basis(&e, &g).unwrap();
        let jg = m.basis_gram(joint.basis());
        assert_relative_eq!(jg[(0, 0)].re.sqrt(), 3f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(jg[(1, 1)].re.sqrt(), 1.0, max_relative = 1e-12);
        assert!(jg[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn rescale_examples() {
        let e = HermitianNorm::euclidean(2);
        let std = Apartment::standard(2);
        let same = rescale_in_apartment(&e, &std, &[0.0, 0.0]).unwrap();
        assert!((same.gram() - e.gram()).norm() < 1e-15);
        let uniform = rescale_in_apartment(&e, &std, &[0.3, 0.3]).unwrap();
        assert!((uniform.gram() - e.scaled(0.3).gram()).norm() < 1e-15);
        let r = rescale_in_apartment(&e, &std, &[1.0, -1.0]).unwrap();
        assert!((r.gram() - real_diagonal(&[(-2f64).exp(), 2f64.exp()])).norm() < 1e-14);

        let g = gram2(2.0, 1.0, 1.0, 2.0);
        assert!(matches!(
            rescale_in_apartment(&g, &std, &[1.0, 0.0]),
            Err(NormError::NotInApartment { .. })
        ));
    }

    #[test]
    fn singular_apartment_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert_eq!(Apartment::new(m).unwrap_err(), NormError::SingularBasis);
    }

    #[test]
    fn power_mean_edges() {
        assert_eq!(power_mean(&[], 2.0), 0.0);
        assert_eq!(power_mean(&[0.0, 0.0], 1.0), 0.0);
        assert_relative_eq!(power_mean(&[3.0, -4.0], f64::INFINITY), 4.0);
        assert_relative_eq!(power_mean(&[3.0, -4.0], 2.0), 12.5f64.sqrt(), max_relative = 1e-15);
    }
}
