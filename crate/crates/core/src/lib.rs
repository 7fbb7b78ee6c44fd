//! Metric geometry of norms on graded section rings.
//!
//! The crate is organised bottom-up:
//!
//! - [`norms`]: Hermitian norms on a finite-dimensional complex space, their
//!   successive minima, `d_p` distances, geodesics, relative volume, the max
//!   operator and apartment rescaling.
//! - [`nonarch`]: non-Archimedean (ultrametric) norms given by a basis and
//!   log-values, jumping numbers, joint orthogonal bases and envelopes.
//! - [`convex`]: piecewise-linear convex decreasing functions and discrete
//!   measures on the line, with `L^p` distances between them.
//! - [`graded`]: sequences of norms indexed by the degree `k`, Duistermaat–Heckman
//!   measures, the convex modification of filtrations and asymptotic distances.
//! - [`model_p1`]: the torus-invariant model `(P^1, O(1))` with `L^2` Gram
//!   matrices, sup-norms, Fubini–Study weights and standard filtrations.
//!
//! [`quadrature`] holds the adaptive Gauss–Kronrod integrator shared by the
//! model and the convex module.

pub mod convex;
pub mod graded;
pub mod literal;
pub mod model_p1;
pub mod nonarch;
pub mod norms;
pub mod quadrature;

pub use nalgebra::Complex;

/// Double precision complex scalar used by every matrix in the crate.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

pub mod tolerances {
    //! Numerical tolerances shared across modules.

    /// Entrywise relative tolerance for conjugate symmetry of a Gram matrix.
    pub const SYMMETRY: f64 = 1e-12;
    /// Relative tolerance for off-diagonal Gram entries of an orthogonal basis.
    pub const JOINT_DIAGONAL: f64 = 1e-10;
    /// Relative tolerance for distance assertions.
    pub const DISTANCE: f64 = 1e-9;
    /// Relative eigenvalue gap below which generalized eigenvectors are
    /// treated as one cluster and re-orthonormalized.
    pub const EIGEN_CLUSTER: f64 = 1e-8;
    /// Coordinates with `|c_i| <= NA_ZERO * max |c|` count as zero in
    /// non-Archimedean evaluation.
    pub const NA_ZERO: f64 = 1e-11;
    /// Slack for points slightly outside the domain of a piecewise-linear function.
    pub const DOMAIN_CLAMP: f64 = 1e-9;
    /// Relative slack on slope increments when validating convexity in floats.
    pub const CONVEXITY: f64 = 1e-12;
    /// Condition number above which a basis is reported as ill-conditioned.
    pub const ILL_CONDITIONED: f64 = 1e12;
}
