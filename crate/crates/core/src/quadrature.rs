//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("no convergence on [{a}, {b}]: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    NonConvergent { a: f64, b: f64, estimate: f64, error: f64, subdivisions: usize },
    #[error("integrand is not finite at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        QuadratureControl { rel_tol: 1e-10, abs_tol: 0.0, max_subdivisions: 2000 }
    }
}

// Kronrod abscissae and weights; odd indices are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |t: f64| {
        let y = f(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite(t))
        }
    };
    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Segment { a, b, value, error: error.max(50.0 * f64::EPSILON * value.abs()) })
}

/// Integrates `f` over `[a, b]`, bisecting the worst segment until the summed
/// error estimate is below `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, control: &QuadratureControl) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let first = kronrod(&f, lo, hi)?;
    let mut total = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;
    while error > control.abs_tol.max(control.rel_tol * total.abs()) {
        if subdivisions >= control.max_subdivisions {
            return Err(QuadratureError::NonConvergent { a, b, estimate: total, error, subdivisions });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // segment cannot be split further in floating point
            return Err(QuadratureError::NonConvergent { a, b, estimate: total, error, subdivisions });
        }
        let left = kronrod(&f, worst.a, mid)?;
        let right = kronrod(&f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
    // resum to shed drift from the running updates
    let total: f64 = {
        let mut segs: Vec<Segment> = heap.into_vec();
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
        segs.iter().map(|s| s.value).sum()
    };
    Ok(sign * total)
}

/// Integrates over consecutive pieces `[cuts[j], cuts[j+1]]`, each adaptively.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, cuts: &[f64], control: &QuadratureControl) -> Result<f64, QuadratureError> {
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(&f, w[0], w[1], control)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let c = QuadratureControl::default();
        assert_relative_eq!(integrate(|x| x * x, 0.0, 1.0, &c).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(integrate(|x| x.powi(5), -1.0, 2.0, &c).unwrap(), 63.0 / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn smooth_and_kinked() {
        let c = QuadratureControl::default();
        assert_relative_eq!(integrate(f64::exp, 0.0, 1.0, &c).unwrap(), 1f64.exp() - 1.0, max_relative = 1e-12);
        assert_relative_eq!(integrate(|x: f64| x.abs(), -1.0, 2.0, &c).unwrap(), 2.5, max_relative = 1e-10);
        assert_relative_eq!(integrate(|x: f64| x.sqrt(), 0.0, 1.0, &c).unwrap(), 2.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(integrate(|x| x, 1.0, 0.0, &c).unwrap(), -0.5, max_relative = 1e-15);
    }

    #[test]
    fn reports_failures() {
        let c = QuadratureControl { max_subdivisions: 3, ..Default::default() };
        assert!(matches!(
            integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &c),
            Err(QuadratureError::NonConvergent { .. })
        ));
        assert!(matches!(
            integrate(|x: f64| 1.0 / x, 0.0, 1.0, &QuadratureControl::default()),
            Err(QuadratureError::NonFinite(_)) | Err(QuadratureError::NonConvergent { .. })
        ));
    }
}
