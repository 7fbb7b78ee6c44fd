//! One runner per subcommand. Each returns table rows plus the property
//! violations it found.

use std::cmp::Ordering;
use std::fmt;

use flatcone::convex::{cone_combine, lp_distance, lp_distance_uniform, ConeOp, DiscreteMeasure, Normalization, PLFunction};
use flatcone::graded::{
    bernstein_markov_gap, check_submultiplicative_exact, check_submultiplicative_na, dh_measure_at_k, modify_hermitian,
    modify_na, modify_na_exact, GradedHermitian, NormSequence,
};
use flatcone::model_p1::{
    fs_weight_from_log_gram, graded_filtration, graded_filtration_exact, l2_graded, l2_log_gram,
    metric_distance_via_quantisation, ring_multiply, sup_norm_oracle, toric_distance_oracle, Potential,
};
use flatcone::nonarch::{envelope_hermitian, gauge};
use flatcone::norms::{dp_distance, rescale_in_apartment, Apartment, HermitianNorm};
use flatcone::quadrature::QuadratureControl;
use flatcone::{CMatrix, CVector, C64};
use num::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Experiment;
use crate::Subcommand;

/// Relative tolerance of the per-degree identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Absolute tolerance of the Fubini–Study quantisation identity.
pub const QUANTISATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub k: usize,
    pub p: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl Row {
    fn new(experiment: String, k: usize, p: Option<f64>, lhs: f64, rhs: f64, gap: f64) -> Self {
        Row { experiment, k, p, lhs, rhs, gap }
    }

    fn cmp_key(&self, other: &Row) -> Ordering {
        self.experiment
            .cmp(&other.experiment)
            .then(self.k.cmp(&other.k))
            .then(match (self.p, other.p) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(a), Some(b)) => a.total_cmp(&b),
            })
    }
}

/// A library failure during an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalError(pub String);

impl<E: std::error::Error> From<E> for NumericalError {
    fn from(e: E) -> Self {
        NumericalError(e.to_string())
    }
}

impl fmt::Display for NumericalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}

type Result<T> = std::result::Result<T, NumericalError>;

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub violations: Vec<String>,
}

impl Outcome {
    fn from_rows(rows: Vec<Row>) -> Self {
        Outcome { rows, violations: Vec::new() }
    }

    /// Flags rows whose gap exceeds `tol(row)`.
    fn check(&mut self, tol: impl Fn(&Row) -> Option<f64>) {
        for r in &self.rows {
            if let Some(t) = tol(r) {
                if !(r.gap <= t) {
                    self.violations.push(format!("{} k={} p={:?}: gap {:e} exceeds {:e}", r.experiment, r.k, r.p, r.gap, t));
                }
            }
        }
    }
}

pub fn run(sub: Subcommand, exp: &Experiment, seed: u64) -> Result<Outcome> {
    let mut out = match sub {
        Subcommand::Isometry => isometry(exp)?,
        Subcommand::Dh => dh(exp)?,
        Subcommand::Quantise => quantise(exp)?,
        Subcommand::Submult => submult(exp, seed)?,
        Subcommand::Distortion => distortion(exp, seed)?,
        Subcommand::Ray => ray(exp)?,
    };
    out.rows.sort_by(Row::cmp_key);
    Ok(out)
}

fn control() -> QuadratureControl {
    QuadratureControl::default()
}

fn fmt_param(x: f64) -> String {
    format!("{x}")
}

/// The limit measure of `sigma_k`: uniform on the jumping-number range, or a
/// point mass when the range is a point.
fn limit_lp(f: &PLFunction, g: &PLFunction, (lo, hi): (f64, f64), p: f64) -> Result<f64> {
    if hi <= lo {
        let point = DiscreteMeasure::new(vec![lo], vec![1.0], Normalization::Probability)?;
        return Ok(lp_distance(f, g, &point, p)?.value);
    }
    if p.is_infinite() {
        // the difference is piecewise linear, so its max sits at a breakpoint
        let xs = f.breakpoints().iter().chain(g.breakpoints()).cloned().chain([lo, hi]).filter(|x| *x >= lo && *x <= hi);
        let mut best: f64 = 0.0;
        for x in xs {
            best = best.max((f.eval(&x)? - g.eval(&x)?).abs());
        }
        return Ok(best);
    }
    Ok(lp_distance_uniform(f, g, lo, hi, p, &control())?)
}

fn limit_cdf((lo, hi): (f64, f64), x: f64) -> f64 {
    if hi <= lo {
        if x >= lo {
            1.0
        } else {
            0.0
        }
    } else {
        ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

fn per_k<F>(exp: &Experiment, f: F) -> Result<Vec<Row>>
where
    F: Fn(usize) -> Result<Vec<Row>> + Sync,
{
    let chunks = exp.k_list.par_iter().map(|&k| f(k)).collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn identity_tol(r: &Row) -> Option<f64> {
    Some(IDENTITY_TOL * r.rhs.abs().max(1.0))
}

fn isometry(exp: &Experiment) -> Result<Outcome> {
    let h = l2_graded(&exp.model, control());
    let fl = graded_filtration(&exp.filtration)?;
    let modified = exp
        .functions
        .iter()
        .map(|f| modify_hermitian(&h, &fl, &f.float))
        .collect::<std::result::Result<Vec<GradedHermitian>, _>>()?;
    let rows = per_k(exp, |k| {
        let sigma = dh_measure_at_k(&fl, k, Normalization::Probability)?;
        let norms = modified.iter().map(|m| Ok(m.at(k)?.norm)).collect::<Result<Vec<HermitianNorm>>>()?;
        let mut rows = Vec::new();
        for &(i, j) in &exp.pairs {
            let (f, g) = (&exp.functions[i], &exp.functions[j]);
            let name = format!("{}|{}", f.name, g.name);
            for &p in &exp.p_list {
                let lhs = dp_distance(&norms[i], &norms[j], p)? / k as f64;
                let rhs = lp_distance(&f.float, &g.float, &sigma, p)?.value;
                rows.push(Row::new(format!("isometry:{name}"), k, Some(p), lhs, rhs, (lhs - rhs).abs()));
                let limit = limit_lp(&f.float, &g.float, exp.domain, p)?;
                rows.push(Row::new(format!("isometry_limit:{name}"), k, Some(p), lhs, limit, (lhs - limit).abs()));
            }
        }
        Ok(rows)
    })?;
    let mut out = Outcome::from_rows(rows);
    out.check(|r| if r.experiment.starts_with("isometry:") { identity_tol(r) } else { None });
    Ok(out)
}

fn identity_on(domain: (f64, f64)) -> Result<(PLFunction, PLFunction)> {
    let (lo, hi) = domain;
    if hi <= lo {
        return Ok((PLFunction::new(vec![lo], vec![lo], false)?, PLFunction::new(vec![lo], vec![0.0], false)?));
    }
    Ok((PLFunction::new(vec![lo, hi], vec![lo, hi], false)?, PLFunction::new(vec![lo, hi], vec![0.0, 0.0], false)?))
}

fn dh(exp: &Experiment) -> Result<Outcome> {
    let fl = graded_filtration(&exp.filtration)?;
    let (x, zero) = identity_on(exp.domain)?;
    let rows = per_k(exp, |k| {
        let sigma = dh_measure_at_k(&fl, k, exp.normalization)?;
        let mut rows = Vec::new();
        for &p in &exp.p_list {
            let lhs = lp_distance(&x, &zero, &sigma, p)?.value;
            let rhs = limit_lp(&x, &zero, exp.domain, p)?;
            rows.push(Row::new("dh_moment".into(), k, Some(p), lhs, rhs, (lhs - rhs).abs()));
        }
        let ks = sigma.to_probability().kolmogorov_to(|t| limit_cdf(exp.domain, t));
        rows.push(Row::new("dh_kolmogorov".into(), k, None, ks, 0.0, ks));
        Ok(rows)
    })?;
    let mut out = Outcome::from_rows(rows);
    let ks: Vec<&Row> = out.rows.iter().filter(|r| r.experiment == "dh_kolmogorov").collect();
    let increases: Vec<String> = ks
        .windows(2)
        .filter(|w| w[1].lhs > w[0].lhs + 1e-12)
        .map(|w| format!("dh_kolmogorov increases from k={} to k={}", w[0].k, w[1].k))
        .collect();
    out.violations.extend(increases);
    Ok(out)
}

fn quantise(exp: &Experiment) -> Result<Outcome> {
    let phi = &exp.model;
    let is_fs = matches!(phi.potential(), Potential::FubiniStudy);
    let l2 = l2_graded(phi, control());
    let oracle = NormSequence::Diagonal(sup_norm_oracle(phi));
    let rows = per_k(exp, |k| {
        let lg = l2_log_gram(k, phi, &control())?;
        let kf = k as f64;
        let constant = if is_fs { (kf + 1.0).ln() / kf } else { 0.0 };
        let (mut sup, mut dev): (f64, f64) = (0.0, 0.0);
        for j in 0..=400 {
            let t = -20.0 + 0.1 * j as f64;
            let diff = fs_weight_from_log_gram(&lg, t)? - phi.u(t);
            sup = sup.max(diff.abs());
            dev = dev.max((diff - constant).abs());
        }
        let mut rows = vec![Row::new("quantise_weight".into(), k, None, sup, constant, dev)];
        let bm = bernstein_markov_gap(&l2, &oracle, &[k])?[0].value;
        rows.push(Row::new("quantise_bernstein_markov".into(), k, Some(f64::INFINITY), bm, 0.0, bm));
        if let Some(psi) = &exp.compare_model {
            for &p in exp.p_list.iter().filter(|p| p.is_finite()) {
                let lhs = metric_distance_via_quantisation(phi, psi, p, &[k], &control())?.estimate;
                let rhs = toric_distance_oracle(phi, psi, p, &control())?;
                rows.push(Row::new("quantise_distance".into(), k, Some(p), lhs, rhs, (lhs - rhs).abs()));
            }
        }
        Ok(rows)
    })?;
    let mut out = Outcome::from_rows(rows);
    if is_fs {
        out.check(|r| (r.experiment == "quantise_weight").then_some(QUANTISATION_TOL));
    }
    Ok(out)
}

fn submult(exp: &Experiment, seed: u64) -> Result<Outcome> {
    let exact_base = graded_filtration_exact(&exp.filtration)?;
    let float_base = graded_filtration(&exp.filtration)?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (fi, f) in exp.functions.iter().enumerate() {
        let experiment = format!("submult:{}", f.name);
        let allow = exp.multiplicative;
        let exact = f.exact.as_ref().map(|q| modify_na_exact(&exact_base, q, allow)).transpose()?;
        let float = modify_na(&float_base, &f.float, allow)?;
        let chunk = exp
            .k_list
            .par_iter()
            .map(|&s| -> Result<Row> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((fi as u64) << 32) | s as u64);
                let mut worst = f64::INFINITY;
                for m in 1..s {
                    let n = s - m;
                    let samples = exp.samples / (s - 1) + usize::from(m <= exp.samples % (s - 1));
                    let margin = match &exact {
                        Some(q) => {
                            let ring = |a: &[num::BigInt], b: &[num::BigInt]| ring_multiply(a, b);
                            let r = check_submultiplicative_exact(q, ring, m, n, samples, &mut rng)?;
                            r.worst_margin.map_or(f64::INFINITY, |g| g.to_f64().unwrap_or(f64::NAN))
                        }
                        None => {
                            let ring = |a: &CVector, b: &CVector| CVector::from_vec(ring_multiply(a.as_slice(), b.as_slice()));
                            check_submultiplicative_na(&float, ring, m, n, samples, &mut rng)?.worst_margin
                        }
                    };
                    worst = worst.min(margin);
                }
                Ok(Row::new(experiment.clone(), s, None, worst, 0.0, (-worst).max(0.0)))
            })
            .collect::<Result<Vec<Row>>>()?;
        // exact margins are compared with zero; float ones allow rounding
        let tol = if exact.is_some() { 0.0 } else { 1e-9 };
        for r in &chunk {
            if r.gap > tol * (r.k as f64).max(1.0) {
                violations.push(format!("{} in degree {}: margin {:e}", r.experiment, r.k, r.lhs));
            }
        }
        rows.extend(chunk);
    }
    Ok(Outcome { rows, violations })
}

fn random_matrix<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> Result<HermitianNorm> {
    let b = random_matrix(n, rng);
    let g = &b * b.adjoint() + CMatrix::identity(n, n).map(|z| z * 0.1);
    Ok(HermitianNorm::from_gram(g)?)
}

/// `I + 0.9 G / |G|_2`: singular values lie in `[0.1, 1.9]`, so the
/// condition number is below 19 in every dimension.
fn random_apartment<R: Rng>(n: usize, rng: &mut R) -> Result<Apartment> {
    let g = random_matrix(n, rng);
    let top = g.clone().svd(false, false).singular_values.max();
    let b = CMatrix::identity(n, n) + g.unscale(top / 0.9);
    Ok(Apartment::new(b)?)
}

/// Distortion sweep: `k` is the dimension of the space.
fn distortion(exp: &Experiment, seed: u64) -> Result<Outcome> {
    let mut violations = Vec::new();
    let chunks = exp
        .k_list
        .par_iter()
        .map(|&n| -> Result<(Vec<Row>, Vec<String>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let mut excess = vec![f64::NEG_INFINITY; exp.p_list.len()];
            let mut found = Vec::new();
            let bound = (n as f64).ln();
            for trial in 0..exp.trials {
                let apartment = random_apartment(n, &mut rng)?;
                let sq: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
                let norm = HermitianNorm::with_orthogonal_basis(&apartment, &sq)?;
                let other = random_hermitian(n, &mut rng)?;
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let iota = rescale_in_apartment(&norm, &apartment, &a)?;
                let iota_other = envelope_hermitian(&other, &gauge(&apartment, &a)?)?;
                let d_inf = dp_distance(&norm, &other, f64::INFINITY)?;
                for (slot, &p) in exp.p_list.iter().enumerate() {
                    let e = dp_distance(&iota, &iota_other, p)? - d_inf;
                    excess[slot] = excess[slot].max(e);
                    if e > bound + 1e-12 * (bound + d_inf).max(1.0) {
                        found.push(format!("distortion dim {n} trial {trial} p={p}: excess {e} above log N = {bound}"));
                    }
                }
            }
            let rows = exp
                .p_list
                .iter()
                .zip(&excess)
                .map(|(&p, &e)| Row::new("distortion".into(), n, Some(p), e, bound, (e - bound).max(0.0)))
                .collect();
            Ok((rows, found))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (r, v) in chunks {
        rows.extend(r);
        violations.extend(v);
    }
    Ok(Outcome { rows, violations })
}

fn ray(exp: &Experiment) -> Result<Outcome> {
    let (x, zero) = identity_on(exp.domain)?;
    let (base, name) = match exp.ray_function {
        Some(i) => (exp.functions[i].float.clone(), exp.functions[i].name.clone()),
        // -x on the jumping-number range
        None => {
            let values = x.values().iter().map(|v| -v).collect();
            (PLFunction::new(x.breakpoints().to_vec(), values, true)?, "-x".to_string())
        }
    };
    let h = l2_graded(&exp.model, control());
    let fl = graded_filtration(&exp.filtration)?;
    let ts = &exp.ray_parameters;
    let rays = ts
        .iter()
        .map(|&t| Ok(modify_hermitian(&h, &fl, &cone_combine(&ConeOp::Scale(t), &base, None)?)?))
        .collect::<Result<Vec<GradedHermitian>>>()?;
    let rows = per_k(exp, |k| {
        let sigma = dh_measure_at_k(&fl, k, Normalization::Probability)?;
        let norms = rays.iter().map(|r| Ok(r.at(k)?.norm)).collect::<Result<Vec<HermitianNorm>>>()?;
        let mut rows = Vec::new();
        for &p in &exp.p_list {
            let speed = lp_distance(&base, &zero, &sigma, p)?.value;
            for i in 0..ts.len() {
                for j in (i + 1)..ts.len() {
                    let lhs = dp_distance(&norms[i], &norms[j], p)? / k as f64;
                    let rhs = (ts[j] - ts[i]).abs() * speed;
                    let experiment = format!("ray:{name}:{}:{}", fmt_param(ts[i]), fmt_param(ts[j]));
                    rows.push(Row::new(experiment, k, Some(p), lhs, rhs, (lhs - rhs).abs()));
                }
            }
        }
        Ok(rows)
    })?;
    let mut out = Outcome::from_rows(rows);
    out.check(identity_tol);
    Ok(out)
}
