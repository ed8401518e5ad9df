//! Zeros of continuous maps `F: ℝ^d → ℝ^d` inside a `‖·‖_d` ball whose boundary
//! satisfies `⟨F(ξ), ξ⟩ >= 0`.
//!
//! [`certify_boundary`] samples the pairing on the sphere; [`find_zero`] runs a
//! multi-start damped Newton search with a Levenberg-Marquardt fallback.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub trait VectorField {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// The norm `‖·‖_d` defining the ball.
    fn norm(&self, x: &[f64]) -> f64;

    /// `⟨F(x), x⟩` in the Euclidean inner product.
    fn pairing(&self, x: &[f64]) -> Result<f64> {
        let mut fx = vec![0.0; self.dim()];
        self.eval(x, &mut fx)?;
        Ok(dot(&fx, x))
    }

    /// Solves `(J(x) + shift·I) d = −F(x)` with a structured Jacobian.
    /// `None` selects the dense finite-difference Jacobian.
    fn newton_step(&self, _x: &[f64], _fx: &[f64], _shift: f64) -> Option<Result<Vec<f64>>> {
        None
    }

    /// A random search direction; Gaussian by default.
    fn random_direction(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Directions the certificate should always include.
    fn hints(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn euclid(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A field given by a closure, Euclidean norm unless replaced.
pub struct ClosureField<F, G = fn(&[f64]) -> f64> {
    dim: usize,
    f: F,
    norm: G,
}

impl<F> ClosureField<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, norm: euclid }
    }
}

impl<F, G> ClosureField<F, G>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> f64,
{
    pub fn with_norm<H: Fn(&[f64]) -> f64>(self, norm: H) -> ClosureField<F, H> {
        ClosureField { dim: self.dim, f: self.f, norm }
    }
}

impl<F, G> VectorField for ClosureField<F, G>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let v = (self.f)(x);
        if v.len() != self.dim {
            return Err(Error::Parameter(format!("field returned {} components, expected {}", v.len(), self.dim)));
        }
        out.copy_from_slice(&v);
        Ok(())
    }

    fn norm(&self, x: &[f64]) -> f64 {
        (self.norm)(x)
    }
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    /// Total sample budget; at least `2d` (the signed coordinate directions).
    pub samples: usize,
    /// Smallest number of random directions on top of the coordinate ones.
    pub min_random: usize,
    /// Pass iff every sampled pairing is `>= threshold`.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { samples: 0, min_random: 64, threshold: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub min: f64,
    pub argmin: Vec<f64>,
    pub threshold: f64,
    pub evaluated: usize,
    /// First sampled point with pairing below the threshold.
    pub failing_point: Option<Vec<f64>>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.failing_point.is_none()
    }
}

fn scale_to_sphere<F: VectorField + ?Sized>(field: &F, v: &mut [f64], radius: f64) -> bool {
    let n = field.norm(v);
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    let c = radius / n;
    v.iter_mut().for_each(|x| *x *= c);
    true
}

/// Samples `⟨F(ξ), ξ⟩` on `{‖ξ‖_d = radius}`.
///
/// The sample set is the `2d` signed coordinate directions, the field's hints,
/// and random directions, all rescaled onto the sphere. A sample whose
/// evaluation errors counts as a failure.
pub fn certify_boundary<F: VectorField + ?Sized>(field: &F, radius: f64, opts: &CertifyOptions) -> Result<Certificate> {
    let d = field.dim();
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("certificate radius must be positive, got {radius}")));
    }
    if opts.samples < 2 * d {
        return Err(Error::Parameter(format!("certificate needs >= 2d = {} samples, got {}", 2 * d, opts.samples)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cert = Certificate {
        min: f64::INFINITY,
        argmin: Vec::new(),
        threshold: opts.threshold,
        evaluated: 0,
        failing_point: None,
    };
    let check = |x: Vec<f64>, cert: &mut Certificate| {
        let v = field.pairing(&x).unwrap_or(f64::NEG_INFINITY);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        cert.evaluated += 1;
        if v < cert.min {
            cert.min = v;
            cert.argmin = x.clone();
        }
        if v < opts.threshold && cert.failing_point.is_none() {
            cert.failing_point = Some(x);
        }
    };
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut x = vec![0.0; d];
            x[i] = sign;
            if scale_to_sphere(field, &mut x, radius) {
                check(x, &mut cert);
            }
        }
    }
    let hints = field.hints();
    let n_hints = hints.len();
    for mut h in hints {
        if scale_to_sphere(field, &mut h, radius) {
            check(h, &mut cert);
        }
    }
    let random = opts.samples.saturating_sub(2 * d + n_hints).max(opts.min_random);
    for _ in 0..random {
        let mut x = field.random_direction(&mut rng);
        if scale_to_sphere(field, &mut x, radius) {
            check(x, &mut cert);
        }
    }
    Ok(cert)
}

#[derive(Debug, Clone)]
pub struct ZeroOptions {
    /// Target Euclidean residual `|F(z)|₂`.
    pub tol: f64,
    /// Slack on `‖z‖_d <= radius`.
    pub tol_norm: f64,
    /// Newton iterations per start; the fallback gets the same budget.
    pub max_iter: usize,
    /// Number of generated starts (origin plus `±0.5ϱ` random directions).
    pub starts: usize,
    /// Tried before the generated starts.
    pub warm_starts: Vec<Vec<f64>>,
    /// Skip the generated starts.
    pub warm_only: bool,
    pub seed: u64,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        Self { tol: 1e-8, tol_norm: 1e-9, max_iter: 60, starts: 8, warm_starts: Vec::new(), warm_only: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroReport {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub start: usize,
}

fn residual<F: VectorField + ?Sized>(field: &F, x: &[f64], fx: &mut [f64]) -> f64 {
    match field.eval(x, fx) {
        Ok(()) => {
            let r = euclid(fx);
            if r.is_finite() {
                r
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

fn fd_jacobian<F: VectorField + ?Sized>(field: &F, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>> {
    let d = x.len();
    let mut jac = DMatrix::zeros(d, d);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; d];
    for j in 0..d {
        let h = 1e-7f64.max(1e-7 * x[j].abs());
        xp[j] = x[j] + h;
        field.eval(&xp, &mut fp)?;
        for i in 0..d {
            jac[(i, j)] = (fp[i] - fx[i]) / h;
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

/// Damped Newton with a finite-difference or structured Jacobian; returns
/// `(x, residual, iterations)` when the line search stalls or `tol` is met.
fn newton<F: VectorField + ?Sized>(field: &F, mut x: Vec<f64>, opts: &ZeroOptions) -> (Vec<f64>, f64, usize) {
    let d = x.len();
    let mut fx = vec![0.0; d];
    let mut res = residual(field, &x, &mut fx);
    let mut trial = vec![0.0; d];
    let mut ft = vec![0.0; d];
    for it in 0..opts.max_iter {
        if res <= opts.tol || !res.is_finite() {
            return (x, res, it);
        }
        let dir = match field.newton_step(&x, &fx, 0.0) {
            Some(Ok(v)) => v,
            Some(Err(_)) => return (x, res, it),
            None => {
                let Ok(jac) = fd_jacobian(field, &x, &fx) else { return (x, res, it) };
                let rhs = DVector::from_iterator(d, fx.iter().map(|v| -v));
                match jac.lu().solve(&rhs) {
                    Some(s) => s.iter().copied().collect(),
                    None => return (x, res, it),
                }
            }
        };
        if dir.iter().any(|v| !v.is_finite()) {
            return (x, res, it);
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            for i in 0..d {
                trial[i] = x[i] + t * dir[i];
            }
            let rt = residual(field, &trial, &mut ft);
            if rt < (1.0 - 1e-4 * t) * res {
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut fx, &mut ft);
                res = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (x, res, it + 1);
        }
    }
    (x, res, opts.max_iter)
}

/// Minimizes `|F|₂²` by Levenberg-Marquardt (dense) or shifted Newton steps
/// (structured fields).
fn levenberg_marquardt<F: VectorField + ?Sized>(field: &F, mut x: Vec<f64>, opts: &ZeroOptions) -> (Vec<f64>, f64, usize) {
    let d = x.len();
    let mut fx = vec![0.0; d];
    let mut res = residual(field, &x, &mut fx);
    let mut mu = 1e-3;
    let mut ft = vec![0.0; d];
    let mut it = 0;
    let structured = field.newton_step(&x, &fx, 0.0).is_some();
    while it < opts.max_iter && res > opts.tol && res.is_finite() {
        it += 1;
        let dir: Vec<f64> = if structured {
            match field.newton_step(&x, &fx, mu) {
                Some(Ok(v)) => v,
                _ => break,
            }
        } else {
            let Ok(jac) = fd_jacobian(field, &x, &fx) else { break };
            let jt = jac.transpose();
            let mut a = &jt * &jac;
            let scale = (0..d).map(|i| a[(i, i)]).fold(0.0, f64::max).max(1e-300);
            for i in 0..d {
                a[(i, i)] += mu * scale;
            }
            let g = &jt * DVector::from_column_slice(&fx);
            match a.cholesky() {
                Some(ch) => ch.solve(&(-g)).iter().copied().collect(),
                None => {
                    mu *= 10.0;
                    continue;
                }
            }
        };
        let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + b).collect();
        let rt = residual(field, &trial, &mut ft);
        if rt < res {
            x = trial;
            std::mem::swap(&mut fx, &mut ft);
            res = rt;
            mu = (mu / 3.0).max(1e-12);
        } else {
            mu *= 4.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    (x, res, it)
}

/// Looks for `z` with `‖z‖_d <= radius + tol_norm` and `|F(z)|₂ <= tol`.
///
/// Starts are tried in order of increasing initial residual. Zeros found
/// outside the ball are discarded. When no start reaches `tol` the error
/// carries the best residual seen.
pub fn find_zero<F: VectorField + ?Sized>(field: &F, radius: f64, opts: &ZeroOptions) -> Result<ZeroReport> {
    let d = field.dim();
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("zero tolerance must be positive, got {}", opts.tol)));
    }
    let mut starts: Vec<Vec<f64>> = opts.warm_starts.iter().filter(|s| s.len() == d).cloned().collect();
    if !opts.warm_only {
        starts.push(vec![0.0; d]);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        while starts.len() < opts.warm_starts.len() + opts.starts.max(1) {
            let mut v = field.random_direction(&mut rng);
            if scale_to_sphere(field, &mut v, 0.5 * radius) {
                let neg: Vec<f64> = v.iter().map(|x| -x).collect();
                starts.push(v);
                starts.push(neg);
            }
        }
        starts.truncate(opts.warm_starts.len() + opts.starts.max(1));
    }
    let mut scratch = vec![0.0; d];
    let mut ranked: Vec<(f64, usize)> =
        starts.iter().enumerate().map(|(i, s)| (residual(field, s, &mut scratch), i)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let limit = radius + opts.tol_norm.max(1e-12 * radius);
    let mut best = f64::INFINITY;
    let mut total_iter = 0;
    for (_, idx) in ranked {
        let (x, r, it) = newton(field, starts[idx].clone(), opts);
        total_iter += it;
        let (x, r) = if r > opts.tol {
            let (y, ry, it2) = levenberg_marquardt(field, x, opts);
            total_iter += it2;
            if ry <= opts.tol {
                // polish with Newton from the fallback point
                let (z, rz, it3) = newton(field, y.clone(), opts);
                total_iter += it3;
                if rz <= ry {
                    (z, rz)
                } else {
                    (y, ry)
                }
            } else {
                (y, ry)
            }
        } else {
            (x, r)
        };
        let inside = field.norm(&x) <= limit;
        if inside {
            best = best.min(r);
        }
        if r <= opts.tol && inside {
            return Ok(ZeroReport { point: x, residual: r, iterations: total_iter, start: idx });
        }
    }
    Err(Error::BudgetExhausted { best_residual: best })
}
