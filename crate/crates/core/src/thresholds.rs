//! Existence window constants and the nonexistence certificate.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::galerkin::{random_profile, random_smooth_profile, solve_weighted_sublinear, tridiag, SolveOptions};
use crate::mesh::{alpha_n, GridFunction, RadialMesh};
use crate::nonlinearity::{phi, ProblemParams};
use crate::weights::Weight;

/// Inputs of the existence window: embedding, Hölder and Trudinger–Moser constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantInputs {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub c_alpha_n: f64,
    pub c_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub c_alpha_n: f64,
    pub c_star: f64,
    pub rho: f64,
    /// `(1/4)(α_N/(Nα))^{(N−1)/N}`
    pub rho_tm: f64,
    /// `ς` at the configured `λ`.
    pub varsigma: f64,
    pub lambda_star: f64,
}

/// `(1/4)(α_N/(Nα))^{(N−1)/N}`.
pub fn rho_tm(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    0.25 * (alpha_n(n) / (nf * alpha)).powf((nf - 1.0) / nf)
}

/// `ϱ^{N−q}/(4K₁)`.
pub fn lambda_star_from(rho: f64, n: usize, q: f64, k1: f64) -> f64 {
    rho.powf(n as f64 - q) / (4.0 * k1)
}

/// `(2K₂C(α,N))^{−1/(p−N)}`.
pub fn rho_growth_branch(n: usize, p: f64, k2: f64, c_alpha_n: f64) -> f64 {
    (2.0 * k2 * c_alpha_n).powf(-1.0 / (p - n as f64))
}

pub fn compute_rho_lambda_star(params: &ProblemParams, c: &ConstantInputs) -> Result<SolverConstants> {
    for (name, v) in [("K1", c.k1), ("K2", c.k2), ("K3", c.k3), ("C(alpha,N)", c.c_alpha_n), ("C_*", c.c_star)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("{name}>0 violated ({name} = {v})")));
        }
    }
    params.validate()?;
    let n = params.n;
    let tm = rho_tm(n, params.alpha);
    let rho = rho_growth_branch(n, params.p, c.k2, c.c_alpha_n).min(tm);
    let nf = n as f64;
    Ok(SolverConstants {
        k1: c.k1,
        k2: c.k2,
        k3: c.k3,
        c_alpha_n: c.c_alpha_n,
        c_star: c.c_star,
        rho,
        rho_tm: tm,
        varsigma: rho.powf(nf) / 2.0 - params.lambda * c.k1 * rho.powf(params.q),
        lambda_star: lambda_star_from(rho, n, params.q, c.k1),
    })
}

impl SolverConstants {
    pub fn inputs(&self) -> ConstantInputs {
        ConstantInputs { k1: self.k1, k2: self.k2, k3: self.k3, c_alpha_n: self.c_alpha_n, c_star: self.c_star }
    }

    /// `ς = ϱ^N/2 − λK₁ϱ^q`.
    pub fn varsigma_at(&self, n: usize, q: f64, lambda: f64) -> f64 {
        self.rho.powf(n as f64) / 2.0 - lambda * self.k1 * self.rho.powf(q)
    }

    /// `(2λK₁)^{1/(N−q)}`.
    pub fn decay_radius(&self, n: usize, q: f64, lambda: f64) -> f64 {
        (2.0 * lambda * self.k1).powf(1.0 / (n as f64 - q))
    }

    /// `ϱ̃ = min{(2λK₁)^{1/(N−q)}, ϱ}`.
    pub fn rho_tilde(&self, n: usize, q: f64, lambda: f64) -> f64 {
        self.decay_radius(n, q, lambda).min(self.rho)
    }

    /// Whether `ϱ` satisfies the Trudinger–Moser smallness condition.
    pub fn tm_smallness(&self) -> bool {
        self.rho <= self.rho_tm
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("K1", self.k1),
            ("K2", self.k2),
            ("K3", self.k3),
            ("C_alphaN", self.c_alpha_n),
            ("C_star", self.c_star),
            ("rho", self.rho),
            ("rho_tm", self.rho_tm),
            ("varsigma", self.varsigma),
            ("lambda_star", self.lambda_star),
        ] {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Constants estimated on one mesh, with the `K₁` maximizer.
#[derive(Debug, Clone)]
pub struct ConstantEstimate {
    pub inputs: ConstantInputs,
    /// Positive solution of `−Δ_N u + u^{N−1} = a u^{q−1}`; it maximizes
    /// `∫a|u|^q / ‖u‖^q`.
    pub k1_maximizer: GridFunction,
    pub samples: usize,
}

/// Rayleigh-type suprema over `samples` random profiles (plus the exact `K₁`
/// maximizer). The random part only yields lower bounds.
pub fn estimate_constants(
    params: &ProblemParams,
    weight: &Weight,
    mesh: Arc<RadialMesh>,
    pbar_star: f64,
    samples: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    params.validate()?;
    let n = params.n;
    let nf = n as f64;
    let np = params.n_prime();
    let big_r = mesh.radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cands: Vec<GridFunction> = (0..samples)
        .map(|_| GridFunction::new(mesh.clone(), random_profile(&mesh, &mut rng)).expect("profile length"))
        .filter(|u| u.w1n_norm() > 0.0)
        .collect();
    let maximizer = solve_weighted_sublinear(weight, mesh.clone(), params.q, &SolveOptions::default())?.solution;
    cands.push(maximizer.clone());

    let q_ratio = |u: &GridFunction| -> f64 {
        let num = u.integrate_on(0.0, big_r, |r, v, _| Ok(weight.eval(r) * v.abs().powf(params.q))).unwrap_or(0.0);
        num / u.w1n_norm().powf(params.q)
    };
    let k1 = 2.0 * cands.iter().map(q_ratio).fold(0.0, f64::max);
    let c1 = params.a1 * 2f64.powf(params.p);
    let k2 = c1 * cands.iter().map(|u| (u.ls_norm(nf * params.p) / u.w1n_norm()).powf(params.p)).fold(0.0, f64::max);
    let c_star = cands.iter().map(|u| u.ls_norm(pbar_star) / u.w1n_norm()).fold(0.0, f64::max);
    let tm = rho_tm(n, params.alpha);
    let beta = nf * 2f64.powf(2.0 * np) * params.alpha;
    let mut c_alpha_n = 0.0f64;
    for u in &cands {
        let v = u.scaled(tm / u.w1n_norm());
        if let Ok(j) = v.tm_functional(beta) {
            c_alpha_n = c_alpha_n.max(j.powf(1.0 / np));
        }
    }
    let k3 = 2.0 * Weight::exponential(1.0).lebesgue_norm(n, np)?;
    Ok(ConstantEstimate { inputs: ConstantInputs { k1, k2, k3, c_alpha_n, c_star }, k1_maximizer: maximizer, samples })
}

/// `H(t) = (p−N)t^{p−q}φ_N(αt^{N'}) + αN't^{p−q+N'}φ_{N−1}(αt^{N'})`.
pub fn h_eval(t: f64, params: &ProblemParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("H needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = params.n as i32;
    let nf = params.n as f64;
    let np = params.n_prime();
    let s = params.alpha * t.powf(np);
    let e = params.p - params.q;
    let v = (params.p - nf) * t.powf(e) * phi(n, s)? + params.alpha * np * t.powf(e + np) * phi(n - 1, s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range { t })
    }
}

/// Unique `t₁ > 0` with `H(t₁) = Λ(N−q)`.
pub fn solve_t1(lambda_cap: f64, params: &ProblemParams, tol: f64) -> Result<f64> {
    if !(lambda_cap > 0.0 && lambda_cap.is_finite()) {
        return Err(Error::Parameter(format!("Lambda>0 violated (Lambda = {lambda_cap})")));
    }
    let target = lambda_cap * (params.n as f64 - params.q);
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        match h_eval(hi, params) {
            Ok(v) if v >= target => break,
            Ok(_) => {
                lo = hi;
                hi *= 2.0;
            }
            Err(_) => return Err(Error::Bracket(format!("H stays below {target} up to overflow at t = {hi}"))),
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = h_eval(mid, params)?;
        if (v - target).abs() <= tol {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `Q(t) = Λt^{q−N} + t^{p−N}φ_N(αt^{N'})`.
pub fn q_eval(t: f64, lambda_cap: f64, params: &ProblemParams) -> Result<f64> {
    let nf = params.n as f64;
    let s = params.alpha * t.powf(params.n_prime());
    Ok(lambda_cap * t.powf(params.q - nf) + t.powf(params.p - nf) * phi(params.n as i32, s)?)
}

/// `C_Λ = Q(t₁)`, the minimum of `Q` on `(0, ∞)`.
pub fn c_lambda(t1: f64, lambda_cap: f64, params: &ProblemParams) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(Error::Parameter(format!("t1>0 violated (t1 = {t1})")));
    }
    q_eval(t1, lambda_cap, params)
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 20_000, restarts: 5, seed: 0 }
    }
}

struct Rayleigh<'a> {
    mesh: &'a RadialMesh,
    n: i32,
}

impl Rayleigh<'_> {
    /// `(∫|u'|^N r^{N−1}, ∫|u|^N r^{N−1})` with `u(R) = 0`.
    fn parts(&self, v: &[f64]) -> (f64, f64) {
        let m = self.mesh;
        let rule = m.rule();
        let (mut a, mut b) = (0.0, 0.0);
        for e in 0..m.elements() {
            let (ua, ub) = (v[e], if e + 1 < v.len() { v[e + 1] } else { 0.0 });
            let d = (ub - ua) / m.element_len(e);
            a += d.abs().powi(self.n) * m.element_measure(e);
            for (s, w) in rule.points.iter().zip(m.quad_w(e)) {
                let u = (1.0 - s) * ua + s * ub;
                b += w * u.abs().powi(self.n);
            }
        }
        (a, b)
    }

    fn value(&self, v: &[f64]) -> f64 {
        let (a, b) = self.parts(v);
        a / b
    }

    /// Gradient of the quotient.
    fn gradient(&self, v: &[f64]) -> (f64, Vec<f64>) {
        let m = self.mesh;
        let rule = m.rule();
        let (a, b) = self.parts(v);
        let rq = a / b;
        let nf = self.n as f64;
        let mut g = vec![0.0; v.len()];
        for e in 0..m.elements() {
            let (ua, ub) = (v[e], if e + 1 < v.len() { v[e + 1] } else { 0.0 });
            let h = m.element_len(e);
            let d = (ub - ua) / h;
            let flux = d.abs().powi(self.n - 2) * d * m.element_measure(e) / h;
            let mut ge = [-flux, flux];
            for (s, w) in rule.points.iter().zip(m.quad_w(e)) {
                let u = (1.0 - s) * ua + s * ub;
                let src = -rq * w * u.abs().powi(self.n - 2) * u;
                ge[0] += src * (1.0 - s);
                ge[1] += src * s;
            }
            g[e] += ge[0];
            if e + 1 < v.len() {
                g[e + 1] += ge[1];
            }
        }
        let c = nf / b;
        g.iter_mut().for_each(|x| *x *= c);
        (rq, g)
    }
}

/// Tridiagonal `∫(u'w' + uw) r^{N−1}` used as the preconditioner.
fn sobolev_matrix(mesh: &RadialMesh) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = mesh.elements();
    let rule = mesh.rule();
    let (mut sub, mut diag, mut sup) = (vec![0.0; m - 1], vec![0.0; m], vec![0.0; m - 1]);
    for e in 0..m {
        let h = mesh.element_len(e);
        let k = mesh.element_measure(e) / (h * h);
        let mut ke = [[k, -k], [-k, k]];
        for (s, w) in rule.points.iter().zip(mesh.quad_w(e)) {
            let phi = [1.0 - s, *s];
            for i in 0..2 {
                for j in 0..2 {
                    ke[i][j] += w * phi[i] * phi[j];
                }
            }
        }
        diag[e] += ke[0][0];
        if e + 1 < m {
            diag[e + 1] += ke[1][1];
            sup[e] += ke[0][1];
            sub[e] += ke[1][0];
        }
    }
    (sub, diag, sup)
}

/// `∫|u'|^N r^{N−1} / ∫|u|^N r^{N−1}` for `u` vanishing at the outer radius.
pub fn rayleigh_quotient(u: &GridFunction) -> f64 {
    let mesh = u.mesh();
    let rq = Rayleigh { mesh, n: mesh.dim() as i32 };
    rq.value(&u.values()[..mesh.elements()])
}

/// Smallest Dirichlet eigenvalue of `−Δ_N` on the mesh ball and its positive
/// eigenfunction with `sup = 1`.
///
/// Minimizes the Rayleigh quotient by preconditioned gradient steps with
/// Armijo backtracking, from `restarts` random positive starts.
pub fn principal_eigenvalue(mesh: &Arc<RadialMesh>, opts: &EigenOptions) -> Result<(f64, GridFunction)> {
    let m = mesh.elements();
    if m < 2 {
        return Err(Error::Parameter("eigenvalue needs at least two elements".into()));
    }
    let ray = Rayleigh { mesh, n: mesh.dim() as i32 };
    let (sub, diag, sup) = sobolev_matrix(mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut last_err = None;
    for _ in 0..opts.restarts.max(1) {
        let mut v = random_smooth_profile(mesh, &mut rng);
        v.pop();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        match descend(&ray, &sub, &diag, &sup, v, opts) {
            Ok((val, u)) => {
                if best.as_ref().map_or(true, |(b, _)| val < *b) {
                    best = Some((val, u));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((val, mut u)) = best else {
        return Err(last_err.unwrap_or(Error::Stagnation { value: f64::NAN, grad: f64::NAN }));
    };
    let s = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sign = if u.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    u.iter_mut().for_each(|x| *x *= sign / s);
    u.push(0.0);
    Ok((val, GridFunction::new(mesh.clone(), u)?))
}

fn descend(
    ray: &Rayleigh,
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    mut v: Vec<f64>,
    opts: &EigenOptions,
) -> Result<(f64, Vec<f64>)> {
    let mut step = 1.0;
    let mut quiet = 0;
    let (mut val, mut g) = ray.gradient(&v);
    for _ in 0..opts.max_iter {
        let d: Vec<f64> = tridiag::solve(sub, diag, sup, &g)
            .ok_or(Error::Stagnation { value: val, grad: f64::NAN })?
            .iter()
            .map(|x| -x)
            .collect();
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            return Ok((val, v));
        }
        let mut t = step * 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let tv = ray.value(&trial);
            if tv.is_finite() && tv <= val + 1e-4 * t * slope {
                accepted = Some((trial, tv));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, tv)) = accepted else {
            return Ok((val, v));
        };
        step = t;
        let drop = val - tv;
        // keep the iterate at unit sup so the scale stays bounded
        let s = trial.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        v = trial.iter().map(|x| x / s).collect();
        let (nv, ng) = ray.gradient(&v);
        val = nv;
        g = ng;
        if drop <= opts.tol * val {
            quiet += 1;
            if quiet >= 3 {
                return Ok((val, v));
            }
        } else {
            quiet = 0;
        }
    }
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    Err(Error::Stagnation { value: val, grad: gn })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonexistenceReport {
    pub lambda: f64,
    /// `Λ = λ a_R`
    pub lambda_cap: f64,
    pub t1: f64,
    pub c_lambda: f64,
    pub sigma1: f64,
    pub delta: f64,
    pub certified: bool,
}

pub const NONEXISTENCE_CSV_COLUMNS: &str = "lambda,Lambda,t1,C_Lambda,sigma1,certified";

impl NonexistenceReport {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{}", self.lambda, self.lambda_cap, self.t1, self.c_lambda, self.sigma1, self.certified)
    }
}

/// Certificate `C_Λ >= σ₁ + δ + 1` with a precomputed `σ₁` and `a_R`.
pub fn nonexistence_from(
    lambda: f64,
    a_r: f64,
    sigma1: f64,
    delta: f64,
    params: &ProblemParams,
) -> Result<NonexistenceReport> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta>0 violated (delta = {delta})")));
    }
    let lambda_cap = lambda * a_r;
    let t1 = solve_t1(lambda_cap, params, 1e-10)?;
    let c = c_lambda(t1, lambda_cap, params)?;
    Ok(NonexistenceReport { lambda, lambda_cap, t1, c_lambda: c, sigma1, delta, certified: c >= sigma1 + delta + 1.0 })
}

pub fn nonexistence_certificate(
    lambda: f64,
    delta: f64,
    mesh: &Arc<RadialMesh>,
    params: &ProblemParams,
    weight: &Weight,
) -> Result<NonexistenceReport> {
    let (sigma1, _) = principal_eigenvalue(mesh, &EigenOptions::default())?;
    let a_r = weight.inf_on_ball(mesh.radius(), mesh);
    nonexistence_from(lambda, a_r, sigma1, delta, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn base() -> ProblemParams {
        ProblemParams::baseline()
    }

    #[test]
    fn lambda_star_substitution() {
        assert!((lambda_star_from(1.0, 2, 1.5, 1.0) - 0.25).abs() < 1e-15);
        assert!((rho_growth_branch(2, 4.0, 1.0, 1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((rho_tm(2, 1.0) - 0.25 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constants_satisfy_identities() {
        let c = ConstantInputs { k1: 3.0, k2: 0.2, k3: 2.5, c_alpha_n: 4.0, c_star: 1.0 };
        let p = base().with_lambda(1e-3);
        let s = compute_rho_lambda_star(&p, &c).unwrap();
        assert!((s.lambda_star * 4.0 * s.k1 - s.rho.powf(0.5)).abs() < 1e-15);
        assert!(s.varsigma > s.rho.powi(2) / 4.0);
        assert!(s.tm_smallness());
        let bad = ConstantInputs { k1: 0.0, ..c };
        assert!(compute_rho_lambda_star(&p, &bad).is_err());
    }

    #[test]
    fn h_examples() {
        let p = base();
        assert_eq!(h_eval(0.0, &p).unwrap(), 0.0);
        assert!((h_eval(1.0, &p).unwrap() - (2.0 * (E - 1.0) + 2.0 * E)).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 1..=1000 {
            let v = h_eval(i as f64 * 0.003, &p).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn t1_inverts_h() {
        let p = base();
        let h1 = h_eval(1.0, &p).unwrap();
        let t = solve_t1(h1 / 0.5, &p, 1e-13).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let t = solve_t1(10.0, &p, 1e-10).unwrap();
        assert!((h_eval(t, &p).unwrap() - 5.0).abs() <= 1e-10);
    }

    #[test]
    fn q_is_minimal_at_t1() {
        let p = base();
        for lam in [0.1, 1.0, 10.0] {
            let t1 = solve_t1(lam, &p, 1e-12).unwrap();
            let c = c_lambda(t1, lam, &p).unwrap();
            for i in 1..=100 {
                let f = i as f64 / 100.0;
                assert!(q_eval(t1 * f, lam, &p).unwrap() >= c - 1e-12);
                assert!(q_eval(t1 * (1.0 + 2.0 * f), lam, &p).unwrap() >= c - 1e-12);
            }
        }
    }

    #[test]
    fn eigenfunction_is_positive_with_unit_sup() {
        let mesh = Arc::new(RadialMesh::build(1.0, 100, 1.0, 2).unwrap());
        let (s, phi1) = principal_eigenvalue(&mesh, &EigenOptions::default()).unwrap();
        assert!((s - 5.7832).abs() < 0.01);
        assert!(phi1.min_interior() > 0.0);
        assert!((phi1.sup() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn certificate_flags_large_lambda_only() {
        let p = base();
        let small = nonexistence_from(1e-6, 1.0, 5.78, 0.1, &p).unwrap();
        assert!(!small.certified);
        let big = nonexistence_from(1e3, 1.0, 5.78, 0.1, &p).unwrap();
        assert!(big.certified);
    }
}
