//! Drivers: one regularized system, the `(k, n)` schedule, the sublinear
//! comparison problem and ball exhaustion.

use std::fmt::Write as _;
use std::sync::Arc;

use super::GalerkinField;
use super::GalerkinState;
use crate::brouwer::{certify_boundary, euclid, find_zero, CertifyOptions, ZeroOptions, ZeroReport};
use crate::error::{Error, Result};
use crate::mesh::{GridFunction, RadialMesh};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind, ProblemParams};
use crate::weights::Weight;

/// Sphere radius and pairing level for the boundary certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub rho: f64,
    pub varsigma: f64,
}

impl Certification {
    /// Pairings must stay above `ς/2`.
    pub fn threshold(&self) -> f64 {
        self.varsigma / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Required Euclidean residual of the Galerkin map.
    pub tol: f64,
    /// Newton first aims for this fraction of `|J ξ|₂` at the warm starts (and at most `tol`).
    pub rel_tol: f64,
    /// Certificate samples on top of the `2m` coordinate ones.
    pub cert_random: usize,
    pub seed: u64,
    pub starts: usize,
    pub max_iter: usize,
    /// Extra certificate directions, interpolated onto each mesh.
    pub hints: Vec<GridFunction>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, rel_tol: 1e-11, cert_random: 64, seed: 0, starts: 4, max_iter: 60, hints: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub residual: f64,
    pub w1n: f64,
    pub sup: f64,
    pub iterations: usize,
    /// Smallest sampled pairing; NaN when no certificate was run.
    pub certificate_min: f64,
    pub positivity_min: f64,
    pub lambda: f64,
    pub radius: f64,
    pub k: u64,
    pub n: Option<u64>,
    /// Principal-part regularization of the accepted solve.
    pub eps: f64,
}

pub const SOLVE_CSV_COLUMNS: &str = "lambda,R,k,n,residual,w1n,sup,positivity_min,certificate_min";

impl SolveReport {
    pub fn csv_row(&self) -> String {
        let n = self.n.map_or_else(|| "inf".to_string(), |n| n.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.lambda,
            self.radius,
            self.k,
            n,
            self.residual,
            self.w1n,
            self.sup,
            self.positivity_min,
            self.certificate_min
        )
    }

    fn from_zero(state: &GalerkinState, z: ZeroReport, eps: f64, cert_min: f64) -> Self {
        let solution = state.to_grid(&z.point);
        Self {
            w1n: solution.w1n_norm(),
            sup: solution.sup(),
            positivity_min: solution.min_interior(),
            solution,
            residual: z.residual,
            iterations: z.iterations,
            certificate_min: cert_min,
            lambda: state.params.lambda,
            radius: state.mesh.radius(),
            k: state.strauss_k,
            n: state.reg_n,
            eps,
        }
    }
}

/// Smallest constant `U` on a log grid with
/// `U^{N−1} − λ sup a U^{q−1} − f_k(U) − sup φ/n >= 0`.
pub fn constant_supersolution(state: &GalerkinState) -> Option<f64> {
    let p = &state.params;
    let nf = p.n as f64;
    let la = p.lambda * state.weight.sup();
    let forcing = state.reg_n.map_or(0.0, |n| state.phi_aux.sup() / n as f64);
    let per_decade = 40;
    for i in 0..=(20 * per_decade) {
        let u = 10f64.powf(-18.0 + i as f64 / per_decade as f64);
        let fk = match state.nl.strauss(state.strauss_k, u) {
            Ok(v) => v,
            Err(_) => return None,
        };
        let g = u.powf(nf - 1.0) - la * u.powf(p.q - 1.0) - fk - forcing;
        if g >= 0.0 {
            return Some(u);
        }
    }
    None
}

fn jacobian_scale(state: &GalerkinState, xi: &[f64]) -> f64 {
    let Ok((_, sub, diag, sup)) = state.assemble_with_jacobian(xi) else {
        return 0.0;
    };
    let m = xi.len();
    let mut acc = 0.0;
    for i in 0..m {
        let mut v = diag[i] * xi[i];
        if i > 0 {
            v += sub[i - 1] * xi[i - 1];
        }
        if i + 1 < m {
            v += sup[i] * xi[i + 1];
        }
        acc += v * v;
    }
    acc.sqrt()
}

/// `find_zero` aiming for a residual relative to the size of `J ξ` first, then
/// for the absolute tolerance.
fn zero_search(
    state: &GalerkinState,
    field: &GalerkinField,
    radius: f64,
    warm: &[Vec<f64>],
    warm_only: bool,
    opts: &SolveOptions,
) -> Result<ZeroReport> {
    // the smallest scale belongs to the start closest to the tiny-amplitude solutions
    let scale = warm.iter().map(|w| jacobian_scale(state, w)).filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let scale = if scale.is_finite() { scale } else { 0.0 };
    let tight = (opts.rel_tol * scale).min(opts.tol).max(f64::MIN_POSITIVE);
    let mut zopts = ZeroOptions {
        tol: tight,
        max_iter: opts.max_iter,
        starts: opts.starts,
        warm_starts: warm.to_vec(),
        warm_only: true,
        seed: opts.seed,
        ..ZeroOptions::default()
    };
    // warm starts first: the origin has a tiny residual whenever u is tiny
    let mut last = Err(Error::BudgetExhausted { best_residual: f64::INFINITY });
    let passes: &[bool] = if warm_only || warm.is_empty() { &[warm_only] } else { &[true, false] };
    for &only in passes {
        zopts.warm_only = only;
        zopts.tol = tight;
        last = find_zero(field, radius, &zopts);
        match &last {
            Ok(_) => return last,
            Err(Error::BudgetExhausted { best_residual }) if *best_residual <= opts.tol => {
                // rounding floor above the relative target: settle for the best reachable residual
                zopts.tol = (2.0 * best_residual).min(opts.tol);
                last = find_zero(field, radius, &zopts);
                if last.is_ok() {
                    return last;
                }
            }
            Err(Error::BudgetExhausted { .. }) => {}
            Err(_) => return last,
        }
    }
    last
}

/// Continuation stages for the principal-part regularization.
pub const EPS_STAGES: [f64; 4] = [1e-2, 1e-4, 1e-6, 0.0];

/// Zero search with `ε`-continuation when `N > 2`. If the final `ε = 0` stage
/// fails, the `ε = 1e−6` zero is returned with its `ε`.
fn continuation(
    state: &GalerkinState,
    hints: &[Vec<f64>],
    radius: f64,
    warm: Vec<Vec<f64>>,
    warm_only: bool,
    opts: &SolveOptions,
) -> Result<(ZeroReport, f64)> {
    if state.params.n == 2 {
        let field = GalerkinField { state, hints: hints.to_vec() };
        return zero_search(state, &field, radius, &warm, warm_only, opts).map(|z| (z, 0.0));
    }
    let mut last: Option<(ZeroReport, f64)> = None;
    for (i, &eps) in EPS_STAGES.iter().enumerate() {
        let mut st = state.clone();
        st.eps = eps;
        let field = GalerkinField { state: &st, hints: hints.to_vec() };
        let starts = match &last {
            Some((z, _)) => {
                let mut s = vec![z.point.clone()];
                s.extend(warm.iter().cloned());
                s
            }
            None => warm.clone(),
        };
        match zero_search(&st, &field, radius, &starts, warm_only || i > 0, opts) {
            Ok(z) => last = Some((z, eps)),
            Err(e) => {
                if eps == 0.0 {
                    if let Some(prev) = last {
                        return Ok(prev);
                    }
                }
                return Err(e);
            }
        }
    }
    Ok(last.expect("at least one stage"))
}

fn hint_vectors(state: &GalerkinState, hints: &[GridFunction]) -> Vec<Vec<f64>> {
    hints
        .iter()
        .map(|h| GalerkinState::to_dofs(&h.interpolate_onto(state.mesh.clone())))
        .filter(|v| v.iter().any(|x| *x != 0.0))
        .collect()
}

/// Certifies the sphere `|ξ|_m = ϱ` and solves the regularized system inside it.
pub fn solve_pdn(
    state: &GalerkinState,
    cert: &Certification,
    warm: Option<&GridFunction>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let m = state.dofs();
    let hints = hint_vectors(state, &opts.hints);
    let field = GalerkinField { state, hints: hints.clone() };
    let threshold = cert.threshold();
    let copts = CertifyOptions {
        samples: 2 * m + hints.len() + opts.cert_random,
        min_random: opts.cert_random,
        threshold,
        seed: opts.seed,
    };
    let c = certify_boundary(&field, cert.rho, &copts)?;
    if !(threshold > 0.0) || !c.passed() {
        return Err(Error::CertificateFailed { min: c.min, threshold });
    }
    let mut starts = Vec::new();
    if let Some(w) = warm {
        starts.push(GalerkinState::to_dofs(&w.interpolate_onto(state.mesh.clone())));
    }
    if let Some(u) = constant_supersolution(state) {
        starts.push(vec![u; m]);
    }
    let (z, eps) = continuation(state, &hints, cert.rho, starts, false, opts)?;
    Ok(SolveReport::from_zero(state, z, eps, c.min))
}

/// The `(k, n)` schedule of the limit passages.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Fixed steps, solved in order with warm starts.
    pub steps: Vec<(u64, u64)>,
    /// Keep multiplying `n` by 10 (with the last `k`) until convergence.
    pub extend: bool,
    pub n_max: u64,
    /// Relative Cauchy tolerance, required on two consecutive steps.
    pub cauchy_tol: f64,
    /// Finish with the `φ/n` term dropped.
    pub unregularized_final: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            steps: vec![(10, 10), (100, 100), (1000, 1000), (10_000, 10_000)],
            extend: true,
            n_max: 1_000_000_000_000_000_000,
            cauchy_tol: 1e-6,
            unregularized_final: true,
        }
    }
}

/// Problem data shared by all schedule steps on one ball.
#[derive(Debug, Clone)]
pub struct PdProblem {
    pub mesh: Arc<RadialMesh>,
    pub nl: Nonlinearity,
    pub params: ProblemParams,
    pub weight: Weight,
    pub cert: Certification,
}

impl PdProblem {
    pub fn state(&self, reg_n: Option<u64>, k: u64) -> Result<GalerkinState> {
        GalerkinState::new(self.mesh.clone(), self.nl.clone(), self.params, self.weight.clone(), reg_n, k)
    }
}

#[derive(Debug, Clone)]
pub struct PdReport {
    /// Final solution; from the unregularized solve when enabled.
    pub report: SolveReport,
    pub steps: Vec<SolveReport>,
    /// Relative `W^{1,N}` differences between consecutive steps.
    pub trace: Vec<f64>,
}

fn relative_difference(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    let d = a.sub(b)?.w1n_norm();
    let s = a.w1n_norm().max(b.w1n_norm());
    Ok(if s > 0.0 { d / s } else { d })
}

/// Runs the schedule until the relative Cauchy difference stays below
/// `cauchy_tol` on two consecutive steps.
pub fn solve_pd(
    problem: &PdProblem,
    schedule: &Schedule,
    warm: Option<&GridFunction>,
    opts: &SolveOptions,
) -> Result<PdReport> {
    if schedule.steps.is_empty() {
        return Err(Error::Parameter("schedule needs at least one (k, n) step".into()));
    }
    let mut steps: Vec<SolveReport> = Vec::new();
    let mut trace = Vec::new();
    let mut below = 0;
    let mut plan = schedule.steps.clone().into_iter();
    let (mut k, mut n) = schedule.steps[0];
    loop {
        let next = match plan.next() {
            Some(step) => Some(step),
            None if schedule.extend && below < 2 => n.checked_mul(10).filter(|v| *v <= schedule.n_max).map(|v| (k, v)),
            None => None,
        };
        let Some((kk, nn)) = next else { break };
        k = kk;
        n = nn;
        let state = problem.state(Some(n), k)?;
        let start = steps.last().map(|s| &s.solution).or(warm);
        let rep = solve_pdn(&state, &problem.cert, start, opts)?;
        if let Some(prev) = steps.last() {
            let d = relative_difference(&rep.solution, &prev.solution)?;
            trace.push(d);
            below = if d < schedule.cauchy_tol { below + 1 } else { 0 };
        }
        steps.push(rep);
    }
    if below < 2 {
        return Err(Error::ScheduleNotConverged { trace });
    }
    let last = steps.last().expect("nonempty").clone();
    let report = if schedule.unregularized_final {
        let state = problem.state(None, k)?;
        let hints = hint_vectors(&state, &opts.hints);
        let start = vec![GalerkinState::to_dofs(&last.solution)];
        let (z, eps) = continuation(&state, &hints, problem.cert.rho, start, true, opts)?;
        SolveReport::from_zero(&state, z, eps, last.certificate_min)
    } else {
        last
    };
    Ok(PdReport { report, steps, trace })
}

/// Positive solution of `−Δ_N u + u^{N−1} = b(r) u^{q−1}` on the mesh ball,
/// started from the constant `(sup b)^{1/(N−q)}`.
pub fn solve_weighted_sublinear(
    weight: &Weight,
    mesh: Arc<RadialMesh>,
    q: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let n = mesh.dim();
    let nf = n as f64;
    if !(q > 1.0 && q < nf) {
        return Err(Error::Parameter(format!("1<q<N violated (q = {q}, N = {n})")));
    }
    let params = ProblemParams { n, p: nf + 1.0, q, alpha: 1.0, a1: 1.0, lambda: 1.0, weight_gamma: 2.0 };
    let nl = Nonlinearity::new(NonlinearityKind::Zero, params);
    let state = GalerkinState::new(mesh, nl, params, weight.clone(), None, 1)?;
    let u0 = weight.sup().powf(1.0 / (nf - q));
    let start = vec![u0; state.dofs()];
    // the zero is bounded by the constant supersolution, so any generous radius works
    let radius = 10.0 * state.norm(&start) + 1.0;
    let (z, eps) = continuation(&state, &[], radius, vec![start], true, opts)?;
    Ok(SolveReport::from_zero(&state, z, eps, f64::NAN))
}

/// Constant-coefficient sublinear problem `−Δ_N u + u^{N−1} = b u^{q−1}`.
pub fn solve_sublinear(b: f64, mesh: Arc<RadialMesh>, q: f64, tol: f64) -> Result<GridFunction> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Parameter(format!("b>0 violated (b = {b})")));
    }
    let radius = mesh.radius();
    let w = Weight::constant_on_ball(radius * 2.0 + 1.0).with_amplitude(b);
    let opts = SolveOptions { tol, ..SolveOptions::default() };
    Ok(solve_weighted_sublinear(&w, mesh, q, &opts)?.solution)
}

/// `u₂ >= u₁ − tol` at every node.
pub fn comparison_check(u1: &GridFunction, u2: &GridFunction, tol: f64) -> Result<bool> {
    u1.check_same_mesh(u2)?;
    Ok(u1.values().iter().zip(u2.values()).all(|(a, b)| *b >= *a - tol))
}

#[derive(Debug, Clone)]
pub struct BallRecord {
    pub radius: f64,
    pub pd: PdReport,
    /// `‖u‖_{W^{1,N}} <= ϱ̃`.
    pub within_bound: bool,
    /// `W^{1,N}(B_{R₀})` distance to the previous ball's solution.
    pub window_diff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExhaustionReport {
    pub balls: Vec<BallRecord>,
    pub rho_tilde: f64,
    pub window: f64,
    /// `(m, max_{m <= r <= m+1} u)` on the largest ball.
    pub annulus_sup: Vec<(usize, f64)>,
}

impl ExhaustionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", crate::CSV_HEADER);
        let _ = writeln!(out, "{SOLVE_CSV_COLUMNS},rho_tilde,within_bound,window_diff");
        for b in &self.balls {
            let wd = b.window_diff.map_or_else(|| "nan".to_string(), |v| v.to_string());
            let _ = writeln!(out, "{},{},{},{}", b.pd.report.csv_row(), self.rho_tilde, b.within_bound, wd);
        }
        out
    }

    pub fn annulus_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", crate::CSV_HEADER);
        let _ = writeln!(out, "m,annulus_sup");
        for (m, s) in &self.annulus_sup {
            let _ = writeln!(out, "{m},{s}");
        }
        out
    }
}

/// Solves on `B_R` for each radius, with the element size of `base_mesh`
/// (uniform meshes) and warm starts from the previous ball.
pub fn ball_exhaustion(
    problem: &PdProblem,
    r_list: &[f64],
    schedule: &Schedule,
    rho_tilde: f64,
    opts: &SolveOptions,
) -> Result<ExhaustionReport> {
    if r_list.is_empty() || r_list.windows(2).any(|w| !(w[1] > w[0])) || !(r_list[0] > 0.0) {
        return Err(Error::Parameter("R_list must be positive and strictly increasing".into()));
    }
    let base = &problem.mesh;
    let h = base.radius() / base.elements() as f64;
    let n = base.dim();
    let window = r_list[0];
    let mut balls: Vec<BallRecord> = Vec::new();
    let mut prev: Option<GridFunction> = None;
    for &radius in r_list {
        let m = ((radius / h).round() as usize).max(2);
        let mesh = Arc::new(RadialMesh::build_with_rule(radius, m, 1.0, n, base.rule().len())?);
        let pb = PdProblem { mesh: mesh.clone(), ..problem.clone() };
        let warm = prev.as_ref().map(|u| u.interpolate_onto(mesh.clone()));
        let pd = if problem.params.lambda == 0.0 && problem.nl.is_zero() {
            zero_pd(&pb)?
        } else {
            solve_pd(&pb, schedule, warm.as_ref(), opts)?
        };
        let u = &pd.report.solution;
        let window_diff = match &prev {
            Some(p) => Some(u.sub(&p.interpolate_onto(mesh.clone()))?.w1n_norm_on(0.0, window)),
            None => None,
        };
        let within_bound = pd.report.w1n <= rho_tilde;
        prev = Some(u.clone());
        balls.push(BallRecord { radius, pd, within_bound, window_diff });
    }
    let last = &balls.last().expect("nonempty").pd.report.solution;
    let r_max = last.mesh().radius();
    let annulus_sup = (0..r_max.floor() as usize)
        .map(|m| (m, last.sup_on(m as f64, (m + 1) as f64)))
        .collect();
    Ok(ExhaustionReport { balls, rho_tilde, window, annulus_sup })
}

/// With `λ = 0` and `f ≡ 0` the unregularized problem is solved by `u ≡ 0`.
fn zero_pd(problem: &PdProblem) -> Result<PdReport> {
    let state = problem.state(None, 1)?;
    let xi = vec![0.0; state.dofs()];
    let f = state.assemble_f(&xi)?;
    let z = ZeroReport { residual: euclid(&f), point: xi, iterations: 0, start: 0 };
    let report = SolveReport::from_zero(&state, z, 0.0, f64::NAN);
    Ok(PdReport { report, steps: Vec::new(), trace: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_examples() {
        let mesh = Arc::new(RadialMesh::build(1.0, 10, 1.0, 2).unwrap());
        let u = GridFunction::from_fn(mesh.clone(), |r| 1.0 - r);
        assert!(comparison_check(&u, &u, 0.0).unwrap());
        let v = GridFunction::from_fn(mesh.clone(), |r| 2.0 - r);
        assert!(!comparison_check(&v, &u, 1e-8).unwrap());
        let other = Arc::new(RadialMesh::build(1.0, 11, 1.0, 2).unwrap());
        let w = GridFunction::zeros(other);
        assert!(matches!(comparison_check(&u, &w, 0.0), Err(Error::MeshMismatch)));
    }

    #[test]
    fn sublinear_profile_peaks_at_origin() {
        let mesh = Arc::new(RadialMesh::build(1.0, 200, 1.0, 2).unwrap());
        let u = solve_sublinear(1.0, mesh, 1.5, 1e-10).unwrap();
        let v = u.values();
        assert!(v[..v.len() - 1].iter().all(|x| *x > 0.0));
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn sublinear_scaling_law() {
        // c·u solves the problem with b' = c^{N−q} b
        let mesh = Arc::new(RadialMesh::build(2.0, 200, 1.0, 2).unwrap());
        let u1 = solve_sublinear(1.0, mesh.clone(), 1.5, 1e-12).unwrap();
        let c: f64 = 3.0;
        let uc = solve_sublinear(c.powf(0.5), mesh, 1.5, 1e-12).unwrap();
        let diff = uc.sub(&u1.scaled(c)).unwrap().sup();
        assert!(diff < 1e-8 * uc.sup(), "{diff}");
    }

    #[test]
    fn sublinear_n3_uses_continuation() {
        let mesh = Arc::new(RadialMesh::build(1.0, 100, 1.0, 3).unwrap());
        let u = solve_sublinear(1.0, mesh, 2.0, 1e-9).unwrap();
        assert!(u.min_interior() > 0.0);
    }

    #[test]
    fn supersolution_is_nonnegative_for_residual() {
        let mesh = Arc::new(RadialMesh::build(4.0, 100, 1.0, 2).unwrap());
        let p = ProblemParams::baseline().with_lambda(1e-3);
        let st = GalerkinState::new(mesh, Nonlinearity::canonical(p), p, Weight::exponential(1.0), Some(100), 100)
            .unwrap();
        let u = constant_supersolution(&st).unwrap();
        assert!(u > 0.0 && u < 1.0);
    }
}
