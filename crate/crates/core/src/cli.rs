//! Subcommand drivers behind the `nlap-galerkin` binary.
//!
//! Each command reads a [`RunConfig`], writes its CSV and text artifacts into
//! the output directory and returns a short `key=value` summary. Failures are
//! mapped to exit codes by [`report::exit_code`] and leave an
//! `error_record.txt` behind.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::apriori::{build_ledger, AuxConstants, MoserLedger};
use crate::config::{LambdaSpec, RunConfig};
use crate::error::{Error, Result};
use crate::galerkin::{ball_exhaustion, solve_pd, Certification, PdProblem, PdReport, SolveOptions, SOLVE_CSV_COLUMNS};
use crate::mesh::{GridFunction, RadialMesh};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind, ProblemParams};
use crate::report::{self, SweepRow};
use crate::thresholds::{
    compute_rho_lambda_star, estimate_constants, nonexistence_from, principal_eigenvalue, ConstantInputs,
    EigenOptions, SolverConstants, NONEXISTENCE_CSV_COLUMNS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    SweepLambda,
    Threshold,
    Exhaust,
    CheckFk,
    Eigen,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SweepLambda => "sweep-lambda",
            Command::Threshold => "threshold",
            Command::Exhaust => "exhaust",
            Command::CheckFk => "check-fk",
            Command::Eigen => "eigen",
        }
    }
}

/// Command-line overrides of config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// Loads the config, runs the command and returns the exit status. The
/// summary (or the error record) is also printed.
pub fn run(cmd: Command, config: &Path, ov: &Overrides) -> i32 {
    let loaded = RunConfig::load(config).and_then(|cfg| apply(cfg, ov));
    let out = match &loaded {
        Ok(cfg) => output_dir(cfg),
        Err(_) => ov.out.clone().unwrap_or_else(|| PathBuf::from("out")),
    };
    match loaded.and_then(|cfg| execute(cmd, &cfg, &out)) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            let rec = report::error_record(cmd.name(), &e);
            eprint!("{rec}");
            if let Err(w) = report::write(&out, "error_record.txt", &rec) {
                eprintln!("could not write error record: {w}");
            }
            report::exit_code(&e)
        }
    }
}

/// Applies `--seed`, `--tol` and `--out`.
pub fn apply(mut cfg: RunConfig, ov: &Overrides) -> Result<RunConfig> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(t) = ov.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("tol>0 violated (tol = {t})")));
        }
        cfg.tolerances.tol = t;
    }
    if let Some(o) = &ov.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<String> {
    match cmd {
        Command::Solve => cmd_solve(cfg, out),
        Command::SweepLambda => cmd_sweep_lambda(cfg, out),
        Command::Threshold => cmd_threshold(cfg, out),
        Command::Exhaust => cmd_exhaust(cfg, out),
        Command::CheckFk => cmd_check_fk(cfg, out),
        Command::Eigen => cmd_eigen(cfg, out),
    }
}

/// Mesh, constants and ledger shared by the solver commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub mesh: Arc<RadialMesh>,
    /// Constants at `λ = 0`; `λ*` and `ϱ` do not depend on `λ`.
    pub constants: SolverConstants,
    /// `K₁` maximizer, when the constants were estimated.
    pub hint: Option<GridFunction>,
    pub ledger: MoserLedger,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let m = &cfg.mesh;
        let n = cfg.params.n;
        let mesh = Arc::new(RadialMesh::build_with_rule(m.radius, m.elements, m.grading, n, m.quadrature_points)?);
        let big = m.largest_radius();
        let est_mesh = if big == m.radius {
            mesh.clone()
        } else {
            let elements = ((m.elements as f64) * big / m.radius).round() as usize;
            Arc::new(RadialMesh::build_with_rule(big, elements, 1.0, n, m.quadrature_points)?)
        };
        let ov = cfg.overrides;
        let (inputs, hint) = if ov.complete() {
            let inputs = ConstantInputs {
                k1: ov.k1.unwrap_or_default(),
                k2: ov.k2.unwrap_or_default(),
                k3: ov.k3.unwrap_or_default(),
                c_alpha_n: ov.c_alpha_n.unwrap_or_default(),
                c_star: ov.c_star.unwrap_or_default(),
            };
            (inputs, None)
        } else {
            let est =
                estimate_constants(&cfg.params, &cfg.weight, est_mesh, cfg.ledger.pbar_star, cfg.constant_samples, cfg.seed)?;
            let e = est.inputs;
            let inputs = ConstantInputs {
                k1: ov.k1.unwrap_or(e.k1),
                k2: ov.k2.unwrap_or(e.k2),
                k3: ov.k3.unwrap_or(e.k3),
                c_alpha_n: ov.c_alpha_n.unwrap_or(e.c_alpha_n),
                c_star: ov.c_star.unwrap_or(e.c_star),
            };
            (inputs, Some(est.k1_maximizer))
        };
        let constants = compute_rho_lambda_star(&cfg.params, &inputs)?;
        let nf = n as f64;
        let aux = AuxConstants {
            c_rho: cfg.ledger.c_rho.unwrap_or_else(|| constants.c_alpha_n.powf(cfg.params.n_prime())),
            lambda_star: constants.lambda_star,
            a_norm: cfg.weight.lebesgue_norm(n, nf / (nf - cfg.params.q))?,
            r_star: cfg.ledger.r_star,
        };
        let ledger = build_ledger(n, cfg.ledger.pbar_star, cfg.ledger.ptilde, constants.c_star, &aux)?;
        Ok(Self { cfg: cfg.clone(), mesh, constants, hint, ledger })
    }

    pub fn lambda(&self, spec: LambdaSpec) -> f64 {
        spec.resolve(self.constants.lambda_star)
    }

    pub fn params_at(&self, lambda: f64) -> ProblemParams {
        self.cfg.params.with_lambda(lambda)
    }

    /// Constants with `ς` evaluated at `λ`.
    pub fn constants_at(&self, lambda: f64) -> Result<SolverConstants> {
        compute_rho_lambda_star(&self.params_at(lambda), &self.constants.inputs())
    }

    pub fn problem(&self, lambda: f64) -> Result<PdProblem> {
        let params = self.params_at(lambda);
        let c = self.constants_at(lambda)?;
        Ok(PdProblem {
            mesh: self.mesh.clone(),
            nl: Nonlinearity::new(self.cfg.nonlinearity.clone(), params),
            params,
            weight: self.cfg.weight.clone(),
            cert: Certification { rho: c.rho, varsigma: c.varsigma },
        })
    }

    pub fn solve_options(&self, mesh: &Arc<RadialMesh>) -> SolveOptions {
        let t = &self.cfg.tolerances;
        SolveOptions {
            tol: t.tol,
            rel_tol: t.rel_tol,
            cert_random: t.certificate_samples,
            seed: self.cfg.seed,
            starts: t.starts,
            max_iter: t.max_iter,
            hints: self.hint.iter().map(|h| h.interpolate_onto(mesh.clone())).collect(),
        }
    }

    pub fn solve_at(&self, lambda: f64) -> Result<PdReport> {
        let pb = self.problem(lambda)?;
        solve_pd(&pb, &self.cfg.schedule, None, &self.solve_options(&self.mesh))
    }

    /// `ϱ̃` at `λ`.
    pub fn rho_tilde(&self, lambda: f64) -> f64 {
        self.constants.rho_tilde(self.cfg.params.n, self.cfg.params.q, lambda)
    }

    /// Constants, ledger and the `λ` in use, as `key=value` lines.
    pub fn dump(&self, lambda: f64) -> String {
        let mut s = report::key_values([
            ("lambda", lambda),
            ("lambda_fraction", lambda / self.constants.lambda_star),
            ("rho_tilde", self.rho_tilde(lambda)),
            ("varsigma_at_lambda", self.constants.varsigma_at(self.cfg.params.n, self.cfg.params.q, lambda)),
        ]);
        s.push_str(&self.constants.dump());
        s.push_str(&self.ledger.dump());
        s
    }
}

fn solve_columns() -> String {
    format!("{SOLVE_CSV_COLUMNS},rho_tilde,within_bound,sup_bound,sup_bound_ok")
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<String> {
    let ctx = Context::new(cfg)?;
    let lambda = ctx.lambda(cfg.lambda);
    report::write(out, "ledger.txt", &ctx.dump(lambda))?;
    let pd = ctx.solve_at(lambda)?;
    let r = &pd.report;
    let rho_tilde = ctx.rho_tilde(lambda);
    let sup_bound = ctx.ledger.sup_bound(r.w1n);
    let row = format!("{},{},{},{},{}", r.csv_row(), rho_tilde, r.w1n <= rho_tilde, sup_bound, r.sup <= sup_bound);
    report::write(out, "report.csv", &report::csv(&solve_columns(), [row]))?;
    report::write(out, "solution.csv", &r.solution.to_csv())?;
    let steps = pd.steps.iter().enumerate().map(|(i, s)| {
        let d = if i == 0 { f64::NAN } else { pd.trace[i - 1] };
        format!("{},{}", s.csv_row(), d)
    });
    report::write(out, "schedule.csv", &report::csv(&format!("{SOLVE_CSV_COLUMNS},cauchy_diff"), steps))?;
    Ok(report::key_values([
        ("command", "solve".to_string()),
        ("lambda", lambda.to_string()),
        ("lambda_star", ctx.constants.lambda_star.to_string()),
        ("residual", r.residual.to_string()),
        ("w1n", r.w1n.to_string()),
        ("rho_tilde", rho_tilde.to_string()),
        ("sup", r.sup.to_string()),
        ("positivity_min", r.positivity_min.to_string()),
    ]))
}

/// Rows of a λ sweep, in input order; a failing λ yields a row with
/// `status` set to the error kind.
pub fn sweep_rows(ctx: &Context, lambdas: &[f64]) -> Vec<SweepRow> {
    let n = ctx.cfg.params.n;
    let q = ctx.cfg.params.q;
    let theta = ctx.ledger.theta_exponent();
    let mut fit: Option<f64> = None;
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let norm_bound = ctx.constants.decay_radius(n, q, lambda);
        let frac = lambda / ctx.constants.lambda_star;
        match ctx.solve_at(lambda) {
            Ok(pd) => {
                let r = pd.report;
                // C̃ from the first (largest) λ that solved
                let c_tilde = *fit.get_or_insert(r.sup / r.w1n.powf(theta));
                let sup_envelope = c_tilde * r.w1n.powf(theta);
                let sup_bound = ctx.ledger.sup_bound(r.w1n);
                rows.push(SweepRow {
                    lambda,
                    lambda_fraction: frac,
                    w1n: r.w1n,
                    sup: r.sup,
                    residual: r.residual,
                    positivity_min: r.positivity_min,
                    norm_bound,
                    norm_ok: r.w1n <= norm_bound + 1e-6,
                    sup_envelope,
                    sup_ok: r.sup <= sup_envelope * (1.0 + 1e-12),
                    sup_bound,
                    sup_bound_ok: r.sup <= sup_bound,
                    status: "ok".into(),
                });
            }
            Err(e) => rows.push(SweepRow::failed(lambda, frac, norm_bound, report::error_kind(&e).into())),
        }
    }
    rows
}

pub fn cmd_sweep_lambda(cfg: &RunConfig, out: &Path) -> Result<String> {
    let ctx = Context::new(cfg)?;
    let lambdas: Vec<f64> = cfg.sweep.iter().map(|s| ctx.lambda(*s)).collect();
    let star = ctx.constants.lambda_star;
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && **l < star)) {
        return Err(Error::Config(format!("sweep lambda within (0, lambda_star) violated (lambda = {bad}, lambda_star = {star})")));
    }
    report::write(out, "ledger.txt", &ctx.dump(lambdas[0]))?;
    let rows = sweep_rows(&ctx, &lambdas);
    report::write(out, "sweep.csv", &report::csv(report::SWEEP_CSV_COLUMNS, rows.iter().map(SweepRow::csv_row)))?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let norm_viol = rows.iter().filter(|r| r.status == "ok" && !r.norm_ok).count();
    let sup_viol = rows.iter().filter(|r| r.status == "ok" && !r.sup_ok).count();
    Ok(report::key_values([
        ("command", "sweep-lambda".to_string()),
        ("rows", rows.len().to_string()),
        ("failed_rows", failed.to_string()),
        ("norm_violations", norm_viol.to_string()),
        ("sup_violations", sup_viol.to_string()),
    ]))
}

pub fn cmd_threshold(cfg: &RunConfig, out: &Path) -> Result<String> {
    if cfg.nonlinearity != NonlinearityKind::Canonical {
        return Err(Error::Config("threshold needs nonlinearity = \"canonical\"".into()));
    }
    let n = cfg.params.n;
    let radius = cfg.mesh.radius;
    let eig_mesh = Arc::new(RadialMesh::build(radius, cfg.threshold.eigen_elements, 1.0, n)?);
    let (sigma1, _) = principal_eigenvalue(&eig_mesh, &EigenOptions { seed: cfg.seed, ..EigenOptions::default() })?;
    let a_r = cfg.weight.inf_on_ball(radius, &eig_mesh);
    let mut rows = Vec::new();
    for lambda in cfg.threshold.grid() {
        rows.push(nonexistence_from(lambda, a_r, sigma1, cfg.threshold.delta, &cfg.params)?);
    }
    report::write(out, "threshold.csv", &report::csv(NONEXISTENCE_CSV_COLUMNS, rows.iter().map(|r| r.csv_row())))?;
    let first = rows.iter().find(|r| r.certified).map_or_else(|| "none".to_string(), |r| r.lambda.to_string());
    let summary = report::key_values([
        ("command", "threshold".to_string()),
        ("sigma1", sigma1.to_string()),
        ("a_R", a_r.to_string()),
        ("delta", cfg.threshold.delta.to_string()),
        ("first_certified_lambda", first),
    ]);
    report::write(out, "threshold_summary.txt", &summary)?;
    Ok(summary)
}

pub fn cmd_exhaust(cfg: &RunConfig, out: &Path) -> Result<String> {
    if cfg.mesh.radii.is_empty() {
        return Err(Error::Config("exhaust needs mesh radii".into()));
    }
    let ctx = Context::new(cfg)?;
    let lambda = ctx.lambda(cfg.lambda);
    report::write(out, "ledger.txt", &ctx.dump(lambda))?;
    let pb = ctx.problem(lambda)?;
    let rt = ctx.rho_tilde(lambda);
    let rep = ball_exhaustion(&pb, &cfg.mesh.radii, &cfg.schedule, rt, &ctx.solve_options(&ctx.mesh))?;
    report::write(out, "exhaust.csv", &rep.to_csv())?;
    report::write(out, "annulus.csv", &rep.annulus_csv())?;
    let last = &rep.balls.last().expect("nonempty").pd.report;
    report::write(out, "solution.csv", &last.solution.to_csv())?;
    Ok(report::key_values([
        ("command", "exhaust".to_string()),
        ("lambda", lambda.to_string()),
        ("balls", rep.balls.len().to_string()),
        ("rho_tilde", rt.to_string()),
        ("last_annulus_sup", rep.annulus_sup.last().map_or(f64::NAN, |a| a.1).to_string()),
    ]))
}

/// `max |f_k − f|` over `s = i·step`, `|s| <= s_max`, and the same divided by
/// `max |f|` on that grid.
pub fn strauss_uniform_error(nl: &Nonlinearity, k: u64, s_max: f64, step: f64) -> Result<(f64, f64)> {
    let m = (s_max / step).round() as i64;
    let (mut abs, mut fmax) = (0.0f64, 0.0f64);
    for i in -m..=m {
        let s = i as f64 * step;
        let f = nl.eval(s)?;
        abs = abs.max((nl.strauss(k, s)? - f).abs());
        fmax = fmax.max(f.abs());
    }
    Ok((abs, if fmax > 0.0 { abs / fmax } else { abs }))
}

/// Number of grid points where `s f_k(s)` exceeds the envelope, and the
/// number checked.
pub fn envelope_violations(nl: &Nonlinearity, k: u64, s_max: f64, step: f64) -> Result<(usize, usize)> {
    let m = (s_max / step).round() as i64;
    let mut bad = 0;
    for i in -m..=m {
        let s = i as f64 * step;
        let sf = s * nl.strauss(k, s)?;
        if sf < 0.0 {
            bad += 1;
            continue;
        }
        if sf == 0.0 {
            continue;
        }
        let env = nl.strauss_envelope(k, s)?;
        if sf.ln() > env.ln_value + 1e-12 {
            bad += 1;
        }
    }
    Ok((bad, (2 * m + 1) as usize))
}

pub fn cmd_check_fk(cfg: &RunConfig, out: &Path) -> Result<String> {
    let nl = Nonlinearity::new(cfg.nonlinearity.clone(), cfg.params);
    let c = cfg.check_fk;
    let mut ks: Vec<u64> = [1u64, 10, 100, 1000].into_iter().filter(|k| *k < c.k_uniform).collect();
    ks.push(c.k_uniform);
    let mut urows = Vec::new();
    let mut last = (0.0, 0.0);
    for &k in &ks {
        last = strauss_uniform_error(&nl, k, c.s_uniform, c.uniform_step)?;
        urows.push(format!("{k},{},{},{}", c.s_uniform, last.0, last.1));
    }
    report::write(out, "fk_uniform.csv", &report::csv(report::FK_UNIFORM_COLUMNS, urows))?;
    let mut erows = Vec::new();
    let mut total = 0;
    for k in 1..=c.k_max {
        let (bad, checked) = envelope_violations(&nl, k, c.s_max, c.step)?;
        total += bad;
        erows.push(format!("{k},{checked},{bad}"));
    }
    report::write(out, "fk_envelope.csv", &report::csv(report::FK_ENVELOPE_COLUMNS, erows))?;
    let m = (c.s_max / c.step).round() as i64;
    let grid: Vec<f64> = (-m..=m).map(|i| i as f64 * c.step).collect();
    let growth = nl.check_growth(&grid);
    let summary = report::key_values([
        ("command", "check-fk".to_string()),
        ("k_uniform", c.k_uniform.to_string()),
        ("max_abs_err", last.0.to_string()),
        ("max_rel_err", last.1.to_string()),
        ("envelope_violations", total.to_string()),
        ("growth_checked", growth.checked.to_string()),
        ("growth_violations", growth.violations.len().to_string()),
    ]);
    report::write(out, "check_fk_summary.txt", &summary)?;
    Ok(summary)
}

pub fn cmd_eigen(cfg: &RunConfig, out: &Path) -> Result<String> {
    let n = cfg.params.n;
    let radius = cfg.mesh.radius;
    let elements = cfg.threshold.eigen_elements;
    let mesh = Arc::new(RadialMesh::build(radius, elements, 1.0, n)?);
    let (sigma1, phi) = principal_eigenvalue(&mesh, &EigenOptions { seed: cfg.seed, ..EigenOptions::default() })?;
    let row = format!("{n},{radius},{elements},{sigma1}");
    report::write(out, "eigen.csv", &report::csv(report::EIGEN_COLUMNS, [row]))?;
    report::write(out, "eigenfunction.csv", &phi.to_csv())?;
    Ok(report::key_values([("command", "eigen".to_string()), ("sigma1", sigma1.to_string())]))
}
