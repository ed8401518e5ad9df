//! Solve the baseline problem at λ = λ*/100 and print the schedule.

use std::sync::Arc;

use nlap_galerkin::galerkin::{solve_pd, Certification, PdProblem, Schedule, SolveOptions};
use nlap_galerkin::thresholds::{compute_rho_lambda_star, estimate_constants};
use nlap_galerkin::*;

fn main() -> Result<()> {
    let mesh = Arc::new(RadialMesh::build(8.0, 1000, 1.0, 2)?);
    let weight = Weight::exponential(1.0);
    let base = ProblemParams::baseline();
    let est = estimate_constants(&base, &weight, mesh.clone(), 10.0, 100, 0)?;
    let lambda = 0.01 * compute_rho_lambda_star(&base, &est.inputs)?.lambda_star;
    let params = base.with_lambda(lambda);
    let c = compute_rho_lambda_star(&params, &est.inputs)?;
    println!("lambda = {lambda:.4e}, rho = {:.4e}, varsigma = {:.4e}", c.rho, c.varsigma);

    let problem = PdProblem {
        mesh,
        nl: Nonlinearity::canonical(params),
        params,
        weight,
        cert: Certification { rho: c.rho, varsigma: c.varsigma },
    };
    let opts = SolveOptions { hints: vec![est.k1_maximizer], ..Default::default() };
    let pd = solve_pd(&problem, &Schedule::default(), None, &opts)?;
    for (s, d) in pd.steps.iter().zip(std::iter::once(&f64::NAN).chain(&pd.trace)) {
        println!("k = {:>6}  n = {:>20?}  residual {:.2e}  cauchy {:.2e}", s.k, s.n, s.residual, d);
    }
    let r = &pd.report;
    println!("final: |u|_W = {:.4e}, sup u = {:.4e}, min u = {:.3e}", r.w1n, r.sup, r.positivity_min);
    println!("bound rho_tilde = {:.4e}", c.rho_tilde(2, params.q, lambda));
    Ok(())
}
