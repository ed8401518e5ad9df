//! Solutions on growing balls and their decay in the far field.

use std::sync::Arc;

use nlap_galerkin::galerkin::{ball_exhaustion, Certification, PdProblem, Schedule, SolveOptions};
use nlap_galerkin::thresholds::{compute_rho_lambda_star, estimate_constants};
use nlap_galerkin::*;

fn main() -> Result<()> {
    let radii = [3.0, 6.0, 12.0];
    let mesh = Arc::new(RadialMesh::build(12.0, 600, 1.0, 2)?);
    let weight = Weight::exponential(1.0);
    let base = ProblemParams::baseline();
    let est = estimate_constants(&base, &weight, mesh.clone(), 10.0, 50, 0)?;
    let lambda = 0.01 * compute_rho_lambda_star(&base, &est.inputs)?.lambda_star;
    let params = base.with_lambda(lambda);
    let c = compute_rho_lambda_star(&params, &est.inputs)?;
    let problem = PdProblem {
        mesh,
        nl: Nonlinearity::canonical(params),
        params,
        weight,
        cert: Certification { rho: c.rho, varsigma: c.varsigma },
    };
    let opts = SolveOptions { hints: vec![est.k1_maximizer], ..Default::default() };
    let ex = ball_exhaustion(&problem, &radii, &Schedule::default(), c.rho_tilde(2, params.q, lambda), &opts)?;
    for b in &ex.balls {
        println!("R = {:>5}  |u|_W = {:.4e}  within bound {}  window diff {:?}", b.radius, b.pd.report.w1n, b.within_bound, b.window_diff);
    }
    for (m, s) in &ex.annulus_sup {
        println!("sup on [{m}, {}] = {s:.3e}", m + 1);
    }
    Ok(())
}
