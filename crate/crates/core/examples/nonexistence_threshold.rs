//! Large-λ nonexistence: C_Λ = min Q against σ₁ + δ + 1 on B_R.

use std::sync::Arc;

use nlap_galerkin::thresholds::{nonexistence_from, principal_eigenvalue, EigenOptions};
use nlap_galerkin::*;

fn main() -> Result<()> {
    let params = ProblemParams::baseline();
    let weight = Weight::exponential(1.0);
    let mesh = Arc::new(RadialMesh::build(1.0, 400, 1.0, 2)?);
    let (sigma1, _) = principal_eigenvalue(&mesh, &EigenOptions::default())?;
    let a_r = weight.inf_on_ball(1.0, &mesh);
    println!("sigma1(B_1) = {sigma1:.6}, inf a on B_1 = {a_r:.6}");
    for e in 0..8 {
        let lambda = 10f64.powi(e);
        let r = nonexistence_from(lambda, a_r, sigma1, 0.1, &params)?;
        println!("lambda {lambda:>9.1e}  t1 {:.4e}  C_Lambda {:>10.4}  certified {}", r.t1, r.c_lambda, r.certified);
    }
    Ok(())
}
