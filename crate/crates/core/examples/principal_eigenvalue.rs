//! σ₁ of −Δ_N on balls and its R^{−N} scaling.

use std::sync::Arc;

use nlap_galerkin::thresholds::{principal_eigenvalue, EigenOptions};
use nlap_galerkin::*;

fn main() -> Result<()> {
    for n in [2, 3] {
        for r in [0.5, 1.0, 2.0] {
            let mesh = Arc::new(RadialMesh::build(r, 400, 1.0, n)?);
            let (s, phi1) = principal_eigenvalue(&mesh, &EigenOptions::default())?;
            println!("N = {n}, R = {r}: sigma1 = {s:.6}, sigma1 R^N = {:.6}, phi1(R/2) = {:.4}", s * r.powi(n as i32), phi1.eval(r / 2.0));
        }
    }
    Ok(())
}
