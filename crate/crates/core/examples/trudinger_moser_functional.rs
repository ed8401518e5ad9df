//! ∫ φ_N(α|u|^{N'}) for scaled profiles around the critical norm.

use std::sync::Arc;

use nlap_galerkin::thresholds::rho_tm;
use nlap_galerkin::*;

fn main() -> Result<()> {
    let mesh = Arc::new(RadialMesh::build(4.0, 800, 1.0, 2)?);
    let bump = GridFunction::from_fn(mesh, |r| (1.0 - r / 4.0).powi(2));
    let alpha = 1.0;
    let tm = rho_tm(2, alpha);
    println!("alpha_N = {:.4}, critical radius rho_TM = {tm:.4}", alpha_n(2));
    for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let u = bump.scaled(s * tm / bump.w1n_norm());
        match u.tm_functional(alpha) {
            Ok(v) => println!("|u|_W = {:.4}: functional {v:.6e}", u.w1n_norm()),
            Err(e) => println!("|u|_W = {:.4}: {e}", u.w1n_norm()),
        }
    }
    Ok(())
}
