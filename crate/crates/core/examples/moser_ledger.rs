//! Constants of the Moser iteration and the resulting sup bound.

use nlap_galerkin::apriori::{build_ledger, default_exponents, AuxConstants};

fn main() -> nlap_galerkin::Result<()> {
    for n in [2, 3] {
        let (pbar, ptilde) = default_exponents(n);
        let aux = AuxConstants { c_rho: 4.0, lambda_star: 1e-3, a_norm: 1.0, r_star: 1.0 };
        let l = build_ledger(n, pbar, ptilde, 0.6, &aux)?;
        println!("N = {n}: pbar* = {pbar}, ptilde = {ptilde}, P = {:.4}", l.p);
        println!("  beta_0..3 = {:.3} {:.3} {:.3} {:.3}", l.beta(0), l.beta(1), l.beta(2), l.beta(3));
        println!("  Q_inf = {:.4e}, Theta = {:.3e}", l.q_inf, l.theta);
        for w in [0.01, 0.1, 1.0] {
            println!("  |u|_W = {w}: sup u <= {:.4e}", l.sup_bound(w));
        }
    }
    Ok(())
}
