//! Truncations f_k converge to f locally uniformly and stay under the envelope.

use nlap_galerkin::cli::{envelope_violations, strauss_uniform_error};
use nlap_galerkin::*;

fn main() -> Result<()> {
    let nl = Nonlinearity::canonical(ProblemParams::baseline());
    for k in [1, 10, 100, 1000, 10_000] {
        let (abs, rel) = strauss_uniform_error(&nl, k, 3.0, 1e-3)?;
        println!("k = {k:>6}: sup |f_k − f| on [−3, 3] = {abs:.3e} (relative {rel:.3e})");
    }
    let (bad, checked) = envelope_violations(&nl, 50, 10.0, 0.01)?;
    println!("envelope: {bad} violations in {checked} samples");
    Ok(())
}
