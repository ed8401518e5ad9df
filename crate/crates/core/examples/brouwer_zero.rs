//! Certify ⟨F(x), x⟩ > 0 on a sphere, then find the zero inside.

use nlap_galerkin::brouwer::{certify_boundary, euclid, find_zero, ClosureField, CertifyOptions, ZeroOptions};

fn main() -> nlap_galerkin::Result<()> {
    let b = [0.3, -0.2, 0.5];
    let field = ClosureField::new(3, move |x: &[f64]| {
        x.iter().zip(&b).map(|(xi, bi)| xi * (1.0 + xi * xi) - bi).collect()
    });
    let radius = 1.0;
    let cert = certify_boundary(&field, radius, &CertifyOptions { samples: 200, threshold: 0.1, ..Default::default() })?;
    println!("min pairing on |x| = {radius}: {:.4} over {} samples, passed {}", cert.min, cert.evaluated, cert.passed());
    let z = find_zero(&field, radius, &ZeroOptions::default())?;
    println!("zero {:?}, |z| = {:.4}, residual {:.2e}", z.point, euclid(&z.point), z.residual);
    Ok(())
}
