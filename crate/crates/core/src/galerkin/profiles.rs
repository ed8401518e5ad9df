//! Random radial test profiles vanishing at `r = R`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::mesh::RadialMesh;

/// Which family [`random_profile`] drew from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// i.i.d. Gaussian nodal values
    Rough,
    /// `Σ c_j cos((j − ½)π r/R)` with `c_j ~ N(0,1)/j`
    Cosine,
    /// Gaussian bump times `(1 − r/R)`
    Bump,
    /// Truncated logarithm `min(1, ln(ρ/r)/ln(ρ/δ))₊`, concentrating as `δ → 0`
    Moser,
}

/// Nodal values (last one zero) of a random profile from a random family.
pub fn random_profile<R: Rng + ?Sized>(mesh: &RadialMesh, rng: &mut R) -> Vec<f64> {
    let kind = match rng.gen_range(0..4) {
        0 => ProfileKind::Rough,
        1 => ProfileKind::Cosine,
        2 => ProfileKind::Bump,
        _ => ProfileKind::Moser,
    };
    profile_of_kind(mesh, kind, rng)
}

/// Smooth-ish nonnegative profile (cosine, bump or Moser family).
pub fn random_smooth_profile<R: Rng + ?Sized>(mesh: &RadialMesh, rng: &mut R) -> Vec<f64> {
    let kind = match rng.gen_range(0..3) {
        0 => ProfileKind::Cosine,
        1 => ProfileKind::Bump,
        _ => ProfileKind::Moser,
    };
    let mut v = profile_of_kind(mesh, kind, rng);
    v.iter_mut().for_each(|x| *x = x.abs());
    v
}

pub fn profile_of_kind<R: Rng + ?Sized>(mesh: &RadialMesh, kind: ProfileKind, rng: &mut R) -> Vec<f64> {
    let big_r = mesh.radius();
    let nodes = mesh.nodes();
    let h_min = mesh.element_len(0).max(1e-6 * big_r);
    let mut v: Vec<f64> = match kind {
        ProfileKind::Rough => nodes.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        ProfileKind::Cosine => {
            let terms = rng.gen_range(1..=12);
            let c: Vec<f64> = (1..=terms).map(|j| rng.sample::<f64, _>(StandardNormal) / j as f64).collect();
            nodes
                .iter()
                .map(|&r| {
                    c.iter()
                        .enumerate()
                        .map(|(j, cj)| cj * ((j as f64 + 0.5) * std::f64::consts::PI * r / big_r).cos())
                        .sum()
                })
                .collect()
        }
        ProfileKind::Bump => {
            let centre = rng.gen_range(0.0..0.5) * big_r;
            let lw = rng.gen_range((4.0 * h_min).ln()..(0.5 * big_r).ln());
            let w = lw.exp();
            nodes.iter().map(|&r| (-((r - centre) / w).powi(2)).exp() * (1.0 - r / big_r)).collect()
        }
        ProfileKind::Moser => {
            let ld = rng.gen_range(h_min.ln()..(0.25 * big_r).ln());
            let delta = ld.exp();
            let rho = rng.gen_range(2.0 * delta..=big_r);
            let l = (rho / delta).ln();
            nodes
                .iter()
                .map(|&r| if r <= delta { 1.0 } else if r >= rho { 0.0 } else { (rho / r).ln() / l })
                .collect()
        }
    };
    if let Some(last) = v.last_mut() {
        *last = 0.0;
    }
    if kind != ProfileKind::Rough && rng.gen_bool(0.5) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profiles_vanish_at_boundary_and_are_nonzero() {
        let mesh = RadialMesh::build(4.0, 64, 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v = random_profile(&mesh, &mut rng);
            assert_eq!(v.len(), 65);
            assert_eq!(*v.last().unwrap(), 0.0);
            assert!(v.iter().any(|x| *x != 0.0));
            let s = random_smooth_profile(&mesh, &mut rng);
            assert!(s.iter().all(|x| *x >= 0.0));
        }
    }
}
