//! Independent oracles and small file readers shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;

/// RK4 shooting for the first Dirichlet eigenvalue of `−Δ_N` on the unit ball:
/// `v = r^{N−1}|u'|^{N−2}u'`, `v' = −σ r^{N−1}|u|^{N−2}u`, `u(0) = 1`. Bisects
/// on whether `u` reaches zero before `r = 1`.
pub fn shooting_sigma1(n: usize) -> f64 {
    let nf = n as f64;
    let hits_zero = |sigma: f64| -> bool {
        let steps = 20_000;
        let r0 = 1e-9;
        let h = (1.0 - r0) / steps as f64;
        let rhs = |r: f64, u: f64, v: f64| -> (f64, f64) {
            let du = v.signum() * (v.abs() / r.powf(nf - 1.0)).powf(1.0 / (nf - 1.0));
            let dv = -sigma * r.powf(nf - 1.0) * u.abs().powf(nf - 2.0) * u;
            (du, dv)
        };
        let (mut u, mut v) = (1.0, -sigma * r0.powf(nf) / nf);
        let mut r = r0;
        for _ in 0..steps {
            let (a1, b1) = rhs(r, u, v);
            let (a2, b2) = rhs(r + h / 2.0, u + h / 2.0 * a1, v + h / 2.0 * b1);
            let (a3, b3) = rhs(r + h / 2.0, u + h / 2.0 * a2, v + h / 2.0 * b2);
            let (a4, b4) = rhs(r + h, u + h * a3, v + h * b3);
            u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            r += h;
            if u <= 0.0 {
                return true;
            }
        }
        false
    };
    let (mut lo, mut hi) = (0.1, 200.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hits_zero(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero of a planar field on the disc of radius `radius` by nested grid scans
/// of `|F|`.
pub fn grid_zero_2d(f: &dyn Fn(f64, f64) -> (f64, f64), radius: f64) -> (f64, f64) {
    let norm = |x: f64, y: f64| {
        let (a, b) = f(x, y);
        a.hypot(b)
    };
    let mut best = (0.0, 0.0);
    let mut best_v = f64::INFINITY;
    let m = 400;
    for i in 0..=m {
        for j in 0..=m {
            let x = -radius + 2.0 * radius * i as f64 / m as f64;
            let y = -radius + 2.0 * radius * j as f64 / m as f64;
            if x.hypot(y) > radius {
                continue;
            }
            let v = norm(x, y);
            if v < best_v {
                best_v = v;
                best = (x, y);
            }
        }
    }
    let mut half = 2.0 * radius / m as f64;
    for _ in 0..40 {
        let c = best;
        let k = 10;
        for i in -k..=k {
            for j in -k..=k {
                let x = c.0 + half * i as f64 / k as f64;
                let y = c.1 + half * j as f64 / k as f64;
                let v = norm(x, y);
                if v < best_v {
                    best_v = v;
                    best = (x, y);
                }
            }
        }
        half *= 0.3;
    }
    best
}

/// Header and rows of a crate CSV (the version comment is checked and skipped).
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<HashMap<String, String>>) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let first = lines.next().expect("empty csv");
    assert!(first.starts_with("# nlap-galerkin v"), "missing version header in {}", path.display());
    let header: Vec<String> = lines.next().expect("no columns").split(',').map(String::from).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect();
    (header, rows)
}

pub fn read_key_values(path: &Path) -> HashMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    let s = row.get(key).unwrap_or_else(|| panic!("missing column {key}"));
    match s.as_str() {
        "inf" => f64::INFINITY,
        _ => s.parse().unwrap_or_else(|_| panic!("{key}={s} is not a number")),
    }
}

pub fn baseline_config_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/baseline.toml")
}
