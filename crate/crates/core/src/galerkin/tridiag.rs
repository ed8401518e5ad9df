//! Tridiagonal solve with partial pivoting.

/// Solves `A x = rhs` for tridiagonal `A` given by `sub` (length n−1),
/// `diag` (n) and `sup` (n−1). Returns `None` for a numerically singular matrix.
pub fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    let scale = d.iter().chain(&dl).chain(&du).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            // swap rows i and i+1
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - fact * tmp;
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= fact * b[i];
        }
    }
    if d[n - 1].abs() <= 1e-300 * scale.max(1.0) || d[n - 1] == 0.0 {
        return None;
    }
    let mut x = b;
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    #[test]
    fn solves_indefinite_system_needing_pivots() {
        let sub = [3.0, -1.0, 2.0, 0.5];
        let diag = [0.0, 1e-3, -4.0, 1.0, 2.0];
        let sup = [1.0, 2.0, 0.3, -1.0];
        let x = [1.0, -2.0, 0.5, 3.0, -1.0];
        let b = matvec(&sub, &diag, &sup, &x);
        let y = solve(&sub, &diag, &sup, &b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_none() {
        assert!(solve(&[1.0], &[1.0, 1.0], &[1.0], &[1.0, 2.0]).is_none());
    }
}
