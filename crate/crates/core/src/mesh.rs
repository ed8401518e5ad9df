//! Graded radial meshes, hat-function grid functions and their discrete norms.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nonlinearity::phi_n;
use crate::quadrature::{integrate, GaussRule};
use crate::CSV_HEADER;

/// `Γ(N/2)` for integer `N >= 1`.
fn gamma_half(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..n / 2).map(|i| i as f64).product()
    } else {
        // Γ(k + 1/2) = √π (2k)! / (4^k k!)
        let k = (n - 1) / 2;
        let mut g = PI.sqrt();
        for i in 0..k {
            g *= i as f64 + 0.5;
        }
        g
    }
}

/// Surface measure `ω_{N−1}` of the unit sphere in `ℝ^N`.
pub fn omega(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Trudinger-Moser exponent `α_N = N ω_{N−1}^{1/(N−1)}`.
pub fn alpha_n(n: usize) -> f64 {
    assert!(n >= 2, "alpha_N needs N >= 2");
    n as f64 * omega(n).powf(1.0 / (n as f64 - 1.0))
}

/// Volume of the ball of radius `r` in `ℝ^N`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    omega(n) * r.powi(n as i32) / n as f64
}

/// Nodes `0 = r₀ < … < r_M = R` with one Gauss rule per element.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    n: usize,
    nodes: Vec<f64>,
    rule: GaussRule,
    omega: f64,
    // flattened per-element quadrature: radius and weight including ω r^{N−1} h
    qr: Vec<f64>,
    qw: Vec<f64>,
}

impl RadialMesh {
    /// `r_i = R (i/M)^grading` with the default 4-point rule.
    pub fn build(r_max: f64, m: usize, grading: f64, n: usize) -> Result<Self> {
        Self::build_with_rule(r_max, m, grading, n, 4)
    }

    pub fn build_with_rule(r_max: f64, m: usize, grading: f64, n: usize, points: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Parameter(format!("mesh radius must be positive, got {r_max}")));
        }
        if m < 8 {
            return Err(Error::Parameter(format!("mesh needs M >= 8 elements, got {m}")));
        }
        if !(grading >= 1.0) {
            return Err(Error::Parameter(format!("mesh grading must be >= 1, got {grading}")));
        }
        let nodes: Vec<f64> = (0..=m)
            .map(|i| if i == m { r_max } else { r_max * (i as f64 / m as f64).powf(grading) })
            .collect();
        Self::from_nodes(nodes, n, points)
    }

    /// Mesh on explicit nodes, which must start at 0 and increase strictly.
    pub fn from_nodes(nodes: Vec<f64>, n: usize, points: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("dimension N >= 2 required, got {n}")));
        }
        if points == 0 {
            return Err(Error::Parameter("quadrature needs at least one point".into()));
        }
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::Parameter("mesh nodes must start at r = 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.iter().all(|x| x.is_finite()) {
            return Err(Error::Parameter("mesh nodes must be strictly increasing".into()));
        }
        let rule = GaussRule::new(points);
        let om = omega(n);
        let mut qr = Vec::with_capacity((nodes.len() - 1) * points);
        let mut qw = Vec::with_capacity((nodes.len() - 1) * points);
        for w in nodes.windows(2) {
            let h = w[1] - w[0];
            for (s, gw) in rule.points.iter().zip(&rule.weights) {
                let r = w[0] + s * h;
                qr.push(r);
                qw.push(om * r.powi(n as i32 - 1) * gw * h);
            }
        }
        Ok(Self { n, nodes, rule, omega: om, qr, qw })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().expect("mesh has nodes")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    pub fn element_len(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    /// Quadrature radii of element `e`.
    pub fn quad_r(&self, e: usize) -> &[f64] {
        let q = self.rule.len();
        &self.qr[e * q..(e + 1) * q]
    }

    /// Quadrature weights of element `e`, already multiplied by `ω r^{N−1} h`.
    pub fn quad_w(&self, e: usize) -> &[f64] {
        let q = self.rule.len();
        &self.qw[e * q..(e + 1) * q]
    }

    /// `ω ∫_{r_e}^{r_{e+1}} r^{N−1} dr`, exact.
    pub fn element_measure(&self, e: usize) -> f64 {
        let n = self.n as f64;
        self.omega * (self.nodes[e + 1].powf(n) - self.nodes[e].powf(n)) / n
    }

    /// All quadrature radii, element by element.
    pub fn all_quad_r(&self) -> &[f64] {
        &self.qr
    }

    /// Index of the element containing `r` (clamped to the mesh).
    pub fn locate(&self, r: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x <= r);
        i.saturating_sub(1).min(self.elements() - 1)
    }
}

/// Nodal values of a radial function on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Arc<RadialMesh>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Arc<RadialMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.nodes.len() {
            return Err(Error::Parameter(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                mesh.nodes.len()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<RadialMesh>) -> Self {
        let values = vec![0.0; mesh.nodes.len()];
        Self { mesh, values }
    }

    pub fn from_fn(mesh: Arc<RadialMesh>, f: impl Fn(f64) -> f64) -> Self {
        let values = mesh.nodes.iter().map(|&r| f(r)).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<RadialMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_mesh(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { mesh: self.mesh.clone(), values })
    }

    pub fn check_same_mesh(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.nodes == other.mesh.nodes {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// Piecewise-linear value at `r`; zero beyond the mesh radius.
    pub fn eval(&self, r: f64) -> f64 {
        if r > self.mesh.radius() || r < 0.0 {
            return 0.0;
        }
        let e = self.mesh.locate(r);
        let (a, b) = (self.mesh.nodes[e], self.mesh.nodes[e + 1]);
        let s = (r - a) / (b - a);
        (1.0 - s) * self.values[e] + s * self.values[e + 1]
    }

    /// Linear interpolation onto another mesh, extended by zero outside this one.
    pub fn interpolate_onto(&self, mesh: Arc<RadialMesh>) -> GridFunction {
        let values = mesh.nodes.iter().map(|&r| self.eval(r)).collect();
        GridFunction { mesh, values }
    }

    /// Slope of the linear piece on element `e`.
    pub fn slope(&self, e: usize) -> f64 {
        (self.values[e + 1] - self.values[e]) / self.mesh.element_len(e)
    }

    /// `ω ∫ g(r, u(r), u'(r)) r^{N−1} dr` over elements intersecting `[lo, hi]`,
    /// with the rule mapped onto the intersection.
    pub fn integrate_on<G>(&self, lo: f64, hi: f64, mut g: G) -> Result<f64>
    where
        G: FnMut(f64, f64, f64) -> Result<f64>,
    {
        let m = &self.mesh;
        let mut total = 0.0;
        let n = m.n as i32;
        for e in 0..m.elements() {
            let (a, b) = (m.nodes[e], m.nodes[e + 1]);
            let (ca, cb) = (a.max(lo), b.min(hi));
            if cb <= ca {
                continue;
            }
            let d = self.slope(e);
            if ca == a && cb == b {
                for (&r, &w) in m.quad_r(e).iter().zip(m.quad_w(e)) {
                    let s = (r - a) / (b - a);
                    let u = (1.0 - s) * self.values[e] + s * self.values[e + 1];
                    total += w * g(r, u, d)?;
                }
            } else {
                for (sp, gw) in m.rule.points.iter().zip(&m.rule.weights) {
                    let r = ca + sp * (cb - ca);
                    let s = (r - a) / (b - a);
                    let u = (1.0 - s) * self.values[e] + s * self.values[e + 1];
                    total += m.omega * r.powi(n - 1) * gw * (cb - ca) * g(r, u, d)?;
                }
            }
        }
        Ok(total)
    }

    /// `(ω ∫ (|u'|^N + |u|^N) r^{N−1} dr)^{1/N}`.
    pub fn w1n_norm(&self) -> f64 {
        self.w1n_norm_on(0.0, self.mesh.radius())
    }

    /// Discrete `W^{1,N}` norm restricted to the annulus `lo <= r <= hi`.
    pub fn w1n_norm_on(&self, lo: f64, hi: f64) -> f64 {
        let nn = self.mesh.n as i32;
        let m = &self.mesh;
        let mut total = 0.0;
        for e in 0..m.elements() {
            let (a, b) = (m.nodes[e], m.nodes[e + 1]);
            let (ca, cb) = (a.max(lo), b.min(hi));
            if cb <= ca {
                continue;
            }
            let d = self.slope(e);
            let (ua, ub) = (self.values[e], self.values[e + 1]);
            if ua == 0.0 && ub == 0.0 {
                continue;
            }
            let n = nn as f64;
            let meas = m.omega * (cb.powf(n) - ca.powf(n)) / n;
            total += d.abs().powi(nn) * meas;
            for (sp, gw) in m.rule.points.iter().zip(&m.rule.weights) {
                let r = ca + sp * (cb - ca);
                let s = (r - a) / (b - a);
                let u = (1.0 - s) * ua + s * ub;
                total += m.omega * r.powi(nn - 1) * gw * (cb - ca) * u.abs().powi(nn);
            }
        }
        total.powf(1.0 / nn as f64)
    }

    /// `(ω ∫ |u|^s r^{N−1} dr)^{1/s}`.
    pub fn ls_norm(&self, s: f64) -> f64 {
        self.ls_norm_on(s, 0.0, self.mesh.radius())
    }

    pub fn ls_norm_on(&self, s: f64, lo: f64, hi: f64) -> f64 {
        assert!(s >= 1.0, "L^s norm needs s >= 1");
        let v = self
            .integrate_on(lo, hi, |_, u, _| Ok(u.abs().powf(s)))
            .expect("infallible integrand");
        v.powf(1.0 / s)
    }

    /// `ω ∫ φ_N(α|u|^{N'}) r^{N−1} dr`.
    pub fn tm_functional(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        let n = self.mesh.n;
        let np = n as f64 / (n as f64 - 1.0);
        let m = &self.mesh;
        let mut total = 0.0;
        for e in 0..m.elements() {
            let (a, b) = (m.nodes[e], m.nodes[e + 1]);
            for (&r, &w) in m.quad_r(e).iter().zip(m.quad_w(e)) {
                let s = (r - a) / (b - a);
                let u = (1.0 - s) * self.values[e] + s * self.values[e + 1];
                let v = phi_n(n, alpha * u.abs().powf(np)).map_err(|_| {
                    let node = if s < 0.5 { e } else { e + 1 };
                    Error::RangeAtNode { node, t: self.values[node] }
                })?;
                total += w * v;
            }
        }
        Ok(total)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|u|` over nodes with `lo <= r <= hi`, including the
    /// interpolated endpoints.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        let mut m = self.eval(lo.max(0.0)).abs().max(self.eval(hi).abs());
        for (r, v) in self.mesh.nodes.iter().zip(&self.values) {
            if *r >= lo && *r <= hi {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// Minimum over interior nodes `0 <= r_i < R`.
    pub fn min_interior(&self) -> f64 {
        self.values[..self.values.len() - 1].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(∫_{B(x₀,ρ)} |u(|x|)|^s dx)^{1/s}` for the ball of radius `rho`
    /// centred at distance `d` from the origin.
    pub fn ls_norm_off_center(&self, s: f64, d: f64, rho: f64) -> Result<f64> {
        let n = self.mesh.n;
        let lo = (d - rho).max(0.0);
        let hi = d + rho;
        let v = self.integrate_on(lo, hi, |r, u, _| {
            if u == 0.0 || r == 0.0 {
                return Ok(0.0);
            }
            Ok(u.abs().powf(s) * sphere_fraction(n, r, d, rho)?)
        })?;
        Ok(v.powf(1.0 / s))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_HEADER}");
        let _ = writeln!(out, "# N={}", self.mesh.n);
        let _ = writeln!(out, "r,u");
        for (r, v) in self.mesh.nodes.iter().zip(&self.values) {
            let _ = writeln!(out, "{r},{v}");
        }
        out
    }

    /// Reads the CSV written by [`GridFunction::write_csv`]; the mesh is rebuilt
    /// from the `r` column with a `points`-point Gauss rule.
    pub fn read_csv(path: &Path, points: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text, points)
    }

    pub fn from_csv(text: &str, points: usize) -> Result<Self> {
        let mut n = None;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("N=") {
                    n = Some(v.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad N line: {e}")))?);
                }
                continue;
            }
            if !seen_header {
                if line != "r,u" {
                    return Err(Error::Parse(format!("expected header `r,u`, found `{line}`")));
                }
                seen_header = true;
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("line {}: missing column", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            nodes.push(parse(it.next())?);
            values.push(parse(it.next())?);
        }
        let n = n.ok_or_else(|| Error::Parse("missing `# N=` line".into()))?;
        let mesh = RadialMesh::from_nodes(nodes, n, points)?;
        GridFunction::new(Arc::new(mesh), values)
    }
}

/// Fraction of the sphere `|x| = r` lying inside `B(x₀, ρ)` with `|x₀| = d`.
fn sphere_fraction(n: usize, r: f64, d: f64, rho: f64) -> Result<f64> {
    if d == 0.0 {
        return Ok(if r <= rho { 1.0 } else { 0.0 });
    }
    let c = (r * r + d * d - rho * rho) / (2.0 * r * d);
    if c <= -1.0 {
        return Ok(1.0);
    }
    if c >= 1.0 {
        return Ok(0.0);
    }
    let theta = c.acos();
    let k = n as i32 - 2;
    if k == 0 {
        return Ok(theta / PI);
    }
    let part = integrate(|t: f64| Ok(t.sin().powi(k)), 0.0, theta, 1e-13, 1e-11)?;
    let full = integrate(|t: f64| Ok(t.sin().powi(k)), 0.0, PI, 1e-13, 1e-12)?;
    Ok(part / full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fine(n: usize) -> Arc<RadialMesh> {
        Arc::new(RadialMesh::build(1.0, 2000, 1.0, n).unwrap())
    }

    #[test]
    fn omega_and_alpha() {
        assert!((omega(2) - 2.0 * PI).abs() < 1e-14);
        assert!((omega(3) - 4.0 * PI).abs() < 1e-13);
        assert!((omega(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((alpha_n(2) - 4.0 * PI).abs() < 1e-13);
        assert!((alpha_n(3) - 3.0 * (4.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mesh_nodes() {
        let m = RadialMesh::build(1.0, 10, 1.0, 2).unwrap();
        for (i, r) in m.nodes().iter().enumerate() {
            assert!((r - i as f64 / 10.0).abs() < 1e-15);
        }
        let g = RadialMesh::build(1.0, 10, 2.0, 2).unwrap();
        assert!((g.nodes()[3] - 0.09).abs() < 1e-15);
        let b = RadialMesh::build(8.0, 2000, 1.0, 2).unwrap();
        assert_eq!(b.nodes().len(), 2001);
        assert!((b.element_len(17) - 0.004).abs() < 1e-12);
        assert!(RadialMesh::build(1.0, 7, 1.0, 2).is_err());
        assert!(RadialMesh::build(0.0, 10, 1.0, 2).is_err());
    }

    #[test]
    fn quadrature_weights_integrate_measure() {
        let m = RadialMesh::build(2.0, 16, 1.5, 3).unwrap();
        let total: f64 = (0..m.elements()).flat_map(|e| m.quad_w(e).to_vec()).sum();
        assert!((total - ball_volume(3, 2.0)).abs() < 1e-12);
        for e in 0..m.elements() {
            let s: f64 = m.quad_w(e).iter().sum();
            assert!((s - m.element_measure(e)).abs() < 1e-13);
        }
    }

    #[test]
    fn norms_of_linear_profile() {
        let u = GridFunction::from_fn(fine(2), |r| 1.0 - r);
        assert!((u.w1n_norm() - (7.0 * PI / 6.0).sqrt()).abs() < 1e-9);
        assert!((u.ls_norm(2.0) - (2.0 * PI / 12.0).sqrt()).abs() < 1e-9);
        // N=3: 4π ∫ (1 + (1−r)³) r² dr = 4π (1/3 + 1/60)
        let v = GridFunction::from_fn(fine(3), |r| 1.0 - r);
        let exact = (4.0 * PI * (1.0 / 3.0 + 1.0 / 60.0)).powf(1.0 / 3.0);
        assert!((v.w1n_norm() - exact).abs() < 1e-9);
        let one = GridFunction::from_fn(fine(2), |_| 1.0);
        assert!((one.ls_norm(2.0) - PI.sqrt()).abs() < 1e-12);
        assert_eq!(GridFunction::zeros(fine(2)).w1n_norm(), 0.0);
    }

    #[test]
    fn tm_functional_constant() {
        let mesh = Arc::new(RadialMesh::build(2.0, 64, 1.0, 2).unwrap());
        let c = GridFunction::from_fn(mesh.clone(), |_| 0.7);
        let v = c.tm_functional(1.0).unwrap();
        let exact = PI * 4.0 * (0.49f64.exp() - 1.0);
        assert!((v - exact).abs() < 1e-11);
        assert_eq!(GridFunction::zeros(mesh.clone()).tm_functional(1.0).unwrap(), 0.0);
        let big = GridFunction::from_fn(mesh, |_| 30.0);
        assert!(matches!(big.tm_functional(1.0), Err(Error::RangeAtNode { .. })));
    }

    #[test]
    fn off_center_norm_of_constant_is_ball_volume() {
        for n in [2usize, 3] {
            let mesh = Arc::new(RadialMesh::build(10.0, 4000, 1.0, n).unwrap());
            let one = GridFunction::from_fn(mesh, |_| 1.0);
            let v = one.ls_norm_off_center(1.0, 5.0, 2.0).unwrap();
            assert!((v / ball_volume(n, 2.0) - 1.0).abs() < 1e-3, "N={n}: {v}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let mesh = Arc::new(RadialMesh::build(3.0, 12, 1.3, 3).unwrap());
        let u = GridFunction::from_fn(mesh, |r| (1.0 / 3.0) * (3.0 - r).powi(2));
        let text = u.to_csv();
        assert!(text.starts_with("# nlap-galerkin v"));
        let back = GridFunction::from_csv(&text, 4).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.mesh().nodes(), u.mesh().nodes());
        assert_eq!(back.mesh().dim(), 3);
    }

    #[test]
    fn mismatched_meshes_rejected() {
        let a = GridFunction::zeros(Arc::new(RadialMesh::build(1.0, 10, 1.0, 2).unwrap()));
        let b = GridFunction::zeros(Arc::new(RadialMesh::build(1.0, 12, 1.0, 2).unwrap()));
        assert!(matches!(a.sub(&b), Err(Error::MeshMismatch)));
    }
}
