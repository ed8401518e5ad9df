//! The Galerkin map of the regularized problem on a ball and its solvers.
//!
//! For coefficients `ξ ∈ ℝ^m` (nodal values at `r_0, …, r_{M−1}`; `u(R) = 0`)
//! the residual is
//!
//! ```text
//! F_j(ξ) = ∫ ( A(u') w_j' + (|u|^{N−2}u − λ a (u₊)^{q−1} − f_k(u₊) − φ/n) w_j ) ω r^{N−1} dr
//! ```
//!
//! with `A(d) = (d² + ε²)^{(N−2)/2} d` and hat functions `w_j`.

mod profiles;
mod solve;
pub mod tridiag;

use std::sync::Arc;

use rand::RngCore;

use crate::brouwer::VectorField;
use crate::error::{Error, Result};
use crate::mesh::{GridFunction, RadialMesh};
use crate::nonlinearity::{Nonlinearity, ProblemParams};
use crate::weights::Weight;

pub use profiles::{profile_of_kind, random_profile, random_smooth_profile, ProfileKind};
pub use solve::*;

/// Everything that fixes one finite-dimensional Galerkin system.
#[derive(Debug, Clone)]
pub struct GalerkinState {
    pub mesh: Arc<RadialMesh>,
    pub nl: Nonlinearity,
    pub params: ProblemParams,
    pub weight: Weight,
    /// The `n` of the `φ/n` forcing; `None` drops the term.
    pub reg_n: Option<u64>,
    pub strauss_k: u64,
    pub phi_aux: GridFunction,
    /// Regularization of the principal part, only used for `N > 2`.
    pub eps: f64,
    qa: Vec<f64>,
    qphi: Vec<f64>,
    meas: Vec<f64>,
}

/// Default forcing profile `φ(r) = e^{−r}`.
pub fn default_phi_aux(mesh: &Arc<RadialMesh>) -> GridFunction {
    GridFunction::from_fn(mesh.clone(), |r| (-r).exp())
}

impl GalerkinState {
    pub fn new(
        mesh: Arc<RadialMesh>,
        nl: Nonlinearity,
        params: ProblemParams,
        weight: Weight,
        reg_n: Option<u64>,
        strauss_k: u64,
    ) -> Result<Self> {
        let phi = default_phi_aux(&mesh);
        Self::with_phi(mesh, nl, params, weight, reg_n, strauss_k, phi)
    }

    pub fn with_phi(
        mesh: Arc<RadialMesh>,
        nl: Nonlinearity,
        params: ProblemParams,
        weight: Weight,
        reg_n: Option<u64>,
        strauss_k: u64,
        phi_aux: GridFunction,
    ) -> Result<Self> {
        if params.n != mesh.dim() {
            return Err(Error::Parameter(format!("params N = {} but mesh N = {}", params.n, mesh.dim())));
        }
        if strauss_k == 0 {
            return Err(Error::Parameter("Strauss index k must be >= 1".into()));
        }
        if reg_n == Some(0) {
            return Err(Error::Parameter("regularization index n must be >= 1".into()));
        }
        let nodes = phi_aux.values();
        if nodes.len() != mesh.nodes().len() {
            return Err(Error::MeshMismatch);
        }
        if nodes[..nodes.len() - 1].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("phi_aux must be positive and bounded on the interior".into()));
        }
        let mut state = Self {
            mesh,
            nl,
            params,
            weight,
            reg_n,
            strauss_k,
            phi_aux,
            eps: 0.0,
            qa: Vec::new(),
            qphi: Vec::new(),
            meas: Vec::new(),
        };
        state.refresh();
        Ok(state)
    }

    /// Recomputes the cached coefficient tables after editing public fields.
    pub fn refresh(&mut self) {
        let m = &self.mesh;
        let lambda = self.params.lambda;
        self.qa = m.all_quad_r().iter().map(|&r| lambda * self.weight.eval(r)).collect();
        self.qphi = m.all_quad_r().iter().map(|&r| self.phi_aux.eval(r)).collect();
        self.meas = (0..m.elements()).map(|e| m.element_measure(e)).collect();
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.params.lambda = lambda;
        self.refresh();
    }

    /// Number of unknowns `m` (all nodes but the Dirichlet one).
    pub fn dofs(&self) -> usize {
        self.mesh.elements()
    }

    pub fn to_grid(&self, xi: &[f64]) -> GridFunction {
        let mut v = Vec::with_capacity(xi.len() + 1);
        v.extend_from_slice(xi);
        v.push(0.0);
        GridFunction::new(self.mesh.clone(), v).expect("dof count matches mesh")
    }

    pub fn to_dofs(u: &GridFunction) -> Vec<f64> {
        let v = u.values();
        v[..v.len() - 1].to_vec()
    }

    fn principal(&self, d: f64) -> (f64, f64) {
        let n = self.params.n;
        if n == 2 {
            return (d, 1.0);
        }
        let nf = n as f64;
        let e2 = self.eps * self.eps;
        let s = d * d + e2;
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let a = s.powf((nf - 2.0) / 2.0) * d;
        let da = s.powf((nf - 4.0) / 2.0) * ((nf - 1.0) * d * d + e2);
        (a, da)
    }

    /// Lower-order integrand `g(u)` and `g'(u)` at quadrature index `iq`.
    fn source(&self, iq: usize, u: f64, node: usize, want_slope: bool) -> Result<(f64, f64)> {
        let n = self.params.n;
        let q = self.params.q;
        let (mut g, mut dg) = if n == 2 {
            (u, 1.0)
        } else {
            let a = u.abs().powi(n as i32 - 2);
            (a * u, (n as f64 - 1.0) * a)
        };
        if u > 0.0 {
            let la = self.qa[iq];
            if la != 0.0 {
                let t = u.powf(q - 2.0);
                g -= la * t * u;
                dg -= la * (q - 1.0) * t;
            }
            let (fk, dfk) = if want_slope {
                self.nl.strauss_and_slope(self.strauss_k, u)
            } else {
                self.nl.strauss(self.strauss_k, u).map(|v| (v, 0.0))
            }
            .map_err(|e| match e {
                Error::Range { t } => Error::RangeAtNode { node, t },
                other => other,
            })?;
            g -= fk;
            dg -= dfk;
        }
        if let Some(reg) = self.reg_n {
            g -= self.qphi[iq] / reg as f64;
        }
        Ok((g, dg))
    }

    fn nodal(xi: &[f64], i: usize) -> f64 {
        if i < xi.len() {
            xi[i]
        } else {
            0.0
        }
    }

    /// `F(ξ)`.
    pub fn assemble_f(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; xi.len()];
        self.assemble_into(xi, &mut out, None)?;
        Ok(out)
    }

    /// `F(ξ)` and the tridiagonal Jacobian `(sub, diag, sup)`.
    pub fn assemble_with_jacobian(&self, xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let m = xi.len();
        let mut out = vec![0.0; m];
        let mut jac = (vec![0.0; m.saturating_sub(1)], vec![0.0; m], vec![0.0; m.saturating_sub(1)]);
        self.assemble_into(xi, &mut out, Some(&mut jac))?;
        Ok((out, jac.0, jac.1, jac.2))
    }

    #[allow(clippy::type_complexity)]
    fn assemble_into(
        &self,
        xi: &[f64],
        out: &mut [f64],
        mut jac: Option<&mut (Vec<f64>, Vec<f64>, Vec<f64>)>,
    ) -> Result<()> {
        let mesh = &self.mesh;
        let m = self.dofs();
        if xi.len() != m {
            return Err(Error::Parameter(format!("coefficient vector has length {}, expected {m}", xi.len())));
        }
        let rule = mesh.rule();
        let nq = rule.len();
        let want = jac.is_some();
        for e in 0..mesh.elements() {
            let ua = Self::nodal(xi, e);
            let ub = Self::nodal(xi, e + 1);
            let h = mesh.element_len(e);
            let d = (ub - ua) / h;
            let (a, da) = self.principal(d);
            let meas = self.meas[e];
            // element contributions for local nodes (e, e+1)
            let mut fe = [-a * meas / h, a * meas / h];
            let k0 = da * meas / (h * h);
            let mut ke = [[k0, -k0], [-k0, k0]];
            let ws = mesh.quad_w(e);
            for iq in 0..nq {
                let s = rule.points[iq];
                let u = (1.0 - s) * ua + s * ub;
                let node = if s < 0.5 { e } else { e + 1 };
                let (g, dg) = self.source(e * nq + iq, u, node, want)?;
                let w = ws[iq];
                let phi = [1.0 - s, s];
                for i in 0..2 {
                    fe[i] += w * g * phi[i];
                    if want {
                        for j in 0..2 {
                            ke[i][j] += w * dg * phi[i] * phi[j];
                        }
                    }
                }
            }
            out[e] += fe[0];
            if e + 1 < m {
                out[e + 1] += fe[1];
            }
            if let Some((sub, diag, sup)) = jac.as_deref_mut() {
                diag[e] += ke[0][0];
                if e + 1 < m {
                    diag[e + 1] += ke[1][1];
                    sup[e] += ke[0][1];
                    sub[e] += ke[1][0];
                }
            }
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::RangeAtNode { node: i, t: xi[i] });
        }
        Ok(())
    }

    /// `⟨F(ξ), ξ⟩ = ∫ A(u')u' + g(u)u`, skipping elements where `u ≡ 0`.
    pub fn pairing(&self, xi: &[f64]) -> Result<f64> {
        let mesh = &self.mesh;
        let rule = mesh.rule();
        let nq = rule.len();
        let mut total = 0.0;
        for e in 0..mesh.elements() {
            let ua = Self::nodal(xi, e);
            let ub = Self::nodal(xi, e + 1);
            if ua == 0.0 && ub == 0.0 {
                continue;
            }
            let h = mesh.element_len(e);
            let d = (ub - ua) / h;
            total += self.principal(d).0 * d * self.meas[e];
            let ws = mesh.quad_w(e);
            for iq in 0..nq {
                let s = rule.points[iq];
                let u = (1.0 - s) * ua + s * ub;
                let node = if s < 0.5 { e } else { e + 1 };
                let (g, _) = self.source(e * nq + iq, u, node, false)?;
                total += ws[iq] * g * u;
            }
        }
        Ok(total)
    }

    /// `|ξ|_m = ‖Σ ξ_j w_j‖_{W^{1,N}}`.
    pub fn norm(&self, xi: &[f64]) -> f64 {
        self.to_grid(xi).w1n_norm()
    }

    /// Solves `(J + shift·max|J_ii|·I) d = −F`.
    pub fn newton_direction(&self, xi: &[f64], shift: f64) -> Result<Vec<f64>> {
        let (f, sub, mut diag, sup) = self.assemble_with_jacobian(xi)?;
        if shift != 0.0 {
            let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            diag.iter_mut().for_each(|v| *v += shift * scale);
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        tridiag::solve(&sub, &diag, &sup, &rhs)
            .ok_or_else(|| Error::Stagnation { value: crate::brouwer::euclid(&f), grad: 0.0 })
    }

    /// `ω ∫ φ u r^{N−1} dr` on the mesh.
    pub fn forcing_integral(&self, u: &GridFunction) -> f64 {
        let phi = &self.phi_aux;
        u.integrate_on(0.0, self.mesh.radius(), |r, v, _| Ok(phi.eval(r) * v)).expect("infallible")
    }
}

/// [`GalerkinState`] seen as a vector field, with extra certificate directions.
pub struct GalerkinField<'a> {
    pub state: &'a GalerkinState,
    pub hints: Vec<Vec<f64>>,
}

impl<'a> GalerkinField<'a> {
    pub fn new(state: &'a GalerkinState) -> Self {
        Self { state, hints: Vec::new() }
    }
}

impl VectorField for GalerkinField<'_> {
    fn dim(&self) -> usize {
        self.state.dofs()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.state.assemble_into(x, out, None)
    }

    fn norm(&self, x: &[f64]) -> f64 {
        self.state.norm(x)
    }

    fn pairing(&self, x: &[f64]) -> Result<f64> {
        self.state.pairing(x)
    }

    fn newton_step(&self, x: &[f64], _fx: &[f64], shift: f64) -> Option<Result<Vec<f64>>> {
        Some(self.state.newton_direction(x, shift))
    }

    fn random_direction(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut v = random_profile(&self.state.mesh, rng);
        v.pop();
        v
    }

    fn hints(&self) -> Vec<Vec<f64>> {
        self.hints.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearityKind;

    fn state(mesh: Arc<RadialMesh>, kind: NonlinearityKind, lambda: f64, reg_n: Option<u64>) -> GalerkinState {
        let mut p = ProblemParams::baseline().with_lambda(lambda);
        p.n = mesh.dim();
        GalerkinState::new(mesh, Nonlinearity::new(kind, p), p, Weight::exponential(1.0), reg_n, 10).unwrap()
    }

    #[test]
    fn zero_coefficients_give_negative_forcing() {
        let mesh = Arc::new(RadialMesh::build(2.0, 16, 1.0, 2).unwrap());
        let s = state(mesh.clone(), NonlinearityKind::Canonical, 0.3, Some(10));
        let f = s.assemble_f(&vec![0.0; 16]).unwrap();
        assert!(f.iter().all(|v| *v < 0.0));
        let s0 = state(mesh, NonlinearityKind::Zero, 0.0, None);
        assert!(s0.assemble_f(&vec![0.0; 16]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn n2_linear_rows_match_hand_computation() {
        // three elements of width 1/3, u = (1, 0.5, 0.25), N = 2, only -Δu + u
        let mesh = Arc::new(RadialMesh::from_nodes(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], 2, 4).unwrap());
        let p = ProblemParams::baseline();
        let s = GalerkinState::new(
            mesh,
            Nonlinearity::new(NonlinearityKind::Zero, p),
            p,
            Weight::exponential(1.0),
            None,
            1,
        )
        .unwrap();
        let xi = [1.0, 0.5, 0.25];
        let f = s.assemble_f(&xi).unwrap();
        // row 1 (node r=1/3): stiffness 2π∫ u' w' r dr + mass 2π∫ u w r dr, by hand with
        // exact polynomial integrals on [0,1/3] and [1/3,2/3]
        let tau = 2.0 * std::f64::consts::PI;
        let h = 1.0 / 3.0;
        let stiff = (-0.5 / h) * (1.0 / h) * (h * h / 2.0) + (-0.25 / h) * (-1.0 / h) * ((4.0 * h * h - h * h) / 2.0);
        // ∫_0^h (1 − 0.5 r/h)(r/h) r dr and ∫_h^{2h} (0.5 − 0.25 (r−h)/h)(1 − (r−h)/h) r dr
        let m1 = h * h * (1.0 / 3.0 - 0.5 / 4.0);
        let m2 = {
            // t = (r−h)/h, r = h(1+t), dr = h dt
            let g = |t: f64| (0.5 - 0.25 * t) * (1.0 - t) * (1.0 + t);
            let n = 2000;
            let mut acc = g(0.0) + g(1.0);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 / n as f64);
            }
            h * h * acc / (3.0 * n as f64)
        };
        let expect = tau * (stiff + m1 + m2);
        assert!((f[1] - expect).abs() < 1e-12, "{} vs {expect}", f[1]);
    }

    #[test]
    fn pairing_equals_dot_product() {
        let mesh = Arc::new(RadialMesh::build(3.0, 40, 1.3, 3).unwrap());
        let mut s = state(mesh, NonlinearityKind::SineModulated, 0.2, Some(7));
        s.eps = 1e-3;
        s.refresh();
        let xi: Vec<f64> = (0..40).map(|i| 0.4 * (1.0 - i as f64 / 40.0) - 0.05).collect();
        let f = s.assemble_f(&xi).unwrap();
        let dot: f64 = f.iter().zip(&xi).map(|(a, b)| a * b).sum();
        assert!((dot - s.pairing(&xi).unwrap()).abs() < 1e-12 * dot.abs().max(1.0));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mesh = Arc::new(RadialMesh::build(2.0, 12, 1.0, 3).unwrap());
        let mut s = state(mesh, NonlinearityKind::Canonical, 0.5, Some(3));
        s.eps = 1e-2;
        s.refresh();
        let xi: Vec<f64> = (0..12).map(|i| 0.3 + 0.1 * ((i as f64) * 0.7).sin()).collect();
        let (f0, sub, diag, sup) = s.assemble_with_jacobian(&xi).unwrap();
        for j in 0..12 {
            let mut xp = xi.clone();
            let h = 1e-6;
            xp[j] += h;
            let fp = s.assemble_f(&xp).unwrap();
            for i in 0..12 {
                let fd = (fp[i] - f0[i]) / h;
                let exact = if i == j {
                    diag[i]
                } else if i + 1 == j {
                    sup[i]
                } else if j + 1 == i {
                    sub[j]
                } else {
                    0.0
                };
                assert!((fd - exact).abs() < 1e-4 * exact.abs().max(1e-3), "({i},{j}) {fd} vs {exact}");
            }
        }
    }
}
