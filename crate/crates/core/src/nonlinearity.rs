//! The critical-growth profile `φ_N`, the right-hand side `f`, its primitive,
//! and the Strauss approximations `f_k`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Largest argument for which `exp` stays finite.
pub const EXP_LIMIT: f64 = 709.782_712_893_384;

/// `φ_j(t) = e^t − Σ_{i=0}^{j−2} t^i/i!`; the subtracted sum is empty for `j <= 1`.
///
/// Below `t = max(j, 1)` the tail series `Σ_{i≥j−1} t^i/i!` is summed directly so
/// small arguments keep full relative precision.
pub fn phi(order: i32, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("phi_{order} needs t >= 0, got {t}")));
    }
    let first = (order - 1).max(0) as u32;
    if t < (order.max(1)) as f64 {
        return Ok(tail_series(first, t));
    }
    if t > EXP_LIMIT {
        return Err(Error::Range { t });
    }
    let mut partial = 0.0;
    let mut term = 1.0;
    for i in 0..first {
        partial += term;
        term *= t / (i as f64 + 1.0);
    }
    Ok(t.exp() - partial)
}

fn tail_series(first: u32, t: f64) -> f64 {
    if t == 0.0 {
        return if first == 0 { 1.0 } else { 0.0 };
    }
    // t^first / first!
    let mut term = 1.0;
    for i in 0..first {
        term *= t / (i as f64 + 1.0);
    }
    let mut sum = 0.0;
    let mut i = first;
    loop {
        sum += term;
        i += 1;
        term *= t / i as f64;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `φ_N(t)` for dimension `N >= 2`.
pub fn phi_n(n: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("phi_N needs N >= 2, got {n}")));
    }
    phi(n as i32, t)
}

/// `ln φ_j(t)`, finite even where `φ_j(t)` itself overflows.
pub fn ln_phi(order: i32, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("ln phi_{order} needs t >= 0, got {t}")));
    }
    if t < 700.0 {
        return Ok(phi(order, t)?.ln());
    }
    let first = (order - 1).max(0) as u32;
    // ln of the subtracted partial sum, dominated by its last term for large t
    let mut ln_partial = f64::NEG_INFINITY;
    let mut ln_term = 0.0f64;
    for i in 0..first {
        ln_partial = log_add(ln_partial, ln_term);
        ln_term += t.ln() - (i as f64 + 1.0).ln();
    }
    Ok(t + (-(ln_partial - t).exp()).ln_1p())
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// The tuple `(N, p, q, α, a₁, λ)` and the default weight decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub a1: f64,
    pub lambda: f64,
    #[serde(default = "default_weight_gamma")]
    pub weight_gamma: f64,
}

fn default_weight_gamma() -> f64 {
    2.0
}

impl ProblemParams {
    /// The baseline tuple used throughout the examples: N=2, p=4, q=1.5, α=1, a₁=1.
    pub fn baseline() -> Self {
        Self { n: 2, p: 4.0, q: 1.5, alpha: 1.0, a1: 1.0, lambda: 0.0, weight_gamma: 2.0 }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// `N' = N/(N−1)`.
    pub fn n_prime(&self) -> f64 {
        let n = self.n as f64;
        n / (n - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n as f64;
        if self.n < 2 {
            return Err(Error::Parameter(format!("N >= 2 violated (N = {})", self.n)));
        }
        if !(self.q > 1.0 && self.q < n) {
            return Err(Error::Parameter(format!("1<q<N violated (q = {}, N = {})", self.q, self.n)));
        }
        if !(self.p > n && self.p.is_finite()) {
            return Err(Error::Parameter(format!("p>N violated (p = {}, N = {})", self.p, self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha>0 violated (alpha = {})", self.alpha)));
        }
        if !(self.a1 > 0.0 && self.a1.is_finite()) {
            return Err(Error::Parameter(format!("a1>0 violated (a1 = {})", self.a1)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Parameter(format!("lambda>=0 violated (lambda = {})", self.lambda)));
        }
        if !(self.weight_gamma > n - self.q) {
            return Err(Error::Parameter(format!(
                "weight_gamma>N-q violated (weight_gamma = {}, N-q = {})",
                self.weight_gamma,
                n - self.q
            )));
        }
        Ok(())
    }
}

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant through user samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    t: Vec<f64>,
    v: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneTable {
    /// Builds the interpolant; a `(0, 0)` node is inserted when missing and the
    /// sign condition `t·f(t) >= 0` is enforced on every sample.
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = samples.to_vec();
        if pts.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::Parameter("tabulated nonlinearity has non-finite samples".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Parameter(format!("duplicate abscissa {} in tabulated nonlinearity", w[0].0)));
            }
        }
        for &(t, v) in &pts {
            if t * v < 0.0 {
                return Err(Error::Parameter(format!("sign condition t*f(t)>=0 violated at t = {t}")));
            }
            if t == 0.0 && v != 0.0 {
                return Err(Error::Parameter("tabulated nonlinearity needs f(0) = 0".into()));
            }
        }
        if !pts.iter().any(|p| p.0 == 0.0) {
            let pos = pts.partition_point(|p| p.0 < 0.0);
            pts.insert(pos, (0.0, 0.0));
        }
        if pts.len() < 2 {
            return Err(Error::Parameter("tabulated nonlinearity needs at least two samples".into()));
        }
        let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let v: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let d = pchip_slopes(&t, &v);
        Ok(Self { t, v, d })
    }

    /// Interpolated value; constant extension beyond the sampled range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.v[0];
        }
        if x >= self.t[n - 1] {
            return self.v[n - 1];
        }
        let i = self.t.partition_point(|&ti| ti <= x) - 1;
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.v[i] + h10 * h * self.d[i] + h01 * self.v[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn pchip_slopes(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3.min(n - 1)], delta[n - 2], delta[n - 3.min(n - 1)]);
    d
}

/// Which right-hand side `f` to use.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    /// `sign(t)|t|^{p−1} φ_N(α|t|^{N'})`, the odd extension of the model nonlinearity.
    Canonical,
    /// `|t|^{p−2} t sin²(t) φ_N(α|t|^{N'})`.
    SineModulated,
    /// `|t|^{p−2} t (sin t)₊ φ_N(α|t|^{N'})`; continuous, not differentiable at `t = π`.
    PositivePartSine,
    /// User samples, monotone-cubic interpolation.
    Tabulated(MonotoneTable),
    /// `f ≡ 0`.
    Zero,
}

/// Branch of the Strauss envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeBranch {
    Outer,
    Inner,
}

/// Upper bound for `s·f_k(s)`, kept in log form because the outer branch
/// overflows already for moderate `|s|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeBound {
    pub ln_value: f64,
    pub branch: EnvelopeBranch,
}

impl EnvelopeBound {
    pub fn value(&self) -> Result<f64> {
        if self.ln_value > EXP_LIMIT {
            return Err(Error::Range { t: self.ln_value });
        }
        Ok(self.ln_value.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `t·f(t) < 0`
    Sign,
    /// `t·f(t) > a₁|t|^p φ_N(α|t|^{N'})`
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthViolation {
    pub t: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GrowthReport {
    pub checked: usize,
    pub violations: Vec<GrowthViolation>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

type GCache = HashMap<(u64, u64), f64>;

/// `f` together with the problem parameters it depends on.
///
/// Clones share the primitive cache, so concurrent users observe one
/// consistent set of `G` values.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub params: ProblemParams,
    g_cache: Arc<Mutex<GCache>>,
    inner_slopes: Arc<Mutex<HashMap<u64, (f64, f64)>>>,
}

/// Relative accuracy of the panel integrals inside `f_k`.
const FK_REL_TOL: f64 = 1e-13;

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, params: ProblemParams) -> Self {
        Self {
            kind,
            params,
            g_cache: Arc::new(Mutex::new(HashMap::new())),
            inner_slopes: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn canonical(params: ProblemParams) -> Self {
        Self::new(NonlinearityKind::Canonical, params)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, NonlinearityKind::Zero)
    }

    fn growth_factor(&self, a: f64, t: f64) -> Result<f64> {
        let np = self.params.n_prime();
        let arg = if np == 2.0 { a * a } else { a.powf(np) };
        phi(self.params.n as i32, self.params.alpha * arg).map_err(|_| Error::Range { t })
    }

    /// `f(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("f evaluated at non-finite t = {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let a = t.abs();
        let p = self.params.p;
        let v = match &self.kind {
            NonlinearityKind::Zero => return Ok(0.0),
            NonlinearityKind::Tabulated(tab) => return Ok(tab.eval(t)),
            NonlinearityKind::Canonical => a.powf(p - 1.0) * self.growth_factor(a, t)? * t.signum(),
            NonlinearityKind::SineModulated => {
                let s = t.sin();
                a.powf(p - 2.0) * t * s * s * self.growth_factor(a, t)?
            }
            NonlinearityKind::PositivePartSine => {
                let s = t.sin().max(0.0);
                if s == 0.0 {
                    return Ok(0.0);
                }
                a.powf(p - 2.0) * t * s * self.growth_factor(a, t)?
            }
        };
        if !v.is_finite() {
            return Err(Error::Range { t });
        }
        Ok(v)
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        integrate(|x| self.eval(x), a, b, f64::MIN_POSITIVE, FK_REL_TOL)
    }

    /// `G(t) = ∫_0^t f` by adaptive quadrature with absolute tolerance `tol`.
    pub fn primitive(&self, t: f64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::Parameter(format!("primitive tolerance must be positive, got {tol}")));
        }
        if t == 0.0 || self.is_zero() {
            return Ok(0.0);
        }
        let key = (t.to_bits(), tol.to_bits());
        if let Some(v) = self.g_cache.lock().expect("G cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = integrate(|x| self.eval(x), 0.0, t, tol, 0.0)?;
        self.g_cache.lock().expect("G cache poisoned").insert(key, v);
        Ok(v)
    }

    /// Slopes of the two linear pieces around the origin:
    /// `(k²[G(2/k) − G(1/k)], k²[G(−2/k) − G(−1/k)])`.
    fn inner_slope(&self, k: u64) -> Result<(f64, f64)> {
        if let Some(v) = self.inner_slopes.lock().expect("slope cache poisoned").get(&k) {
            return Ok(*v);
        }
        let kf = k as f64;
        let pos = kf * kf * self.integral(1.0 / kf, 2.0 / kf)?;
        let neg = -kf * kf * self.integral(-2.0 / kf, -1.0 / kf)?;
        self.inner_slopes.lock().expect("slope cache poisoned").insert(k, (pos, neg));
        Ok((pos, neg))
    }

    /// Strauss approximation `f_k(s)`, evaluated branch by branch.
    ///
    /// Differences `G(b) − G(a)` are integrated directly over `[a, b]`.
    pub fn strauss(&self, k: u64, s: f64) -> Result<f64> {
        Ok(self.strauss_with_slope(k, s, false)?.0)
    }

    /// `(f_k(s), f_k'(s))`; the derivative exists almost everywhere and only
    /// needs point values of `f`, so non-differentiable `f` are fine.
    pub fn strauss_and_slope(&self, k: u64, s: f64) -> Result<(f64, f64)> {
        self.strauss_with_slope(k, s, true)
    }

    fn strauss_with_slope(&self, k: u64, s: f64, want_slope: bool) -> Result<(f64, f64)> {
        if k == 0 {
            return Err(Error::Parameter("Strauss index k must be >= 1".into()));
        }
        if !s.is_finite() {
            return Err(Error::Domain(format!("f_k evaluated at non-finite s = {s}")));
        }
        if s == 0.0 || self.is_zero() {
            let slope = if want_slope && !self.is_zero() { self.inner_slope(k)?.0 } else { 0.0 };
            return Ok((0.0, slope));
        }
        let kf = k as f64;
        let h = 1.0 / kf;
        if s >= kf {
            Ok((kf * self.integral(kf, kf + h)?, 0.0))
        } else if s >= h {
            let v = kf * self.integral(s, s + h)?;
            let d = if want_slope { kf * (self.eval(s + h)? - self.eval(s)?) } else { 0.0 };
            Ok((v, d))
        } else if s > 0.0 {
            let (pos, _) = self.inner_slope(k)?;
            Ok((pos * s, pos))
        } else if s >= -h {
            let (_, neg) = self.inner_slope(k)?;
            Ok((neg * s, neg))
        } else if s >= -kf {
            let v = kf * self.integral(s - h, s)?;
            let d = if want_slope { kf * (self.eval(s)? - self.eval(s - h)?) } else { 0.0 };
            Ok((v, d))
        } else {
            Ok((kf * self.integral(-kf - h, -kf)?, 0.0))
        }
    }

    /// Checks `0 <= t f(t) <= a₁|t|^p φ_N(α|t|^{N'})` on every grid point.
    pub fn check_growth(&self, grid: &[f64]) -> GrowthReport {
        let mut report = GrowthReport { checked: grid.len(), violations: Vec::new() };
        let pr = &self.params;
        for &t in grid {
            let tf = match self.eval(t) {
                Ok(v) => t * v,
                Err(_) => {
                    report.violations.push(GrowthViolation { t, kind: ViolationKind::Upper });
                    continue;
                }
            };
            if tf < 0.0 {
                report.violations.push(GrowthViolation { t, kind: ViolationKind::Sign });
                continue;
            }
            if t == 0.0 || tf == 0.0 {
                continue;
            }
            let a = t.abs();
            let ln_bound = match ln_phi(pr.n as i32, pr.alpha * a.powf(pr.n_prime())) {
                Ok(l) => pr.a1.ln() + pr.p * a.ln() + l,
                Err(_) => f64::INFINITY,
            };
            if tf.ln() > ln_bound + 1e-12 {
                report.violations.push(GrowthViolation { t, kind: ViolationKind::Upper });
            }
        }
        report
    }

    /// Upper bound for `s·f_k(s)`: `C₁|s|^p φ_N(2^{N'}α|s|^{N'})` for `|s| >= 1/k`,
    /// `C₂ k^{−(p−2)} s²` otherwise, with `C₁ = a₁2^p`, `C₂ = a₁2^{p−1}e^{2^{N'}α}`.
    pub fn strauss_envelope(&self, k: u64, s: f64) -> Result<EnvelopeBound> {
        if k == 0 {
            return Err(Error::Parameter("Strauss index k must be >= 1".into()));
        }
        let pr = &self.params;
        let np = pr.n_prime();
        let two_np = 2f64.powf(np);
        let a = s.abs();
        let kf = k as f64;
        if a >= 1.0 / kf {
            let ln_c1 = pr.a1.ln() + pr.p * std::f64::consts::LN_2;
            let ln_phi_v = ln_phi(pr.n as i32, two_np * pr.alpha * a.powf(np))?;
            Ok(EnvelopeBound { ln_value: ln_c1 + pr.p * a.ln() + ln_phi_v, branch: EnvelopeBranch::Outer })
        } else {
            let ln_c2 = pr.a1.ln() + (pr.p - 1.0) * std::f64::consts::LN_2 + two_np * pr.alpha;
            let ln_value = if a == 0.0 {
                f64::NEG_INFINITY
            } else {
                ln_c2 - (pr.p - 2.0) * kf.ln() + 2.0 * a.ln()
            };
            Ok(EnvelopeBound { ln_value, branch: EnvelopeBranch::Inner })
        }
    }
}
