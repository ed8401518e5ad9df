//! Positive radial weights `a(r)` with integrability checks.

use crate::error::{Error, Result};
use crate::mesh::{omega, RadialMesh};
use crate::quadrature::integrate;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `(1+r)^{−γ}`
    PowerDecay { gamma: f64 },
    /// `e^{−rate·r}`
    Exponential { rate: f64 },
    /// 1 on `[0, radius]`, `e^{−(r−radius)}` beyond.
    ConstantOnBall { radius: f64 },
    /// Piecewise-linear through `(r, a)` samples starting at `r = 0`, then
    /// `a_last · e^{−tail_rate (r − r_last)}`.
    Tabulated { r: Vec<f64>, a: Vec<f64>, tail_rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub kind: WeightKind,
    pub amplitude: f64,
}

/// Outcome of the `L^s(ℝ^N)` integrability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrability {
    /// `ω ∫_0^{R_CUT} a^s r^{N−1} dr`
    pub head: f64,
    /// Closed-form upper bound for the remainder beyond `R_CUT`; infinite when divergent.
    pub tail_bound: f64,
    /// Whether the closed-form criterion for the family says the integral is finite.
    pub closed_form_finite: bool,
}

impl Integrability {
    pub fn finite(&self) -> bool {
        self.closed_form_finite && self.head.is_finite() && self.tail_bound.is_finite()
    }

    /// Upper estimate of `‖a‖_{L^s}^s`.
    pub fn upper(&self) -> f64 {
        self.head + self.tail_bound
    }
}

/// Radius up to which integrability is checked numerically.
pub const R_CUT: f64 = 1e4;

impl Weight {
    pub fn power(gamma: f64) -> Self {
        Self { kind: WeightKind::PowerDecay { gamma }, amplitude: 1.0 }
    }

    pub fn exponential(rate: f64) -> Self {
        Self { kind: WeightKind::Exponential { rate }, amplitude: 1.0 }
    }

    pub fn constant_on_ball(radius: f64) -> Self {
        Self { kind: WeightKind::ConstantOnBall { radius }, amplitude: 1.0 }
    }

    pub fn tabulated(r: Vec<f64>, a: Vec<f64>, tail_rate: f64) -> Self {
        Self { kind: WeightKind::Tabulated { r, a, tail_rate }, amplitude: 1.0 }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        let shape = match &self.kind {
            WeightKind::PowerDecay { gamma } => (1.0 + r).powf(-gamma),
            WeightKind::Exponential { rate } => (-rate * r).exp(),
            WeightKind::ConstantOnBall { radius } => {
                if r <= *radius {
                    1.0
                } else {
                    (-(r - radius)).exp()
                }
            }
            WeightKind::Tabulated { r: rs, a, tail_rate } => {
                let last = rs.len() - 1;
                if r >= rs[last] {
                    a[last] * (-tail_rate * (r - rs[last])).exp()
                } else {
                    let i = rs.partition_point(|&x| x <= r) - 1;
                    let s = (r - rs[i]) / (rs[i + 1] - rs[i]);
                    (1.0 - s) * a[i] + s * a[i + 1]
                }
            }
        };
        self.amplitude * shape
    }

    pub fn is_decreasing(&self) -> bool {
        match &self.kind {
            WeightKind::Tabulated { a, .. } => a.windows(2).all(|w| w[1] <= w[0]),
            _ => true,
        }
    }

    /// Checks positivity, boundedness and `a ∈ L^{N/(N−q)}(ℝ^N)`.
    pub fn validate(&self, n: usize, q: f64) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Parameter(format!("weight amplitude>0 violated (amplitude = {})", self.amplitude)));
        }
        let nq = n as f64 - q;
        match &self.kind {
            WeightKind::PowerDecay { gamma } => {
                if !(*gamma > nq) {
                    return Err(Error::Parameter(format!(
                        "weight gamma>N-q violated (gamma = {gamma}, N-q = {nq})"
                    )));
                }
            }
            WeightKind::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::Parameter(format!("weight rate>0 violated (rate = {rate})")));
                }
            }
            WeightKind::ConstantOnBall { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Parameter(format!("weight radius>0 violated (radius = {radius})")));
                }
            }
            WeightKind::Tabulated { r, a, tail_rate } => {
                if r.len() < 2 || r.len() != a.len() {
                    return Err(Error::Parameter("tabulated weight needs matching r/a lists of length >= 2".into()));
                }
                if r[0] != 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Parameter("tabulated weight radii must start at 0 and increase".into()));
                }
                if a.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::Parameter("tabulated weight values must be positive and finite".into()));
                }
                if !(*tail_rate > 0.0) {
                    return Err(Error::Parameter(format!("weight tail_rate>0 violated (tail_rate = {tail_rate})")));
                }
            }
        }
        let s = n as f64 / nq;
        let chk = self.integrability(n, s)?;
        if !chk.finite() {
            return Err(Error::Parameter(format!("weight is not in L^{s}(R^{n})")));
        }
        Ok(())
    }

    /// `ω ∫_0^∞ a(r)^s r^{N−1} dr`, integrated numerically to [`R_CUT`] with a
    /// closed-form bound on the remainder.
    pub fn integrability(&self, n: usize, s: f64) -> Result<Integrability> {
        let nf = n as f64;
        let om = omega(n);
        let amp_s = self.amplitude.powf(s);
        let mut breaks = vec![0.0];
        if let WeightKind::ConstantOnBall { radius } = &self.kind {
            breaks.push(*radius);
        }
        if let WeightKind::Tabulated { r, .. } = &self.kind {
            breaks.extend(r.iter().copied().skip(1));
        }
        let mut x = 1.0;
        while x < R_CUT {
            breaks.push(x);
            x *= 2.0;
        }
        breaks.push(R_CUT);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut head = 0.0;
        for w in breaks.windows(2) {
            head += integrate(
                |r: f64| Ok(self.eval(r).powf(s) * r.powf(nf - 1.0)),
                w[0],
                w[1],
                1e-300,
                1e-10,
            )?;
        }
        head *= om;
        // tail bounds: ∫_L^∞ e^{−c r} r^{N−1} dr <= e^{−cL} L^{N−1} / (c − (N−1)/L) when c L > N−1
        let exp_tail = |c: f64, l: f64, pre: f64| -> f64 {
            let denom = c - (nf - 1.0) / l;
            if denom > 0.0 {
                pre * (-c * l).exp() * l.powf(nf - 1.0) / denom
            } else {
                f64::INFINITY
            }
        };
        let l = R_CUT;
        let (closed, tail) = match &self.kind {
            WeightKind::PowerDecay { gamma } => {
                let e = gamma * s - nf;
                if e > 0.0 {
                    (true, amp_s * (1.0 + l).powf(-e) / e)
                } else {
                    (false, f64::INFINITY)
                }
            }
            WeightKind::Exponential { rate } => (true, exp_tail(rate * s, l, amp_s)),
            WeightKind::ConstantOnBall { radius } => (true, exp_tail(s, l, amp_s * (s * radius).exp())),
            WeightKind::Tabulated { r, a, tail_rate } => {
                let rl = *r.last().expect("validated");
                let al = *a.last().expect("validated");
                let pre = (amp_s * al.powf(s)) * (s * tail_rate * rl).exp();
                (true, exp_tail(s * tail_rate, l.max(rl), pre))
            }
        };
        Ok(Integrability { head, tail_bound: om * tail, closed_form_finite: closed })
    }

    /// `‖a‖_{L^s(ℝ^N)}`, using the numerical head plus the tail bound.
    pub fn lebesgue_norm(&self, n: usize, s: f64) -> Result<f64> {
        Ok(self.integrability(n, s)?.upper().powf(1.0 / s))
    }

    /// `sup a`.
    pub fn sup(&self) -> f64 {
        match &self.kind {
            WeightKind::Tabulated { a, .. } => self.amplitude * a.iter().copied().fold(0.0, f64::max),
            _ => self.eval(0.0),
        }
    }

    /// `inf_{B_R} a`: exactly `a(R)` for decreasing weights, otherwise the minimum
    /// over mesh nodes and quadrature points with `r <= R`.
    pub fn inf_on_ball(&self, r_ball: f64, mesh: &RadialMesh) -> f64 {
        if self.is_decreasing() {
            return self.eval(r_ball);
        }
        let mut m = self.eval(r_ball);
        for &r in mesh.nodes().iter().chain(mesh.all_quad_r()) {
            if r <= r_ball {
                m = m.min(self.eval(r));
            }
        }
        m
    }
}
