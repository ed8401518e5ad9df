//! TOML run configuration. Unknown keys are rejected and every parameter
//! window is checked at load time.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::apriori::default_exponents;
use crate::error::{Error, Result};
use crate::galerkin::Schedule;
use crate::nonlinearity::{MonotoneTable, NonlinearityKind, ProblemParams};
use crate::weights::Weight;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    problem: RawProblem,
    weight: RawWeight,
    mesh: RawMesh,
    #[serde(default)]
    schedule: RawSchedule,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    constants: RawConstants,
    #[serde(default)]
    ledger: RawLedger,
    #[serde(default)]
    threshold: RawThreshold,
    #[serde(default)]
    check_fk: RawCheckFk,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    n: usize,
    p: f64,
    q: f64,
    alpha: f64,
    a1: f64,
    lambda: Option<f64>,
    lambda_fraction: Option<f64>,
    #[serde(default = "default_nonlinearity")]
    nonlinearity: String,
    table: Option<Vec<[f64; 2]>>,
}

fn default_nonlinearity() -> String {
    "canonical".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeight {
    kind: String,
    amplitude: Option<f64>,
    rate: Option<f64>,
    gamma: Option<f64>,
    radius: Option<f64>,
    r: Option<Vec<f64>>,
    a: Option<Vec<f64>>,
    tail_rate: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    radius: f64,
    elements: usize,
    #[serde(default = "one")]
    grading: f64,
    #[serde(default = "four")]
    quadrature_points: usize,
    radii: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    k: Option<Vec<u64>>,
    n: Option<Vec<u64>>,
    extend: Option<bool>,
    n_max: Option<u64>,
    cauchy_tol: Option<f64>,
    unregularized_final: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    lambdas: Option<Vec<f64>>,
    lambda_fractions: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    tol: Option<f64>,
    rel_tol: Option<f64>,
    certificate_samples: Option<usize>,
    starts: Option<usize>,
    max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    samples: Option<usize>,
    #[serde(rename = "K1")]
    k1: Option<f64>,
    #[serde(rename = "K2")]
    k2: Option<f64>,
    #[serde(rename = "K3")]
    k3: Option<f64>,
    #[serde(rename = "C_alphaN")]
    c_alpha_n: Option<f64>,
    #[serde(rename = "C_star")]
    c_star: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLedger {
    pbar_star: Option<f64>,
    ptilde: Option<f64>,
    #[serde(rename = "R_star")]
    r_star: Option<f64>,
    #[serde(rename = "C_rho")]
    c_rho: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThreshold {
    delta: Option<f64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    points: Option<usize>,
    eigen_elements: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheckFk {
    k_uniform: Option<u64>,
    s_uniform: Option<f64>,
    uniform_step: Option<f64>,
    k_max: Option<u64>,
    s_max: Option<f64>,
    step: Option<f64>,
}

/// `λ` either absolute or as a fraction of the computed `λ*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Absolute(f64),
    Fraction(f64),
}

impl LambdaSpec {
    pub fn resolve(&self, lambda_star: f64) -> f64 {
        match *self {
            LambdaSpec::Absolute(l) => l,
            LambdaSpec::Fraction(f) => f * lambda_star,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub radius: f64,
    pub elements: usize,
    pub grading: f64,
    pub quadrature_points: usize,
    /// Ball radii for the exhaustion run.
    pub radii: Vec<f64>,
}

impl MeshSpec {
    /// Largest radius mentioned anywhere; the constants are estimated there.
    pub fn largest_radius(&self) -> f64 {
        self.radii.iter().copied().fold(self.radius, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub tol: f64,
    pub rel_tol: f64,
    pub certificate_samples: usize,
    pub starts: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstantOverrides {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub c_alpha_n: Option<f64>,
    pub c_star: Option<f64>,
}

impl ConstantOverrides {
    pub fn complete(&self) -> bool {
        self.k1.is_some() && self.k2.is_some() && self.k3.is_some() && self.c_alpha_n.is_some() && self.c_star.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSpec {
    pub pbar_star: f64,
    pub ptilde: f64,
    pub r_star: f64,
    /// `C(ϱ)`; defaults to `C(α,N)^{N'}` when absent.
    pub c_rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    pub delta: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    pub eigen_elements: usize,
}

impl ThresholdSpec {
    /// Log-spaced grid from `lambda_min` to `lambda_max`.
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lambda_min];
        }
        let (a, b) = (self.lambda_min.ln(), self.lambda_max.ln());
        (0..self.points).map(|i| (a + (b - a) * i as f64 / (self.points - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckFkSpec {
    pub k_uniform: u64,
    pub s_uniform: f64,
    pub uniform_step: f64,
    pub k_max: u64,
    pub s_max: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// `lambda` is 0 here; the CLI resolves it once `λ*` is known.
    pub params: ProblemParams,
    pub lambda: LambdaSpec,
    pub nonlinearity: NonlinearityKind,
    pub weight: Weight,
    pub mesh: MeshSpec,
    pub schedule: Schedule,
    pub sweep: Vec<LambdaSpec>,
    pub tolerances: Tolerances,
    pub constant_samples: usize,
    pub overrides: ConstantOverrides,
    pub ledger: LedgerSpec,
    pub threshold: ThresholdSpec,
    pub check_fk: CheckFkSpec,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Parameter(m) => Error::Config(m),
        other => other,
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let pr = raw.problem;
        let n = pr.n;
        let nf = n as f64;
        let lambda = match (pr.lambda, pr.lambda_fraction) {
            (Some(l), None) => LambdaSpec::Absolute(l),
            (None, Some(f)) => LambdaSpec::Fraction(f),
            (None, None) => LambdaSpec::Fraction(0.01),
            (Some(_), Some(_)) => {
                return Err(Error::Config("problem: give either lambda or lambda_fraction, not both".into()))
            }
        };
        match lambda {
            LambdaSpec::Absolute(l) => require(l >= 0.0 && l.is_finite(), format!("lambda>=0 violated (lambda = {l})"))?,
            LambdaSpec::Fraction(f) => {
                require(f >= 0.0 && f.is_finite(), format!("lambda_fraction>=0 violated (lambda_fraction = {f})"))?
            }
        }

        let weight = weight_from(&raw.weight)?;
        let weight_gamma = match weight.kind {
            crate::weights::WeightKind::PowerDecay { gamma } => gamma,
            _ => nf,
        };
        let params = ProblemParams { n, p: pr.p, q: pr.q, alpha: pr.alpha, a1: pr.a1, lambda: 0.0, weight_gamma };
        params.validate().map_err(cfg_err)?;
        weight.validate(n, pr.q).map_err(cfg_err)?;

        let nonlinearity = match (pr.nonlinearity.as_str(), pr.table) {
            ("canonical", None) => NonlinearityKind::Canonical,
            ("sine-modulated", None) => NonlinearityKind::SineModulated,
            ("positive-part-sine", None) => NonlinearityKind::PositivePartSine,
            ("zero", None) => NonlinearityKind::Zero,
            ("tabulated", Some(t)) => {
                let pts: Vec<(f64, f64)> = t.iter().map(|s| (s[0], s[1])).collect();
                NonlinearityKind::Tabulated(MonotoneTable::new(&pts).map_err(cfg_err)?)
            }
            ("tabulated", None) => return Err(Error::Config("nonlinearity = \"tabulated\" needs a table".into())),
            (k, Some(_)) if k != "tabulated" => {
                return Err(Error::Config(format!("table is only allowed with nonlinearity = \"tabulated\" (got {k:?})")))
            }
            (k, _) => return Err(Error::Config(format!("unknown nonlinearity {k:?}"))),
        };

        let m = raw.mesh;
        require(m.radius > 0.0 && m.radius.is_finite(), format!("mesh radius>0 violated (radius = {})", m.radius))?;
        require(m.elements >= 2, format!("mesh elements>=2 violated (elements = {})", m.elements))?;
        require(m.grading >= 1.0, format!("mesh grading>=1 violated (grading = {})", m.grading))?;
        require(
            (1..=10).contains(&m.quadrature_points),
            format!("quadrature_points in 1..=10 violated ({})", m.quadrature_points),
        )?;
        let radii = m.radii.unwrap_or_default();
        require(
            radii.iter().all(|r| *r > 0.0 && r.is_finite()) && radii.windows(2).all(|w| w[1] > w[0]),
            "mesh radii positive and strictly increasing violated",
        )?;
        let mesh = MeshSpec {
            radius: m.radius,
            elements: m.elements,
            grading: m.grading,
            quadrature_points: m.quadrature_points,
            radii,
        };

        let sr = raw.schedule;
        let def = Schedule::default();
        let steps = match (sr.k, sr.n) {
            (None, None) => def.steps.clone(),
            (Some(k), Some(nn)) => {
                require(k.len() == nn.len(), "schedule k and n lists must have equal length")?;
                k.into_iter().zip(nn).collect()
            }
            _ => return Err(Error::Config("schedule: give both k and n lists".into())),
        };
        require(!steps.is_empty(), "schedule needs at least one step")?;
        require(steps.iter().all(|(k, n)| *k >= 1 && *n >= 1), "schedule k>=1 and n>=1 violated")?;
        let schedule = Schedule {
            steps,
            extend: sr.extend.unwrap_or(def.extend),
            n_max: sr.n_max.unwrap_or(def.n_max),
            cauchy_tol: sr.cauchy_tol.unwrap_or(def.cauchy_tol),
            unregularized_final: sr.unregularized_final.unwrap_or(def.unregularized_final),
        };
        require(schedule.cauchy_tol > 0.0, "schedule cauchy_tol>0 violated")?;

        let sweep: Vec<LambdaSpec> = match (raw.sweep.lambdas, raw.sweep.lambda_fractions) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("sweep: give either lambdas or lambda_fractions, not both".into()))
            }
            (Some(l), None) => l.into_iter().map(LambdaSpec::Absolute).collect(),
            (None, Some(f)) => {
                require(
                    f.iter().all(|x| *x > 0.0 && *x < 1.0),
                    "sweep lambda_fractions within (0, 1) violated",
                )?;
                f.into_iter().map(LambdaSpec::Fraction).collect()
            }
            (None, None) => (1..=10).map(|j| LambdaSpec::Fraction(0.5f64.powi(j))).collect(),
        };
        let vals: Vec<f64> = sweep.iter().map(|s| s.resolve(1.0)).collect();
        require(
            vals.iter().all(|v| *v > 0.0) && vals.windows(2).all(|w| w[1] < w[0]),
            "sweep lambda list strictly decreasing and positive violated",
        )?;

        let t = raw.tolerances;
        let tolerances = Tolerances {
            tol: t.tol.unwrap_or(1e-8),
            rel_tol: t.rel_tol.unwrap_or(1e-11),
            certificate_samples: t.certificate_samples.unwrap_or(64),
            starts: t.starts.unwrap_or(4),
            max_iter: t.max_iter.unwrap_or(60),
        };
        require(tolerances.tol > 0.0, "tolerances tol>0 violated")?;
        require(tolerances.rel_tol > 0.0, "tolerances rel_tol>0 violated")?;

        let c = raw.constants;
        let overrides = ConstantOverrides { k1: c.k1, k2: c.k2, k3: c.k3, c_alpha_n: c.c_alpha_n, c_star: c.c_star };
        for (name, v) in [
            ("K1", overrides.k1),
            ("K2", overrides.k2),
            ("K3", overrides.k3),
            ("C_alphaN", overrides.c_alpha_n),
            ("C_star", overrides.c_star),
        ] {
            if let Some(v) = v {
                require(v > 0.0 && v.is_finite(), format!("{name}>0 violated ({name} = {v})"))?;
            }
        }

        let (pb, pt) = default_exponents(n);
        let l = raw.ledger;
        let ledger = LedgerSpec {
            pbar_star: l.pbar_star.unwrap_or(pb),
            ptilde: l.ptilde.unwrap_or(pt),
            r_star: l.r_star.unwrap_or(1.0),
            c_rho: l.c_rho,
        };
        require(
            ledger.pbar_star > 2.0 * nf * nf,
            format!("pbar_star>2N^2 violated (pbar_star = {})", ledger.pbar_star),
        )?;
        require(
            ledger.ptilde > 2.0 * nf && ledger.ptilde < ledger.pbar_star / nf,
            format!("2N<ptilde<pbar_star/N violated (ptilde = {})", ledger.ptilde),
        )?;
        require(ledger.r_star > 0.0, format!("R_star>0 violated (R_star = {})", ledger.r_star))?;
        if let Some(c) = ledger.c_rho {
            require(c >= 0.0, format!("C_rho>=0 violated (C_rho = {c})"))?;
        }

        let th = raw.threshold;
        let threshold = ThresholdSpec {
            delta: th.delta.unwrap_or(0.1),
            lambda_min: th.lambda_min.unwrap_or(1e-2),
            lambda_max: th.lambda_max.unwrap_or(1e8),
            points: th.points.unwrap_or(30),
            eigen_elements: th.eigen_elements.unwrap_or(400),
        };
        require(threshold.delta > 0.0, format!("delta>0 violated (delta = {})", threshold.delta))?;
        require(
            threshold.lambda_min > 0.0 && threshold.lambda_max >= threshold.lambda_min,
            "0<lambda_min<=lambda_max violated",
        )?;
        require(threshold.points >= 1, "threshold points>=1 violated")?;
        require(threshold.eigen_elements >= 2, "eigen_elements>=2 violated")?;

        let f = raw.check_fk;
        let check_fk = CheckFkSpec {
            k_uniform: f.k_uniform.unwrap_or(10_000),
            s_uniform: f.s_uniform.unwrap_or(10.0),
            uniform_step: f.uniform_step.unwrap_or(1e-3),
            k_max: f.k_max.unwrap_or(100),
            s_max: f.s_max.unwrap_or(20.0),
            step: f.step.unwrap_or(0.01),
        };
        require(check_fk.k_uniform >= 1 && check_fk.k_max >= 1, "check_fk k>=1 violated")?;
        require(
            check_fk.s_uniform > 0.0 && check_fk.s_max > 0.0 && check_fk.uniform_step > 0.0 && check_fk.step > 0.0,
            "check_fk ranges and steps must be positive",
        )?;

        Ok(RunConfig {
            params,
            lambda,
            nonlinearity,
            weight,
            mesh,
            schedule,
            sweep,
            tolerances,
            constant_samples: c.samples.unwrap_or(200),
            overrides,
            ledger,
            threshold,
            check_fk,
            out: raw.out,
            seed: raw.seed.unwrap_or(0),
        })
    }
}

fn weight_from(w: &RawWeight) -> Result<Weight> {
    let given: Vec<&str> = [
        ("rate", w.rate.is_some()),
        ("gamma", w.gamma.is_some()),
        ("radius", w.radius.is_some()),
        ("r", w.r.is_some()),
        ("a", w.a.is_some()),
        ("tail_rate", w.tail_rate.is_some()),
    ]
    .iter()
    .filter(|(_, s)| *s)
    .map(|(k, _)| *k)
    .collect();
    let allowed: &[&str] = match w.kind.as_str() {
        "exponential" => &["rate"],
        "power" => &["gamma"],
        "constant-on-ball" => &["radius"],
        "tabulated" => &["r", "a", "tail_rate"],
        k => return Err(Error::Config(format!("unknown weight kind {k:?}"))),
    };
    if let Some(bad) = given.iter().find(|k| !allowed.contains(k)) {
        return Err(Error::Config(format!("weight key {bad:?} is not valid for kind {:?}", w.kind)));
    }
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("weight kind {:?} needs {name}", w.kind)));
    let base = match w.kind.as_str() {
        "exponential" => Weight::exponential(need(w.rate, "rate")?),
        "power" => Weight::power(need(w.gamma, "gamma")?),
        "constant-on-ball" => Weight::constant_on_ball(need(w.radius, "radius")?),
        _ => {
            let r = w.r.clone().ok_or_else(|| Error::Config("tabulated weight needs r".into()))?;
            let a = w.a.clone().ok_or_else(|| Error::Config("tabulated weight needs a".into()))?;
            Weight::tabulated(r, a, need(w.tail_rate, "tail_rate")?)
        }
    };
    Ok(base.with_amplitude(w.amplitude.unwrap_or(1.0)))
}
