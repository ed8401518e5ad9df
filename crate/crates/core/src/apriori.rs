//! Moser-iteration bookkeeping: the sup-norm, decay and `Θ` bounds.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::ball_volume;

/// Default `(p̄*, p̃)` per dimension.
pub fn default_exponents(n: usize) -> (f64, f64) {
    match n {
        2 => (10.0, 4.5),
        3 => (20.0, 6.5),
        _ => {
            let nf = n as f64;
            let pbar = 2.0 * nf * nf + 2.0;
            (pbar, 0.5 * (2.0 * nf + pbar / nf))
        }
    }
}

/// Inputs of `C₀ = C(ϱ) + λ*‖a‖_{L^{N/(N−q)}} + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxConstants {
    pub c_rho: f64,
    pub lambda_star: f64,
    pub a_norm: f64,
    pub r_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoserLedger {
    pub n: usize,
    pub pbar_star: f64,
    pub ptilde: f64,
    pub beta0: f64,
    pub p: f64,
    pub s1: f64,
    pub s2: f64,
    /// Bound on the omitted tail of `S₂`.
    pub s2_width: f64,
    pub s3: f64,
    pub s3_width: f64,
    pub q_inf: f64,
    /// Bound on `ln Q∞ − ln Q_K` at the last factor used.
    pub q_tail: f64,
    pub q_factors: usize,
    pub c_star: f64,
    pub b0: f64,
    pub c0: f64,
    pub c_prime: f64,
    /// `2^N (C_*+1)^N B₀`
    pub c_big: f64,
    pub theta: f64,
    pub r_star: f64,
}

/// `Σ_{n>=k} P^n` and `Σ_{n>=k} n P^n`.
fn geometric_tails(p: f64, k: usize) -> (f64, f64) {
    let pk = p.powi(k as i32);
    let s0 = pk / (1.0 - p);
    let s1 = pk * (k as f64 * (1.0 - p) + p) / ((1.0 - p) * (1.0 - p));
    (s0, s1)
}

pub fn build_ledger(n: usize, pbar_star: f64, ptilde: f64, c_star: f64, aux: &AuxConstants) -> Result<MoserLedger> {
    let nf = n as f64;
    if n < 2 {
        return Err(Error::Parameter(format!("N>=2 violated (N = {n})")));
    }
    if !(pbar_star > 2.0 * nf * nf) {
        return Err(Error::Parameter(format!("pbar_star>2N^2 violated (pbar_star = {pbar_star})")));
    }
    if !(ptilde > 2.0 * nf && ptilde < pbar_star / nf) {
        return Err(Error::Parameter(format!("2N<ptilde<pbar_star/N violated (ptilde = {ptilde})")));
    }
    if !(c_star > 0.0) || !(aux.r_star > 0.0) || !(aux.c_rho >= 0.0) || !(aux.lambda_star >= 0.0) || !(aux.a_norm >= 0.0)
    {
        return Err(Error::Parameter("ledger constants must be positive (C_*, R_*) and nonnegative (C(rho), A)".into()));
    }
    let beta0 = pbar_star / ptilde - nf;
    let p = ptilde * nf / pbar_star;
    let nb = nf + beta0;
    let s1 = 1.0 / (nb * (1.0 - p));

    // S₂ = N/(N+β₀) Σ P^n (ln(N+β₀) + n ln(1/P))
    let (la, lb) = (nb.ln(), (1.0 / p).ln());
    let mut s2 = 0.0;
    let mut k = 0;
    let s2_width = loop {
        let (t0, t1) = geometric_tails(p, k);
        let tail = nf / nb * (la * t0 + lb * t1);
        if tail < 1e-12 {
            break tail;
        }
        s2 += nf / nb * p.powi(k as i32) * (la + k as f64 * lb);
        k += 1;
    };

    let b0 = 1.0 + ball_volume(n, 2.0 * aux.r_star);
    let c0 = aux.c_rho + aux.lambda_star * aux.a_norm + 1.0;
    let c_prime = (nf.powf(nf) * 2f64.powf(2.0 * nf - 1.0) + 2f64.powf(nf - 1.0)) / aux.r_star.powf(nf);
    // S₃ = Σ P^n ln(C₀ + C'2^{N(n+1)}) / (N+β₀); ln(C₀+D_n) <= ln(C₀+C') + N(n+1) ln 2
    let mut s3 = 0.0;
    let mut k = 0;
    let lc = (c0 + c_prime).ln();
    let s3_width = loop {
        let (t0, t1) = geometric_tails(p, k);
        let tail = (lc * t0 + nf * 2f64.ln() * (t1 + t0)) / nb;
        if tail < 1e-12 {
            break tail;
        }
        let dn = c_prime * 2f64.powf(nf * (k as f64 + 1.0));
        s3 += p.powi(k as i32) * (c0 + dn).ln() / nb;
        k += 1;
    };

    // Q∞ = Π_{k>=2} (1 − P^k)^{−1}; −ln(1−x) <= 2x for x <= 1/2
    let mut ln_q = 0.0;
    let mut k = 2;
    let q_tail = loop {
        let pk = p.powi(k as i32);
        ln_q -= (-pk).ln_1p();
        let next = p.powi(k as i32 + 1);
        let tail = 2.0 * next / (1.0 - p);
        if next <= 0.5 && tail < 1e-12 {
            break tail;
        }
        k += 1;
    };
    let q_inf = ln_q.exp();
    let c_big = 2f64.powf(nf) * (c_star + 1.0).powf(nf) * b0;
    Ok(MoserLedger {
        n,
        pbar_star,
        ptilde,
        beta0,
        p,
        s1,
        s2,
        s2_width,
        s3,
        s3_width,
        q_inf,
        q_tail,
        q_factors: k - 1,
        c_star,
        b0,
        c0,
        c_prime,
        c_big,
        theta: beta0 / (nb * q_inf),
        r_star: aux.r_star,
    })
}

impl MoserLedger {
    /// `β_k` from `N + β_k = (N + β₀)/P^k`.
    pub fn beta(&self, k: usize) -> f64 {
        let nf = self.n as f64;
        (nf + self.beta0) / self.p.powi(k as i32) - nf
    }

    /// `Q_k = Π_{j=2}^{k+1} (1 − P^j)^{−1}`.
    pub fn q_partial(&self, k: usize) -> f64 {
        (2..=k + 1).map(|j| 1.0 / (1.0 - self.p.powi(j as i32))).product()
    }

    /// `C^{S₁} e^{S₂} e^{S₃}` with the series tails included.
    pub fn sup_constant(&self) -> f64 {
        self.c_big.powf(self.s1) * (self.s2 + self.s2_width + self.s3 + self.s3_width).exp()
    }

    /// `C^{S₁}e^{S₂}e^{S₃} max{1, C_*‖u‖_{W^{1,N}}}`.
    pub fn sup_bound(&self, w1n: f64) -> f64 {
        self.sup_constant() * (self.c_star * w1n).max(1.0)
    }

    /// `(N S₁ S₂)^{1/(N+β₀)} x^Θ`.
    pub fn decay_bound(&self, lp_norm: f64) -> f64 {
        let nb = self.n as f64 + self.beta0;
        let s2 = self.s2 + self.s2_width;
        (self.n as f64 * self.s1 * s2).powf(1.0 / nb) * lp_norm.max(0.0).powf(self.theta)
    }

    pub fn theta_exponent(&self) -> f64 {
        self.theta
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("N", self.n as f64),
            ("pbar_star", self.pbar_star),
            ("ptilde", self.ptilde),
            ("beta0", self.beta0),
            ("P", self.p),
            ("S1", self.s1),
            ("S2", self.s2),
            ("S2_width", self.s2_width),
            ("S3", self.s3),
            ("S3_width", self.s3_width),
            ("Q_inf", self.q_inf),
            ("Q_inf_log_tail", self.q_tail),
            ("C_star", self.c_star),
            ("B0", self.b0),
            ("C0", self.c0),
            ("Cprime", self.c_prime),
            ("C", self.c_big),
            ("R_star", self.r_star),
            ("Theta", self.theta),
            ("sup_constant", self.sup_constant()),
        ] {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}
