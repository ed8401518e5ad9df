//! Radial Galerkin solver for the quasilinear problem
//!
//! ```text
//! −Δ_N u + |u|^{N−2}u = λ a(|x|) |u|^{q−2}u + f(u)   in ℝ^N
//! ```
//!
//! with `1 < q < N < p` and `f` of Trudinger-Moser critical growth
//! `0 <= t f(t) <= a₁|t|^p φ_N(α|t|^{N/(N−1)})`.
//!
//! The crate reduces to radial functions on balls `B_R`, builds the
//! finite-dimensional Galerkin map on a hat-function basis, locates its zero
//! inside a certified ball, and evaluates the explicit constants around the
//! existence window (`ϱ`, `λ*`), the nonexistence threshold, and the Moser
//! iteration ledger.

pub mod apriori;
pub mod brouwer;
pub mod cli;
pub mod config;
pub mod error;
pub mod galerkin;
pub mod mesh;
pub mod nonlinearity;
pub mod quadrature;
pub mod report;
pub mod thresholds;
pub mod weights;

pub use error::{Error, Result};
pub use mesh::{alpha_n, omega, GridFunction, RadialMesh};
pub use nonlinearity::{phi_n, Nonlinearity, NonlinearityKind, ProblemParams};
pub use weights::{Weight, WeightKind};

/// First line of every CSV the crate writes.
pub const CSV_HEADER: &str = concat!("# nlap-galerkin v", env!("CARGO_PKG_VERSION"));
