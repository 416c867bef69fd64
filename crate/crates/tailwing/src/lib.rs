//! Implied-volatility smile wings computed two independent ways: exact
//! numerical pricing plus implied-vol inversion on one side, tail-wing
//! asymptotic formulas on the other, with diagnostics quantifying their
//! agreement across a zoo of risk-neutral return models.
//!
//! Modules follow the pipeline:
//!
//! - [`blackscholes`]: normalized log-domain pricing and exact implied
//!   total-volatility inversion.
//! - [`wings`]: the psi transform, the tail-wing formula variants, and the
//!   moment-condition gates that license them.
//! - [`regvar`]: regular-variation index estimation and the numerical
//!   content of Bingham's lemma.
//! - [`models`]: Black-Scholes, NIG, Carr-Wu FMLS, Merton jump diffusion,
//!   and a synthetic-tail family for deep-wing checks in exact log
//!   arithmetic.
//! - [`pricing`]: tail CDFs, tail-integral option prices, and smile curves
//!   for any model.
//! - [`legendre`]: Fenchel-Legendre (Chernoff) tail bounds and the
//!   saddle-point tail workflow.
//! - [`harness`]: batch runs, comparison reports, CSV/JSON output.

pub mod blackscholes;
pub mod error;
pub mod harness;
pub mod legendre;
pub mod math;
pub mod models;
pub mod pricing;
pub mod quad;
pub mod regvar;
pub mod wings;

pub use error::{Error, Result};
