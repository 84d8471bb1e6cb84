//! Transmit covariance design for a joint communication and sensing (JCAS)
//! MIMO base station.
//!
//! The base station serves `K` single-antenna downlink users while estimating
//! the angle and reflection coefficient of one point target from its echo.
//! Communication quality is measured by the dirty-paper sum rate (mutual
//! information, bits) and sensing quality by the trace of the Fisher
//! information matrix. Sweeping the weight `alpha` of
//! `alpha * FI + (1 - alpha) * MI` traces the Pareto boundary between the two.
//!
//! Module map:
//! - [`array`]: steering vectors, target response operators, Fisher matrix.
//! - [`channel`]: seeded multipath channel generation and persistence.
//! - [`duality`]: BC/MAC sum rates and the MAC to BC covariance transform.
//! - [`multiuser`]: dual-multiplier search with block-coordinate water-filling.
//! - [`singleuser`]: projected gradient ascent under trace and EIRP caps.
//! - [`oracle`]: brute-force and finite-difference checkers.
//! - [`pareto`]: alpha sweeps over scenario grids and frontier diagnostics.
//! - [`verify`]: grouped oracle checks with a serializable report.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod channel;
pub mod duality;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod multiuser;
pub mod oracle;
pub mod pareto;
pub mod report;
pub mod serde_complex;
pub mod singleuser;
pub mod units;
pub mod verify;

pub use error::{JcasError, Result};
pub use report::SolverReport;

/// Crate version, recorded in run records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
