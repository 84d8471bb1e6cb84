//! Uniform linear array geometry, the monostatic target response and its
//! Fisher information.
//!
//! Steering vectors use a centered phase reference: element `m` of an
//! `n`-element array sits at offset `m - (n - 1) / 2` spacings from the array
//! center, so entry `m` is `exp(j (m - (n-1)/2) k sin θ)` with
//! `k = 2π d / λ`.
//!
//! The sensing quadratic form `M` satisfies `tr(J) = tr(M R)` for every
//! transmit covariance `R`, where
//! `M = (2|γ|²/σ²) Ȧᴴ Ȧ + (2/σ²) Aᴴ A`, `A = b aᵀ` and `Ȧ = ḃ aᵀ + b ȧᵀ`.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::linalg::{ensure_hermitian, hermitize, trace_product_re};
use crate::serde_complex;
use crate::{CMat, CVec, JcasError, Result, C64};

/// Relative asymmetry above which a covariance is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing over wavelength, `d / λ`.
    pub spacing_over_wavelength: f64,
}

impl ArrayConfig {
    pub fn new(n_tx: usize, n_rx: usize, spacing_over_wavelength: f64) -> Result<Self> {
        let cfg = ArrayConfig {
            n_tx,
            n_rx,
            spacing_over_wavelength,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Half-wavelength spacing.
    pub fn half_wavelength(n_tx: usize, n_rx: usize) -> Result<Self> {
        Self::new(n_tx, n_rx, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(JcasError::config("array.n_tx", "must be at least 1"));
        }
        if self.n_rx == 0 {
            return Err(JcasError::config("array.n_rx", "must be at least 1"));
        }
        if !(self.spacing_over_wavelength.is_finite() && self.spacing_over_wavelength > 0.0) {
            return Err(JcasError::config(
                "array.spacing_over_wavelength",
                "must be a positive finite number",
            ));
        }
        Ok(())
    }

    /// `k = 2π d / λ`, always derived from the spacing.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.spacing_over_wavelength
    }
}

/// Point target seen by the monostatic radar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// Angle in radians.
    pub theta_r: f64,
    #[serde(with = "serde_complex::complex")]
    pub gamma_r: C64,
    /// Radar noise variance, linear.
    pub sigma_r2: f64,
}

impl Target {
    pub fn new(theta_r: f64, gamma_r: C64, sigma_r2: f64) -> Result<Self> {
        let t = Target {
            theta_r,
            gamma_r,
            sigma_r2,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_r2.is_finite() && self.sigma_r2 > 0.0) {
            return Err(JcasError::config("target.sigma_r2", "must be positive"));
        }
        if !self.theta_r.is_finite() || !self.gamma_r.re.is_finite() || !self.gamma_r.im.is_finite()
        {
            return Err(JcasError::config(
                "target",
                "angle and reflection must be finite",
            ));
        }
        Ok(())
    }
}

fn centered_offset(m: usize, n_elems: usize) -> f64 {
    m as f64 - (n_elems as f64 - 1.0) / 2.0
}

pub fn steering_vector(cfg: &ArrayConfig, n_elems: usize, theta: f64) -> CVec {
    let ks = cfg.wavenumber() * theta.sin();
    CVec::from_fn(n_elems, |m, _| {
        C64::from_polar(1.0, centered_offset(m, n_elems) * ks)
    })
}

/// Exact entrywise derivative of [`steering_vector`] with respect to `theta`.
pub fn steering_derivative(cfg: &ArrayConfig, n_elems: usize, theta: f64) -> CVec {
    let k = cfg.wavenumber();
    let a = steering_vector(cfg, n_elems, theta);
    CVec::from_fn(n_elems, |m, _| {
        a[m] * C64::new(0.0, centered_offset(m, n_elems) * k * theta.cos())
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensingOperators {
    /// Transmit steering vector `a(θ)`.
    #[serde(with = "serde_complex::vector")]
    pub a: CVec,
    /// Receive steering vector `b(θ)`.
    #[serde(with = "serde_complex::vector")]
    pub b: CVec,
    #[serde(with = "serde_complex::vector")]
    pub a_dot: CVec,
    #[serde(with = "serde_complex::vector")]
    pub b_dot: CVec,
    /// `A = b aᵀ`, `N_r × N_t`.
    #[serde(with = "serde_complex::matrix")]
    pub response: CMat,
    /// `Ȧ = ḃ aᵀ + b ȧᵀ`.
    #[serde(with = "serde_complex::matrix")]
    pub response_dot: CMat,
    /// Sensing quadratic form, Hermitian PSD, `N_t × N_t`.
    #[serde(with = "serde_complex::matrix")]
    pub m: CMat,
}

impl SensingOperators {
    pub fn n_tx(&self) -> usize {
        self.a.len()
    }
}

pub fn build_operators(cfg: &ArrayConfig, tgt: &Target) -> SensingOperators {
    let a = steering_vector(cfg, cfg.n_tx, tgt.theta_r);
    let b = steering_vector(cfg, cfg.n_rx, tgt.theta_r);
    let a_dot = steering_derivative(cfg, cfg.n_tx, tgt.theta_r);
    let b_dot = steering_derivative(cfg, cfg.n_rx, tgt.theta_r);
    let response = &b * a.transpose();
    let response_dot = &b_dot * a.transpose() + &b * a_dot.transpose();
    let g2 = tgt.gamma_r.norm_sqr();
    let m = (response_dot.adjoint() * &response_dot).scale(2.0 * g2 / tgt.sigma_r2)
        + (response.adjoint() * &response).scale(2.0 / tgt.sigma_r2);
    SensingOperators {
        a,
        b,
        a_dot,
        b_dot,
        response,
        response_dot,
        m: hermitize(&m),
    }
}

/// Fisher information for `v = [θ_r, γ_r, γ_r*]`, Hermitian by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub j: Matrix3<C64>,
}

impl FisherMatrix {
    pub fn trace(&self) -> f64 {
        (0..3).map(|i| self.j[(i, i)].re).sum()
    }
}

/// `tr(X R Yᴴ)`.
fn trace_xry(x: &CMat, r: &CMat, y: &CMat) -> C64 {
    (x * r * y.adjoint()).trace()
}

pub fn fisher_matrix(ops: &SensingOperators, tgt: &Target, r: &CMat) -> Result<FisherMatrix> {
    check_covariance(ops, r)?;
    let a = &ops.response;
    let ad = &ops.response_dot;
    let s = 1.0 / tgt.sigma_r2;
    let g = tgt.gamma_r;
    let j11 = 2.0 * g.norm_sqr() * trace_xry(ad, r, ad).re * s;
    let j22 = trace_xry(a, r, a).re * s;
    let j12 = g.conj() * trace_xry(a, r, ad) * s;
    let j13 = g * trace_xry(ad, r, a) * s;
    let zero = C64::new(0.0, 0.0);
    let j = Matrix3::new(
        C64::new(j11, 0.0),
        j12,
        j13,
        j12.conj(),
        C64::new(j22, 0.0),
        zero,
        j13.conj(),
        zero,
        C64::new(j22, 0.0),
    );
    Ok(FisherMatrix { j })
}

/// `tr(M R)`, equal to the trace of [`fisher_matrix`].
pub fn fisher_trace_objective(ops: &SensingOperators, r: &CMat) -> Result<f64> {
    check_covariance(ops, r)?;
    Ok(trace_product_re(&ops.m, r))
}

fn check_covariance(ops: &SensingOperators, r: &CMat) -> Result<()> {
    if r.nrows() != ops.n_tx() || r.ncols() != ops.n_tx() {
        return Err(JcasError::Dimension(format!(
            "covariance is {}x{}, array has {} transmit elements",
            r.nrows(),
            r.ncols(),
            ops.n_tx()
        )));
    }
    ensure_hermitian(r, HERMITIAN_TOL)
}
