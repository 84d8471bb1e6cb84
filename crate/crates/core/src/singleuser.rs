//! Single-user covariance design by projected gradient ascent.
//!
//! Maximizes `E(R) = α tr(M R) + (1−α) log2(1 + tr(K R))`, `K = h hᴴ/σ_c²`,
//! over `{R ⪰ 0, tr R ≤ P_tx, R ⪯ EIRP·I}`. The feasible set is unitarily
//! invariant, so the Euclidean projection of a Hermitian matrix only moves its
//! eigenvalues; that spectral problem is solved by [`project_spectrum`].

use serde::{Deserialize, Serialize};

use crate::array::{SensingOperators, HERMITIAN_TOL};
use crate::linalg::{compose, eigh, ensure_hermitian, outer, trace_product_re};
use crate::{CMat, CVec, JcasError, Result, SolverReport};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone)]
pub struct SingleUserProblem {
    pub h: CVec,
    pub sigma_c2: f64,
    pub ops: SensingOperators,
    pub p_tx: f64,
    /// Cap on every eigenvalue of `R`.
    pub eirp: f64,
    pub alpha: f64,
    /// `h hᴴ / σ_c²`.
    pub k_mat: CMat,
}

impl SingleUserProblem {
    pub fn new(
        h: CVec,
        sigma_c2: f64,
        ops: SensingOperators,
        p_tx: f64,
        eirp: f64,
        alpha: f64,
    ) -> Result<Self> {
        if h.len() != ops.n_tx() {
            return Err(JcasError::Dimension(format!(
                "channel has {} entries, array has {} transmit elements",
                h.len(),
                ops.n_tx()
            )));
        }
        if !(sigma_c2.is_finite() && sigma_c2 > 0.0) {
            return Err(JcasError::config("sigma_c2", "must be positive"));
        }
        if !(p_tx.is_finite() && p_tx > 0.0) {
            return Err(JcasError::config("p_tx", "must be positive"));
        }
        if !(eirp.is_finite() && eirp > 0.0) {
            return Err(JcasError::config("eirp", "must be positive"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(JcasError::config("alpha", "must lie in [0, 1]"));
        }
        let k_mat = outer(&h, &h).scale(1.0 / sigma_c2);
        Ok(SingleUserProblem {
            h,
            sigma_c2,
            ops,
            p_tx,
            eirp,
            alpha,
            k_mat,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.h.clone(),
            self.sigma_c2,
            self.ops.clone(),
            self.p_tx,
            self.eirp,
            alpha,
        )
    }

    pub fn with_eirp(&self, eirp: f64) -> Result<Self> {
        Self::new(
            self.h.clone(),
            self.sigma_c2,
            self.ops.clone(),
            self.p_tx,
            eirp,
            self.alpha,
        )
    }

    pub fn n_tx(&self) -> usize {
        self.h.len()
    }

    /// Largest total power the feasible set admits.
    pub fn usable_power(&self) -> f64 {
        self.p_tx.min(self.eirp * self.n_tx() as f64)
    }

    pub fn mi_bits(&self, r: &CMat) -> f64 {
        (1.0 + trace_product_re(&self.k_mat, r)).log2()
    }

    pub fn fi(&self, r: &CMat) -> f64 {
        trace_product_re(&self.ops.m, r)
    }
}

pub fn objective(problem: &SingleUserProblem, r: &CMat) -> f64 {
    let a = problem.alpha;
    let mut out = 0.0;
    if a != 0.0 {
        out += a * problem.fi(r);
    }
    if a != 1.0 {
        out += (1.0 - a) * problem.mi_bits(r);
    }
    out
}

/// Hermitian `G` with `d/dt E(R + tΔ) = tr(G Δ)` for Hermitian `Δ`:
/// `G = α M + (1−α)/ln2 · K/(1 + tr(K R))`.
///
/// The Wirtinger gradient `∂E/∂R*` written with a factor 2 on both terms is
/// exactly `2G`; dropping the constant only rescales the step.
pub fn gradient(problem: &SingleUserProblem, r: &CMat) -> CMat {
    let a = problem.alpha;
    let denom = 1.0 + trace_product_re(&problem.k_mat, r);
    problem.ops.m.scale(a) + problem.k_mat.scale((1.0 - a) / (LN2 * denom))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub lambdas: Vec<f64>,
    /// Multiplier of the total-power constraint.
    pub mu: f64,
    /// Indices clamped at the EIRP cap.
    pub active_upper: Vec<usize>,
    /// Indices clamped at zero.
    pub active_lower: Vec<usize>,
    /// Multipliers of `λ_i ≤ EIRP`.
    pub upper_multipliers: Vec<f64>,
    /// Multipliers of `λ_i ≥ 0`.
    pub lower_multipliers: Vec<f64>,
}

fn clamped_sum(sigma: &[f64], mu: f64, eirp: f64) -> f64 {
    sigma.iter().map(|&s| (s - mu).clamp(0.0, eirp)).sum()
}

/// Euclidean projection of `sigma` onto `{0 ≤ λ ≤ eirp, Σλ ≤ p_tx}`.
pub fn project_spectrum(sigma: &[f64], p_tx: f64, eirp: f64) -> ProjectionResult {
    let slack = 1e-12 * p_tx.max(1.0);
    let mu = if clamped_sum(sigma, 0.0, eirp) <= p_tx + slack {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = sigma.iter().copied().fold(0.0, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if clamped_sum(sigma, mid, eirp) > p_tx {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        refine_mu(sigma, 0.5 * (lo + hi), p_tx, eirp)
    };
    let lambdas: Vec<f64> = sigma.iter().map(|&s| (s - mu).clamp(0.0, eirp)).collect();
    let active_upper = (0..sigma.len()).filter(|&i| lambdas[i] >= eirp).collect();
    let active_lower = (0..sigma.len()).filter(|&i| lambdas[i] <= 0.0).collect();
    let upper_multipliers = sigma
        .iter()
        .zip(&lambdas)
        .map(|(&s, &l)| (s - mu - l).max(0.0))
        .collect();
    let lower_multipliers = sigma
        .iter()
        .zip(&lambdas)
        .map(|(&s, &l)| (l - s + mu).max(0.0))
        .collect();
    ProjectionResult {
        lambdas,
        mu,
        active_upper,
        active_lower,
        upper_multipliers,
        lower_multipliers,
    }
}

/// Solve the budget equation exactly on the linear piece that contains `mu`.
fn refine_mu(sigma: &[f64], mu: f64, p_tx: f64, eirp: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    let mut n_up = 0usize;
    for &s in sigma {
        let v = s - mu;
        if v >= eirp {
            n_up += 1;
        } else if v > 0.0 {
            free_sum += s;
            n_free += 1;
        }
    }
    if n_free == 0 {
        return mu;
    }
    let exact = (free_sum + n_up as f64 * eirp - p_tx) / n_free as f64;
    let err = |m: f64| (clamped_sum(sigma, m, eirp) - p_tx).abs();
    if exact >= 0.0 && err(exact) <= err(mu) {
        exact
    } else {
        mu
    }
}

/// Largest violation among the projection optimality conditions.
pub fn projection_kkt_residual(sigma: &[f64], p_tx: f64, eirp: f64, pr: &ProjectionResult) -> f64 {
    let mut worst: f64 = 0.0;
    let total: f64 = pr.lambdas.iter().sum();
    worst = worst.max((total - p_tx).max(0.0));
    worst = worst.max((-pr.mu).max(0.0));
    worst = worst.max((pr.mu * (total - p_tx)).abs());
    for (i, &s) in sigma.iter().enumerate() {
        let l = pr.lambdas[i];
        let x = pr.upper_multipliers[i];
        let y = pr.lower_multipliers[i];
        worst = worst.max((l - (s + y - x - pr.mu)).abs());
        worst = worst.max((-l).max(0.0)).max((l - eirp).max(0.0));
        worst = worst.max((-x).max(0.0)).max((-y).max(0.0));
        worst = worst.max((x * (eirp - l)).abs()).max((y * l).abs());
    }
    worst
}

/// Projection of a Hermitian matrix onto the feasible set.
pub fn project_matrix(z: &CMat, p_tx: f64, eirp: f64) -> CMat {
    let e = eigh(z);
    let pr = project_spectrum(&e.values, p_tx, eirp);
    compose(&e.vectors, &pr.lambdas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct PgdConfig {
    /// Initial step; derived from the curvature bound when absent.
    pub step_init: Option<f64>,
    pub max_iters: usize,
    /// Stop when `|ΔE| < tol · max(1, |E|)` and the stationarity residual is
    /// below `kkt_tol`.
    pub tol: f64,
    pub kkt_tol: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    /// Step multiplier after an accepted iteration.
    pub step_growth: f64,
}

impl Default for PgdConfig {
    fn default() -> Self {
        PgdConfig {
            step_init: None,
            max_iters: 5000,
            tol: 1e-9,
            kkt_tol: 1e-6,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            step_growth: 2.0,
        }
    }
}

impl PgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(JcasError::config("pgd.tol", "must be positive"));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(JcasError::config("pgd.kkt_tol", "must be positive"));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(JcasError::config(
                "pgd.backtrack_factor",
                "must lie in (0, 1)",
            ));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(JcasError::config("pgd.armijo_c", "must lie in (0, 1)"));
        }
        if !(self.step_growth >= 1.0) {
            return Err(JcasError::config("pgd.step_growth", "must be at least 1"));
        }
        if let Some(s) = self.step_init {
            if !(s > 0.0 && s.is_finite()) {
                return Err(JcasError::config("pgd.step_init", "must be positive"));
            }
        }
        if self.max_iters == 0 {
            return Err(JcasError::config("pgd.max_iters", "must be positive"));
        }
        Ok(())
    }
}

/// `1/(2α‖M‖₂ + 2(1−α)‖K‖₂/ln2 + ε)`.
pub fn default_step(problem: &SingleUserProblem) -> f64 {
    let a = problem.alpha;
    let m = eigh(&problem.ops.m).max();
    let k = problem.h.norm_squared() / problem.sigma_c2;
    1.0 / (2.0 * a * m + 2.0 * (1.0 - a) * k / LN2 + 1e-12)
}

/// `‖Π(R + δG) − R‖_F / P`, with `δ = P/‖G‖_F` and `P` the usable power.
///
/// Zero exactly at a maximizer; dimensionless, so one tolerance fits every
/// power scale.
pub fn stationarity_residual(problem: &SingleUserProblem, r: &CMat) -> f64 {
    let g = gradient(problem, r);
    let gn = g.norm();
    if gn == 0.0 {
        return 0.0;
    }
    let p = problem.usable_power();
    let step = p / gn;
    let moved = project_matrix(&(r + g.scale(step)), problem.p_tx, problem.eirp);
    (moved - r).norm() / p
}

#[derive(Debug, Clone)]
pub struct SingleUserSolution {
    pub r_x: CMat,
    pub mi_bits: f64,
    pub fi: f64,
    pub objective: f64,
    pub report: SolverReport,
}

pub fn pgd_solve(problem: &SingleUserProblem, cfg: &PgdConfig) -> Result<SingleUserSolution> {
    cfg.validate()?;
    let n = problem.n_tx();
    let mut r = CMat::zeros(n, n);
    let mut e = objective(problem, &r);
    let mut step = cfg.step_init.unwrap_or_else(|| default_step(problem));
    let mut trace = vec![e];
    let mut backtracks = 0;
    let mut iters = 0;
    let mut converged = false;
    let mut residual = stationarity_residual(problem, &r);

    while iters < cfg.max_iters {
        iters += 1;
        let g = gradient(problem, &r);
        let mut accepted = None;
        for _ in 0..200 {
            let cand = project_matrix(&(&r + g.scale(step)), problem.p_tx, problem.eirp);
            let e_new = objective(problem, &cand);
            let decrease = trace_product_re(&g, &(&cand - &r));
            if e_new >= e + cfg.armijo_c * decrease {
                accepted = Some((cand, e_new));
                break;
            }
            step *= cfg.backtrack_factor;
            backtracks += 1;
        }
        let Some((cand, e_new)) = accepted else {
            residual = stationarity_residual(problem, &r);
            converged = residual <= cfg.kkt_tol;
            break;
        };
        let delta = e_new - e;
        r = cand;
        e = e_new;
        trace.push(e);
        step *= cfg.step_growth;
        if delta.abs() < cfg.tol * e.abs().max(1.0) {
            residual = stationarity_residual(problem, &r);
            if residual <= cfg.kkt_tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        residual = stationarity_residual(problem, &r);
    }
    ensure_hermitian(&r, HERMITIAN_TOL)?;
    let mi_bits = problem.mi_bits(&r);
    let fi = problem.fi(&r);
    Ok(SingleUserSolution {
        r_x: r,
        mi_bits,
        fi,
        objective: e,
        report: SolverReport {
            outer_iterations: iters,
            beta_bisections: backtracks,
            converged,
            final_objective: e,
            objective_trace: trace,
            kkt_residual: Some(residual),
        },
    })
}
