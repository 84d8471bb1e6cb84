//! Multi-user covariance design: maximize `α tr(M R_x) + (1−α) C_BC` under a
//! total power budget.
//!
//! The power constraint is dualized with a multiplier `β`. For fixed `β` the
//! inner problem is solved in the uplink by block-coordinate water-filling,
//! then mapped back to downlink covariances; `β` is searched until the budget
//! is met.
//!
//! Two inner formulations are available:
//!
//! - [`Formulation::Whitened`] (default) absorbs the sensing reward into the
//!   power price, `W = βI − αM`, and runs sum-power water-filling on the
//!   whitened channels `W^{-1/2} h_i`. Downlink covariances are recovered by the
//!   congruence `R_i = W^{-1/2} R̃_i W^{-1/2}`. This reaches the optimum of the
//!   weighted problem, including directions outside the span of the channels.
//! - [`Formulation::ScalarCost`] prices each user by the scalar `β − α s_i`,
//!   with `s_i = c_i M c_iᴴ` read off the current downlink beam. Covariances
//!   stay inside the channel span, so it is suboptimal when the target
//!   direction is not spanned by the users.

use serde::{Deserialize, Serialize};

use crate::array::{fisher_trace_objective, SensingOperators};
use crate::channel::ChannelSet;
use crate::duality::{
    bc_sum_rate, effective_channel, mac_sum_rate, mac_to_bc, validate_order, DownlinkCovariances,
    UplinkSolution,
};
use crate::linalg::{eigh, hermitize, identity, log2_det_hpd, outer, Eigh};
use crate::{CMat, CVec, JcasError, Result, SolverReport};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Whitened,
    ScalarCost,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BetaSearch {
    #[default]
    Bisection,
    /// Log-spaced grid over the bracket; the point closest to the budget from
    /// below is kept.
    Grid { points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct MultiuserOptions {
    /// Passes stop when `max |Δq| < tol_q · max(1, Σq)`.
    pub tol_q: f64,
    pub max_passes: usize,
    /// Relative tolerance on `tr(R_x) − P_tx` for the `β` search.
    pub power_rel_tol: f64,
    pub max_bisections: usize,
    pub beta_search: BetaSearch,
    pub formulation: Formulation,
    /// Encoding order; identity when absent.
    pub order: Option<Vec<usize>>,
}

impl Default for MultiuserOptions {
    fn default() -> Self {
        MultiuserOptions {
            tol_q: 1e-9,
            max_passes: 500,
            power_rel_tol: 1e-10,
            max_bisections: 200,
            beta_search: BetaSearch::Bisection,
            formulation: Formulation::Whitened,
            order: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiuserProblem {
    pub channels: ChannelSet,
    pub ops: SensingOperators,
    pub p_tx: f64,
    pub alpha: f64,
    h: Vec<CVec>,
    m_eig: Eigh,
}

impl MultiuserProblem {
    pub fn new(channels: ChannelSet, ops: SensingOperators, p_tx: f64, alpha: f64) -> Result<Self> {
        if channels.h.is_empty() {
            return Err(JcasError::config(
                "channels",
                "at least one user is required",
            ));
        }
        if channels.n_tx() != ops.n_tx() {
            return Err(JcasError::Dimension(format!(
                "channels have {} entries, array has {} transmit elements",
                channels.n_tx(),
                ops.n_tx()
            )));
        }
        if !(p_tx.is_finite() && p_tx > 0.0) {
            return Err(JcasError::config("p_tx", "must be positive"));
        }
        check_alpha(alpha)?;
        let h = channels.normalized();
        let m_eig = eigh(&ops.m);
        Ok(MultiuserProblem {
            channels,
            ops,
            p_tx,
            alpha,
            h,
            m_eig,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(MultiuserProblem {
            alpha,
            ..self.clone()
        })
    }

    pub fn with_power(&self, p_tx: f64) -> Result<Self> {
        if !(p_tx.is_finite() && p_tx > 0.0) {
            return Err(JcasError::config("p_tx", "must be positive"));
        }
        Ok(MultiuserProblem {
            p_tx,
            ..self.clone()
        })
    }

    pub fn n_users(&self) -> usize {
        self.h.len()
    }

    pub fn n_tx(&self) -> usize {
        self.ops.n_tx()
    }

    /// Noise-normalized channels.
    pub fn normalized_channels(&self) -> &[CVec] {
        &self.h
    }

    pub fn lambda_max(&self) -> f64 {
        self.m_eig.max().max(0.0)
    }

    /// Unit top eigenvector of `M`.
    pub fn top_direction(&self) -> CVec {
        self.m_eig.vector(0)
    }

    pub fn objective(&self, fi: f64, mi_bits: f64) -> f64 {
        weighted_objective(self.alpha, fi, mi_bits)
    }

    fn order(&self, opts: &MultiuserOptions) -> Result<Vec<usize>> {
        match &opts.order {
            Some(o) => {
                validate_order(o, self.n_users())?;
                Ok(o.clone())
            }
            None => Ok((0..self.n_users()).collect()),
        }
    }

    /// `W^{-1/2}` for `W = βI − αM`, or an error when `W` is not positive
    /// definite.
    fn whitener(&self, beta: f64) -> Result<CMat> {
        let floor = beta - self.alpha * self.lambda_max();
        if !(floor > 0.0) {
            return Err(JcasError::BetaTooSmall {
                user: 0,
                beta,
                sensing: self.alpha * self.lambda_max(),
            });
        }
        let vals: Vec<f64> = self
            .m_eig
            .values
            .iter()
            .map(|&l| 1.0 / (beta - self.alpha * l).sqrt())
            .collect();
        Ok(crate::linalg::compose(&self.m_eig.vectors, &vals))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(JcasError::config("alpha", "must lie in [0, 1]"));
    }
    Ok(())
}

pub fn weighted_objective(alpha: f64, fi: f64, mi_bits: f64) -> f64 {
    alpha * fi + (1.0 - alpha) * mi_bits
}

#[derive(Debug, Clone)]
pub struct MultiuserResult {
    pub alpha: f64,
    pub beta: f64,
    /// Uplink powers of the inner problem. Under [`Formulation::Whitened`]
    /// these live on the whitened channels and sum to `tr(W R_x)`.
    pub uplink: UplinkSolution,
    pub downlink: DownlinkCovariances,
    pub mi_bits: f64,
    pub fi: f64,
    pub power_used: f64,
    pub objective: f64,
    pub report: SolverReport,
    /// Extra covariance carried by no user (baseline only). Included in
    /// `downlink.r_x`.
    pub dedicated_sensing: Option<CMat>,
}

/// Closed-form per-user water-filling step.
///
/// `effective_gain` is `h_eᴴ h_e` with `h_e = A^{-1/2} h_i`; `sensing_gain` is
/// `s_i`. Returns `q_i = φ*/(β − α s_i)` with
/// `φ* = max(0, (1−α)/ln2 − (β − α s_i)/h_eᴴh_e)`.
pub fn per_user_update(
    user: usize,
    alpha: f64,
    beta: f64,
    sensing_gain: f64,
    effective_gain: f64,
) -> Result<f64> {
    let price = beta - alpha * sensing_gain;
    if !(price > 0.0) {
        return Err(JcasError::BetaTooSmall {
            user,
            beta,
            sensing: alpha * sensing_gain,
        });
    }
    if !(effective_gain > 0.0) {
        return Ok(0.0);
    }
    let sigma2 = effective_gain / price;
    let phi = ((1.0 - alpha) / LN2 - 1.0 / sigma2).max(0.0);
    Ok(phi / price)
}

/// One Gauss–Seidel sweep of sum-power water-filling at unit price on the
/// channels `y`. Returns `max |Δq|`.
pub fn block_coordinate_pass(y: &[CVec], q: &mut [f64], order: &[usize], alpha: f64) -> f64 {
    let n = y[0].len();
    let mut g = identity(n);
    for (yi, &qi) in y.iter().zip(q.iter()) {
        if qi != 0.0 {
            g += outer(yi, yi).scale(qi);
        }
    }
    let mut delta: f64 = 0.0;
    for &i in order {
        let own = outer(&y[i], &y[i]);
        let a = &g - own.scale(q[i]);
        let gain = effective_gain(&a, &y[i]);
        let new = per_user_update(i, alpha, 1.0, 0.0, gain).expect("unit price is positive");
        delta = delta.max((new - q[i]).abs());
        g = a + own.scale(new);
        q[i] = new;
    }
    delta
}

/// `yᴴ A^{-1} y` for Hermitian positive definite `A`.
fn effective_gain(a: &CMat, y: &CVec) -> f64 {
    match nalgebra::linalg::Cholesky::new(hermitize(a)) {
        Some(ch) => {
            let x = ch.solve(y);
            (y.adjoint() * x)[(0, 0)].re
        }
        None => {
            let w = crate::linalg::inv_sqrt_hermitian(a);
            (&w * y).norm_squared()
        }
    }
}

/// One sweep of the scalar-cost update on the noise-normalized channels `h`.
/// Returns `max |Δq|`.
pub fn scalar_cost_pass(
    h: &[CVec],
    m: &CMat,
    up: &mut UplinkSolution,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let mut delta: f64 = 0.0;
    for pos in 0..up.order.len() {
        let i = up.order[pos];
        let (_, state) = mac_to_bc(h, up)?;
        let s = state.sensing_gain(m, i);
        let gain = effective_channel(h, up, i).norm_squared();
        let new = per_user_update(i, alpha, beta, s, gain)?;
        delta = delta.max((new - up.q[i]).abs());
        up.q[i] = new;
    }
    Ok(delta)
}

#[derive(Debug, Clone)]
pub struct FixedBetaSolution {
    pub beta: f64,
    pub uplink: UplinkSolution,
    pub downlink: DownlinkCovariances,
    /// `tr(R_x)`.
    pub total_power: f64,
    pub passes: usize,
    pub converged: bool,
    /// Lagrangian value after each pass.
    pub trace: Vec<f64>,
}

/// Inner solve at a fixed multiplier, starting from `q = 0`.
pub fn solve_fixed_beta(
    problem: &MultiuserProblem,
    beta: f64,
    opts: &MultiuserOptions,
) -> Result<FixedBetaSolution> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(JcasError::config("beta", "must be positive and finite"));
    }
    let order = problem.order(opts)?;
    match opts.formulation {
        Formulation::Whitened => fixed_beta_whitened(problem, beta, order, opts),
        Formulation::ScalarCost => fixed_beta_scalar(problem, beta, order, opts),
    }
}

fn fixed_beta_whitened(
    problem: &MultiuserProblem,
    beta: f64,
    order: Vec<usize>,
    opts: &MultiuserOptions,
) -> Result<FixedBetaSolution> {
    let w = problem.whitener(beta)?;
    let y: Vec<CVec> = problem.h.iter().map(|h| &w * h).collect();
    let k = y.len();
    let alpha = problem.alpha;
    let mut q = vec![0.0; k];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut passes = 0;
    while passes < opts.max_passes {
        let delta = block_coordinate_pass(&y, &mut q, &order, alpha);
        passes += 1;
        let total: f64 = q.iter().sum();
        let up = UplinkSolution {
            q: q.clone(),
            order: order.clone(),
        };
        let lagrangian = beta * problem.p_tx + (1.0 - alpha) * mac_sum_rate(&y, &up) - total;
        trace.push(lagrangian);
        if delta < opts.tol_q * total.max(1.0) {
            converged = true;
            break;
        }
    }
    let uplink = UplinkSolution { q, order };
    let (white, _) = mac_to_bc(&y, &uplink)?;
    let downlink = white.congruence(&w);
    let total_power = downlink.total_power();
    Ok(FixedBetaSolution {
        beta,
        uplink,
        downlink,
        total_power,
        passes,
        converged,
        trace,
    })
}

fn fixed_beta_scalar(
    problem: &MultiuserProblem,
    beta: f64,
    order: Vec<usize>,
    opts: &MultiuserOptions,
) -> Result<FixedBetaSolution> {
    let h = &problem.h;
    let alpha = problem.alpha;
    let mut up = UplinkSolution::zeros(h.len()).with_order(order);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut passes = 0;
    while passes < opts.max_passes {
        let delta = scalar_cost_pass(h, &problem.ops.m, &mut up, alpha, beta)?;
        passes += 1;
        let (dl, _) = mac_to_bc(h, &up)?;
        let fi = crate::linalg::trace_product_re(&problem.ops.m, &dl.r_x);
        let total = up.total_power();
        trace.push(
            alpha * fi + (1.0 - alpha) * mac_sum_rate(h, &up) + beta * (problem.p_tx - total),
        );
        if delta < opts.tol_q * total.max(1.0) {
            converged = true;
            break;
        }
    }
    let (downlink, _) = mac_to_bc(h, &up)?;
    let total_power = downlink.total_power();
    Ok(FixedBetaSolution {
        beta,
        uplink: up,
        downlink,
        total_power,
        passes,
        converged,
        trace,
    })
}

/// Outcome of the multiplier search.
#[derive(Debug, Clone)]
pub struct BetaSearchResult {
    pub solution: FixedBetaSolution,
    pub bisections: usize,
    /// Whether `tr(R_x)` met the budget within `power_rel_tol`.
    pub power_matched: bool,
}

/// Smallest admissible multiplier for the chosen formulation.
fn beta_floor(problem: &MultiuserProblem, formulation: Formulation) -> f64 {
    match formulation {
        Formulation::Whitened => problem.alpha * problem.lambda_max(),
        Formulation::ScalarCost => 0.0,
    }
}

/// A multiplier at which every user is shut off.
fn beta_ceiling(problem: &MultiuserProblem) -> f64 {
    let gmax = problem
        .h
        .iter()
        .map(|h| h.norm_squared())
        .fold(0.0, f64::max);
    let lm = problem.lambda_max();
    let sensing = problem.alpha * lm * (1.0 + problem.n_users() as f64);
    sensing + (1.0 - problem.alpha) * gmax / LN2 * (1.0 + 1e-9) + f64::MIN_POSITIVE
}

/// Search `β` so that `tr(R_x)` equals the budget.
///
/// The search runs on `x = β − β_floor` in log scale. An inner solve that
/// reports an unbounded user counts as "power too large".
pub fn find_beta(problem: &MultiuserProblem, opts: &MultiuserOptions) -> Result<BetaSearchResult> {
    let floor = beta_floor(problem, opts.formulation);
    let p = problem.p_tx;
    let solve = |x: f64| -> Result<Option<FixedBetaSolution>> {
        match solve_fixed_beta(problem, floor + x, opts) {
            Ok(s) => Ok(Some(s)),
            // huge powers near the guard make the transform ill-conditioned
            Err(JcasError::BetaTooSmall { .. } | JcasError::IllConditioned { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let too_much = |s: &Option<FixedBetaSolution>| s.as_ref().is_none_or(|s| s.total_power > p);

    let mut x_hi = beta_ceiling(problem) - floor;
    let mut hi = solve(x_hi)?;
    let mut expansions = 0;
    while too_much(&hi) {
        expansions += 1;
        if expansions > opts.max_bisections {
            return Err(JcasError::Bracket(format!(
                "power still above budget at beta = {}",
                floor + x_hi
            )));
        }
        x_hi *= 2.0;
        hi = solve(x_hi)?;
    }
    let mut hi = hi.expect("checked above");

    let mut x_lo = x_hi;
    let mut lo = None;
    for _ in 0..opts.max_bisections {
        x_lo *= 0.1;
        let s = solve(x_lo)?;
        if too_much(&s) {
            lo = Some(s);
            break;
        }
        hi = s.expect("within budget");
        x_hi = x_lo;
        if x_lo < 1e-300 {
            break;
        }
    }
    if lo.is_none() {
        // budget cannot be exhausted at any admissible beta
        return Ok(BetaSearchResult {
            power_matched: rel_gap(hi.total_power, p) <= opts.power_rel_tol,
            solution: hi,
            bisections: expansions,
        });
    }

    let mut bisections = expansions;
    if let BetaSearch::Grid { points } = opts.beta_search {
        let points = points.max(2);
        let (a, b) = (x_lo.ln(), x_hi.ln());
        let mut best = hi;
        for j in 0..points {
            let x = (a + (b - a) * j as f64 / (points - 1) as f64).exp();
            bisections += 1;
            if let Some(s) = solve(x)? {
                if s.total_power <= p && s.total_power > best.total_power {
                    best = s;
                }
            }
        }
        return Ok(BetaSearchResult {
            power_matched: rel_gap(best.total_power, p) <= opts.power_rel_tol,
            solution: best,
            bisections,
        });
    }

    for _ in 0..opts.max_bisections {
        if rel_gap(hi.total_power, p) <= opts.power_rel_tol {
            break;
        }
        let mid = (0.5 * (x_lo.ln() + x_hi.ln())).exp();
        if !(mid > x_lo && mid < x_hi) {
            break;
        }
        bisections += 1;
        let s = solve(mid)?;
        if too_much(&s) {
            x_lo = mid;
        } else {
            x_hi = mid;
            hi = s.expect("within budget");
        }
    }
    Ok(BetaSearchResult {
        power_matched: rel_gap(hi.total_power, p) <= opts.power_rel_tol,
        solution: hi,
        bisections,
    })
}

fn rel_gap(x: f64, p: f64) -> f64 {
    (x - p).abs() / p
}

pub fn solve_multiuser(
    problem: &MultiuserProblem,
    opts: &MultiuserOptions,
) -> Result<MultiuserResult> {
    if problem.alpha == 1.0 {
        return solve_pure_sensing(problem, opts);
    }
    let search = find_beta(problem, opts)?;
    let FixedBetaSolution {
        beta,
        uplink,
        mut downlink,
        passes,
        converged,
        trace,
        ..
    } = search.solution;

    let shortfall = problem.p_tx - downlink.total_power();
    if !search.power_matched && shortfall > 0.0 && problem.alpha > 0.0 {
        // remaining budget goes along the top sensing direction; the users
        // cannot use it, so it is attached to the last-encoded user
        let u = problem.top_direction();
        let extra = outer(&u, &u).scale(shortfall);
        let last = *uplink.order.last().expect("at least one user");
        downlink.r[last] += &extra;
        downlink.r_x += &extra;
    }
    let h = problem.normalized_channels();
    let (mi, per_user) = bc_sum_rate(h, &downlink.r, &uplink.order);
    downlink.per_user_rate_bits = per_user;
    let fi = fisher_trace_objective(&problem.ops, &downlink.r_x)?;
    let power_used = downlink.total_power();
    let objective = problem.objective(fi, mi);
    let power_ok = rel_gap(power_used, problem.p_tx) <= opts.power_rel_tol.max(1e-9);
    Ok(MultiuserResult {
        alpha: problem.alpha,
        beta,
        uplink,
        downlink,
        mi_bits: mi,
        fi,
        power_used,
        objective,
        report: SolverReport {
            outer_iterations: passes,
            beta_bisections: search.bisections,
            converged: converged && power_ok,
            final_objective: objective,
            objective_trace: trace,
            kkt_residual: None,
        },
        dedicated_sensing: None,
    })
}

/// `α = 1`: the whole budget along the top eigenvector of `M`, carried by the
/// user that gains most from it (lowest index on ties).
fn solve_pure_sensing(
    problem: &MultiuserProblem,
    opts: &MultiuserOptions,
) -> Result<MultiuserResult> {
    let order = problem.order(opts)?;
    let k = problem.n_users();
    let n = problem.n_tx();
    let u = problem.top_direction();
    let h = problem.normalized_channels();
    let mut best = 0;
    let mut best_gain = -1.0;
    for (i, hi) in h.iter().enumerate() {
        let g = (hi.adjoint() * &u)[(0, 0)].norm_sqr();
        if g > best_gain * (1.0 + 1e-12) {
            best = i;
            best_gain = g;
        }
    }
    let rx = outer(&u, &u).scale(problem.p_tx);
    let mut r = vec![CMat::zeros(n, n); k];
    r[best] = rx.clone();
    let (mi, per_user) = bc_sum_rate(h, &r, &order);
    let fi = fisher_trace_objective(&problem.ops, &rx)?;
    let mut q = vec![0.0; k];
    q[best] = problem.p_tx;
    let objective = problem.objective(fi, mi);
    Ok(MultiuserResult {
        alpha: 1.0,
        beta: problem.lambda_max(),
        uplink: UplinkSolution { q, order },
        power_used: problem.p_tx,
        downlink: DownlinkCovariances {
            r,
            r_x: rx,
            per_user_rate_bits: per_user,
        },
        mi_bits: mi,
        fi,
        objective,
        report: SolverReport {
            outer_iterations: 0,
            beta_bisections: 0,
            converged: true,
            final_objective: objective,
            objective_trace: vec![objective],
            kkt_residual: None,
        },
        dedicated_sensing: None,
    })
}

/// One point of the baseline power split, independent of `α`.
#[derive(Debug, Clone)]
pub struct BaselineComponent {
    /// Fraction of the budget on the dedicated sensing beam.
    pub rho: f64,
    /// Communication-only solve at `(1−ρ) P_tx`.
    pub comm: MultiuserResult,
}

/// Communication solves for `ρ ∈ {1/g, …, (g−1)/g}`.
pub fn baseline_components(
    problem: &MultiuserProblem,
    power_grid_size: usize,
    opts: &MultiuserOptions,
) -> Result<Vec<BaselineComponent>> {
    if power_grid_size < 2 {
        return Err(JcasError::config("power_grid_size", "must be at least 2"));
    }
    let comm = problem.with_alpha(0.0)?;
    (1..power_grid_size)
        .map(|j| {
            let rho = j as f64 / power_grid_size as f64;
            let sub = comm.with_power((1.0 - rho) * problem.p_tx)?;
            Ok(BaselineComponent {
                rho,
                comm: solve_multiuser(&sub, opts)?,
            })
        })
        .collect()
}

/// Best baseline split for `problem.alpha`.
///
/// The dedicated beam is treated as known interference at the transmitter,
/// so it adds Fisher information but leaves the user rates unchanged.
pub fn baseline_from_components(
    problem: &MultiuserProblem,
    components: &[BaselineComponent],
) -> Result<MultiuserResult> {
    let u = problem.top_direction();
    let lm = problem.lambda_max();
    let best = components
        .iter()
        .max_by(|a, b| {
            let oa = problem.objective(a.comm.fi + a.rho * problem.p_tx * lm, a.comm.mi_bits);
            let ob = problem.objective(b.comm.fi + b.rho * problem.p_tx * lm, b.comm.mi_bits);
            // ties resolve to the smaller rho
            oa.total_cmp(&ob).then(b.rho.total_cmp(&a.rho))
        })
        .ok_or_else(|| JcasError::config("power_grid_size", "no baseline split available"))?;
    let r0 = outer(&u, &u).scale(best.rho * problem.p_tx);
    let mut out = best.comm.clone();
    out.alpha = problem.alpha;
    out.downlink.r_x += &r0;
    out.fi = fisher_trace_objective(&problem.ops, &out.downlink.r_x)?;
    out.power_used = out.downlink.total_power();
    out.objective = problem.objective(out.fi, out.mi_bits);
    out.report.final_objective = out.objective;
    out.dedicated_sensing = Some(r0);
    Ok(out)
}

pub fn solve_suboptimal_baseline(
    problem: &MultiuserProblem,
    power_grid_size: usize,
    opts: &MultiuserOptions,
) -> Result<MultiuserResult> {
    let comps = baseline_components(problem, power_grid_size, opts)?;
    baseline_from_components(problem, &comps)
}

/// `λ₂/λ₁` of a covariance, 0 for the zero matrix.
pub fn eigen_ratio(r: &CMat) -> f64 {
    let e = eigh(r);
    if e.values[0] <= 0.0 {
        return 0.0;
    }
    e.values.get(1).copied().unwrap_or(0.0).max(0.0) / e.values[0]
}

/// `log2 det(I + Σ y q yᴴ)`, convenience for tests and diagnostics.
pub fn sum_rate_from_powers(y: &[CVec], q: &[f64]) -> f64 {
    let n = y[0].len();
    let mut g = identity(n);
    for (yi, &qi) in y.iter().zip(q) {
        g += outer(yi, yi).scale(qi);
    }
    log2_det_hpd(&g).unwrap_or(f64::NAN)
}
