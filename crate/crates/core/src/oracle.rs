//! Slow, simple reference computations used to check the solvers.
//!
//! Nothing here calls into [`duality`](crate::duality),
//! [`multiuser`](crate::multiuser) or [`singleuser`](crate::singleuser). The
//! rate and covariance formulas are written out again with plain linear
//! solves and determinants, so a shared bug would have to be made twice.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::array::{SensingOperators, Target};
use crate::exec::{map_indexed, Execution};
use crate::linalg::{cn01, eigh, sqrt_psd};
use crate::{CMat, CVec, JcasError, Result, C64};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct OracleBudget {
    pub max_grid_points: usize,
    pub max_mc_samples: usize,
    pub rng_seed: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_grid_points: 2_000_000,
            max_mc_samples: 1_000_000,
            rng_seed: 0x5eed,
        }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_grid_points == 0 || self.max_mc_samples == 0 {
            return Err(JcasError::config("budget", "budgets must be positive"));
        }
        Ok(())
    }
}

/// Central difference `(f(R + hΔ) − f(R − hΔ))/(2h)` with `h = 1e-6(1 + ‖R‖_F)`.
pub fn fd_gradient(f: impl Fn(&CMat) -> f64, r: &CMat, direction: &CMat) -> f64 {
    fd_gradient_with_step(&f, r, direction, 1e-6 * (1.0 + r.norm()))
}

pub fn fd_gradient_with_step(f: impl Fn(&CMat) -> f64, r: &CMat, direction: &CMat, h: f64) -> f64 {
    let plus = r + direction.scale(h);
    let minus = r - direction.scale(h);
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// Samples per independent RNG stream in [`mc_fisher`].
pub const MC_CHUNK: usize = 4096;

/// Empirical Fisher matrix `E[conj(s) sᵀ]` of the echo model
/// `y = γ A x + z`, with a fresh transmit vector `x ~ CN(0, R_x)` and noise
/// `z ~ CN(0, σ² I)` per sample. Scores, with `e = y − γ A x`:
///
/// - `s_θ = (2/σ²) Re(γ eᴴ Ȧ x)`
/// - `s_γ = eᴴ A x / σ²`
/// - `s_γ* = (A x)ᴴ e / σ²`
///
/// Samples are split into fixed chunks with one RNG stream each, and chunk
/// sums are added in chunk order, so the result is independent of threading.
pub fn mc_fisher(
    ops: &SensingOperators,
    target: &Target,
    r_x: &CMat,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Matrix3<C64> {
    let root = sqrt_psd(r_x);
    let n_tx = ops.n_tx();
    let n_rx = ops.response.nrows();
    let sigma = target.sigma_r2.sqrt();
    let inv = 1.0 / target.sigma_r2;
    let gamma = target.gamma_r;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let count = MC_CHUNK.min(n_samples - c * MC_CHUNK);
        let mut acc = Matrix3::<C64>::zeros();
        for _ in 0..count {
            let w = CVec::from_fn(n_tx, |_, _| cn01(&mut rng));
            let x = &root * w;
            let e = CVec::from_fn(n_rx, |_, _| cn01(&mut rng) * sigma);
            let ax = &ops.response * &x;
            let adx = &ops.response_dot * &x;
            let e_adx = e.dotc(&adx);
            let e_ax = e.dotc(&ax);
            let s = [
                C64::new(2.0 * inv * (gamma * e_adx).re, 0.0),
                e_ax * inv,
                e_ax.conj() * inv,
            ];
            for a in 0..3 {
                for b in 0..3 {
                    acc[(a, b)] += s[a].conj() * s[b];
                }
            }
        }
        acc
    });
    let total = partial
        .into_iter()
        .fold(Matrix3::<C64>::zeros(), |acc, m| acc + m);
    total / C64::new(n_samples as f64, 0.0)
}

/// `log2 det(I + Σ q_i h_i h_iᴴ)` by LU determinant.
pub fn reference_sum_rate(h: &[CVec], q: &[f64]) -> f64 {
    let g = plus_gram(h, q, 0..h.len());
    g.determinant().re.log2()
}

fn plus_gram(h: &[CVec], q: &[f64], users: impl Iterator<Item = usize>) -> CMat {
    let n = h[0].len();
    let mut g = CMat::identity(n, n);
    for j in users {
        g += (&h[j] * h[j].adjoint()).scale(q[j]);
    }
    g
}

/// Downlink covariances for uplink powers `q` in the natural encoding order,
/// written in the closed form
/// `R_i = q_i S_i T_i^{-1} h_i h_iᴴ T_i^{-1} / (h_iᴴ T_i^{-1} h_i)`.
pub fn reference_downlink(h: &[CVec], q: &[f64]) -> Vec<CMat> {
    let k = h.len();
    let n = h[0].len();
    let mut out: Vec<CMat> = Vec::with_capacity(k);
    for i in 0..k {
        if q[i] == 0.0 {
            out.push(CMat::zeros(n, n));
            continue;
        }
        let t = plus_gram(h, q, i + 1..k);
        let v = t.lu().solve(&h[i]).expect("T is positive definite");
        let gain = h[i].dotc(&v).re;
        let before: f64 = out.iter().map(|r| h[i].dotc(&(r * &h[i])).re).sum();
        let s = 1.0 + before;
        out.push((&v * v.adjoint()).scale(q[i] * s / gain));
    }
    out
}

/// Weighted objective of the uplink point `q`, evaluated through
/// [`reference_downlink`].
pub fn reference_objective(h: &[CVec], m: &CMat, alpha: f64, q: &[f64]) -> f64 {
    let mut fi = 0.0;
    if alpha != 0.0 {
        for r in reference_downlink(h, q) {
            fi += (m * r).trace().re;
        }
    }
    alpha * fi + (1.0 - alpha) * reference_sum_rate(h, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub q: Vec<f64>,
    pub objective: f64,
    pub points: usize,
}

/// Number of points `{q = P·k/g : k ∈ ℕ^K, Σk ≤ g}`.
pub fn simplex_grid_size(k: usize, grid: usize) -> usize {
    // C(g + K, K)
    (1..=k).fold(1usize, |acc, j| acc * (grid + j) / j)
}

/// Exhaustive search over the discretized power simplex `Σq ≤ P_tx`.
/// Ties keep the earliest point in lexicographic order.
pub fn simplex_grid_opt(
    h: &[CVec],
    m: &CMat,
    p_tx: f64,
    alpha: f64,
    grid: usize,
    budget: &OracleBudget,
    exec: Execution,
) -> Result<GridOptimum> {
    let k = h.len();
    if k == 0 || k > 3 {
        return Err(JcasError::config(
            "oracle.users",
            "grid oracle supports 1 to 3 users",
        ));
    }
    if grid == 0 || grid > 300 {
        return Err(JcasError::config("oracle.grid", "must lie in 1..=300"));
    }
    let points = simplex_grid_size(k, grid);
    if points > budget.max_grid_points {
        return Err(JcasError::Budget(format!(
            "{points} grid points exceed the limit of {}",
            budget.max_grid_points
        )));
    }
    let mut idx: Vec<Vec<usize>> = Vec::with_capacity(points);
    let mut cur = vec![0usize; k];
    enumerate_simplex(&mut cur, 0, grid, &mut idx);
    let step = p_tx / grid as f64;
    let values = map_indexed(exec, idx.len(), |j| {
        let q: Vec<f64> = idx[j].iter().map(|&c| c as f64 * step).collect();
        reference_objective(h, m, alpha, &q)
    });
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = j;
        }
    }
    Ok(GridOptimum {
        q: idx[best].iter().map(|&c| c as f64 * step).collect(),
        objective: values[best],
        points,
    })
}

fn enumerate_simplex(cur: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for c in 0..=left {
        cur[pos] = c;
        enumerate_simplex(cur, pos + 1, left - c, out);
    }
    cur[pos] = 0;
}

/// Objective change bound across one grid cell:
/// `(P/g)·K·(α λ_max(M) + (1−α) max‖h‖²/ln2)`.
pub fn grid_slack(h: &[CVec], m: &CMat, p_tx: f64, alpha: f64, grid: usize) -> f64 {
    let lm = eigh(m).max().max(0.0);
    let g = h.iter().map(|v| v.norm_squared()).fold(0.0, f64::max);
    p_tx / grid as f64 * h.len() as f64 * (alpha * lm + (1.0 - alpha) * g / LN2)
}

/// Sum capacity of the dual MAC by projected gradient on the power simplex
/// `{q ≥ 0, Σq = P}`, with backtracking.
pub fn mac_capacity_pg(h: &[CVec], p_tx: f64, iters: usize) -> (Vec<f64>, f64) {
    let k = h.len();
    let mut q = vec![p_tx / k as f64; k];
    let mut val = reference_sum_rate(h, &q);
    let mut step = p_tx;
    for _ in 0..iters {
        let g = plus_gram(h, &q, 0..k);
        let lu = g.lu();
        let grad: Vec<f64> = h
            .iter()
            .map(|v| v.dotc(&lu.solve(v).expect("positive definite")).re / LN2)
            .collect();
        let mut moved = false;
        for _ in 0..60 {
            let z: Vec<f64> = q.iter().zip(&grad).map(|(a, b)| a + step * b).collect();
            let cand = simplex_projection(&z, p_tx);
            let v = reference_sum_rate(h, &cand);
            if v > val {
                q = cand;
                val = v;
                moved = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (q, val)
}

/// Euclidean projection onto `{x ≥ 0, Σx = s}` by sorting.
pub fn simplex_projection(z: &[f64], s: f64) -> Vec<f64> {
    let mut u = z.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in u.iter().enumerate() {
        cum += v;
        let t = (cum - s) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    z.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Projection onto `{0 ≤ λ ≤ E, Σλ ≤ P}` by plain bisection on the shift.
pub fn projection_by_bisection(sigma: &[f64], p_tx: f64, eirp: f64) -> (Vec<f64>, f64) {
    let power = |mu: f64| -> f64 { sigma.iter().map(|&s| (s - mu).clamp(0.0, eirp)).sum() };
    if power(0.0) <= p_tx {
        return (sigma.iter().map(|&s| s.clamp(0.0, eirp)).collect(), 0.0);
    }
    let (mut lo, mut hi) = (0.0, sigma.iter().copied().fold(0.0, f64::max));
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if power(mid) > p_tx {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    (
        sigma.iter().map(|&s| (s - mu).clamp(0.0, eirp)).collect(),
        mu,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    pub passed: bool,
    pub candidate_distance: f64,
    pub best_sample_distance: f64,
    pub samples: usize,
}

/// Random feasible points never get closer to `sigma` than `candidate`.
///
/// Half of the samples are uniform in the box rescaled into the budget, the
/// other half are feasible perturbations of the candidate itself.
pub fn feasible_sampler_projection_check(
    sigma: &[f64],
    candidate: &[f64],
    p_tx: f64,
    eirp: f64,
    n_samples: usize,
    seed: u64,
) -> SamplerReport {
    let n = sigma.len();
    let dist = |x: &[f64]| -> f64 {
        x.iter()
            .zip(sigma)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let make_feasible = |x: &mut Vec<f64>| {
        x.iter_mut().for_each(|v| *v = v.clamp(0.0, eirp));
        let t: f64 = x.iter().sum();
        if t > p_tx {
            x.iter_mut().for_each(|v| *v *= p_tx / t);
        }
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let scale = 1e-3 * eirp;
    for j in 0..n_samples {
        let mut x: Vec<f64> = if j % 2 == 0 {
            (0..n).map(|_| rng.random::<f64>() * eirp).collect()
        } else {
            let r = scale * 10f64.powf(-3.0 * rng.random::<f64>());
            candidate
                .iter()
                .map(|&c| c + r * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        };
        make_feasible(&mut x);
        best = best.min(dist(&x));
    }
    let cd = dist(candidate);
    SamplerReport {
        passed: cd <= best + 1e-12,
        candidate_distance: cd,
        best_sample_distance: best,
        samples: n_samples,
    }
}

/// `max Σ λ_m(M) x_m` over `0 ≤ x ≤ E`, `Σx ≤ P`: fill the strongest
/// eigen-directions of `M` with `E` each until the budget runs out.
pub fn spectral_fill_optimum(m: &CMat, p_tx: f64, eirp: f64) -> f64 {
    let mut left = p_tx;
    let mut out = 0.0;
    for l in eigh(m).values {
        if left <= 0.0 || l <= 0.0 {
            break;
        }
        let x = eirp.min(left);
        out += l * x;
        left -= x;
    }
    out
}

/// Exhaustive version of [`spectral_fill_optimum`]: enumerate every vertex
/// of the allocation polytope (each coordinate at 0, `E`, or the remainder).
pub fn spectral_fill_exhaustive(m: &CMat, p_tx: f64, eirp: f64) -> f64 {
    let vals = eigh(m).values;
    let n = vals.len();
    let mut best: f64 = 0.0;
    let combos = 3usize.pow(n as u32);
    for code in 0..combos {
        let mut c = code;
        let mut used = 0.0;
        let mut val = 0.0;
        let mut rem_slot = None;
        for &l in &vals {
            match c % 3 {
                1 => {
                    used += eirp;
                    val += l * eirp;
                }
                2 => {
                    if rem_slot.is_some() {
                        used = f64::INFINITY;
                    }
                    rem_slot = Some(l);
                }
                _ => {}
            }
            c /= 3;
        }
        if used > p_tx + 1e-12 {
            continue;
        }
        if let Some(l) = rem_slot {
            val += l * (p_tx - used).min(eirp);
        }
        best = best.max(val);
    }
    best
}
