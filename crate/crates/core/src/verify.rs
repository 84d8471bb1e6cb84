//! Oracle suite: grouped checks of the solvers against independent references.
//!
//! Every check records its tolerance and the measured value so a report is
//! auditable on its own. Checks are deterministic under the budget seed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::array::{build_operators, fisher_matrix, ArrayConfig, Target};
use crate::channel::{generate_channels, ChannelConfig};
use crate::duality::{bc_sum_rate, mac_sum_rate, mac_to_bc, UplinkSolution};
use crate::exec::Execution;
use crate::linalg::{eigh, random_cvec, random_hermitian, random_psd, trace_product_re};
use crate::multiuser::{eigen_ratio, solve_multiuser, MultiuserOptions, MultiuserProblem};
use crate::oracle::{
    fd_gradient, feasible_sampler_projection_check, grid_slack, mc_fisher, simplex_grid_opt,
    simplex_grid_size, spectral_fill_optimum, OracleBudget,
};
use crate::singleuser::{
    gradient, objective, pgd_solve, project_spectrum, projection_kkt_residual, PgdConfig,
    SingleUserProblem,
};
use crate::{JcasError, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Duality,
    Fisher,
    Gradient,
    Projection,
    Multiuser,
    Singleuser,
}

impl Group {
    pub const ALL: [Group; 6] = [
        Group::Duality,
        Group::Fisher,
        Group::Gradient,
        Group::Projection,
        Group::Multiuser,
        Group::Singleuser,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Duality => "duality",
            Group::Fisher => "fisher",
            Group::Gradient => "gradient",
            Group::Projection => "projection",
            Group::Multiuser => "multiuser",
            Group::Singleuser => "singleuser",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = JcasError;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Group::ALL.iter().map(|g| g.as_str()).collect();
                JcasError::config(
                    "only",
                    format!("unknown group `{s}`, expected one of {}", names.join(", ")),
                )
            })
    }
}

/// One comparison of a measured quantity against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub group: Group,
    pub name: String,
    /// Reference value at the worst case, when a single one exists.
    pub expected: Option<f64>,
    /// Solver value at the worst case, paired with `expected`.
    pub actual: Option<f64>,
    /// Error measure compared against `tolerance` (smaller is better).
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(group: Group, name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Check {
            group,
            name: name.into(),
            expected: None,
            actual: None,
            error,
            tolerance,
            passed: error <= tolerance,
        }
    }

    fn pair(mut self, expected: f64, actual: f64) -> Self {
        self.expected = Some(expected);
        self.actual = Some(actual);
        self
    }

    fn failed(group: Group, name: impl Into<String>, err: &JcasError) -> Self {
        let mut c = Check::new(group, format!("{}: {err}", name.into()), f64::INFINITY, 0.0);
        c.passed = false;
        c
    }

    /// Readable expected-vs-measured line for failed checks.
    pub fn diff(&self) -> String {
        let mut s = format!(
            "{}/{}: error {:.3e} exceeds tolerance {:.1e}",
            self.group, self.name, self.error, self.tolerance
        );
        if let (Some(e), Some(a)) = (self.expected, self.actual) {
            s.push_str(&format!("; expected {e:.12e}, measured {a:.12e}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub budget: OracleBudget,
    pub groups: Vec<Group>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs the selected groups (all when `only` is empty) in a fixed order.
pub fn run_verify(budget: &OracleBudget, only: &[Group]) -> Result<VerifyReport> {
    budget.validate()?;
    let groups: Vec<Group> = Group::ALL
        .into_iter()
        .filter(|g| only.is_empty() || only.contains(g))
        .collect();
    let mut checks = Vec::new();
    for &g in &groups {
        let seed = budget.rng_seed ^ (g as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        match g {
            Group::Duality => duality(&mut rng, &mut checks),
            Group::Fisher => fisher(budget, &mut rng, &mut checks),
            Group::Gradient => gradients(&mut rng, &mut checks),
            Group::Projection => projection(budget, &mut rng, &mut checks),
            Group::Multiuser => multiuser(budget, &mut checks),
            Group::Singleuser => singleuser(&mut checks),
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        budget: *budget,
        groups,
        checks,
        passed,
    })
}

fn duality(rng: &mut ChaCha20Rng, out: &mut Vec<Check>) {
    let g = Group::Duality;
    let (mut rate, mut power, mut rank) = ((0.0f64, 0.0, 0.0), (0.0f64, 0.0, 0.0), 0.0f64);
    for _ in 0..50 {
        let k = rng.random_range(1..=4);
        let n = rng.random_range(1..=8);
        let h: Vec<_> = (0..k).map(|_| random_cvec(rng, n)).collect();
        let up = UplinkSolution::new((0..k).map(|_| rng.random_range(0.0..10.0)).collect());
        let (dl, _) = match mac_to_bc(&h, &up) {
            Ok(d) => d,
            Err(e) => return out.push(Check::failed(g, "mac_to_bc", &e)),
        };
        let mac = mac_sum_rate(&h, &up);
        let (bc, _) = bc_sum_rate(&h, &dl.r, &up.order);
        if rel(bc, mac) > rate.0 {
            rate = (rel(bc, mac), mac, bc);
        }
        let (pq, pr) = (up.total_power(), dl.total_power());
        if rel(pr, pq) > power.0 {
            power = (rel(pr, pq), pq, pr);
        }
        rank = dl.r.iter().map(eigen_ratio).fold(rank, f64::max);
    }
    out.push(Check::new(g, "bc_equals_mac_sum_rate", rate.0, 1e-8).pair(rate.1, rate.2));
    out.push(Check::new(g, "power_conserved", power.0, 1e-8).pair(power.1, power.2));
    out.push(Check::new(g, "downlink_rank_one", rank, 1e-8));
}

fn fisher(budget: &OracleBudget, rng: &mut ChaCha20Rng, out: &mut Vec<Check>) {
    let g = Group::Fisher;
    let cfg = ArrayConfig::half_wavelength(2, 2).expect("fixed array");
    let tgt = Target::new(0.3, C64::new(0.8, -0.6), 1.0).expect("fixed target");
    let ops = build_operators(&cfg, &tgt);
    let r = random_psd(rng, 2, 2.0);
    let an = match fisher_matrix(&ops, &tgt, &r) {
        Ok(f) => f.j,
        Err(e) => return out.push(Check::failed(g, "fisher_matrix", &e)),
    };
    let n = budget.max_mc_samples.min(100_000);
    let mc = mc_fisher(&ops, &tgt, &r, n, rng.random(), Execution::Parallel);
    // entry errors scaled by sqrt(J_aa J_bb), the CLT standard deviation of a
    // score outer-product entry, have standard error about 1/sqrt(n)
    let mut worst = (0.0, 0.0, 0.0);
    for a in 0..3 {
        for b in 0..3 {
            let scale = (an[(a, a)].re * an[(b, b)].re).sqrt();
            if scale > 1e-6 {
                let err = (mc[(a, b)] - an[(a, b)]).norm() / scale;
                if err > worst.0 {
                    worst = (err, an[(a, b)].norm(), mc[(a, b)].norm());
                }
            }
        }
    }
    let tol = 6.0 / (n as f64).sqrt();
    out.push(
        Check::new(g, format!("monte_carlo_normalized_n{n}"), worst.0, tol).pair(worst.1, worst.2),
    );
    let z = an[(1, 2)].norm().max(an[(2, 1)].norm());
    out.push(Check::new(g, "structural_zero_j23", z, 0.0).pair(0.0, z));
}

fn gradients(rng: &mut ChaCha20Rng, out: &mut Vec<Check>) {
    let g = Group::Gradient;
    let mut worst = (0.0f64, 0.0, 0.0);
    for pair in 0..20 {
        let n = 2 + pair % 5;
        let alpha = rng.random_range(0.0..=1.0);
        let cfg = ArrayConfig::half_wavelength(n, n).expect("valid array");
        let tgt = Target::new(0.4, C64::new(0.7, 0.2), 1.0).expect("fixed target");
        let p = match SingleUserProblem::new(
            random_cvec(rng, n),
            1.0,
            build_operators(&cfg, &tgt),
            5.0,
            5.0,
            alpha,
        ) {
            Ok(p) => p,
            Err(e) => return out.push(Check::failed(g, "problem", &e)),
        };
        let tr = rng.random_range(0.1..5.0);
        let r = random_psd(rng, n, tr);
        let grad = gradient(&p, &r);
        for _ in 0..10 {
            let d = random_hermitian(rng, n);
            let fd = fd_gradient(|x| objective(&p, x), &r, &d);
            let an = trace_product_re(&grad, &d);
            let err = (fd - an).abs() / an.abs().max(1e-8);
            if err > worst.0 {
                worst = (err, fd, an);
            }
        }
    }
    out.push(
        Check::new(g, "finite_difference_200_directions", worst.0, 1e-5).pair(worst.1, worst.2),
    );
}

fn projection(budget: &OracleBudget, rng: &mut ChaCha20Rng, out: &mut Vec<Check>) {
    let g = Group::Projection;
    let sigma = [0.9, 0.5, 0.2, 0.05];
    let pr = project_spectrum(&sigma, 1.0, 0.6);
    let want = [0.6, 0.35, 0.05, 0.0];
    let ex = pr
        .lambdas
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(Check::new(g, "hand_example_eigenvalues", ex, 1e-10));
    out.push(Check::new(g, "hand_example_mu", (pr.mu - 0.15).abs(), 1e-10).pair(0.15, pr.mu));
    let samples = budget.max_mc_samples.min(100_000);
    let (mut kkt, mut beaten, mut idem) = (
        projection_kkt_residual(&sigma, 1.0, 0.6, &pr),
        0usize,
        0.0f64,
    );
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let p = rng.random_range(0.2..3.0);
        let e = rng.random_range(0.1..1.5);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..2.0)).collect();
        let pr = project_spectrum(&s, p, e);
        kkt = kkt.max(projection_kkt_residual(&s, p, e, &pr));
        let again = project_spectrum(&pr.lambdas, p, e);
        idem = again
            .lambdas
            .iter()
            .zip(&pr.lambdas)
            .map(|(a, b)| (a - b).abs())
            .fold(idem, f64::max);
        if !feasible_sampler_projection_check(&s, &pr.lambdas, p, e, samples, rng.random()).passed {
            beaten += 1;
        }
    }
    out.push(Check::new(g, "kkt_residual", kkt, 1e-8));
    out.push(Check::new(g, "idempotent", idem, 0.0));
    out.push(Check::new(
        g,
        format!("random_feasible_never_closer_n{samples}"),
        beaten as f64,
        0.0,
    ));
}

fn multiuser(budget: &OracleBudget, out: &mut Vec<Check>) {
    let g = Group::Multiuser;
    let tgt = Target::new(0.0, C64::new(1.0, 0.0), 1.0).expect("fixed target");
    for (k, grid) in [(1usize, 300usize), (2, 200), (3, 60)] {
        // shrink the grid until it fits the budget
        let mut grid = grid;
        while grid > 1 && simplex_grid_size(k, grid) > budget.max_grid_points {
            grid /= 2;
        }
        let array = ArrayConfig::half_wavelength(4, 4).expect("fixed array");
        let base = generate_channels(&ChannelConfig::standard(k, 40 + k as u64), &array)
            .and_then(|cs| MultiuserProblem::new(cs, build_operators(&array, &tgt), 10.0, 0.0));
        let base = match base {
            Ok(b) => b,
            Err(e) => return out.push(Check::failed(g, "problem", &e)),
        };
        for alpha in [0.0, 0.5, 1.0] {
            let name = format!("grid_K{k}_alpha{alpha}");
            let res = base.with_alpha(alpha).and_then(|p| {
                let sol = solve_multiuser(&p, &MultiuserOptions::default())?;
                let h = p.normalized_channels();
                let opt = simplex_grid_opt(
                    h,
                    &p.ops.m,
                    p.p_tx,
                    alpha,
                    grid,
                    budget,
                    Execution::Parallel,
                )?;
                Ok((
                    sol.objective,
                    opt.objective,
                    grid_slack(h, &p.ops.m, p.p_tx, alpha, grid),
                ))
            });
            match res {
                // one-sided: shortfall below the grid optimum, measured against the slack
                Ok((sol, opt, slack)) => {
                    out.push(Check::new(g, name, (opt - sol).max(0.0), slack).pair(opt, sol))
                }
                Err(e) => out.push(Check::failed(g, name, &e)),
            }
        }
    }
    let array = ArrayConfig::half_wavelength(4, 4).expect("fixed array");
    let res = generate_channels(&ChannelConfig::standard(1, 41), &array)
        .and_then(|cs| MultiuserProblem::new(cs, build_operators(&array, &tgt), 10.0, 0.0))
        .and_then(|p| {
            let sol = solve_multiuser(&p, &MultiuserOptions::default())?;
            Ok((
                (1.0 + p.p_tx * p.normalized_channels()[0].norm_squared()).log2(),
                sol.mi_bits,
            ))
        });
    match res {
        Ok((want, got)) => {
            out.push(Check::new(g, "water_filling_K1", rel(got, want), 1e-6).pair(want, got))
        }
        Err(e) => out.push(Check::failed(g, "water_filling_K1", &e)),
    }
}

fn singleuser(out: &mut Vec<Check>) {
    let g = Group::Singleuser;
    let cfg = PgdConfig::default();
    let p_tx = 1000.0;
    let res = (|| -> Result<Vec<(&'static str, f64, f64)>> {
        let array = ArrayConfig::half_wavelength(10, 10)?;
        let cs = generate_channels(&ChannelConfig::standard(1, 8), &array)?;
        let tgt = Target::new(0.0, C64::new(1.0, 0.0), 1.0)?;
        let p = SingleUserProblem::new(
            cs.h[0].clone(),
            cs.sigma_c2,
            build_operators(&array, &tgt),
            p_tx,
            2.0 * p_tx,
            0.0,
        )?;
        let mi = pgd_solve(&p, &cfg)?.mi_bits;
        let mi_want = (1.0 + p_tx * p.h.norm_squared() / p.sigma_c2).log2();
        let p = p.with_alpha(1.0)?;
        let fi = pgd_solve(&p, &cfg)?.fi;
        let fi_want = p_tx * eigh(&p.ops.m).max();
        let p = p.with_eirp(0.3 * p_tx)?;
        let fill = pgd_solve(&p, &cfg)?.fi;
        let fill_want = spectral_fill_optimum(&p.ops.m, p_tx, 0.3 * p_tx);
        Ok(vec![
            ("matched_filter_rate", mi_want, mi),
            ("dominant_eigenbeam_fi", fi_want, fi),
            ("spectral_fill_fi", fill_want, fill),
        ])
    })();
    match res {
        Ok(rows) => {
            for (name, want, got) in rows {
                out.push(Check::new(g, name, rel(got, want), 1e-4).pair(want, got));
            }
        }
        Err(e) => out.push(Check::failed(g, "pgd", &e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names_round_trip() {
        for g in Group::ALL {
            assert_eq!(g.as_str().parse::<Group>().unwrap(), g);
        }
        assert!("nope".parse::<Group>().is_err());
    }

    #[test]
    fn only_selects_groups() {
        let r = run_verify(&OracleBudget::default(), &[Group::Projection]).unwrap();
        assert_eq!(r.groups, vec![Group::Projection]);
        assert!(r.checks.iter().all(|c| c.group == Group::Projection));
        assert!(
            r.passed,
            "{:?}",
            r.failures().map(Check::diff).collect::<Vec<_>>()
        );
    }

    #[test]
    fn diff_names_both_values() {
        let c = Check::new(Group::Fisher, "x", 0.5, 0.1).pair(1.0, 1.5);
        assert!(!c.passed);
        let d = c.diff();
        assert!(
            d.contains("expected 1.0") && d.contains("measured 1.5"),
            "{d}"
        );
    }
}
