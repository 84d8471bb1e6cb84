//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p jcas-core --test acceptance`. Exits nonzero when any
//! criterion fails.

use std::time::{Duration, Instant};

use jcas_core::array::{build_operators, fisher_matrix, ArrayConfig, Target};
use jcas_core::channel::{generate_channels, ChannelConfig};
use jcas_core::duality::{bc_sum_rate, mac_sum_rate, mac_to_bc, mac_user_rates, UplinkSolution};
use jcas_core::exec::Execution;
use jcas_core::linalg::{eigh, random_cvec, random_hermitian, random_psd, trace_re};
use jcas_core::multiuser::{
    baseline_components, baseline_from_components, eigen_ratio, solve_multiuser, MultiuserOptions,
    MultiuserProblem,
};
use jcas_core::oracle::{
    fd_gradient, feasible_sampler_projection_check, grid_slack, mc_fisher, simplex_grid_opt,
    spectral_fill_optimum, OracleBudget,
};
use jcas_core::pareto::{
    default_scenarios, frontier_check, run_sweep, EirpUnits, SweepOutput, SweepSpec,
};
use jcas_core::singleuser::{
    gradient, objective, pgd_solve, project_spectrum, projection_kkt_residual, PgdConfig,
    SingleUserProblem,
};
use jcas_core::units::dbm_to_mw;
use jcas_core::{CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn target() -> Target {
    Target::new(0.0, C64::new(1.0, 0.0), 1.0).unwrap()
}

fn multiuser_cell(k: usize, n: usize, seed: u64, p_tx: f64) -> MultiuserProblem {
    let array = ArrayConfig::half_wavelength(n, n).unwrap();
    let cs = generate_channels(&ChannelConfig::standard(k, seed), &array).unwrap();
    MultiuserProblem::new(cs, build_operators(&array, &target()), p_tx, 0.0).unwrap()
}

/// Shared by criteria 1 and 2.
fn duality_instances() -> Vec<(Vec<CVec>, UplinkSolution)> {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    (0..100)
        .map(|_| {
            let k = rng.random_range(1..=4);
            let n = rng.random_range(1..=8);
            let h: Vec<CVec> = (0..k).map(|_| random_cvec(&mut rng, n)).collect();
            let q: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
            let mut order: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            (h, UplinkSolution::new(q).with_order(order))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut worst_sum: f64 = 0.0;
    let mut worst_user: f64 = 0.0;
    for (h, up) in duality_instances() {
        let (dl, _) = match mac_to_bc(&h, &up) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("transform failed: {e}")),
        };
        let mac = mac_sum_rate(&h, &up);
        let (bc, per) = bc_sum_rate(&h, &dl.r, &up.order);
        worst_sum = worst_sum.max(rel(bc, mac));
        for (a, b) in mac_user_rates(&h, &up).iter().zip(&per) {
            worst_user = worst_user.max((a - b).abs() / a.abs().max(1e-12));
        }
    }
    outcome(
        worst_sum <= 1e-8 && worst_user <= 1e-8,
        format!("max rel sum-rate gap {worst_sum:.2e}, per-user {worst_user:.2e} (tol 1e-8)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for (h, up) in duality_instances() {
        let (dl, _) = mac_to_bc(&h, &up).unwrap();
        let per_user: f64 = dl.r.iter().map(trace_re).sum();
        worst = worst.max(rel(per_user, up.total_power()));
    }
    outcome(
        worst <= 1e-8,
        format!("max rel power gap {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_3() -> Outcome {
    let base = multiuser_cell(4, 10, 1, dbm_to_mw(30.0));
    let opts = MultiuserOptions::default();
    let comps = baseline_components(&base, 20, &opts).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    let mut failures = Vec::new();
    for j in 0..41 {
        let alpha = j as f64 / 40.0;
        let p = base.with_alpha(alpha).unwrap();
        let opt = solve_multiuser(&p, &opts).unwrap();
        let sub = baseline_from_components(&p, &comps).unwrap();
        for r in &opt.downlink.r {
            worst_ratio = worst_ratio.max(eigen_ratio(r));
        }
        let margin = (opt.objective - sub.objective) / opt.objective.abs().max(1.0);
        worst_margin = worst_margin.min(margin);
        if opt.objective < sub.objective {
            failures.push(alpha);
        }
    }
    outcome(
        worst_ratio <= 1e-8 && failures.is_empty(),
        format!(
            "max λ2/λ1 {worst_ratio:.2e} (tol 1e-8); min rel margin over baseline {worst_margin:.3e}; losing alphas {failures:?}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let budget = OracleBudget::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, grid) in [(1usize, 300usize), (2, 200), (3, 100)] {
        let base = multiuser_cell(k, 4, 40 + k as u64, 10.0);
        for alpha in [0.0, 0.5, 1.0] {
            let p = base.with_alpha(alpha).unwrap();
            let sol = solve_multiuser(&p, &MultiuserOptions::default()).unwrap();
            let h = p.normalized_channels();
            let g = simplex_grid_opt(
                h,
                &p.ops.m,
                p.p_tx,
                alpha,
                grid,
                &budget,
                Execution::Parallel,
            )
            .unwrap();
            let slack = grid_slack(h, &p.ops.m, p.p_tx, alpha, grid);
            let ok = sol.objective >= g.objective - slack;
            pass &= ok;
            lines.push(format!(
                "K={k} α={alpha}: solver {:.6e} grid {:.6e}{}",
                sol.objective,
                g.objective,
                if ok { "" } else { " FAIL" }
            ));
        }
    }
    // closed-form water-filling
    let p = multiuser_cell(1, 4, 41, 10.0);
    let sol = solve_multiuser(&p, &MultiuserOptions::default()).unwrap();
    let g = p.normalized_channels()[0].norm_squared();
    let beta = (1.0 / std::f64::consts::LN_2) / (p.p_tx + 1.0 / g);
    let rate = (1.0 + p.p_tx * g).log2();
    let wf = rel(sol.beta, beta)
        .max(rel(sol.mi_bits, rate))
        .max(rel(sol.power_used, p.p_tx));
    pass &= wf <= 1e-6;
    lines.push(format!("K=1 water-filling rel err {wf:.2e} (tol 1e-6)"));
    outcome(pass, lines.join("; "))
}

fn criterion_5() -> Outcome {
    let cfg = ArrayConfig::half_wavelength(2, 2).unwrap();
    let tgt = Target::new(0.3, C64::new(0.8, -0.6), 1.0).unwrap();
    let ops = build_operators(&cfg, &tgt);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let r = random_psd(&mut rng, 2, 2.0);
    let an = fisher_matrix(&ops, &tgt, &r).unwrap().j;
    let mc = mc_fisher(&ops, &tgt, &r, 100_000, 55, Execution::Parallel);
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            if an[(a, b)].norm() > 1e-6 {
                worst = worst.max((mc[(a, b)] - an[(a, b)]).norm() / an[(a, b)].norm());
            }
        }
    }
    let zero = an[(1, 2)] == C64::new(0.0, 0.0) && an[(2, 1)] == C64::new(0.0, 0.0);
    outcome(
        worst <= 0.03 && zero,
        format!("max entrywise rel err {worst:.3e} (tol 3e-2); J23 exactly zero: {zero}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for pair in 0..20 {
        let n = 2 + pair % 5;
        let alpha = rng.random_range(0.0..=1.0);
        let cfg = ArrayConfig::half_wavelength(n, n).unwrap();
        let ops = build_operators(&cfg, &Target::new(0.4, C64::new(0.7, 0.2), 1.0).unwrap());
        let problem =
            SingleUserProblem::new(random_cvec(&mut rng, n), 1.0, ops, 5.0, 5.0, alpha).unwrap();
        let tr = rng.random_range(0.1..5.0);
        let r = random_psd(&mut rng, n, tr);
        let g = gradient(&problem, &r);
        for _ in 0..10 {
            let d = random_hermitian(&mut rng, n);
            let fd = fd_gradient(|x| objective(&problem, x), &r, &d);
            let an = jcas_core::linalg::trace_product_re(&g, &d);
            worst = worst.max((fd - an).abs() / an.abs().max(1e-8));
        }
    }
    outcome(
        worst <= 1e-5,
        format!("max rel err {worst:.2e} over 200 directions (tol 1e-5)"),
    )
}

fn criterion_7() -> Outcome {
    let sigma = [0.9, 0.5, 0.2, 0.05];
    let pr = project_spectrum(&sigma, 1.0, 0.6);
    let want = [0.6, 0.35, 0.05, 0.0];
    let ex = pr
        .lambdas
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold((pr.mu - 0.15).abs(), f64::max);
    let mut worst_kkt = projection_kkt_residual(&sigma, 1.0, 0.6, &pr);
    let mut beaten = 0;
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for i in 0..50 {
        let n = rng.random_range(1..=5);
        let p = rng.random_range(0.2..3.0);
        let e = rng.random_range(0.1..1.5);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..2.0)).collect();
        let pr = project_spectrum(&s, p, e);
        worst_kkt = worst_kkt.max(projection_kkt_residual(&s, p, e, &pr));
        if !feasible_sampler_projection_check(&s, &pr.lambdas, p, e, 100_000, 700 + i).passed {
            beaten += 1;
        }
    }
    outcome(
        ex <= 1e-10 && beaten == 0 && worst_kkt <= 1e-8,
        format!("example err {ex:.1e} (tol 1e-10); instances beaten by sampling {beaten}/50; max KKT residual {worst_kkt:.1e} (tol 1e-8)"),
    )
}

fn single_user(n: usize, seed: u64, p_tx: f64, eirp: f64, alpha: f64) -> SingleUserProblem {
    let array = ArrayConfig::half_wavelength(n, n).unwrap();
    let cs = generate_channels(&ChannelConfig::standard(1, seed), &array).unwrap();
    SingleUserProblem::new(
        cs.h[0].clone(),
        cs.sigma_c2,
        build_operators(&array, &target()),
        p_tx,
        eirp,
        alpha,
    )
    .unwrap()
}

fn criterion_8() -> Outcome {
    let cfg = PgdConfig::default();
    let p_tx = dbm_to_mw(30.0);
    let p = single_user(10, 8, p_tx, 2.0 * p_tx, 0.0);
    let mi = pgd_solve(&p, &cfg).unwrap().mi_bits;
    let mi_want = (1.0 + p_tx * p.h.norm_squared() / p.sigma_c2).log2();
    let p = p.with_alpha(1.0).unwrap();
    let fi = pgd_solve(&p, &cfg).unwrap().fi;
    let fi_want = p_tx * eigh(&p.ops.m).max();
    let p = p.with_eirp(0.3 * p_tx).unwrap();
    let fill = pgd_solve(&p, &cfg).unwrap().fi;
    let fill_want = spectral_fill_optimum(&p.ops.m, p_tx, 0.3 * p_tx);
    let errs = [rel(mi, mi_want), rel(fi, fi_want), rel(fill, fill_want)];
    outcome(
        errs.iter().all(|&e| e <= 1e-4),
        format!(
            "rel err MI {:.1e}, FI {:.1e}, spectral fill {:.1e} (tol 1e-4)",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn find_scenario(name: &str) -> SweepSpec {
    default_scenarios()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, s)| s)
        .expect("scenario exists")
}

fn eirp_violations(out: &SweepOutput, alphas: &[f64]) -> (Vec<String>, bool) {
    let mut violations = Vec::new();
    let mut weighted_ok = true;
    for (ai, alpha) in alphas.iter().enumerate() {
        let seq: Vec<_> = (0..out.cells.len())
            .map(|c| &out.points[c * alphas.len() + ai])
            .collect();
        for w in seq.windows(2) {
            let tol = 1e-6;
            if w[1].mi_bits < w[0].mi_bits - tol * w[0].mi_bits.abs() {
                violations.push(format!(
                    "MI α={alpha}: {:.9e} -> {:.9e}",
                    w[0].mi_bits, w[1].mi_bits
                ));
            }
            if w[1].fi < w[0].fi - tol * w[0].fi.abs() {
                violations.push(format!("FI α={alpha}: {:.9e} -> {:.9e}", w[0].fi, w[1].fi));
            }
            weighted_ok &= w[1].objective >= w[0].objective - tol * w[0].objective.abs();
        }
    }
    (violations, weighted_ok)
}

fn criterion_9() -> Outcome {
    let alphas = [0.0, 0.5, 1.0];
    let mut spec = find_scenario("eirp");
    let (violations, weighted_ok) = eirp_violations(&run_sweep(&spec).unwrap(), &alphas);
    spec.eirp_units = EirpUnits::Watts;
    let (watts, _) = eirp_violations(&run_sweep(&spec).unwrap(), &alphas);
    let side = format!(
        "weighted objective nondecreasing: {weighted_ok}; ladder read as 0.6-0.9 linear: {} violations",
        watts.len()
    );
    outcome(
        violations.is_empty(),
        if violations.is_empty() {
            format!("MI and FI nondecreasing over 600/700/800/900 mW at α ∈ {{0, 0.5, 1}}; {side}")
        } else {
            format!("violations: {}; {side}", violations.join("; "))
        },
    )
}

fn frontier_failures(name: &str, out: &SweepOutput) -> Vec<String> {
    let mut bad = Vec::new();
    for c in 0..out.cells.len() {
        let d = frontier_check(&out.cell_points(c));
        if !d.ok() {
            bad.push(format!(
                "{name} cell {c} ({} failed, {} violations)",
                d.failed_points,
                d.violations.len()
            ));
        }
    }
    bad
}

fn criterion_10() -> Outcome {
    let mut bad = Vec::new();
    let mut cells = 0;
    for name in ["users", "antennas", "power"] {
        let out = run_sweep(&find_scenario(name)).unwrap();
        cells += out.cells.len();
        bad.extend(frontier_failures(name, &out));
        if name == "power" {
            let n = out.points.len() / out.cells.len();
            for lo in 0..out.cells.len() - 1 {
                for j in 0..n {
                    let a = &out.points[lo * n + j];
                    let b = &out.points[(lo + 1) * n + j];
                    if b.fi < a.fi * (1.0 - 1e-6) || b.mi_bits < a.mi_bits * (1.0 - 1e-6) {
                        bad.push(format!(
                            "P ladder {} -> {} dBm not dominating at α={}",
                            a.params.p_tx_dbm, b.params.p_tx_dbm, a.alpha
                        ));
                    }
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{cells} cells monotone; P_tx ladder 20/25/30 dBm dominates pointwise")
        } else {
            bad.join("; ")
        },
    )
}

fn criterion_11() -> Outcome {
    let mut spec = find_scenario("baseline");
    spec.alphas = jcas_core::pareto::uniform_alphas(11);
    let rows = |s: &SweepSpec| {
        run_sweep(s)
            .unwrap()
            .points
            .iter()
            .map(|p| serde_json::to_string(p).unwrap())
            .collect::<Vec<_>>()
    };
    let a = rows(&spec);
    let b = rows(&spec);
    spec.execution = Execution::Sequential;
    let c = rows(&spec);
    let mut single = find_scenario("eirp");
    single.alphas = vec![0.0, 0.5, 1.0];
    let d = rows(&single);
    let e = rows(&single);
    outcome(
        a == b && a == c && d == e,
        format!(
            "{} + {} rows byte-identical across re-runs and execution modes",
            a.len(),
            d.len()
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (
            "1 duality: BC rate equals MAC rate",
            Duration::from_secs(30),
            criterion_1,
        ),
        ("2 power conservation", Duration::from_secs(30), criterion_2),
        (
            "3 rank-one optimum dominates K+1-beam baseline",
            Duration::from_secs(300),
            criterion_3,
        ),
        (
            "4 multi-user solver vs simplex grid",
            Duration::from_secs(300),
            criterion_4,
        ),
        (
            "5 Fisher matrix vs Monte Carlo",
            Duration::from_secs(120),
            criterion_5,
        ),
        (
            "6 gradient vs finite differences",
            Duration::from_secs(60),
            criterion_6,
        ),
        (
            "7 spectral projection",
            Duration::from_secs(300),
            criterion_7,
        ),
        (
            "8 projected-gradient endpoints",
            Duration::from_secs(60),
            criterion_8,
        ),
        ("9 EIRP trend", Duration::from_secs(300), criterion_9),
        (
            "10 frontier monotonicity and power ladder",
            Duration::from_secs(900),
            criterion_10,
        ),
        ("11 determinism", Duration::from_secs(300), criterion_11),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} [{:.1}s, budget {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", exceeded" }
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
