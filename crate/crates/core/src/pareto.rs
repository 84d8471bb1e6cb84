//! Weighted-sum sweeps over `α` and scenario parameters.
//!
//! A sweep is the cartesian product of a parameter grid (cells) with a list of
//! weights. Channels are drawn once per cell and reused for every `α` of that
//! cell, so each cell yields one comparable frontier.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::array::{build_operators, ArrayConfig, SensingOperators, Target};
use crate::channel::{
    generate_channels, load_channels, ChannelConfig, ChannelSet, PathlossConvention,
};
use crate::exec::{map_indexed, Execution};
use crate::multiuser::{
    baseline_components, baseline_from_components, solve_multiuser, BaselineComponent,
    MultiuserOptions, MultiuserProblem, MultiuserResult,
};
use crate::serde_complex;
use crate::singleuser::{pgd_solve, PgdConfig, SingleUserProblem};
use crate::units::dbm_to_mw;
use crate::{JcasError, Result, SolverReport, C64};

/// Upper limits on problem size.
pub const MAX_ANTENNAS: usize = 24;
pub const MAX_USERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Multiuser,
    MultiuserSuboptimal,
    Singleuser,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Multiuser => "multiuser",
            ScenarioKind::MultiuserSuboptimal => "multiuser_suboptimal",
            ScenarioKind::Singleuser => "singleuser",
        }
    }
}

/// How EIRP values in dBm become linear caps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EirpUnits {
    /// `10^(x/10)` mW, consistent with every other power.
    #[default]
    Milliwatts,
    /// The same figure read as watts against unit noise (0.6 to 0.9 for the
    /// default ladder).
    Watts,
}

/// Swept values; an empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    pub n_tx: Vec<usize>,
    pub n_rx: Vec<usize>,
    pub p_tx_dbm: Vec<f64>,
    pub eirp_dbm: Vec<f64>,
    pub seed: Vec<u64>,
}

/// Parameters of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub n_tx: usize,
    /// Receive elements; equal to `n_tx` when absent.
    pub n_rx: Option<usize>,
    pub p_tx_dbm: f64,
    pub eirp_dbm: Option<f64>,
    pub seed: u64,
}

impl Default for CellParams {
    fn default() -> Self {
        CellParams {
            k: 4,
            n_tx: 10,
            n_rx: None,
            p_tx_dbm: 30.0,
            eirp_dbm: None,
            seed: 1,
        }
    }
}

impl CellParams {
    pub fn n_rx(&self) -> usize {
        self.n_rx.unwrap_or(self.n_tx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ChannelSource {
    /// Generate from the cell seed.
    Seed,
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub theta_r: f64,
    #[serde(with = "serde_complex::complex")]
    pub gamma_r: C64,
    pub sigma_r2_dbm: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec {
            theta_r: 0.0,
            gamma_r: C64::new(1.0, 0.0),
            sigma_r2_dbm: 0.0,
        }
    }
}

/// Channel model settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub n_paths: usize,
    pub pathloss_exponent: f64,
    pub ref_distance_m: f64,
    pub ref_loss: f64,
    pub user_distance_m: f64,
    pub sigma_c2_dbm: f64,
    pub pathloss_convention: PathlossConvention,
}

impl Default for ChannelModel {
    fn default() -> Self {
        let c = ChannelConfig::standard(1, 0);
        ChannelModel {
            n_paths: c.n_paths,
            pathloss_exponent: c.pathloss_exponent,
            ref_distance_m: c.ref_distance_m,
            ref_loss: c.ref_loss,
            user_distance_m: c.user_distances_m[0],
            sigma_c2_dbm: 0.0,
            pathloss_convention: c.pathloss_convention,
        }
    }
}

impl ChannelModel {
    pub fn config(&self, n_users: usize, seed: u64) -> ChannelConfig {
        ChannelConfig {
            n_users,
            n_paths: self.n_paths,
            pathloss_exponent: self.pathloss_exponent,
            ref_distance_m: self.ref_distance_m,
            ref_loss: self.ref_loss,
            user_distances_m: vec![self.user_distance_m; n_users],
            rng_seed: seed,
            sigma_c2: dbm_to_mw(self.sigma_c2_dbm),
            pathloss_convention: self.pathloss_convention,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub scenario: ScenarioKind,
    pub alphas: Vec<f64>,
    pub base: CellParams,
    pub param_grid: ParamGrid,
    pub channel_source: ChannelSource,
    pub channel: ChannelModel,
    pub target: TargetSpec,
    pub spacing_over_wavelength: f64,
    pub eirp_units: EirpUnits,
    /// ρ-grid size of the dedicated-beam baseline.
    pub baseline_grid: usize,
    /// Rescale FI and MI by their single-objective optima before weighting.
    /// Exploratory only; reported values stay raw.
    pub normalize: bool,
    pub multiuser: MultiuserOptions,
    pub pgd: PgdConfig,
    pub execution: Execution,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            scenario: ScenarioKind::Multiuser,
            alphas: uniform_alphas(41),
            base: CellParams::default(),
            param_grid: ParamGrid::default(),
            channel_source: ChannelSource::Seed,
            channel: ChannelModel::default(),
            target: TargetSpec::default(),
            spacing_over_wavelength: 0.5,
            eirp_units: EirpUnits::Milliwatts,
            baseline_grid: 20,
            normalize: false,
            multiuser: MultiuserOptions::default(),
            pgd: PgdConfig::default(),
            execution: Execution::Parallel,
        }
    }
}

/// `n` evenly spaced weights from 0 to 1 inclusive.
pub fn uniform_alphas(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(JcasError::config(
                "alphas",
                "at least one weight is required",
            ));
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(JcasError::config("alphas", "weights must lie in [0, 1]"));
        }
        if self.alphas.windows(2).any(|w| w[1] < w[0]) {
            return Err(JcasError::config(
                "alphas",
                "weights must be sorted ascending",
            ));
        }
        if self.baseline_grid < 2 {
            return Err(JcasError::config("baseline_grid", "must be at least 2"));
        }
        if !(self.spacing_over_wavelength > 0.0) {
            return Err(JcasError::config(
                "spacing_over_wavelength",
                "must be positive",
            ));
        }
        self.pgd.validate()?;
        for c in self.cells() {
            if c.k == 0 || c.k > MAX_USERS {
                return Err(JcasError::config(
                    "param_grid.K",
                    format!("must lie in 1..={MAX_USERS}"),
                ));
            }
            for (name, n) in [("param_grid.n_tx", c.n_tx), ("param_grid.n_rx", c.n_rx())] {
                if n == 0 || n > MAX_ANTENNAS {
                    return Err(JcasError::config(
                        name,
                        format!("must lie in 1..={MAX_ANTENNAS}"),
                    ));
                }
            }
            if !c.p_tx_dbm.is_finite() {
                return Err(JcasError::config("param_grid.p_tx_dbm", "must be finite"));
            }
            if self.scenario == ScenarioKind::Singleuser && c.eirp_dbm.is_none() {
                return Err(JcasError::config(
                    "base.eirp_dbm",
                    "single-user sweeps need an EIRP",
                ));
            }
        }
        Ok(())
    }

    /// Cells in a fixed order: `K`, `n_tx`, `n_rx`, `p_tx_dbm`, `eirp_dbm`,
    /// `seed`, the last varying fastest.
    pub fn cells(&self) -> Vec<CellParams> {
        fn axis<T: Clone>(list: &[T], base: T) -> Vec<T> {
            if list.is_empty() {
                vec![base]
            } else {
                list.to_vec()
            }
        }
        let g = &self.param_grid;
        let b = &self.base;
        let ks = if self.scenario == ScenarioKind::Singleuser {
            vec![1]
        } else {
            axis(&g.k, b.k)
        };
        let rx: Vec<Option<usize>> = if g.n_rx.is_empty() {
            vec![b.n_rx]
        } else {
            g.n_rx.iter().map(|&n| Some(n)).collect()
        };
        let eirp: Vec<Option<f64>> = if g.eirp_dbm.is_empty() {
            vec![b.eirp_dbm]
        } else {
            g.eirp_dbm.iter().map(|&e| Some(e)).collect()
        };
        let mut out = Vec::new();
        for &k in &ks {
            for &n_tx in &axis(&g.n_tx, b.n_tx) {
                for &n_rx in &rx {
                    for &p in &axis(&g.p_tx_dbm, b.p_tx_dbm) {
                        for &e in &eirp {
                            for &seed in &axis(&g.seed, b.seed) {
                                out.push(CellParams {
                                    k,
                                    n_tx,
                                    n_rx,
                                    p_tx_dbm: p,
                                    eirp_dbm: e,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn eirp_linear(&self, eirp_dbm: f64) -> f64 {
        match self.eirp_units {
            EirpUnits::Milliwatts => dbm_to_mw(eirp_dbm),
            EirpUnits::Watts => dbm_to_mw(eirp_dbm) / 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub cell: usize,
    pub scenario: ScenarioKind,
    pub params: CellParams,
    pub alpha: f64,
    pub mi_bits: f64,
    pub fi: f64,
    pub power_used: f64,
    /// `α·FI + (1−α)·MI` on raw values.
    pub objective: f64,
    pub channel_hash: String,
    pub report: SolverReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub params: CellParams,
    pub channel_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub cells: Vec<CellInfo>,
    /// Ordered by cell, then by `α`.
    pub points: Vec<ParetoPoint>,
}

impl SweepOutput {
    pub fn cell_points(&self, cell: usize) -> Vec<&ParetoPoint> {
        self.points.iter().filter(|p| p.cell == cell).collect()
    }
}

struct CellContext {
    channels: ChannelSet,
    ops: SensingOperators,
    p_tx: f64,
    eirp: Option<f64>,
    baseline: Vec<BaselineComponent>,
    /// Single-objective optima used only when normalizing.
    scales: Option<(f64, f64)>,
}

fn prepare_cell(spec: &SweepSpec, cell: &CellParams) -> Result<CellContext> {
    let array = ArrayConfig::new(cell.n_tx, cell.n_rx(), spec.spacing_over_wavelength)?;
    let target = Target::new(
        spec.target.theta_r,
        spec.target.gamma_r,
        dbm_to_mw(spec.target.sigma_r2_dbm),
    )?;
    let ops = build_operators(&array, &target);
    let channels = match &spec.channel_source {
        ChannelSource::Seed => generate_channels(&spec.channel.config(cell.k, cell.seed), &array)?,
        ChannelSource::File { path } => {
            let cs = load_channels(path, Some(cell.n_tx))?;
            if spec.scenario != ScenarioKind::Singleuser && cs.n_users() != cell.k {
                return Err(JcasError::config(
                    "param_grid.K",
                    format!("channel file holds {} users", cs.n_users()),
                ));
            }
            cs
        }
    };
    let p_tx = dbm_to_mw(cell.p_tx_dbm);
    let eirp = cell.eirp_dbm.map(|e| spec.eirp_linear(e));
    let mut ctx = CellContext {
        channels,
        ops,
        p_tx,
        eirp,
        baseline: Vec::new(),
        scales: None,
    };
    if spec.scenario == ScenarioKind::MultiuserSuboptimal {
        let problem = multiuser_problem(&ctx, 0.0)?;
        ctx.baseline = baseline_components(&problem, spec.baseline_grid, &spec.multiuser)?;
    }
    if spec.normalize {
        ctx.scales = Some(single_objective_scales(spec, &ctx)?);
    }
    Ok(ctx)
}

fn multiuser_problem(ctx: &CellContext, alpha: f64) -> Result<MultiuserProblem> {
    MultiuserProblem::new(ctx.channels.clone(), ctx.ops.clone(), ctx.p_tx, alpha)
}

fn singleuser_problem(ctx: &CellContext, alpha: f64) -> Result<SingleUserProblem> {
    let eirp = ctx
        .eirp
        .ok_or_else(|| JcasError::config("eirp_dbm", "single-user sweeps need an EIRP"))?;
    SingleUserProblem::new(
        ctx.channels.h[0].clone(),
        ctx.channels.sigma_c2,
        ctx.ops.clone(),
        ctx.p_tx,
        eirp,
        alpha,
    )
}

/// Best FI and best MI of the cell.
fn single_objective_scales(spec: &SweepSpec, ctx: &CellContext) -> Result<(f64, f64)> {
    let (fi, mi) = match spec.scenario {
        ScenarioKind::Singleuser => {
            let fi = pgd_solve(&singleuser_problem(ctx, 1.0)?, &spec.pgd)?.fi;
            let mi = pgd_solve(&singleuser_problem(ctx, 0.0)?, &spec.pgd)?.mi_bits;
            (fi, mi)
        }
        _ => {
            let fi = solve_multiuser(&multiuser_problem(ctx, 1.0)?, &spec.multiuser)?.fi;
            let mi = solve_multiuser(&multiuser_problem(ctx, 0.0)?, &spec.multiuser)?.mi_bits;
            (fi, mi)
        }
    };
    Ok((fi.max(f64::MIN_POSITIVE), mi.max(f64::MIN_POSITIVE)))
}

/// Weight that makes raw-valued weighting match normalized weighting.
fn effective_alpha(alpha: f64, scales: Option<(f64, f64)>) -> f64 {
    match scales {
        None => alpha,
        Some((f0, c0)) => {
            let a = alpha / f0;
            let b = (1.0 - alpha) / c0;
            if a + b == 0.0 {
                alpha
            } else {
                a / (a + b)
            }
        }
    }
}

struct Solved {
    mi_bits: f64,
    fi: f64,
    power_used: f64,
    report: SolverReport,
}

impl From<MultiuserResult> for Solved {
    fn from(r: MultiuserResult) -> Self {
        Solved {
            mi_bits: r.mi_bits,
            fi: r.fi,
            power_used: r.power_used,
            report: r.report,
        }
    }
}

fn solve_point(spec: &SweepSpec, ctx: &CellContext, alpha: f64) -> Result<Solved> {
    let a = effective_alpha(alpha, ctx.scales);
    match spec.scenario {
        ScenarioKind::Multiuser => {
            Ok(solve_multiuser(&multiuser_problem(ctx, a)?, &spec.multiuser)?.into())
        }
        ScenarioKind::MultiuserSuboptimal => {
            Ok(baseline_from_components(&multiuser_problem(ctx, a)?, &ctx.baseline)?.into())
        }
        ScenarioKind::Singleuser => {
            let s = pgd_solve(&singleuser_problem(ctx, a)?, &spec.pgd)?;
            Ok(Solved {
                mi_bits: s.mi_bits,
                fi: s.fi,
                power_used: crate::linalg::trace_re(&s.r_x),
                report: s.report,
            })
        }
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let cells = spec.cells();
    let exec = spec.execution;
    let contexts = map_indexed(exec, cells.len(), |c| prepare_cell(spec, &cells[c]));
    let infos: Vec<CellInfo> = cells
        .iter()
        .zip(&contexts)
        .map(|(params, ctx)| match ctx {
            Ok(ctx) => CellInfo {
                params: params.clone(),
                channel_hash: ctx.channels.content_hash(),
                error: None,
            },
            Err(e) => CellInfo {
                params: params.clone(),
                channel_hash: String::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    let n_alpha = spec.alphas.len();
    let points = map_indexed(exec, cells.len() * n_alpha, |job| {
        let c = job / n_alpha;
        let alpha = spec.alphas[job % n_alpha];
        let outcome = match &contexts[c] {
            Ok(ctx) => solve_point(spec, ctx, alpha).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        };
        let mut point = ParetoPoint {
            cell: c,
            scenario: spec.scenario,
            params: cells[c].clone(),
            alpha,
            mi_bits: 0.0,
            fi: 0.0,
            power_used: 0.0,
            objective: 0.0,
            channel_hash: infos[c].channel_hash.clone(),
            report: SolverReport::default(),
            error: None,
        };
        match outcome {
            Ok(s) => {
                point.mi_bits = s.mi_bits;
                point.fi = s.fi;
                point.power_used = s.power_used;
                point.objective = alpha * s.fi + (1.0 - alpha) * s.mi_bits;
                point.report = s.report;
            }
            Err(e) => point.error = Some(e),
        }
        point
    });
    Ok(SweepOutput {
        cells: infos,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Fi,
    Mi,
    WeightedSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub metric: Metric,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub value_a: f64,
    pub value_b: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontierDiagnostics {
    pub points: usize,
    pub failed_points: usize,
    pub violations: Vec<Violation>,
}

impl FrontierDiagnostics {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.failed_points == 0
    }

    pub fn monotone(&self) -> bool {
        self.failed_points == 0
            && self
                .violations
                .iter()
                .all(|v| v.metric == Metric::WeightedSum)
    }
}

/// Relative tolerance of [`frontier_check`].
pub const FRONTIER_TOL: f64 = 1e-6;

fn below(a: f64, b: f64) -> bool {
    // true when `b` falls short of `a` beyond tolerance
    b < a - FRONTIER_TOL * a.abs().max(b.abs()).max(1e-300)
}

/// Checks along increasing `α` within one cell: FI nondecreasing, MI
/// nonincreasing, and each point maximizing its own weighted sum among all
/// points of the cell.
pub fn frontier_check(points: &[&ParetoPoint]) -> FrontierDiagnostics {
    let mut ok: Vec<&ParetoPoint> = points
        .iter()
        .copied()
        .filter(|p| p.error.is_none())
        .collect();
    ok.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let mut d = FrontierDiagnostics {
        points: points.len(),
        failed_points: points.len() - ok.len(),
        violations: Vec::new(),
    };
    for w in ok.windows(2) {
        let (a, b) = (w[0], w[1]);
        if below(a.fi, b.fi) {
            d.violations.push(Violation {
                metric: Metric::Fi,
                alpha_a: a.alpha,
                alpha_b: b.alpha,
                value_a: a.fi,
                value_b: b.fi,
            });
        }
        if below(b.mi_bits, a.mi_bits) {
            d.violations.push(Violation {
                metric: Metric::Mi,
                alpha_a: a.alpha,
                alpha_b: b.alpha,
                value_a: a.mi_bits,
                value_b: b.mi_bits,
            });
        }
    }
    for p in &ok {
        let own = p.alpha * p.fi + (1.0 - p.alpha) * p.mi_bits;
        for q in &ok {
            let other = p.alpha * q.fi + (1.0 - p.alpha) * q.mi_bits;
            if below(other, own) {
                d.violations.push(Violation {
                    metric: Metric::WeightedSum,
                    alpha_a: p.alpha,
                    alpha_b: q.alpha,
                    value_a: own,
                    value_b: other,
                });
            }
        }
    }
    d
}

/// Named sweeps covering the users, antennas, power and baseline families,
/// plus the single-user EIRP ladder.
pub fn default_scenarios() -> Vec<(String, SweepSpec)> {
    let eirp_ladder: Vec<f64> = [600.0, 700.0, 800.0, 900.0]
        .iter()
        .map(|&mw| crate::units::mw_to_dbm(mw))
        .collect();
    let base = SweepSpec::default();
    vec![
        (
            "users".to_string(),
            SweepSpec {
                param_grid: ParamGrid {
                    k: vec![1, 4, 6, 8],
                    ..ParamGrid::default()
                },
                ..base.clone()
            },
        ),
        (
            "antennas".to_string(),
            SweepSpec {
                param_grid: ParamGrid {
                    n_tx: vec![10, 16, 20],
                    ..ParamGrid::default()
                },
                ..base.clone()
            },
        ),
        (
            "power".to_string(),
            SweepSpec {
                param_grid: ParamGrid {
                    p_tx_dbm: vec![20.0, 25.0, 30.0],
                    ..ParamGrid::default()
                },
                ..base.clone()
            },
        ),
        (
            "baseline".to_string(),
            SweepSpec {
                scenario: ScenarioKind::MultiuserSuboptimal,
                ..base.clone()
            },
        ),
        (
            "eirp".to_string(),
            SweepSpec {
                scenario: ScenarioKind::Singleuser,
                alphas: vec![0.0, 0.5, 1.0],
                param_grid: ParamGrid {
                    eirp_dbm: eirp_ladder,
                    ..ParamGrid::default()
                },
                ..base
            },
        ),
    ]
}
