use serde::{Deserialize, Serialize};

/// Iteration diagnostics shared by both solvers.
///
/// `objective_trace` holds one entry per accepted iteration and is
/// nondecreasing up to floating-point slack for both ascent methods.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub outer_iterations: usize,
    /// Dual-multiplier bisections (multi-user) or step backtracks (single-user).
    pub beta_bisections: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub objective_trace: Vec<f64>,
    /// Normalized projected-gradient stationarity residual, single-user only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_residual: Option<f64>,
}

impl SolverReport {
    /// Largest decrease between consecutive trace entries (0 when monotone).
    pub fn worst_decrease(&self) -> f64 {
        self.objective_trace
            .windows(2)
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max)
    }
}
