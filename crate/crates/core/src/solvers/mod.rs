//! Feasibility solvers for `x >= 0, Px <= (1+O(eps))p, Cx >= c`.
//!
//! Three variants share the increment machinery of [`PotentialState`]:
//!
//! - [`solve_generic`]: one variable per increment, eligibility tested
//!   against the exact `ratio_j`, picked by a [`Selector`].
//! - [`solve_phased`]: round-robin over variables with the global term
//!   frozen per phase, `O(d)` work per increment.
//! - [`solve_parallel`]: every eligible variable grows in proportion to its
//!   current value in each increment.
//!
//! All variants start from a point with known `max Px`, scale the instance
//! to a uniform right-hand side `N`, and either return a point with
//! `min Cx >= N` and `max Px <= (1+O(eps))N` or an infeasibility verdict
//! certified by `min_j ratio_j > 1`.

mod generic;
mod parallel;
mod phased;
pub mod trace;
mod verify;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::{InstanceError, SolveError};
use crate::instance::{normalize, retained_rows, MixedInstance, NormalizedInstance};
use crate::potentials::PotentialState;

pub use generic::solve_generic;
pub use parallel::{parallel_start, solve_parallel};
pub use phased::{solve_phased, solve_phased_grouped};
pub use trace::{DiagnosticTrace, PhaseRecord, TraceMode, TraceRecord};
pub use verify::{verify_outcome, verify_point, VerifyReport};

/// Relative tolerance on the infeasibility test `min_j ratio_j > 1`. Exact
/// arithmetic guarantees `min_j ratio_j <= 1` on feasible instances; the
/// slack absorbs rounding on instances that are feasible with zero margin.
pub const INFEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Factor in the guarantee `max Px <= (1 + PACKING_FACTOR * eps) p` for
/// `eps <= 0.2`.
pub const PACKING_FACTOR: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Generic,
    #[default]
    Phased,
    Parallel,
}

/// How the generic solver picks among eligible variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// Smallest `ratio_j`, lowest index on ties.
    #[default]
    MinRatio,
    /// Smallest `partial_j(P) - partial_j(C)`.
    MinDifference,
    /// Lowest eligible index.
    FirstEligible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub epsilon: f64,
    pub algorithm: Algorithm,
    /// Only consulted by the generic solver.
    pub selector: Selector,
    pub max_increments: u64,
    pub trace: TraceMode,
    /// Worker threads for the parallel solver; results do not depend on it.
    pub lanes: usize,
    /// Deactivate covering rows once satisfied. Only the parallel solver
    /// honours `false`.
    pub delete_covering: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            algorithm: Algorithm::default(),
            selector: Selector::default(),
            max_increments: 1_000_000_000,
            trace: TraceMode::Off,
            lanes: 1,
            delete_covering: true,
        }
    }
}

impl SolveConfig {
    pub fn new(epsilon: f64, algorithm: Algorithm) -> Self {
        Self { epsilon, algorithm, ..Self::default() }
    }

    pub fn with_trace(mut self, trace: TraceMode) -> Self {
        self.trace = trace;
        self
    }

    pub fn with_selector(mut self, selector: Selector) -> Self {
        self.selector = selector;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SolveError::Config(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if self.max_increments == 0 {
            return Err(SolveError::Config("max_increments must be at least 1".into()));
        }
        if self.lanes == 0 {
            return Err(SolveError::Config("lanes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform right-hand side `N = (max Px0 + 2 ln m) / eps`. `m` is clamped to
/// at least 2 so that `N > 0`.
pub fn choose_rhs(m: f64, epsilon: f64, max_px0: f64) -> f64 {
    (max_px0 + 2.0 * m.max(2.0).ln()) / epsilon
}

/// `N` for a solver variant: generic and phased start at `x = 0`; the
/// parallel start guarantees `max Px0 <= 1`.
pub fn choose_rhs_for(algorithm: Algorithm, m: usize, epsilon: f64) -> f64 {
    let max_px0 = if algorithm == Algorithm::Parallel { 1.0 } else { 0.0 };
    choose_rhs(m as f64, epsilon, max_px0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    /// Normalized right-hand side `N`.
    pub rhs: f64,
    /// Retained constraint count.
    pub rows: usize,
    pub column_degree: usize,
    pub increments: u64,
    /// `m (N + eps) / eps`.
    pub increment_bound: f64,
    pub phases: u64,
    pub max_increments_in_phase: u64,
    pub deleted_cover_rows: usize,
    pub forced_zero_vars: usize,
    pub unused_vars: usize,
    /// `max_i (Px)_i / p_i` in original units.
    pub max_packing_ratio: f64,
    /// `min_i (Cx)_i / c_i` in original units.
    pub min_covering_ratio: f64,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    /// Point in original coordinates. For an infeasible verdict this is the
    /// iterate at which infeasibility was detected.
    pub x: Vec<f64>,
    pub stats: SolveStats,
    pub trace: Option<DiagnosticTrace>,
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }

    /// Solution JSON: `{"status", "x", "stats"}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SolutionFile {
            status: self.status,
            x: self.x.clone(),
            stats: Some(self.stats.clone()),
        })
        .expect("solution serializes")
    }
}

/// On-disk solution record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub status: Status,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<SolveStats>,
}

/// Dispatches on `config.algorithm`.
pub fn solve(inst: &MixedInstance, config: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    match config.algorithm {
        Algorithm::Generic => solve_generic(inst, config),
        Algorithm::Phased => solve_phased(inst, config),
        Algorithm::Parallel => solve_parallel(inst, config),
    }
}

/// Result of the normalized core loop, before mapping back to the original
/// instance.
pub(crate) struct CoreRun {
    pub status: Status,
    pub x: Vec<f64>,
    pub increments: u64,
    pub phases: u64,
    pub max_in_phase: u64,
    pub deleted: usize,
}

pub(crate) enum Prepared {
    /// Normalization proved infeasibility or produced an instance with no
    /// covering rows; the answer is already known.
    Trivial(SolveOutcome),
    Ready(NormalizedInstance),
}

pub(crate) fn prepare(inst: &MixedInstance, config: &SolveConfig, started: Instant) -> Result<Prepared, SolveError> {
    config.validate()?;
    let m = match retained_rows(inst) {
        Ok(m) => m,
        Err(InstanceError::TriviallyInfeasible { .. }) => {
            let x = vec![0.0; inst.num_vars()];
            return Ok(Prepared::Trivial(finish_trivial(inst, config, Status::Infeasible, x, started)));
        }
        Err(e) => return Err(e.into()),
    };
    let rhs = choose_rhs_for(config.algorithm, m, config.epsilon);
    let norm = normalize(inst, rhs)?;
    if norm.covering().rows() == 0 {
        let x = vec![0.0; inst.num_vars()];
        return Ok(Prepared::Trivial(finish_trivial(inst, config, Status::Feasible, x, started)));
    }
    Ok(Prepared::Ready(norm))
}

fn finish_trivial(inst: &MixedInstance, config: &SolveConfig, status: Status, x: Vec<f64>, started: Instant) -> SolveOutcome {
    let (max_p, min_c) = original_ratios(inst, &x);
    SolveOutcome {
        status,
        x,
        stats: SolveStats {
            algorithm: config.algorithm,
            epsilon: config.epsilon,
            rhs: 0.0,
            rows: 0,
            column_degree: 0,
            increments: 0,
            increment_bound: 0.0,
            phases: 0,
            max_increments_in_phase: 0,
            deleted_cover_rows: 0,
            forced_zero_vars: 0,
            unused_vars: 0,
            max_packing_ratio: max_p,
            min_covering_ratio: min_c,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
        trace: config.trace_enabled().then(|| DiagnosticTrace::new(config.trace, config.epsilon)),
    }
}

impl SolveConfig {
    fn trace_enabled(&self) -> bool {
        self.trace != TraceMode::Off
    }
}

pub(crate) fn finish(
    inst: &MixedInstance,
    norm: &NormalizedInstance,
    config: &SolveConfig,
    run: CoreRun,
    trace: DiagnosticTrace,
    started: Instant,
) -> SolveOutcome {
    let x = norm.expand(&run.x);
    let (max_p, min_c) = original_ratios(inst, &x);
    let m = norm.num_rows() as f64;
    SolveOutcome {
        status: run.status,
        x,
        stats: SolveStats {
            algorithm: config.algorithm,
            epsilon: config.epsilon,
            rhs: norm.rhs(),
            rows: norm.num_rows(),
            column_degree: norm.column_degree(),
            increments: run.increments,
            increment_bound: m * (norm.rhs() + config.epsilon) / config.epsilon,
            phases: run.phases,
            max_increments_in_phase: run.max_in_phase,
            deleted_cover_rows: run.deleted,
            forced_zero_vars: norm.forced_zero_vars().len(),
            unused_vars: norm.unused_vars().len(),
            max_packing_ratio: max_p,
            min_covering_ratio: min_c,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
        trace: trace.is_enabled().then_some(trace),
    }
}

/// `(max_i (Px)_i/p_i, min_i (Cx)_i/c_i)` over rows with positive
/// right-hand side, compensated sums.
pub fn original_ratios(inst: &MixedInstance, x: &[f64]) -> (f64, f64) {
    let max_p = (0..inst.packing().rows())
        .filter(|&i| inst.packing_rhs()[i] > 0.0)
        .map(|i| inst.packing().row_dot_compensated(i, x) / inst.packing_rhs()[i])
        .fold(0.0, f64::max);
    let min_c = (0..inst.covering().rows())
        .filter(|&i| inst.covering_rhs()[i] > 0.0)
        .map(|i| inst.covering().row_dot_compensated(i, x) / inst.covering_rhs()[i])
        .fold(f64::INFINITY, f64::min);
    (max_p, min_c)
}

/// Log of the eligibility threshold `1 + eps`.
pub(crate) fn log_threshold(epsilon: f64) -> f64 {
    epsilon.ln_1p()
}

/// Whether `min_j ln(local_j/g) > ln(1)` beyond the rounding tolerance.
pub(crate) fn certifies_infeasible(min_log_ratio: f64) -> bool {
    min_log_ratio > INFEASIBILITY_TOLERANCE
}

pub(crate) fn budget_check(increments: u64, config: &SolveConfig) -> Result<(), SolveError> {
    if increments >= config.max_increments {
        Err(SolveError::BudgetExhausted { increments })
    } else {
        Ok(())
    }
}

/// Minimum of `ln local_j - log_g` over all variables, with the index that
/// attains it (lowest on ties).
pub(crate) fn min_log_local(state: &PotentialState<'_>, log_g: f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for j in 0..state.x().len() {
        let v = crate::potentials::log_quotient(state.log_local(j), log_g);
        if v < best.0 {
            best = (v, j);
        }
    }
    best
}
