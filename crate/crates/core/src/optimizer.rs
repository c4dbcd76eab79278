//! `min { lambda : Px <= lambda p, Cx >= c }` by a sequence of feasibility
//! problems: a coarse binary search with `eps' = 1/2`, then refinement with
//! shrinking `eps'`.
//!
//! A probe at `(lambda', eps')` runs the configured solver with tolerance
//! `eps' / PACKING_FACTOR` on the instance with `p` scaled by `lambda'`, so a
//! feasible answer certifies `lambda* <= (1 + eps') lambda'` and an
//! infeasible one certifies `lambda* > lambda'`.

use serde::Serialize;
use web_time::Instant;

use crate::error::{InstanceError, SolveError};
use crate::instance::MixedInstance;
use crate::solvers::{original_ratios, solve, SolveConfig, Status, PACKING_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Bracket,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subproblem {
    pub stage: Stage,
    pub lambda: f64,
    pub epsilon: f64,
    pub status: Status,
    /// `max_i (Px)_i / p_i` of the returned point, feasible probes only.
    pub achieved: Option<f64>,
    pub increments: u64,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeOutcome {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub subproblem_log: Vec<Subproblem>,
    /// Certified `[lower, upper]` enclosure of `lambda*` at exit.
    pub bracket: [f64; 2],
}

impl OptimizeOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }

    pub fn subproblem_log_json(&self) -> String {
        serde_json::to_string_pretty(&self.subproblem_log).expect("log serializes")
    }
}

/// Feasible point together with its objective `max_i (Px)_i / p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub lambda: f64,
    pub x: Vec<f64>,
}

/// Result of the coarse search.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    /// `lambda_0 2^j`, a certified lower bound on `lambda*`.
    pub lambda1: f64,
    /// Certified upper bound on `lambda*`.
    pub upper: f64,
    pub probes: usize,
    /// Point from the last feasible probe, if any probe was feasible.
    pub incumbent: Option<Incumbent>,
    pub log: Vec<Subproblem>,
}

/// Objective of `x`: `max_i (Px)_i / p_i`, with `p_i = 0` rows contributing
/// nothing when `(Px)_i = 0`.
pub fn objective(inst: &MixedInstance, x: &[f64]) -> f64 {
    original_ratios(inst, x).0
}

/// `lambda = sum_i min_j sum_i' (P_i'j / p_i') / (C_ij / c_i)` and the point
/// `x = sum_i z(i)` with `max_i (Px)_i/p_i <= lambda` and `Cx >= c`.
/// Satisfies `lambda* <= lambda <= m^2 lambda*`.
///
/// Columns touching a packing row with `p_i = 0` are unusable. Covering rows
/// with `c_i = 0` contribute nothing.
pub fn initial_bound(inst: &MixedInstance) -> Result<(f64, Vec<f64>), InstanceError> {
    let n = inst.num_vars();
    let p = inst.packing();
    let col_cost: Vec<f64> = (0..n)
        .map(|j| {
            let (rows, vals) = p.col(j);
            rows.iter()
                .zip(vals)
                .map(|(&i, &v)| {
                    let rhs = inst.packing_rhs()[i];
                    if rhs > 0.0 { v / rhs } else { f64::INFINITY }
                })
                .sum()
        })
        .collect();
    let mut lambda = 0.0;
    let mut x = vec![0.0; n];
    for (i, &c) in inst.covering_rhs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let (cols, vals) = inst.covering().row(i);
        let mut best: Option<(usize, f64, f64)> = None;
        for (&j, &v) in cols.iter().zip(vals) {
            let scaled = v / c;
            let cost = col_cost[j] / scaled;
            if cost.is_finite() && best.is_none_or(|(_, b, _)| cost < b) {
                best = Some((j, cost, scaled));
            }
        }
        let (j, cost, scaled) = best.ok_or(InstanceError::TriviallyInfeasible { row: i })?;
        lambda += cost;
        x[j] += 1.0 / scaled;
    }
    Ok((lambda, x))
}

fn probe(
    inst: &MixedInstance,
    lambda: f64,
    eps: f64,
    stage: Stage,
    base: &SolveConfig,
) -> Result<(Subproblem, Option<Incumbent>), SolveError> {
    let started = Instant::now();
    let mut config = base.clone();
    config.epsilon = eps / PACKING_FACTOR;
    let out = solve(&inst.with_packing_scaled(lambda), &config)?;
    let incumbent = out.is_feasible().then(|| Incumbent { lambda: objective(inst, &out.x), x: out.x });
    log::debug!("{stage:?} probe lambda={lambda} eps={eps} -> {:?}", out.status);
    let sub = Subproblem {
        stage,
        lambda,
        epsilon: eps,
        status: out.status,
        achieved: incumbent.as_ref().map(|c| c.lambda),
        increments: out.stats.increments,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((sub, incumbent))
}

fn rows_for_bound(inst: &MixedInstance) -> f64 {
    (inst.num_rows() as f64).max(2.0)
}

/// Binary search for `j` in `[0, ceil(2 log2 m)]` with probes at
/// `lambda_0 2^i` and `eps' = 1/2`, given `1 <= lambda*/lambda_0 <= m^2`.
///
/// An infeasible probe at `i` certifies `lambda* > lambda_0 2^i`; a feasible
/// one certifies `lambda* <= 1.5 lambda_0 2^i`. The returned `lambda1` is the
/// largest certified lower bound of the form `lambda_0 2^i`, and
/// `upper <= 3 lambda1`.
pub fn bracket_lambda(inst: &MixedInstance, lambda0: f64, base: &SolveConfig) -> Result<Bracket, SolveError> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(SolveError::Config(format!("lambda0 must be positive and finite, got {lambda0}")));
    }
    let m = rows_for_bound(inst);
    let top = (2.0 * m.log2()).ceil() as i32;
    let (mut lo, mut hi) = (0i32, top);
    let mut upper = lambda0 * m * m;
    let mut incumbent = None;
    let mut log = Vec::new();
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let lambda = lambda0 * 2f64.powi(mid);
        let (sub, inc) = probe(inst, lambda, 0.5, Stage::Bracket, base)?;
        log.push(sub);
        match inc {
            Some(inc) => {
                hi = mid;
                upper = upper.min(inc.lambda);
                incumbent = Some(inc);
            }
            None => lo = mid,
        }
    }
    Ok(Bracket { lambda1: lambda0 * 2f64.powi(lo), upper, probes: log.len(), incumbent, log })
}

/// Refinement from `lambda*/lambda1 in [1, 1 + delta1]` with `delta1 <= 4`:
/// probe `lambda' = lambda_i (1 + delta_i/4)` with `eps' = delta_i/4`, keep
/// `lambda_i` on success or raise it to `lambda'` on failure, then shrink
/// `delta` by `3/4` until `delta <= epsilon`.
///
/// Returns the point of the last feasible probe, falling back to
/// `incumbent` when no probe succeeds.
pub fn refine_lambda(
    inst: &MixedInstance,
    lambda1: f64,
    delta1: f64,
    epsilon: f64,
    incumbent: Incumbent,
    base: &SolveConfig,
) -> Result<OptimizeOutcome, SolveError> {
    if !(delta1 > 0.0 && delta1 <= 4.0) {
        return Err(SolveError::Config(format!("delta1 must be in (0, 4], got {delta1}")));
    }
    let mut lambda = lambda1;
    let mut delta = delta1;
    let mut best = incumbent;
    let mut log = Vec::new();
    while delta > epsilon {
        let target = lambda * (1.0 + delta / 4.0);
        let (sub, inc) = probe(inst, target, delta / 4.0, Stage::Refine, base)?;
        log.push(sub);
        match inc {
            Some(inc) => best = inc,
            None => lambda = target,
        }
        delta *= 0.75;
    }
    Ok(OptimizeOutcome { lambda: best.lambda, x: best.x, subproblem_log: log, bracket: [lambda, best.lambda] })
}

/// Full reduction: initial bound, coarse search, refinement. The returned
/// `lambda` is the objective of the returned `x` and lies in
/// `[lambda*, (1+epsilon) lambda*]` up to the solver's row tolerance.
pub fn optimize(inst: &MixedInstance, epsilon: f64, base: &SolveConfig) -> Result<OptimizeOutcome, SolveError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SolveError::Config(format!("epsilon must be in (0, 1), got {epsilon}")));
    }
    let (lambda, x) = initial_bound(inst)?;
    if lambda == 0.0 {
        return Ok(OptimizeOutcome { lambda: 0.0, x, subproblem_log: Vec::new(), bracket: [0.0, 0.0] });
    }
    let m = rows_for_bound(inst);
    let start = Incumbent { lambda: objective(inst, &x), x };
    let bracket = bracket_lambda(inst, lambda / (m * m), base)?;
    let incumbent = bracket.incumbent.unwrap_or(start);
    let delta1 = (incumbent.lambda / bracket.lambda1 - 1.0).clamp(f64::MIN_POSITIVE, 4.0);
    let mut out = refine_lambda(inst, bracket.lambda1, delta1, epsilon, incumbent, base)?;
    let mut log = bracket.log;
    log.append(&mut out.subproblem_log);
    out.subproblem_log = log;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Algorithm;

    fn cfg() -> SolveConfig {
        SolveConfig::new(0.1, Algorithm::Phased)
    }

    fn one_var(a: f64) -> MixedInstance {
        MixedInstance::from_dense(&[vec![a]], &[1.0], &[vec![1.0]], &[1.0]).unwrap()
    }

    #[test]
    fn initial_bound_single_entry() {
        let (l, x) = initial_bound(&one_var(1.0)).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn duplicated_covering_row_doubles_bound() {
        let inst = MixedInstance::from_dense(&[vec![1.0]], &[1.0], &[vec![1.0], vec![1.0]], &[1.0, 1.0]).unwrap();
        let (l, x) = initial_bound(&inst).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(x, vec![2.0]);
        assert!(l <= 9.0 * 1.0);
    }

    #[test]
    fn initial_point_is_feasible_for_bound() {
        let inst = MixedInstance::from_dense(
            &[vec![1.0, 2.0, 0.5], vec![0.0, 1.0, 1.0]],
            &[4.0, 3.0],
            &[vec![1.0, 1.0, 0.0], vec![0.5, 0.0, 2.0]],
            &[2.0, 1.5],
        )
        .unwrap();
        let (l, x) = initial_bound(&inst).unwrap();
        let px = inst.packing().mul_vec(&x);
        let sum: f64 = px.iter().zip(inst.packing_rhs()).map(|(a, b)| a / b).sum();
        assert!(sum <= l * (1.0 + 1e-12));
        let cx = inst.covering().mul_vec(&x);
        assert!(cx.iter().zip(inst.covering_rhs()).all(|(a, b)| *a >= b * (1.0 - 1e-12)));
    }

    #[test]
    fn bracket_at_lower_end() {
        // lambda* = 1 = lambda0: every probe is feasible.
        let b = bracket_lambda(&one_var(1.0), 1.0, &cfg()).unwrap();
        assert_eq!(b.lambda1, 1.0);
    }

    #[test]
    fn bracket_three_times_lambda0() {
        let b = bracket_lambda(&one_var(3.0), 1.0, &cfg()).unwrap();
        assert_eq!(b.lambda1, 2.0);
        assert!(b.upper >= 3.0 * (1.0 - 1e-9) && b.upper <= 3.0 * b.lambda1);
    }

    #[test]
    fn refine_with_unit_epsilon_takes_no_steps() {
        let inc = Incumbent { lambda: 1.5, x: vec![1.5] };
        let out = refine_lambda(&one_var(1.0), 1.0, 1.0, 1.0, inc.clone(), &cfg()).unwrap();
        assert!(out.subproblem_log.is_empty());
        assert_eq!(out.x, inc.x);
    }

    #[test]
    fn refine_step_count() {
        let eps = 0.1;
        let inc = Incumbent { lambda: 2.0, x: vec![2.0] };
        let out = refine_lambda(&one_var(1.0), 1.0, 1.0, eps, inc, &cfg()).unwrap();
        let expected = ((1.0 / eps).ln() / (4.0f64 / 3.0).ln()).ceil() as usize;
        assert_eq!(out.subproblem_log.len(), expected);
    }

    #[test]
    fn optimize_one_variable() {
        let out = optimize(&one_var(2.0), 0.1, &cfg()).unwrap();
        assert!(out.lambda >= 2.0 * (1.0 - 1e-9) && out.lambda <= 2.0 * 1.1, "{}", out.lambda);
        assert!(out.bracket[0] <= 2.0 * (1.0 + 1e-12) && out.bracket[1] >= out.bracket[0]);
        let json = out.subproblem_log_json();
        assert!(json.contains("\"stage\""));
    }

    #[test]
    fn zero_bound_short_circuits() {
        let inst = MixedInstance::from_dense(&[vec![1.0, 0.0]], &[1.0], &[vec![0.0, 1.0]], &[1.0]).unwrap();
        let out = optimize(&inst, 0.1, &cfg()).unwrap();
        assert_eq!(out.lambda, 0.0);
        assert_eq!(out.x, vec![0.0, 1.0]);
    }
}
