use web_time::Instant;

use crate::error::SolveError;
use crate::instance::{MixedInstance, NormalizedInstance};
use crate::potentials::{log_quotient, PotentialState};

use super::{
    budget_check, certifies_infeasible, finish, log_threshold, min_log_local, prepare, CoreRun, DiagnosticTrace,
    Prepared, SolveConfig, SolveOutcome, Status,
};

/// Phased solver with the round-robin schedule: each phase freezes
/// `g = global(x)` and makes one pass over the variables, incrementing each
/// one for as long as `local_j / g <= 1 + eps`.
pub fn solve_phased(inst: &MixedInstance, config: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    let groups: Vec<Vec<usize>> = (0..inst.num_vars()).map(|j| vec![j]).collect();
    solve_phased_grouped(inst, &groups, config)
}

/// Phased solver whose pass visits `groups` in order; within a group it
/// repeatedly increments the eligible member with the smallest `local_j`
/// (lowest index on ties) until no member is eligible.
///
/// Groups hold original variable indices. Variables missing from every
/// group are never incremented.
pub fn solve_phased_grouped(
    inst: &MixedInstance,
    groups: &[Vec<usize>],
    config: &SolveConfig,
) -> Result<SolveOutcome, SolveError> {
    let started = Instant::now();
    let norm = match prepare(inst, config, started)? {
        Prepared::Trivial(out) => return Ok(out),
        Prepared::Ready(norm) => norm,
    };
    let mut retained = vec![usize::MAX; inst.num_vars()];
    for (k, &j) in norm.var_map().iter().enumerate() {
        retained[j] = k;
    }
    let groups: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| g.iter().filter_map(|&j| retained.get(j).copied().filter(|&k| k != usize::MAX)).collect())
        .filter(|g: &Vec<usize>| !g.is_empty())
        .collect();
    let mut trace = DiagnosticTrace::new(config.trace, config.epsilon);
    let run = run_phased(&norm, &groups, config, &mut trace)?;
    Ok(finish(inst, &norm, config, run, trace, started))
}

fn run_phased(
    norm: &NormalizedInstance,
    groups: &[Vec<usize>],
    config: &SolveConfig,
    trace: &mut DiagnosticTrace,
) -> Result<CoreRun, SolveError> {
    let eps = config.epsilon;
    let threshold = log_threshold(eps);
    let mut state = PotentialState::new(norm, vec![0.0; norm.num_vars()]);
    let mut deleted = state.deactivate_satisfied(None);
    trace.start(&state);
    let mut increments = 0u64;
    let mut phases = 0u64;
    let mut phase_start_at = 0u64;
    let mut max_in_phase = 0u64;
    let done = |state: PotentialState<'_>, status, increments: u64, phases, deleted, start: u64, max: u64| {
        let max_in_phase = max.max(increments - start);
        Ok(CoreRun { status, x: state.into_x(), increments, phases, max_in_phase, deleted })
    };
    let mut min_local = min_log_local(&state, 0.0).0;
    loop {
        if state.active_count() == 0 {
            return done(state, Status::Feasible, increments, phases, deleted, phase_start_at, max_in_phase);
        }
        let log_g = state.log_global();
        max_in_phase = max_in_phase.max(increments - phase_start_at);
        phase_start_at = increments;
        phases += 1;
        trace.phase_start(log_g);
        if certifies_infeasible(log_quotient(min_local, log_g)) {
            return done(state, Status::Infeasible, increments, phases, deleted, phase_start_at, max_in_phase);
        }
        loop {
            for group in groups {
                loop {
                    if state.active_count() == 0 {
                        return done(state, Status::Feasible, increments, phases, deleted, phase_start_at, max_in_phase);
                    }
                    let mut pick: Option<(usize, f64)> = None;
                    for &j in group {
                        let e = log_quotient(state.log_local(j), log_g);
                        if e <= threshold && pick.is_none_or(|(_, b)| e < b) {
                            pick = Some((j, e));
                        }
                    }
                    let Some((j, e)) = pick else { break };
                    budget_check(increments, config)?;
                    let alpha = state
                        .step_size_single(j, eps)
                        .ok_or_else(|| SolveError::Internal(format!("variable {j} has no live entry")))?;
                    state.increment_single(j, alpha);
                    increments += 1;
                    deleted += state.deactivate_satisfied(Some(j));
                    trace.increment(&state, Some(j), e);
                }
            }
            if state.active_count() == 0 {
                return done(state, Status::Feasible, increments, phases, deleted, phase_start_at, max_in_phase);
            }
            // local_j only grows within a phase, so one pass normally
            // exhausts every variable; rounding can leave one borderline.
            min_local = min_log_local(&state, 0.0).0;
            if log_quotient(min_local, log_g) > threshold {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{Algorithm, TraceMode, PACKING_FACTOR};

    fn cfg(eps: f64) -> SolveConfig {
        SolveConfig::new(eps, Algorithm::Phased).with_trace(TraceMode::Full)
    }

    #[test]
    fn one_variable_instances() {
        let feas = MixedInstance::from_dense(&[vec![1.0]], &[1.0], &[vec![1.0]], &[1.0]).unwrap();
        let out = solve_phased(&feas, &cfg(0.1)).unwrap();
        assert!(out.is_feasible());
        assert!(out.x[0] >= 1.0 - 1e-9 && out.x[0] <= 1.0 + PACKING_FACTOR * 0.1);
        let infeas = MixedInstance::from_dense(&[vec![2.0]], &[1.0], &[vec![1.0]], &[1.0]).unwrap();
        assert_eq!(solve_phased(&infeas, &cfg(0.1)).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn phases_grow_global_term() {
        let inst = MixedInstance::from_dense(
            &[vec![1.0, 2.0, 0.5], vec![0.0, 1.0, 1.0]],
            &[4.0, 3.0],
            &[vec![1.0, 1.0, 0.0], vec![0.5, 0.0, 2.0]],
            &[2.0, 1.5],
        )
        .unwrap();
        let out = solve_phased(&inst, &cfg(0.05)).unwrap();
        assert!(out.is_feasible());
        let t = out.trace.as_ref().unwrap();
        assert!(t.phase_growth_respected());
        assert!(out.stats.phases as f64 <= t.phase_count_bound() + 1e-9);
        assert!(t.phi_non_increasing(1e-9));
        assert!(t.psi_grows(1e-9));
        assert_eq!(t.phases().len() as u64, out.stats.phases);
    }

    #[test]
    fn forced_zero_variable_stays_zero() {
        let inst = MixedInstance::from_dense(
            &[vec![1.0, 1.0], vec![1.0, 0.0]],
            &[2.0, 0.0],
            &[vec![1.0, 1.0]],
            &[1.0],
        )
        .unwrap();
        let out = solve_phased(&inst, &cfg(0.1)).unwrap();
        assert!(out.is_feasible());
        assert_eq!(out.x[0], 0.0);
        assert_eq!(out.stats.forced_zero_vars, 1);
    }
}
