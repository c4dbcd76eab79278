use web_time::Instant;

use crate::error::SolveError;
use crate::instance::{MixedInstance, NormalizedInstance};
use crate::potentials::PotentialState;

use super::{
    budget_check, certifies_infeasible, finish, log_threshold, prepare, CoreRun, DiagnosticTrace, Prepared,
    Selector, SolveConfig, SolveOutcome, Status,
};

/// One eligible variable per increment, chosen by `config.selector`, with
/// eligibility tested against the exact `ratio_j`. Each iteration costs time
/// linear in the number of nonzeros.
pub fn solve_generic(inst: &MixedInstance, config: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    let started = Instant::now();
    let norm = match prepare(inst, config, started)? {
        Prepared::Trivial(out) => return Ok(out),
        Prepared::Ready(norm) => norm,
    };
    let mut trace = DiagnosticTrace::new(config.trace, config.epsilon);
    let run = run_generic(&norm, config, &mut trace)?;
    Ok(finish(inst, &norm, config, run, trace, started))
}

fn run_generic(
    norm: &NormalizedInstance,
    config: &SolveConfig,
    trace: &mut DiagnosticTrace,
) -> Result<CoreRun, SolveError> {
    let eps = config.epsilon;
    let threshold = log_threshold(eps);
    let n = norm.num_vars();
    let mut state = PotentialState::new(norm, vec![0.0; n]);
    let mut deleted = state.deactivate_satisfied(None);
    trace.start(&state);
    let mut increments = 0u64;
    let mut log_ratio = vec![0.0; n];
    loop {
        if state.active_count() == 0 {
            return Ok(CoreRun { status: Status::Feasible, x: state.into_x(), increments, phases: 0, max_in_phase: 0, deleted });
        }
        for (j, r) in log_ratio.iter_mut().enumerate() {
            *r = state.log_ratio(j);
        }
        let min = log_ratio.iter().copied().fold(f64::INFINITY, f64::min);
        if certifies_infeasible(min) {
            return Ok(CoreRun { status: Status::Infeasible, x: state.into_x(), increments, phases: 0, max_in_phase: 0, deleted });
        }
        let j = select(&state, &log_ratio, threshold, config.selector).ok_or_else(|| {
            SolveError::Internal(format!("no eligible variable although min ln ratio = {min}"))
        })?;
        budget_check(increments, config)?;
        let alpha = state
            .step_size_single(j, eps)
            .ok_or_else(|| SolveError::Internal(format!("variable {j} has no live entry")))?;
        state.increment_single(j, alpha);
        increments += 1;
        deleted += state.deactivate_satisfied(Some(j));
        trace.increment(&state, Some(j), log_ratio[j]);
    }
}

fn select(state: &PotentialState<'_>, log_ratio: &[f64], threshold: f64, selector: Selector) -> Option<usize> {
    let eligible = || log_ratio.iter().enumerate().filter(|(_, &r)| r <= threshold).map(|(j, _)| j);
    match selector {
        Selector::FirstEligible => eligible().next(),
        Selector::MinRatio => eligible().fold(None, |best: Option<usize>, j| match best {
            Some(b) if log_ratio[b] <= log_ratio[j] => Some(b),
            _ => Some(j),
        }),
        Selector::MinDifference => {
            let mut best: Option<(usize, f64)> = None;
            for j in eligible() {
                let d = state.packing_derivative(j) - state.covering_derivative(j);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        }
    }
}
