use rayon::prelude::*;
use web_time::Instant;

use crate::error::SolveError;
use crate::instance::{MixedInstance, NormalizedInstance, SparseNonnegMatrix};
use crate::potentials::{log_quotient, PotentialState};

use super::{
    budget_check, certifies_infeasible, finish, log_threshold, prepare, CoreRun, DiagnosticTrace, Prepared,
    SolveConfig, SolveOutcome, Status,
};

/// Starting point `x_j = min_i 1/(n P_ij)` over the packing column, which
/// keeps every `(Px)_i <= 1`. A column without packing entries starts at
/// `min_i 1/(n C_ij)` over its covering column instead.
pub fn parallel_start(norm: &NormalizedInstance) -> Vec<f64> {
    let n = norm.num_vars() as f64;
    (0..norm.num_vars())
        .map(|j| {
            let p = norm.packing().col_max_where(j, |_| true);
            let m = if p > 0.0 { p } else { norm.covering().col_max_where(j, |_| true) };
            1.0 / (n * m)
        })
        .collect()
}

/// Parallel solver: each increment raises every eligible variable in
/// proportion to its current value, scaled so the largest row increase is
/// exactly `eps`. Work per increment is data-parallel over columns and rows
/// on `config.lanes` threads; reductions run in a fixed order so the result
/// does not depend on the thread count.
pub fn solve_parallel(inst: &MixedInstance, config: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    let started = Instant::now();
    let norm = match prepare(inst, config, started)? {
        Prepared::Trivial(out) => return Ok(out),
        Prepared::Ready(norm) => norm,
    };
    let mut trace = DiagnosticTrace::new(config.trace, config.epsilon);
    // A single lane runs on the calling thread without a pool, which also
    // covers targets that cannot spawn threads.
    let run = if config.lanes == 1 {
        run_parallel(&norm, config, &mut trace)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.lanes)
            .build()
            .map_err(|e| SolveError::Internal(format!("thread pool: {e}")))?;
        pool.install(|| run_parallel(&norm, config, &mut trace))?
    };
    Ok(finish(inst, &norm, config, run, trace, started))
}

/// `(0..len).map(f)` in index order, on the current pool when `parallel`.
fn map_range(parallel: bool, len: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    if parallel {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

fn row_products(parallel: bool, m: &SparseNonnegMatrix, v: &[f64]) -> Vec<f64> {
    map_range(parallel, m.rows(), |i| {
        let (idx, val) = m.row(i);
        idx.iter().zip(val).map(|(&j, &a)| a * v[j]).sum()
    })
}

fn run_parallel(
    norm: &NormalizedInstance,
    config: &SolveConfig,
    trace: &mut DiagnosticTrace,
) -> Result<CoreRun, SolveError> {
    let eps = config.epsilon;
    let threshold = log_threshold(eps);
    let rhs = norm.rhs();
    let n = norm.num_vars();
    let par = config.lanes > 1;
    let mut state = PotentialState::new(norm, parallel_start(norm));
    let mut deleted = if config.delete_covering { state.deactivate_satisfied(None) } else { 0 };
    trace.start(&state);
    let finished = |s: &PotentialState<'_>| {
        if config.delete_covering {
            s.active_count() == 0
        } else {
            s.min_active_cx() >= rhs
        }
    };
    let mut increments = 0u64;
    let mut phases = 0u64;
    let mut max_in_phase = 0u64;
    let mut alpha = vec![0.0; n];
    loop {
        if finished(&state) {
            return Ok(CoreRun { status: Status::Feasible, x: state.into_x(), increments, phases, max_in_phase, deleted });
        }
        let log_g = state.log_global();
        phases += 1;
        trace.phase_start(log_g);
        let log_local: Vec<f64> = map_range(par, n, |j| state.log_local(j));
        let min = log_local.iter().map(|&l| log_quotient(l, log_g)).fold(f64::INFINITY, f64::min);
        if certifies_infeasible(min) {
            return Ok(CoreRun { status: Status::Infeasible, x: state.into_x(), increments, phases, max_in_phase, deleted });
        }
        let mut in_phase = 0u64;
        let mut log_local = Some(log_local);
        loop {
            if finished(&state) {
                max_in_phase = max_in_phase.max(in_phase);
                return Ok(CoreRun { status: Status::Feasible, x: state.into_x(), increments, phases, max_in_phase, deleted });
            }
            let ll = match log_local.take() {
                Some(v) => v,
                None => map_range(par, n, |j| state.log_local(j)),
            };
            let mut worst = f64::NEG_INFINITY;
            let mut any = false;
            for (j, a) in alpha.iter_mut().enumerate() {
                let e = log_quotient(ll[j], log_g);
                if e <= threshold {
                    *a = state.x()[j];
                    worst = worst.max(e);
                    any = true;
                } else {
                    *a = 0.0;
                }
            }
            if !any {
                break;
            }
            budget_check(increments, config)?;
            let mut p_alpha = row_products(par, norm.packing(), &alpha);
            let mut c_alpha = row_products(par, norm.covering(), &alpha);
            let peak = p_alpha
                .iter()
                .copied()
                .chain(c_alpha.iter().zip(state.active()).filter(|(_, &a)| a).map(|(&v, _)| v))
                .fold(0.0, f64::max);
            if !(peak > 0.0) {
                return Err(SolveError::Internal("eligible variables produce no row increase".into()));
            }
            let scale = eps / peak;
            alpha.iter_mut().for_each(|a| *a *= scale);
            p_alpha.iter_mut().for_each(|a| *a *= scale);
            c_alpha.iter_mut().for_each(|a| *a *= scale);
            state.increment_dense(&alpha, &p_alpha, &c_alpha);
            increments += 1;
            in_phase += 1;
            if config.delete_covering {
                deleted += state.deactivate_satisfied(None);
            }
            trace.increment(&state, None, worst);
        }
        max_in_phase = max_in_phase.max(in_phase);
    }
}
