use mixpack::instance::{generate_random_feasible, MixedInstance};
use mixpack::optimizer::optimize;
use mixpack::solvers::{solve, Algorithm, SolveConfig, TraceMode};
use mixpack::tomography::{build_tomo_instance, solve_nonneg_system_with, NonnegOptions, Phantom};
use serde_json::{json, Value};

/// Points kept per plotted series.
const MAX_POINTS: usize = 400;

const MAX_GRID: usize = 48;
const MAX_VARS: usize = 400;

fn stride(len: usize) -> usize {
    len.div_ceil(MAX_POINTS).max(1)
}

/// Keeps every `stride`-th element plus the last one.
fn thin<T: Copy>(v: &[T]) -> Vec<T> {
    let s = stride(v.len());
    let mut out: Vec<T> = v.iter().step_by(s).copied().collect();
    if let Some(&last) = v.last() {
        if !(v.len() - 1).is_multiple_of(s) {
            out.push(last);
        }
    }
    out
}

fn parse_angles(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("bad angle {s:?}")))
        .collect()
}

fn random_instance(vars: usize, rows: usize, density: f64, seed: u32) -> Result<MixedInstance, String> {
    if !(1..=MAX_VARS).contains(&vars) || !(2..=2 * MAX_VARS).contains(&rows) {
        return Err(format!("need 1..={MAX_VARS} variables and 2..={} rows", 2 * MAX_VARS));
    }
    let planted = generate_random_feasible(vars, rows / 2, rows - rows / 2, density, seed as u64)
        .map_err(|e| e.to_string())?;
    Ok(planted.instance)
}

pub fn reconstruct(size: usize, random: bool, seed: u32, angles: &str, epsilon: f64) -> Result<String, String> {
    if size == 0 || size > MAX_GRID {
        return Err(format!("grid size must be in 1..={MAX_GRID}"));
    }
    let phantom = if random { Phantom::random(size, seed as u64) } else { Phantom::discs(size) };
    let tomo = build_tomo_instance(&phantom, &parse_angles(angles)?).map_err(|e| e.to_string())?;
    let opts = NonnegOptions { epsilon, max_increments: 5_000_000, history: true };
    let out = solve_nonneg_system_with(&tomo.a, &opts).map_err(|e| e.to_string())?;
    let grid = tomo.to_grid(&out.x);
    let max_error = tomo.cells.iter().map(|&c| (grid[c] - phantom.density()[c]).abs()).fold(0.0, f64::max);
    let h = thin(&out.history);
    Ok(json!({
        "size": size,
        "phantom": phantom.density(),
        "grid": grid,
        "feasible": out.feasible,
        "rows": tomo.a.rows(),
        "increments": out.increments,
        "phases": out.phases,
        "max_abs_error": max_error,
        "history": {
            "increment": h.iter().map(|p| p.increment).collect::<Vec<_>>(),
            "min_row": h.iter().map(|p| p.min_row).collect::<Vec<_>>(),
            "max_row": h.iter().map(|p| p.max_row).collect::<Vec<_>>(),
        },
    })
    .to_string())
}

pub fn potential_curves(vars: usize, rows: usize, density: f64, seed: u32, epsilon: f64) -> Result<String, String> {
    let inst = random_instance(vars, rows, density, seed)?;
    let mut curves: Vec<Value> = Vec::new();
    for alg in [Algorithm::Generic, Algorithm::Phased, Algorithm::Parallel] {
        let config = SolveConfig::new(epsilon, alg).with_trace(TraceMode::Full);
        let out = solve(&inst, &config).map_err(|e| e.to_string())?;
        let trace = out.trace.as_ref().ok_or("trace missing")?;
        let r = thin(trace.records());
        curves.push(json!({
            "algorithm": alg,
            "status": out.status,
            "increments": out.stats.increments,
            "phases": out.stats.phases,
            "rhs": out.stats.rhs,
            "k": r.iter().map(|t| t.k).collect::<Vec<_>>(),
            "phi": r.iter().map(|t| t.phi).collect::<Vec<_>>(),
            "lmax_px": r.iter().map(|t| t.lmax_px).collect::<Vec<_>>(),
            "lmin_cx": r.iter().map(|t| t.lmin_cx).collect::<Vec<_>>(),
        }));
    }
    Ok(json!({ "curves": curves }).to_string())
}

pub fn optimize_curve(vars: usize, rows: usize, density: f64, seed: u32, epsilon: f64) -> Result<String, String> {
    let inst = random_instance(vars, rows, density, seed)?;
    let base = SolveConfig::new(epsilon, Algorithm::Phased);
    let out = optimize(&inst, epsilon, &base).map_err(|e| e.to_string())?;
    Ok(json!({
        "lambda": out.lambda,
        "bracket": out.bracket,
        "probes": out.subproblem_log,
    })
    .to_string())
}
