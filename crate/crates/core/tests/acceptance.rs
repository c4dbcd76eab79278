//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use mixpack::instance::{generate_random_feasible, generate_random_tiny, MixedInstance, SparseNonnegMatrix};
use mixpack::mcf::{check_flow, generate_planted_network, path_formulation, solve_mcf, FlowError};
use mixpack::optimizer::{initial_bound, optimize};
use mixpack::oracle::{brute_lambda_star, exact_feasible_tiny, finite_difference_gradient};
use mixpack::potentials::{column_derivative, gradient_weights, lmax, lmin, Sign};
use mixpack::solvers::{
    solve, solve_parallel, solve_phased_grouped, verify_outcome, Algorithm, SolveConfig, SolveOutcome, Status,
    TraceMode, PACKING_FACTOR,
};
use mixpack::tomography::{build_tomo_instance, solve_nonneg_system, Phantom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARIANTS: [Algorithm; 3] = [Algorithm::Generic, Algorithm::Phased, Algorithm::Parallel];
const PHI_SLACK: f64 = 1e-9;
const PSI_SLACK: f64 = 1e-9;
const COVER_SLACK: f64 = 1e-9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn config(eps: f64, alg: Algorithm) -> SolveConfig {
    SolveConfig::new(eps, alg).with_trace(TraceMode::Summary)
}

/// Checks shared by the planted suite and the large run.
#[derive(Default)]
struct RunChecks {
    runs: usize,
    not_feasible: usize,
    cover_fail: usize,
    pack_fail: usize,
    worst_pack_margin: f64,
    bound_fail: usize,
    max_bound_use: f64,
    phi_fail: usize,
    psi_fail: usize,
    worst_phi_increase: f64,
    worst_psi_gain_deficit: f64,
    growth_fail: usize,
    phase_count_fail: usize,
    phased_runs: usize,
    non_finite: usize,
}

impl RunChecks {
    fn record(&mut self, out: &SolveOutcome, eps: f64) {
        self.runs += 1;
        let s = &out.stats;
        if out.x.iter().any(|v| !v.is_finite()) || !s.max_packing_ratio.is_finite() {
            self.non_finite += 1;
        }
        if out.status != Status::Feasible {
            self.not_feasible += 1;
        }
        if s.min_covering_ratio < 1.0 - COVER_SLACK {
            self.cover_fail += 1;
        }
        let limit = 1.0 + PACKING_FACTOR * eps;
        if s.max_packing_ratio > limit {
            self.pack_fail += 1;
        }
        self.worst_pack_margin = self.worst_pack_margin.max((s.max_packing_ratio - 1.0) / eps);
        if s.increments as f64 > s.increment_bound {
            self.bound_fail += 1;
        }
        self.max_bound_use = self.max_bound_use.max(s.increments as f64 / s.increment_bound);
        let t = out.trace.as_ref().expect("trace requested");
        if !t.phi_non_increasing(PHI_SLACK) {
            self.phi_fail += 1;
        }
        if !t.psi_grows(PSI_SLACK) {
            self.psi_fail += 1;
        }
        self.worst_phi_increase = self.worst_phi_increase.max(t.max_phi_increase());
        if t.increments() > 0 {
            self.worst_psi_gain_deficit = self.worst_psi_gain_deficit.max(eps - t.min_psi_gain());
        }
        if s.algorithm != Algorithm::Generic {
            self.phased_runs += 1;
            if !t.phase_growth_respected() {
                self.growth_fail += 1;
            }
            if s.phases as f64 > t.phase_count_bound() + 1e-9 {
                self.phase_count_fail += 1;
            }
        }
    }

    fn feasibility(&self) -> Verdict {
        verdict(
            self.not_feasible + self.cover_fail + self.pack_fail + self.non_finite == 0,
            format!(
                "{} runs: {} not feasible, {} covering < 1-1e-9, {} packing > 1+4.5eps, {} non-finite; worst (max Px/p - 1)/eps = {:.3}",
                self.runs, self.not_feasible, self.cover_fail, self.pack_fail, self.non_finite, self.worst_pack_margin
            ),
        )
    }

    fn increments(&self) -> Verdict {
        verdict(
            self.bound_fail == 0,
            format!("{} runs, {} over m(N+eps)/eps; max increments/bound = {:.4}", self.runs, self.bound_fail, self.max_bound_use),
        )
    }

    fn potentials(&self) -> Verdict {
        verdict(
            self.phi_fail + self.psi_fail == 0,
            format!(
                "{} runs: {} phi violations (max step {:.3e}), {} psi violations (max deficit vs eps {:.3e})",
                self.runs, self.phi_fail, self.worst_phi_increase, self.psi_fail, self.worst_psi_gain_deficit
            ),
        )
    }

    fn phases(&self) -> Verdict {
        verdict(
            self.growth_fail + self.phase_count_fail == 0,
            format!(
                "{} phased/parallel runs: {} with g growth < 1+eps, {} over the phase-count bound",
                self.phased_runs, self.growth_fail, self.phase_count_fail
            ),
        )
    }
}

fn planted_suite() -> RunChecks {
    let mut checks = RunChecks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..200 {
        let n = rng.gen_range(2..=60);
        let m_p = rng.gen_range(1..=30);
        let m_c = rng.gen_range(1..=30);
        let density = rng.gen_range(0.1..0.5);
        let eps = [0.05, 0.1, 0.2][k % 3];
        let planted = generate_random_feasible(n, m_p, m_c, density, 10_000 + k as u64).unwrap();
        for alg in VARIANTS {
            let out = solve(&planted.instance, &config(eps, alg)).unwrap();
            checks.record(&out, eps);
        }
    }
    checks
}

fn example_bound() -> bool {
    let inst = MixedInstance::from_dense(&[vec![1.0]], &[1.0], &[vec![1.0]], &[1.0]).unwrap();
    let out = solve(&inst, &config(0.1, Algorithm::Generic)).unwrap();
    (out.stats.increment_bound - 279.2588722239781).abs() < 1e-9 && out.stats.increments as f64 <= out.stats.increment_bound
}

fn criterion_5() -> Verdict {
    let mut points = Vec::new();
    for &m in &[16usize, 32, 64, 128] {
        for &eps in &[0.05, 0.1, 0.2] {
            let mut k_max: f64 = 0.0;
            for seed in 0..3u64 {
                let n = m / 2;
                let planted = generate_random_feasible(n, m / 2, m / 2, 0.2, 500 + seed + 7 * m as u64).unwrap();
                let out = solve(&planted.instance, &SolveConfig::new(eps, Algorithm::Parallel)).unwrap();
                let s = &out.stats;
                let nn = s.rhs;
                let scale = nn * (nn * n as f64).ln() / eps;
                k_max = k_max.max(s.max_increments_in_phase as f64 / scale);
            }
            points.push((m, eps, k_max));
        }
    }
    let ks: Vec<f64> = points.iter().map(|p| p.2).collect();
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    let stable = ks.iter().all(|&k| k >= 0.5 * mean && k <= 1.5 * mean);
    let spread = ks.iter().cloned().fold(0.0, f64::max) / ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let list: Vec<String> = points.iter().map(|(m, e, k)| format!("(m={m},eps={e}):{k:.2e}")).collect();
    verdict(
        stable,
        format!("mean K = {mean:.3e}, max/min = {spread:.1}, all within +-50% of mean: {stable}; {}", list.join(" ")),
    )
}

fn criterion_6() -> Verdict {
    let mut unsound = 0;
    let mut verify_fail = 0;
    let mut oracle_infeasible = 0;
    let mut solver_infeasible = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let m_p = rng.gen_range(1..=3);
        let m_c = rng.gen_range(1..=3);
        let inst = generate_random_tiny(n, m_p, m_c, 4, 6, 90_000 + seed).unwrap();
        let truth = exact_feasible_tiny(&inst).unwrap().is_feasible();
        oracle_infeasible += usize::from(!truth);
        for alg in VARIANTS {
            let out = solve(&inst, &SolveConfig::new(0.1, alg)).unwrap();
            if out.status == Status::Infeasible {
                solver_infeasible += 1;
                if truth {
                    unsound += 1;
                }
            } else if verify_outcome(&inst, &out, 0.1).is_err() {
                verify_fail += 1;
            }
        }
    }
    let mut planted_infeasible = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let planted =
            generate_random_feasible(rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3), 0.5, 70_000 + seed)
                .unwrap();
        for alg in VARIANTS {
            if solve(&planted.instance, &SolveConfig::new(0.1, alg)).unwrap().status == Status::Infeasible {
                planted_infeasible += 1;
            }
        }
    }
    verdict(
        unsound + verify_fail + planted_infeasible == 0,
        format!(
            "500 tiny x 3 variants: oracle infeasible {oracle_infeasible}, solver infeasible {solver_infeasible}, \
             solver-infeasible-but-feasible {unsound}, feasible outputs failing verification {verify_fail}; \
             planted-feasible declared infeasible {planted_infeasible}/1500"
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut smooth_fail = 0;
    let mut samples = 0;
    for &eps in &[0.01, 0.1, 0.5, 1.0] {
        for _ in 0..2500 {
            let len = rng.gen_range(1..=8);
            let y: Vec<f64> = (0..len).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let beta: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=eps)).collect();
            let yb: Vec<f64> = y.iter().zip(&beta).map(|(a, b)| a + b).collect();
            let wmax = gradient_weights(&y).unwrap();
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let wmin = gradient_weights(&neg).unwrap();
            let dmax: f64 = beta.iter().zip(&wmax).map(|(b, w)| b * w).sum();
            let dmin: f64 = beta.iter().zip(&wmin).map(|(b, w)| b * w).sum();
            if lmax(&yb).unwrap() > lmax(&y).unwrap() + (1.0 + eps) * dmax + 1e-12 {
                smooth_fail += 1;
            }
            if lmin(&yb).unwrap() < lmin(&y).unwrap() + (1.0 - eps / 2.0) * dmin - 1e-12 {
                smooth_fail += 1;
            }
            samples += 1;
        }
    }
    let mut worst_fd: f64 = 0.0;
    let mut worst_chain: f64 = 0.0;
    for k in 0..100u64 {
        let rows = rng.gen_range(1..=8);
        let cols = rng.gen_range(1..=8);
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.gen_bool(0.5) {
                    t.push((i, j, rng.gen_range(0.1..2.0)));
                }
            }
        }
        let m = SparseNonnegMatrix::from_triplets(rows, cols, t).unwrap();
        let x: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.0..3.0)).collect();
        let mx = m.mul_vec(&x);
        let sign = if k % 2 == 0 { Sign::Max } else { Sign::Min };
        let f = |z: &[f64]| {
            let v = m.mul_vec(z);
            match sign {
                Sign::Max => lmax(&v).unwrap(),
                Sign::Min => lmin(&v).unwrap(),
            }
        };
        let fd = finite_difference_gradient(f, &x, 1e-6);
        for j in 0..cols {
            let d = column_derivative(&m, &mx, j, sign, None);
            let scale = d.abs().max(fd[j].abs());
            if scale > 0.0 {
                worst_fd = worst_fd.max((d - fd[j]).abs() / scale.max(1e-3));
            }
        }
        let alpha: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.0..1.0)).collect();
        let lhs: f64 = (0..cols).map(|j| alpha[j] * column_derivative(&m, &mx, j, Sign::Max, None)).sum();
        let ma = m.mul_vec(&alpha);
        let w = gradient_weights(&mx).unwrap();
        let rhs: f64 = ma.iter().zip(&w).map(|(a, b)| a * b).sum();
        worst_chain = worst_chain.max((lhs - rhs).abs());
    }
    verdict(
        smooth_fail == 0 && worst_fd <= 1e-6 && worst_chain <= 1e-10,
        format!(
            "{samples} smoothness samples, {smooth_fail} violations; finite-difference rel err {worst_fd:.2e} (<= 1e-6); \
             chain rule err {worst_chain:.2e} (<= 1e-10)"
        ),
    )
}

fn criterion_8() -> Verdict {
    let eps = 0.1;
    let base = SolveConfig::new(0.1, Algorithm::Phased);
    let (mut done, mut seed) = (0, 0u64);
    let (mut lambda_fail, mut bound_fail, mut probe_fail) = (0, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    while done < 100 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let inst = generate_random_tiny(n, rng.gen_range(1..=3), rng.gen_range(1..=3), 4, 6, 50_000 + seed).unwrap();
        let Ok((init, _)) = initial_bound(&inst) else { continue };
        let star = brute_lambda_star(&inst).unwrap();
        if star == 0.0 {
            continue;
        }
        done += 1;
        let m = (inst.num_rows() as f64).max(2.0);
        if init < star * (1.0 - 1e-9) || init > m * m * star * (1.0 + 1e-9) {
            bound_fail += 1;
        }
        let out = optimize(&inst, eps, &base).unwrap();
        worst_ratio = worst_ratio.max(out.lambda / star);
        if out.lambda < star * (1.0 - 1e-6) || out.lambda > (1.0 + eps) * star {
            lambda_fail += 1;
        }
        let probes = out.subproblem_log.iter().filter(|s| s.stage == mixpack::optimizer::Stage::Bracket).count();
        let limit = (2.0 * m.log2()).log2().ceil() as usize + 1;
        if probes > limit {
            probe_fail += 1;
        }
    }
    verdict(
        lambda_fail + bound_fail + probe_fail == 0,
        format!(
            "100 tiny instances: {lambda_fail} lambda outside [lambda*(1-1e-6), (1+eps)lambda*] (worst lambda/lambda* = {worst_ratio:.4}), \
             {bound_fail} initial-bound violations, {probe_fail} over the probe limit"
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let eps = 0.1;
    let (mut runs, mut bad) = (0, 0);
    let mut k_max: f64 = 0.0;
    while runs < 30 {
        let (nodes, extra, k) = (rng.gen_range(4..=7), rng.gen_range(3..=12), rng.gen_range(1..=3));
        let net = generate_planted_network(nodes, extra, k, rng.gen()).unwrap();
        if net.edges.len() > 20 {
            continue;
        }
        runs += 1;
        let out = solve_mcf(&net, eps).unwrap();
        match &out.solution {
            Some(sol) if check_flow(&net, sol, eps).is_ok() => {}
            _ => bad += 1,
        }
        k_max = k_max.max(out.stats.path_call_constant());
    }
    let (mut equiv, mut worst_diff) = (0, 0.0f64);
    let mut tries = 0;
    while equiv < 20 && tries < 1000 {
        tries += 1;
        let (nodes, extra, k) = (rng.gen_range(3..=5), rng.gen_range(1..=4), rng.gen_range(1..=2));
        let net = generate_planted_network(nodes, extra, k, rng.gen()).unwrap();
        let pf = match path_formulation(&net, 6) {
            Ok(pf) => pf,
            Err(FlowError::TooManyPaths { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        equiv += 1;
        let flow = solve_mcf(&net, eps).unwrap();
        let explicit = solve_phased_grouped(&pf.instance, &pf.groups, &SolveConfig::new(eps, Algorithm::Phased)).unwrap();
        let a = flow.solution.expect("planted network is feasible").edge_flow;
        let b = pf.edge_flow(&explicit.x, net.edges.len());
        for (x, y) in a.iter().zip(&b) {
            worst_diff = worst_diff.max((x - y).abs() / x.abs().max(1.0));
        }
    }
    verdict(
        bad == 0 && k_max.is_finite() && worst_diff <= 1e-8 && equiv == 20,
        format!(
            "{runs} networks: {bad} failing demand/capacity/budget checks; fitted shortest-path constant K = {k_max:.3}; \
             path-variable equivalence on {equiv} networks, max rel diff {worst_diff:.2e}"
        ),
    )
}

fn criterion_10() -> Verdict {
    let eps = 0.1;
    let limit = 1.0 + PACKING_FACTOR * eps;
    let (mut row_fail, mut mismatch, mut runs) = (0, 0.0f64, 0);
    for seed in 0..10u64 {
        let n = 4 + (seed as usize % 5);
        let ph = Phantom::random(n, seed);
        let tomo = build_tomo_instance(&ph, &[0.0, 45.0, 90.0, 135.0]).unwrap();
        let out = solve_nonneg_system(&tomo.a, eps).unwrap();
        runs += 1;
        if !out.feasible {
            row_fail += 1;
            continue;
        }
        for v in tomo.a.mul_vec(&out.x) {
            if v < 1.0 - COVER_SLACK || v > limit {
                row_fail += 1;
            }
        }
        let mut cfg = SolveConfig::new(eps, Algorithm::Parallel);
        cfg.delete_covering = false;
        let general = solve_parallel(&tomo.as_mixed().unwrap(), &cfg).unwrap();
        for (a, b) in out.x.iter().zip(&general.x) {
            mismatch = mismatch.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    let id = solve_nonneg_system(&SparseNonnegMatrix::identity(2), eps).unwrap();
    let id_ok = id.feasible && id.x.iter().all(|&v| v >= 1.0 - COVER_SLACK && v <= limit);
    verdict(
        row_fail == 0 && id_ok && mismatch <= 1e-9,
        format!(
            "{runs} phantoms (4x4..8x8, 4 angles): {row_fail} rows outside [1, 1+4.5eps]; identity case ok: {id_ok}; \
             max rel diff vs general parallel solver {mismatch:.2e}"
        ),
    )
}

fn criterion_11() -> Verdict {
    let eps = 0.01;
    let planted = generate_random_feasible(150, 500, 500, 0.02, 11).unwrap();
    let inst = &planted.instance;
    let m = inst.num_rows();
    let rhs_phased = mixpack::solvers::choose_rhs_for(Algorithm::Phased, m, eps);
    let rhs_parallel = mixpack::solvers::choose_rhs_for(Algorithm::Parallel, m, eps);
    let mut checks = RunChecks::default();
    let mut times = Vec::new();
    for alg in [Algorithm::Phased, Algorithm::Parallel] {
        let t = Instant::now();
        let out = solve(inst, &config(eps, alg)).unwrap();
        times.push(format!("{alg:?} {:.1}s/{} incr", t.elapsed().as_secs_f64(), out.stats.increments));
        checks.record(&out, eps);
    }
    let parts = [checks.feasibility(), checks.increments(), checks.potentials(), checks.phases()];
    verdict(
        parts.iter().all(|v| v.pass),
        format!(
            "m = {m}, N = {rhs_phased:.1} (phased) / {rhs_parallel:.1} (parallel); {}; {}",
            times.join(", "),
            parts.iter().map(|v| v.detail.as_str()).collect::<Vec<_>>().join(" | ")
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let mut v = f();
        v.detail = format!("{} [{:.1}s]", v.detail, t.elapsed().as_secs_f64());
        println!("criterion {id:>2} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, name, v));
    };
    let t = Instant::now();
    let suite = planted_suite();
    let suite_time = t.elapsed().as_secs_f64();
    run(1, "feasibility guarantee", &|| {
        let v = suite.feasibility();
        verdict(v.pass, format!("{}; suite for criteria 1-4 took {suite_time:.1}s", v.detail))
    });
    run(2, "increment bound", &|| {
        let v = suite.increments();
        let ex = example_bound();
        verdict(v.pass && ex, format!("{}; m=2 eps=0.1 example bound 279.26 holds: {ex}", v.detail))
    });
    run(3, "potential invariants", &|| suite.potentials());
    run(4, "phase growth", &|| suite.phases());
    run(5, "parallel per-phase bound", &criterion_5);
    run(6, "infeasibility soundness", &criterion_6);
    run(7, "smoothness and gradients", &criterion_7);
    run(8, "optimizer", &criterion_8);
    run(9, "multicommodity flow", &criterion_9);
    run(10, "tomography", &criterion_10);
    run(11, "numerical robustness", &criterion_11);
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!(
        "acceptance: {} passed, {} failed in {:.1}s",
        results.len() - failed,
        failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
