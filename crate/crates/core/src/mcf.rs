//! Min-cost concurrent multicommodity flow as a mixed packing/covering
//! problem over (implicit) path variables.
//!
//! Packing rows are the edge capacities `f(e) <= mu_e` and the budget
//! `w.f <= W`; covering rows are the demands `shipped(i) >= d_i`. The phased
//! algorithm never materializes path variables: the eligible path of least
//! `local_p` for commodity `i` is a shortest `s_i -> t_i` path under
//!
//! ```text
//! l(e) = (w_e / W) e^{w.f / W} + e^{f(e) / mu_e} / mu_e
//! ```
//!
//! and the covering denominator depends on the commodity only. Flows are kept
//! in the scaled units of the normalized problem (right-hand side `N`) and
//! divided by `N` on return.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use web_time::Instant;

use crate::error::InstanceError;
use crate::instance::{MixedInstance, SparseNonnegMatrix};
use crate::potentials::log_weighted_sum_exp;
use crate::solvers::{Status, INFEASIBILITY_TOLERANCE, PACKING_FACTOR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("malformed network JSON: {0}")]
    Json(String),
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("invalid epsilon {0}")]
    Epsilon(f64),
    #[error("budget exhausted after {0} augmentations")]
    BudgetExhausted(u64),
    #[error("commodity {commodity} has more than {limit} simple paths")]
    TooManyPaths { commodity: usize, limit: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commodity {
    pub source: usize,
    pub sink: usize,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub edges: Vec<Edge>,
    pub commodities: Vec<Commodity>,
    pub budget: f64,
}

impl FlowNetwork {
    pub fn from_json(text: &[u8]) -> Result<Self, FlowError> {
        let net: FlowNetwork = serde_json::from_slice(text).map_err(|e| FlowError::Json(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |s: String| Err(FlowError::Invalid(s));
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return bad(format!("budget must be positive, got {}", self.budget));
        }
        if self.commodities.is_empty() {
            return bad("no commodities".into());
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.from >= self.nodes || e.to >= self.nodes {
                return bad(format!("edge {k} references a missing node"));
            }
            if e.from == e.to {
                return bad(format!("edge {k} is a self-loop"));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return bad(format!("edge {k} has weight {}", e.weight));
            }
            if !(e.capacity > 0.0 && e.capacity.is_finite()) {
                return bad(format!("edge {k} has capacity {}", e.capacity));
            }
        }
        for (i, c) in self.commodities.iter().enumerate() {
            if c.source >= self.nodes || c.sink >= self.nodes {
                return bad(format!("commodity {i} references a missing node"));
            }
            if c.source == c.sink {
                return bad(format!("commodity {i} has source equal to sink"));
            }
            if !(c.demand > 0.0 && c.demand.is_finite()) {
                return bad(format!("commodity {i} has demand {}", c.demand));
            }
        }
        Ok(())
    }

    /// `1 + #edges + #commodities`.
    pub fn num_constraints(&self) -> usize {
        1 + self.edges.len() + self.commodities.len()
    }

    fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.from].push(k);
        }
        adj
    }
}

/// Random feasible network. Each commodity gets a planted path through up to
/// two intermediate nodes; `extra_edges` random arcs are added on top.
/// Capacities and the budget exceed the planted flow by 20%.
pub fn generate_planted_network(nodes: usize, extra_edges: usize, commodities: usize, seed: u64) -> Result<FlowNetwork, FlowError> {
    if nodes < 2 || commodities == 0 {
        return Err(FlowError::Invalid("need at least 2 nodes and 1 commodity".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<Edge> = Vec::new();
    let mut load: Vec<f64> = Vec::new();
    let mut cost = 0.0;
    let mut coms = Vec::with_capacity(commodities);
    let find_or_add = |edges: &mut Vec<Edge>, load: &mut Vec<f64>, u: usize, v: usize, rng: &mut ChaCha8Rng| {
        if let Some(k) = edges.iter().position(|e| e.from == u && e.to == v) {
            k
        } else {
            edges.push(Edge { from: u, to: v, weight: rng.gen_range(0.1..2.0), capacity: 0.0 });
            load.push(0.0);
            edges.len() - 1
        }
    };
    for _ in 0..commodities {
        let s = rng.gen_range(0..nodes);
        let t = (s + rng.gen_range(1..nodes)) % nodes;
        let d = rng.gen_range(0.5..2.0);
        let mut mids: Vec<usize> = (0..nodes).filter(|&v| v != s && v != t).collect();
        let hops = rng.gen_range(0..=mids.len().min(2));
        let mut path = vec![s];
        for _ in 0..hops {
            let k = rng.gen_range(0..mids.len());
            path.push(mids.swap_remove(k));
        }
        path.push(t);
        for w in path.windows(2) {
            let e = find_or_add(&mut edges, &mut load, w[0], w[1], &mut rng);
            load[e] += d;
            cost += d * edges[e].weight;
        }
        coms.push(Commodity { source: s, sink: t, demand: d });
    }
    for _ in 0..extra_edges {
        let u = rng.gen_range(0..nodes);
        let v = (u + rng.gen_range(1..nodes)) % nodes;
        find_or_add(&mut edges, &mut load, u, v, &mut rng);
    }
    for (e, l) in edges.iter_mut().zip(&load) {
        e.capacity = if *l > 0.0 { 1.2 * l } else { rng.gen_range(0.5..2.0) };
    }
    Ok(FlowNetwork { nodes, edges, commodities: coms, budget: 1.2 * cost })
}

/// Flow state in normalized units: every constraint has right-hand side `N`
/// after dividing edge flow by `mu_e`, cost by `W` and shipped flow by `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<'a> {
    net: &'a FlowNetwork,
    /// `flow[i][e]`.
    flow: Vec<Vec<f64>>,
    edge_flow: Vec<f64>,
    cost: f64,
    shipped: Vec<f64>,
}

impl<'a> FlowState<'a> {
    pub fn new(net: &'a FlowNetwork) -> Self {
        Self {
            net,
            flow: vec![vec![0.0; net.edges.len()]; net.commodities.len()],
            edge_flow: vec![0.0; net.edges.len()],
            cost: 0.0,
            shipped: vec![0.0; net.commodities.len()],
        }
    }

    pub fn edge_flow(&self) -> &[f64] {
        &self.edge_flow
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn shipped(&self) -> &[f64] {
        &self.shipped
    }

    fn cost_exponent(&self) -> f64 {
        self.cost / self.net.budget
    }

    fn edge_exponent(&self, e: usize) -> f64 {
        self.edge_flow[e] / self.net.edges[e].capacity
    }

    /// `l(e)` without shifting; overflows once exponents pass ~709.
    pub fn edge_length(&self, e: usize) -> f64 {
        let edge = &self.net.edges[e];
        edge.weight / self.net.budget * self.cost_exponent().exp()
            + self.edge_exponent(e).exp() / edge.capacity
    }

    /// `ln sum_{e in path} l(e)`.
    pub fn log_path_length(&self, path: &[usize]) -> f64 {
        let w: f64 = path.iter().map(|&e| self.net.edges[e].weight).sum();
        let terms = std::iter::once((w / self.net.budget, self.cost_exponent()))
            .chain(path.iter().map(|&e| (1.0 / self.net.edges[e].capacity, self.edge_exponent(e))))
            .filter(|&(a, _)| a > 0.0);
        log_weighted_sum_exp(terms)
    }

    /// `ln (e^{-shipped(i)/d_i} / d_i)`, the covering part of `local_p`.
    pub fn log_covering_term(&self, i: usize) -> f64 {
        let d = self.net.commodities[i].demand;
        -self.shipped[i] / d - d.ln()
    }

    /// `ln local_p` for a path of commodity `i`.
    pub fn log_local(&self, path: &[usize], i: usize) -> f64 {
        self.log_path_length(path) - self.log_covering_term(i)
    }

    /// `ln global` over the commodities marked active.
    pub fn log_global(&self, active: &[bool]) -> f64 {
        let num = log_weighted_sum_exp(
            std::iter::once((1.0, self.cost_exponent()))
                .chain((0..self.net.edges.len()).map(|e| (1.0, self.edge_exponent(e)))),
        );
        let d = self.net.commodities.iter().enumerate().filter(|(i, _)| active[*i]);
        let den = log_weighted_sum_exp(d.map(|(i, c)| (1.0, -self.shipped[i] / c.demand)));
        num - den
    }

    /// Whether the path's length is at most `(1+eps) g e^{-shipped(i)/d_i} / d_i`.
    pub fn accept_path(&self, path: &[usize], i: usize, log_g: f64, epsilon: f64) -> bool {
        self.log_path_length(path) <= epsilon.ln_1p() + log_g + self.log_covering_term(i)
    }

    /// Adds `delta` units of commodity `i` along `path`.
    pub fn augment(&mut self, path: &[usize], i: usize, delta: f64) {
        for &e in path {
            self.flow[i][e] += delta;
            self.edge_flow[e] += delta;
            self.cost += delta * self.net.edges[e].weight;
        }
        self.shipped[i] += delta;
    }

    /// Shortest `s_i -> t_i` path under `l(e)` with a common shift, or `None`
    /// when the sink is unreachable.
    fn shortest_path(&self, i: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
        let net = self.net;
        let a = self.cost_exponent();
        let shift = (0..net.edges.len()).map(|e| self.edge_exponent(e)).fold(a, f64::max);
        let scale = (a - shift).exp() / net.budget;
        let len: Vec<f64> = net
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| edge.weight * scale + (self.edge_exponent(e) - shift).exp() / edge.capacity)
            .collect();
        let Commodity { source, sink, .. } = net.commodities[i];
        dijkstra(net, adj, &len, source, sink)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(net: &FlowNetwork, adj: &[Vec<usize>], len: &[f64], s: usize, t: usize) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; net.nodes];
    let mut pred = vec![usize::MAX; net.nodes];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == t {
            break;
        }
        for &e in &adj[u] {
            let v = net.edges[e].to;
            let nd = d + len[e];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = e;
                heap.push(Entry(nd, v));
            }
        }
    }
    if dist[t] == f64::INFINITY {
        return None;
    }
    let mut path = Vec::new();
    let mut v = t;
    while v != s {
        let e = pred[v];
        path.push(e);
        v = net.edges[e].from;
    }
    path.reverse();
    Some(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub epsilon: f64,
    pub rhs: f64,
    pub constraints: usize,
    pub augmentations: u64,
    pub shortest_path_calls: u64,
    pub phases: u64,
    pub wall_time_secs: f64,
}

impl FlowStats {
    /// `calls / (m ln m / eps^2)`.
    pub fn path_call_constant(&self) -> f64 {
        let m = self.constraints as f64;
        self.shortest_path_calls as f64 / (m * m.ln() / (self.epsilon * self.epsilon))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    /// `flow[i][e]` for commodity `i` on edge `e`.
    pub flow: Vec<Vec<f64>>,
    pub edge_flow: Vec<f64>,
    pub shipped: Vec<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub status: Status,
    /// Present for a feasible outcome.
    pub solution: Option<FlowSolution>,
    pub stats: FlowStats,
}

impl FlowOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }
}

pub fn solve_mcf(net: &FlowNetwork, epsilon: f64) -> Result<FlowOutcome, FlowError> {
    solve_mcf_with_budget(net, epsilon, 1_000_000_000)
}

/// Phased algorithm with one shortest-path query per candidate augmentation.
/// Each phase visits commodities in input order and keeps augmenting a
/// commodity while its shortest path passes the acceptance test.
pub fn solve_mcf_with_budget(net: &FlowNetwork, epsilon: f64, max_augmentations: u64) -> Result<FlowOutcome, FlowError> {
    let started = Instant::now();
    net.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(FlowError::Epsilon(epsilon));
    }
    let m = net.num_constraints();
    let rhs = 2.0 * (m as f64).ln() / epsilon;
    let threshold = epsilon.ln_1p();
    let adj = net.out_edges();
    let k = net.commodities.len();
    let mut state = FlowState::new(net);
    let mut active = vec![true; k];
    let mut calls = 0u64;
    let mut augmentations = 0u64;
    let mut phases = 0u64;
    let stats = |calls, augmentations, phases| FlowStats {
        epsilon,
        rhs,
        constraints: m,
        augmentations,
        shortest_path_calls: calls,
        phases,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    // min over active commodities of ln(shortest local_p), before dividing by g.
    let min_local = |state: &FlowState<'_>, active: &[bool], calls: &mut u64| -> Option<f64> {
        let mut best = f64::INFINITY;
        for i in (0..k).filter(|&i| active[i]) {
            *calls += 1;
            let path = state.shortest_path(i, &adj)?;
            best = best.min(state.log_local(&path, i));
        }
        Some(best)
    };
    let Some(mut log_min) = min_local(&state, &active, &mut calls) else {
        return Ok(FlowOutcome { status: Status::Infeasible, solution: None, stats: stats(calls, 0, 0) });
    };
    loop {
        let log_g = state.log_global(&active);
        phases += 1;
        if log_min - log_g > INFEASIBILITY_TOLERANCE {
            return Ok(FlowOutcome { status: Status::Infeasible, solution: None, stats: stats(calls, augmentations, phases) });
        }
        loop {
            for i in 0..k {
                while active[i] {
                    calls += 1;
                    let path = state.shortest_path(i, &adj).expect("reachability checked at start");
                    if !state.accept_path(&path, i, log_g, epsilon) {
                        break;
                    }
                    if augmentations >= max_augmentations {
                        return Err(FlowError::BudgetExhausted(augmentations));
                    }
                    let w: f64 = path.iter().map(|&e| net.edges[e].weight).sum();
                    let cap = path.iter().map(|&e| net.edges[e].capacity).fold(f64::INFINITY, f64::min);
                    let by_cost = if w > 0.0 { net.budget / w } else { f64::INFINITY };
                    let delta = epsilon * net.commodities[i].demand.min(by_cost).min(cap);
                    state.augment(&path, i, delta);
                    augmentations += 1;
                    if state.shipped[i] >= rhs * net.commodities[i].demand {
                        active[i] = false;
                    }
                }
            }
            if active.iter().all(|a| !a) {
                let inv = 1.0 / rhs;
                let solution = FlowSolution {
                    flow: state.flow.iter().map(|r| r.iter().map(|v| v * inv).collect()).collect(),
                    edge_flow: state.edge_flow.iter().map(|v| v * inv).collect(),
                    shipped: state.shipped.iter().map(|v| v * inv).collect(),
                    cost: state.cost * inv,
                };
                return Ok(FlowOutcome { status: Status::Feasible, solution: Some(solution), stats: stats(calls, augmentations, phases) });
            }
            log_min = min_local(&state, &active, &mut calls).expect("reachability checked at start");
            if log_min - log_g > threshold {
                break;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowReport {
    pub min_demand_ratio: f64,
    pub max_capacity_ratio: f64,
    pub cost_ratio: f64,
    pub max_conservation_error: f64,
}

/// Checks demands, capacities, budget (each against `1 + PACKING_FACTOR eps`)
/// and per-commodity conservation of `sol`.
pub fn check_flow(net: &FlowNetwork, sol: &FlowSolution, epsilon: f64) -> Result<FlowReport, FlowError> {
    let limit = 1.0 + PACKING_FACTOR * epsilon;
    let fail = |s: String| Err(FlowError::Invalid(s));
    let mut worst_cons: f64 = 0.0;
    for (i, c) in net.commodities.iter().enumerate() {
        let mut balance = vec![0.0; net.nodes];
        for (e, edge) in net.edges.iter().enumerate() {
            balance[edge.from] -= sol.flow[i][e];
            balance[edge.to] += sol.flow[i][e];
        }
        let scale = sol.shipped[i].max(1e-300);
        for (v, &b) in balance.iter().enumerate() {
            let err = if v == c.source {
                (b + sol.shipped[i]).abs()
            } else if v == c.sink {
                (b - sol.shipped[i]).abs()
            } else {
                b.abs()
            };
            worst_cons = worst_cons.max(err / scale);
        }
        if sol.shipped[i] < c.demand * (1.0 - 1e-9) {
            return fail(format!("commodity {i} ships {} < demand {}", sol.shipped[i], c.demand));
        }
    }
    if worst_cons > 1e-9 {
        return fail(format!("conservation violated by relative {worst_cons}"));
    }
    let mut max_cap: f64 = 0.0;
    for (e, edge) in net.edges.iter().enumerate() {
        let r = sol.edge_flow[e] / edge.capacity;
        if r > limit * (1.0 + 1e-9) {
            return fail(format!("edge {e} carries {r} x capacity"));
        }
        max_cap = max_cap.max(r);
    }
    let cost_ratio = sol.cost / net.budget;
    if cost_ratio > limit * (1.0 + 1e-9) {
        return fail(format!("cost is {cost_ratio} x budget"));
    }
    let min_demand = net
        .commodities
        .iter()
        .zip(&sol.shipped)
        .map(|(c, s)| s / c.demand)
        .fold(f64::INFINITY, f64::min);
    Ok(FlowReport { min_demand_ratio: min_demand, max_capacity_ratio: max_cap, cost_ratio, max_conservation_error: worst_cons })
}

/// The same problem with one variable per simple path.
#[derive(Debug, Clone)]
pub struct PathFormulation {
    pub instance: MixedInstance,
    /// Edge lists, one per variable.
    pub paths: Vec<Vec<usize>>,
    /// Variables of each commodity, in enumeration order.
    pub groups: Vec<Vec<usize>>,
}

impl PathFormulation {
    /// Per-edge flow of a path-variable solution.
    pub fn edge_flow(&self, x: &[f64], edges: usize) -> Vec<f64> {
        let mut f = vec![0.0; edges];
        for (p, &v) in self.paths.iter().zip(x) {
            for &e in p {
                f[e] += v;
            }
        }
        f
    }
}

fn simple_paths(net: &FlowNetwork, adj: &[Vec<usize>], s: usize, t: usize, limit: usize) -> Option<Vec<Vec<usize>>> {
    fn walk(
        net: &FlowNetwork,
        adj: &[Vec<usize>],
        u: usize,
        t: usize,
        seen: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> bool {
        if u == t {
            out.push(cur.clone());
            return out.len() <= limit;
        }
        for &e in &adj[u] {
            let v = net.edges[e].to;
            if !seen[v] {
                seen[v] = true;
                cur.push(e);
                let ok = walk(net, adj, v, t, seen, cur, out, limit);
                cur.pop();
                seen[v] = false;
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    let mut seen = vec![false; net.nodes];
    seen[s] = true;
    let mut out = Vec::new();
    walk(net, adj, s, t, &mut seen, &mut Vec::new(), &mut out, limit).then_some(out)
}

/// Builds the explicit instance: packing rows are the edges (rhs `mu_e`)
/// followed by the budget row (rhs `W`); covering rows are the commodities
/// (rhs `d_i`).
pub fn path_formulation(net: &FlowNetwork, max_paths: usize) -> Result<PathFormulation, FlowError> {
    net.validate()?;
    let adj = net.out_edges();
    let mut paths = Vec::new();
    let mut groups = Vec::new();
    for (i, c) in net.commodities.iter().enumerate() {
        let ps = simple_paths(net, &adj, c.source, c.sink, max_paths)
            .ok_or(FlowError::TooManyPaths { commodity: i, limit: max_paths })?;
        groups.push((paths.len()..paths.len() + ps.len()).collect());
        paths.extend(ps);
    }
    let n = paths.len();
    let e_count = net.edges.len();
    let mut pt = Vec::new();
    let mut ct = Vec::new();
    for (j, p) in paths.iter().enumerate() {
        for &e in p {
            pt.push((e, j, 1.0));
        }
        let w: f64 = p.iter().map(|&e| net.edges[e].weight).sum();
        pt.push((e_count, j, w));
    }
    for (i, g) in groups.iter().enumerate() {
        for &j in g {
            ct.push((i, j, 1.0));
        }
    }
    let packing = SparseNonnegMatrix::from_triplets(e_count + 1, n, pt)?;
    let covering = SparseNonnegMatrix::from_triplets(net.commodities.len(), n, ct)?;
    let mut prhs: Vec<f64> = net.edges.iter().map(|e| e.capacity).collect();
    prhs.push(net.budget);
    let crhs = net.commodities.iter().map(|c| c.demand).collect();
    let instance = MixedInstance::new(packing, prhs, covering, crhs)?;
    Ok(PathFormulation { instance, paths, groups })
}
