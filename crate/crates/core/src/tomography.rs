//! Nonnegative linear systems `Ax = 1` and a 2-D parallel-beam projection
//! model that produces them.
//!
//! The image is an `n x n` grid of unit cells. For a beam angle `theta` the
//! detector axis is `u = (-sin theta, cos theta)` and the detector is split
//! into unit-width bins centred on the projection of the grid centre. Row `i`
//! of the system is one (angle, bin) strip: `A_ij` is the area of cell `j`
//! inside the strip divided by the strip's mass `mu_i`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{InstanceError, SolveError};
use crate::instance::{MixedInstance, SparseNonnegMatrix};
use crate::potentials::log_weighted_sum_exp;
use crate::solvers::{solve, SolveConfig, SolveOutcome, INFEASIBILITY_TOLERANCE};

/// Cell/strip overlaps below this area are treated as empty.
const AREA_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomoError {
    #[error("malformed phantom JSON: {0}")]
    Json(String),
    #[error("invalid phantom: {0}")]
    Phantom(String),
    #[error("phantom has no mass")]
    ZeroPhantom,
    #[error("no projection angles")]
    NoAngles,
    #[error("invalid epsilon {0}")]
    Epsilon(f64),
    #[error("column {0} of the system is empty")]
    EmptyColumn(usize),
    #[error("budget exhausted after {0} increments")]
    BudgetExhausted(u64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Square density grid, row-major, `density[r * n + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    n: usize,
    density: Vec<f64>,
}

impl Phantom {
    pub fn new(n: usize, density: Vec<f64>) -> Result<Self, TomoError> {
        if n == 0 || density.len() != n * n {
            return Err(TomoError::Phantom(format!("expected {n}x{n} values, got {}", density.len())));
        }
        if let Some(v) = density.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(TomoError::Phantom(format!("density {v} is not a nonnegative number")));
        }
        Ok(Self { n, density })
    }

    /// Parses a JSON array of equal-length rows.
    pub fn from_json(text: &[u8]) -> Result<Self, TomoError> {
        let rows: Vec<Vec<f64>> = serde_json::from_slice(text).map_err(|e| TomoError::Json(e.to_string()))?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(TomoError::Phantom("grid is not square".into()));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<&[f64]> = self.density.chunks(self.n).collect();
        serde_json::to_string(&rows).expect("grid serializes")
    }

    /// Independent uniform densities in `[0, 1)`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density = (0..n * n).map(|_| rng.gen::<f64>()).collect();
        Self { n, density }
    }

    /// Two overlapping discs on an empty background.
    pub fn discs(n: usize) -> Self {
        let h = n as f64 / 2.0;
        let density = (0..n * n)
            .map(|k| {
                let (y, x) = ((k / n) as f64 + 0.5 - h, (k % n) as f64 + 0.5 - h);
                let big = x * x + y * y <= (0.8 * h).powi(2);
                let small = (x - 0.25 * h).powi(2) + (y + 0.2 * h).powi(2) <= (0.3 * h).powi(2);
                0.5 * big as u8 as f64 + 0.5 * small as u8 as f64
            })
            .collect();
        Self { n, density }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }
}

/// Linear system for one phantom and a set of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoInstance {
    /// Retained strips by retained cells.
    pub a: SparseNonnegMatrix,
    /// Mass of each retained strip.
    pub mu: Vec<f64>,
    pub grid: usize,
    pub angles_deg: Vec<f64>,
    /// `(angle index, bin)` of each retained row.
    pub rows: Vec<(usize, usize)>,
    /// Grid cell of each column.
    pub cells: Vec<usize>,
    /// Cells eliminated because they meet an empty strip.
    pub removed_cells: Vec<usize>,
    pub removed_rows: usize,
}

impl TomoInstance {
    /// Scatters column values back onto the grid; eliminated cells are 0.
    pub fn to_grid(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.grid * self.grid];
        for (&c, &v) in self.cells.iter().zip(x) {
            g[c] = v;
        }
        g
    }

    /// Column values of a full grid.
    pub fn from_grid(&self, grid: &[f64]) -> Vec<f64> {
        self.cells.iter().map(|&c| grid[c]).collect()
    }

    /// `P = C = A`, `p = c = 1`.
    pub fn as_mixed(&self) -> Result<MixedInstance, InstanceError> {
        let ones = vec![1.0; self.a.rows()];
        MixedInstance::new(self.a.clone(), ones.clone(), self.a.clone(), ones)
    }

    /// As [`as_mixed`](Self::as_mixed) plus packing rows `x_j <= bound`.
    pub fn with_box(&self, bound: f64) -> Result<MixedInstance, InstanceError> {
        self.as_mixed()?.with_upper_bounds(bound)
    }
}

fn clip(poly: &[(f64, f64)], keep: impl Fn((f64, f64)) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (fa, fb) = (keep(a), keep(b));
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

fn area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    let twice: f64 = (0..n).map(|k| {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        a.0 * b.1 - b.0 * a.1
    })
    .sum();
    twice.abs() / 2.0
}

/// Area of the unit cell with lower-left corner `(x0, y0)` whose projection
/// `t = p.u` lies in `[lo, lo + 1]`.
fn cell_strip_area(x0: f64, y0: f64, u: (f64, f64), lo: f64) -> f64 {
    let sq = [(x0, y0), (x0 + 1.0, y0), (x0 + 1.0, y0 + 1.0), (x0, y0 + 1.0)];
    let proj = |p: (f64, f64)| p.0 * u.0 + p.1 * u.1;
    let a = clip(&sq, |p| proj(p) - lo);
    if a.len() < 3 {
        return 0.0;
    }
    let b = clip(&a, |p| lo + 1.0 - proj(p));
    if b.len() < 3 { 0.0 } else { area(&b) }
}

/// Strip/cell overlap areas for the given angles (degrees): one
/// `(row, cell, area)` triple per overlap, rows ordered by angle then bin.
/// Returns the triples and the `(angle, bin)` label of each row.
pub fn projection_areas(n: usize, angles_deg: &[f64]) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize)>) {
    let h = n as f64 / 2.0;
    let mut triplets = Vec::new();
    let mut labels = Vec::new();
    for (ai, &deg) in angles_deg.iter().enumerate() {
        let th = deg.to_radians();
        let u = (-th.sin(), th.cos());
        let width = n as f64 * (u.0.abs() + u.1.abs());
        let bins = (width - 1e-9).ceil().max(1.0) as usize;
        let start = -(bins as f64) / 2.0;
        let base = labels.len();
        labels.extend((0..bins).map(|b| (ai, b)));
        for cell in 0..n * n {
            let (x0, y0) = ((cell % n) as f64 - h, (cell / n) as f64 - h);
            let corners = [(x0, y0), (x0 + 1.0, y0), (x0, y0 + 1.0), (x0 + 1.0, y0 + 1.0)];
            let ts = corners.map(|p| p.0 * u.0 + p.1 * u.1);
            let tmin = ts.iter().copied().fold(f64::INFINITY, f64::min);
            let tmax = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let first = ((tmin - start).floor().max(0.0)) as usize;
            let last = (((tmax - start).ceil()) as usize).min(bins);
            for b in first..last {
                let a = cell_strip_area(x0, y0, u, start + b as f64);
                if a >= AREA_EPS {
                    triplets.push((base + b, cell, a));
                }
            }
        }
    }
    (triplets, labels)
}

/// Builds `A` with `A_ij = area_ij / mu_i`, `mu_i = sum_j area_ij phantom_j`.
/// Strips with `mu_i = 0` are dropped and every cell they touch is removed.
pub fn build_tomo_instance(phantom: &Phantom, angles_deg: &[f64]) -> Result<TomoInstance, TomoError> {
    if angles_deg.is_empty() {
        return Err(TomoError::NoAngles);
    }
    if phantom.density.iter().all(|&v| v == 0.0) {
        return Err(TomoError::ZeroPhantom);
    }
    let n = phantom.n;
    let (triplets, labels) = projection_areas(n, angles_deg);
    let mut mu = vec![0.0; labels.len()];
    for &(i, j, a) in &triplets {
        mu[i] += a * phantom.density[j];
    }
    let mut removed = vec![false; n * n];
    for &(i, j, _) in &triplets {
        if mu[i] == 0.0 {
            removed[j] = true;
        }
    }
    let cells: Vec<usize> = (0..n * n).filter(|&j| !removed[j]).collect();
    let mut col = vec![usize::MAX; n * n];
    for (k, &j) in cells.iter().enumerate() {
        col[j] = k;
    }
    let kept: Vec<usize> = (0..labels.len()).filter(|&i| mu[i] > 0.0).collect();
    let mut row = vec![usize::MAX; labels.len()];
    for (k, &i) in kept.iter().enumerate() {
        row[i] = k;
    }
    let entries = triplets
        .iter()
        .filter(|&&(i, j, _)| row[i] != usize::MAX && col[j] != usize::MAX)
        .map(|&(i, j, a)| (row[i], col[j], a / mu[i]));
    let a = SparseNonnegMatrix::from_triplets(kept.len(), cells.len(), entries)?;
    Ok(TomoInstance {
        a,
        mu: kept.iter().map(|&i| mu[i]).collect(),
        grid: n,
        angles_deg: angles_deg.to_vec(),
        rows: kept.iter().map(|&i| labels[i]).collect(),
        cells,
        removed_cells: (0..n * n).filter(|&j| removed[j]).collect(),
        removed_rows: labels.len() - kept.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub increment: u64,
    pub phase: u64,
    /// `min_i (Ax)_i / N`.
    pub min_row: f64,
    /// `max_i (Ax)_i / N`.
    pub max_row: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegOutcome {
    pub feasible: bool,
    /// `x / N`; for an infeasible verdict, the iterate at detection.
    pub x: Vec<f64>,
    pub rhs: f64,
    pub increments: u64,
    pub phases: u64,
    /// Largest `max_i (Ax)_i` seen during the run, in units where the
    /// target is `N`.
    pub peak_row: f64,
    pub history: Vec<ConvergencePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonnegOptions {
    pub epsilon: f64,
    pub max_increments: u64,
    /// Record one [`ConvergencePoint`] per increment.
    pub history: bool,
}

impl NonnegOptions {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, max_increments: 1_000_000_000, history: false }
    }
}

pub fn solve_nonneg_system(a: &SparseNonnegMatrix, epsilon: f64) -> Result<NonnegOutcome, TomoError> {
    solve_nonneg_system_with(a, &NonnegOptions::new(epsilon))
}

/// Parallel algorithm specialized to `Ax = 1` with `A` serving as both
/// packing and covering matrix and without row deletion.
///
/// `N = (1 + 2 ln m) / eps` with `m = 2 * rows`, the constraint count of the
/// equivalent mixed instance, so results agree with the general parallel
/// solver run on `(A, 1, A, 1)`.
pub fn solve_nonneg_system_with(a: &SparseNonnegMatrix, opts: &NonnegOptions) -> Result<NonnegOutcome, TomoError> {
    let eps = opts.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(TomoError::Epsilon(eps));
    }
    let n = a.cols();
    if let Some(j) = (0..n).find(|&j| a.col_len(j) == 0) {
        return Err(TomoError::EmptyColumn(j));
    }
    let m = 2 * a.rows();
    let rhs = (1.0 + 2.0 * (m.max(2) as f64).ln()) / eps;
    let threshold = eps.ln_1p();
    let mut x: Vec<f64> = (0..n)
        .map(|j| 1.0 / (n as f64 * a.col(j).1.iter().copied().fold(0.0, f64::max)))
        .collect();
    let mut ax = a.mul_vec(&x);
    let log_local = |ax: &[f64], j: usize| {
        let (rows, vals) = a.col(j);
        let num = log_weighted_sum_exp(rows.iter().zip(vals).map(|(&i, &v)| (v, ax[i])));
        let den = log_weighted_sum_exp(rows.iter().zip(vals).map(|(&i, &v)| (v, -ax[i])));
        num - den
    };
    let log_global = |ax: &[f64]| {
        log_weighted_sum_exp(ax.iter().map(|&y| (1.0, y))) - log_weighted_sum_exp(ax.iter().map(|&y| (1.0, -y)))
    };
    let min_row = |ax: &[f64]| ax.iter().copied().fold(f64::INFINITY, f64::min);
    let max_row = |ax: &[f64]| ax.iter().copied().fold(0.0, f64::max);
    let mut increments = 0u64;
    let mut phases = 0u64;
    let mut peak = max_row(&ax);
    let mut history = Vec::new();
    let mut alpha = vec![0.0; n];
    let finish = |x: Vec<f64>, feasible, increments, phases, peak, history| NonnegOutcome {
        feasible,
        x: x.into_iter().map(|v| v / rhs).collect(),
        rhs,
        increments,
        phases,
        peak_row: peak,
        history,
    };
    loop {
        if min_row(&ax) >= rhs {
            return Ok(finish(x, true, increments, phases, peak, history));
        }
        let log_g = log_global(&ax);
        phases += 1;
        let mut local: Vec<f64> = (0..n).map(|j| log_local(&ax, j) - log_g).collect();
        if local.iter().copied().fold(f64::INFINITY, f64::min) > INFEASIBILITY_TOLERANCE {
            return Ok(finish(x, false, increments, phases, peak, history));
        }
        loop {
            let mut any = false;
            for j in 0..n {
                alpha[j] = if local[j] <= threshold {
                    any = true;
                    x[j]
                } else {
                    0.0
                };
            }
            if !any {
                break;
            }
            if increments >= opts.max_increments {
                return Err(TomoError::BudgetExhausted(increments));
            }
            let a_alpha = a.mul_vec(&alpha);
            let delta = max_row(&a_alpha);
            let s = eps / delta;
            for j in 0..n {
                x[j] += s * alpha[j];
            }
            for (v, d) in ax.iter_mut().zip(&a_alpha) {
                *v += s * d;
            }
            increments += 1;
            peak = peak.max(max_row(&ax));
            if opts.history {
                history.push(ConvergencePoint {
                    increment: increments,
                    phase: phases,
                    min_row: min_row(&ax) / rhs,
                    max_row: max_row(&ax) / rhs,
                });
            }
            if min_row(&ax) >= rhs {
                return Ok(finish(x, true, increments, phases, peak, history));
            }
            for (j, l) in local.iter_mut().enumerate() {
                *l = log_local(&ax, j) - log_g;
            }
        }
    }
}

/// Reconstruction with the extra packing rows `x_j <= bound`, through the
/// general solvers.
pub fn solve_with_box(tomo: &TomoInstance, bound: f64, config: &SolveConfig) -> Result<SolveOutcome, TomoError> {
    Ok(solve(&tomo.with_box(bound)?, config)?)
}

/// Binary (`P5`) greyscale image of a grid, scaled so the largest value is
/// white.
pub fn write_pgm<W: Write>(mut w: W, grid: &[f64], n: usize) -> io::Result<()> {
    let top = grid.iter().copied().fold(0.0, f64::max);
    write!(w, "P5\n{n} {n}\n255\n")?;
    let bytes: Vec<u8> = grid
        .iter()
        .map(|&v| if top > 0.0 { (v / top * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 })
        .collect();
    w.write_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::PACKING_FACTOR;

    fn row_sums(t: &TomoInstance, x: &[f64]) -> Vec<f64> {
        t.a.mul_vec(x)
    }

    #[test]
    fn uniform_axis_aligned() {
        let ph = Phantom::new(2, vec![1.0; 4]).unwrap();
        let t = build_tomo_instance(&ph, &[0.0, 90.0]).unwrap();
        assert_eq!(t.a.rows(), 4);
        for v in row_sums(&t, &t.from_grid(ph.density())) {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn empty_row_is_removed() {
        // Bottom row of cells empty; at 0 degrees strips are grid rows.
        let ph = Phantom::new(2, vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        let t = build_tomo_instance(&ph, &[0.0]).unwrap();
        assert_eq!(t.removed_rows, 1);
        assert_eq!(t.removed_cells, vec![0, 1]);
        assert_eq!(t.a.rows(), 1);
    }

    #[test]
    fn random_phantom_identity() {
        let ph = Phantom::random(6, 5);
        let t = build_tomo_instance(&ph, &[0.0, 30.0, 75.0, 120.0]).unwrap();
        for v in row_sums(&t, &t.from_grid(ph.density())) {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn strip_areas_cover_each_cell_once_per_angle() {
        let n = 5;
        let (t, labels) = projection_areas(n, &[0.0, 45.0, 100.0]);
        for ai in 0..3 {
            let mut per_cell = vec![0.0; n * n];
            for &(i, j, a) in &t {
                if labels[i].0 == ai {
                    per_cell[j] += a;
                }
            }
            assert!(per_cell.iter().all(|&s| (s - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn identity_system() {
        let out = solve_nonneg_system(&SparseNonnegMatrix::identity(2), 0.1).unwrap();
        assert!(out.feasible);
        assert!(out.x.iter().all(|&v| (1.0 - 1e-9..=1.0 + PACKING_FACTOR * 0.1).contains(&v)));
    }

    #[test]
    fn single_row_system() {
        let a = SparseNonnegMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap();
        let out = solve_nonneg_system(&a, 0.1).unwrap();
        let s = out.x[0] + out.x[1];
        assert!(out.feasible && (1.0 - 1e-9..=1.45).contains(&s));
    }

    #[test]
    fn inconsistent_system_is_infeasible() {
        // x0 + x1 = 1, x0 = 1, x1 = 1 has no solution, even approximately.
        let a = SparseNonnegMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(!solve_nonneg_system(&a, 0.1).unwrap().feasible);
    }

    #[test]
    fn pgm_header() {
        let mut buf = Vec::new();
        write_pgm(&mut buf, &[0.0, 1.0, 0.5, 0.25], 2).unwrap();
        assert!(buf.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&buf[buf.len() - 4..], &[0, 255, 128, 64]);
    }
}
