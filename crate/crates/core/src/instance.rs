//! Problem data: sparse nonnegative matrices, mixed packing/covering
//! instances, the JSON file format, reduction to a uniform right-hand side,
//! and seeded generators for planted-feasible instances.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::InstanceError;

/// Nonnegative sparse matrix with row-major and column-major views of the
/// same entries.
///
/// Explicit zeros are dropped on construction; they carry no constraint and
/// would inflate column degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseNonnegMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl SparseNonnegMatrix {
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, InstanceError> {
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in entries {
            if r >= rows || c >= cols {
                return Err(InstanceError::IndexOutOfRange { row: r, col: c, rows, cols });
            }
            if !v.is_finite() {
                return Err(InstanceError::NonFinite { what: "matrix entry" });
            }
            if v < 0.0 {
                return Err(InstanceError::NegativeCoefficient { row: r, col: c, value: v });
            }
            triplets.push((r, c, v));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        for w in triplets.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(InstanceError::DuplicateEntry { row: w[0].0, col: w[0].1 });
            }
        }
        triplets.retain(|&(_, _, v)| v > 0.0);
        Ok(Self::from_sorted(rows, cols, &triplets))
    }

    // `sorted` must be row-major sorted, duplicate free, strictly positive.
    fn from_sorted(rows: usize, cols: usize, sorted: &[(usize, usize, f64)]) -> Self {
        let nnz = sorted.len();
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_ptr = vec![0usize; cols + 1];
        for &(r, c, _) in sorted {
            row_ptr[r + 1] += 1;
            col_ptr[c + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx = sorted.iter().map(|t| t.1).collect();
        let row_val = sorted.iter().map(|t| t.2).collect();
        let mut col_idx = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut next = col_ptr.clone();
        for &(r, c, v) in sorted {
            col_idx[next[c]] = r;
            col_val[next[c]] = v;
            next[c] += 1;
        }
        Self { rows, cols, row_ptr, row_idx, row_val, col_ptr, col_idx, col_val }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_sorted(rows, cols, &[])
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_sorted(n, n, &t)
    }

    /// Builds from dense rows; zero entries are skipped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, InstanceError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(InstanceError::DimensionMismatch("ragged dense matrix".into()));
        }
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)));
        Self::from_triplets(rows.len(), cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    /// Column indices and values of row `i`, in increasing column order.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.row_idx[r.clone()], &self.row_val[r])
    }

    /// Row indices and values of column `j`, in increasing row order.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.col_idx[r.clone()], &self.col_val[r])
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn col_len(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    /// Entry `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |k| val[k])
    }

    /// Row-major triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
            })
            .collect()
    }

    /// Column-major triplets.
    pub fn triplets_by_col(&self) -> Vec<(usize, usize, f64)> {
        (0..self.cols)
            .flat_map(|j| {
                let (idx, val) = self.col(j);
                idx.iter().zip(val).map(move |(&i, &v)| (i, j, v))
            })
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must equal column count");
        (0..self.rows)
            .map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    /// `M x` for one row, with compensated summation.
    pub fn row_dot_compensated(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        let mut acc = NeumaierSum::default();
        for (&j, &v) in idx.iter().zip(val) {
            acc.add(v * x[j]);
        }
        acc.value()
    }

    /// Largest entry of column `j` over rows accepted by `keep`.
    pub fn col_max_where(&self, j: usize, keep: impl Fn(usize) -> bool) -> f64 {
        let (idx, val) = self.col(j);
        idx.iter()
            .zip(val)
            .filter(|(&i, _)| keep(i))
            .fold(0.0, |m, (_, &v)| f64::max(m, v))
    }

    /// Submatrix on `rows_keep` x `cols_keep` (both given as original indices,
    /// in the order they should appear), with each kept row multiplied by the
    /// matching entry of `row_scale`.
    pub fn select_scaled(&self, rows_keep: &[usize], cols_keep: &[usize], row_scale: &[f64]) -> Self {
        let mut col_new = vec![usize::MAX; self.cols];
        for (k, &j) in cols_keep.iter().enumerate() {
            col_new[j] = k;
        }
        let mut t = Vec::new();
        for (r_new, (&i, &s)) in rows_keep.iter().zip(row_scale).enumerate() {
            let (idx, val) = self.row(i);
            let mut row: Vec<(usize, usize, f64)> = idx
                .iter()
                .zip(val)
                .filter(|(&j, _)| col_new[j] != usize::MAX)
                .map(|(&j, &v)| (r_new, col_new[j], v * s))
                .filter(|&(_, _, v)| v > 0.0)
                .collect();
            row.sort_by_key(|e| e.1);
            t.extend(row);
        }
        Self::from_sorted(rows_keep.len(), cols_keep.len(), &t)
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `x >= 0, P x <= p, C x >= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedInstance {
    num_vars: usize,
    packing: SparseNonnegMatrix,
    packing_rhs: Vec<f64>,
    covering: SparseNonnegMatrix,
    covering_rhs: Vec<f64>,
}

impl MixedInstance {
    pub fn new(
        packing: SparseNonnegMatrix,
        packing_rhs: Vec<f64>,
        covering: SparseNonnegMatrix,
        covering_rhs: Vec<f64>,
    ) -> Result<Self, InstanceError> {
        if packing.cols() != covering.cols() {
            return Err(InstanceError::DimensionMismatch(format!(
                "packing has {} columns, covering has {}",
                packing.cols(),
                covering.cols()
            )));
        }
        if packing_rhs.len() != packing.rows() || covering_rhs.len() != covering.rows() {
            return Err(InstanceError::DimensionMismatch(
                "right-hand side length differs from row count".into(),
            ));
        }
        if packing.rows() + covering.rows() == 0 {
            return Err(InstanceError::NoConstraints);
        }
        for &v in packing_rhs.iter().chain(&covering_rhs) {
            if !v.is_finite() {
                return Err(InstanceError::NonFinite { what: "right-hand side" });
            }
            if v < 0.0 {
                return Err(InstanceError::NegativeRhs { value: v });
            }
        }
        Ok(Self { num_vars: packing.cols(), packing, packing_rhs, covering, covering_rhs })
    }

    /// Convenience constructor from dense rows. Either side may be empty, in
    /// which case `num_vars` comes from the other.
    pub fn from_dense(
        packing: &[Vec<f64>],
        packing_rhs: &[f64],
        covering: &[Vec<f64>],
        covering_rhs: &[f64],
    ) -> Result<Self, InstanceError> {
        let n = packing.first().or(covering.first()).map_or(0, Vec::len);
        let p = if packing.is_empty() {
            SparseNonnegMatrix::zeros(0, n)
        } else {
            SparseNonnegMatrix::from_dense(packing)?
        };
        let c = if covering.is_empty() {
            SparseNonnegMatrix::zeros(0, n)
        } else {
            SparseNonnegMatrix::from_dense(covering)?
        };
        Self::new(p, packing_rhs.to_vec(), c, covering_rhs.to_vec())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn packing(&self) -> &SparseNonnegMatrix {
        &self.packing
    }

    pub fn covering(&self) -> &SparseNonnegMatrix {
        &self.covering
    }

    pub fn packing_rhs(&self) -> &[f64] {
        &self.packing_rhs
    }

    pub fn covering_rhs(&self) -> &[f64] {
        &self.covering_rhs
    }

    /// Total number of constraint rows, `m_p + m_c`.
    pub fn num_rows(&self) -> usize {
        self.packing.rows() + self.covering.rows()
    }

    /// Same constraints with every packing right-hand side multiplied by
    /// `lambda`.
    pub fn with_packing_scaled(&self, lambda: f64) -> Self {
        Self {
            packing_rhs: self.packing_rhs.iter().map(|&p| p * lambda).collect(),
            ..self.clone()
        }
    }

    /// Same constraints with every covering right-hand side multiplied by `s`.
    pub fn with_covering_scaled(&self, s: f64) -> Self {
        Self {
            covering_rhs: self.covering_rhs.iter().map(|&c| c * s).collect(),
            ..self.clone()
        }
    }

    /// Adds packing rows `x_j <= bound` for every variable.
    pub fn with_upper_bounds(&self, bound: f64) -> Result<Self, InstanceError> {
        let base = self.packing.rows();
        let mut t = self.packing.triplets();
        t.extend((0..self.num_vars).map(|j| (base + j, j, 1.0)));
        let packing = SparseNonnegMatrix::from_triplets(base + self.num_vars, self.num_vars, t)?;
        let mut rhs = self.packing_rhs.clone();
        rhs.extend(std::iter::repeat_n(bound, self.num_vars));
        Self::new(packing, rhs, self.covering.clone(), self.covering_rhs.clone())
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            num_vars: self.num_vars,
            packing: Block {
                rows: self.packing.rows(),
                entries: self.packing.triplets(),
                rhs: self.packing_rhs.clone(),
            },
            covering: Block {
                rows: self.covering.rows(),
                entries: self.covering.triplets(),
                rhs: self.covering_rhs.clone(),
            },
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    num_vars: usize,
    packing: Block,
    covering: Block,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Block {
    rows: usize,
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

/// Parses the JSON instance format.
pub fn parse_instance(text: &[u8]) -> Result<MixedInstance, InstanceError> {
    let file: InstanceFile =
        serde_json::from_slice(text).map_err(|e| InstanceError::Json(e.to_string()))?;
    let p = SparseNonnegMatrix::from_triplets(file.packing.rows, file.num_vars, file.packing.entries)?;
    let c =
        SparseNonnegMatrix::from_triplets(file.covering.rows, file.num_vars, file.covering.entries)?;
    MixedInstance::new(p, file.packing.rhs, c, file.covering.rhs)
}

/// Structural reduction shared by [`normalize`] and the solvers' choice of
/// the constraint count.
#[derive(Debug, Clone)]
struct Reduction {
    packing_rows: Vec<usize>,
    covering_rows: Vec<usize>,
    vars: Vec<usize>,
    forced_zero: Vec<usize>,
    unused: Vec<usize>,
    dropped_packing: Vec<usize>,
    dropped_covering: Vec<usize>,
}

fn reduce(inst: &MixedInstance) -> Result<Reduction, InstanceError> {
    let n = inst.num_vars;
    let mut forced = vec![false; n];
    let mut packing_rows = Vec::new();
    let mut dropped_packing = Vec::new();
    for (i, &p) in inst.packing_rhs.iter().enumerate() {
        if p > 0.0 {
            packing_rows.push(i);
        } else {
            dropped_packing.push(i);
            for &j in inst.packing.row(i).0 {
                forced[j] = true;
            }
        }
    }
    let mut covering_rows = Vec::new();
    let mut dropped_covering = Vec::new();
    for (i, &c) in inst.covering_rhs.iter().enumerate() {
        if c > 0.0 {
            covering_rows.push(i);
        } else {
            dropped_covering.push(i);
        }
    }
    // A variable absent from every retained covering row only adds load to
    // packing rows; zero is always at least as good.
    let mut in_cover = vec![false; n];
    for &i in &covering_rows {
        for &j in inst.covering.row(i).0 {
            in_cover[j] = true;
        }
    }
    let mut vars = Vec::new();
    let mut forced_zero = Vec::new();
    let mut unused = Vec::new();
    for j in 0..n {
        if forced[j] {
            forced_zero.push(j);
        } else if !in_cover[j] {
            unused.push(j);
        } else {
            vars.push(j);
        }
    }
    for &i in &covering_rows {
        if !inst.covering.row(i).0.iter().any(|&j| !forced[j]) {
            return Err(InstanceError::TriviallyInfeasible { row: i });
        }
    }
    Ok(Reduction {
        packing_rows,
        covering_rows,
        vars,
        forced_zero,
        unused,
        dropped_packing,
        dropped_covering,
    })
}

/// Instance after removing degenerate rows and useless variables and
/// scaling every retained row to the common right-hand side `rhs`.
#[derive(Debug, Clone)]
pub struct NormalizedInstance {
    rhs: f64,
    num_vars_original: usize,
    packing: SparseNonnegMatrix,
    covering: SparseNonnegMatrix,
    var_map: Vec<usize>,
    packing_rows: Vec<usize>,
    covering_rows: Vec<usize>,
    forced_zero_vars: Vec<usize>,
    unused_vars: Vec<usize>,
    dropped_packing_rows: Vec<usize>,
    dropped_covering_rows: Vec<usize>,
    column_degree: usize,
}

/// Number of rows that survive reduction (the `m` used to pick the
/// normalized right-hand side).
pub fn retained_rows(inst: &MixedInstance) -> Result<usize, InstanceError> {
    let r = reduce(inst)?;
    Ok(r.packing_rows.len() + r.covering_rows.len())
}

/// Reduces and scales `inst` so every right-hand side equals `rhs`.
///
/// Packing rows with `p_i = 0` are removed and every variable they touch is
/// forced to zero; covering rows with `c_i = 0` are removed. Forced-zero
/// variables and variables appearing in no retained covering row are
/// eliminated.
pub fn normalize(inst: &MixedInstance, rhs: f64) -> Result<NormalizedInstance, InstanceError> {
    if !(rhs > 0.0 && rhs.is_finite()) {
        return Err(InstanceError::InvalidParameter(format!("normalized rhs must be positive, got {rhs}")));
    }
    let red = reduce(inst)?;
    // Scale entry-wise as P_ij * N / p_i.
    let packing = scale_exact(&inst.packing, &red.packing_rows, &red.vars, &inst.packing_rhs, rhs);
    let covering = scale_exact(&inst.covering, &red.covering_rows, &red.vars, &inst.covering_rhs, rhs);
    let column_degree =
        (0..red.vars.len()).map(|j| packing.col_len(j) + covering.col_len(j)).max().unwrap_or(0);
    Ok(NormalizedInstance {
        rhs,
        num_vars_original: inst.num_vars,
        packing,
        covering,
        var_map: red.vars,
        packing_rows: red.packing_rows,
        covering_rows: red.covering_rows,
        forced_zero_vars: red.forced_zero,
        unused_vars: red.unused,
        dropped_packing_rows: red.dropped_packing,
        dropped_covering_rows: red.dropped_covering,
        column_degree,
    })
}

fn scale_exact(
    m: &SparseNonnegMatrix,
    rows_keep: &[usize],
    cols_keep: &[usize],
    rhs_orig: &[f64],
    rhs: f64,
) -> SparseNonnegMatrix {
    let mut col_new = vec![usize::MAX; m.cols()];
    for (k, &j) in cols_keep.iter().enumerate() {
        col_new[j] = k;
    }
    let mut t = Vec::with_capacity(m.nnz());
    for (r_new, &i) in rows_keep.iter().enumerate() {
        let (idx, val) = m.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            if col_new[j] != usize::MAX {
                let s = v * rhs / rhs_orig[i];
                if s > 0.0 {
                    t.push((r_new, col_new[j], s));
                }
            }
        }
    }
    // Retained columns keep their relative order, so rows stay sorted.
    SparseNonnegMatrix::from_sorted(rows_keep.len(), cols_keep.len(), &t)
}

impl NormalizedInstance {
    pub fn rhs(&self) -> f64 {
        self.rhs
    }

    pub fn packing(&self) -> &SparseNonnegMatrix {
        &self.packing
    }

    pub fn covering(&self) -> &SparseNonnegMatrix {
        &self.covering
    }

    /// Number of retained variables.
    pub fn num_vars(&self) -> usize {
        self.var_map.len()
    }

    pub fn num_vars_original(&self) -> usize {
        self.num_vars_original
    }

    /// Retained constraint count `m`.
    pub fn num_rows(&self) -> usize {
        self.packing.rows() + self.covering.rows()
    }

    pub fn column_degree(&self) -> usize {
        self.column_degree
    }

    /// Original index of each retained variable.
    pub fn var_map(&self) -> &[usize] {
        &self.var_map
    }

    /// Original index of each retained packing row.
    pub fn packing_rows(&self) -> &[usize] {
        &self.packing_rows
    }

    /// Original index of each retained covering row.
    pub fn covering_rows(&self) -> &[usize] {
        &self.covering_rows
    }

    pub fn forced_zero_vars(&self) -> &[usize] {
        &self.forced_zero_vars
    }

    /// Variables dropped because no retained covering row uses them.
    pub fn unused_vars(&self) -> &[usize] {
        &self.unused_vars
    }

    pub fn dropped_packing_rows(&self) -> &[usize] {
        &self.dropped_packing_rows
    }

    pub fn dropped_covering_rows(&self) -> &[usize] {
        &self.dropped_covering_rows
    }

    /// Lifts a vector over retained variables to original coordinates,
    /// filling eliminated variables with zero. Row scaling leaves variable
    /// units unchanged.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars_original];
        for (&j, &v) in self.var_map.iter().zip(x) {
            out[j] = v;
        }
        out
    }

    /// Restriction of an original-coordinate vector to retained variables.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.var_map.iter().map(|&j| x[j]).collect()
    }
}

/// A generated instance together with the point it was built around.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub instance: MixedInstance,
    pub planted: Vec<f64>,
}

const PLANT_SLACK: f64 = 0.05;

/// Random instance with a planted strictly feasible point: `p = P x* (1 +
/// 0.05)`, `c = C x* (1 - 0.05)`. Every row gets at least one nonzero.
pub fn generate_random_feasible(
    n: usize,
    m_p: usize,
    m_c: usize,
    density: f64,
    seed: u64,
) -> Result<PlantedInstance, InstanceError> {
    if n == 0 || m_p == 0 || m_c == 0 {
        return Err(InstanceError::InvalidParameter("n, m_p and m_c must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(InstanceError::InvalidParameter(format!("density must be in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..n).map(|_| rng.gen_range(0.25..1.75)).collect();
    let sample = |rows: usize, rng: &mut ChaCha8Rng| {
        let mut t = Vec::new();
        for i in 0..rows {
            let forced = rng.gen_range(0..n);
            for j in 0..n {
                if j == forced || rng.gen_bool(density) {
                    t.push((i, j, rng.gen_range(0.05..1.0)));
                }
            }
        }
        SparseNonnegMatrix::from_triplets(rows, n, t)
    };
    let p = sample(m_p, &mut rng)?;
    let c = sample(m_c, &mut rng)?;
    let p_rhs = p.mul_vec(&planted).into_iter().map(|v| v * (1.0 + PLANT_SLACK)).collect();
    let c_rhs = c.mul_vec(&planted).into_iter().map(|v| v * (1.0 - PLANT_SLACK)).collect();
    Ok(PlantedInstance { instance: MixedInstance::new(p, p_rhs, c, c_rhs)?, planted })
}

/// Small random instance with integer coefficients in `0..=max_coeff` and
/// integer right-hand sides in `1..=max_rhs`; it may or may not be feasible.
/// Used with the exact oracle.
pub fn generate_random_tiny(
    n: usize,
    m_p: usize,
    m_c: usize,
    max_coeff: u32,
    max_rhs: u32,
    seed: u64,
) -> Result<MixedInstance, InstanceError> {
    if n == 0 || m_p + m_c == 0 || max_coeff == 0 || max_rhs == 0 {
        return Err(InstanceError::InvalidParameter("tiny generator parameters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |rows: usize| {
        let mut t = Vec::new();
        for i in 0..rows {
            let forced = rng.gen_range(0..n);
            for j in 0..n {
                let v = if j == forced { rng.gen_range(1..=max_coeff) } else { rng.gen_range(0..=max_coeff) };
                if v > 0 {
                    t.push((i, j, f64::from(v)));
                }
            }
        }
        let rhs: Vec<f64> = (0..rows).map(|_| f64::from(rng.gen_range(1..=max_rhs))).collect();
        (t, rhs)
    };
    let (pt, prhs) = sample(m_p);
    let (ct, crhs) = sample(m_c);
    MixedInstance::new(
        SparseNonnegMatrix::from_triplets(m_p, n, pt)?,
        prhs,
        SparseNonnegMatrix::from_triplets(m_c, n, ct)?,
        crhs,
    )
}
