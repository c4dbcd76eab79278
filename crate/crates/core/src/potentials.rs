//! Smoothed max/min potentials and the solver state that maintains them.
//!
//! `lmax y = ln sum_i e^{y_i}` and `lmin y = -ln sum_i e^{-y_i}`. Row values
//! reach the normalized right-hand side `N`, which for small epsilon is far
//! beyond the range of `f64::exp`, so every exponential sum is carried with a
//! log-domain shift and every per-column quantity is evaluated as a shifted
//! log-sum-exp.

use crate::error::PotentialError;
use crate::instance::{NormalizedInstance, SparseNonnegMatrix};

/// `ln sum_i e^{y_i}`, stable for any finite input.
pub fn lmax(y: &[f64]) -> Result<f64, PotentialError> {
    let shift = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if y.is_empty() {
        return Err(PotentialError::Empty);
    }
    let s: f64 = y.iter().map(|&v| (v - shift).exp()).sum();
    Ok(shift + s.ln())
}

/// `-ln sum_i e^{-y_i}`.
pub fn lmin(y: &[f64]) -> Result<f64, PotentialError> {
    let shift = y.iter().copied().fold(f64::INFINITY, f64::min);
    if y.is_empty() {
        return Err(PotentialError::Empty);
    }
    let s: f64 = y.iter().map(|&v| (shift - v).exp()).sum();
    Ok(shift - s.ln())
}

/// Gradient of `lmax` at `y`: the softmax weights `e^{y_i} / sum e^{y_k}`.
/// The gradient of `lmin` at `y` is `gradient_weights(-y)`.
pub fn gradient_weights(y: &[f64]) -> Result<Vec<f64>, PotentialError> {
    if y.is_empty() {
        return Err(PotentialError::Empty);
    }
    let shift = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = y.iter().map(|&v| (v - shift).exp()).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / s).collect())
}

/// `ln sum_k a_k e^{y_k}` over pairs with `a_k > 0`; `-inf` when there are none.
pub fn log_weighted_sum_exp(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let shift = pairs.clone().map(|(_, y)| y).fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = pairs.map(|(a, y)| a * (y - shift).exp()).sum();
    shift + s.ln()
}

/// Which smoothed function a column derivative refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `d lmax(M x) / d x_j`
    Max,
    /// `d lmin(M x) / d x_j`
    Min,
}

/// `sum_i M_ij e^{±(Mx)_i} / sum_i e^{±(Mx)_i}` over the rows admitted by
/// `active` (all rows when `None`). Zero for an empty column.
pub fn column_derivative(
    m: &SparseNonnegMatrix,
    mx: &[f64],
    j: usize,
    sign: Sign,
    active: Option<&[bool]>,
) -> f64 {
    let s = match sign {
        Sign::Max => 1.0,
        Sign::Min => -1.0,
    };
    let keep = |i: usize| active.is_none_or(|a| a[i]);
    let (idx, val) = m.col(j);
    let num = log_weighted_sum_exp(
        idx.iter().zip(val).filter(|(&i, _)| keep(i)).map(|(&i, &v)| (v, s * mx[i])),
    );
    if num == f64::NEG_INFINITY {
        return 0.0;
    }
    let den = log_weighted_sum_exp((0..mx.len()).filter(|&i| keep(i)).map(|i| (1.0, s * mx[i])));
    (num - den).exp()
}

// Exponential sums are re-anchored once they drift this far from the shift.
const SUM_CEILING: f64 = (1u64 << 40) as f64;
const SUM_FLOOR_RATIO: f64 = 1.0 / 16.0;
const FULL_REFRESH_PERIOD: u64 = 1 << 16;

/// Current iterate with exact row values and shifted exponential sums over
/// the packing rows and the active covering rows.
#[derive(Debug, Clone)]
pub struct PotentialState<'a> {
    inst: &'a NormalizedInstance,
    x: Vec<f64>,
    px: Vec<f64>,
    cx: Vec<f64>,
    active: Vec<bool>,
    active_count: usize,
    shift_p: f64,
    sum_p: f64,
    shift_c: f64,
    sum_c: f64,
    sum_c_anchor: f64,
    total_px: f64,
    total_cx_active: f64,
    updates_since_full: u64,
}

impl<'a> PotentialState<'a> {
    pub fn new(inst: &'a NormalizedInstance, x0: Vec<f64>) -> Self {
        assert_eq!(x0.len(), inst.num_vars());
        debug_assert!(x0.iter().all(|&v| v >= 0.0));
        let mut s = Self {
            inst,
            x: x0,
            px: vec![0.0; inst.packing().rows()],
            cx: vec![0.0; inst.covering().rows()],
            active: vec![true; inst.covering().rows()],
            active_count: inst.covering().rows(),
            shift_p: 0.0,
            sum_p: 0.0,
            shift_c: 0.0,
            sum_c: 0.0,
            sum_c_anchor: 0.0,
            total_px: 0.0,
            total_cx_active: 0.0,
            updates_since_full: 0,
        };
        s.full_refresh();
        s
    }

    pub fn instance(&self) -> &'a NormalizedInstance {
        self.inst
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn into_x(self) -> Vec<f64> {
        self.x
    }

    pub fn px(&self) -> &[f64] {
        &self.px
    }

    /// Covering row values, including rows that have been deactivated.
    pub fn cx(&self) -> &[f64] {
        &self.cx
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn max_px(&self) -> f64 {
        self.px.iter().copied().fold(0.0, f64::max)
    }

    /// Minimum over active covering rows, `+inf` when none remain.
    pub fn min_active_cx(&self) -> f64 {
        self.cx
            .iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .fold(f64::INFINITY, |m, (&v, _)| m.min(v))
    }

    /// `lmax(P x)`, `-inf` without packing rows.
    pub fn lmax_px(&self) -> f64 {
        if self.px.is_empty() {
            f64::NEG_INFINITY
        } else {
            self.shift_p + self.sum_p.ln()
        }
    }

    /// `lmin(C x)` over active rows, `+inf` when none remain.
    pub fn lmin_cx(&self) -> f64 {
        if self.active_count == 0 {
            f64::INFINITY
        } else {
            -(self.shift_c + self.sum_c.ln())
        }
    }

    /// `ln global(x) = ln sum e^{(Px)_i} - ln sum_active e^{-(Cx)_i}`.
    pub fn log_global(&self) -> f64 {
        self.lmax_px() + self.lmin_cx()
    }

    /// `sum_i (Px)_i + sum_{active i} ((Cx)_i - N - eps)`.
    pub fn psi(&self, epsilon: f64) -> f64 {
        self.total_px + self.total_cx_active - self.active_count as f64 * (self.inst.rhs() + epsilon)
    }

    /// `ln sum_i P_ij e^{(Px)_i}`.
    pub fn log_packing_column(&self, j: usize) -> f64 {
        let (idx, val) = self.inst.packing().col(j);
        log_weighted_sum_exp(idx.iter().zip(val).map(|(&i, &v)| (v, self.px[i])))
    }

    /// `ln sum_{active i} C_ij e^{-(Cx)_i}`.
    pub fn log_covering_column(&self, j: usize) -> f64 {
        let (idx, val) = self.inst.covering().col(j);
        log_weighted_sum_exp(
            idx.iter().zip(val).filter(|(&i, _)| self.active[i]).map(|(&i, &v)| (v, -self.cx[i])),
        )
    }

    /// `ln local_j(x)`; `+inf` when column `j` has no active covering row,
    /// `-inf` when it has no packing entry (and some active covering row).
    pub fn log_local(&self, j: usize) -> f64 {
        let den = self.log_covering_column(j);
        if den == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        self.log_packing_column(j) - den
    }

    /// `d lmax(Px) / d x_j`.
    pub fn packing_derivative(&self, j: usize) -> f64 {
        let num = self.log_packing_column(j);
        if num == f64::NEG_INFINITY {
            return 0.0;
        }
        (num - self.lmax_px()).exp()
    }

    /// `d lmin(Cx) / d x_j` over active covering rows.
    pub fn covering_derivative(&self, j: usize) -> f64 {
        let num = self.log_covering_column(j);
        if num == f64::NEG_INFINITY {
            return 0.0;
        }
        (num + self.lmin_cx()).exp()
    }

    /// `ln ratio_j(x) = ln local_j(x) - ln global(x)`, with the same
    /// sentinels as [`Self::log_local`].
    pub fn log_ratio(&self, j: usize) -> f64 {
        log_quotient(self.log_local(j), self.log_global())
    }

    /// `ratio_j(x)`: `+inf` when no active covering row touches `j`, `0`
    /// when no packing row does.
    pub fn ratio(&self, j: usize) -> f64 {
        self.log_ratio(j).exp()
    }

    /// `(ln local_j for every j, ln global)`.
    pub fn log_local_and_global(&self) -> (Vec<f64>, f64) {
        ((0..self.x.len()).map(|j| self.log_local(j)).collect(), self.log_global())
    }

    /// `(local_j for every j, global)` in linear scale; only meaningful while
    /// the exponents are within `f64` range.
    pub fn local_and_global(&self) -> (Vec<f64>, f64) {
        let (l, g) = self.log_local_and_global();
        (l.into_iter().map(f64::exp).collect(), g.exp())
    }

    /// Largest coefficient of column `j` over packing rows and active
    /// covering rows.
    pub fn column_max(&self, j: usize) -> f64 {
        let p = self.inst.packing().col_max_where(j, |_| true);
        let c = self.inst.covering().col_max_where(j, |i| self.active[i]);
        p.max(c)
    }

    /// Single-coordinate step: `eps / column_max(j)`, so the largest row
    /// increase is exactly `eps`. `None` for a column with no live entry.
    pub fn step_size_single(&self, j: usize, epsilon: f64) -> Option<f64> {
        let m = self.column_max(j);
        (m > 0.0).then(|| epsilon / m)
    }

    /// `x_j += alpha`, updating only the rows of column `j`.
    pub fn increment_single(&mut self, j: usize, alpha: f64) {
        debug_assert!(alpha >= 0.0);
        self.x[j] += alpha;
        let inst = self.inst;
        let (idx, val) = inst.packing().col(j);
        for (&i, &v) in idx.iter().zip(val) {
            let old = self.px[i];
            let new = old + v * alpha;
            self.px[i] = new;
            self.total_px += new - old;
            self.sum_p += (new - self.shift_p).exp() - (old - self.shift_p).exp();
        }
        let (idx, val) = inst.covering().col(j);
        for (&i, &v) in idx.iter().zip(val) {
            let old = self.cx[i];
            let new = old + v * alpha;
            self.cx[i] = new;
            if self.active[i] {
                self.total_cx_active += new - old;
                self.sum_c += (-new - self.shift_c).exp() - (-old - self.shift_c).exp();
            }
        }
        self.after_update();
    }

    /// `x += alpha` for a dense step, given the precomputed row increments
    /// `P alpha` and `C alpha`. Sums are rebuilt from scratch since every row
    /// may move.
    pub fn increment_dense(&mut self, alpha: &[f64], p_alpha: &[f64], c_alpha: &[f64]) {
        for (x, a) in self.x.iter_mut().zip(alpha) {
            *x += a;
        }
        for (v, d) in self.px.iter_mut().zip(p_alpha) {
            *v += d;
        }
        for (v, d) in self.cx.iter_mut().zip(c_alpha) {
            *v += d;
        }
        self.updates_since_full += 1;
        if self.updates_since_full >= FULL_REFRESH_PERIOD {
            self.full_refresh();
        } else {
            self.refresh_sums();
        }
    }

    /// Removes covering row `i` from the active set.
    pub fn deactivate(&mut self, i: usize) {
        if !self.active[i] {
            return;
        }
        self.active[i] = false;
        self.active_count -= 1;
        self.total_cx_active -= self.cx[i];
        self.sum_c -= (-self.cx[i] - self.shift_c).exp();
        self.after_update();
    }

    /// Deactivates every active covering row with `(Cx)_i >= N` among the
    /// rows of column `j` (or all rows when `j` is `None`). Returns the
    /// number deactivated.
    pub fn deactivate_satisfied(&mut self, j: Option<usize>) -> usize {
        let n = self.inst.rhs();
        let rows: Vec<usize> = match j {
            Some(j) => self.inst.covering().col(j).0.to_vec(),
            None => (0..self.cx.len()).collect(),
        };
        let mut count = 0;
        for i in rows {
            if self.active[i] && self.cx[i] >= n {
                self.deactivate(i);
                count += 1;
            }
        }
        count
    }

    fn after_update(&mut self) {
        self.updates_since_full += 1;
        if self.updates_since_full >= FULL_REFRESH_PERIOD {
            self.full_refresh();
        } else if self.sum_p > SUM_CEILING
            || (self.active_count > 0
                && (self.sum_c < self.sum_c_anchor * SUM_FLOOR_RATIO || self.sum_c > SUM_CEILING))
        {
            self.refresh_sums();
        }
    }

    /// Recomputes row values from `x` and then every sum.
    pub fn full_refresh(&mut self) {
        let inst = self.inst;
        let px: Vec<f64> =
            (0..inst.packing().rows()).map(|i| inst.packing().row_dot_compensated(i, &self.x)).collect();
        let cx: Vec<f64> =
            (0..inst.covering().rows()).map(|i| inst.covering().row_dot_compensated(i, &self.x)).collect();
        debug_assert!(rel_close(&self.px, &px, 1e-9) || self.updates_since_full == 0);
        debug_assert!(rel_close(&self.cx, &cx, 1e-9) || self.updates_since_full == 0);
        self.px = px;
        self.cx = cx;
        self.updates_since_full = 0;
        self.refresh_sums();
    }

    /// Re-anchors the shifts at the current extremes and resums.
    pub fn refresh_sums(&mut self) {
        self.shift_p = self.px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if self.shift_p == f64::NEG_INFINITY {
            self.shift_p = 0.0;
        }
        self.sum_p = self.px.iter().map(|&v| (v - self.shift_p).exp()).sum();
        self.total_px = self.px.iter().sum();
        let active = || self.cx.iter().zip(&self.active).filter(|(_, &a)| a).map(|(&v, _)| v);
        self.shift_c = active().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
        if self.shift_c == f64::NEG_INFINITY {
            self.shift_c = 0.0;
        }
        self.sum_c = active().map(|v| (-v - self.shift_c).exp()).sum();
        self.total_cx_active = active().sum();
        self.sum_c_anchor = self.sum_c;
    }
}

/// `a - b` for logs of nonnegative quantities, with `ln(0/0)` and
/// `ln(x/0)` mapped to the sentinels the eligibility rules expect.
pub fn log_quotient(log_num: f64, log_den: f64) -> f64 {
    if log_num == f64::INFINITY {
        f64::INFINITY
    } else if log_num == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if log_den == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        log_num - log_den
    }
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{normalize, MixedInstance};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lmax_examples() {
        assert!(close(lmax(&[0.0, 0.0]).unwrap(), std::f64::consts::LN_2, 1e-15));
        assert_eq!(lmax(&[5000.0]).unwrap(), 5000.0);
        assert_eq!(lmax(&[-3.25]).unwrap(), -3.25);
        assert_eq!(lmax(&[1000.0, 0.0]).unwrap(), 1000.0);
        assert_eq!(lmax(&[]), Err(PotentialError::Empty));
    }

    #[test]
    fn lmin_examples() {
        assert!(close(lmin(&[0.0, 0.0]).unwrap(), -std::f64::consts::LN_2, 1e-15));
        assert_eq!(lmin(&[5000.0]).unwrap(), 5000.0);
        assert_eq!(lmin(&[]), Err(PotentialError::Empty));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(gradient_weights(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let g = gradient_weights(&[3f64.ln(), 0.0]).unwrap();
        assert!(close(g[0], 0.75, 1e-15) && close(g[1], 0.25, 1e-15));
        assert!(gradient_weights(&[]).is_err());
    }

    fn single(p: f64, c: f64, rhs: f64) -> NormalizedInstance {
        let inst = MixedInstance::from_dense(&[vec![p]], &[rhs], &[vec![c]], &[rhs]).unwrap();
        normalize(&inst, rhs).unwrap()
    }

    #[test]
    fn derivatives_of_single_entry() {
        let norm = single(1.0, 1.0, 1.0);
        let st = PotentialState::new(&norm, vec![0.0]);
        assert!(close(st.packing_derivative(0), 1.0, 1e-15));
        assert!(close(st.ratio(0), 1.0, 1e-15));
        let (local, global) = st.local_and_global();
        assert!(close(local[0], 1.0, 1e-15) && close(global, 1.0, 1e-15));
    }

    #[test]
    fn identical_rows_derivative_is_one() {
        let inst = MixedInstance::from_dense(
            &[vec![1.0], vec![1.0]],
            &[1.0, 1.0],
            &[vec![1.0]],
            &[1.0],
        )
        .unwrap();
        let norm = normalize(&inst, 1.0).unwrap();
        let mut st = PotentialState::new(&norm, vec![0.0]);
        st.increment_single(0, 0.37);
        assert!(close(st.packing_derivative(0), 1.0, 1e-15));
    }

    #[test]
    fn ratio_sentinels() {
        // column 1 has no packing entry; column 0 loses its covering row
        let inst = MixedInstance::from_dense(
            &[vec![1.0, 0.0]],
            &[1.0],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 1.0],
        )
        .unwrap();
        let norm = normalize(&inst, 1.0).unwrap();
        let mut st = PotentialState::new(&norm, vec![0.0, 0.0]);
        assert_eq!(st.ratio(1), 0.0);
        st.deactivate(0);
        assert_eq!(st.ratio(0), f64::INFINITY);
        assert_eq!(st.log_local(0), f64::INFINITY);
    }

    #[test]
    fn step_size_excludes_deactivated_rows() {
        let inst = MixedInstance::from_dense(
            &[vec![1.0]],
            &[1.0],
            &[vec![10.0], vec![0.5]],
            &[1.0, 1.0],
        )
        .unwrap();
        let norm = normalize(&inst, 1.0).unwrap();
        let mut st = PotentialState::new(&norm, vec![0.0]);
        assert!(close(st.step_size_single(0, 0.1).unwrap(), 0.01, 1e-17));
        st.deactivate(0);
        assert!(close(st.step_size_single(0, 0.1).unwrap(), 0.1, 1e-17));
    }

    #[test]
    fn shifted_sums_survive_huge_exponents() {
        let norm = single(1.0, 1.0, 1.0);
        let mut st = PotentialState::new(&norm, vec![0.0]);
        for _ in 0..2000 {
            st.increment_single(0, 2.5);
        }
        assert!(close(st.lmax_px(), 5000.0, 1e-9));
        assert!(close(st.lmin_cx(), 5000.0, 1e-9));
        assert!(close(st.ratio(0), 1.0, 1e-12));
        assert!(st.lmax_px().is_finite());
    }
}
