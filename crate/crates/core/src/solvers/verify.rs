use serde::Serialize;

use crate::error::VerifyError;
use crate::instance::MixedInstance;

use super::{SolveOutcome, PACKING_FACTOR};

/// Relative slack on every row check, for rounding in the final sums.
const ROW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyReport {
    pub max_packing_ratio: f64,
    pub min_covering_ratio: f64,
    /// `1 + PACKING_FACTOR * eps`.
    pub packing_limit: f64,
}

/// Checks a feasible outcome against the original instance.
pub fn verify_outcome(inst: &MixedInstance, outcome: &SolveOutcome, epsilon: f64) -> Result<VerifyReport, VerifyError> {
    if !outcome.is_feasible() {
        return Err(VerifyError::NothingToVerify);
    }
    verify_point(inst, &outcome.x, epsilon)
}

/// Checks `x >= 0`, `Cx >= c` and `Px <= (1 + PACKING_FACTOR * eps) p`, each
/// row up to a relative `1e-9`. Rows with zero right-hand side need `(Px)_i = 0`.
pub fn verify_point(inst: &MixedInstance, x: &[f64], epsilon: f64) -> Result<VerifyReport, VerifyError> {
    if x.len() != inst.num_vars() {
        return Err(VerifyError::WrongLength { got: x.len(), expected: inst.num_vars() });
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(VerifyError::NegativeCoordinate { index, value });
    }
    let limit = 1.0 + PACKING_FACTOR * epsilon;
    let mut min_c = f64::INFINITY;
    for (row, &c) in inst.covering_rhs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let ratio = inst.covering().row_dot_compensated(row, x) / c;
        if ratio < 1.0 - ROW_SLACK {
            return Err(VerifyError::CoveringViolated { row, ratio });
        }
        min_c = min_c.min(ratio);
    }
    let mut max_p: f64 = 0.0;
    for (row, &p) in inst.packing_rhs().iter().enumerate() {
        let dot = inst.packing().row_dot_compensated(row, x);
        let ratio = if p == 0.0 {
            if dot > 0.0 { f64::INFINITY } else { 0.0 }
        } else {
            dot / p
        };
        if ratio > limit * (1.0 + ROW_SLACK) {
            return Err(VerifyError::PackingViolated { row, ratio, limit });
        }
        max_p = max_p.max(ratio);
    }
    Ok(VerifyReport { max_packing_ratio: max_p, min_covering_ratio: min_c, packing_limit: limit })
}
