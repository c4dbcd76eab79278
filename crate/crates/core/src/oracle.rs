//! Exact reference answers for tiny instances.
//!
//! Feasibility is decided by enumerating candidate vertices in exact
//! rational arithmetic. The region `{x >= 0, Px <= p, Cx >= c}` contains no
//! line, so it is empty or has a vertex, and every vertex is the solution of
//! some `n` linearly independent tight constraints.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::OracleError;
use crate::instance::MixedInstance;
use crate::optimizer::initial_bound;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyInstanceLimit {
    pub max_vars: usize,
    pub max_rows: usize,
    /// Largest accepted coefficient or right-hand side.
    pub value_cap: f64,
}

impl Default for TinyInstanceLimit {
    fn default() -> Self {
        Self { max_vars: 3, max_rows: 6, value_cap: 1e6 }
    }
}

impl TinyInstanceLimit {
    pub fn check(&self, inst: &MixedInstance) -> Result<(), OracleError> {
        if inst.num_vars() > self.max_vars {
            return Err(OracleError::TooLarge(format!("{} variables > {}", inst.num_vars(), self.max_vars)));
        }
        if inst.num_rows() > self.max_rows {
            return Err(OracleError::TooLarge(format!("{} rows > {}", inst.num_rows(), self.max_rows)));
        }
        let too_big = inst
            .packing()
            .triplets()
            .iter()
            .chain(&inst.covering().triplets())
            .map(|t| t.2)
            .chain(inst.packing_rhs().iter().copied())
            .chain(inst.covering_rhs().iter().copied())
            .any(|v| v > self.value_cap);
        if too_big {
            return Err(OracleError::TooLarge(format!("value above cap {}", self.value_cap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

/// Row `a . x <= b` in exact arithmetic.
struct Halfspace {
    a: Vec<BigRational>,
    b: BigRational,
}

// Covering rows come first so that witnesses prefer tight covering rows.
fn halfspaces(inst: &MixedInstance) -> Vec<Halfspace> {
    let n = inst.num_vars();
    let mut out = Vec::new();
    for i in 0..inst.covering().rows() {
        let mut a = vec![BigRational::zero(); n];
        let (cols, vals) = inst.covering().row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            a[j] = -rat(v);
        }
        out.push(Halfspace { a, b: -rat(inst.covering_rhs()[i]) });
    }
    for i in 0..inst.packing().rows() {
        let mut a = vec![BigRational::zero(); n];
        let (cols, vals) = inst.packing().row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            a[j] = rat(v);
        }
        out.push(Halfspace { a, b: rat(inst.packing_rhs()[i]) });
    }
    for j in 0..n {
        let mut a = vec![BigRational::zero(); n];
        a[j] = -BigRational::from_integer(BigInt::from(1));
        out.push(Halfspace { a, b: BigRational::zero() });
    }
    out
}

/// Solves the square system by Gaussian elimination; `None` if singular.
fn solve_exact(mut rows: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in 0..n {
            if r != col && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &rows[col][col];
                for k in col..n {
                    let t = &f * &rows[col][k];
                    rows[r][k] -= t;
                }
                let t = &f * &rhs[col];
                rhs[r] -= t;
            }
        }
    }
    Some((0..n).map(|i| &rhs[i] / &rows[i][i]).collect())
}

fn combinations(k: usize, n: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        if visit(&idx) {
            return;
        }
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + n - k) else { return };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Decides `exists x >= 0 : Px <= p, Cx >= c` exactly. The witness is the
/// exact vertex rounded to `f64`.
pub fn exact_feasible_tiny(inst: &MixedInstance) -> Result<Feasibility, OracleError> {
    TinyInstanceLimit::default().check(inst)?;
    let n = inst.num_vars();
    if n == 0 {
        let ok = inst.covering_rhs().iter().all(|&c| c <= 0.0);
        return Ok(if ok { Feasibility::Feasible(Vec::new()) } else { Feasibility::Infeasible });
    }
    let hs = halfspaces(inst);
    let satisfies = |x: &[BigRational]| {
        hs.iter().all(|h| {
            let lhs: BigRational = h.a.iter().zip(x).map(|(a, v)| a * v).sum();
            lhs <= h.b
        })
    };
    let mut witness = None;
    combinations(n, hs.len(), |pick| {
        let rows = pick.iter().map(|&k| hs[k].a.clone()).collect();
        let rhs = pick.iter().map(|&k| hs[k].b.clone()).collect();
        if let Some(x) = solve_exact(rows, rhs) {
            if satisfies(&x) {
                witness = Some(x);
                return true;
            }
        }
        false
    });
    Ok(match witness {
        Some(x) => Feasibility::Feasible(
            x.iter().map(|v| if v.is_negative() { 0.0 } else { v.to_f64().unwrap_or(f64::NAN) }).collect(),
        ),
        None => Feasibility::Infeasible,
    })
}

/// `lambda* = min { lambda : exists x >= 0, Px <= lambda p, Cx >= c }` by
/// bisection over `[lambda_init / m^2, lambda_init]` with the exact
/// feasibility test, to relative width `1e-9`.
pub fn brute_lambda_star(inst: &MixedInstance) -> Result<f64, OracleError> {
    TinyInstanceLimit::default().check(inst)?;
    let (hi0, _) = initial_bound(inst)?;
    if hi0 == 0.0 {
        return Ok(0.0);
    }
    let m = (inst.num_rows() as f64).max(2.0);
    let (mut lo, mut hi) = (hi0 / (m * m), hi0);
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if exact_feasible_tiny(&inst.with_packing_scaled(mid))?.is_feasible() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Central differences `(f(y + h e_k) - f(y - h e_k)) / 2h`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, point: &[f64], h: f64) -> Vec<f64> {
    let mut y = point.to_vec();
    (0..point.len())
        .map(|k| {
            y[k] = point[k] + h;
            let up = f(&y);
            y[k] = point[k] - h;
            let down = f(&y);
            y[k] = point[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}
