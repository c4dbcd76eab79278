//! Browser bindings for the demo page. Every export returns a JSON string;
//! the plain functions in [`demo`] do the work and also run natively.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Tomographic reconstruction of a generated phantom.
#[wasm_bindgen]
pub fn reconstruct(size: usize, random: bool, seed: u32, angles: &str, epsilon: f64) -> Result<String, JsError> {
    js(demo::reconstruct(size, random, seed, angles, epsilon))
}

/// Potential curves of the three solvers on one random feasible instance.
#[wasm_bindgen]
pub fn potential_curves(vars: usize, rows: usize, density: f64, seed: u32, epsilon: f64) -> Result<String, JsError> {
    js(demo::potential_curves(vars, rows, density, seed, epsilon))
}

/// Subproblem sequence of the optimizer.
#[wasm_bindgen]
pub fn optimize_curve(vars: usize, rows: usize, density: f64, seed: u32, epsilon: f64) -> Result<String, JsError> {
    js(demo::optimize_curve(vars, rows, density, seed, epsilon))
}
