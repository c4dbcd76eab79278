//! Runtime tracking of the two proof potentials.
//!
//! `phi = lmax(Px) - rho * lmin(Cx)` with `rho = (1+eps)^2 / (1-eps/2)` must
//! never increase, and `psi = sum (Px)_i + sum_active ((Cx)_i - N - eps)` must
//! grow by at least `eps` per increment. Phase starts record `ln g`, which
//! must grow by a factor of at least `1+eps` per phase.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::potentials::PotentialState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    #[default]
    Off,
    /// Online invariant checking only.
    Summary,
    /// Online checking plus one stored record per increment.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: u64,
    /// Incremented variable, `None` for a multi-variable (parallel) step or
    /// the initial record.
    pub var: Option<usize>,
    pub phi: f64,
    pub psi: f64,
    pub lmax_px: f64,
    pub lmin_cx: f64,
    pub log_g: f64,
    pub phase: u64,
    /// `ln(local_j/g)` (or `ln ratio_j` for the generic solver) at the moment
    /// of the increment; the maximum over incremented variables for a
    /// multi-variable step.
    pub log_eligibility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub phase: u64,
    pub log_g: f64,
    pub increments: u64,
}

#[derive(Debug, Clone)]
pub struct DiagnosticTrace {
    mode: TraceMode,
    epsilon: f64,
    rho: f64,
    records: Vec<TraceRecord>,
    phases: Vec<PhaseRecord>,
    increments: u64,
    last_phi: Option<f64>,
    last_psi: Option<f64>,
    max_phi_increase: f64,
    min_psi_gain: f64,
    max_log_eligibility: f64,
}

impl DiagnosticTrace {
    pub fn new(mode: TraceMode, epsilon: f64) -> Self {
        Self {
            mode,
            epsilon,
            rho: (1.0 + epsilon).powi(2) / (1.0 - epsilon / 2.0),
            records: Vec::new(),
            phases: Vec::new(),
            increments: 0,
            last_phi: None,
            last_psi: None,
            max_phi_increase: f64::NEG_INFINITY,
            min_psi_gain: f64::INFINITY,
            max_log_eligibility: f64::NEG_INFINITY,
        }
    }

    pub fn mode(&self) -> TraceMode {
        self.mode
    }

    pub fn is_enabled(&self) -> bool {
        self.mode != TraceMode::Off
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn phi(&self, state: &PotentialState<'_>) -> f64 {
        let lmin = state.lmin_cx();
        if lmin == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        state.lmax_px() - self.rho * lmin
    }

    /// Records the state before the first increment.
    pub fn start(&mut self, state: &PotentialState<'_>) {
        if !self.is_enabled() {
            return;
        }
        let phi = self.phi(state);
        let psi = state.psi(self.epsilon);
        self.last_phi = Some(phi);
        self.last_psi = Some(psi);
        self.push(state, 0, None, phi, psi, f64::NEG_INFINITY);
    }

    pub fn phase_start(&mut self, log_g: f64) {
        if !self.is_enabled() {
            return;
        }
        self.phases.push(PhaseRecord { phase: self.phases.len() as u64 + 1, log_g, increments: 0 });
    }

    /// Records the state after an increment and any deletions it caused.
    pub fn increment(&mut self, state: &PotentialState<'_>, var: Option<usize>, log_eligibility: f64) {
        if !self.is_enabled() {
            return;
        }
        self.increments += 1;
        let phi = self.phi(state);
        let psi = state.psi(self.epsilon);
        if let Some(prev) = self.last_phi {
            let inc = if phi == f64::NEG_INFINITY { f64::NEG_INFINITY } else { phi - prev };
            self.max_phi_increase = self.max_phi_increase.max(inc);
        }
        if let Some(prev) = self.last_psi {
            self.min_psi_gain = self.min_psi_gain.min(psi - prev);
        }
        self.max_log_eligibility = self.max_log_eligibility.max(log_eligibility);
        self.last_phi = Some(phi);
        self.last_psi = Some(psi);
        if let Some(p) = self.phases.last_mut() {
            p.increments += 1;
        }
        self.push(state, self.increments, var, phi, psi, log_eligibility);
    }

    fn push(&mut self, state: &PotentialState<'_>, k: u64, var: Option<usize>, phi: f64, psi: f64, elig: f64) {
        if self.mode != TraceMode::Full {
            return;
        }
        self.records.push(TraceRecord {
            k,
            var,
            phi,
            psi,
            lmax_px: state.lmax_px(),
            lmin_cx: state.lmin_cx(),
            log_g: self.phases.last().map_or(f64::NAN, |p| p.log_g),
            phase: self.phases.len() as u64,
            log_eligibility: elig,
        });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn phases(&self) -> &[PhaseRecord] {
        &self.phases
    }

    pub fn increments(&self) -> u64 {
        self.increments
    }

    /// Largest single-step change of phi (`-inf` when nothing was recorded).
    pub fn max_phi_increase(&self) -> f64 {
        self.max_phi_increase
    }

    /// Smallest single-step change of psi (`+inf` when nothing was recorded).
    pub fn min_psi_gain(&self) -> f64 {
        self.min_psi_gain
    }

    pub fn max_log_eligibility(&self) -> f64 {
        self.max_log_eligibility
    }

    pub fn phi_non_increasing(&self, slack: f64) -> bool {
        self.max_phi_increase <= slack
    }

    pub fn psi_grows(&self, slack: f64) -> bool {
        self.min_psi_gain >= self.epsilon - slack
    }

    /// Every increment respected the `1+eps` eligibility threshold.
    pub fn eligibility_respected(&self) -> bool {
        self.max_log_eligibility <= self.epsilon.ln_1p() + 1e-12
    }

    /// Smallest ratio `g_{k+1}/g_k` between consecutive phase starts.
    pub fn min_phase_growth(&self) -> Option<f64> {
        self.phases.windows(2).map(|w| (w[1].log_g - w[0].log_g).exp()).reduce(f64::min)
    }

    pub fn phase_growth_respected(&self) -> bool {
        self.phases
            .windows(2)
            .all(|w| w[1].log_g - w[0].log_g >= self.epsilon.ln_1p() * (1.0 - 1e-9))
    }

    /// `1 + ln(g_last/g_first) / ln(1+eps)`.
    pub fn phase_count_bound(&self) -> f64 {
        match (self.phases.first(), self.phases.last()) {
            (Some(a), Some(b)) => 1.0 + (b.log_g - a.log_g) / self.epsilon.ln_1p(),
            _ => 0.0,
        }
    }

    pub fn max_increments_per_phase(&self) -> u64 {
        self.phases.iter().map(|p| p.increments).max().unwrap_or(0)
    }

    /// One CSV line per stored record.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,j,phi,psi,lmax_px,lmin_cx,log_g,phase")?;
        for r in &self.records {
            let j = r.var.map_or_else(|| "multi".to_string(), |j| j.to_string());
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.k, j, r.phi, r.psi, r.lmax_px, r.lmin_cx, r.log_g, r.phase
            )?;
        }
        Ok(())
    }
}
