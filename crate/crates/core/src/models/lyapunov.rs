use super::{capacity, ArrivalModel, PolicySpec, RateMap, Scheduler, SystemParams};
use crate::error::{config_err, domain_err, Result};
use crate::tolerance::LATTICE;

use std::sync::Arc;

/// Drift-plus-penalty power control with queue quantization δ.
///
/// P = ((2BT/(VA))·(⌊q/δ⌋δ + λ) − N0·B/g)^+.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovPolicy {
    params: SystemParams,
    v: f64,
    delta: u32,
    lambda: f64,
}

impl LyapunovPolicy {
    pub fn new(params: &SystemParams, v: f64, delta: u32, arrival: &ArrivalModel) -> Result<Self> {
        let lambda = match arrival {
            ArrivalModel::Deterministic { lambda } => *lambda,
            ArrivalModel::Pmf { .. } => {
                return Err(config_err("the Lyapunov policy is defined for deterministic arrivals"))
            }
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(config_err(format!("V must be positive, got {v}")));
        }
        if delta == 0 {
            return Err(config_err("delta must be a positive integer"));
        }
        Ok(LyapunovPolicy { params: *params, v, delta, lambda })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    pub fn delta(&self) -> u32 {
        self.delta
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// ⌊q/δ⌋·δ.
    pub fn backlog_level(&self, q: f64) -> f64 {
        let d = self.delta as f64;
        ((q / d) + LATTICE).floor() * d
    }

    /// Gain below which no power is spent at backlog level `m`:
    /// ψ_m = N0·V·A / (2T(m + λ)).
    pub fn cutoff_gain(&self, m: f64) -> f64 {
        let p = &self.params;
        p.noise_psd_w_per_hz * self.v * p.packet_bits / (2.0 * p.slot_s * (m + self.lambda))
    }

    pub fn power(&self, q: f64, gain: f64) -> Result<f64> {
        if !(gain > 0.0) {
            return Err(domain_err(format!("Lyapunov power needs a positive gain, got {gain}")));
        }
        Ok(self.power_at_level(self.backlog_level(q), gain))
    }

    fn power_at_level(&self, m: f64, gain: f64) -> f64 {
        let p = &self.params;
        let drive = 2.0 * p.blocklength() / (self.v * p.packet_bits) * (m + self.lambda);
        (drive - p.noise_power_w() / gain).max(0.0)
    }

    /// The rate map used on [ωδ, (ω+1)δ) (and on [ωδ, ∞) in the large-queue analysis).
    pub fn segment(&self, omega: u32) -> LyapunovSegment {
        LyapunovSegment { pol: *self, level: omega as f64 * self.delta as f64 }
    }

    /// Piecewise form with thresholds δ, 2δ, …, blocks·δ.
    pub fn to_policy_spec(&self, blocks: u32) -> PolicySpec {
        let d = self.delta as f64;
        let thresholds = (1..=blocks).map(|k| k as f64 * d).collect();
        let segments = (0..=blocks).map(|w| Arc::new(self.segment(w)) as Arc<dyn RateMap>).collect();
        PolicySpec::new(thresholds, segments).expect("thresholds are increasing by construction")
    }
}

/// Convenience wrapper matching the free-function form.
pub fn lyapunov_power(pol: &LyapunovPolicy, q: f64, gain: f64) -> Result<f64> {
    pol.power(q, gain)
}

impl Scheduler for LyapunovPolicy {
    fn bits(&self, q: f64, gain: f64) -> f64 {
        if !(gain > 0.0) {
            return 0.0;
        }
        let pw = self.power_at_level(self.backlog_level(q), gain);
        capacity(&self.params, gain, pw / self.params.noise_power_w())
    }
}

/// Lyapunov rate map at a fixed backlog level m = ωδ.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovSegment {
    pol: LyapunovPolicy,
    level: f64,
}

impl LyapunovSegment {
    pub fn level(&self) -> f64 {
        self.level
    }
    pub fn cutoff_gain(&self) -> f64 {
        self.pol.cutoff_gain(self.level)
    }
}

impl RateMap for LyapunovSegment {
    fn bits(&self, gain: f64) -> f64 {
        if !(gain > 0.0) {
            return 0.0;
        }
        let pw = self.pol.power_at_level(self.level, gain);
        capacity(&self.pol.params, gain, pw / self.pol.params.noise_power_w())
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.cutoff_gain()]
    }
}
