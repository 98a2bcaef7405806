use std::fmt;
use std::sync::Arc;

use super::{capacity, service_packets, SystemParams};
use crate::error::{config_err, domain_err, Result};
use crate::tolerance::LATTICE;

/// Queue-independent map from channel gain to deliverable bits in one slot.
///
/// Implementations must be nondecreasing in the gain.
pub trait RateMap: Send + Sync + fmt::Debug {
    fn bits(&self, gain: f64) -> f64;

    /// Gains where the map is not smooth (quadrature split points).
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Anything that picks a per-slot bit budget from (queue length, gain).
pub trait Scheduler: Send + Sync {
    fn bits(&self, q: f64, gain: f64) -> f64;
}

/// Fixed number of packets per slot regardless of the channel.
#[derive(Debug, Clone, Copy)]
pub struct ConstantRate {
    bits: f64,
}

impl ConstantRate {
    pub fn new(params: &SystemParams, packets: f64) -> Self {
        ConstantRate { bits: packets * params.packet_bits }
    }
}

impl RateMap for ConstantRate {
    fn bits(&self, _gain: f64) -> f64 {
        self.bits
    }
}

/// Constant transmit power; the rate follows the channel.
#[derive(Debug, Clone, Copy)]
pub struct FixedPowerRate {
    params: SystemParams,
    power_w: f64,
}

impl FixedPowerRate {
    pub fn new(params: &SystemParams, power_w: f64) -> Result<Self> {
        if !(power_w >= 0.0) || !power_w.is_finite() {
            return Err(config_err(format!("power must be finite and >= 0, got {power_w}")));
        }
        Ok(FixedPowerRate { params: *params, power_w })
    }
}

impl RateMap for FixedPowerRate {
    fn bits(&self, gain: f64) -> f64 {
        capacity(&self.params, gain.max(0.0), self.power_w / self.params.noise_power_w())
    }
}

/// Rate map from a closure, for ad hoc policies.
#[derive(Clone)]
pub struct FnRate {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    kinks: Vec<f64>,
}

impl FnRate {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, kinks: Vec<f64>) -> Self {
        FnRate { f: Arc::new(f), kinks }
    }
}

impl fmt::Debug for FnRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnRate").field("kinks", &self.kinks).finish_non_exhaustive()
    }
}

impl RateMap for FnRate {
    fn bits(&self, gain: f64) -> f64 {
        (self.f)(gain)
    }
    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

/// Piecewise policy: segment k is active for q ∈ [ζ_k, ζ_{k+1}).
#[derive(Clone, Debug)]
pub struct PolicySpec {
    thresholds: Vec<f64>,
    segments: Vec<Arc<dyn RateMap>>,
}

impl PolicySpec {
    pub fn new(thresholds: Vec<f64>, segments: Vec<Arc<dyn RateMap>>) -> Result<Self> {
        if segments.len() != thresholds.len() + 1 {
            return Err(config_err(format!(
                "{} thresholds need {} segments, got {}",
                thresholds.len(),
                thresholds.len() + 1,
                segments.len()
            )));
        }
        if thresholds.iter().any(|z| !(*z >= 0.0) || !z.is_finite()) {
            return Err(config_err("thresholds must be finite and >= 0"));
        }
        if thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("thresholds must be strictly increasing"));
        }
        Ok(PolicySpec { thresholds, segments })
    }

    pub fn single(seg: Arc<dyn RateMap>) -> Self {
        PolicySpec { thresholds: Vec::new(), segments: vec![seg] }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn segments(&self) -> &[Arc<dyn RateMap>] {
        &self.segments
    }

    /// Index k of the segment with q ∈ [ζ_k, ζ_{k+1}).
    pub fn segment_index(&self, q: f64) -> usize {
        self.thresholds.partition_point(|z| *z <= q)
    }

    pub fn segment(&self, k: usize) -> &Arc<dyn RateMap> {
        &self.segments[k]
    }

    /// Lower boundary ζ_k of segment k (ζ_0 = 0).
    pub fn lower_bound(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.thresholds[k - 1]
        }
    }

    /// Upper boundary ζ_{k+1} of segment k (∞ for the last one).
    pub fn upper_bound(&self, k: usize) -> f64 {
        self.thresholds.get(k).copied().unwrap_or(f64::INFINITY)
    }
}

impl Scheduler for PolicySpec {
    fn bits(&self, q: f64, gain: f64) -> f64 {
        self.segments[self.segment_index(q)].bits(gain)
    }
}

/// Packets served at queue length `q` and gain `gain` under quantum `kappa`.
pub fn service(pol: &dyn Scheduler, params: &SystemParams, q: f64, gain: f64, kappa: f64) -> f64 {
    service_packets(params, q, pol.bits(q, gain), kappa)
}

/// Packets served with the quantum chosen by the regime of `q` relative to `alpha`.
pub fn policy_eval(pol: &dyn Scheduler, params: &SystemParams, alpha: f64, q: f64, gain: f64) -> f64 {
    service(pol, params, q, gain, params.kappa_at(q, alpha))
}

/// True iff Ξ_{q+κ} − Ξ_q ∈ {0, κ} on the lattice 0, κ, …, α for every gain.
pub fn threshold_property_check(
    pol: &dyn Scheduler,
    params: &SystemParams,
    alpha: f64,
    kappa: f64,
    gains: &[f64],
) -> Result<bool> {
    if gains.is_empty() {
        return Err(domain_err("threshold property check needs a nonempty gain grid"));
    }
    let steps = (alpha / kappa).round() as usize;
    for &g in gains {
        let mut prev = service(pol, params, 0.0, g, kappa);
        for n in 1..=steps {
            let q = n as f64 * kappa;
            let cur = service(pol, params, q, g, kappa);
            let d = cur - prev;
            if d.abs() > LATTICE && (d - kappa).abs() > LATTICE {
                return Ok(false);
            }
            prev = cur;
        }
    }
    Ok(true)
}
