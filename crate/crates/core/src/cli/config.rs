//! JSON run configuration. Units are converted once, in `RunConfig::resolve`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{config_err, Result};
use crate::models::{
    dbm_per_hz_to_w_per_hz, path_loss_mean_gain, ArrivalModel, ConstantRate, CustomPdf, FadingModel, FixedPowerRate,
    LyapunovPolicy, PolicySpec, RateMap, SystemParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub channel: ChannelSection,
    pub arrival: ArrivalSection,
    pub policy: PolicySection,
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "B")]
    pub bandwidth_hz: f64,
    #[serde(rename = "T")]
    pub slot_s: f64,
    #[serde(rename = "N0_dBm_per_Hz")]
    pub n0_dbm_per_hz: f64,
    #[serde(rename = "A")]
    pub packet_bits: f64,
    #[serde(rename = "S_max")]
    pub s_max: f64,
    pub kappa_sql: f64,
    pub kappa_lql: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSection {
    /// Either `mean_gain` or the path-loss pair `D_m` + `fc_GHz`.
    Rayleigh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_gain: Option<f64>,
        #[serde(default, rename = "D_m", skip_serializing_if = "Option::is_none")]
        distance_m: Option<f64>,
        #[serde(default, rename = "fc_GHz", skip_serializing_if = "Option::is_none")]
        carrier_ghz: Option<f64>,
    },
    /// Piecewise-linear pdf through (x, pdf) points; zero beyond the last x.
    Tabulated { x: Vec<f64>, pdf: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSection {
    Deterministic { lambda: f64 },
    Pmf { pmf: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySection {
    Lyapunov {
        #[serde(rename = "V")]
        v: f64,
        delta: u32,
    },
    /// Segment k is active on [thresholds[k-1], thresholds[k]).
    Piecewise { thresholds: Vec<f64>, segments: Vec<SegmentSection> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentSection {
    Constant { packets: f64 },
    FixedPower { power_w: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethodName {
    BinarySearch,
    Theorem6,
    Corollary1,
    Loose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub alpha: f64,
    /// Large-queue segments above α; Lyapunov policies use one per δ block.
    #[serde(default = "default_segments")]
    pub segments: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_method: Option<ThetaMethodName>,
    /// Largest threshold written to curve files; defaults to 4α.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<u32>,
}

fn default_segments() -> u32 {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub slots: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default = "default_replicas")]
    pub replicas: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_max_q: Option<f64>,
}

fn default_replicas() -> u32 {
    8
}

/// The policy in executable form.
#[derive(Clone)]
pub enum ResolvedPolicy {
    Lyapunov(Arc<LyapunovPolicy>),
    Piecewise(Arc<PolicySpec>),
}

/// A config with every unit converted and every model constructed.
#[derive(Clone)]
pub struct Resolved {
    pub params: SystemParams,
    pub fading: FadingModel,
    pub mean_gain: Option<f64>,
    pub arrival: ArrivalModel,
    pub policy: ResolvedPolicy,
    pub alpha: f64,
    pub segments: u32,
    pub theta_method: ThetaMethodName,
    pub q_max: u32,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses `text`, applies `key.path=value` overrides, then deserializes.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text)?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_with_overrides(&text, overrides)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))[..16].to_string()
    }

    /// Table III system, Rayleigh mean gain 5·10^-15.4, λ = 1, Lyapunov policy.
    pub fn table_iii(v: f64, delta: u32, alpha: f64) -> Self {
        RunConfig {
            system: SystemSection {
                bandwidth_hz: 500e3,
                slot_s: 2e-3,
                n0_dbm_per_hz: -174.0,
                packet_bits: 1e3,
                s_max: 1e6,
                kappa_sql: 1.0,
                kappa_lql: 1e-3,
            },
            channel: ChannelSection::Rayleigh {
                mean_gain: Some(crate::models::TABLE_III_MEAN_GAIN),
                distance_m: None,
                carrier_ghz: None,
            },
            arrival: ArrivalSection::Deterministic { lambda: 1.0 },
            policy: PolicySection::Lyapunov { v, delta },
            analysis: AnalysisSection { alpha, segments: default_segments(), theta_method: None, q_max: None },
            sim: None,
        }
    }

    pub fn sim_section(&self) -> Result<&SimSection> {
        self.sim.as_ref().ok_or_else(|| config_err("the config has no sim section"))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let s = &self.system;
        let params = SystemParams::new(
            s.bandwidth_hz,
            s.slot_s,
            dbm_per_hz_to_w_per_hz(s.n0_dbm_per_hz),
            s.packet_bits,
            s.s_max,
            s.kappa_sql,
            s.kappa_lql,
        )?;
        let (fading, mean_gain) = match &self.channel {
            ChannelSection::Rayleigh { mean_gain, distance_m, carrier_ghz } => {
                let g = match (mean_gain, distance_m, carrier_ghz) {
                    (Some(g), None, None) => *g,
                    (None, Some(d), Some(fc)) => path_loss_mean_gain(*d, *fc)?,
                    _ => return Err(config_err("rayleigh channel needs either mean_gain or both D_m and fc_GHz")),
                };
                (FadingModel::rayleigh(g)?, Some(g))
            }
            ChannelSection::Tabulated { x, pdf } => (FadingModel::Custom(tabulated_pdf(x, pdf)?), None),
        };
        let arrival = match &self.arrival {
            ArrivalSection::Deterministic { lambda } => ArrivalModel::deterministic(*lambda)?,
            ArrivalSection::Pmf { pmf } => ArrivalModel::pmf(pmf.clone())?,
        };
        let a = &self.analysis;
        if !(a.alpha > 0.0) || !a.alpha.is_finite() {
            return Err(config_err(format!("analysis.alpha must be positive, got {}", a.alpha)));
        }
        if a.segments == 0 {
            return Err(config_err("analysis.segments must be at least 1"));
        }
        let (policy, default_method) = match &self.policy {
            PolicySection::Lyapunov { v, delta } => {
                let pol = LyapunovPolicy::new(&params, *v, *delta, &arrival)?;
                let blocks = a.alpha / *delta as f64;
                if (blocks - blocks.round()).abs() > 1e-9 {
                    return Err(config_err(format!("alpha = {} must be a positive multiple of delta = {delta}", a.alpha)));
                }
                (ResolvedPolicy::Lyapunov(Arc::new(pol)), ThetaMethodName::Theorem6)
            }
            PolicySection::Piecewise { thresholds, segments } => {
                let maps = segments
                    .iter()
                    .map(|seg| -> Result<Arc<dyn RateMap>> {
                        Ok(match seg {
                            SegmentSection::Constant { packets } => Arc::new(ConstantRate::new(&params, *packets)),
                            SegmentSection::FixedPower { power_w } => Arc::new(FixedPowerRate::new(&params, *power_w)?),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let spec = PolicySpec::new(thresholds.clone(), maps)?;
                (ResolvedPolicy::Piecewise(Arc::new(spec)), ThetaMethodName::BinarySearch)
            }
        };
        let theta_method = a.theta_method.unwrap_or(default_method);
        match (&policy, theta_method, mean_gain) {
            (ResolvedPolicy::Piecewise(_), m, _) if m != ThetaMethodName::BinarySearch => {
                return Err(config_err("piecewise policies support only theta_method = binary_search"));
            }
            (ResolvedPolicy::Lyapunov(_), m, None) if m != ThetaMethodName::BinarySearch => {
                return Err(config_err("closed-form theta methods need a rayleigh channel"));
            }
            _ => {}
        }
        Ok(Resolved {
            params,
            fading,
            mean_gain,
            arrival,
            policy,
            alpha: a.alpha,
            segments: a.segments,
            theta_method,
            q_max: a.q_max.unwrap_or((4.0 * a.alpha).ceil() as u32),
        })
    }
}

fn tabulated_pdf(x: &[f64], pdf: &[f64]) -> Result<CustomPdf> {
    if x.len() < 2 || x.len() != pdf.len() {
        return Err(config_err("tabulated channel needs matching x and pdf arrays of length >= 2"));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) || x[0] < 0.0 {
        return Err(config_err("tabulated x must start at >= 0 and increase strictly"));
    }
    let (xs, ps) = (x.to_vec(), pdf.to_vec());
    let hi = *xs.last().unwrap();
    CustomPdf::new(
        move |g| {
            if g < xs[0] || g > hi {
                return 0.0;
            }
            let i = xs.partition_point(|v| *v <= g).clamp(1, xs.len() - 1);
            let t = (g - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ps[i - 1] + t * (ps[i] - ps[i - 1])
        },
        hi,
    )
}

/// Sets `a.b.c` in a JSON tree; the value is parsed as JSON and falls back
/// to a plain string.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{spec}' is not of the form key.path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, k) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| config_err(format!("override '{path}': '{k}' is not inside an object")))?;
        if i + 1 == keys.len() {
            obj.insert(k.to_string(), value);
            return Ok(());
        }
        node = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one key")
}
