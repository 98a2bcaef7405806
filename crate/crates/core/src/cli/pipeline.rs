//! Build → augment → stationary solves → θ solves → tail assembly.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{Resolved, ResolvedPolicy, ThetaMethodName};
use crate::augment::{
    first_column_augment, last_column_augment, monotone_lower_envelope, monotone_upper_envelope, solve_stationary,
    sql_bounds, SqlAnalysis,
};
use crate::error::Result;
use crate::lql::{
    corollary1_theta, loose_theta, normalized_cutoff, solve_segment_exponent, theorem6_theta, QosExponent, TailCurve,
};
use crate::matrix::{build_qaa_generic, build_qaa_lyapunov};
use crate::models::{LyapunovPolicy, Scheduler};
use crate::sim::SimSystem;

/// One large-queue piece [lower, upper) and its exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct LqlSegment {
    pub lower: f64,
    pub upper: Option<f64>,
    /// Backlog block index ω for Lyapunov policies.
    pub omega: Option<u32>,
    pub qos: QosExponent,
}

/// The four analytic tail families.
#[derive(Debug, Clone)]
pub struct TailSet {
    pub lca: TailCurve,
    pub fca: TailCurve,
    pub sub: TailCurve,
    pub slb: TailCurve,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub sql: SqlAnalysis,
    pub segments: Vec<LqlSegment>,
    pub tails: TailSet,
    pub timings: Vec<(&'static str, Duration)>,
}

impl Analysis {
    pub fn total_time(&self) -> Duration {
        self.timings.iter().map(|(_, d)| *d).sum()
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.sql.bounds;
        writeln!(f, "Psi_u = {}", b.psi_u)?;
        writeln!(f, "Psi_l = {}", b.psi_l)?;
        for s in &self.segments {
            let hi = s.upper.map_or("inf".to_string(), |u| format!("{u}"));
            let om = s.omega.map_or(String::new(), |o| format!(" omega={o}"));
            writeln!(f, "theta [{}, {hi}){om} = {} ({:?}, residual {:e})", s.lower, s.qos.theta, s.qos.method, s.qos.residual)?;
        }
        for (stage, d) in &self.timings {
            writeln!(f, "time {stage} = {:.3} ms", d.as_secs_f64() * 1e3)?;
        }
        write!(f, "time total = {:.3} ms", self.total_time().as_secs_f64() * 1e3)
    }
}

fn timed<T>(timings: &mut Vec<(&'static str, Duration)>, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t0 = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage))?;
    timings.push((stage, t0.elapsed()));
    Ok(out)
}

impl Resolved {
    pub fn scheduler(&self) -> Arc<dyn Scheduler> {
        match &self.policy {
            ResolvedPolicy::Lyapunov(p) => p.clone(),
            ResolvedPolicy::Piecewise(p) => p.clone(),
        }
    }

    pub fn sim_system(&self) -> SimSystem {
        SimSystem {
            params: self.params,
            policy: self.scheduler(),
            arrival: self.arrival.clone(),
            fading: self.fading.clone(),
            alpha: self.alpha,
        }
    }

    /// Q_AA for the configured policy.
    pub fn build_kernel(&self) -> Result<crate::matrix::TruncatedKernel> {
        match &self.policy {
            ResolvedPolicy::Lyapunov(p) => build_qaa_lyapunov(p, &self.fading, self.alpha),
            ResolvedPolicy::Piecewise(p) => {
                build_qaa_generic(p.as_ref(), &self.arrival, &self.fading, &self.params, self.alpha)
            }
        }
    }

    /// Large-queue pieces: δ blocks above α for Lyapunov policies, the policy
    /// thresholds above α otherwise.
    fn lql_pieces(&self) -> Vec<(f64, Option<f64>, Option<u32>)> {
        match &self.policy {
            ResolvedPolicy::Lyapunov(p) => {
                let d = p.delta() as f64;
                let base = (self.alpha / d).round() as u32;
                (0..self.segments)
                    .map(|k| {
                        let lo = self.alpha + k as f64 * d;
                        let hi = (k + 1 < self.segments).then_some(lo + d);
                        (lo, hi, Some(base + k))
                    })
                    .collect()
            }
            ResolvedPolicy::Piecewise(p) => {
                let mut cuts = vec![self.alpha];
                cuts.extend(p.thresholds().iter().copied().filter(|z| *z > self.alpha));
                (0..cuts.len()).map(|i| (cuts[i], cuts.get(i + 1).copied(), None)).collect()
            }
        }
    }

    fn lyapunov_theta(&self, pol: &LyapunovPolicy, omega: u32) -> Result<QosExponent> {
        let g = self.mean_gain.unwrap_or(f64::NAN);
        match self.theta_method {
            ThetaMethodName::Theorem6 => theorem6_theta(pol, g, omega),
            ThetaMethodName::BinarySearch => {
                solve_segment_exponent(&pol.segment(omega), &self.params, &self.fading, &self.arrival)
            }
            ThetaMethodName::Corollary1 => corollary1_theta(
                normalized_cutoff(pol, g, omega),
                pol.lambda(),
                self.params.blocklength() / self.params.packet_bits * std::f64::consts::LOG2_E,
            ),
            ThetaMethodName::Loose => loose_theta(normalized_cutoff(pol, g, omega), pol.lambda()),
        }
    }

    /// θ_k for every large-queue piece, solved in parallel.
    pub fn solve_thetas(&self) -> Result<Vec<LqlSegment>> {
        self.lql_pieces()
            .into_par_iter()
            .map(|(lower, upper, omega)| {
                let qos = match &self.policy {
                    ResolvedPolicy::Lyapunov(p) => self.lyapunov_theta(p, omega.expect("block index")),
                    ResolvedPolicy::Piecewise(p) => {
                        let seg = p.segment(p.segment_index(lower));
                        solve_segment_exponent(seg.as_ref(), &self.params, &self.fading, &self.arrival)
                    }
                }?;
                Ok(LqlSegment { lower, upper, omega, qos })
            })
            .collect()
    }

    /// Algorithm 2 end to end.
    pub fn analyze(&self) -> Result<Analysis> {
        let mut timings = Vec::new();
        let raw = timed(&mut timings, "build", || self.build_kernel())?;
        let (lca, fca, upper, lower) = timed(&mut timings, "augment", || {
            let lca = last_column_augment(&raw)?;
            let fca = first_column_augment(&raw)?;
            let upper = monotone_upper_envelope(&lca)?;
            let lower = monotone_lower_envelope(&fca)?;
            Ok((lca, fca, upper, lower))
        })?;
        let sql = timed(&mut timings, "stationary", || {
            let pi_lca = solve_stationary(&lca)?;
            let pi_fca = solve_stationary(&fca)?;
            let pi_upper = solve_stationary(&upper)?;
            let pi_lower = solve_stationary(&lower)?;
            let bounds = sql_bounds(&pi_upper, &pi_lower)?;
            Ok(SqlAnalysis { raw, lca, fca, upper, lower, pi_lca, pi_fca, pi_upper, pi_lower, bounds })
        })?;
        let segments = timed(&mut timings, "theta", || self.solve_thetas())?;
        let tails = timed(&mut timings, "assemble", || {
            let bounds: Vec<f64> = segments.iter().map(|s| s.lower).collect();
            let thetas: Vec<f64> = segments.iter().map(|s| s.qos.theta).collect();
            let k = self.params.kappa_sql;
            let curve = |head: Vec<f64>| TailCurve::new(head, k, &bounds, &thetas);
            Ok(TailSet {
                lca: curve(sql.pi_lca.tail())?,
                fca: curve(sql.pi_fca.tail())?,
                sub: curve(sql.bounds.eps_upper.clone())?,
                slb: curve(sql.bounds.eps_lower.clone())?,
            })
        })?;
        Ok(Analysis { sql, segments, tails, timings })
    }
}
