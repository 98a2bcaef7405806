//! Monte-Carlo queue simulation, one-step kernel sampling and the hybrid
//! MC + large-deviation curve.
//!
//! The queue is stored as an integer number of ticks, one tick being κ_l
//! packets, so every run is exactly reproducible from its seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{config_err, QvpError, Result};
use crate::lql::TailCurve;
use crate::matrix::lattice_units;
use crate::models::{service, ArrivalModel, FadingModel, Scheduler, SystemParams};

/// Name of the generator behind every stream, recorded in output metadata.
pub const RNG_NAME: &str = "chacha8:seed_from_u64:stream_per_replica";

/// Everything the simulator needs to know about the system.
#[derive(Clone)]
pub struct SimSystem {
    pub params: SystemParams,
    pub policy: Arc<dyn Scheduler>,
    pub arrival: ArrivalModel,
    pub fading: FadingModel,
    /// κ_s applies for q ≤ alpha, κ_l above.
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Total slots over all replicas.
    pub slots: u64,
    pub seed: u64,
    /// Slots discarded at the start of each replica.
    pub warmup: u64,
    pub replicas: u32,
    /// Histogram cap in packets; larger queues go to the overflow bucket.
    pub record_max_q: f64,
}

impl SimConfig {
    /// Warmup defaults to 1% of each replica's slots; the histogram cap to 10α.
    pub fn new(slots: u64, seed: u64, alpha: f64) -> Self {
        let replicas = 8;
        SimConfig {
            slots,
            seed,
            warmup: slots / replicas as u64 / 100,
            replicas,
            record_max_q: 10.0 * alpha,
        }
    }

    fn slots_per_replica(&self) -> u64 {
        self.slots / self.replicas as u64
    }

    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(config_err("replicas must be at least 1"));
        }
        if self.slots_per_replica() <= self.warmup {
            return Err(config_err(format!(
                "each replica runs {} slots, which does not exceed warmup = {}",
                self.slots_per_replica(),
                self.warmup
            )));
        }
        if !(self.record_max_q >= 0.0) || !self.record_max_q.is_finite() {
            return Err(config_err("record_max_q must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Integer view of the system: everything counted in ticks of κ_l.
struct Lattice {
    ticks_per_packet: u64,
    sql_quantum: f64,
    lql_quantum: f64,
    alpha_ticks: u64,
    arrivals: Vec<(u64, f64)>,
}

impl Lattice {
    fn new(sys: &SimSystem) -> Result<Self> {
        let p = &sys.params;
        let tpp = lattice_units(1.0, p.kappa_lql, "one packet")? as u64;
        if tpp == 0 {
            return Err(config_err("kappa_lql must not exceed one packet"));
        }
        lattice_units(p.kappa_sql, p.kappa_lql, "kappa_sql")?;
        let alpha_ticks = lattice_units(sys.alpha, p.kappa_lql, "alpha")? as u64;
        let arrivals = sys
            .arrival
            .support()
            .into_iter()
            .map(|(k, pr)| Ok((lattice_units(k, p.kappa_lql, "arrival")? as u64, pr)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Lattice { ticks_per_packet: tpp, sql_quantum: p.kappa_sql, lql_quantum: p.kappa_lql, alpha_ticks, arrivals })
    }

    fn packets(&self, ticks: u64) -> f64 {
        ticks as f64 / self.ticks_per_packet as f64
    }

    fn ticks(&self, packets: f64) -> u64 {
        (packets * self.ticks_per_packet as f64).round() as u64
    }

    fn arrival_ticks(&self, rng: &mut ChaCha8Rng) -> u64 {
        if self.arrivals.len() == 1 {
            return self.arrivals[0].0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(k, p) in &self.arrivals {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.arrivals.last().expect("nonempty support").0
    }
}

fn gain_draw(fade: &FadingModel, rng: &mut ChaCha8Rng) -> f64 {
    // 1 − U maps [0, 1) onto (0, 1], so the log never sees zero.
    fade.sample(1.0 - rng.random::<f64>())
}

fn step(sys: &SimSystem, lat: &Lattice, q: u64, rng: &mut ChaCha8Rng) -> u64 {
    let g = gain_draw(&sys.fading, rng);
    let kappa = if q <= lat.alpha_ticks { lat.sql_quantum } else { lat.lql_quantum };
    let s = service(sys.policy.as_ref(), &sys.params, lat.packets(q), g, kappa);
    let s_ticks = lat.ticks(s).min(q);
    q - s_ticks + lat.arrival_ticks(rng)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Histogram of post-arrival queue lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct QvpEstimate {
    /// counts[t] = slots with queue = t ticks, for t·tick ≤ record_max_q.
    pub counts: Vec<u64>,
    pub overflow: u64,
    /// Packets per histogram bin (κ_l).
    pub tick: f64,
    pub total: u64,
    /// Pr{q > j} at integer thresholds j = 0..=record_max_q.
    pub qvp: Vec<f64>,
    pub stderr: Vec<f64>,
    pub hits: Vec<u64>,
    /// Mean service per slot seen by the pilot run at the histogram cap.
    pub pilot_service: f64,
}

impl QvpEstimate {
    fn from_counts(counts: Vec<u64>, overflow: u64, tick: f64, pilot_service: f64) -> Self {
        let total: u64 = counts.iter().sum::<u64>() + overflow;
        let tpp = (1.0 / tick).round() as usize;
        let max_j = (counts.len() - 1) / tpp;
        let mut suffix = vec![0u64; counts.len() + 1];
        for t in (0..counts.len()).rev() {
            suffix[t] = suffix[t + 1] + counts[t];
        }
        let mut qvp = Vec::with_capacity(max_j + 1);
        let mut stderr = Vec::with_capacity(max_j + 1);
        let mut hits = Vec::with_capacity(max_j + 1);
        for j in 0..=max_j {
            let h = suffix[j * tpp + 1] + overflow;
            let p = h as f64 / total as f64;
            hits.push(h);
            qvp.push(p);
            stderr.push((p * (1.0 - p) / total as f64).sqrt());
        }
        QvpEstimate { counts, overflow, tick, total, qvp, stderr, hits, pilot_service }
    }

    fn ticks_per_packet(&self) -> usize {
        (1.0 / self.tick).round() as usize
    }

    /// Number of recorded slots with q ≥ j packets.
    pub fn hits_at_least(&self, j: usize) -> u64 {
        let t = j * self.ticks_per_packet();
        if t >= self.counts.len() {
            return self.overflow;
        }
        self.counts[t..].iter().sum::<u64>() + self.overflow
    }

    /// Pr{q ≥ j} for integer j.
    pub fn at_least(&self, j: usize) -> f64 {
        self.hits_at_least(j) as f64 / self.total as f64
    }

    /// Binomial standard error of `at_least(j)`.
    pub fn at_least_stderr(&self, j: usize) -> f64 {
        let p = self.at_least(j);
        (p * (1.0 - p) / self.total as f64).sqrt()
    }

    pub fn mean_queue(&self) -> f64 {
        let s: f64 = self.counts.iter().enumerate().map(|(t, c)| t as f64 * self.tick * *c as f64).sum();
        s / self.total as f64
    }
}

/// Runs `cfg.replicas` independent replicas in parallel and merges them.
pub fn simulate_queue(sys: &SimSystem, cfg: &SimConfig) -> Result<QvpEstimate> {
    cfg.validate()?;
    let lat = Lattice::new(sys)?;
    let cap_ticks = lat.ticks(cfg.record_max_q.floor()) as usize;
    let pilot = pilot_service(sys, &lat, cfg);
    let mean_arrival = sys.arrival.mean();
    if pilot <= mean_arrival {
        log::warn!(
            "pilot run: mean service {pilot} at q = {} does not exceed mean arrival {mean_arrival}; the queue may be unstable",
            cfg.record_max_q
        );
    }
    let per = cfg.slots_per_replica();
    let parts: Vec<(Vec<u64>, u64)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(cfg.seed, r as u64);
            let mut counts = vec![0u64; cap_ticks + 1];
            let mut overflow = 0u64;
            let mut q = 0u64;
            for n in 0..per {
                q = step(sys, &lat, q, &mut rng);
                if n >= cfg.warmup {
                    match counts.get_mut(q as usize) {
                        Some(c) => *c += 1,
                        None => overflow += 1,
                    }
                }
            }
            (counts, overflow)
        })
        .collect();
    let mut counts = vec![0u64; cap_ticks + 1];
    let mut overflow = 0;
    for (c, o) in parts {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
        overflow += o;
    }
    Ok(QvpEstimate::from_counts(counts, overflow, sys.params.kappa_lql, pilot))
}

/// Average service at the histogram cap over a short run on a dedicated stream.
fn pilot_service(sys: &SimSystem, lat: &Lattice, cfg: &SimConfig) -> f64 {
    let n = 10_000u64.min(cfg.slots.max(1));
    let mut rng = rng_for(cfg.seed, u64::MAX);
    let q = cfg.record_max_q.max(sys.alpha + 1.0);
    let kappa = lat.lql_quantum;
    let total: f64 = (0..n)
        .map(|_| service(sys.policy.as_ref(), &sys.params, q, gain_draw(&sys.fading, &mut rng), kappa))
        .sum();
    total / n as f64
}

/// Queue path q[0..=n] from `q0` packets, for inspection and tests.
pub fn trace_queue(sys: &SimSystem, q0: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let lat = Lattice::new(sys)?;
    let mut rng = rng_for(seed, 0);
    let mut q = lat.ticks(q0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(lat.packets(q));
    for _ in 0..n {
        q = step(sys, &lat, q, &mut rng);
        out.push(lat.packets(q));
    }
    Ok(out)
}

/// One-step transition counts from every state 0..=α (units of κ_s); the
/// last column pools moves beyond α.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalKernel {
    pub counts: Vec<Vec<u64>>,
    pub draws: u64,
}

impl EmpiricalKernel {
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Frequency of i → j; j = dim() is the pooled overflow.
    pub fn freq(&self, i: usize, j: usize) -> f64 {
        self.counts[i][j] as f64 / self.draws as f64
    }

    /// Binomial standard error of an estimate of probability `p`.
    pub fn stderr_for(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.draws as f64).sqrt()
    }
}

/// Samples `draws_per_state` channel and arrival draws from each state.
pub fn one_step_empirical_kernel(sys: &SimSystem, draws_per_state: u64, seed: u64) -> Result<EmpiricalKernel> {
    if draws_per_state == 0 {
        return Err(config_err("draws_per_state must be positive"));
    }
    let kappa = sys.params.kappa_sql;
    let top = lattice_units(sys.alpha, kappa, "alpha")?;
    let arrivals: Vec<(usize, f64)> = sys
        .arrival
        .support()
        .into_iter()
        .map(|(k, p)| Ok((lattice_units(k, kappa, "arrival")?, p)))
        .collect::<Result<_>>()?;
    let counts = (0..=top)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let mut row = vec![0u64; top + 2];
            let q = i as f64 * kappa;
            for _ in 0..draws_per_state {
                let g = gain_draw(&sys.fading, &mut rng);
                let s = service(sys.policy.as_ref(), &sys.params, q, g, kappa);
                let served = ((s / kappa).round() as usize).min(i);
                let a = if arrivals.len() == 1 {
                    arrivals[0].0
                } else {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = arrivals.last().unwrap().0;
                    for &(k, p) in &arrivals {
                        acc += p;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    pick
                };
                let j = i - served + a;
                row[j.min(top + 1)] += 1;
            }
            row
        })
        .collect();
    Ok(EmpiricalKernel { counts, draws: draws_per_state })
}

/// Curve over integer thresholds: MC values up to the splice point q*, the
/// analytic shape beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridCurve {
    pub splice: usize,
    /// Pr{q ≥ j} for j = 0..values.len().
    pub values: Vec<f64>,
}

/// Expected hits below which a cutoff is finer than the MC can resolve.
pub const MIN_SPLICE_HITS: f64 = 1.0;

/// Splices MC Pr{q ≥ j} at q* (largest j with MC ≥ cutoff) onto the
/// analytic curve: MC(q*)·tail(j)/tail(q*) for j > q*.
pub fn hybrid_mc_ldt(est: &QvpEstimate, cutoff_prob: f64, tail: &TailCurve, q_max: usize) -> Result<HybridCurve> {
    if !(cutoff_prob > 0.0 && cutoff_prob <= 1.0) {
        return Err(QvpError::Splice(format!("cutoff must lie in (0, 1], got {cutoff_prob}")));
    }
    if cutoff_prob * (est.total as f64) < MIN_SPLICE_HITS {
        return Err(QvpError::Splice(format!(
            "cutoff {cutoff_prob} is below the resolution of {} recorded slots (needs >= {MIN_SPLICE_HITS} expected hits)",
            est.total
        )));
    }
    let max_j = est.qvp.len() - 1;
    let splice = (0..=max_j)
        .rev()
        .find(|&j| est.at_least(j) >= cutoff_prob)
        .ok_or_else(|| QvpError::Splice(format!("no threshold reaches probability {cutoff_prob}")))?;
    let anchor = est.at_least(splice);
    let ln_ref = tail.ln_eval(splice as f64);
    let values = (0..=q_max)
        .map(|j| {
            if j <= splice {
                est.at_least(j)
            } else {
                anchor * (tail.ln_eval(j as f64) - ln_ref).exp()
            }
        })
        .collect();
    Ok(HybridCurve { splice, values })
}
