//! Command implementations behind the `qvp` binary. Each writes CSV with a
//! `# config_hash=.. seed=..` comment line first.

pub mod config;
pub mod pipeline;

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use config::{RunConfig, ThetaMethodName};
pub use pipeline::{Analysis, LqlSegment, TailSet};

use crate::errbounds::{gev_bounds, gpd_bounds, ldt_bounds, ErrorBoundReport};
use crate::error::{config_err, QvpError, Result};
use crate::matrix::{KernelKind, TruncatedKernel};
use crate::sim::{hybrid_mc_ldt, simulate_queue, HybridCurve, QvpEstimate, SimConfig, RNG_NAME};

/// Slot count of the reference runs; `reproduce --scale` multiplies it.
pub const REFERENCE_SLOTS: f64 = 1e9;

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

fn seed_label(cfg: &RunConfig) -> String {
    cfg.sim.as_ref().map_or("none".to_string(), |s| s.seed.to_string())
}

/// Writes `# k=v ..` lines, then a headed CSV table.
pub fn write_table<W: Write>(
    mut out: W,
    meta: &[Vec<(&str, String)>],
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for line in meta {
        let body: Vec<String> = line.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "# {}", body.join(" "))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV file as written by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CurveFile {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Column `name` parsed as f64; empty cells become None.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| config_err(format!("no column '{name}'")))?;
        self.rows
            .iter()
            .map(|r| {
                let s = r[i].trim();
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|e| config_err(format!("bad number '{s}': {e}")))
                }
            })
            .collect()
    }
}

pub fn read_curve_csv<R: Read>(mut r: R) -> Result<CurveFile> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut meta = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        for kv in line.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = kv.split_once('=') {
                meta.push((k.to_string(), v.to_string()));
            }
        }
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rd.headers()?.iter().map(str::to_string).collect();
    let rows = rd
        .records()
        .map(|r| Ok(r?.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok(CurveFile { meta, header, rows })
}

const ANALYZE_HEADER: [&str; 12] = [
    "q_th", "eps_lca", "eps_fca", "eps_sub", "eps_slb", "lca_ec", "fca_ec", "sub_ec", "slb_ec", "ln_sub_ec",
    "ln_slb_ec", "theta",
];

fn analyze_rows(a: &Analysis, alpha: f64, q_max: u32) -> Vec<Vec<String>> {
    let t = &a.tails;
    (0..=q_max)
        .map(|j| {
            let q = j as f64;
            let sql = |c: &crate::lql::TailCurve| if q <= alpha { format!("{}", c.eval(q).value) } else { String::new() };
            vec![
                j.to_string(),
                sql(&t.lca),
                sql(&t.fca),
                sql(&t.sub),
                sql(&t.slb),
                format!("{}", t.lca.eval(q).value),
                format!("{}", t.fca.eval(q).value),
                format!("{}", t.sub.eval(q).value),
                format!("{}", t.slb.eval(q).value),
                format!("{}", t.sub.ln_eval(q)),
                format!("{}", t.slb.ln_eval(q)),
                fmt_opt(t.sub.theta_at(q)),
            ]
        })
        .collect()
}

/// `analyze`: analytic curves for every threshold 0..=q_max.
pub fn run_analyze<W: Write>(cfg: &RunConfig, out: W) -> Result<Analysis> {
    let r = cfg.resolve()?;
    let a = r.analyze()?;
    let meta = vec![
        vec![("config_hash", cfg.hash()), ("seed", seed_label(cfg))],
        vec![("alpha", format!("{}", r.alpha)), ("psi_u", format!("{}", a.sql.bounds.psi_u)), ("psi_l", format!("{}", a.sql.bounds.psi_l))],
    ];
    write_table(out, &meta, &ANALYZE_HEADER, analyze_rows(&a, r.alpha, r.q_max))?;
    Ok(a)
}

fn sim_config(cfg: &RunConfig, alpha: f64) -> Result<SimConfig> {
    let s = cfg.sim_section()?;
    let mut c = SimConfig::new(s.slots, s.seed, alpha);
    c.replicas = s.replicas;
    if s.replicas == 0 {
        return Err(config_err("sim.replicas must be at least 1"));
    }
    c.warmup = s.warmup.unwrap_or(s.slots / s.replicas as u64 / 100);
    if let Some(m) = s.record_max_q {
        c.record_max_q = m;
    }
    Ok(c)
}

fn sim_meta(cfg: &RunConfig, sc: &SimConfig) -> Vec<Vec<(&'static str, String)>> {
    vec![
        vec![("config_hash", cfg.hash()), ("seed", sc.seed.to_string())],
        vec![
            ("slots", sc.slots.to_string()),
            ("warmup", sc.warmup.to_string()),
            ("replicas", sc.replicas.to_string()),
            ("record_max_q", format!("{}", sc.record_max_q)),
        ],
        vec![("rng", RNG_NAME.to_string())],
    ]
}

const SIM_HEADER: [&str; 7] = ["q_th", "qvp", "stderr", "hits", "qvp_ge", "stderr_ge", "hits_ge"];

fn sim_rows(est: &QvpEstimate) -> Vec<Vec<String>> {
    (0..est.qvp.len())
        .map(|j| {
            vec![
                j.to_string(),
                format!("{}", est.qvp[j]),
                format!("{}", est.stderr[j]),
                est.hits[j].to_string(),
                format!("{}", est.at_least(j)),
                format!("{}", est.at_least_stderr(j)),
                est.hits_at_least(j).to_string(),
            ]
        })
        .collect()
}

fn hybrid_rows(h: &HybridCurve) -> Vec<Vec<String>> {
    h.values
        .iter()
        .enumerate()
        .map(|(j, v)| vec![j.to_string(), format!("{v}"), if j <= h.splice { "mc" } else { "ldt" }.to_string()])
        .collect()
}

/// What `simulate` produced.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub estimate: QvpEstimate,
    pub hybrid: Option<HybridCurve>,
}

/// `simulate`: the MC histogram, or with `hybrid` the spliced curve.
pub fn run_simulate<W: Write>(cfg: &RunConfig, hybrid: Option<f64>, out: W) -> Result<SimOutcome> {
    let r = cfg.resolve()?;
    let sc = sim_config(cfg, r.alpha)?;
    let est = simulate_queue(&r.sim_system(), &sc).map_err(|e| e.in_stage("simulate"))?;
    let mut meta = sim_meta(cfg, &sc);
    match hybrid {
        None => {
            write_table(out, &meta, &SIM_HEADER, sim_rows(&est))?;
            Ok(SimOutcome { estimate: est, hybrid: None })
        }
        Some(cutoff) => {
            let a = r.analyze()?;
            let q_max = sc.record_max_q.floor() as usize;
            let h = hybrid_mc_ldt(&est, cutoff, &a.tails.sub, q_max).map_err(|e| e.in_stage("hybrid"))?;
            meta.push(vec![("splice", h.splice.to_string()), ("cutoff", format!("{cutoff}"))]);
            write_table(out, &meta, &["q_th", "hybrid", "source"], hybrid_rows(&h))?;
            Ok(SimOutcome { estimate: est, hybrid: Some(h) })
        }
    }
}

/// The six reference settings: δ = 3 and (V, α) ∈ {2, 4} × {6, 9, 12}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 6] = [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    /// (V, α).
    pub fn setting(self) -> (f64, f64) {
        match self {
            Figure::Fig2 => (2.0, 6.0),
            Figure::Fig3 => (2.0, 9.0),
            Figure::Fig4 => (2.0, 12.0),
            Figure::Fig5 => (4.0, 6.0),
            Figure::Fig6 => (4.0, 9.0),
            Figure::Fig7 => (4.0, 12.0),
        }
    }

    pub const DELTA: u32 = 3;

    pub fn config(self, slots: u64, seed: u64) -> RunConfig {
        let (v, alpha) = self.setting();
        let mut c = RunConfig::table_iii(v, Self::DELTA, alpha);
        c.sim = Some(config::SimSection { slots, seed, warmup: None, replicas: 8, record_max_q: None });
        c
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = Figure::ALL.iter().position(|x| x == self).unwrap() + 2;
        write!(f, "fig{n}")
    }
}

impl FromStr for Figure {
    type Err = QvpError;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .iter()
            .copied()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| config_err(format!("unknown figure '{s}' (expected fig2..fig7)")))
    }
}

/// `reproduce`: per-method CSVs plus a combined file for one figure.
pub fn run_reproduce(
    fig: Figure,
    scale: f64,
    seed: u64,
    hybrid_cutoff: f64,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(config_err(format!("scale must lie in (0, 1], got {scale}")));
    }
    let slots = (REFERENCE_SLOTS * scale).round() as u64;
    let cfg = fig.config(slots, seed);
    let r = cfg.resolve()?;
    let a = r.analyze()?;
    let sc = sim_config(&cfg, r.alpha)?;
    let est = simulate_queue(&r.sim_system(), &sc).map_err(|e| e.in_stage("simulate"))?;
    let q_max = r.q_max as usize;
    let hybrid = hybrid_mc_ldt(&est, hybrid_cutoff, &a.tails.sub, q_max).map_err(|e| e.in_stage("hybrid"))?;
    std::fs::create_dir_all(dir)?;
    let mut meta = sim_meta(&cfg, &sc);
    meta.push(vec![("figure", fig.to_string()), ("splice", hybrid.splice.to_string()), ("cutoff", format!("{hybrid_cutoff}"))]);
    let mut written = Vec::new();
    let mut file = |name: String, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let path = dir.join(name);
        write_table(std::io::BufWriter::new(std::fs::File::create(&path)?), &meta, header, rows)?;
        written.push(path);
        Ok(())
    };
    let t = &a.tails;
    let mc = |j: usize| if j < est.qvp.len() { format!("{}", est.at_least(j)) } else { String::new() };
    let mc_se = |j: usize| if j < est.qvp.len() { format!("{}", est.at_least_stderr(j)) } else { String::new() };
    for (name, curve) in [("lca_ec", &t.lca), ("fca_ec", &t.fca), ("sub_ec", &t.sub), ("slb_ec", &t.slb)] {
        let rows = (0..=q_max).map(|j| vec![j.to_string(), format!("{}", curve.eval(j as f64).value)]).collect();
        file(format!("{fig}_{name}.csv"), &["q_th", "value"], rows)?;
    }
    file(format!("{fig}_mc.csv"), &SIM_HEADER, sim_rows(&est))?;
    file(format!("{fig}_hybrid.csv"), &["q_th", "hybrid", "source"], hybrid_rows(&hybrid))?;
    let rows = (0..=q_max)
        .map(|j| {
            let q = j as f64;
            vec![
                j.to_string(),
                format!("{}", t.lca.eval(q).value),
                format!("{}", t.fca.eval(q).value),
                format!("{}", t.sub.eval(q).value),
                format!("{}", t.slb.eval(q).value),
                mc(j),
                mc_se(j),
                format!("{}", hybrid.values[j]),
            ]
        })
        .collect();
    file(
        format!("{fig}_combined.csv"),
        &["q_th", "lca_ec", "fca_ec", "sub_ec", "slb_ec", "mc", "mc_stderr", "hybrid"],
        rows,
    )?;
    Ok(written)
}

/// Parameters for `bounds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsRequest {
    Ldt { theta: f64, p: f64 },
    Gpd { xi_t: f64, sigma_t: f64 },
    Gev { xi: f64, mu: f64, sigma: f64 },
}

pub fn run_bounds(req: BoundsRequest) -> Result<ErrorBoundReport> {
    match req {
        BoundsRequest::Ldt { theta, p } => ldt_bounds(theta, p),
        BoundsRequest::Gpd { xi_t, sigma_t } => gpd_bounds(xi_t, sigma_t),
        BoundsRequest::Gev { xi, mu, sigma } => gev_bounds(xi, mu, sigma),
    }
}

/// `build-matrix`: one kernel of the SQL chain as CSV.
pub fn run_build_matrix<W: Write>(cfg: &RunConfig, kind: KernelKind, out: W) -> Result<TruncatedKernel> {
    let r = cfg.resolve()?;
    let raw = r.build_kernel().map_err(|e| e.in_stage("build"))?;
    let k = match kind {
        KernelKind::RawSubstochastic => raw,
        KernelKind::Lca => crate::augment::last_column_augment(&raw)?,
        KernelKind::Fca => crate::augment::first_column_augment(&raw)?,
        KernelKind::MonotoneUpper => crate::augment::monotone_upper_envelope(&crate::augment::last_column_augment(&raw)?)?,
        KernelKind::MonotoneLower => crate::augment::monotone_lower_envelope(&crate::augment::first_column_augment(&raw)?)?,
    };
    k.write_csv(out, &[format!("config_hash={} seed={}", cfg.hash(), seed_label(cfg))])?;
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.to_string().parse::<Figure>().unwrap(), f);
        }
        assert_eq!(Figure::Fig7.setting(), (4.0, 12.0));
        assert!("fig8".parse::<Figure>().is_err());
    }

    #[test]
    fn analyze_csv_round_trips() {
        let cfg = RunConfig::table_iii(2.0, 3, 6.0);
        let mut buf = Vec::new();
        let a = run_analyze(&cfg, &mut buf).unwrap();
        let f = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(f.meta_value("config_hash"), Some(cfg.hash().as_str()));
        assert_eq!(f.header, ANALYZE_HEADER);
        assert_eq!(f.rows.len(), 25);
        let sub = f.column("sub_ec").unwrap();
        let slb = f.column("slb_ec").unwrap();
        for (u, l) in sub.iter().zip(&slb) {
            assert!(u.unwrap() >= l.unwrap());
        }
        assert_eq!(sub[3].unwrap(), a.tails.sub.eval(3.0).value);
        assert!(f.column("eps_sub").unwrap()[7].is_none());
    }

    #[test]
    fn bounds_dispatch() {
        let r = run_bounds(BoundsRequest::Ldt { theta: 1.0, p: 0.0 }).unwrap();
        assert!((r.lower - 0.5819767068693265).abs() < 1e-12);
        assert_eq!(run_bounds(BoundsRequest::Gpd { xi_t: 0.3, sigma_t: 1.0 }).unwrap().upper, crate::errbounds::Bound::Unbounded);
    }
}
