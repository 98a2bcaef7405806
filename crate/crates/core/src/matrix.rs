//! Truncated one-step transition matrices over the small-queue states 0..=α.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{config_err, QvpError, Result};
use crate::models::{service, ArrivalModel, FadingModel, LyapunovPolicy, Scheduler, SystemParams};
use crate::tolerance::{DEFICIT_NEGATIVE, LATTICE, PDF_MASS, ROW_SUM, SUBSTOCHASTIC_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    RawSubstochastic,
    Fca,
    Lca,
    MonotoneUpper,
    MonotoneLower,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelKind::RawSubstochastic => "raw",
            KernelKind::Fca => "fca",
            KernelKind::Lca => "lca",
            KernelKind::MonotoneUpper => "upper",
            KernelKind::MonotoneLower => "lower",
        };
        f.write_str(s)
    }
}

impl FromStr for KernelKind {
    type Err = QvpError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "raw" => KernelKind::RawSubstochastic,
            "fca" => KernelKind::Fca,
            "lca" => KernelKind::Lca,
            "upper" => KernelKind::MonotoneUpper,
            "lower" => KernelKind::MonotoneLower,
            other => return Err(config_err(format!("unknown kernel kind '{other}'"))),
        })
    }
}

/// Dense (α/κ+1)×(α/κ+1) kernel with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedKernel {
    entries: DMatrix<f64>,
    kind: KernelKind,
    alpha: f64,
    kappa: f64,
}

impl TruncatedKernel {
    /// Validates entries in [0, 1] and the row-sum rule for `kind`.
    pub fn new(entries: DMatrix<f64>, kind: KernelKind, alpha: f64, kappa: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(config_err(format!(
                "kernel must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for (i, row) in entries.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(**v >= -SUBSTOCHASTIC_SLACK && **v <= 1.0 + SUBSTOCHASTIC_SLACK)) {
                return Err(QvpError::NumericalIntegrity(format!("{kind} kernel row {i} has entry {v}")));
            }
            let s = row.sum();
            let ok = match kind {
                KernelKind::RawSubstochastic => s <= 1.0 + SUBSTOCHASTIC_SLACK,
                _ => (s - 1.0).abs() <= ROW_SUM,
            };
            if !ok {
                return Err(QvpError::NumericalIntegrity(format!("{kind} kernel row {i} sums to {s}")));
            }
        }
        Ok(TruncatedKernel { entries, kind, alpha, kappa })
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: KernelKind, alpha: f64, kappa: f64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(config_err("kernel rows must all have length equal to the row count"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(m, kind, alpha, kappa)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
    pub fn kind(&self) -> KernelKind {
        self.kind
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }

    pub(crate) fn with_entries(&self, entries: DMatrix<f64>, kind: KernelKind) -> Result<Self> {
        Self::new(entries, kind, self.alpha, self.kappa)
    }

    /// Row-major CSV with a `# dim=.. alpha=.. kappa=.. kind=..` comment line.
    /// Extra `#` lines in `preamble` are written first.
    pub fn write_csv<W: Write>(&self, mut w: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# dim={} alpha={} kappa={} kind={}", self.dim(), self.alpha, self.kappa, self.kind)?;
        let mut cw = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.entries.row_iter() {
            cw.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut meta = None;
        for line in text.lines().filter(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if body.starts_with("dim=") {
                meta = Some(parse_meta(body)?);
            }
        }
        let (dim, alpha, kappa, kind) =
            meta.ok_or_else(|| config_err("kernel CSV lacks a '# dim=.. alpha=.. kappa=.. kind=..' line"))?;
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::with_capacity(dim);
        for rec in rd.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| config_err(format!("bad kernel entry '{s}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != dim {
            return Err(config_err(format!("kernel CSV declares dim={dim} but has {} rows", rows.len())));
        }
        Self::from_rows(&rows, kind, alpha, kappa)
    }
}

fn parse_meta(body: &str) -> Result<(usize, f64, f64, KernelKind)> {
    let mut dim = None;
    let mut alpha = None;
    let mut kappa = None;
    let mut kind = None;
    for kv in body.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| config_err(format!("bad header token '{kv}'")))?;
        let bad = |e: &dyn fmt::Display| config_err(format!("bad header value {k}={v}: {e}"));
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
            "alpha" => alpha = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            "kappa" => kappa = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            "kind" => kind = Some(v.parse::<KernelKind>()?),
            _ => {}
        }
    }
    match (dim, alpha, kappa, kind) {
        (Some(d), Some(a), Some(k), Some(t)) => Ok((d, a, k, t)),
        _ => Err(config_err(format!("incomplete kernel header '{body}'"))),
    }
}

/// Number of lattice units in `x`, or a configuration error when `x/kappa`
/// is not an integer.
pub(crate) fn lattice_units(x: f64, kappa: f64, what: &str) -> Result<usize> {
    let u = x / kappa;
    let r = u.round();
    if !(r >= 0.0) || (u - r).abs() > LATTICE * r.max(1.0) {
        return Err(config_err(format!("{what} = {x} is not a nonnegative multiple of kappa = {kappa}")));
    }
    Ok(r as usize)
}

/// Smallest gain with service ≥ `target` packets at queue length `q`, or
/// `None` if no gain up to `hi` reaches it.
fn level_threshold(pol: &dyn Scheduler, params: &SystemParams, q: f64, kappa: f64, target: f64, hi: f64) -> Option<f64> {
    let reaches = |x: f64| service(pol, params, q, x, kappa) >= target - LATTICE * kappa;
    if reaches(0.0) {
        return Some(0.0);
    }
    if !reaches(hi) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Q_AA for an arbitrary policy by exact pdf mass on each constant-service
/// gain interval.
pub fn build_qaa_generic(
    pol: &dyn Scheduler,
    arr: &ArrivalModel,
    fade: &FadingModel,
    params: &SystemParams,
    alpha: f64,
) -> Result<TruncatedKernel> {
    let kappa = params.kappa_sql;
    let top = lattice_units(alpha, kappa, "alpha")?;
    let dim = top + 1;
    let arrivals: Vec<(usize, f64)> = arr
        .support()
        .into_iter()
        .map(|(k, p)| Ok((lattice_units(k, kappa, "arrival")?, p)))
        .collect::<Result<_>>()?;
    let hi = fade.search_hi();

    let rows: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let q = i as f64 * kappa;
            let cap_units = i.min((params.s_max_packets / kappa + LATTICE).floor() as usize);
            // Pr{service = n κ}, n = 0..=cap_units.
            let mut edges = vec![0.0];
            for n in 1..=cap_units {
                match level_threshold(pol, params, q, kappa, n as f64 * kappa, hi) {
                    Some(t) => edges.push(t.max(*edges.last().unwrap())),
                    None => break,
                }
            }
            edges.push(f64::INFINITY);
            let level_mass: Vec<f64> = edges.windows(2).map(|w| fade.mass(w[0], w[1])).collect();
            let total: f64 = level_mass.iter().sum();
            let full = fade.mass(0.0, f64::INFINITY);
            if (total - full).abs() > PDF_MASS || (full - 1.0).abs() > PDF_MASS {
                return Err(QvpError::NumericalIntegrity(format!(
                    "row {i}: service-level masses sum to {total}, channel mass {full}"
                )));
            }
            let mut row = vec![0.0; dim];
            for (n, m) in level_mass.iter().enumerate() {
                for &(k, p) in &arrivals {
                    let j = i - n + k;
                    if j < dim {
                        row[j] += p * m;
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    TruncatedKernel::from_rows(&rows, KernelKind::RawSubstochastic, alpha, kappa)
}

/// Q_AA for the Lyapunov policy under Rayleigh fading from the closed-form
/// interval sets, with Rayleigh masses as differences of e^{-x/ḡ}.
pub fn build_qaa_lyapunov(pol: &LyapunovPolicy, fade: &FadingModel, alpha: f64) -> Result<TruncatedKernel> {
    let mean_gain = match fade {
        FadingModel::Rayleigh { mean_gain } => *mean_gain,
        FadingModel::Custom(_) => return Err(config_err("closed-form kernel needs Rayleigh fading")),
    };
    let params = pol.params();
    let kappa = params.kappa_sql;
    let top = lattice_units(alpha, kappa, "alpha")?;
    let l = lattice_units(pol.lambda(), kappa, "lambda")? as i64;
    if params.s_max_packets < alpha {
        return Err(config_err(format!(
            "closed-form kernel assumes S_max >= alpha, got S_max = {}",
            params.s_max_packets
        )));
    }
    let dim = top + 1;
    let r = kappa * params.packet_bits / params.blocklength();
    let survival = |x: f64| if x.is_infinite() { 0.0 } else { (-x / mean_gain).exp() };
    let mass = |a: f64, b: f64| {
        assert!(!a.is_nan() && !b.is_nan(), "interval endpoint is NaN");
        if b > a {
            survival(a) - survival(b)
        } else {
            0.0
        }
    };

    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let psi = pol.cutoff_gain(pol.backlog_level(i as f64 * kappa));
        let ii = i as i64;
        for j in 0..dim {
            let jj = j as i64;
            let mut v = 0.0;
            if jj <= ii + l {
                let n = (ii - jj + l) as f64;
                // F(1): exactly n quanta served.
                let lo = (psi * 2f64.powf(r * n)).max(psi);
                let hi = psi * 2f64.powf(r * (n + 1.0)).min(2f64.powf(r * (ii as f64 + 1.0)));
                v += mass(lo, hi);
                // F(2): no power, nothing served.
                if jj == ii + l {
                    v += mass(0.0, psi);
                }
            }
            // G: the whole queue is served, next state is the arrival.
            if jj == l {
                v += mass(psi * 2f64.powf(r * (ii as f64 + 1.0)), f64::INFINITY);
            }
            m[(i, j)] = v;
        }
    }
    TruncatedKernel::new(m, KernelKind::RawSubstochastic, alpha, kappa)
}

/// Δ = 1 − Q_AA·1, clamped at zero.
pub fn kernel_mass_deficit(k: &TruncatedKernel) -> Result<Vec<f64>> {
    if k.kind() != KernelKind::RawSubstochastic {
        return Err(config_err(format!("mass deficit is defined for raw kernels, got {}", k.kind())));
    }
    k.entries()
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            let d = 1.0 - row.sum();
            if d < -DEFICIT_NEGATIVE {
                Err(QvpError::NumericalIntegrity(format!("row {i} has negative deficit {d}")))
            } else {
                Ok(d.max(0.0))
            }
        })
        .collect()
}
