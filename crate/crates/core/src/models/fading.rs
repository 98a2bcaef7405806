use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{config_err, Result};
use crate::quadrature::integrate;
use crate::tolerance::PDF_MASS;

const CDF_CELLS: usize = 2048;
const QUANTILE_POINTS: usize = 1 << 14;

/// Distribution of the channel power gain |h|^2.
#[derive(Clone, Debug)]
pub enum FadingModel {
    Rayleigh { mean_gain: f64 },
    Custom(CustomPdf),
}

/// User-supplied density on (0, support_hi].
///
/// The density is integrated once into a table of cell masses; whatever
/// mass the integral misses is folded into the last cell so the CDF
/// reaches exactly 1 at `support_hi`.
#[derive(Clone)]
pub struct CustomPdf {
    pdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support_hi: f64,
    cum: Arc<Vec<f64>>,
    last_scale: f64,
    quantiles: Arc<OnceLock<Vec<f64>>>,
}

impl fmt::Debug for CustomPdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPdf")
            .field("support_hi", &self.support_hi)
            .finish_non_exhaustive()
    }
}

impl CustomPdf {
    pub fn new<F>(pdf: F, support_hi: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_hi > 0.0) || !support_hi.is_finite() {
            return Err(config_err(format!("support_hi must be positive and finite, got {support_hi}")));
        }
        let h = support_hi / CDF_CELLS as f64;
        let mut cum = Vec::with_capacity(CDF_CELLS + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for c in 0..CDF_CELLS {
            let m = integrate(&pdf, c as f64 * h, (c + 1) as f64 * h, 1e-12)?;
            if !(m >= 0.0) {
                return Err(config_err(format!("pdf has negative mass on cell {c}")));
            }
            acc += m;
            cum.push(acc);
        }
        if (acc - 1.0).abs() > PDF_MASS {
            return Err(config_err(format!(
                "pdf integrates to {acc} on (0, {support_hi}], expected 1 within {PDF_MASS}"
            )));
        }
        let last = cum[CDF_CELLS] - cum[CDF_CELLS - 1];
        let residual = 1.0 - acc;
        let last_scale = if last > 0.0 { (last + residual) / last } else { 1.0 };
        cum[CDF_CELLS] = 1.0;
        Ok(CustomPdf {
            pdf: Arc::new(pdf),
            support_hi,
            cum: Arc::new(cum),
            last_scale,
            quantiles: Arc::new(OnceLock::new()),
        })
    }

    fn cell_width(&self) -> f64 {
        self.support_hi / CDF_CELLS as f64
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.support_hi {
            return 1.0;
        }
        let h = self.cell_width();
        let c = ((x / h) as usize).min(CDF_CELLS - 1);
        let lo = c as f64 * h;
        let part = integrate(&*self.pdf, lo, x, 1e-12).unwrap_or(0.0);
        let part = if c == CDF_CELLS - 1 { part * self.last_scale } else { part };
        (self.cum[c] + part).min(1.0)
    }

    fn quantile_exact(&self, p: f64) -> f64 {
        let c = self.cum.partition_point(|&v| v < p).clamp(1, CDF_CELLS) - 1;
        let h = self.cell_width();
        let (mut lo, mut hi) = (c as f64 * h, (c + 1) as f64 * h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn quantile_table(&self) -> &[f64] {
        self.quantiles.get_or_init(|| {
            (0..=QUANTILE_POINTS)
                .map(|k| match k {
                    0 => 0.0,
                    k if k == QUANTILE_POINTS => self.support_hi,
                    k => self.quantile_exact(k as f64 / QUANTILE_POINTS as f64),
                })
                .collect()
        })
    }
}

impl FadingModel {
    pub fn rayleigh(mean_gain: f64) -> Result<Self> {
        if !(mean_gain > 0.0) || !mean_gain.is_finite() {
            return Err(config_err(format!("Rayleigh mean gain must be positive, got {mean_gain}")));
        }
        Ok(FadingModel::Rayleigh { mean_gain })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / mean_gain).exp() / mean_gain
                }
            }
            FadingModel::Custom(c) => {
                if x <= 0.0 || x > c.support_hi {
                    0.0
                } else {
                    (c.pdf)(x)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean_gain).exp_m1()
                }
            }
            FadingModel::Custom(c) => c.cdf(x),
        }
    }

    /// Pr{a <= X < b}; `b` may be infinite.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        match self {
            FadingModel::Rayleigh { mean_gain } => {
                let sa = (-a.max(0.0) / mean_gain).exp();
                let sb = if b.is_infinite() { 0.0 } else { (-b.max(0.0) / mean_gain).exp() };
                (sa - sb).max(0.0)
            }
            FadingModel::Custom(c) => (c.cdf(b) - c.cdf(a)).max(0.0),
        }
    }

    /// Upper end of the gain axis used by the kernel builders.
    pub fn support_hi(&self) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => self.quantile(1.0 - 1e-12).max(*mean_gain),
            FadingModel::Custom(c) => c.support_hi,
        }
    }

    /// Point beyond which the distribution carries no representable mass.
    pub fn search_hi(&self) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => 750.0 * mean_gain,
            FadingModel::Custom(c) => c.support_hi,
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => -mean_gain * (-p).ln_1p(),
            FadingModel::Custom(c) => c.quantile_exact(p.clamp(0.0, 1.0)),
        }
    }

    /// Maps a uniform variate `u ∈ (0, 1]` to a gain.
    ///
    /// Custom densities go through a tabulated inverse CDF with linear
    /// interpolation between 2^14 quantiles.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => -mean_gain * u.ln(),
            FadingModel::Custom(c) => {
                let t = c.quantile_table();
                let pos = u.clamp(0.0, 1.0) * QUANTILE_POINTS as f64;
                let k = (pos as usize).min(QUANTILE_POINTS - 1);
                let w = pos - k as f64;
                t[k] + w * (t[k + 1] - t[k])
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => *mean_gain,
            FadingModel::Custom(c) => {
                integrate(|x| x * (c.pdf)(x), 0.0, c.support_hi, 1e-10).unwrap_or(f64::NAN)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rayleigh_mass_and_quantiles() {
        let f = FadingModel::rayleigh(2.0).unwrap();
        assert_relative_eq!(f.mass(0.0, f64::INFINITY), 1.0);
        assert_relative_eq!(f.mass(2.0, 4.0), (-1.0f64).exp() - (-2.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(f.cdf(f.quantile(0.3)), 0.3, max_relative = 1e-14);
        assert_relative_eq!(f.support_hi(), 2.0 * 12.0 * std::f64::consts::LN_10, max_relative = 1e-3);
        assert_relative_eq!(f.sample((-1.0f64).exp()), 2.0, max_relative = 1e-14);
        assert!(FadingModel::rayleigh(0.0).is_err());
    }

    #[test]
    fn custom_uniform() {
        let c = CustomPdf::new(|_| 0.5, 2.0).unwrap();
        let f = FadingModel::Custom(c);
        assert_relative_eq!(f.cdf(0.5), 0.25, max_relative = 1e-12);
        assert_relative_eq!(f.mass(0.5, 1.5), 0.5, max_relative = 1e-12);
        assert_relative_eq!(f.quantile(0.75), 1.5, max_relative = 1e-9);
        assert_relative_eq!(f.sample(0.5), 1.0, max_relative = 1e-9);
        assert_relative_eq!(f.mean(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn custom_rejects_bad_mass() {
        assert!(CustomPdf::new(|_| 1.0, 2.0).is_err());
        assert!(CustomPdf::new(|_| 1.0, 0.0).is_err());
    }

    #[test]
    fn custom_truncated_exponential_folds_residual() {
        // e^{-x} on (0, 20] misses ~2e-9 of mass, inside the tolerance.
        let c = CustomPdf::new(|x: f64| (-x).exp(), 20.0).unwrap();
        let f = FadingModel::Custom(c);
        assert_eq!(f.cdf(20.0), 1.0);
        assert_relative_eq!(f.cdf(1.0), 1.0 - (-1.0f64).exp(), max_relative = 1e-10);
    }
}
