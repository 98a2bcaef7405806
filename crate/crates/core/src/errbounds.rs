//! Accumulated decay-rate error ϑ(α) and its closed-form bounds.

use std::fmt;

use crate::augment::censored_stationary_oracle;
use crate::error::{domain_err, Result};

/// Upper end of a bound interval. Unbounded cases never become `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Unbounded => None,
        }
    }

    /// `x` lies at or below the bound (always true when unbounded).
    pub fn admits(&self, x: f64) -> bool {
        match self {
            Bound::Finite(v) => x <= *v,
            Bound::Unbounded => true,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    LdtGeneralP,
    LdtP0,
    GpdXi0,
    GpdXiPos,
    GevXi01,
    GevXi1,
    GevXi0,
    GevXiGt1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundParams {
    Ldt { theta: f64, p: f64 },
    Gpd { xi_t: f64, sigma_t: f64 },
    Gev { xi: f64, mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundReport {
    pub regime: Regime,
    pub lower: f64,
    pub upper: Bound,
    pub params: BoundParams,
}

impl fmt::Display for ErrorBoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = match self.params {
            BoundParams::Ldt { theta, p } => format!("theta={theta} p={p}"),
            BoundParams::Gpd { xi_t, sigma_t } => format!("xi_t={xi_t} sigma_t={sigma_t}"),
            BoundParams::Gev { xi, mu, sigma } => format!("xi={xi} mu={mu} sigma={sigma}"),
        };
        writeln!(f, "{:<8} {}", "params", params)?;
        writeln!(f, "{:<8} {:?}", "regime", self.regime)?;
        writeln!(f, "{:<8} {}", "lower", self.lower)?;
        write!(f, "{:<8} {}", "upper", self.upper)
    }
}

/// Bounds on lim ϑ(α) for tails ln Pr{q > k} ≈ −θk + b k^p.
pub fn ldt_bounds(theta: f64, p: f64) -> Result<ErrorBoundReport> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain_err(format!("theta must be positive, got {theta}")));
    }
    if !(p < 1.0) {
        return Err(domain_err(format!("p must be below 1, got {p}")));
    }
    let a = theta.exp_m1();
    let upper = 1.0 / (a * -(-theta).exp_m1());
    let (regime, lower) = if p == 0.0 { (Regime::LdtP0, 1.0 / a) } else { (Regime::LdtGeneralP, 0.0) };
    Ok(ErrorBoundReport { regime, lower, upper: Bound::Finite(upper), params: BoundParams::Ldt { theta, p } })
}

/// Bounds for generalized-Pareto exceedance tails.
pub fn gpd_bounds(xi_t: f64, sigma_t: f64) -> Result<ErrorBoundReport> {
    if !(sigma_t > 0.0) {
        return Err(domain_err(format!("sigma_t must be positive, got {sigma_t}")));
    }
    if !(xi_t >= 0.0) {
        return Err(domain_err(format!("xi_t must be >= 0, got {xi_t}")));
    }
    let params = BoundParams::Gpd { xi_t, sigma_t };
    if xi_t > 0.0 {
        return Ok(ErrorBoundReport { regime: Regime::GpdXiPos, lower: 0.0, upper: Bound::Unbounded, params });
    }
    let r = ldt_bounds(1.0 / sigma_t, 0.0)?;
    Ok(ErrorBoundReport { regime: Regime::GpdXi0, params, ..r })
}

/// Bounds for generalized-extreme-value tails.
pub fn gev_bounds(xi: f64, mu: f64, sigma: f64) -> Result<ErrorBoundReport> {
    if !(sigma > 0.0) {
        return Err(domain_err(format!("sigma must be positive, got {sigma}")));
    }
    if !(xi >= 0.0) || !mu.is_finite() {
        return Err(domain_err(format!("need xi >= 0 and finite mu, got xi={xi}, mu={mu}")));
    }
    let params = BoundParams::Gev { xi, mu, sigma };
    let (regime, upper) = if xi > 1.0 {
        (Regime::GevXiGt1, Bound::Unbounded)
    } else if xi == 1.0 {
        (Regime::GevXi1, Bound::Finite(sigma + sigma * sigma))
    } else if xi > 0.0 {
        (Regime::GevXi01, Bound::Finite(sigma * sigma / xi))
    } else {
        let v = (-(1.0 - mu) / sigma).exp() / -(-1.0 / sigma).exp_m1();
        (Regime::GevXi0, Bound::Finite(v))
    };
    Ok(ErrorBoundReport { regime, lower: 0.0, upper, params })
}

/// ι1 = α ln(1 − ε(α)), ι2 = Σ ln(E_k/(E_k − ε(α))) and the χ1 ≤ ι2 ≤ χ2
/// comparators, with E_k = Σ_{i>k} π_i and ε(α) = E_α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IotaDecomposition {
    pub iota1: f64,
    pub iota2: f64,
    pub chi1: f64,
    pub chi2: f64,
}

/// Suffix sums E_k = Σ_{i>k} π_i for k = 0..=alpha.
fn exceedances(pi: &[f64], alpha: usize) -> Result<Vec<f64>> {
    if alpha == 0 || alpha >= pi.len() {
        return Err(domain_err(format!("alpha = {alpha} must lie in 1..{}", pi.len())));
    }
    let mut suffix = vec![0.0; pi.len() + 1];
    for k in (0..pi.len()).rev() {
        suffix[k] = suffix[k + 1] + pi[k];
    }
    Ok((0..=alpha).map(|k| suffix[k + 1]).collect())
}

pub fn iota_decomposition(pi_full: &[f64], alpha: usize) -> Result<IotaDecomposition> {
    let e = exceedances(pi_full, alpha)?;
    let t = e[alpha];
    let mut d = IotaDecomposition { iota1: alpha as f64 * (-t).ln_1p(), iota2: 0.0, chi1: 0.0, chi2: 0.0 };
    if t == 0.0 {
        return Ok(d);
    }
    for (k, ek) in e[..alpha].iter().enumerate() {
        if !(*ek > t) {
            return Err(domain_err(format!("tail sum at k={k} equals the tail beyond alpha ({ek})")));
        }
        d.iota2 -= (-t / ek).ln_1p();
        d.chi1 += t / ek;
        d.chi2 += t / (ek - t);
    }
    Ok(d)
}

/// ϑ(α) = Σ_{k<α} |ln(1 − Σ_{i≤k} π_i) − ln(1 − Σ_{i≤k} π^(α)_i)|.
pub fn accumulated_error(pi_full: &[f64], alpha: usize) -> Result<f64> {
    let e = exceedances(pi_full, alpha)?;
    let cens = censored_stationary_oracle(pi_full, alpha)?;
    // 1 − Σ_{i≤k} π^(α)_i as a suffix sum, which keeps full relative precision.
    let mut c_suffix = vec![0.0; alpha + 2];
    for k in (0..=alpha).rev() {
        c_suffix[k] = c_suffix[k + 1] + cens[k];
    }
    let mut total = 0.0;
    for k in 0..alpha {
        let c_tail = c_suffix[k + 1];
        if e[k] == 0.0 && c_tail == 0.0 {
            continue;
        }
        if !(e[k] > 0.0) || !(c_tail > 0.0) {
            return Err(domain_err(format!("zero tail sum at k={k}")));
        }
        total += (e[k].ln() - c_tail.ln()).abs();
    }
    Ok(total)
}

/// π_k by differencing a CCDF `sf(k)` = Pr{q > k} on 0..=n; the mass
/// beyond n is folded into π_n.
pub fn pi_from_exceedance<F: Fn(usize) -> f64>(sf: F, n: usize) -> Vec<f64> {
    let mut pi = Vec::with_capacity(n + 1);
    let mut prev = 1.0;
    for k in 0..n {
        let s = sf(k);
        pi.push(prev - s);
        prev = s;
    }
    pi.push(prev);
    pi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geometric(theta: f64, n: usize) -> Vec<f64> {
        pi_from_exceedance(|k| (-theta * (k + 1) as f64).exp(), n)
    }

    #[test]
    fn accumulated_error_examples() {
        assert_eq!(accumulated_error(&[0.5, 0.5, 0.0, 0.0], 1).unwrap(), 0.0);
        let v = accumulated_error(&[0.5, 0.25, 0.25], 1).unwrap();
        assert_relative_eq!(v, (0.5f64.ln() - (1.0f64 / 3.0).ln()).abs(), max_relative = 1e-14);
        let pi = geometric(1.0, 200);
        let v = accumulated_error(&pi, 30).unwrap();
        let r = ldt_bounds(1.0, 0.0).unwrap();
        assert!(v >= r.lower && r.upper.admits(v), "{v} outside [{}, {}]", r.lower, r.upper);
    }

    #[test]
    fn ldt_examples() {
        let r = ldt_bounds(1.0, 0.0).unwrap();
        assert_relative_eq!(r.lower, 0.581_976_706_869_326_5, max_relative = 1e-14);
        assert_relative_eq!(r.upper.finite().unwrap(), 0.920_673_594_207_792, max_relative = 1e-14);
        let r = ldt_bounds(40.0, 0.0).unwrap();
        assert!(r.upper.finite().unwrap() < 1e-16);
        assert_relative_eq!(r.lower / r.upper.finite().unwrap(), 1.0, max_relative = 1e-15);
        let r = ldt_bounds(1.0, 0.5).unwrap();
        assert_eq!(r.lower, 0.0);
        assert_eq!(r.regime, Regime::LdtGeneralP);
        assert_relative_eq!(r.upper.finite().unwrap(), 0.920_673_594_207_792, max_relative = 1e-14);
        assert!(ldt_bounds(0.0, 0.0).is_err());
        assert!(ldt_bounds(1.0, 1.0).is_err());
    }

    #[test]
    fn gpd_examples() {
        assert_eq!(gpd_bounds(0.5, 1.0).unwrap().upper, Bound::Unbounded);
        let a = gpd_bounds(0.0, 1.0).unwrap();
        let b = ldt_bounds(1.0, 0.0).unwrap();
        assert_eq!((a.lower, a.upper), (b.lower, b.upper));
        let c = gpd_bounds(0.0, 0.5).unwrap();
        let d = ldt_bounds(2.0, 0.0).unwrap();
        assert_eq!((c.lower, c.upper), (d.lower, d.upper));
        assert_relative_eq!(c.lower, 1.0 / (2f64.exp() - 1.0), max_relative = 1e-14);
    }

    #[test]
    fn gev_examples() {
        assert_eq!(gev_bounds(1.0, 0.0, 2.0).unwrap().upper, Bound::Finite(6.0));
        assert_eq!(gev_bounds(0.5, 0.0, 1.0).unwrap().upper, Bound::Finite(2.0));
        assert_eq!(gev_bounds(2.0, 0.0, 1.0).unwrap().upper, Bound::Unbounded);
        let r = gev_bounds(0.0, 0.0, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert_relative_eq!(r.upper.finite().unwrap(), e / (1.0 - e), max_relative = 1e-14);
        assert!(gev_bounds(-0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let d = iota_decomposition(&[0.5, 0.5, 0.0], 1).unwrap();
        assert_eq!((d.iota1, d.iota2, d.chi1, d.chi2), (0.0, 0.0, 0.0, 0.0));
        let pi = geometric(1.0, 200);
        let d = iota_decomposition(&pi, 30).unwrap();
        let v = accumulated_error(&pi, 30).unwrap();
        assert_relative_eq!(d.iota1 + d.iota2, v, epsilon = 1e-10);
        assert!(d.chi1 <= d.iota2 && d.iota2 <= d.chi2);
        assert!(d.iota1 <= 0.0 && d.iota1.abs() < 30.0 * (-31.0f64).exp() * 1.01);
    }

    #[test]
    fn gev_shaped_chain_decomposes() {
        let (mu, sigma) = (0.5, 1.5);
        let sf = |k: usize| -(-(-((k + 1) as f64 - mu) / sigma).exp()).exp_m1();
        let pi = pi_from_exceedance(sf, 400);
        let d = iota_decomposition(&pi, 50).unwrap();
        assert_relative_eq!(d.iota1 + d.iota2, accumulated_error(&pi, 50).unwrap(), epsilon = 1e-10);
        assert!(d.chi1 <= d.iota2 && d.iota2 <= d.chi2);
    }

    #[test]
    fn degenerate_tails_rejected() {
        // Tail beyond α equals the tail at k = 0: censoring removes everything.
        assert!(iota_decomposition(&[1.0, 0.0, 0.0, 0.0], 0).is_err());
        assert!(accumulated_error(&[0.5, 0.0, 0.5], 1).is_err());
    }

    #[test]
    fn upper_decreasing_in_theta() {
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let u = ldt_bounds(0.1 * k as f64, 0.0).unwrap().upper.finite().unwrap();
            assert!(u < last);
            last = u;
        }
    }
}
