//! Large-queue regime: effective bandwidth and capacity, QoS exponents, and
//! the piecewise log-linear tail.

use crate::error::{config_err, domain_err, QvpError, Result};
use crate::models::{ArrivalModel, FadingModel, LyapunovPolicy, RateMap, SystemParams};
use crate::quadrature::integrate_pieces;
use crate::special::upper_gamma_scaled;
use crate::tolerance::{LATTICE, QOS_RESIDUAL, TAIL_UNDERFLOW};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain_err(format!("theta must be positive and finite, got {theta}")));
    }
    Ok(())
}

/// EB(θ) = (1/θ) ln E[e^{θa}] in packets per slot.
pub fn effective_bandwidth(arr: &ArrivalModel, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    match arr {
        ArrivalModel::Deterministic { lambda } => Ok(*lambda),
        ArrivalModel::Pmf { .. } => {
            let support = arr.support();
            let a_max = arr.a_max();
            if theta * a_max < 1.0 {
                // E[e^{θa}] − 1 = Σ p (e^{θk} − 1), accurate as θ → 0.
                let s: f64 = support.iter().map(|(k, p)| p * (theta * k).exp_m1()).sum();
                Ok(s.ln_1p() / theta)
            } else {
                let m = theta * a_max;
                let s: f64 = support.iter().map(|(k, p)| p * (theta * k - m).exp()).sum();
                Ok((m + s.ln()) / theta)
            }
        }
    }
}

/// Per-slot service Λ(x) in packets, without the κ quantum floor.
pub fn segment_packets(seg: &dyn RateMap, params: &SystemParams, gain: f64) -> f64 {
    (seg.bits(gain) / params.packet_bits).clamp(0.0, params.s_max_packets)
}

/// ∫ h(x) f(x) dx over the gain axis, split at the rate map's kinks and
/// integrated in units of the channel's natural scale.
fn channel_expectation<H: Fn(f64) -> f64>(seg: &dyn RateMap, fade: &FadingModel, h: H) -> Result<f64> {
    let (scale, top) = match fade {
        FadingModel::Rayleigh { mean_gain } => (*mean_gain, f64::INFINITY),
        FadingModel::Custom(_) => (fade.support_hi(), 1.0),
    };
    let mut pts = vec![0.0];
    let mut k: Vec<f64> = seg
        .kinks()
        .into_iter()
        .map(|x| x / scale)
        .filter(|u| *u > 0.0 && *u < top)
        .collect();
    k.sort_by(f64::total_cmp);
    pts.extend(k);
    if top.is_infinite() {
        // Extra splits keep the transformed infinite piece well resolved.
        let last = *pts.last().unwrap();
        pts.extend([last + 1.0, last + 10.0, last + 40.0]);
    }
    pts.push(top);
    integrate_pieces(|u| h(u * scale) * fade.pdf(u * scale) * scale, &pts, 1e-13)
}

/// EC(θ) = −(1/θ) ln E[e^{−θΛ}] in packets per slot.
pub fn effective_capacity(seg: &dyn RateMap, params: &SystemParams, fade: &FadingModel, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let i = channel_expectation(seg, fade, |x| (-theta * segment_packets(seg, params, x)).exp_m1())?;
    if i > -0.5 {
        return Ok(-i.ln_1p() / theta);
    }
    // Far from θ = 0: shift by the smallest service Λ(0) so the expectation
    // stays representable.
    let base = segment_packets(seg, params, 0.0);
    let j = channel_expectation(seg, fade, |x| (-theta * (segment_packets(seg, params, x) - base)).exp())?;
    if !(j > 0.0) {
        return Err(QvpError::Quadrature(format!("E[exp(-theta*service)] underflowed at theta={theta}")));
    }
    Ok(base - j.ln() / theta)
}

/// E[Λ] in packets per slot.
pub fn mean_service(seg: &dyn RateMap, params: &SystemParams, fade: &FadingModel) -> Result<f64> {
    channel_expectation(seg, fade, |x| segment_packets(seg, params, x))
}

/// Closed-form EC of the Lyapunov segment [ωδ, ∞) with the floor dropped,
/// under Rayleigh fading with mean `mean_gain`.
pub fn ec_lyapunov_rayleigh(pol: &LyapunovPolicy, mean_gain: f64, omega: u32, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let p = pol.params();
    let psi = pol.cutoff_gain(omega as f64 * pol.delta() as f64) / mean_gain;
    let phi = p.blocklength() / p.packet_bits * theta * LOG2_E;
    // ψ^Φ Γ(1−Φ, ψ) = ψ e^{−ψ} S(1−Φ, ψ).
    let tail = psi * (-psi).exp() * upper_gamma_scaled(1.0 - phi, psi)?;
    let inner = -(-psi).exp_m1() + tail;
    let ec = -inner.ln() / theta;
    if ec.is_nan() {
        return Err(QvpError::NumericalIntegrity(format!("closed-form EC is NaN at theta={theta}, omega={omega}")));
    }
    Ok(ec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMethod {
    BinarySearch,
    Theorem6,
    Corollary1,
    Loose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosExponent {
    pub theta: f64,
    pub residual: f64,
    pub method: ThetaMethod,
}

const THETA_START: f64 = 1e-8;
const THETA_CEILING: f64 = 1e8;

fn bisect_root<G: Fn(f64) -> Result<f64>>(gap: G) -> Result<(f64, f64)> {
    let mut lo = THETA_START;
    let g_lo = gap(lo)?;
    if g_lo == 0.0 {
        return Ok((lo, 0.0));
    }
    let mut hi = 2.0 * lo;
    let mut g_hi = gap(hi)?;
    while g_hi.signum() == g_lo.signum() && g_hi != 0.0 {
        if hi >= THETA_CEILING {
            return Err(QvpError::NoRoot(format!(
                "EC - EB keeps sign {} on [{THETA_START}, {THETA_CEILING}] (gap {g_lo} at the start, {g_hi} at the end)",
                if g_lo > 0.0 { "+" } else { "-" }
            )));
        }
        lo = hi;
        hi *= 2.0;
        g_hi = gap(hi)?;
    }
    let s_lo = g_lo.signum();
    let mut best = if g_hi.abs() < gap(lo)?.abs() { (hi, g_hi) } else { (lo, gap(lo)?) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = gap(mid)?;
        if g.abs() < best.1.abs() {
            best = (mid, g);
        }
        if g == 0.0 {
            break;
        }
        if g.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((best.0, best.1.abs()))
}

/// Root of ec(θ) = eb(θ) by bracket expansion from θ = 1e-8 and bisection.
pub fn solve_qos_exponent<E, B>(ec: E, eb: B) -> Result<QosExponent>
where
    E: Fn(f64) -> Result<f64>,
    B: Fn(f64) -> Result<f64>,
{
    let (theta, residual) = bisect_root(|t| Ok(ec(t)? - eb(t)?))?;
    if residual > QOS_RESIDUAL {
        return Err(QvpError::NumericalIntegrity(format!(
            "EC - EB has residual {residual} at theta={theta}; the gap is not continuous there"
        )));
    }
    Ok(QosExponent { theta, residual, method: ThetaMethod::BinarySearch })
}

/// θ for one queue-independent segment, after checking E[Λ] > E[a].
pub fn solve_segment_exponent(
    seg: &dyn RateMap,
    params: &SystemParams,
    fade: &FadingModel,
    arr: &ArrivalModel,
) -> Result<QosExponent> {
    let service = mean_service(seg, params, fade)?;
    let arrival = arr.mean();
    if service <= arrival * (1.0 + 1e-9) {
        return Err(QvpError::Unstable { service, arrival });
    }
    solve_qos_exponent(|t| effective_capacity(seg, params, fade, t), |t| effective_bandwidth(arr, t))
}

/// θ_K from the closed-form EC equated to λ.
pub fn theorem6_theta(pol: &LyapunovPolicy, mean_gain: f64, omega: u32) -> Result<QosExponent> {
    let lam = pol.lambda();
    let r = solve_qos_exponent(|t| ec_lyapunov_rayleigh(pol, mean_gain, omega, t), |_| Ok(lam))?;
    Ok(QosExponent { method: ThetaMethod::Theorem6, ..r })
}

/// ψ = N0·V·A / (2T(ωδ + λ)) in units of the mean gain.
pub fn normalized_cutoff(pol: &LyapunovPolicy, mean_gain: f64, omega: u32) -> f64 {
    pol.cutoff_gain(omega as f64 * pol.delta() as f64) / mean_gain
}

/// Lower end υ of the bisection bracket in units of −(1/λ) ln ψ.
pub const COROLLARY1_UPSILON: f64 = 0.5;

/// Root of θ − (1/λ) ln(1 − 1/(cθ)) = −(1/λ) ln ψ, with c = (BT/A) log2 e.
pub fn corollary1_theta(psi: f64, lam: f64, bt_over_a_log2e: f64) -> Result<QosExponent> {
    if !(psi > 0.0 && psi < 1.0) || !(lam > 0.0) || !(bt_over_a_log2e > 0.0) {
        return Err(QvpError::NoRoot(format!(
            "corollary bracket needs 0 < psi < 1, lambda > 0, c > 0; got psi={psi}, lambda={lam}, c={bt_over_a_log2e}"
        )));
    }
    let target = -psi.ln() / lam;
    let floor = 1.0 / bt_over_a_log2e;
    let h = |t: f64| t - (-floor / t).ln_1p() / lam - target;
    let mut lo = (floor * (1.0 + 1e-9)).max(COROLLARY1_UPSILON * target);
    let mut hi = target;
    if !(lo < hi) || h(lo) >= 0.0 || h(hi) <= 0.0 {
        return Err(QvpError::NoRoot(format!(
            "corollary bracket [{lo}, {hi}] has no sign change (psi={psi} too large)"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = if h(lo).abs() <= h(hi).abs() { lo } else { hi };
    Ok(QosExponent { theta, residual: h(theta).abs(), method: ThetaMethod::Corollary1 })
}

/// θ ≈ −(1/λ) ln ψ.
pub fn loose_theta(psi: f64, lam: f64) -> Result<QosExponent> {
    if !(psi > 0.0 && psi < 1.0) || !(lam > 0.0) {
        return Err(domain_err(format!("loose approximation needs 0 < psi < 1 and lambda > 0, got {psi}, {lam}")));
    }
    Ok(QosExponent { theta: -psi.ln() / lam, residual: 0.0, method: ThetaMethod::Loose })
}

/// A tail value with an underflow marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    pub value: f64,
    pub ln_value: f64,
    pub underflow: bool,
}

impl TailValue {
    fn from_ln(ln_value: f64) -> Self {
        let v = ln_value.exp();
        if ln_value > f64::NEG_INFINITY && v < TAIL_UNDERFLOW {
            TailValue { value: 0.0, ln_value, underflow: true }
        } else {
            TailValue { value: v, ln_value, underflow: false }
        }
    }
}

/// One tail curve: the small-queue values up to α, then log-linear pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    head: Vec<f64>,
    kappa: f64,
    boundaries: Vec<f64>,
    thetas: Vec<f64>,
    ln_anchors: Vec<f64>,
}

impl TailCurve {
    /// `head[j]` = Pr{q ≥ jκ} for j = 0..=α/κ; `boundaries[0]` must be α.
    pub fn new(head: Vec<f64>, kappa: f64, boundaries: &[f64], thetas: &[f64]) -> Result<Self> {
        if head.is_empty() {
            return Err(config_err("tail head is empty"));
        }
        let alpha = (head.len() - 1) as f64 * kappa;
        if boundaries.is_empty() {
            return Err(config_err("tail needs at least one large-queue segment"));
        }
        if thetas.len() != boundaries.len() {
            return Err(config_err(format!(
                "{} large-queue segments but {} exponents",
                boundaries.len(),
                thetas.len()
            )));
        }
        if (boundaries[0] - alpha).abs() > LATTICE * alpha.max(1.0) {
            return Err(config_err(format!("first segment starts at {} but alpha is {alpha}", boundaries[0])));
        }
        if boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("segment boundaries must be strictly increasing"));
        }
        if let Some(t) = thetas.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(config_err(format!("segment exponent {t} must be positive")));
        }
        let mut ln_anchors = vec![head.last().copied().unwrap().ln()];
        for k in 1..boundaries.len() {
            let prev = ln_anchors[k - 1];
            ln_anchors.push(prev - thetas[k - 1] * (boundaries[k] - boundaries[k - 1]));
        }
        Ok(TailCurve { head, kappa, boundaries: boundaries.to_vec(), thetas: thetas.to_vec(), ln_anchors })
    }

    pub fn alpha(&self) -> f64 {
        self.boundaries[0]
    }

    /// ln Pr{q ≥ q_th}.
    pub fn ln_eval(&self, q_th: f64) -> f64 {
        if q_th <= self.alpha() {
            return self.head[self.head_index(q_th)].ln();
        }
        let k = self.boundaries.partition_point(|z| *z < q_th) - 1;
        self.ln_anchors[k] - self.thetas[k] * (q_th - self.boundaries[k])
    }

    pub fn eval(&self, q_th: f64) -> TailValue {
        if q_th <= self.alpha() {
            let v = self.head[self.head_index(q_th)];
            return TailValue { value: v, ln_value: v.ln(), underflow: false };
        }
        TailValue::from_ln(self.ln_eval(q_th))
    }

    fn head_index(&self, q_th: f64) -> usize {
        let j = ((q_th / self.kappa) - LATTICE).ceil().max(0.0) as usize;
        j.min(self.head.len() - 1)
    }

    /// Exponent in force just above `q_th` (for q_th ≥ α).
    pub fn theta_at(&self, q_th: f64) -> Option<f64> {
        if q_th < self.alpha() {
            return None;
        }
        let k = self.boundaries.partition_point(|z| *z <= q_th) - 1;
        Some(self.thetas[k])
    }
}

/// Upper and lower tail families sharing the same segments and exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct TailApprox {
    pub upper: TailCurve,
    pub lower: TailCurve,
}

/// Algorithm-2 tail: SQL bounds up to α, then ε(ζ_k)e^{−θ_k(q−ζ_k)} chained
/// across segments for both the upper and lower families.
pub fn assemble_tail(
    sql: &crate::augment::SqlBounds,
    kappa: f64,
    boundaries: &[f64],
    thetas: &[f64],
) -> Result<TailApprox> {
    Ok(TailApprox {
        upper: TailCurve::new(sql.eps_upper.clone(), kappa, boundaries, thetas)?,
        lower: TailCurve::new(sql.eps_lower.clone(), kappa, boundaries, thetas)?,
    })
}

/// Pr{M ≤ z} for the generalized extreme value law.
pub fn gev_tail(xi: f64, mu: f64, sigma: f64, z: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain_err(format!("sigma must be positive, got {sigma}")));
    }
    let y = (z - mu) / sigma;
    if xi == 0.0 {
        return Ok((-(-y).exp()).exp());
    }
    let t = 1.0 + xi * y;
    if !(t > 0.0) {
        return Err(domain_err(format!("1 + xi (z - mu)/sigma = {t} must be positive")));
    }
    Ok((-t.powf(-1.0 / xi)).exp())
}

/// Exceedance probability of the generalized Pareto law.
pub fn gpd_tail(xi_t: f64, sigma_t: f64, y: f64) -> Result<f64> {
    if !(sigma_t > 0.0) || !(xi_t >= 0.0) || !(y >= 0.0) {
        return Err(domain_err(format!("gpd needs xi >= 0, sigma > 0, y >= 0; got {xi_t}, {sigma_t}, {y}")));
    }
    if xi_t == 0.0 {
        return Ok((-y / sigma_t).exp());
    }
    Ok((1.0 + xi_t * y / sigma_t).powf(-1.0 / xi_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::SqlBounds;
    use crate::models::{ConstantRate, TABLE_III_MEAN_GAIN};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_iii(v: f64) -> LyapunovPolicy {
        LyapunovPolicy::new(&SystemParams::table_iii(), v, 3, &ArrivalModel::deterministic(1.0).unwrap()).unwrap()
    }
    fn rayleigh() -> FadingModel {
        FadingModel::rayleigh(TABLE_III_MEAN_GAIN).unwrap()
    }

    #[test]
    fn eb_examples() {
        let d = ArrivalModel::deterministic(1.0).unwrap();
        assert_eq!(effective_bandwidth(&d, 3.7).unwrap(), 1.0);
        let p = ArrivalModel::pmf(vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(effective_bandwidth(&p, 3f64.ln()).unwrap(), 2f64.ln() / 3f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(effective_bandwidth(&p, 1e-8).unwrap(), 0.5, max_relative = 1e-7);
        // Large θ: log-sum-exp branch stays finite.
        assert_relative_eq!(effective_bandwidth(&p, 1e4).unwrap(), 1.0 - 2f64.ln() / 1e4, max_relative = 1e-12);
        assert!(effective_bandwidth(&p, 0.0).is_err());
    }

    #[test]
    fn ec_degenerate_cases() {
        let p = SystemParams::table_iii();
        for th in [0.01, 1.0, 30.0] {
            assert_relative_eq!(effective_capacity(&ConstantRate::new(&p, 2.5), &p, &rayleigh(), th).unwrap(), 2.5, max_relative = 1e-12);
            assert_eq!(effective_capacity(&ConstantRate::new(&p, 0.0), &p, &rayleigh(), th).unwrap(), 0.0);
        }
    }

    #[test]
    fn ec_closed_form_matches_quadrature() {
        let pol = table_iii(2.0);
        let p = *pol.params();
        let seg = pol.segment(20);
        let q = effective_capacity(&seg, &p, &rayleigh(), 1.0).unwrap();
        let c = ec_lyapunov_rayleigh(&pol, TABLE_III_MEAN_GAIN, 20, 1.0).unwrap();
        assert_relative_eq!(q, c, max_relative = 1e-6);
    }

    #[test]
    fn ec_small_theta_is_mean_service() {
        let pol = table_iii(2.0);
        let p = *pol.params();
        let seg = pol.segment(20);
        let mean = mean_service(&seg, &p, &rayleigh()).unwrap();
        let c = ec_lyapunov_rayleigh(&pol, TABLE_III_MEAN_GAIN, 20, 1e-6).unwrap();
        assert_relative_eq!(c, mean, max_relative = 1e-5);
        // Mean of log2(x/ψ)^+ under Exp(1) is E1(ψ)/ln 2.
        let psi = normalized_cutoff(&pol, TABLE_III_MEAN_GAIN, 20);
        let e1 = crate::special::exp_integral_e1(psi).unwrap();
        assert_relative_eq!(mean, e1 / std::f64::consts::LN_2, max_relative = 1e-10);
    }

    #[test]
    fn ec_closed_form_small_psi_asymptote() {
        // ψ → 0: EC ≈ −(1/θ) ln(ψ(1 + 1/(Φ − 1))).
        let pol = LyapunovPolicy::new(&SystemParams::table_iii(), 2.0, 3, &ArrivalModel::deterministic(1.0).unwrap()).unwrap();
        let theta = 3.0;
        let phi = theta * LOG2_E;
        let omega = 100_000;
        let psi = normalized_cutoff(&pol, TABLE_III_MEAN_GAIN, omega);
        let asym = -(psi * (1.0 + 1.0 / (phi - 1.0))).ln() / theta;
        let ec = ec_lyapunov_rayleigh(&pol, TABLE_III_MEAN_GAIN, omega, theta).unwrap();
        assert_relative_eq!(ec, asym, max_relative = 1e-4);
    }

    #[test]
    fn ec_closed_form_at_integer_order() {
        // θ with 1 − Φ = −2 exactly goes through the E1 start of the recurrence.
        let pol = table_iii(2.0);
        let theta = 3.0 / LOG2_E;
        let q = effective_capacity(&pol.segment(4), pol.params(), &rayleigh(), theta).unwrap();
        let c = ec_lyapunov_rayleigh(&pol, TABLE_III_MEAN_GAIN, 4, theta).unwrap();
        assert_relative_eq!(q, c, max_relative = 1e-9);
    }

    #[test]
    fn solver_examples() {
        assert!(matches!(solve_qos_exponent(|_| Ok(2.0), |_| Ok(1.0)), Err(QvpError::NoRoot(_))));
        let r = solve_qos_exponent(|t| Ok(t), |_| Ok(1.0)).unwrap();
        assert_relative_eq!(r.theta, 1.0, epsilon = 1e-12);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn lyapunov_segment_theta_against_grid_scan() {
        let pol = table_iii(2.0);
        let p = *pol.params();
        let arr = ArrivalModel::deterministic(1.0).unwrap();
        let r = solve_segment_exponent(&pol.segment(4), &p, &rayleigh(), &arr).unwrap();
        assert!(r.residual <= 1e-10);
        // Scan a grid for the sign change of EC − 1, then refine on finer grids.
        let gap = |t: f64| effective_capacity(&pol.segment(4), &p, &rayleigh(), t).unwrap() - 1.0;
        let (mut lo, mut step) = (0.01, 0.01);
        for _ in 0..5 {
            let mut t = lo;
            while gap(t + step) > 0.0 {
                t += step;
            }
            lo = t;
            step /= 100.0;
        }
        assert!((r.theta - lo).abs() <= 1e-8, "solver {} vs scan {}", r.theta, lo);
    }

    #[test]
    fn unstable_segment() {
        let p = SystemParams::table_iii();
        let arr = ArrivalModel::deterministic(1.0).unwrap();
        let r = solve_segment_exponent(&ConstantRate::new(&p, 1.0), &p, &rayleigh(), &arr);
        assert!(matches!(r, Err(QvpError::Unstable { .. })));
    }

    #[test]
    fn constant_service_random_arrivals() {
        // c = 1, a ∈ {0, 2} w.p. (0.6, 0.4): e^θ = 0.6 + 0.4 e^{2θ} gives θ = ln 1.5.
        let p = SystemParams::table_iii();
        let arr = ArrivalModel::pmf(vec![0.6, 0.0, 0.4]).unwrap();
        let r = solve_segment_exponent(&ConstantRate::new(&p, 1.0), &p, &rayleigh(), &arr).unwrap();
        assert_relative_eq!(r.theta, 1.5f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn corollary_examples() {
        let c = 1.0 * LOG2_E;
        let r = corollary1_theta(1e-6, 1.0, c).unwrap();
        let loose = loose_theta(1e-6, 1.0).unwrap().theta;
        assert_relative_eq!(loose, 13.815510557964274, epsilon = 1e-12);
        assert!(r.theta < loose);
        assert!(loose - r.theta < 0.06);
        let r2 = corollary1_theta(1e-12, 1.0, c).unwrap();
        assert!(loose_theta(1e-12, 1.0).unwrap().theta - r2.theta < loose - r.theta);
        assert!(matches!(corollary1_theta(0.9, 1.0, c), Err(QvpError::NoRoot(_))));
    }

    fn bounds(u: Vec<f64>, l: Vec<f64>) -> SqlBounds {
        SqlBounds { psi_u: *u.last().unwrap(), psi_l: *l.last().unwrap(), eps_upper: u, eps_lower: l }
    }

    #[test]
    fn tail_examples() {
        let sql = bounds(vec![1.0, 0.5, 0.1, 1e-2], vec![1.0, 0.4, 0.05, 5e-3]);
        let t = assemble_tail(&sql, 1.0, &[3.0], &[1.0]).unwrap();
        assert_relative_eq!(t.upper.eval(6.0).value, 1e-2 * (-3.0f64).exp(), max_relative = 1e-14);
        assert_eq!(t.upper.eval(3.0).value, 1e-2);
        assert_eq!(t.lower.eval(2.0).value, 0.05);
        let t = assemble_tail(&sql, 1.0, &[3.0, 8.0], &[1.0, 2.0]).unwrap();
        assert_relative_eq!(t.upper.eval(10.0).value, 1e-2 * (-5.0f64).exp() * (-4.0f64).exp(), max_relative = 1e-13);
        assert_eq!(t.upper.theta_at(8.0), Some(2.0));
        assert!(assemble_tail(&sql, 1.0, &[3.0, 8.0], &[1.0]).is_err());
        assert!(assemble_tail(&sql, 1.0, &[2.0], &[1.0]).is_err());
    }

    #[test]
    fn tail_underflow_flag() {
        let sql = bounds(vec![1.0, 1e-2], vec![1.0, 1e-3]);
        let t = assemble_tail(&sql, 1.0, &[1.0], &[10.0]).unwrap();
        let v = t.upper.eval(200.0);
        assert!(v.underflow && v.value == 0.0);
        assert_relative_eq!(v.ln_value, 1e-2f64.ln() - 1990.0, max_relative = 1e-14);
    }

    #[test]
    fn extreme_value_examples() {
        assert_relative_eq!(gev_tail(0.0, 1.3, 2.0, 1.3).unwrap(), (-1.0f64).exp());
        assert_relative_eq!(gev_tail(0.0, 0.0, 1.0, 300.0).unwrap(), 1.0);
        assert_relative_eq!(gev_tail(0.5, 0.0, 1.0, 2.0).unwrap(), (-0.25f64).exp(), max_relative = 1e-15);
        assert!(gev_tail(0.5, 0.0, 1.0, -3.0).is_err());
        assert_eq!(gpd_tail(0.3, 1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(gpd_tail(0.0, 1.0, 1.0).unwrap(), (-1.0f64).exp());
        assert_relative_eq!(gpd_tail(1.0, 2.0, 2.0).unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn eb_nondecreasing(p0 in 0.05..0.95f64, t in 0.01..5.0f64, dt in 0.0..5.0f64) {
            let a = ArrivalModel::pmf(vec![p0, 0.0, 1.0 - p0]).unwrap();
            prop_assert!(effective_bandwidth(&a, t + dt).unwrap() >= effective_bandwidth(&a, t).unwrap() - 1e-12);
        }

        #[test]
        fn ec_nonincreasing_and_below_mean(omega in 1u32..30, t in 0.05..8.0f64, dt in 0.0..4.0f64) {
            let pol = table_iii(2.0);
            let seg = pol.segment(omega);
            let p = *pol.params();
            let a = effective_capacity(&seg, &p, &rayleigh(), t).unwrap();
            let b = effective_capacity(&seg, &p, &rayleigh(), t + dt).unwrap();
            prop_assert!(b <= a + 1e-9);
            prop_assert!(a <= mean_service(&seg, &p, &rayleigh()).unwrap() + 1e-9);
        }

        #[test]
        fn tail_continuous_and_decreasing(t1 in 0.1..3.0f64, t2 in 0.1..3.0f64, q in 3.01..20.0f64) {
            let sql = bounds(vec![1.0, 0.5, 0.1, 1e-2], vec![1.0, 0.4, 0.05, 5e-3]);
            let t = assemble_tail(&sql, 1.0, &[3.0, 8.0], &[t1, t2]).unwrap();
            let below = t.upper.ln_eval(8.0);
            let above = t.upper.ln_anchors[1];
            prop_assert!((below - above).abs() <= 1e-12);
            prop_assert!(t.upper.ln_eval(q + 0.5) < t.upper.ln_eval(q));
        }
    }
}
