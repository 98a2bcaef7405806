// A two-segment policy over a tabulated fading law, analyzed and simulated.
use std::sync::Arc;

use qvp::augment::SqlAnalysis;
use qvp::lql::{solve_segment_exponent, TailCurve};
use qvp::matrix::build_qaa_generic;
use qvp::models::{
    threshold_property_check, ArrivalModel, CustomPdf, FadingModel, FixedPowerRate, FnRate, PolicySpec, SystemParams,
};
use qvp::sim::{simulate_queue, SimConfig, SimSystem};

fn main() -> qvp::Result<()> {
    let params = SystemParams::table_iii();
    // Triangular gain density on [0, 4e-15].
    let hi = 4e-15;
    let fading = FadingModel::Custom(CustomPdf::new(move |x| 2.0 * (hi - x).max(0.0) / (hi * hi), hi)?);
    let arrival = ArrivalModel::pmf(vec![0.3, 0.4, 0.3])?;

    // Below 4 packets: one packet when the gain clears a gate. From 4 up:
    // 10 W fixed power.
    let gate = 1.2e-15;
    let low = FnRate::new(move |g| if g >= gate { 1000.0 } else { 0.0 }, vec![gate]);
    let high = FixedPowerRate::new(&params, 10.0)?;
    let policy = PolicySpec::new(vec![4.0], vec![Arc::new(low), Arc::new(high)])?;
    let gains: Vec<f64> = (1..200).map(|k| fading.quantile(k as f64 / 200.0)).collect();
    println!("threshold property: {}", threshold_property_check(&policy, &params, 8.0, 1.0, &gains)?);

    let alpha = 8.0;
    let sql = SqlAnalysis::from_raw(build_qaa_generic(&policy, &arrival, &fading, &params, alpha)?)?;
    let theta = solve_segment_exponent(policy.segment(1).as_ref(), &params, &fading, &arrival)?;
    println!("large-queue theta = {:.5} (residual {:e})", theta.theta, theta.residual);
    let upper = TailCurve::new(sql.bounds.eps_upper.clone(), 1.0, &[alpha], &[theta.theta])?;
    let lower = TailCurve::new(sql.bounds.eps_lower.clone(), 1.0, &[alpha], &[theta.theta])?;

    let sys = SimSystem { params, policy: Arc::new(policy), arrival, fading, alpha };
    let est = simulate_queue(&sys, &SimConfig::new(2_000_000, 5, alpha))?;
    for j in 0..=16 {
        let q = j as f64;
        println!("{j:>3} {:>10.3e} {:>10.3e} {:>10.3e}", lower.eval(q).value, est.at_least(j), upper.eval(q).value);
    }
    Ok(())
}
