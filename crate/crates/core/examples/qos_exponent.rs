// Effective capacity and the QoS exponent of each backlog block, by every
// available method.
use qvp::lql::{
    corollary1_theta, ec_lyapunov_rayleigh, effective_bandwidth, effective_capacity, loose_theta, normalized_cutoff,
    solve_segment_exponent, theorem6_theta,
};
use qvp::models::{ArrivalModel, FadingModel, LyapunovPolicy, SystemParams, TABLE_III_MEAN_GAIN};

fn main() -> qvp::Result<()> {
    let params = SystemParams::table_iii();
    let arrival = ArrivalModel::deterministic(1.0)?;
    let fading = FadingModel::rayleigh(TABLE_III_MEAN_GAIN)?;
    let policy = LyapunovPolicy::new(&params, 2.0, 3, &arrival)?;
    let c = params.blocklength() / params.packet_bits * std::f64::consts::LOG2_E;

    let seg = policy.segment(10);
    for theta in [0.1, 1.0, 5.0] {
        let quad = effective_capacity(&seg, &params, &fading, theta)?;
        let closed = ec_lyapunov_rayleigh(&policy, TABLE_III_MEAN_GAIN, 10, theta)?;
        println!("omega=10 theta={theta}: EC quadrature {quad:.9}, closed form {closed:.9}, EB {}", effective_bandwidth(&arrival, theta)?);
    }

    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "omega", "search", "closed", "corollary", "loose");
    for omega in [4u32, 10, 20, 40] {
        let psi = normalized_cutoff(&policy, TABLE_III_MEAN_GAIN, omega);
        let search = solve_segment_exponent(&policy.segment(omega), &params, &fading, &arrival)?.theta;
        let closed = theorem6_theta(&policy, TABLE_III_MEAN_GAIN, omega)?.theta;
        let cor = corollary1_theta(psi, 1.0, c).map_or(f64::NAN, |q| q.theta);
        let loose = loose_theta(psi, 1.0)?.theta;
        println!("{omega:>5} {search:>10.5} {closed:>10.5} {cor:>10.5} {loose:>10.5}");
    }
    Ok(())
}
