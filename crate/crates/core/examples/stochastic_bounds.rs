// Augments the truncated kernel, takes monotone envelopes and brackets the
// censored stationary law.
use qvp::augment::{is_stochastically_monotone, SqlAnalysis};
use qvp::matrix::build_qaa_lyapunov;
use qvp::models::{ArrivalModel, FadingModel, LyapunovPolicy, SystemParams, TABLE_III_MEAN_GAIN};

fn main() -> qvp::Result<()> {
    let params = SystemParams::table_iii();
    let arrival = ArrivalModel::deterministic(1.0)?;
    let fading = FadingModel::rayleigh(TABLE_III_MEAN_GAIN)?;
    let policy = LyapunovPolicy::new(&params, 2.0, 3, &arrival)?;
    let sql = SqlAnalysis::from_raw(build_qaa_lyapunov(&policy, &fading, 6.0)?)?;

    println!("LCA monotone: {}", is_stochastically_monotone(&sql.lca));
    println!("upper envelope monotone: {}", is_stochastically_monotone(&sql.upper));
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "j", "lower", "fca", "lca", "upper");
    let (fca, lca) = (sql.pi_fca.tail(), sql.pi_lca.tail());
    for j in 0..sql.bounds.eps_upper.len() {
        println!(
            "{j:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            sql.bounds.eps_lower[j], fca[j], lca[j], sql.bounds.eps_upper[j]
        );
    }
    println!("Psi_u = {}, Psi_l = {}", sql.bounds.psi_u, sql.bounds.psi_l);
    Ok(())
}
