// Splices a short MC run onto the analytic tail.
use qvp::cli::RunConfig;
use qvp::sim::{hybrid_mc_ldt, simulate_queue, SimConfig};

fn main() -> qvp::Result<()> {
    let r = RunConfig::table_iii(2.0, 3, 6.0).resolve()?;
    let a = r.analyze()?;
    let est = simulate_queue(&r.sim_system(), &SimConfig::new(100_000, 3, 6.0))?;
    let h = hybrid_mc_ldt(&est, 1e-4, &a.tails.sub, 20)?;
    println!("splice at q* = {}", h.splice);
    for (j, v) in h.values.iter().enumerate() {
        println!("{j:>3} {v:.4e} {}", if j <= h.splice { "mc" } else { "ldt" });
    }
    Ok(())
}
