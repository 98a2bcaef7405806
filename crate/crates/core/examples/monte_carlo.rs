// Simulates the queue and compares the estimate with the analytic sandwich.
use qvp::cli::RunConfig;
use qvp::sim::{simulate_queue, SimConfig};

fn main() -> qvp::Result<()> {
    let slots = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000_000);
    let r = RunConfig::table_iii(2.0, 3, 6.0).resolve()?;
    let a = r.analyze()?;
    let est = simulate_queue(&r.sim_system(), &SimConfig::new(slots, 1, 6.0))?;
    println!("{} slots recorded, mean queue {:.4}", est.total, est.mean_queue());
    println!("{:>3} {:>10} {:>10} {:>10} {:>8}", "j", "SLB+EC", "MC", "SUB+EC", "hits");
    for j in 0..=12 {
        let q = j as f64;
        println!(
            "{j:>3} {:>10.3e} {:>10.3e} {:>10.3e} {:>8}",
            a.tails.slb.eval(q).value,
            est.at_least(j),
            a.tails.sub.eval(q).value,
            est.hits_at_least(j)
        );
    }
    Ok(())
}
