// Runs the whole analytic pipeline and prints the four tail families.
use qvp::cli::RunConfig;

fn main() -> qvp::Result<()> {
    let resolved = RunConfig::table_iii(2.0, 3, 6.0).resolve()?;
    let a = resolved.analyze()?;
    println!("{a}");
    println!("{:>4} {:>12} {:>12} {:>12} {:>12}", "q", "SLB+EC", "FCA+EC", "LCA+EC", "SUB+EC");
    for q in 0..=24 {
        let q = q as f64;
        let t = &a.tails;
        println!(
            "{q:>4} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            t.slb.eval(q).value,
            t.fca.eval(q).value,
            t.lca.eval(q).value,
            t.sub.eval(q).value
        );
    }
    Ok(())
}
