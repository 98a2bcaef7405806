// Closed-form bounds on the accumulated decay-rate error and a synthetic
// chain checked against them.
use qvp::errbounds::{accumulated_error, gev_bounds, gpd_bounds, iota_decomposition, ldt_bounds, pi_from_exceedance};

fn main() -> qvp::Result<()> {
    println!("{}\n", ldt_bounds(1.0, 0.0)?);
    println!("{}\n", gpd_bounds(0.3, 1.0)?);
    println!("{}\n", gev_bounds(0.0, 0.0, 1.0)?);

    for theta in [0.5, 1.0, 2.0] {
        let pi = pi_from_exceedance(|k| (-theta * (k as f64 + 1.0)).exp(), 200);
        let err = accumulated_error(&pi, 30)?;
        let d = iota_decomposition(&pi, 30)?;
        let b = ldt_bounds(theta, 0.0)?;
        println!(
            "geometric theta={theta}: error {err:.6} in [{:.6}, {}], iota1 {:.2e} iota2 {:.6}",
            b.lower, b.upper, d.iota1, d.iota2
        );
    }
    Ok(())
}
