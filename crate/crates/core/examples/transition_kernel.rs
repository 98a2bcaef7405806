// Builds the small-queue transition kernel two ways and writes it as CSV.
use qvp::matrix::{build_qaa_generic, build_qaa_lyapunov, kernel_mass_deficit, TruncatedKernel};
use qvp::models::{ArrivalModel, FadingModel, LyapunovPolicy, SystemParams, TABLE_III_MEAN_GAIN};

fn main() -> qvp::Result<()> {
    let params = SystemParams::table_iii();
    let arrival = ArrivalModel::deterministic(1.0)?;
    let fading = FadingModel::rayleigh(TABLE_III_MEAN_GAIN)?;
    let policy = LyapunovPolicy::new(&params, 2.0, 3, &arrival)?;

    let closed = build_qaa_lyapunov(&policy, &fading, 6.0)?;
    let generic = build_qaa_generic(&policy, &arrival, &fading, &params, 6.0)?;
    let gap = (closed.entries() - generic.entries()).abs().max();
    println!("closed form vs generic construction: max gap {gap:e}");
    println!("row deficits (mass leaving 0..=alpha): {:?}", kernel_mass_deficit(&closed)?);

    let mut csv = Vec::new();
    closed.write_csv(&mut csv, &[])?;
    print!("{}", String::from_utf8_lossy(&csv));
    let back = TruncatedKernel::read_csv(csv.as_slice())?;
    assert_eq!(back.entries(), closed.entries());
    Ok(())
}
