// Writes the CSV bundle for one reference setting: fig2 .. fig7.
use qvp::cli::{run_reproduce, Figure};

fn main() -> qvp::Result<()> {
    let mut args = std::env::args().skip(1);
    let fig: Figure = args.next().unwrap_or_else(|| "fig2".into()).parse()?;
    let scale = args.next().and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let dir = std::env::temp_dir().join("qvp-figures");
    for path in run_reproduce(fig, scale, 1, 1e-4, &dir)? {
        println!("{}", path.display());
    }
    Ok(())
}
