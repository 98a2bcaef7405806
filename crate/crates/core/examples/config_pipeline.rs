// Loads a JSON config, applies key overrides and prints the analyze CSV.
use qvp::cli::{run_analyze, RunConfig};

const CONFIG: &str = r#"{
  "system": {"B": 500000, "T": 0.002, "N0_dBm_per_Hz": -174, "A": 1000, "S_max": 1000000, "kappa_sql": 1, "kappa_lql": 0.001},
  "channel": {"kind": "rayleigh", "D_m": 1500, "fc_GHz": 3.5},
  "arrival": {"kind": "deterministic", "lambda": 1},
  "policy": {"kind": "lyapunov", "V": 2, "delta": 3},
  "analysis": {"alpha": 6, "q_max": 15}
}"#;

fn main() -> qvp::Result<()> {
    let cfg = RunConfig::from_json_with_overrides(CONFIG, &["analysis.alpha=12".into(), "analysis.theta_method=\"binary_search\"".into()])?;
    println!("config hash {}", cfg.hash());
    let report = run_analyze(&cfg, std::io::stdout().lock())?;
    eprintln!("{report}");
    Ok(())
}
