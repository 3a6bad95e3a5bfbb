//! The probit analogue of the logistic example, plus a look at the
//! numerically delicate part: the ratio Φ'(t)/Φ(t) that drives the probit
//! gradient, stable far into the left tail.
//!
//! ```bash
//! cargo run --release --example probit_regression
//! ```

use langevin_cv::experiments::{run_experiment, ExperimentConfig, Preset};
use langevin_cv::potentials::normal_cdf_ratio;
use langevin_cv::samplers::Algorithm;

fn main() -> langevin_cv::Result<()> {
    println!("h'(t) = phi(t)/Phi(t) across the branch switch at t = -8:");
    for t in [-2.0, -7.9, -8.0, -8.1, -20.0, -30.0] {
        println!("  h'({t:>6}) = {:.12}", normal_cdf_ratio(t));
    }

    let dir = std::env::temp_dir().join("langevin-cv-probit-example");
    let mut config = ExperimentConfig::preset_default(Preset::Probit);
    config.algorithms = vec![Algorithm::Mala];
    config.burn_in = 5_000;
    config.samples = 50_000;
    config.replicas = 3;
    config.data = Some("synthetic:100:4:314160".into());
    config.output_dir = dir.clone();

    let out = run_experiment(&config)?;
    println!("\nprobit posterior, MALA, n={} per replica\n", config.samples);
    println!(
        "{:>6} {:>7} {:>14} {:>12} {:>8}",
        "f", "method", "basis", "g*sigma2", "VRF"
    );
    for row in out.rows.iter().filter(|r| r.function == "x1" || r.function == "x1^2") {
        println!(
            "{:>6} {:>7} {:>14} {:>12.4} {:>8}",
            row.function,
            row.method,
            row.basis,
            row.gamma_sigma2,
            row.vrf.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into())
        );
    }
    println!("\nfull rows for every coordinate in {}", dir.display());
    Ok(())
}
