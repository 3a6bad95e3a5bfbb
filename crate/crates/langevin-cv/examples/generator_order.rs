//! Measure the weak-expansion order of the one-step kernels: the residual
//! R_γf - f - γ𝓛f scales as γ² for ULA (computed by Gauss-Hermite
//! quadrature) and γ^{3/2} for RWM (antithetic Monte Carlo with common
//! random numbers across step sizes).
//!
//! ```bash
//! cargo run --release --example generator_order
//! ```

use langevin_cv::experiments::{cubic_sine, cubic_sine_d1, cubic_sine_d2};
use langevin_cv::oracle1d::{log_log_slope, rwm_pullback_mc, ula_pullback};
use langevin_cv::potentials::mixture1d_potential;

fn main() -> langevin_cv::Result<()> {
    let target = mixture1d_potential((-1.0, 1.0), 0.5)?;
    let x = 0.3;
    let lf = -target.grad_u1(x) * cubic_sine_d1(x) + cubic_sine_d2(x);
    let gammas = [1e-3, 10f64.powf(-2.5), 1e-2, 10f64.powf(-1.5), 1e-1];

    println!("{:>10} {:>14} {:>14}", "gamma", "ULA residual", "RWM residual");
    let mut ula_res = Vec::new();
    let mut rwm_res = Vec::new();
    for &g in &gammas {
        let ru = ula_pullback(&target, 128, g, cubic_sine, x)?;
        let rr = rwm_pullback_mc(&target, g, cubic_sine, x, 2_000_000, 7)?;
        let eu = (ru - cubic_sine(x) - g * lf).abs();
        let er = (rr - cubic_sine(x) - g * lf).abs();
        println!("{g:>10.4} {eu:>14.3e} {er:>14.3e}");
        ula_res.push(eu);
        rwm_res.push(er);
    }
    println!(
        "\nlog-log slopes: ULA = {:.3} (order 2), RWM = {:.3} (order 3/2)",
        log_log_slope(&gammas, &ula_res),
        log_log_slope(&gammas, &rwm_res)
    );
    Ok(())
}
