//! Fit CV and ZV coefficients on chains targeting the two-mode mixture and
//! compare the spectral asymptotic-variance estimates of the plain and
//! corrected series. A scaled-down version of the mixture1d preset.
//!
//! ```bash
//! cargo run --release --example mixture_control_variates
//! ```

use langevin_cv::bases::gaussian_kernel_basis_1d;
use langevin_cv::cv::{cv_estimate, cv_moments, fit, plain_estimate, zv_moments, FitMethod};
use langevin_cv::experiments::cubic_sine;
use langevin_cv::potentials::mixture1d_potential;
use langevin_cv::samplers::{run_chain, Algorithm, KernelSpec};
use langevin_cv::variance::spectral_variance;

fn main() -> langevin_cv::Result<()> {
    let target = mixture1d_potential((-1.0, 1.0), 0.5)?;
    let basis = gaussian_kernel_basis_1d(4, -4.0, 4.0)?;
    let f = |x: &[f64]| cubic_sine(x[0]);
    let (burn_in, n) = (10_000, 200_000);

    println!("target: equally weighted N(-1, 1/2) + N(1, 1/2), f(x) = x + x^3/2 + 3 sin x");
    println!("pi(f) = 0 by symmetry; n = {n} samples per chain\n");
    println!(
        "{:>5} {:>7} {:>12} {:>12} {:>12} {:>10} {:>10} {:>10}",
        "alg", "gamma", "plain", "CV", "ZV", "g*s2(f)", "g*s2(CV)", "g*s2(ZV)"
    );
    for (alg, gamma) in [
        (Algorithm::Ula, 1e-2),
        (Algorithm::Mala, 5e-2),
        (Algorithm::Rwm, 5e-2),
    ] {
        let spec = KernelSpec::new(alg, gamma)?;
        let chain = run_chain(&target, spec, &[0.0], burn_in, n, 42)?;
        let cv_fit = fit(&cv_moments(&chain, &target, &basis, f)?, FitMethod::Cv)?;
        let zv_fit = fit(&zv_moments(&chain, &target, &basis, f)?, FitMethod::Zv)?;

        let plain = plain_estimate(&chain, f)?;
        let est_cv = cv_estimate(&chain, &target, &basis, &cv_fit, f)?;
        let est_zv = cv_estimate(&chain, &target, &basis, &zv_fit, f)?;

        let series_plain: Vec<f64> = chain
            .samples
            .outer_iter()
            .map(|row| f(row.as_slice().unwrap()))
            .collect();
        let s_plain = spectral_variance(&series_plain)?.sigma2;
        let s_cv = spectral_variance(&langevin_cv::cv::corrected_series(
            &chain, &target, &basis, &cv_fit.theta, f,
        )?)?
        .sigma2;
        let s_zv = spectral_variance(&langevin_cv::cv::corrected_series(
            &chain, &target, &basis, &zv_fit.theta, f,
        )?)?
        .sigma2;

        println!(
            "{:>5} {:>7} {:>12.6} {:>12.6} {:>12.6} {:>10.2} {:>10.2} {:>10.2}",
            alg.to_string(),
            gamma,
            plain,
            est_cv,
            est_zv,
            gamma * s_plain,
            gamma * s_cv,
            gamma * s_zv
        );
    }
    println!("\nthe full-size preset (n = 1e6, 10 replicas) is `langevin-cv experiment mixture1d`");
    Ok(())
}
