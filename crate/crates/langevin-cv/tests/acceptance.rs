//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Run with `cargo test --test acceptance -- --nocapture`
//! to see the values; the assertions are the gate either way.

use langevin_cv::bases::{first_order_basis, gaussian_kernel_basis_1d, second_order_basis};
use langevin_cv::cv::{batch_moments, fit, FitMethod, Moments};
use langevin_cv::experiments::{
    cubic_sine, cubic_sine_d1, cubic_sine_d2, run_experiment, ExperimentConfig, Preset,
    TestFunction,
};
use langevin_cv::oracle1d::{
    exact_moments, exact_theta, log_log_slope, rwm_pullback_mc, sigma2_inf, sigma2_with_cv,
    ula_pullback, QuadratureGrid,
};
use langevin_cv::potentials::{
    find_mode, gaussian_potential, logistic_potential, mixture1d_potential, normal_cdf_ratio,
    probit_potential, synthetic_regression, Potential, SyntheticLink, PROBIT_SWITCH,
};
use langevin_cv::samplers::{replica_seed, run_chain, Algorithm, KernelSpec};
use langevin_cv::variance::spectral_variance;

use ndarray::{array, Array1};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn mixture() -> Potential {
    mixture1d_potential((-1.0, 1.0), 0.5).unwrap()
}

#[test]
fn acceptance_01_truncation_table() {
    let expected = [(3.0, 89.28), (4.0, 92.41), (5.0, 92.45), (6.0, 92.45)];
    let p = mixture();
    let mut got = Vec::new();
    for (a, want) in expected {
        let grid = QuadratureGrid::with_default_nodes(a).unwrap();
        let s2 = sigma2_inf(&p, &grid, cubic_sine).unwrap();
        assert!(
            (s2.value - want).abs() <= 0.05,
            "sigma2(a={a}) = {} vs {want}",
            s2.value
        );
        got.push(s2.value);
    }
    println!(
        "ACCEPTANCE 1 (truncation table): PASS sigma2(a=3..6) = \
         {:.4}, {:.4}, {:.4}, {:.4} vs 89.28, 92.41, 92.45, 92.45 (tol 0.05)",
        got[0], got[1], got[2], got[3]
    );
}

#[test]
fn acceptance_02_optimal_coefficients() {
    // The reference table is reproduced by five kernels spanning [-4,4];
    // four kernels put [theta*]_1 near -72.6 instead, so five is the
    // configuration these reference values belong to.
    let p = mixture();
    let basis = gaussian_kernel_basis_1d(5, -4.0, 4.0).unwrap();
    let grid = QuadratureGrid::with_default_nodes(5.0).unwrap();
    let t = exact_theta(&p, &grid, &basis, cubic_sine).unwrap();
    assert!(
        (t.theta_star[0] - (-34.42)).abs() <= 0.5,
        "[theta*]_1 = {}",
        t.theta_star[0]
    );
    assert!(
        (t.theta_zv[0] - (-28.56)).abs() <= 0.5,
        "[theta_zv]_1 = {}",
        t.theta_zv[0]
    );
    println!(
        "ACCEPTANCE 2 (optimal coefficients): PASS [theta*]_1 = {:.4} vs -34.42, \
         [theta_zv]_1 = {:.4} vs -28.56 (tol 0.5, a=5, 5 kernels)",
        t.theta_star[0], t.theta_zv[0]
    );
}

#[test]
fn acceptance_03_table1_reproduction() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::preset_default(Preset::Mixture1d);
    config.output_dir = dir.path().to_path_buf();
    let out = run_experiment(&config).unwrap();

    // reference values of γσ̂² for (plain, ZV, CV)
    let targets = [
        ("ULA", 82.06, 20.74, 5.33),
        ("MALA", 93.27, 23.40, 5.00),
        ("RWM", 105.2, 28.19, 8.41),
    ];
    let lookup = |alg: &str, method: &str| -> f64 {
        out.rows
            .iter()
            .find(|r| r.algorithm == alg && r.method == method)
            .unwrap_or_else(|| panic!("missing row {alg}/{method}"))
            .gamma_sigma2
    };
    let mut summary = String::new();
    for (alg, f_ref, zv_ref, cv_ref) in targets {
        let plain = lookup(alg, "plain");
        let zv = lookup(alg, "ZV");
        let cv = lookup(alg, "CV");
        for (got, want, label) in [(plain, f_ref, "plain"), (zv, zv_ref, "ZV"), (cv, cv_ref, "CV")]
        {
            assert!(
                (got - want).abs() <= 0.30 * want,
                "{alg} {label}: gamma*sigma2 = {got:.3} vs {want} (±30%)"
            );
        }
        assert!(
            cv < zv && zv < plain,
            "{alg}: ordering CV ({cv:.3}) < ZV ({zv:.3}) < plain ({plain:.3}) violated"
        );
        summary.push_str(&format!(
            " {alg}: {plain:.2}/{zv:.2}/{cv:.2} vs {f_ref}/{zv_ref}/{cv_ref};"
        ));
    }
    println!("ACCEPTANCE 3 (table-1 gamma*sigma2, plain/ZV/CV ±30%): PASS{summary}");
}

#[test]
fn acceptance_04_exact_control_variate_sanity() {
    // analytic moments: H = 1, b = 1, σ²∞(f) = 2, θ* = 1 → variance 0 exactly
    let h = array![[1.0]];
    let b = array![1.0];
    let exact = sigma2_with_cv(2.0, &h, &b, &array![1.0]);
    assert_eq!(exact, 0.0);

    // oracle-quadrature version of the same statement
    let p1 = gaussian_potential(1, array![[1.0]]).unwrap();
    let basis1 = first_order_basis(1).unwrap();
    let grid = QuadratureGrid::with_default_nodes(8.0).unwrap();
    let m = exact_moments(&p1, &grid, &basis1, |x| x).unwrap();
    let s2 = sigma2_inf(&p1, &grid, |x| x).unwrap().value;
    let theta = Array1::from(vec![m.b[0] / m.h[(0, 0)]]);
    let via_oracle = sigma2_with_cv(s2, &m.h, &m.b, &theta);
    assert!(via_oracle.abs() <= 1e-9, "oracle quadratic form: {via_oracle}");

    // fitted CV estimates on replicas of the Gaussian-sanity preset
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::preset_default(Preset::GaussianSanity);
    config.output_dir = dir.path().to_path_buf();
    let out = run_experiment(&config).unwrap();
    let replicas = out.document["replicas"].as_array().unwrap();
    let mut worst: f64 = 0.0;
    for rep in replicas {
        for entry in rep["entries"].as_array().unwrap() {
            if entry["method"] == "CV" {
                let est = entry["estimate"].as_f64().unwrap();
                worst = worst.max(est.abs());
                assert!(
                    est.abs() <= 1e-3,
                    "replica {} CV estimate {est}",
                    rep["replica"]
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 4 (exact control variate): PASS quadratic form = {exact} exactly, \
         oracle form = {via_oracle:.2e}, worst per-replica CV estimate = {worst:.2e} (tol 1e-3)"
    );
}

#[test]
fn acceptance_05_generator_expansion_orders() {
    let p = mixture();
    let x = 0.3;
    let lf = -p.grad_u1(x) * cubic_sine_d1(x) + cubic_sine_d2(x);
    let gammas = [1e-3, 10f64.powf(-2.5), 1e-2, 10f64.powf(-1.5), 1e-1];

    let ula_res: Vec<f64> = gammas
        .iter()
        .map(|&g| {
            let r = ula_pullback(&p, 128, g, cubic_sine, x).unwrap();
            (r - cubic_sine(x) - g * lf).abs()
        })
        .collect();
    let ula_slope = log_log_slope(&gammas, &ula_res);
    assert!(
        (ula_slope - 2.0).abs() <= 0.2,
        "ULA slope {ula_slope}, residuals {ula_res:?}"
    );

    // 5e6 antithetic pairs = 1e7 proposal draws, common across γ
    let rwm_res: Vec<f64> = gammas
        .iter()
        .map(|&g| {
            let r = rwm_pullback_mc(&p, g, cubic_sine, x, 5_000_000, 2024).unwrap();
            (r - cubic_sine(x) - g * lf).abs()
        })
        .collect();
    let rwm_slope = log_log_slope(&gammas, &rwm_res);
    assert!(
        (rwm_slope - 1.5).abs() <= 0.3,
        "RWM slope {rwm_slope}, residuals {rwm_res:?}"
    );
    println!(
        "ACCEPTANCE 5 (generator orders): PASS ULA slope = {ula_slope:.3} (2.0±0.2), \
         RWM slope = {rwm_slope:.3} (1.5±0.3)"
    );
}

#[test]
fn acceptance_06_carre_du_champ_and_centering() {
    let p = mixture();
    let basis = gaussian_kernel_basis_1d(6, -4.0, 4.0).unwrap();
    let np = basis.count();
    let grid = QuadratureGrid::new(8.0, 32_769).unwrap();
    // tabulate the normalized density once
    let norm_grid = QuadratureGrid::new(20.0, 16_385).unwrap();
    let z: f64 = {
        let vals: Vec<f64> = norm_grid.nodes().iter().map(|&t| (-p.u1(t)).exp()).collect();
        norm_grid.sum(&vals)
    };
    let dens: Vec<f64> = grid.nodes().iter().map(|&t| (-p.u1(t)).exp() / z).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst_cdc: f64 = 0.0;
    let mut worst_center: f64 = 0.0;
    for _ in 0..50 {
        let t1: Vec<f64> = (0..np).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t2: Vec<f64> = (0..np).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut center = 0.0;
        for (i, &x) in grid.nodes().iter().enumerate() {
            let du = p.grad_u1(x);
            let (mut g1, mut d1, mut d2, mut lg2) = (0.0, 0.0, 0.0, 0.0);
            for j in 0..np {
                let mut gr = [0.0];
                basis.grad_psi_into(j, &[x], &mut gr);
                let lap = basis.lap_psi(j, &[x]);
                g1 += t1[j] * basis.psi(j, &[x]);
                d1 += t1[j] * gr[0];
                d2 += t2[j] * gr[0];
                lg2 += t2[j] * (-du * gr[0] + lap);
            }
            let w = grid.weights()[i] * dens[i];
            lhs += w * g1 * lg2;
            rhs += w * d1 * d2;
            center += w * lg2;
        }
        worst_cdc = worst_cdc.max((lhs + rhs).abs());
        worst_center = worst_center.max(center.abs());
        assert!((lhs + rhs).abs() <= 1e-7, "carre du champ: {lhs} vs {}", -rhs);
        assert!(center.abs() <= 1e-7, "pi(Lg) = {center}");
    }
    println!(
        "ACCEPTANCE 6 (carre du champ / centering): PASS worst |pi(g1 L g2) + pi(g1' g2')| = \
         {worst_cdc:.2e}, worst |pi(L g)| = {worst_center:.2e} (tol 1e-7, 50 draws)"
    );
}

#[test]
fn acceptance_07_spectral_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let series: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
    let est = spectral_variance(&series).unwrap();
    assert!(
        (est.sigma2 - 1.0).abs() <= 0.1,
        "iid sigma2 = {}",
        est.sigma2
    );
    let constant = vec![2.5; 1_000_000];
    let zero = spectral_variance(&constant).unwrap();
    assert_eq!(zero.sigma2, 0.0);
    println!(
        "ACCEPTANCE 7 (spectral calibration): PASS iid N(0,1) sigma2 = {:.4} (1±0.1), \
         constant series sigma2 = {} exactly",
        est.sigma2, zero.sigma2
    );
}

/// Per-replica VRFs of CV-1 and CV-2 for the linear test functions on a
/// synthetic regression posterior, ULA at the reference step size.
fn regression_vrf_medians(link: SyntheticLink) -> (Vec<f64>, Vec<f64>) {
    let data_seed = match link {
        SyntheticLink::Logistic => 314_159,
        SyntheticLink::Probit => 314_160,
    };
    let data = synthetic_regression(100, 4, data_seed, link).unwrap();
    let dim = data.dim();
    let p = match link {
        SyntheticLink::Logistic => logistic_potential(data).unwrap(),
        SyntheticLink::Probit => probit_potential(data).unwrap(),
    };
    let mode = find_mode(&p, &vec![0.0; dim], 1e-6, 500_000).unwrap();
    let basis2 = second_order_basis(dim).unwrap();
    let p2 = basis2.count();
    let spec = KernelSpec::new(Algorithm::Ula, 1e-2).unwrap();
    let functions: Vec<TestFunction> = (0..dim).map(TestFunction::Coordinate).collect();

    use rayon::prelude::*;
    let replicas = 20usize;
    let vrfs: Vec<(Vec<f64>, Vec<f64>)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(900 + data_seed, r as u64);
            let chain = run_chain(&p, spec, &mode, 100_000, 1_000_000, seed).unwrap();
            let fs: Vec<Box<dyn Fn(&[f64]) -> f64 + Sync>> = functions
                .iter()
                .map(|f| {
                    let f = f.clone();
                    Box::new(move |x: &[f64]| f.eval(x)) as Box<dyn Fn(&[f64]) -> f64 + Sync>
                })
                .collect();
            let frefs: Vec<langevin_cv::cv::TestFn<'_>> =
                fs.iter().map(|b| b.as_ref()).collect();
            let mm = batch_moments(&chain, &p, &basis2, &frefs).unwrap();
            let h1 = mm.h_cv.slice(ndarray::s![..dim, ..dim]).to_owned();

            // one tabulation of ℒψ serves every series
            let n = chain.samples.nrows();
            let mut lpsi = vec![0.0; n * p2];
            let mut grad = vec![0.0; dim];
            for (i, row) in chain.samples.outer_iter().enumerate() {
                let x = row.as_slice().unwrap();
                p.grad_u_into(x, &mut grad);
                basis2.generator_members_into(&grad, x, &mut lpsi[i * p2..(i + 1) * p2]);
            }
            let mut v1 = Vec::with_capacity(dim);
            let mut v2 = Vec::with_capacity(dim);
            let mut series = vec![0.0; n];
            for (k, func) in functions.iter().enumerate() {
                for (i, row) in chain.samples.outer_iter().enumerate() {
                    series[i] = func.eval(row.as_slice().unwrap());
                }
                let plain_s2 = spectral_variance(&series).unwrap().sigma2;

                let fit1 = fit(
                    &Moments {
                        h: h1.clone(),
                        b: mm.b_cv[k].slice(ndarray::s![..dim]).to_owned(),
                        mean_f: mm.mean_f[k],
                        m: mm.m,
                    },
                    FitMethod::Cv,
                )
                .unwrap();
                let fit2 = fit(
                    &Moments {
                        h: mm.h_cv.clone(),
                        b: mm.b_cv[k].clone(),
                        mean_f: mm.mean_f[k],
                        m: mm.m,
                    },
                    FitMethod::Cv,
                )
                .unwrap();

                let mut sigma = |theta_first: Option<&Array1<f64>>, theta_full: Option<&Array1<f64>>| {
                    for (i, row) in chain.samples.outer_iter().enumerate() {
                        let x = row.as_slice().unwrap();
                        let mut corr = 0.0;
                        if let Some(t) = theta_first {
                            for j in 0..dim {
                                corr += t[j] * lpsi[i * p2 + j];
                            }
                        }
                        if let Some(t) = theta_full {
                            for j in 0..p2 {
                                corr += t[j] * lpsi[i * p2 + j];
                            }
                        }
                        series[i] = func.eval(x) + corr;
                    }
                    spectral_variance(&series).unwrap().sigma2
                };
                let s2_cv1 = sigma(Some(&fit1.theta), None);
                let s2_cv2 = sigma(None, Some(&fit2.theta));
                v1.push(plain_s2 / s2_cv1);
                v2.push(plain_s2 / s2_cv2);
            }
            (v1, v2)
        })
        .collect();

    let median = |mut xs: Vec<f64>| -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs[xs.len() / 2]
    };
    let mut med1 = Vec::new();
    let mut med2 = Vec::new();
    for k in 0..dim {
        med1.push(median(vrfs.iter().map(|(v1, _)| v1[k]).collect()));
        med2.push(median(vrfs.iter().map(|(_, v2)| v2[k]).collect()));
    }
    (med1, med2)
}

#[test]
fn acceptance_08_regression_variance_reduction() {
    // probit gradient branch checks first (cheap)
    let below = normal_cdf_ratio(PROBIT_SWITCH - 1e-12);
    let above = normal_cdf_ratio(PROBIT_SWITCH + 1e-12);
    assert!(
        (below - above).abs() < 1e-7,
        "branch continuity: jump {}",
        (below - above).abs()
    );
    // reference h'(-30) from 40-digit arithmetic
    let oracle = 30.033259667433677;
    let rel = (normal_cdf_ratio(-30.0) - oracle).abs() / oracle;
    assert!(rel < 1e-8, "expansion check: rel err {rel}");

    for (link, name) in [
        (SyntheticLink::Logistic, "logistic"),
        (SyntheticLink::Probit, "probit"),
    ] {
        let (cv1, cv2) = regression_vrf_medians(link);
        for k in 0..cv2.len() {
            assert!(
                cv2[k] > 10.0,
                "{name}: median VRF(CV-2) for x{} is {}",
                k + 1,
                cv2[k]
            );
            assert!(
                cv2[k] >= cv1[k],
                "{name}: median VRF(CV-2) {} < VRF(CV-1) {} for x{}",
                cv2[k],
                cv1[k],
                k + 1
            );
        }
        println!(
            "ACCEPTANCE 8 ({name} VRF medians over 20 replicas): PASS CV-1 = {:?}, CV-2 = {:?}",
            cv1.iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>(),
            cv2.iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>()
        );
    }
    println!(
        "ACCEPTANCE 8 (probit branch checks): PASS jump = {:.2e} (tol 1e-7), \
         far-tail rel err = {rel:.2e} (tol 1e-8)",
        (below - above).abs()
    );
}

#[test]
fn acceptance_09_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::preset_default(Preset::Mixture1d);
    config.burn_in = 512;
    config.samples = 4_096;
    config.replicas = 3;
    config.output_dir = dir.path().to_path_buf();

    // identical config, run twice into the same directory; the second run
    // uses a single-thread pool so the schedules genuinely differ
    let out1 = run_experiment(&config).unwrap();
    let bytes1 = std::fs::read_to_string(dir.path().join("results.json")).unwrap();
    let parsed1: serde_json::Value = serde_json::from_str(&bytes1).unwrap();
    assert_eq!(parsed1, out1.document);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    pool.install(|| run_experiment(&config)).unwrap();
    let bytes2 = std::fs::read_to_string(dir.path().join("results.json")).unwrap();

    // byte comparison with only the timestamp line removed
    let strip = |s: &str| -> String {
        s.lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let s1 = strip(&bytes1);
    let s2 = strip(&bytes2);
    assert_eq!(s1, s2, "results.json differs between identical runs");
    println!(
        "ACCEPTANCE 9 (determinism): PASS {} bytes identical modulo the timestamp line, \
         parallel vs single-thread execution",
        s1.len()
    );
}
