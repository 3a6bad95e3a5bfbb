//! Experiment presets, replica orchestration and result emission.
//!
//! A preset bundles a target, a control-function family, test functions and
//! sampler settings. Each replica runs its own seeded chain, fits the CV and
//! ZV coefficients on it (or on an independently seeded fitting chain with
//! `split_fit`), forms the corrected series `f + 𝓛g_θ`, and estimates the
//! asymptotic variance of every series with the spectral estimator. Rows
//! aggregate replicas; `results.json` keeps the full per-replica detail.
//!
//! Replica work is fanned out across threads but chains are seeded per
//! replica index, so results are identical under any scheduling.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bases::{first_order_basis, gaussian_kernel_basis_1d, second_order_basis, ControlBasis};
use crate::cv::{batch_moments, fit, CvFit, FitMethod, Kahan, Moments};
use crate::error::{Error, Result};
use crate::oracle1d;
use crate::potentials::{
    find_mode, gaussian_potential, load_regression_csv, logistic_potential, mixture1d_potential,
    probit_potential, synthetic_regression, Potential, RegressionData, SyntheticLink,
};
use crate::samplers::{replica_seed, run_chain, splitmix64, Algorithm, ChainOutput, KernelSpec};
use crate::variance::spectral_variance;

/// The reference test function of the one-dimensional experiments,
/// `f(x) = x + x³/2 + 3 sin x`.
pub fn cubic_sine(x: f64) -> f64 {
    x + x * x * x / 2.0 + 3.0 * x.sin()
}

pub fn cubic_sine_d1(x: f64) -> f64 {
    1.0 + 1.5 * x * x + 3.0 * x.cos()
}

pub fn cubic_sine_d2(x: f64) -> f64 {
    3.0 * x - 3.0 * x.sin()
}

/// Experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Mixture1d,
    Logistic,
    Probit,
    GaussianSanity,
    OracleSweep,
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Mixture1d => "mixture1d",
            Preset::Logistic => "logistic",
            Preset::Probit => "probit",
            Preset::GaussianSanity => "gaussian_sanity",
            Preset::OracleSweep => "oracle_sweep",
        })
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixture1d" => Ok(Preset::Mixture1d),
            "logistic" => Ok(Preset::Logistic),
            "probit" => Ok(Preset::Probit),
            "gaussian_sanity" => Ok(Preset::GaussianSanity),
            "oracle_sweep" => Ok(Preset::OracleSweep),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

/// Flat-keyed experiment configuration. A JSON config file uses exactly
/// these keys; every CLI flag overrides the corresponding field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub algorithms: Vec<Algorithm>,
    pub gamma_ula: f64,
    pub gamma_mala: f64,
    pub gamma_rwm: f64,
    pub burn_in: usize,
    pub samples: usize,
    pub replicas: usize,
    pub seed: u64,
    /// `first`, `second`, or `gaussian:<p>:<lo>:<hi>`. The regression
    /// presets always compare the first- and second-order families and
    /// ignore this field.
    pub basis: String,
    /// CSV path or `synthetic:<n>:<d>:<seed>`.
    pub data: Option<String>,
    pub label_column: String,
    pub intercept: bool,
    /// Fit coefficients on an independently seeded chain instead of the
    /// estimation chain.
    pub split_fit: bool,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reference defaults per preset.
    pub fn preset_default(preset: Preset) -> Self {
        let base = ExperimentConfig {
            preset,
            algorithms: vec![Algorithm::Ula, Algorithm::Mala, Algorithm::Rwm],
            gamma_ula: 1e-2,
            gamma_mala: 5e-2,
            gamma_rwm: 5e-2,
            burn_in: 100_000,
            samples: 1_000_000,
            replicas: 10,
            seed: 20_240_810,
            basis: "gaussian:4:-4:4".into(),
            data: None,
            label_column: "y".into(),
            intercept: false,
            split_fit: false,
            output_dir: PathBuf::from("results").join(preset.to_string()),
        };
        match preset {
            Preset::Mixture1d => base,
            Preset::Logistic => ExperimentConfig {
                replicas: 100,
                basis: "second".into(),
                data: Some("synthetic:100:4:314159".into()),
                ..base
            },
            Preset::Probit => ExperimentConfig {
                replicas: 100,
                basis: "second".into(),
                data: Some("synthetic:100:4:314160".into()),
                ..base
            },
            Preset::GaussianSanity => ExperimentConfig {
                algorithms: vec![Algorithm::Mala],
                gamma_mala: 0.1,
                burn_in: 10_000,
                samples: 100_000,
                basis: "first".into(),
                ..base
            },
            Preset::OracleSweep => ExperimentConfig {
                algorithms: vec![],
                replicas: 1,
                basis: "gaussian:5:-4:4".into(),
                ..base
            },
        }
    }

    pub fn gamma_for(&self, algorithm: Algorithm) -> f64 {
        match algorithm {
            Algorithm::Ula => self.gamma_ula,
            Algorithm::Mala => self.gamma_mala,
            Algorithm::Rwm => self.gamma_rwm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.preset != Preset::OracleSweep {
            if self.samples < 4 {
                return Err(Error::Config(
                    "samples must be at least 4 (spectral estimator bandwidth)".into(),
                ));
            }
            if self.replicas == 0 {
                return Err(Error::Config("replicas must be at least 1".into()));
            }
            if self.algorithms.is_empty() {
                return Err(Error::Config("no algorithms selected".into()));
            }
            for &alg in &self.algorithms {
                let g = self.gamma_for(alg);
                if !(g > 0.0) || !g.is_finite() {
                    return Err(Error::Config(format!("gamma for {alg} must be positive")));
                }
            }
        }
        Ok(())
    }
}

/// Parse a basis spec string against the target dimension.
pub fn parse_basis(spec: &str, dim: usize) -> Result<ControlBasis> {
    if spec == "first" {
        return first_order_basis(dim);
    }
    if spec == "second" {
        return second_order_basis(dim);
    }
    if let Some(rest) = spec.strip_prefix("gaussian:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "gaussian basis spec must be gaussian:<p>:<lo>:<hi>, got '{spec}'"
            )));
        }
        let p: usize = parts[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad kernel count '{}'", parts[0])))?;
        let lo: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Config(format!("bad kernel bound '{}'", parts[1])))?;
        let hi: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Config(format!("bad kernel bound '{}'", parts[2])))?;
        if dim != 1 {
            return Err(Error::Config(
                "gaussian kernel bases are one-dimensional".into(),
            ));
        }
        return gaussian_kernel_basis_1d(p, lo, hi);
    }
    Err(Error::Config(format!("unknown basis spec '{spec}'")))
}

/// Scalar test functions addressable from configs and the CLI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestFunction {
    /// `x + x³/2 + 3 sin x` (one-dimensional).
    CubicSine,
    /// `f(x) = x_k`, 0-based coordinate.
    Coordinate(usize),
    /// `f(x) = x_k²`, 0-based coordinate.
    SquaredCoordinate(usize),
}

impl TestFunction {
    pub fn id(&self) -> String {
        match self {
            TestFunction::CubicSine => "cubic_sine".into(),
            TestFunction::Coordinate(k) => format!("x{}", k + 1),
            TestFunction::SquaredCoordinate(k) => format!("x{}^2", k + 1),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::CubicSine => cubic_sine(x[0]),
            TestFunction::Coordinate(k) => x[*k],
            TestFunction::SquaredCoordinate(k) => x[*k] * x[*k],
        }
    }

    /// Parse `cubic_sine`, `x<k>` or `x<k>^2` (1-based k).
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        if s == "cubic_sine" {
            return Ok(TestFunction::CubicSine);
        }
        let (body, squared) = match s.strip_suffix("^2") {
            Some(b) => (b, true),
            None => (s, false),
        };
        if let Some(k) = body.strip_prefix('x').and_then(|t| t.parse::<usize>().ok()) {
            if k == 0 || k > dim {
                return Err(Error::Config(format!(
                    "coordinate {k} out of range for dimension {dim}"
                )));
            }
            return Ok(if squared {
                TestFunction::SquaredCoordinate(k - 1)
            } else {
                TestFunction::Coordinate(k - 1)
            });
        }
        Err(Error::Config(format!("unknown test function '{s}'")))
    }
}

/// One aggregated line of `results.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub function: String,
    pub method: String,
    pub basis: String,
    pub estimate_mean: f64,
    pub estimate_sd: f64,
    /// Replica mean of `γ σ̂²_S`.
    pub gamma_sigma2: f64,
    /// `σ̂²(plain) / σ̂²(method)` from the emitted `gamma_sigma2` values;
    /// absent when the method variance is not positive.
    pub vrf: Option<f64>,
}

/// One `(function, method)` result inside a replica.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaEntry {
    pub function: String,
    pub method: String,
    pub basis: String,
    pub estimate: f64,
    pub sigma2: f64,
    pub gamma_sigma2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

/// Full detail of one replica chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaDetail {
    pub algorithm: String,
    pub replica: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub entries: Vec<ReplicaEntry>,
}

/// In-memory result of [`run_experiment`]; everything is also on disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    /// Content of `results.json`.
    pub document: serde_json::Value,
    pub out_dir: PathBuf,
}

/// Autocovariances `ω(0..100)` of the plain/ZV/CV series of one replica,
/// written alongside the mixture results for plotting.
struct AutocovSet {
    algorithm: Algorithm,
    plain: Vec<f64>,
    zv: Vec<f64>,
    cv: Vec<f64>,
}

fn timestamp_secs() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Parse the `data` field into a dataset, with the synthetic link chosen by
/// the preset.
pub fn resolve_data(
    spec: &Option<String>,
    link: SyntheticLink,
    label_column: &str,
    intercept: bool,
) -> Result<RegressionData> {
    let spec = spec
        .as_deref()
        .ok_or_else(|| Error::Config("regression preset needs a data source".into()))?;
    if let Some(rest) = spec.strip_prefix("synthetic:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "synthetic data spec must be synthetic:<n>:<d>:<seed>, got '{spec}'"
            )));
        }
        let n: usize = parts[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad synthetic n '{}'", parts[0])))?;
        let d: usize = parts[1]
            .parse()
            .map_err(|_| Error::Config(format!("bad synthetic d '{}'", parts[1])))?;
        let seed: u64 = parts[2]
            .parse()
            .map_err(|_| Error::Config(format!("bad synthetic seed '{}'", parts[2])))?;
        return synthetic_regression(n, d, seed, link);
    }
    load_regression_csv(Path::new(spec), label_column, intercept)
}

/// Run a preset end to end and write `results.csv`, `results.json` and any
/// preset-specific artifacts into the configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    match config.preset {
        Preset::Mixture1d => run_mixture(config),
        Preset::GaussianSanity => run_gaussian_sanity(config),
        Preset::Logistic => run_regression(config, SyntheticLink::Logistic),
        Preset::Probit => run_regression(config, SyntheticLink::Probit),
        Preset::OracleSweep => run_oracle_sweep(config),
    }
}

/// Write `results.csv` (one line per aggregated row) and `results.json`
/// (the full document) into `dir`.
pub fn emit_results(
    rows: &[ResultRow],
    document: &serde_json::Value,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = String::from(
        "algorithm,function,method,basis,estimate_mean,estimate_sd,gamma_sigma2,vrf\n",
    );
    for r in rows {
        let vrf = r.vrf.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.algorithm,
            r.function,
            r.method,
            r.basis,
            r.estimate_mean,
            r.estimate_sd,
            r.gamma_sigma2,
            vrf
        ));
    }
    std::fs::write(dir.join("results.csv"), csv)?;
    let mut file = std::fs::File::create(dir.join("results.json"))?;
    file.write_all(serde_json::to_string_pretty(document)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

fn document(
    config: &ExperimentConfig,
    rows: &[ResultRow],
    replicas: &[ReplicaDetail],
    oracle: Option<serde_json::Value>,
) -> serde_json::Value {
    json!({
        "config": config,
        "timestamp": timestamp_secs(),
        "rows": rows,
        "replicas": replicas,
        "oracle": oracle,
    })
}

/// Mean and standard deviation over replicas.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate per-replica entries into rows, attaching the VRF against the
/// plain row of the same (algorithm, function).
fn aggregate_rows(details: &[ReplicaDetail]) -> Vec<ResultRow> {
    let mut keys: Vec<(String, String, String, String)> = Vec::new();
    for d in details {
        for e in &d.entries {
            let key = (
                d.algorithm.clone(),
                e.function.clone(),
                e.method.clone(),
                e.basis.clone(),
            );
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    let mut rows: Vec<ResultRow> = keys
        .iter()
        .map(|(alg, func, method, basis)| {
            let estimates: Vec<f64> = details
                .iter()
                .filter(|d| &d.algorithm == alg)
                .flat_map(|d| {
                    d.entries.iter().filter_map(|e| {
                        (e.function == *func && e.method == *method && e.basis == *basis)
                            .then_some(e.estimate)
                    })
                })
                .collect();
            let gsig: Vec<f64> = details
                .iter()
                .filter(|d| &d.algorithm == alg)
                .flat_map(|d| {
                    d.entries.iter().filter_map(|e| {
                        (e.function == *func && e.method == *method && e.basis == *basis)
                            .then_some(e.gamma_sigma2)
                    })
                })
                .collect();
            let (est_mean, est_sd) = mean_sd(&estimates);
            let (gs_mean, _) = mean_sd(&gsig);
            ResultRow {
                algorithm: alg.clone(),
                function: func.clone(),
                method: method.clone(),
                basis: basis.clone(),
                estimate_mean: est_mean,
                estimate_sd: est_sd,
                gamma_sigma2: gs_mean,
                vrf: None,
            }
        })
        .collect();
    // fill VRFs from the emitted plain rows
    let plain: Vec<(String, String, f64)> = rows
        .iter()
        .filter(|r| r.method == "plain")
        .map(|r| (r.algorithm.clone(), r.function.clone(), r.gamma_sigma2))
        .collect();
    for row in &mut rows {
        let base = plain
            .iter()
            .find(|(a, f, _)| a == &row.algorithm && f == &row.function)
            .map(|(_, _, g)| *g);
        row.vrf = match base {
            Some(b) if row.gamma_sigma2 > 0.0 && b > 0.0 => Some(b / row.gamma_sigma2),
            _ => None,
        };
    }
    rows
}

/// Build the fitting chain for a replica: the estimation chain itself, or an
/// independently seeded one under `split_fit`.
fn fitting_chain(
    config: &ExperimentConfig,
    p: &Potential,
    spec: KernelSpec,
    x0: &[f64],
    chain: &ChainOutput,
) -> Result<Option<ChainOutput>> {
    if !config.split_fit {
        return Ok(None);
    }
    let seed = splitmix64(chain.seed);
    Ok(Some(run_chain(
        p,
        spec,
        x0,
        config.burn_in,
        config.samples,
        seed,
    )?))
}

struct SeriesSpec<'a> {
    function: &'a TestFunction,
    method: &'static str,
    basis_label: String,
    theta: Option<Array1<f64>>, // None for plain
}

/// Evaluate estimates and spectral variances for a set of series over one
/// chain. Generator members are tabulated once per sample and reused by
/// every series.
fn analyze_series(
    chain: &ChainOutput,
    p: &Potential,
    basis: &ControlBasis,
    gamma: f64,
    specs: &[SeriesSpec<'_>],
    keep_autocov: bool,
) -> Result<(Vec<ReplicaEntry>, Vec<(String, Vec<f64>)>)> {
    let n = chain.samples.nrows();
    let np = basis.count();
    let d = basis.dim();

    // tabulate 𝓛ψ and the distinct function values
    let mut lpsi = vec![0.0f64; n * np];
    let mut grad_u = vec![0.0; d];
    let mut fids: Vec<String> = Vec::new();
    let mut dfuncs: Vec<&TestFunction> = Vec::new();
    for s in specs {
        let id = s.function.id();
        if !fids.contains(&id) {
            fids.push(id);
            dfuncs.push(s.function);
        }
    }
    let mut fvals: Vec<Vec<f64>> = vec![Vec::with_capacity(n); fids.len()];
    for (i, row) in chain.samples.outer_iter().enumerate() {
        let x = row.as_slice().expect("samples are contiguous");
        p.grad_u_into(x, &mut grad_u);
        basis.generator_members_into(&grad_u, x, &mut lpsi[i * np..(i + 1) * np]);
        for (k, func) in dfuncs.iter().enumerate() {
            fvals[k].push(func.eval(x));
        }
    }

    let mut entries = Vec::with_capacity(specs.len());
    let mut autocovs = Vec::new();
    let mut buffer = vec![0.0f64; n];
    for s in specs {
        let fi = fids.iter().position(|id| id == &s.function.id()).unwrap();
        match &s.theta {
            None => buffer.copy_from_slice(&fvals[fi]),
            Some(theta) => {
                for i in 0..n {
                    let mut corr = 0.0;
                    for j in 0..np {
                        corr += theta[j] * lpsi[i * np + j];
                    }
                    buffer[i] = fvals[fi][i] + corr;
                }
            }
        }
        let mut acc = Kahan::default();
        for v in &buffer {
            acc.add(*v);
        }
        let estimate = acc.value() / n as f64;
        let est = spectral_variance(&buffer)?;
        if keep_autocov {
            let take = est.autocov.iter().take(100).cloned().collect();
            autocovs.push((s.method.to_string(), take));
        }
        entries.push(ReplicaEntry {
            function: s.function.id(),
            method: s.method.to_string(),
            basis: s.basis_label.clone(),
            estimate,
            sigma2: est.sigma2,
            gamma_sigma2: gamma * est.sigma2,
            theta: s.theta.as_ref().map(|t| t.to_vec()),
        });
    }
    Ok((entries, autocovs))
}

fn attach_replica(err: Error, replica: usize) -> Error {
    match err {
        Error::Divergence { step, .. } => Error::Divergence {
            step,
            replica: Some(replica),
        },
        other => other,
    }
}

fn run_mixture(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = mixture1d_potential((-1.0, 1.0), 0.5)?;
    let basis = parse_basis(&config.basis, 1)?;
    let f = TestFunction::CubicSine;
    let x0 = [0.0];

    let mut details: Vec<ReplicaDetail> = Vec::new();
    let mut autocov_files: Vec<AutocovSet> = Vec::new();
    for &alg in &config.algorithms {
        let gamma = config.gamma_for(alg);
        let spec = KernelSpec::new(alg, gamma)?;
        let results: Vec<(ReplicaDetail, Option<AutocovSet>)> = (0..config.replicas)
            .into_par_iter()
            .map(|r| -> Result<(ReplicaDetail, Option<AutocovSet>)> {
                let seed = replica_seed(config.seed, r as u64);
                let chain = run_chain(&p, spec, &x0, config.burn_in, config.samples, seed)
                    .map_err(|e| attach_replica(e, r))?;
                let fit_chain = fitting_chain(config, &p, spec, &x0, &chain)
                    .map_err(|e| attach_replica(e, r))?;
                let source = fit_chain.as_ref().unwrap_or(&chain);
                let feval = |x: &[f64]| f.eval(x);
                let cvm = crate::cv::cv_moments(source, &p, &basis, feval)?;
                let zvm = crate::cv::zv_moments(source, &p, &basis, feval)?;
                let cv_fit = fit(&cvm, FitMethod::Cv)?;
                let zv_fit = fit(&zvm, FitMethod::Zv)?;
                let specs = vec![
                    SeriesSpec {
                        function: &f,
                        method: "plain",
                        basis_label: "-".into(),
                        theta: None,
                    },
                    SeriesSpec {
                        function: &f,
                        method: "ZV",
                        basis_label: basis.kind_name().into(),
                        theta: Some(zv_fit.theta.clone()),
                    },
                    SeriesSpec {
                        function: &f,
                        method: "CV",
                        basis_label: basis.kind_name().into(),
                        theta: Some(cv_fit.theta.clone()),
                    },
                ];
                let (entries, autocovs) =
                    analyze_series(&chain, &p, &basis, gamma, &specs, r == 0)?;
                let detail = ReplicaDetail {
                    algorithm: alg.to_string(),
                    replica: r,
                    seed,
                    acceptance_rate: chain.acceptance_rate(),
                    entries,
                };
                let set = if r == 0 {
                    let find = |m: &str| {
                        autocovs
                            .iter()
                            .find(|(mm, _)| mm == m)
                            .map(|(_, v)| v.clone())
                            .unwrap_or_default()
                    };
                    Some(AutocovSet {
                        algorithm: alg,
                        plain: find("plain"),
                        zv: find("ZV"),
                        cv: find("CV"),
                    })
                } else {
                    None
                };
                Ok((detail, set))
            })
            .collect::<Result<Vec<_>>>()?;
        for (detail, set) in results {
            details.push(detail);
            if let Some(s) = set {
                autocov_files.push(s);
            }
        }
    }

    let rows = aggregate_rows(&details);
    let oracle = oracle1d::report(&p, &basis, cubic_sine, 5.0)?;
    let oracle_json = serde_json::to_value(&oracle)?;
    let doc = document(config, &rows, &details, Some(oracle_json.clone()));
    emit_results(&rows, &doc, &config.output_dir)?;
    let mut ofile = std::fs::File::create(config.output_dir.join("oracle_report.json"))?;
    ofile.write_all(serde_json::to_string_pretty(&oracle_json)?.as_bytes())?;
    ofile.write_all(b"\n")?;
    for set in &autocov_files {
        let mut body = String::from("k,plain,zv,cv\n");
        for k in 0..set.plain.len() {
            body.push_str(&format!(
                "{},{},{},{}\n",
                k, set.plain[k], set.zv[k], set.cv[k]
            ));
        }
        std::fs::write(
            config
                .output_dir
                .join(format!("autocov_{}.csv", set.algorithm.to_string().to_lowercase())),
            body,
        )?;
    }
    Ok(ExperimentOutput {
        rows,
        document: doc,
        out_dir: config.output_dir.clone(),
    })
}

fn run_gaussian_sanity(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dim = 2;
    let p = gaussian_potential(dim, Array2::eye(dim))?;
    let basis = parse_basis(&config.basis, dim)?;
    let f = TestFunction::Coordinate(0);
    let x0 = vec![0.0; dim];

    let mut details: Vec<ReplicaDetail> = Vec::new();
    for &alg in &config.algorithms {
        let gamma = config.gamma_for(alg);
        let spec = KernelSpec::new(alg, gamma)?;
        let batch: Vec<ReplicaDetail> = (0..config.replicas)
            .into_par_iter()
            .map(|r| -> Result<ReplicaDetail> {
                let seed = replica_seed(config.seed, r as u64);
                let chain = run_chain(&p, spec, &x0, config.burn_in, config.samples, seed)
                    .map_err(|e| attach_replica(e, r))?;
                let fit_chain = fitting_chain(config, &p, spec, &x0, &chain)
                    .map_err(|e| attach_replica(e, r))?;
                let source = fit_chain.as_ref().unwrap_or(&chain);
                let feval = |x: &[f64]| f.eval(x);
                let cvm = crate::cv::cv_moments(source, &p, &basis, feval)?;
                let cv_fit = fit(&cvm, FitMethod::Cv)?;
                let specs = vec![
                    SeriesSpec {
                        function: &f,
                        method: "plain",
                        basis_label: "-".into(),
                        theta: None,
                    },
                    SeriesSpec {
                        function: &f,
                        method: "CV",
                        basis_label: basis.kind_name().into(),
                        theta: Some(cv_fit.theta.clone()),
                    },
                ];
                let (entries, _) = analyze_series(&chain, &p, &basis, gamma, &specs, false)?;
                Ok(ReplicaDetail {
                    algorithm: alg.to_string(),
                    replica: r,
                    seed,
                    acceptance_rate: chain.acceptance_rate(),
                    entries,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        details.extend(batch);
    }
    let rows = aggregate_rows(&details);
    let doc = document(config, &rows, &details, None);
    emit_results(&rows, &doc, &config.output_dir)?;
    Ok(ExperimentOutput {
        rows,
        document: doc,
        out_dir: config.output_dir.clone(),
    })
}

fn run_regression(config: &ExperimentConfig, link: SyntheticLink) -> Result<ExperimentOutput> {
    let data = resolve_data(&config.data, link, &config.label_column, config.intercept)?;
    let dim = data.dim();
    let p = match link {
        SyntheticLink::Logistic => logistic_potential(data)?,
        SyntheticLink::Probit => probit_potential(data)?,
    };
    // the mode only initializes the chains; plain gradient descent needs
    // room on weakly regularized datasets
    let mode = find_mode(&p, &vec![0.0; dim], 1e-6, 500_000)?;
    let basis2 = second_order_basis(dim)?;
    let p2 = basis2.count();

    let functions: Vec<TestFunction> = (0..dim)
        .map(TestFunction::Coordinate)
        .chain((0..dim).map(TestFunction::SquaredCoordinate))
        .collect();

    let mut details: Vec<ReplicaDetail> = Vec::new();
    for &alg in &config.algorithms {
        let gamma = config.gamma_for(alg);
        let spec = KernelSpec::new(alg, gamma)?;
        let batch: Vec<ReplicaDetail> = (0..config.replicas)
            .into_par_iter()
            .map(|r| -> Result<ReplicaDetail> {
                let seed = replica_seed(config.seed, r as u64);
                let chain = run_chain(&p, spec, &mode, config.burn_in, config.samples, seed)
                    .map_err(|e| attach_replica(e, r))?;
                let fit_chain = fitting_chain(config, &p, spec, &mode, &chain)
                    .map_err(|e| attach_replica(e, r))?;
                let source = fit_chain.as_ref().unwrap_or(&chain);

                // one pass over the fitting chain: moments for the
                // second-order family; the first-order family is its prefix
                let fs: Vec<Box<dyn Fn(&[f64]) -> f64 + Sync>> = functions
                    .iter()
                    .map(|f| {
                        let f = f.clone();
                        Box::new(move |x: &[f64]| f.eval(x)) as Box<dyn Fn(&[f64]) -> f64 + Sync>
                    })
                    .collect();
                let frefs: Vec<crate::cv::TestFn<'_>> =
                    fs.iter().map(|b| b.as_ref()).collect();
                let mm = batch_moments(source, &p, &basis2, &frefs)?;

                let first_h_cv = mm.h_cv.slice(ndarray::s![..dim, ..dim]).to_owned();
                let first_h_zv = mm.h_zv.slice(ndarray::s![..dim, ..dim]).to_owned();

                let mut specs: Vec<SeriesSpec<'_>> = Vec::new();
                let fit_for = |func_idx: usize,
                                   method: FitMethod,
                                   order: usize|
                 -> Result<CvFit> {
                    let (h, b) = match (method, order) {
                        (FitMethod::Cv, 1) => (
                            first_h_cv.clone(),
                            mm.b_cv[func_idx].slice(ndarray::s![..dim]).to_owned(),
                        ),
                        (FitMethod::Cv, _) => (mm.h_cv.clone(), mm.b_cv[func_idx].clone()),
                        (FitMethod::Zv, 1) => (
                            first_h_zv.clone(),
                            mm.b_zv[func_idx].slice(ndarray::s![..dim]).to_owned(),
                        ),
                        (FitMethod::Zv, _) => (mm.h_zv.clone(), mm.b_zv[func_idx].clone()),
                    };
                    fit(
                        &Moments {
                            h,
                            b,
                            mean_f: mm.mean_f[func_idx],
                            m: mm.m,
                        },
                        method,
                    )
                };
                let mut thetas: Vec<(usize, &'static str, String, Array1<f64>)> = Vec::new();
                for (fi, _f) in functions.iter().enumerate() {
                    for (method, order, label) in [
                        (FitMethod::Cv, 1usize, "first_order"),
                        (FitMethod::Cv, 2, "second_order"),
                        (FitMethod::Zv, 1, "first_order"),
                        (FitMethod::Zv, 2, "second_order"),
                    ] {
                        let fitted = fit_for(fi, method, order)?;
                        // embed first-order coefficients into the
                        // second-order coordinate space so one series pass
                        // serves both families
                        let theta_full = if order == 1 {
                            let mut t = Array1::<f64>::zeros(p2);
                            for k in 0..dim {
                                t[k] = fitted.theta[k];
                            }
                            t
                        } else {
                            fitted.theta.clone()
                        };
                        let mname = match method {
                            FitMethod::Cv => "CV",
                            FitMethod::Zv => "ZV",
                        };
                        thetas.push((fi, mname, label.to_string(), theta_full));
                    }
                }
                for (fi, f) in functions.iter().enumerate() {
                    specs.push(SeriesSpec {
                        function: f,
                        method: "plain",
                        basis_label: "-".into(),
                        theta: None,
                    });
                    for (tfi, mname, label, theta) in &thetas {
                        if *tfi == fi {
                            specs.push(SeriesSpec {
                                function: f,
                                method: mname,
                                basis_label: label.clone(),
                                theta: Some(theta.clone()),
                            });
                        }
                    }
                }
                let (entries, _) = analyze_series(&chain, &p, &basis2, gamma, &specs, false)?;
                Ok(ReplicaDetail {
                    algorithm: alg.to_string(),
                    replica: r,
                    seed,
                    acceptance_rate: chain.acceptance_rate(),
                    entries,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        details.extend(batch);
    }
    let rows = aggregate_rows(&details);
    let doc = document(config, &rows, &details, None);
    emit_results(&rows, &doc, &config.output_dir)?;
    Ok(ExperimentOutput {
        rows,
        document: doc,
        out_dir: config.output_dir.clone(),
    })
}

fn run_oracle_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = mixture1d_potential((-1.0, 1.0), 0.5)?;
    let basis = parse_basis(&config.basis, 1)?;
    let boundaries = [3.0, 4.0, 5.0, 6.0];
    let reports = oracle1d::truncation_sweep(&p, &basis, cubic_sine, &boundaries)?;

    std::fs::create_dir_all(&config.output_dir)?;
    let mut table = String::from("a,mass,sigma2_f,theta_star_1,theta_zv_1,sigma2_cv,sigma2_zv\n");
    for r in &reports {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.a, r.mass, r.sigma2_f, r.theta_star[0], r.theta_zv[0], r.sigma2_cv, r.sigma2_zv
        ));
    }
    std::fs::write(config.output_dir.join("truncation_table.csv"), &table)?;
    std::fs::write(config.output_dir.join("results.csv"), &table)?;
    let oracle_json = serde_json::to_value(&reports)?;
    let doc = document(config, &[], &[], Some(oracle_json));
    let mut file = std::fs::File::create(config.output_dir.join("results.json"))?;
    file.write_all(serde_json::to_string_pretty(&doc)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(ExperimentOutput {
        rows: Vec::new(),
        document: doc,
        out_dir: config.output_dir.clone(),
    })
}
