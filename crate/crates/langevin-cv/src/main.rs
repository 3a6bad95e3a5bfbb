//! Command-line front end. All logic lives in the library; this binary
//! parses flags, loads configs and dispatches.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use langevin_cv::cv::{cv_estimate, cv_moments, fit, plain_estimate, CvFit, FitMethod};
use langevin_cv::error::{Error, Result};
use langevin_cv::experiments::{
    self, parse_basis, resolve_data, ExperimentConfig, Preset, TestFunction,
};
use langevin_cv::oracle1d;
use langevin_cv::potentials::{
    find_mode, gaussian_potential, mixture1d_potential, probit_potential, logistic_potential,
    Potential, SyntheticLink,
};
use langevin_cv::samplers::{run_chain, Algorithm, ChainOutput, KernelSpec};

#[derive(Parser)]
#[command(
    name = "langevin-cv",
    version,
    about = "Langevin-generator control variates for MCMC: samplers, variance-minimizing fits, spectral diagnostics and a 1-d quadrature oracle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain and write samples plus metadata
    Sample(SampleArgs),
    /// Fit CV/ZV coefficients from a stored chain
    Fit(FitArgs),
    /// Estimate π(f) from a stored chain and fit
    Estimate(EstimateArgs),
    /// Deterministic quadrature report for one-dimensional targets
    Oracle1d(OracleArgs),
    /// Run a named experiment preset
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct TargetArgs {
    /// Target: mixture1d[:mu1:mu2:var], gaussian[:dim], logistic, probit
    #[arg(long, default_value = "mixture1d")]
    target: String,
    /// Dataset for regression targets: CSV path or synthetic:<n>:<d>:<seed>
    #[arg(long)]
    data: Option<String>,
    /// Label column of a CSV dataset
    #[arg(long, default_value = "y")]
    label_column: String,
    /// Prepend a constant-1 column to a CSV design
    #[arg(long)]
    intercept: bool,
}

impl TargetArgs {
    fn build(&self) -> Result<Potential> {
        let parts: Vec<&str> = self.target.split(':').collect();
        match parts[0] {
            "mixture1d" => {
                let (m1, m2, var) = if parts.len() == 4 {
                    (
                        parse_f64(parts[1])?,
                        parse_f64(parts[2])?,
                        parse_f64(parts[3])?,
                    )
                } else if parts.len() == 1 {
                    (-1.0, 1.0, 0.5)
                } else {
                    return Err(Error::Config(
                        "mixture1d takes no or three parameters (mu1:mu2:var)".into(),
                    ));
                };
                mixture1d_potential((m1, m2), var)
            }
            "gaussian" => {
                let dim = if parts.len() == 2 {
                    parts[1]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad dimension '{}'", parts[1])))?
                } else {
                    1
                };
                gaussian_potential(dim, Array2::eye(dim))
            }
            "logistic" => {
                let data = resolve_data(
                    &self.data,
                    SyntheticLink::Logistic,
                    &self.label_column,
                    self.intercept,
                )?;
                logistic_potential(data)
            }
            "probit" => {
                let data = resolve_data(
                    &self.data,
                    SyntheticLink::Probit,
                    &self.label_column,
                    self.intercept,
                )?;
                probit_potential(data)
            }
            other => Err(Error::Config(format!("unknown target '{other}'"))),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Config(format!("cannot parse number '{s}'")))
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// ula, mala or rwm
    #[arg(long, default_value = "mala")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    #[arg(long, default_value_t = 1_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated start point; defaults to the origin (regression
    /// targets start at the posterior mode)
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Chain provenance stored next to the samples.
#[derive(Serialize, Deserialize)]
struct ChainMeta {
    target: String,
    algorithm: Algorithm,
    gamma: f64,
    burn_in: usize,
    length: usize,
    seed: u64,
    accepted: usize,
    x0: Vec<f64>,
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let p = args.target.build()?;
    let spec = KernelSpec::new(args.algorithm, args.gamma)?;
    let x0 = match &args.x0 {
        Some(s) => s
            .split(',')
            .map(|t| parse_f64(t.trim()))
            .collect::<Result<Vec<f64>>>()?,
        None => {
            if args.target.target.starts_with("logistic") || args.target.target.starts_with("probit")
            {
                find_mode(&p, &vec![0.0; p.dim()], 1e-6, 500_000)?
            } else {
                vec![0.0; p.dim()]
            }
        }
    };
    let chain = run_chain(&p, spec, &x0, args.burn_in, args.samples, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let mut csv = String::new();
    let header: Vec<String> = (1..=p.dim()).map(|k| format!("x{k}")).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for row in chain.samples.outer_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    std::fs::write(args.out.join("chain.csv"), csv)?;
    let meta = ChainMeta {
        target: args.target.target.clone(),
        algorithm: args.algorithm,
        gamma: args.gamma,
        burn_in: chain.burn_in,
        length: chain.length,
        seed: chain.seed,
        accepted: chain.accepted,
        x0: chain.x0.clone(),
    };
    write_json(&args.out.join("chain_meta.json"), &serde_json::to_value(&meta)?)?;
    println!(
        "wrote {} samples (acceptance {:.3}) to {}",
        chain.length,
        chain.acceptance_rate(),
        args.out.display()
    );
    Ok(())
}

fn load_chain(csv_path: &Path) -> Result<ChainOutput> {
    let meta_path = csv_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join("chain_meta.json");
    let meta: ChainMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(
        |e| Error::Data(format!("cannot read {}: {e}", meta_path.display())),
    )?)?;
    let body = std::fs::read_to_string(csv_path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", csv_path.display())))?;
    let mut lines = body.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("chain file is empty".into()))?;
    let dim = header.split(',').count();
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        for field in line.split(',') {
            values.push(field.parse::<f64>().map_err(|_| Error::Ingestion {
                row: i + 1,
                message: format!("cannot parse '{field}'"),
            })?);
        }
        rows += 1;
    }
    let samples = Array2::from_shape_vec((rows, dim), values)
        .map_err(|e| Error::Data(format!("ragged chain file: {e}")))?;
    Ok(ChainOutput {
        samples,
        accepted: meta.accepted,
        seed: meta.seed,
        spec: KernelSpec::new(meta.algorithm, meta.gamma)?,
        burn_in: meta.burn_in,
        length: rows,
        x0: meta.x0,
    })
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Path to a chain.csv written by `sample`
    #[arg(long)]
    chain: PathBuf,
    /// first | second | gaussian:<p>:<lo>:<hi>
    #[arg(long, default_value = "gaussian:4:-4:4")]
    basis: String,
    /// cubic_sine | x<k> | x<k>^2
    #[arg(long, default_value = "cubic_sine")]
    function: String,
    /// cv, zv or both
    #[arg(long, default_value = "both")]
    method: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct FitFile {
    function: String,
    basis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv: Option<FitEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zv: Option<FitEntry>,
}

#[derive(Serialize, Deserialize)]
struct FitEntry {
    theta: Vec<f64>,
    h: Vec<Vec<f64>>,
    b: Vec<f64>,
    mean_f: f64,
    m: usize,
}

fn fit_entry(f: &CvFit) -> FitEntry {
    FitEntry {
        theta: f.theta.to_vec(),
        h: f.h_matrix.outer_iter().map(|r| r.to_vec()).collect(),
        b: f.b_vector.to_vec(),
        mean_f: f.sample_mean_f,
        m: f.m,
    }
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let p = args.target.build()?;
    let chain = load_chain(&args.chain)?;
    let basis = parse_basis(&args.basis, p.dim())?;
    let func = TestFunction::parse(&args.function, p.dim())?;
    let feval = |x: &[f64]| func.eval(x);
    let want_cv = args.method == "cv" || args.method == "both";
    let want_zv = args.method == "zv" || args.method == "both";
    if !want_cv && !want_zv {
        return Err(Error::Config(format!(
            "method must be cv, zv or both, got '{}'",
            args.method
        )));
    }
    let cv = if want_cv {
        let m = cv_moments(&chain, &p, &basis, feval)?;
        Some(fit_entry(&fit(&m, FitMethod::Cv)?))
    } else {
        None
    };
    let zv = if want_zv {
        let m = langevin_cv::cv::zv_moments(&chain, &p, &basis, feval)?;
        Some(fit_entry(&fit(&m, FitMethod::Zv)?))
    } else {
        None
    };
    std::fs::create_dir_all(&args.out)?;
    let file = FitFile {
        function: func.id(),
        basis: args.basis.clone(),
        cv,
        zv,
    };
    write_json(&args.out.join("fit.json"), &serde_json::to_value(&file)?)?;
    println!("wrote {}", args.out.join("fit.json").display());
    Ok(())
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    chain: PathBuf,
    /// fit.json written by `fit`
    #[arg(long)]
    fit: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let p = args.target.build()?;
    let chain = load_chain(&args.chain)?;
    let file: FitFile = serde_json::from_str(&std::fs::read_to_string(&args.fit).map_err(
        |e| Error::Data(format!("cannot read {}: {e}", args.fit.display())),
    )?)?;
    let basis = parse_basis(&file.basis, p.dim())?;
    let func = TestFunction::parse(&file.function, p.dim())?;
    let feval = |x: &[f64]| func.eval(x);
    let plain = plain_estimate(&chain, feval)?;
    let rebuild = |e: &FitEntry, method: FitMethod| -> Result<f64> {
        let ph = Array2::from_shape_vec(
            (e.h.len(), e.h.len()),
            e.h.iter().flatten().cloned().collect(),
        )
        .map_err(|err| Error::Data(format!("bad H in fit file: {err}")))?;
        let fitted = CvFit {
            theta: ndarray::Array1::from(e.theta.clone()),
            h_matrix: ph,
            b_vector: ndarray::Array1::from(e.b.clone()),
            method,
            sample_mean_f: e.mean_f,
            m: e.m,
        };
        cv_estimate(&chain, &p, &basis, &fitted, feval)
    };
    let cv = file.cv.as_ref().map(|e| rebuild(e, FitMethod::Cv)).transpose()?;
    let zv = file.zv.as_ref().map(|e| rebuild(e, FitMethod::Zv)).transpose()?;
    let doc = serde_json::json!({
        "function": func.id(),
        "plain": plain,
        "cv": cv,
        "zv": zv,
    });
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("estimate.json"), &doc)?;
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value = "gaussian:5:-4:4")]
    basis: String,
    #[arg(long, default_value = "cubic_sine")]
    function: String,
    /// Truncation boundary a
    #[arg(long, default_value_t = 5.0)]
    boundary: f64,
    /// Comma-separated boundaries; overrides --boundary and emits a table
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let p = args.target.build()?;
    let basis = parse_basis(&args.basis, 1)?;
    let func = TestFunction::parse(&args.function, 1)?;
    let f = |x: f64| func.eval(&[x]);
    std::fs::create_dir_all(&args.out)?;
    match &args.sweep {
        Some(list) => {
            let boundaries: Vec<f64> = list
                .split(',')
                .map(|s| parse_f64(s.trim()))
                .collect::<Result<Vec<f64>>>()?;
            let reports = oracle1d::truncation_sweep(&p, &basis, f, &boundaries)?;
            let mut table =
                String::from("a,mass,sigma2_f,theta_star_1,theta_zv_1,sigma2_cv,sigma2_zv\n");
            for r in &reports {
                table.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.a, r.mass, r.sigma2_f, r.theta_star[0], r.theta_zv[0], r.sigma2_cv,
                    r.sigma2_zv
                ));
            }
            print!("{table}");
            std::fs::write(args.out.join("truncation_table.csv"), table)?;
            write_json(
                &args.out.join("oracle_reports.json"),
                &serde_json::to_value(&reports)?,
            )?;
        }
        None => {
            let report = oracle1d::report(&p, &basis, f, args.boundary)?;
            println!(
                "a={} mass={:.8} sigma2_f={:.4} theta*_1={:.4} theta_zv_1={:.4} sigma2_cv={:.4} sigma2_zv={:.4}",
                report.a,
                report.mass,
                report.sigma2_f,
                report.theta_star[0],
                report.theta_zv[0],
                report.sigma2_cv,
                report.sigma2_zv
            );
            write_json(
                &args.out.join("oracle_report.json"),
                &serde_json::to_value(&report)?,
            )?;
        }
    }
    Ok(())
}

#[derive(Args)]
struct ExperimentArgs {
    /// mixture1d | logistic | probit | gaussian_sanity | oracle_sweep
    preset: Preset,
    /// JSON config file with the flat ExperimentConfig keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the step size of every selected algorithm
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Comma-separated subset of ula,mala,rwm
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    intercept: bool,
    #[arg(long)]
    split_fit: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&body)
                .map_err(|e| Error::Config(format!("bad config file: {e}")))?
        }
        None => ExperimentConfig::preset_default(args.preset),
    };
    config.preset = args.preset;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(g) = args.gamma {
        config.gamma_ula = g;
        config.gamma_mala = g;
        config.gamma_rwm = g;
    }
    if let Some(n) = args.burn_in {
        config.burn_in = n;
    }
    if let Some(n) = args.samples {
        config.samples = n;
    }
    if let Some(r) = args.replicas {
        config.replicas = r;
    }
    if let Some(list) = &args.algorithms {
        config.algorithms = list
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<Vec<Algorithm>>>()?;
    }
    if let Some(b) = &args.basis {
        config.basis = b.clone();
    }
    if let Some(d) = &args.data {
        config.data = Some(d.clone());
    }
    if let Some(l) = &args.label_column {
        config.label_column = l.clone();
    }
    if args.intercept {
        config.intercept = true;
    }
    if args.split_fit {
        config.split_fit = true;
    }
    if let Some(o) = &args.out {
        config.output_dir = o.clone();
    }
    let out = experiments::run_experiment(&config)?;
    println!(
        "wrote {} rows to {}",
        out.rows.len(),
        out.out_dir.join("results.csv").display()
    );
    for row in &out.rows {
        println!(
            "{:>4} {:>10} {:>5} {:>12}  estimate {:>12.6}  gamma*sigma2 {:>10.4}  vrf {}",
            row.algorithm,
            row.function,
            row.method,
            row.basis,
            row.estimate_mean,
            row.gamma_sigma2,
            row.vrf.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Oracle1d(args) => cmd_oracle(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
