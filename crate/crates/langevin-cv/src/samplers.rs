//! One-step kernels and chain runners for ULA, MALA and RWM.
//!
//! All three kernels share the scalar parameter `γ`: the Euler step size for
//! ULA/MALA and half the proposal variance for RWM (the proposal is
//! `N(0, 2γ)`). Chains are driven by a counter-based RNG seeded from a 64-bit
//! integer, so a `(seed, spec, x0, N, n)` tuple fully determines the output;
//! replicas derive their seeds through splitmix64 and may run on any number
//! of threads without changing results.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::Potential;

/// The three Markov kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ula,
    Mala,
    Rwm,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Ula => "ULA",
            Algorithm::Mala => "MALA",
            Algorithm::Rwm => "RWM",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ula" => Ok(Algorithm::Ula),
            "mala" => Ok(Algorithm::Mala),
            "rwm" => Ok(Algorithm::Rwm),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Kernel choice plus its scalar parameter `γ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub algorithm: Algorithm,
    pub gamma: f64,
}

impl KernelSpec {
    pub fn new(algorithm: Algorithm, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step size gamma must be positive and finite, got {gamma}"
            )));
        }
        Ok(Self { algorithm, gamma })
    }
}

/// Post-burn-in trajectory with acceptance accounting and provenance.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// `length × dim` matrix of states `X_N, …, X_{N+n-1}`.
    pub samples: Array2<f64>,
    /// Accepted proposals over all `N + n` steps; ULA counts every step.
    pub accepted: usize,
    pub seed: u64,
    pub spec: KernelSpec,
    pub burn_in: usize,
    pub length: usize,
    pub x0: Vec<f64>,
}

impl ChainOutput {
    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    /// Accepted fraction over all steps.
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / (self.burn_in + self.length) as f64
    }
}

/// splitmix64 output function; used to derive replica seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `r` under base seed `base`.
pub fn replica_seed(base: u64, r: u64) -> u64 {
    base ^ splitmix64(r)
}

/// One ULA step `x - γ∇U(x) + √(2γ) z`.
pub fn ula_step(p: &Potential, gamma: f64, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    p.grad_u_into(x, &mut g);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite gradient at x = {x:?}"
        )));
    }
    let s = (2.0 * gamma).sqrt();
    Ok(x.iter()
        .zip(&g)
        .zip(z)
        .map(|((xi, gi), zi)| xi - gamma * gi + s * zi)
        .collect())
}

/// Log rejection exponent of the MALA proposal generated by noise `z`:
///
/// `τ = U(y) - U(x) + ½{ ‖z - √(γ/2)(∇U(x)+∇U(y))‖² - ‖z‖² }`
///
/// with `y = x - γ∇U(x) + √(2γ) z`; the proposal is accepted with
/// probability `min(1, e^{-τ})`. This equals the usual Metropolis-Hastings
/// log-ratio written in terms of the driving noise.
pub fn mala_log_tau(p: &Potential, gamma: f64, x: &[f64], z: &[f64]) -> f64 {
    let gx = p.grad_u(x);
    let s = (2.0 * gamma).sqrt();
    let y: Vec<f64> = x
        .iter()
        .zip(&gx)
        .zip(z)
        .map(|((xi, gi), zi)| xi - gamma * gi + s * zi)
        .collect();
    let gy = p.grad_u(&y);
    mala_tau_from_parts(gamma, p.u(x), p.u(&y), &gx, &gy, z)
}

fn mala_tau_from_parts(
    gamma: f64,
    ux: f64,
    uy: f64,
    gx: &[f64],
    gy: &[f64],
    z: &[f64],
) -> f64 {
    let c = (gamma / 2.0).sqrt();
    let mut shifted = 0.0;
    let mut plain = 0.0;
    for i in 0..z.len() {
        let t = z[i] - c * (gx[i] + gy[i]);
        shifted += t * t;
        plain += z[i] * z[i];
    }
    uy - ux + 0.5 * (shifted - plain)
}

/// One MALA step driven by noise `z` and uniform draw `u ∈ [0,1)`.
/// Returns the new state and whether the proposal was accepted.
pub fn mala_step(
    p: &Potential,
    gamma: f64,
    x: &[f64],
    z: &[f64],
    u: f64,
) -> (Vec<f64>, bool) {
    let gx = p.grad_u(x);
    let s = (2.0 * gamma).sqrt();
    let y: Vec<f64> = x
        .iter()
        .zip(&gx)
        .zip(z)
        .map(|((xi, gi), zi)| xi - gamma * gi + s * zi)
        .collect();
    let gy = p.grad_u(&y);
    let tau = mala_tau_from_parts(gamma, p.u(x), p.u(&y), &gx, &gy, z);
    if u < (-tau).exp().min(1.0) {
        (y, true)
    } else {
        (x.to_vec(), false)
    }
}

/// One RWM step: proposal `x + √(2γ) z` accepted with probability
/// `min(1, e^{-τ})`, `τ = U(x + √(2γ)z) - U(x)`.
pub fn rwm_step(p: &Potential, gamma: f64, x: &[f64], z: &[f64], u: f64) -> (Vec<f64>, bool) {
    let s = (2.0 * gamma).sqrt();
    let y: Vec<f64> = x.iter().zip(z).map(|(xi, zi)| xi + s * zi).collect();
    let tau = p.u(&y) - p.u(x);
    if u < (-tau).exp().min(1.0) {
        (y, true)
    } else {
        (x.to_vec(), false)
    }
}

/// Run one chain: exactly `burn_in + length` kernel applications from `x0`,
/// discarding the first `burn_in` states. Deterministic in
/// `(seed, spec, x0, burn_in, length)`.
///
/// The loop caches `U` and `∇U` of the current state so MALA costs one fresh
/// potential-plus-gradient evaluation per step; the visited states are
/// bit-identical to repeated application of the public step functions with
/// the same RNG stream.
pub fn run_chain(
    p: &Potential,
    spec: KernelSpec,
    x0: &[f64],
    burn_in: usize,
    length: usize,
    seed: u64,
) -> Result<ChainOutput> {
    run_chain_tagged(p, spec, x0, burn_in, length, seed, None)
}

fn run_chain_tagged(
    p: &Potential,
    spec: KernelSpec,
    x0: &[f64],
    burn_in: usize,
    length: usize,
    seed: u64,
    replica: Option<usize>,
) -> Result<ChainOutput> {
    if length == 0 {
        return Err(Error::InvalidParameter("chain length must be >= 1".into()));
    }
    if x0.len() != p.dim() {
        return Err(Error::ShapeMismatch(format!(
            "x0 has length {}, potential dimension is {}",
            x0.len(),
            p.dim()
        )));
    }
    let d = p.dim();
    let gamma = spec.gamma;
    let sqg = (2.0 * gamma).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Array2::<f64>::zeros((length, d));
    let mut accepted = 0usize;

    let mut x = x0.to_vec();
    let mut z = vec![0.0; d];
    let mut y = vec![0.0; d];
    let diverged = |step: usize| Error::Divergence { step, replica };

    match spec.algorithm {
        Algorithm::Ula => {
            let mut gx = vec![0.0; d];
            p.grad_u_into(&x, &mut gx);
            for step in 0..burn_in + length {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                for i in 0..d {
                    x[i] = x[i] - gamma * gx[i] + sqg * z[i];
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(diverged(step));
                }
                p.grad_u_into(&x, &mut gx);
                accepted += 1;
                if step >= burn_in {
                    samples.row_mut(step - burn_in).assign(&ndarray::ArrayView1::from(&x[..]));
                }
            }
        }
        Algorithm::Mala => {
            let mut gx = vec![0.0; d];
            let mut gy = vec![0.0; d];
            p.grad_u_into(&x, &mut gx);
            let mut ux = p.u(&x);
            for step in 0..burn_in + length {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                for i in 0..d {
                    y[i] = x[i] - gamma * gx[i] + sqg * z[i];
                }
                let uy = p.u(&y);
                p.grad_u_into(&y, &mut gy);
                let tau = mala_tau_from_parts(gamma, ux, uy, &gx, &gy, &z);
                let u: f64 = rng.gen();
                if u < (-tau).exp().min(1.0) {
                    std::mem::swap(&mut x, &mut y);
                    std::mem::swap(&mut gx, &mut gy);
                    ux = uy;
                    accepted += 1;
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(diverged(step));
                    }
                }
                if step >= burn_in {
                    samples.row_mut(step - burn_in).assign(&ndarray::ArrayView1::from(&x[..]));
                }
            }
        }
        Algorithm::Rwm => {
            let mut ux = p.u(&x);
            for step in 0..burn_in + length {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                for i in 0..d {
                    y[i] = x[i] + sqg * z[i];
                }
                let uy = p.u(&y);
                let tau = uy - ux;
                let u: f64 = rng.gen();
                if u < (-tau).exp().min(1.0) {
                    std::mem::swap(&mut x, &mut y);
                    ux = uy;
                    accepted += 1;
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(diverged(step));
                    }
                }
                if step >= burn_in {
                    samples.row_mut(step - burn_in).assign(&ndarray::ArrayView1::from(&x[..]));
                }
            }
        }
    }

    Ok(ChainOutput {
        samples,
        accepted,
        seed,
        spec,
        burn_in,
        length,
        x0: x0.to_vec(),
    })
}

/// Run `replicas` independent chains. Replica `r` is seeded with
/// `base_seed ^ splitmix64(r)`; outputs come back in replica order and do not
/// depend on how the work is scheduled across threads.
pub fn run_replicas(
    p: &Potential,
    spec: KernelSpec,
    x0: &[f64],
    burn_in: usize,
    length: usize,
    base_seed: u64,
    replicas: usize,
) -> Result<Vec<ChainOutput>> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("replica count must be >= 1".into()));
    }
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(base_seed, r as u64);
            run_chain_tagged(p, spec, x0, burn_in, length, seed, Some(r))
        })
        .collect()
}
