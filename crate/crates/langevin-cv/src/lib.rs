//! Control variates for MCMC from the generator of the Langevin diffusion.
//!
//! For a target `π ∝ exp(-U)` the diffusion generator
//! `𝓛g = -⟨∇U, ∇g⟩ + Δg` satisfies `π(𝓛g) = 0`, so `f + 𝓛g` estimates
//! `π(f)` for any smooth `g`. Over a linear family `g_θ = ⟨θ, ψ⟩` the
//! asymptotic variance of the diffusion is an explicit quadratic in `θ`,
//!
//! `σ²∞(f + 𝓛g_θ) = 2θᵀHθ - 4⟨θ, b⟩ + σ²∞(f)`,
//!
//! with `H_ij = π(⟨∇ψ_i, ∇ψ_j⟩)` and `b_i = π(ψ_i f̃)`, minimized at
//! `θ* = H⁺b`. Replacing the moments with chain averages gives a fitting
//! rule whose optimum transfers to ULA, MALA and RWM chains, whose
//! asymptotic variances approach `γ⁻¹σ²∞` as the step size `γ` shrinks.
//!
//! The crate provides:
//!
//! * [`potentials`] — built-in targets (Gaussian, 1-d Gaussian mixture,
//!   Bayesian logistic/probit posteriors), CSV/synthetic datasets, and
//!   posterior-mode search;
//! * [`bases`] — control-function families (first/second-order polynomials,
//!   1-d Gaussian kernels) with analytic derivatives and the generator
//!   action;
//! * [`samplers`] — seeded ULA/MALA/RWM kernels and replica runners;
//! * [`cv`] — moment accumulation, pseudoinverse fits of the CV and ZV
//!   criteria, and the corrected estimator;
//! * [`variance`] — Tukey-Hanning spectral estimation of asymptotic
//!   variances;
//! * [`oracle1d`] — deterministic quadrature ground truth in one dimension
//!   (π-expectations, the Poisson-equation derivative, exact `H`, `b`, `θ*`,
//!   truncation sweeps, one-step kernel expectations);
//! * [`experiments`] — reproducible experiment presets behind the
//!   `langevin-cv` binary.
//!
//! Everything stochastic is driven by explicit 64-bit seeds; rerunning any
//! experiment with the same configuration produces identical output no
//! matter how work is scheduled across threads.
//!
//! ```
//! use langevin_cv::bases::gaussian_kernel_basis_1d;
//! use langevin_cv::cv::{cv_moments, cv_estimate, fit, FitMethod};
//! use langevin_cv::potentials::mixture1d_potential;
//! use langevin_cv::samplers::{run_chain, Algorithm, KernelSpec};
//!
//! let target = mixture1d_potential((-1.0, 1.0), 0.5).unwrap();
//! let spec = KernelSpec::new(Algorithm::Mala, 0.05).unwrap();
//! let chain = run_chain(&target, spec, &[0.0], 1_000, 10_000, 7).unwrap();
//! let basis = gaussian_kernel_basis_1d(4, -4.0, 4.0).unwrap();
//! let f = |x: &[f64]| x[0] + x[0].powi(3) / 2.0 + 3.0 * x[0].sin();
//! let moments = cv_moments(&chain, &target, &basis, f).unwrap();
//! let fitted = fit(&moments, FitMethod::Cv).unwrap();
//! let estimate = cv_estimate(&chain, &target, &basis, &fitted, f).unwrap();
//! assert!(estimate.abs() < 1.0);
//! ```

pub mod bases;
pub mod cv;
pub mod error;
pub mod experiments;
pub mod oracle1d;
pub mod potentials;
pub mod samplers;
pub mod variance;

pub use error::{Error, Result};
