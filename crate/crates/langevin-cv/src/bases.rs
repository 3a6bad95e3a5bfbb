//! Families of control functions `ψ = (ψ₁,…,ψ_p)` with analytic values,
//! gradients and Laplacians, and the action of the Langevin generator
//! `𝓛g = -⟨∇U, ∇g⟩ + Δg` on their linear span.
//!
//! Three families are provided: coordinate polynomials of first and second
//! order, and one-dimensional Gaussian kernels on a regular grid of centers.

use crate::error::{Error, Result};
use crate::potentials::Potential;

const INV_SQRT_2PI: f64 = 0.3989422804014327;

/// How a second-order member depends on the coordinates (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Member {
    Linear(usize),
    Square(usize),
    Cross(usize, usize),
}

#[derive(Debug, Clone)]
enum Kind {
    FirstOrder,
    SecondOrder { members: Vec<Member> },
    GaussianKernels1d { centers: Vec<f64> },
}

/// A finite family of control functions over `ℝ^dim`.
#[derive(Debug, Clone)]
pub struct ControlBasis {
    dim: usize,
    kind: Kind,
}

/// Coordinate functions `ψ_i(x) = x_i`: `∇ψ_i = e_i`, `Δψ_i = 0`.
pub fn first_order_basis(dim: usize) -> Result<ControlBasis> {
    if dim == 0 {
        return Err(Error::InvalidParameter("basis dimension must be positive".into()));
    }
    Ok(ControlBasis {
        dim,
        kind: Kind::FirstOrder,
    })
}

/// All monomials of degree one and two: `x_k`, then `x_k²`, then the cross
/// terms `x_i x_j` (j < i) placed at index `2d + (j-1)(d - j/2) + (i - j)`
/// in 1-based counting, for a total of `d(d+3)/2` members.
pub fn second_order_basis(dim: usize) -> Result<ControlBasis> {
    if dim == 0 {
        return Err(Error::InvalidParameter("basis dimension must be positive".into()));
    }
    let d = dim;
    let p = d * (d + 3) / 2;
    let mut members = vec![Member::Linear(0); p];
    for k in 0..d {
        members[k] = Member::Linear(k);
        members[d + k] = Member::Square(k);
    }
    for j in 1..=d {
        for i in (j + 1)..=d {
            let k = cross_term_index(i, j, d);
            members[k - 1] = Member::Cross(i - 1, j - 1);
        }
    }
    Ok(ControlBasis {
        dim,
        kind: Kind::SecondOrder { members },
    })
}

/// 1-based index of the cross term `x_i x_j` (`1 ≤ j < i ≤ d`) in the
/// second-order family: `2d + (j-1)(d - j/2) + (i - j)`.
pub fn cross_term_index(i: usize, j: usize, d: usize) -> usize {
    debug_assert!(1 <= j && j < i && i <= d);
    2 * d + (j - 1) * d - j * (j - 1) / 2 + (i - j)
}

/// Gaussian bump functions `ψ_i(x) = (2π)^{-1/2} exp(-(x-μ_i)²/2)` with unit
/// width and centers equally spaced on `[lo, hi]`, endpoints included.
/// A single kernel sits at the midpoint.
pub fn gaussian_kernel_basis_1d(p: usize, lo: f64, hi: f64) -> Result<ControlBasis> {
    if p == 0 {
        return Err(Error::InvalidParameter("kernel count must be positive".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "kernel interval is empty: [{lo}, {hi}]"
        )));
    }
    let centers = if p == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..p)
            .map(|i| lo + (hi - lo) * i as f64 / (p - 1) as f64)
            .collect()
    };
    Ok(ControlBasis {
        dim: 1,
        kind: Kind::GaussianKernels1d { centers },
    })
}

impl ControlBasis {
    /// Number of members `p`.
    pub fn count(&self) -> usize {
        match &self.kind {
            Kind::FirstOrder => self.dim,
            Kind::SecondOrder { members } => members.len(),
            Kind::GaussianKernels1d { centers } => centers.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Short identifier used in result files.
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::FirstOrder => "first_order",
            Kind::SecondOrder { .. } => "second_order",
            Kind::GaussianKernels1d { .. } => "gaussian_kernels_1d",
        }
    }

    /// Kernel centers, when this is a Gaussian-kernel family.
    pub fn centers(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::GaussianKernels1d { centers } => Some(centers),
            _ => None,
        }
    }

    /// Value of member `i` (0-based).
    pub fn psi(&self, i: usize, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            Kind::FirstOrder => x[i],
            Kind::SecondOrder { members } => match members[i] {
                Member::Linear(k) => x[k],
                Member::Square(k) => x[k] * x[k],
                Member::Cross(a, b) => x[a] * x[b],
            },
            Kind::GaussianKernels1d { centers } => {
                let d = x[0] - centers[i];
                INV_SQRT_2PI * (-0.5 * d * d).exp()
            }
        }
    }

    /// Gradient of member `i` written into `out`.
    pub fn grad_psi_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        match &self.kind {
            Kind::FirstOrder => out[i] = 1.0,
            Kind::SecondOrder { members } => match members[i] {
                Member::Linear(k) => out[k] = 1.0,
                Member::Square(k) => out[k] = 2.0 * x[k],
                Member::Cross(a, b) => {
                    out[a] = x[b];
                    out[b] = x[a];
                }
            },
            Kind::GaussianKernels1d { centers } => {
                let d = x[0] - centers[i];
                let v = INV_SQRT_2PI * (-0.5 * d * d).exp();
                out[0] = -d * v;
            }
        }
    }

    /// Laplacian of member `i`.
    pub fn lap_psi(&self, i: usize, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::FirstOrder => 0.0,
            Kind::SecondOrder { members } => match members[i] {
                Member::Linear(_) | Member::Cross(_, _) => 0.0,
                Member::Square(_) => 2.0,
            },
            Kind::GaussianKernels1d { centers } => {
                let d = x[0] - centers[i];
                let v = INV_SQRT_2PI * (-0.5 * d * d).exp();
                (d * d - 1.0) * v
            }
        }
    }

    /// Evaluate every member at once: `vals` has length `p`, `grads` is
    /// row-major `p × dim`, `laps` has length `p`. This is the hot path used
    /// by moment accumulation over long chains.
    pub fn eval_batch(&self, x: &[f64], vals: &mut [f64], grads: &mut [f64], laps: &mut [f64]) {
        let p = self.count();
        let d = self.dim;
        debug_assert_eq!(vals.len(), p);
        debug_assert_eq!(grads.len(), p * d);
        debug_assert_eq!(laps.len(), p);
        match &self.kind {
            Kind::FirstOrder => {
                grads.fill(0.0);
                for i in 0..p {
                    vals[i] = x[i];
                    grads[i * d + i] = 1.0;
                    laps[i] = 0.0;
                }
            }
            Kind::SecondOrder { members } => {
                grads.fill(0.0);
                for (i, m) in members.iter().enumerate() {
                    let row = &mut grads[i * d..(i + 1) * d];
                    match *m {
                        Member::Linear(k) => {
                            vals[i] = x[k];
                            row[k] = 1.0;
                            laps[i] = 0.0;
                        }
                        Member::Square(k) => {
                            vals[i] = x[k] * x[k];
                            row[k] = 2.0 * x[k];
                            laps[i] = 2.0;
                        }
                        Member::Cross(a, b) => {
                            vals[i] = x[a] * x[b];
                            row[a] = x[b];
                            row[b] = x[a];
                            laps[i] = 0.0;
                        }
                    }
                }
            }
            Kind::GaussianKernels1d { centers } => {
                for (i, &mu) in centers.iter().enumerate() {
                    let dx = x[0] - mu;
                    let v = INV_SQRT_2PI * (-0.5 * dx * dx).exp();
                    vals[i] = v;
                    grads[i] = -dx * v;
                    laps[i] = (dx * dx - 1.0) * v;
                }
            }
        }
    }

    /// `𝓛ψ_i(x)` for every member, given a precomputed `∇U(x)`.
    pub fn generator_members_into(&self, grad_u: &[f64], x: &[f64], out: &mut [f64]) {
        let p = self.count();
        let d = self.dim;
        debug_assert_eq!(out.len(), p);
        let mut vals = vec![0.0; p];
        let mut grads = vec![0.0; p * d];
        self.eval_batch(x, &mut vals, &mut grads, out);
        for i in 0..p {
            let mut dot = 0.0;
            for k in 0..d {
                dot += grad_u[k] * grads[i * d + k];
            }
            out[i] -= dot; // out held the Laplacians
        }
    }
}

/// Generator action on `g_θ = ⟨θ, ψ⟩`:
/// `𝓛g_θ(x) = Σ_i θ_i { -⟨∇U(x), ∇ψ_i(x)⟩ + Δψ_i(x) }`.
pub fn generator_apply(
    p: &Potential,
    basis: &ControlBasis,
    theta: &[f64],
    x: &[f64],
) -> Result<f64> {
    if theta.len() != basis.count() {
        return Err(Error::ShapeMismatch(format!(
            "theta has length {}, basis has {} members",
            theta.len(),
            basis.count()
        )));
    }
    if basis.dim() != p.dim() {
        return Err(Error::ShapeMismatch(format!(
            "basis dimension {} vs potential dimension {}",
            basis.dim(),
            p.dim()
        )));
    }
    if x.len() != p.dim() {
        return Err(Error::ShapeMismatch(format!(
            "point has length {}, potential dimension is {}",
            x.len(),
            p.dim()
        )));
    }
    let grad_u = p.grad_u(x);
    let mut lpsi = vec![0.0; basis.count()];
    basis.generator_members_into(&grad_u, x, &mut lpsi);
    Ok(theta.iter().zip(&lpsi).map(|(t, l)| t * l).sum())
}
