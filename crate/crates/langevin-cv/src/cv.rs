//! Control-variate coefficient fits and the corrected estimator of `π(f)`.
//!
//! Two fitting criteria over a linear family `g_θ = ⟨θ, ψ⟩`:
//!
//! * CV: minimize the empirical asymptotic variance of the diffusion. The
//!   risk is quadratic with moments `[H]_{ij} = m⁻¹ Σ ⟨∇ψ_i, ∇ψ_j⟩` and
//!   `[b]_i = m⁻¹ Σ ψ_i f̃`, giving `θ* = H⁺ b`.
//! * ZV: minimize the marginal second moment `π({f̃ + 𝓛g}²)` (the classical
//!   zero-variance criterion). Plug-in moments use `𝓛ψ_i` in place of the
//!   gradients and the sign flips: `θ*_zv = -Ĥ⁺ b̂`.
//!
//! Both go through the same Moore-Penrose pseudoinverse so near-collinear
//! families degrade gracefully. Sums over the chain are Kahan-compensated;
//! at `m = 10⁶` terms a plain sum would already cost several digits.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::bases::ControlBasis;
use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::samplers::ChainOutput;

/// Compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.sum
    }
}

/// Fitting criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "cv")]
    Cv,
    #[serde(rename = "zv")]
    Zv,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitMethod::Cv => "CV",
            FitMethod::Zv => "ZV",
        })
    }
}

/// Empirical moment pair `(H, b)` with the centering constant it used.
#[derive(Debug, Clone)]
pub struct Moments {
    /// `p × p` symmetric PSD Gram matrix.
    pub h: Array2<f64>,
    /// Right-hand side vector of length `p`.
    pub b: Array1<f64>,
    /// Same-sample average of `f` (the centering constant of `f̃`).
    pub mean_f: f64,
    /// Number of samples the moments were accumulated over.
    pub m: usize,
}

/// A fitted coefficient vector with the moments that produced it.
#[derive(Debug, Clone)]
pub struct CvFit {
    pub theta: Array1<f64>,
    pub h_matrix: Array2<f64>,
    pub b_vector: Array1<f64>,
    pub method: FitMethod,
    pub sample_mean_f: f64,
    pub m: usize,
}

fn check_chain(chain: &ChainOutput, p: &Potential, basis: &ControlBasis) -> Result<()> {
    if chain.samples.nrows() == 0 {
        return Err(Error::Data("chain holds no samples".into()));
    }
    if basis.dim() != chain.dim() || p.dim() != chain.dim() {
        return Err(Error::ShapeMismatch(format!(
            "chain dim {}, potential dim {}, basis dim {}",
            chain.dim(),
            p.dim(),
            basis.dim()
        )));
    }
    Ok(())
}

/// Moments of the asymptotic-variance criterion, accumulated in one pass:
/// `H = m⁻¹ Σ ∇ψ ∇ψᵀ` and `b = m⁻¹ Σ ψ f̃` with `f̃ = f - mean(f)`
/// expanded as `mean(ψ f) - mean(f) mean(ψ)`.
pub fn cv_moments<F>(
    chain: &ChainOutput,
    p: &Potential,
    basis: &ControlBasis,
    f: F,
) -> Result<Moments>
where
    F: Fn(&[f64]) -> f64,
{
    check_chain(chain, p, basis)?;
    let np = basis.count();
    let d = basis.dim();
    let m = chain.samples.nrows();

    let mut sum_f = Kahan::default();
    let mut sum_psi = vec![Kahan::default(); np];
    let mut sum_psif = vec![Kahan::default(); np];
    let mut gram = vec![Kahan::default(); np * (np + 1) / 2];

    let mut vals = vec![0.0; np];
    let mut grads = vec![0.0; np * d];
    let mut laps = vec![0.0; np];
    for row in chain.samples.outer_iter() {
        let x = row.as_slice().expect("samples are contiguous");
        let fx = f(x);
        sum_f.add(fx);
        basis.eval_batch(x, &mut vals, &mut grads, &mut laps);
        let mut idx = 0;
        for i in 0..np {
            sum_psi[i].add(vals[i]);
            sum_psif[i].add(vals[i] * fx);
            for j in i..np {
                let mut dot = 0.0;
                for k in 0..d {
                    dot += grads[i * d + k] * grads[j * d + k];
                }
                gram[idx].add(dot);
                idx += 1;
            }
        }
    }

    let mf = sum_f.value() / m as f64;
    let mut h = Array2::<f64>::zeros((np, np));
    let mut idx = 0;
    for i in 0..np {
        for j in i..np {
            let v = gram[idx].value() / m as f64;
            h[(i, j)] = v;
            h[(j, i)] = v;
            idx += 1;
        }
    }
    let b = Array1::from_iter(
        (0..np).map(|i| sum_psif[i].value() / m as f64 - mf * (sum_psi[i].value() / m as f64)),
    );
    Ok(Moments { h, b, mean_f: mf, m })
}

/// Plug-in moments of the zero-variance criterion: `Ĥ_{ij} = m⁻¹ Σ 𝓛ψ_i 𝓛ψ_j`
/// and `b̂_i = m⁻¹ Σ f̃ 𝓛ψ_i`.
pub fn zv_moments<F>(
    chain: &ChainOutput,
    p: &Potential,
    basis: &ControlBasis,
    f: F,
) -> Result<Moments>
where
    F: Fn(&[f64]) -> f64,
{
    check_chain(chain, p, basis)?;
    let np = basis.count();
    let d = basis.dim();
    let m = chain.samples.nrows();

    let mut sum_f = Kahan::default();
    let mut sum_l = vec![Kahan::default(); np];
    let mut sum_lf = vec![Kahan::default(); np];
    let mut outer = vec![Kahan::default(); np * (np + 1) / 2];

    let mut grad_u = vec![0.0; d];
    let mut lpsi = vec![0.0; np];
    for row in chain.samples.outer_iter() {
        let x = row.as_slice().expect("samples are contiguous");
        let fx = f(x);
        sum_f.add(fx);
        p.grad_u_into(x, &mut grad_u);
        basis.generator_members_into(&grad_u, x, &mut lpsi);
        let mut idx = 0;
        for i in 0..np {
            sum_l[i].add(lpsi[i]);
            sum_lf[i].add(lpsi[i] * fx);
            for j in i..np {
                outer[idx].add(lpsi[i] * lpsi[j]);
                idx += 1;
            }
        }
    }

    let mf = sum_f.value() / m as f64;
    let mut h = Array2::<f64>::zeros((np, np));
    let mut idx = 0;
    for i in 0..np {
        for j in i..np {
            let v = outer[idx].value() / m as f64;
            h[(i, j)] = v;
            h[(j, i)] = v;
            idx += 1;
        }
    }
    let b = Array1::from_iter(
        (0..np).map(|i| sum_lf[i].value() / m as f64 - mf * (sum_l[i].value() / m as f64)),
    );
    Ok(Moments { h, b, mean_f: mf, m })
}

/// Borrowed test function accepted by the batched moment pass.
pub type TestFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// CV and ZV moments for several test functions from one pass over the
/// chain. `h_cv`/`h_zv` do not depend on `f` and are shared; `b_cv[k]`,
/// `b_zv[k]` and `mean_f[k]` belong to `fs[k]`. Agrees with [`cv_moments`]
/// and [`zv_moments`] applied per function.
#[derive(Debug, Clone)]
pub struct MultiMoments {
    pub h_cv: Array2<f64>,
    pub h_zv: Array2<f64>,
    pub b_cv: Vec<Array1<f64>>,
    pub b_zv: Vec<Array1<f64>>,
    pub mean_f: Vec<f64>,
    pub m: usize,
}

pub fn batch_moments(
    chain: &ChainOutput,
    p: &Potential,
    basis: &ControlBasis,
    fs: &[TestFn<'_>],
) -> Result<MultiMoments> {
    check_chain(chain, p, basis)?;
    if fs.is_empty() {
        return Err(Error::InvalidParameter("no test functions given".into()));
    }
    let np = basis.count();
    let d = basis.dim();
    let nf = fs.len();
    let m = chain.samples.nrows();
    let tri = np * (np + 1) / 2;

    let mut sum_f = vec![Kahan::default(); nf];
    let mut sum_psi = vec![Kahan::default(); np];
    let mut sum_l = vec![Kahan::default(); np];
    let mut sum_psif = vec![Kahan::default(); nf * np];
    let mut sum_lf = vec![Kahan::default(); nf * np];
    let mut gram = vec![Kahan::default(); tri];
    let mut outer = vec![Kahan::default(); tri];

    let mut vals = vec![0.0; np];
    let mut grads = vec![0.0; np * d];
    let mut laps = vec![0.0; np];
    let mut grad_u = vec![0.0; d];
    let mut fx = vec![0.0; nf];
    for row in chain.samples.outer_iter() {
        let x = row.as_slice().expect("samples are contiguous");
        basis.eval_batch(x, &mut vals, &mut grads, &mut laps);
        p.grad_u_into(x, &mut grad_u);
        // turn the Laplacians into generator values before any products
        for i in 0..np {
            let mut dot = 0.0;
            for k in 0..d {
                dot += grad_u[k] * grads[i * d + k];
            }
            laps[i] -= dot;
        }
        for (k, f) in fs.iter().enumerate() {
            fx[k] = f(x);
            sum_f[k].add(fx[k]);
        }
        let mut idx = 0;
        for i in 0..np {
            sum_psi[i].add(vals[i]);
            sum_l[i].add(laps[i]);
            for k in 0..nf {
                sum_psif[k * np + i].add(vals[i] * fx[k]);
                sum_lf[k * np + i].add(laps[i] * fx[k]);
            }
            for j in i..np {
                let mut g = 0.0;
                for k in 0..d {
                    g += grads[i * d + k] * grads[j * d + k];
                }
                gram[idx].add(g);
                outer[idx].add(laps[i] * laps[j]);
                idx += 1;
            }
        }
    }

    let mm = m as f64;
    let unpack = |tri_sums: &[Kahan]| {
        let mut h = Array2::<f64>::zeros((np, np));
        let mut idx = 0;
        for i in 0..np {
            for j in i..np {
                let v = tri_sums[idx].value() / mm;
                h[(i, j)] = v;
                h[(j, i)] = v;
                idx += 1;
            }
        }
        h
    };
    let h_cv = unpack(&gram);
    let h_zv = unpack(&outer);
    let mean_f: Vec<f64> = sum_f.iter().map(|s| s.value() / mm).collect();
    let mean_psi: Vec<f64> = sum_psi.iter().map(|s| s.value() / mm).collect();
    let mean_l: Vec<f64> = sum_l.iter().map(|s| s.value() / mm).collect();
    let mut b_cv = Vec::with_capacity(nf);
    let mut b_zv = Vec::with_capacity(nf);
    for k in 0..nf {
        b_cv.push(Array1::from_iter((0..np).map(|i| {
            sum_psif[k * np + i].value() / mm - mean_f[k] * mean_psi[i]
        })));
        b_zv.push(Array1::from_iter((0..np).map(|i| {
            sum_lf[k * np + i].value() / mm - mean_f[k] * mean_l[i]
        })));
    }
    Ok(MultiMoments {
        h_cv,
        h_zv,
        b_cv,
        b_zv,
        mean_f,
        m,
    })
}

/// Eigenvalues and eigenvectors (as columns) of a symmetric matrix by cyclic
/// Jacobi rotations. Ascending eigenvalue order.
pub(crate) fn symmetric_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let mut m = a.clone();
    // enforce exact symmetry so rotations stay consistent
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let norm: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok((Array1::zeros(n), v));
    }
    let tol = f64::EPSILON * norm;
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= tol {
            // sort ascending
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
            let evals = Array1::from_iter(order.iter().map(|&i| m[(i, i)]));
            let mut evecs = Array2::<f64>::zeros((n, n));
            for (new, &old) in order.iter().enumerate() {
                for r in 0..n {
                    evecs[(r, new)] = v[(r, old)];
                }
            }
            return Ok((evals, evecs));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Numeric(
        "symmetric eigensolver did not converge".into(),
    ))
}

/// Eigenvalues of a symmetric matrix, ascending. Handy for PSD checks on
/// fitted moment matrices.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(a)?.0.to_vec())
}

/// Moore-Penrose pseudoinverse of a symmetric matrix through its spectral
/// decomposition. Eigenvalues with `|λ| ≤ p·ε·max|λ|` are treated as zero.
pub fn pinv(a: &Array2<f64>) -> Result<Array2<f64>> {
    let (evals, evecs) = symmetric_eigen(a)?;
    let n = a.nrows();
    let smax = evals.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let cut = n as f64 * f64::EPSILON * smax;
    let mut out = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let l = evals[k];
        if l.abs() > cut && cut > 0.0 || (cut == 0.0 && l.abs() > 0.0) {
            let inv = 1.0 / l;
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += evecs[(i, k)] * inv * evecs[(j, k)];
                }
            }
        }
    }
    Ok(out)
}

/// Rank after the pseudoinverse cutoff; used to attach rank warnings.
pub fn numerical_rank(a: &Array2<f64>) -> Result<usize> {
    let (evals, _) = symmetric_eigen(a)?;
    let smax = evals.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let cut = a.nrows() as f64 * f64::EPSILON * smax;
    Ok(evals.iter().filter(|l| l.abs() > cut).count())
}

/// Solve the quadratic criterion: `θ = H⁺ b` (CV) or `θ = -H⁺ b` (ZV).
pub fn fit(moments: &Moments, method: FitMethod) -> Result<CvFit> {
    if moments.h.nrows() != moments.b.len() {
        return Err(Error::ShapeMismatch(format!(
            "H is {}x{}, b has length {}",
            moments.h.nrows(),
            moments.h.ncols(),
            moments.b.len()
        )));
    }
    let hp = pinv(&moments.h)?;
    let mut theta = hp.dot(&moments.b);
    if method == FitMethod::Zv {
        theta.mapv_inplace(|v| -v);
    }
    Ok(CvFit {
        theta,
        h_matrix: moments.h.clone(),
        b_vector: moments.b.clone(),
        method,
        sample_mean_f: moments.mean_f,
        m: moments.m,
    })
}

/// The series `h(X_k) = f(X_k) + 𝓛g_θ(X_k)` along the chain.
pub fn corrected_series<F>(
    chain: &ChainOutput,
    p: &Potential,
    basis: &ControlBasis,
    theta: &Array1<f64>,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    check_chain(chain, p, basis)?;
    if theta.len() != basis.count() {
        return Err(Error::ShapeMismatch(format!(
            "theta has length {}, basis has {} members",
            theta.len(),
            basis.count()
        )));
    }
    let d = basis.dim();
    let np = basis.count();
    let mut grad_u = vec![0.0; d];
    let mut lpsi = vec![0.0; np];
    let mut out = Vec::with_capacity(chain.samples.nrows());
    for row in chain.samples.outer_iter() {
        let x = row.as_slice().expect("samples are contiguous");
        p.grad_u_into(x, &mut grad_u);
        basis.generator_members_into(&grad_u, x, &mut lpsi);
        let corr: f64 = theta.iter().zip(&lpsi).map(|(t, l)| t * l).sum();
        out.push(f(x) + corr);
    }
    Ok(out)
}

/// The control-variate estimator `n⁻¹ Σ { f(X_k) + 𝓛g_θ(X_k) }`.
pub fn cv_estimate<F>(
    chain: &ChainOutput,
    p: &Potential,
    basis: &ControlBasis,
    fitted: &CvFit,
    f: F,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let series = corrected_series(chain, p, basis, &fitted.theta, f)?;
    let mut acc = Kahan::default();
    for v in &series {
        acc.add(*v);
    }
    Ok(acc.value() / series.len() as f64)
}

/// The plain sample mean `n⁻¹ Σ f(X_k)`.
pub fn plain_estimate<F>(chain: &ChainOutput, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if chain.samples.nrows() == 0 {
        return Err(Error::Data("chain holds no samples".into()));
    }
    let mut acc = Kahan::default();
    for row in chain.samples.outer_iter() {
        acc.add(f(row.as_slice().expect("samples are contiguous")));
    }
    Ok(acc.value() / chain.samples.nrows() as f64)
}
