//! Target distributions `π ∝ exp(-U)` defined through the potential `U` and
//! its gradient.
//!
//! Built-in targets: a two-component Gaussian mixture in one dimension, a
//! multivariate Gaussian with arbitrary SPD precision, and Bayesian
//! logistic/probit regression posteriors with an isotropic Gaussian prior.
//! Regression designs come from a CSV file or a seeded synthetic generator.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default prior variance `ς²` for the regression posteriors.
pub const DEFAULT_PRIOR_VARIANCE: f64 = 100.0;

/// Threshold below which the probit log-CDF and ratio switch to the
/// asymptotic branch. `Φ(-8) ≈ 6.2e-16` is still exactly representable, so the
/// direct erfc evaluation is accurate on the other side of the switch.
pub const PROBIT_SWITCH: f64 = -8.0;

/// A target distribution `π ∝ exp(-U)` given by `U` and `∇U`.
///
/// Additive constants in `U` are irrelevant to every consumer (samplers,
/// fits, the oracle) and are dropped by the built-in constructors.
/// Evaluations are pure; a `Potential` can be shared freely across threads.
#[derive(Clone)]
pub struct Potential {
    dim: usize,
    label: String,
    u: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad_u: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl Potential {
    /// Wrap a custom potential energy and its gradient.
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        u: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_u: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            label: label.into(),
            u: Arc::new(u),
            grad_u: Arc::new(grad_u),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Potential energy `U(x)` in nats, up to an additive constant.
    pub fn u(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.u)(x)
    }

    /// Gradient `∇U(x)` written into `out`.
    pub fn grad_u_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.grad_u)(x, out)
    }

    /// Gradient `∇U(x)` as a fresh vector.
    pub fn grad_u(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.grad_u_into(x, &mut g);
        g
    }

    /// Scalar shortcut for one-dimensional targets.
    pub fn u1(&self, x: f64) -> f64 {
        self.u(std::slice::from_ref(&x))
    }

    /// Scalar gradient shortcut for one-dimensional targets.
    pub fn grad_u1(&self, x: f64) -> f64 {
        let mut g = [0.0];
        self.grad_u_into(std::slice::from_ref(&x), &mut g);
        g[0]
    }
}

/// Design matrix, binary labels and prior variance for the regression
/// posteriors.
#[derive(Debug, Clone)]
pub struct RegressionData {
    design: Array2<f64>,
    labels: Array1<f64>,
    prior_variance: f64,
}

impl RegressionData {
    /// Validates labels in `{0,1}`, a NaN-free design and at least one row.
    pub fn new(design: Array2<f64>, labels: Array1<f64>, prior_variance: f64) -> Result<Self> {
        if design.nrows() == 0 {
            return Err(Error::InvalidParameter("design matrix has no rows".into()));
        }
        if design.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} design rows vs {} labels",
                design.nrows(),
                labels.len()
            )));
        }
        if !(prior_variance > 0.0) {
            return Err(Error::InvalidParameter(
                "prior variance must be positive".into(),
            ));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "design matrix contains non-finite entries".into(),
            ));
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        Ok(Self {
            design,
            labels,
            prior_variance,
        })
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }
}

/// Equally weighted mixture of two Gaussians `N(μ₁,σ²)`, `N(μ₂,σ²)` in 1-d.
///
/// `U(x) = -log{ exp(-(x-μ₁)²/2σ²) + exp(-(x-μ₂)²/2σ²) }` up to a constant,
/// evaluated through log-sum-exp so it stays finite everywhere.
pub fn mixture1d_potential(means: (f64, f64), variance: f64) -> Result<Potential> {
    if !(variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mixture variance must be positive, got {variance}"
        )));
    }
    let (m1, m2) = means;
    let u = move |x: &[f64]| {
        let a1 = -(x[0] - m1).powi(2) / (2.0 * variance);
        let a2 = -(x[0] - m2).powi(2) / (2.0 * variance);
        let hi = a1.max(a2);
        -(hi + ((a1 - hi).exp() + (a2 - hi).exp()).ln())
    };
    let grad = move |x: &[f64], out: &mut [f64]| {
        let a1 = -(x[0] - m1).powi(2) / (2.0 * variance);
        let a2 = -(x[0] - m2).powi(2) / (2.0 * variance);
        let hi = a1.max(a2);
        let w1 = (a1 - hi).exp();
        let w2 = (a2 - hi).exp();
        out[0] = (w1 * (x[0] - m1) + w2 * (x[0] - m2)) / (variance * (w1 + w2));
    };
    Potential::new(1, format!("mixture1d({m1},{m2};{variance})"), u, grad)
}

/// Gaussian `π = N(0, Λ⁻¹)` with `U(x) = ½ xᵀΛx`, `∇U(x) = Λx`.
pub fn gaussian_potential(dim: usize, precision: Array2<f64>) -> Result<Potential> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if precision.nrows() != dim || precision.ncols() != dim {
        return Err(Error::ShapeMismatch(format!(
            "precision is {}x{}, expected {dim}x{dim}",
            precision.nrows(),
            precision.ncols()
        )));
    }
    for i in 0..dim {
        for j in 0..i {
            if (precision[(i, j)] - precision[(j, i)]).abs()
                > 1e-12 * (1.0 + precision[(i, j)].abs())
            {
                return Err(Error::InvalidParameter(
                    "precision matrix must be symmetric".into(),
                ));
            }
        }
    }
    if !cholesky_is_spd(&precision) {
        return Err(Error::InvalidParameter(
            "precision matrix must be positive definite".into(),
        ));
    }
    let lambda = precision;
    let lam = lambda.clone();
    let u = move |x: &[f64]| {
        let mut q = 0.0;
        for i in 0..x.len() {
            let mut row = 0.0;
            for j in 0..x.len() {
                row += lam[(i, j)] * x[j];
            }
            q += x[i] * row;
        }
        0.5 * q
    };
    let lam2 = lambda.clone();
    let grad = move |x: &[f64], out: &mut [f64]| {
        for i in 0..x.len() {
            let mut row = 0.0;
            for j in 0..x.len() {
                row += lam2[(i, j)] * x[j];
            }
            out[i] = row;
        }
    };
    Potential::new(dim, format!("gaussian(d={dim})"), u, grad)
}

fn cholesky_is_spd(a: &Array2<f64>) -> bool {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    true
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Bayesian logistic regression posterior.
///
/// `U(x) = -Σᵢ { yᵢ x̄ᵢᵀx - ln(1 + exp(x̄ᵢᵀx)) } + ‖x‖²/(2ς²)`
pub fn logistic_potential(data: RegressionData) -> Result<Potential> {
    let dim = data.dim();
    let data = Arc::new(data);
    let d1 = Arc::clone(&data);
    let u = move |x: &[f64]| {
        let mut s = 0.0;
        for (i, row) in d1.design().outer_iter().enumerate() {
            let t: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            s -= d1.labels()[i] * t - softplus(t);
        }
        let sq: f64 = x.iter().map(|v| v * v).sum();
        s + sq / (2.0 * d1.prior_variance())
    };
    let d2 = Arc::clone(&data);
    let grad = move |x: &[f64], out: &mut [f64]| {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = xi / d2.prior_variance();
        }
        for (i, row) in d2.design().outer_iter().enumerate() {
            let t: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            // sigmoid(t) - y_i, kept stable for large |t|
            let w = if t >= 0.0 {
                1.0 / (1.0 + (-t).exp())
            } else {
                let e = t.exp();
                e / (1.0 + e)
            } - d2.labels()[i];
            for (o, &r) in out.iter_mut().zip(row.iter()) {
                *o += w * r;
            }
        }
    };
    Potential::new(dim, format!("logistic(n={},d={dim})", data.n()), u, grad)
}

/// `ln Φ(t)`, switching to the asymptotic branch for `t ≤ PROBIT_SWITCH`.
pub fn ln_normal_cdf(t: f64) -> f64 {
    if t > PROBIT_SWITCH {
        (0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)).ln()
    } else {
        // ln Φ(t) = ln φ(t) - ln(Φ'(t)/Φ(t)) for t < 0
        let s = -t;
        -0.5 * s * s - 0.5 * (2.0 * std::f64::consts::PI).ln() - normal_cdf_ratio(t).ln()
    }
}

/// `h'(t) = Φ'(t)/Φ(t)`, the derivative of `ln Φ`.
///
/// For `t ≤ PROBIT_SWITCH` the ratio is evaluated through the continued
/// fraction `s + 1/(s + 2/(s + 3/(...)))` with `s = -t`, which resums the
/// divergent asymptotic expansion `s(1 + s⁻² - 2s⁻⁴ + ...)` to full double
/// precision. Truncating that expansion after three terms would leave a jump
/// of order 3e-4 at the switch point.
pub fn normal_cdf_ratio(t: f64) -> f64 {
    if t > PROBIT_SWITCH {
        let phi = (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cap = 0.5 * libm::erfc(-t / std::f64::consts::SQRT_2);
        phi / cap
    } else {
        let s = -t;
        let mut v = s;
        for k in (1..=48u32).rev() {
            v = s + f64::from(k) / v;
        }
        v
    }
}

/// Bayesian probit regression posterior.
///
/// `U(x) = -Σᵢ { yᵢ ln Φ(x̄ᵢᵀx) + (1-yᵢ) ln Φ(-x̄ᵢᵀx) } + ‖x‖²/(2ς²)`
pub fn probit_potential(data: RegressionData) -> Result<Potential> {
    let dim = data.dim();
    let data = Arc::new(data);
    let d1 = Arc::clone(&data);
    let u = move |x: &[f64]| {
        let mut s = 0.0;
        for (i, row) in d1.design().outer_iter().enumerate() {
            let t: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            // labels are exactly 0 or 1, so only one branch contributes
            s -= if d1.labels()[i] == 1.0 {
                ln_normal_cdf(t)
            } else {
                ln_normal_cdf(-t)
            };
        }
        let sq: f64 = x.iter().map(|v| v * v).sum();
        s + sq / (2.0 * d1.prior_variance())
    };
    let d2 = Arc::clone(&data);
    let grad = move |x: &[f64], out: &mut [f64]| {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = xi / d2.prior_variance();
        }
        for (i, row) in d2.design().outer_iter().enumerate() {
            let t: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            let w = if d2.labels()[i] == 1.0 {
                -normal_cdf_ratio(t)
            } else {
                normal_cdf_ratio(-t)
            };
            for (o, &r) in out.iter_mut().zip(row.iter()) {
                *o += w * r;
            }
        }
    };
    Potential::new(dim, format!("probit(n={},d={dim})", data.n()), u, grad)
}

/// Gradient descent with Armijo backtracking, for the (convex) posterior
/// modes used as chain initial states.
pub fn find_mode(p: &Potential, x0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if x0.len() != p.dim() {
        return Err(Error::ShapeMismatch(format!(
            "start point has length {}, potential dimension is {}",
            x0.len(),
            p.dim()
        )));
    }
    const ARMIJO: f64 = 1e-4;
    const SHRINK: f64 = 0.5;
    let mut x = x0.to_vec();
    let mut g = vec![0.0; p.dim()];
    let mut ux = p.u(&x);
    for _ in 0..max_iter {
        p.grad_u_into(&x, &mut g);
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        let gnorm = gnorm2.sqrt();
        if gnorm <= tol {
            return Ok(x);
        }
        let mut step = 1.0;
        loop {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let uc = p.u(&cand);
            if uc <= ux - ARMIJO * step * gnorm2 {
                x = cand;
                ux = uc;
                break;
            }
            step *= SHRINK;
            if step < 1e-18 {
                // descent stalled; report as non-convergence
                return Err(Error::ConvergenceFailure {
                    iterations: max_iter,
                    grad_norm: gnorm,
                    last_iterate: x,
                });
            }
        }
    }
    p.grad_u_into(&x, &mut g);
    let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if gnorm <= tol {
        return Ok(x);
    }
    Err(Error::ConvergenceFailure {
        iterations: max_iter,
        grad_norm: gnorm,
        last_iterate: x,
    })
}

/// Read a regression dataset from a headered CSV file.
///
/// Every non-label column becomes a design column in file order; with
/// `intercept` a constant-1 column is prepended. The label column must hold
/// only 0/1 values.
pub fn load_regression_csv(
    path: &std::path::Path,
    label_column: &str,
    intercept: bool,
) -> Result<RegressionData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Ingestion {
                row: 0,
                message: format!("cannot open {}: {e}", path.display()),
            },
            _ => Error::Ingestion {
                row: 0,
                message: e.to_string(),
            },
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Ingestion {
            row: 0,
            message: format!("missing header row: {e}"),
        })?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Ingestion {
            row: 0,
            message: format!("label column '{label_column}' not found in header"),
        })?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| Error::Ingestion {
            row: row_no,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Ingestion {
                row: row_no,
                message: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(headers.len() - 1 + usize::from(intercept));
        if intercept {
            row.push(1.0);
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Ingestion {
                row: row_no,
                message: format!("cannot parse '{field}' in column '{}'", &headers[j]),
            })?;
            if j == label_idx {
                if value != 0.0 && value != 1.0 {
                    return Err(Error::Ingestion {
                        row: row_no,
                        message: format!("label '{field}' is not 0 or 1"),
                    });
                }
                labels.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Ingestion {
            row: 0,
            message: "file contains no data rows".into(),
        });
    }
    let d = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let design = Array2::from_shape_vec((labels.len(), d), flat)
        .expect("row lengths validated above");
    RegressionData::new(design, Array1::from(labels), DEFAULT_PRIOR_VARIANCE)
}

/// Seeded synthetic dataset: standard-normal design rows and Bernoulli labels
/// drawn from the stated link at a fixed coefficient vector.
///
/// The true coefficients are `β_j = (-1)^j (1 + j/2) / √d`, fixed so that a
/// given `(n, d, seed)` always produces the same dataset.
pub fn synthetic_regression(
    n: usize,
    dim: usize,
    seed: u64,
    link: SyntheticLink,
) -> Result<RegressionData> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidParameter(
            "synthetic dataset needs n >= 1 and dim >= 1".into(),
        ));
    }
    let beta: Vec<f64> = (0..dim)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + j as f64 / 2.0) / (dim as f64).sqrt()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut design = Array2::<f64>::zeros((n, dim));
    let mut labels = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut t = 0.0;
        for j in 0..dim {
            let v: f64 = rng.sample(StandardNormal);
            design[(i, j)] = v;
            t += v * beta[j];
        }
        let prob = match link {
            SyntheticLink::Logistic => 1.0 / (1.0 + (-t).exp()),
            SyntheticLink::Probit => 0.5 * libm::erfc(-t / std::f64::consts::SQRT_2),
        };
        let u: f64 = rng.gen();
        labels[i] = if u < prob { 1.0 } else { 0.0 };
    }
    RegressionData::new(design, labels, DEFAULT_PRIOR_VARIANCE)
}

/// Link used by [`synthetic_regression`] to generate labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticLink {
    Logistic,
    Probit,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Central finite difference of `U` along each coordinate.
    pub(crate) fn fd_gradient(p: &Potential, x: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let up = p.u(&xp);
            xp[i] = x[i] - h;
            let um = p.u(&xp);
            xp[i] = x[i];
            g[i] = (up - um) / (2.0 * h);
        }
        g
    }

    fn assert_grad_matches(p: &Potential, x: &[f64], rel_tol: f64) {
        let g = p.grad_u(x);
        let fd = fd_gradient(p, x, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            let scale = 1.0_f64.max(a.abs()).max(b.abs());
            assert!(
                (a - b).abs() / scale <= rel_tol,
                "gradient {a} vs finite difference {b} at x={x:?}"
            );
        }
    }

    #[test]
    fn mixture_symmetric_gradient_vanishes_at_zero() {
        let p = mixture1d_potential((-1.0, 1.0), 0.5).unwrap();
        assert_eq!(p.grad_u1(0.0), 0.0);
    }

    #[test]
    fn mixture_gradient_matches_finite_difference() {
        let p = mixture1d_potential((-1.0, 1.0), 0.5).unwrap();
        let g = p.grad_u1(1.0);
        let fd = fd_gradient(&p, &[1.0], 1e-6)[0];
        assert!((g - fd).abs() / fd.abs() < 1e-6, "{g} vs {fd}");
    }

    #[test]
    fn degenerate_mixture_is_gaussian() {
        let p = mixture1d_potential((0.0, 0.0), 1.0).unwrap();
        assert!((p.grad_u1(2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn mixture_rejects_bad_variance() {
        assert!(mixture1d_potential((-1.0, 1.0), 0.0).is_err());
        assert!(mixture1d_potential((-1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn mixture_finite_on_wide_range() {
        let p = mixture1d_potential((-1.0, 1.0), 0.5).unwrap();
        for &x in &[-50.0, -17.3, 0.0, 23.0, 50.0] {
            assert!(p.u1(x).is_finite());
            assert!(p.grad_u1(x).is_finite());
        }
    }

    #[test]
    fn gaussian_values() {
        let p = gaussian_potential(1, array![[1.0]]).unwrap();
        assert_eq!(p.u1(3.0), 4.5);
        assert_eq!(p.grad_u1(3.0), 3.0);

        let p2 = gaussian_potential(2, Array2::eye(2)).unwrap();
        assert_eq!(p2.grad_u(&[1.0, 1.0]), vec![1.0, 1.0]);

        let p3 = gaussian_potential(1, array![[2.0]]).unwrap();
        assert_eq!(p3.u1(1.0), 1.0);
        assert_eq!(p3.grad_u1(1.0), 2.0);
    }

    #[test]
    fn gaussian_rejects_non_spd() {
        assert!(gaussian_potential(2, array![[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(gaussian_potential(2, array![[1.0, 0.5], [0.0, 1.0]]).is_err());
    }

    fn small_dataset() -> RegressionData {
        // 5 rows, 2 columns, deterministic values
        let design = array![
            [0.3, -1.2],
            [-0.7, 0.4],
            [1.5, 0.9],
            [-0.2, -0.5],
            [0.8, 1.1]
        ];
        let labels = array![1.0, 0.0, 1.0, 0.0, 1.0];
        RegressionData::new(design, labels, DEFAULT_PRIOR_VARIANCE).unwrap()
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let data = small_dataset();
        let expect: Vec<f64> = (0..2)
            .map(|j| {
                (0..data.n())
                    .map(|i| data.design()[(i, j)] * (0.5 - data.labels()[i]))
                    .sum()
            })
            .collect();
        let p = logistic_potential(data).unwrap();
        let g = p.grad_u(&[0.0, 0.0]);
        for (a, b) in g.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn logistic_no_overflow_for_huge_scores() {
        let design = array![[500.0], [-500.0]];
        let labels = array![1.0, 0.0];
        let data = RegressionData::new(design, labels, DEFAULT_PRIOR_VARIANCE).unwrap();
        let p = logistic_potential(data).unwrap();
        assert!(p.u(&[1.0]).is_finite());
        assert!(p.grad_u(&[1.0])[0].is_finite());
    }

    #[test]
    fn logistic_gradient_matches_finite_difference() {
        let p = logistic_potential(small_dataset()).unwrap();
        assert_grad_matches(&p, &[0.4, -0.9], 1e-5);
        assert_grad_matches(&p, &[-1.3, 2.2], 1e-5);
    }

    #[test]
    fn probit_ratio_at_zero() {
        let expect = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((normal_cdf_ratio(0.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn probit_ratio_far_tail_matches_oracle() {
        // Reference value from 40-digit arithmetic: φ(30)/Φ(-30).
        let oracle = 30.033259667433677;
        assert!((normal_cdf_ratio(-30.0) - oracle).abs() / oracle < 1e-12);
        // The three-term asymptotic expansion s(1 + s⁻² - 2s⁻⁴) agrees with
        // the exact ratio only to ~1.4e-8 here (the dropped term is 10 s⁻⁶).
        let s = 30.0_f64;
        let expansion = s * (1.0 + s.powi(-2) - 2.0 * s.powi(-4));
        assert!((normal_cdf_ratio(-30.0) - expansion).abs() / oracle < 2e-8);
    }

    #[test]
    fn probit_ratio_continuous_at_switch() {
        let below = normal_cdf_ratio(PROBIT_SWITCH - 1e-12);
        let above = normal_cdf_ratio(PROBIT_SWITCH + 1e-12);
        assert!((below - above).abs() < 1e-7, "jump {}", (below - above).abs());
        // Reference value φ(8)/Φ(-8) from 40-digit arithmetic.
        let oracle = 8.121368112236113;
        assert!((below - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn probit_gradient_matches_finite_difference() {
        let p = probit_potential(small_dataset()).unwrap();
        assert_grad_matches(&p, &[0.4, -0.9], 1e-5);
        assert_grad_matches(&p, &[-1.3, 2.2], 1e-5);
    }

    #[test]
    fn regression_posteriors_are_convex() {
        let pl = logistic_potential(small_dataset()).unwrap();
        let pp = probit_potential(small_dataset()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            for p in [&pl, &pp] {
                assert!(p.u(&mid) <= 0.5 * p.u(&x) + 0.5 * p.u(&y) + 1e-12);
            }
        }
    }

    #[test]
    fn built_in_gradients_match_finite_differences_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mix = mixture1d_potential((-1.0, 1.0), 0.5).unwrap();
        let gauss = gaussian_potential(2, array![[2.0, 0.3], [0.3, 1.0]]).unwrap();
        let logi = logistic_potential(small_dataset()).unwrap();
        for _ in 0..100 {
            let x1 = [rng.gen_range(-5.0..5.0)];
            assert_grad_matches(&mix, &x1, 1e-5);
            let x2 = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            assert_grad_matches(&gauss, &x2, 1e-5);
            assert_grad_matches(&logi, &x2, 1e-5);
        }
    }

    #[test]
    fn find_mode_on_gaussians() {
        let p = gaussian_potential(1, array![[1.0]]).unwrap();
        let m = find_mode(&p, &[5.0], 1e-8, 500).unwrap();
        assert!(m[0].abs() <= 1e-8);

        let p2 = gaussian_potential(2, Array2::eye(2)).unwrap();
        let m2 = find_mode(&p2, &[3.0, -3.0], 1e-8, 500).unwrap();
        assert!(m2[0].abs() <= 1e-8 && m2[1].abs() <= 1e-8);
    }

    #[test]
    fn find_mode_on_logistic_posterior() {
        let p = logistic_potential(small_dataset()).unwrap();
        let m = find_mode(&p, &[0.0, 0.0], 1e-6, 10_000).unwrap();
        let g = p.grad_u(&m);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "gradient norm {norm}");
    }

    #[test]
    fn find_mode_reports_non_convergence() {
        // shallow quadratic: each unit step shrinks the gradient by 0.1%
        let p = gaussian_potential(1, array![[0.001]]).unwrap();
        match find_mode(&p, &[100.0], 1e-8, 2) {
            Err(Error::ConvergenceFailure {
                last_iterate,
                grad_norm,
                ..
            }) => {
                assert_eq!(last_iterate.len(), 1);
                assert!(grad_norm > 1e-8);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn csv_with_intercept() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "a,b,y\n1.0,2.0,1\n3.0,4.0,0\n5.0,6.0,1\n").unwrap();
        let data = load_regression_csv(&path, "y", true).unwrap();
        assert_eq!(data.design().shape(), &[3, 3]);
        for i in 0..3 {
            assert_eq!(data.design()[(i, 0)], 1.0);
        }
        assert_eq!(data.labels().to_vec(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_bad_label_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "a,y\n1.0,0\n2.0,1\n3.0,0\n4.0,2\n").unwrap();
        match load_regression_csv(&path, "y", false) {
            Err(Error::Ingestion { row, .. }) => assert_eq!(row, 4),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn csv_without_intercept() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let mut body = String::from("c1,c2,label\n");
        for i in 0..10 {
            body.push_str(&format!("{}.5,{},{}\n", i, i * 2, i % 2));
        }
        std::fs::write(&path, body).unwrap();
        let data = load_regression_csv(&path, "label", false).unwrap();
        assert_eq!(data.design().shape(), &[10, 2]);
        assert_eq!(data.labels().len(), 10);
    }

    #[test]
    fn csv_missing_file() {
        let r = load_regression_csv(std::path::Path::new("/nonexistent/x.csv"), "y", false);
        assert!(matches!(r, Err(Error::Ingestion { .. })));
    }

    #[test]
    fn csv_ragged_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "a,b,y\n1.0,2.0,1\n3.0,0\n").unwrap();
        match load_regression_csv(&path, "y", false) {
            Err(Error::Ingestion { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_dataset_is_reproducible() {
        let a = synthetic_regression(30, 3, 99, SyntheticLink::Logistic).unwrap();
        let b = synthetic_regression(30, 3, 99, SyntheticLink::Logistic).unwrap();
        assert_eq!(a.design(), b.design());
        assert_eq!(a.labels(), b.labels());
        let c = synthetic_regression(30, 3, 100, SyntheticLink::Logistic).unwrap();
        assert_ne!(a.design(), c.design());
    }
}
