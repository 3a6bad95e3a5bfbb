//! Autocovariance and spectral estimation of the asymptotic variance.
//!
//! The estimator is the lag-window sum
//! `σ̂²_S = Σ_{|k| < ⌊√n⌋} { ½ + ½ cos(π|k|/⌊√n⌋) } ω(|k|)`
//! with the Tukey-Hanning taper and the biased autocovariance
//! `ω(k) = n⁻¹ Σ_s (h_s - h̄)(h_{s+k} - h̄)` — divisor `n` at every lag.
//!
//! Autocovariances are computed by direct summation: only `⌊√n⌋` lags are
//! needed, and the blocked loop below streams the series once per 64k chunk
//! with a contiguous inner loop over lags. Chunk partials are reduced in
//! chunk order, so results do not depend on the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Spectral estimate together with the autocovariances it was built from.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    /// `σ̂²_S`; may come out slightly negative by sampling noise and is
    /// recorded raw in that case.
    pub sigma2: f64,
    /// Series length `n`.
    pub n: usize,
    /// Largest lag used, `⌊√n⌋ - 1`.
    pub max_lag: usize,
    /// `ω(0), …, ω(max_lag)`.
    pub autocov: Vec<f64>,
    /// Set when `σ̂²_S < 0`.
    pub negative: bool,
}

fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    r
}

/// Autocovariances `ω(0..=max_lag)` of the series around its full-series
/// mean, with divisor `n` at every lag.
pub fn autocovariance(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n == 0 {
        return Err(Error::Data("autocovariance of an empty series".into()));
    }
    if max_lag >= n {
        return Err(Error::InvalidParameter(format!(
            "max_lag {max_lag} must be smaller than the series length {n}"
        )));
    }
    let mut mean_acc = crate::cv::Kahan::default();
    for v in series {
        mean_acc.add(*v);
    }
    let mean = mean_acc.value() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();

    let nl = max_lag + 1;
    const CHUNK: usize = 1 << 16;
    let nchunks = n.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..nchunks)
        .into_par_iter()
        .map(|ci| {
            let s0 = ci * CHUNK;
            let s1 = (s0 + CHUNK).min(n);
            let mut om = vec![0.0; nl];
            for s in s0..s1 {
                let cs = centered[s];
                let kmax = (n - 1 - s).min(max_lag);
                let tail = &centered[s..=s + kmax];
                for (k, &ct) in tail.iter().enumerate() {
                    om[k] += cs * ct;
                }
            }
            om
        })
        .collect();

    let mut om = vec![0.0; nl];
    for part in &partials {
        for k in 0..nl {
            om[k] += part[k];
        }
    }
    for v in &mut om {
        *v /= n as f64;
    }
    Ok(om)
}

/// Tukey-Hanning window weight `w(k) = ½ + ½ cos(πk/b)` for bandwidth `b`.
pub fn window_weight(k: usize, bandwidth: usize) -> f64 {
    0.5 + 0.5 * (std::f64::consts::PI * k as f64 / bandwidth as f64).cos()
}

/// Spectral asymptotic-variance estimate with bandwidth `⌊√n⌋`.
pub fn spectral_variance(series: &[f64]) -> Result<SpectralEstimate> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "spectral estimator needs at least 4 samples, got {n}"
        )));
    }
    let bn = isqrt(n);
    let max_lag = bn - 1;
    let autocov = autocovariance(series, max_lag)?;
    let mut sigma2 = autocov[0];
    for (k, &om) in autocov.iter().enumerate().skip(1) {
        sigma2 += 2.0 * window_weight(k, bn) * om;
    }
    Ok(SpectralEstimate {
        sigma2,
        n,
        max_lag,
        autocov,
        negative: sigma2 < 0.0,
    })
}
