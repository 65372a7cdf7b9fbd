//! Performance metrics: mismatched-decoding mutual information over a fitted
//! Gaussian auxiliary channel, and symbol-/waveform-level PAPR.
//!
//! The MI estimator is the standard achievable-rate lower bound for a
//! memoryless auxiliary channel `q(y|x) ∝ exp(−‖y−x‖²/(2σ²))` (isotropic in
//! all four real dimensions):
//!
//! `MI = H(X) + (1/n)·Σ_t log2[ P(x_t)·q(y_t|x_t) / Σ_i P_i·q(y_t|x_i) ]`
//!
//! which reduces to the familiar uniform-prior form when all priors are
//! equal. Everything here is deterministic given its inputs; the Monte-Carlo
//! randomness lives entirely in the symbol draws and noise loads upstream.

use crate::constellation::{Constellation, Point4D};
use crate::txdsp::WaveformGrid;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum sample count for a trustworthy noise-variance fit.
const MIN_FIT_SYMBOLS: usize = 1_000;

/// Terms this far (nats) below the per-symbol maximum are dropped from the
/// log-sum-exp; exp(−46) ≈ 1e-20 keeps the truncation far below f64 noise
/// while skipping most of the exp calls at practical SNR.
const LSE_CUTOFF_NATS: f64 = 46.0;

/// A Monte-Carlo mutual-information estimate in bits per 4D symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MIEstimate {
    pub mi_bits_per_4d: f64,
    pub n_symbols: usize,
    /// Fitted auxiliary noise variance per real dimension.
    pub sigma2: f64,
    /// Monte-Carlo standard error of the mean, in bits.
    pub stderr: f64,
}

/// Moment-matched auxiliary noise variance per real dimension:
/// `mean(‖y−x‖²)/4`. Requires at least 10³ symbol pairs.
pub fn fit_noise_variance(y: &[Point4D], x: &[Point4D]) -> Result<f64> {
    if y.len() != x.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} received vs {} transmitted",
            y.len(),
            x.len()
        )));
    }
    if y.len() < MIN_FIT_SYMBOLS {
        return Err(Error::Estimation(format!(
            "{} symbols are too few to fit a noise variance (need ≥ {MIN_FIT_SYMBOLS})",
            y.len()
        )));
    }
    let total: f64 = y.iter().zip(x).map(|(a, b)| a.dist_sqr(b)).sum();
    Ok(total / (4.0 * y.len() as f64))
}

/// Mismatched-decoding MI estimate for received symbols `y` against the
/// transmitted indices into `c`, using an isotropic Gaussian auxiliary
/// channel with variance `sigma2` per real dimension. Clipped to
/// `[0, log2(M)]` and reported with the Monte-Carlo standard error.
pub fn mi_monte_carlo(
    y: &[Point4D],
    x_indices: &[usize],
    c: &Constellation,
    sigma2: f64,
) -> Result<MIEstimate> {
    let log_priors = prior_logs(c)?;
    mi_estimate(y, x_indices, c, sigma2, Some(&log_priors))
}

/// Uniform-prior fast path of [`mi_monte_carlo`]; rejects constellations
/// whose priors are not uniform. Provided for cross-checks — both paths
/// agree to well below 1e-12 at uniform priors.
pub fn mi_monte_carlo_uniform(
    y: &[Point4D],
    x_indices: &[usize],
    c: &Constellation,
    sigma2: f64,
) -> Result<MIEstimate> {
    let u = 1.0 / c.size() as f64;
    if c.priors.iter().any(|&p| (p - u).abs() > 1e-12 * u) {
        return Err(Error::domain(
            "uniform-prior estimator called with nonuniform priors",
        ));
    }
    mi_estimate(y, x_indices, c, sigma2, None)
}

fn prior_logs(c: &Constellation) -> Result<Vec<f64>> {
    Ok(c.priors
        .iter()
        .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect())
}

fn mi_estimate(
    y: &[Point4D],
    x_indices: &[usize],
    c: &Constellation,
    sigma2: f64,
    log_priors: Option<&Vec<f64>>,
) -> Result<MIEstimate> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain(format!(
            "auxiliary noise variance must be positive, got {sigma2}"
        )));
    }
    if y.len() != x_indices.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} received vs {} indices",
            y.len(),
            x_indices.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Estimation("no symbols to estimate MI from".into()));
    }
    let m_points = c.size();
    let bits = (m_points as f64).log2();
    let entropy = c.entropy_bits();
    let inv_two_sigma2 = 1.0 / (2.0 * sigma2);
    let ln2 = std::f64::consts::LN_2;

    let mut infos = Vec::with_capacity(y.len());
    let mut scores = vec![0.0f64; m_points];
    for (yt, &xt) in y.iter().zip(x_indices) {
        if xt >= m_points {
            return Err(Error::domain(format!(
                "transmitted index {xt} outside constellation of {m_points} points"
            )));
        }
        let lp_t = match log_priors {
            Some(lp) => lp[xt],
            None => 0.0, // common constant cancels between numerator and LSE
        };
        if lp_t == f64::NEG_INFINITY {
            return Err(Error::domain(format!(
                "transmitted index {xt} has zero prior"
            )));
        }
        let mut max_score = f64::NEG_INFINITY;
        for (i, xi) in c.points.iter().enumerate() {
            let lp = match log_priors {
                Some(lp) => lp[i],
                None => 0.0,
            };
            let s = if lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                lp - yt.dist_sqr(xi) * inv_two_sigma2
            };
            scores[i] = s;
            if s > max_score {
                max_score = s;
            }
        }
        let mut denom = 0.0;
        for &s in &scores {
            let gap = s - max_score;
            if gap >= -LSE_CUTOFF_NATS {
                denom += gap.exp();
            }
        }
        let ln_den = max_score + denom.ln();
        let ln_num = lp_t - yt.dist_sqr(&c.points[xt]) * inv_two_sigma2;
        infos.push((ln_num - ln_den) / ln2);
    }

    let n = infos.len() as f64;
    let mean = infos.iter().sum::<f64>() / n;
    let stderr = if infos.len() > 1 {
        let var = infos.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let base = match log_priors {
        Some(_) => entropy,
        None => bits, // uniform: H(X) = log2(M)
    };
    Ok(MIEstimate {
        mi_bits_per_4d: (base + mean).clamp(0.0, bits),
        n_symbols: infos.len(),
        sigma2,
        stderr,
    })
}

/// Symbol-level 4D PAPR (linear ratio): peak transmitted 4D energy over the
/// prior-weighted mean. Points with zero prior never transmit and are
/// excluded from the peak.
pub fn papr_symbols(c: &Constellation) -> f64 {
    let mut peak = 0.0f64;
    let mut mean = 0.0f64;
    for (p, &prior) in c.points.iter().zip(&c.priors) {
        if prior > 0.0 {
            peak = peak.max(p.norm_sqr());
            mean += prior * p.norm_sqr();
        }
    }
    peak / mean
}

/// Waveform-level PAPR in dB over both polarizations:
/// `10·log10(max_t(|ex|²+|ey|²) / mean_t(|ex|²+|ey|²))`.
pub fn papr_waveform(w: &WaveformGrid) -> f64 {
    let mut peak = 0.0f64;
    let mut sum = 0.0f64;
    for (x, y) in w.ex.iter().zip(&w.ey) {
        let p = x.norm_sqr() + y.norm_sqr();
        peak = peak.max(p);
        sum += p;
    }
    10.0 * (peak / (sum / w.len() as f64)).log10()
}
