//! Envelope fits of η(T_t^Λ) ≤ |Λ|^δ e^{−γt} over a size family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{AscentOptions, SuperOp};

use super::contraction::contraction;
use super::propagate::Semigroup;

/// Values below this are treated as numerically zero and excluded from logs.
const LOG_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrmSample {
    pub size: usize,
    pub t: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrmFit {
    pub gamma: f64,
    pub delta: f64,
    /// RMS of ln η − (δ ln|Λ| − γt) over the fitted points.
    pub residual: f64,
    /// max(η − |Λ|^δ e^{−γt}, 0) over all samples.
    pub max_violation: f64,
    /// False when no decay was detected.
    pub mixing: bool,
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// γ is the slowest tail decay rate among sizes (slope of ln η over the later
/// half of each size's times); δ is the smallest exponent making the envelope hold.
pub fn fit_grm(samples: &[GrmSample]) -> Result<GrmFit> {
    let mut sizes: Vec<usize> = samples.iter().map(|s| s.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::domain("need samples from at least two sizes"));
    }
    if samples.iter().any(|s| s.size == 0 || !s.t.is_finite() || !s.eta.is_finite()) {
        return Err(Error::domain("samples need positive sizes and finite values"));
    }
    let mut gamma = f64::INFINITY;
    for &n in &sizes {
        let mut pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.size == n)
            .map(|s| (s.t, s.eta))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tail: Vec<(f64, f64)> = pts[pts.len() / 2..]
            .iter()
            .filter(|p| p.1 > LOG_FLOOR)
            .map(|p| (p.0, p.1.ln()))
            .collect();
        if let Some(s) = slope(&tail) {
            gamma = gamma.min(-s);
        }
    }
    if !gamma.is_finite() {
        gamma = 0.0;
    }
    let mixing = gamma > 1e-9;
    let gamma = gamma.max(0.0);
    let delta = samples
        .iter()
        .filter(|s| s.size > 1 && s.eta > LOG_FLOOR)
        .map(|s| (s.eta.ln() + gamma * s.t) / (s.size as f64).ln())
        .fold(0.0f64, f64::max);
    let envelope = |s: &GrmSample| (s.size as f64).powf(delta) * (-gamma * s.t).exp();
    let max_violation = samples
        .iter()
        .map(|s| (s.eta - envelope(s)).max(0.0))
        .fold(0.0, f64::max);
    let logs: Vec<f64> = samples
        .iter()
        .filter(|s| s.eta > LOG_FLOOR)
        .map(|s| s.eta.ln() - envelope(s).ln())
        .collect();
    let residual = if logs.is_empty() {
        0.0
    } else {
        (logs.iter().map(|r| r * r).sum::<f64>() / logs.len() as f64).sqrt()
    };
    Ok(GrmFit {
        gamma,
        delta,
        residual,
        max_violation,
        mixing,
    })
}

/// Contraction samples of a size-indexed family on a time grid.
pub fn grm_samples(
    family: impl Fn(usize) -> Result<SuperOp>,
    sizes: &[usize],
    ts: &[f64],
    opts: &AscentOptions,
) -> Result<Vec<GrmSample>> {
    let mut out = Vec::with_capacity(sizes.len() * ts.len());
    for &n in sizes {
        let g = Semigroup::new(family(n)?);
        for &t in ts {
            out.push(GrmSample {
                size: n,
                t,
                eta: contraction(&g, t, opts)?.value,
            });
        }
    }
    Ok(out)
}
