//! Decay profiles f(r) with f(0) = 1 and their least-squares selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum DecayProfile {
    /// f(r) = 1 for r ≤ range, 0 beyond.
    FiniteRange { range: usize },
    /// f(r) = e^{−μr}.
    Exponential { mu: f64 },
    /// f(r) = e^{−μ r^κ}, 0 < κ < 1: faster than any power, slower than exponential.
    QuasiLocal { mu: f64, kappa: f64 },
    /// f(r) = (1 + r)^{−α}.
    PowerLaw { alpha: f64 },
}

impl DecayProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DecayProfile::FiniteRange { .. } => true,
            DecayProfile::Exponential { mu } => mu.is_finite() && mu > 0.0,
            DecayProfile::QuasiLocal { mu, kappa } => {
                mu.is_finite() && mu > 0.0 && kappa > 0.0 && kappa < 1.0
            }
            DecayProfile::PowerLaw { alpha } => alpha.is_finite() && alpha > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid decay profile parameters: {self:?}")))
        }
    }

    pub fn eval(&self, r: usize) -> f64 {
        let x = r as f64;
        match *self {
            DecayProfile::FiniteRange { range } => {
                if r <= range {
                    1.0
                } else {
                    0.0
                }
            }
            DecayProfile::Exponential { mu } => (-mu * x).exp(),
            DecayProfile::QuasiLocal { mu, kappa } => (-mu * x.powf(kappa)).exp(),
            DecayProfile::PowerLaw { alpha } => (1.0 + x).powf(-alpha),
        }
    }

    /// Decay exponent α of the power-law class.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            DecayProfile::PowerLaw { alpha } => Some(alpha),
            _ => None,
        }
    }
}

/// A profile chosen by [`fit_profile`] and its residual sum of squares in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileFit {
    pub profile: DecayProfile,
    pub rss: f64,
}

const ZERO_FLOOR: f64 = 1e-14;
const QUASI_KAPPAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Least-squares slope through the origin of y against x.
fn origin_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    if sxx == 0.0 {
        return None;
    }
    let k = points.iter().map(|p| p.0 * p.1).sum::<f64>() / sxx;
    let rss = points.iter().map(|p| (p.1 - k * p.0).powi(2)).sum();
    Some((k, rss))
}

/// Selects the decay class that best explains normalised values f(r), r ≥ 0.
/// Trailing zeros, or a single positive radius, mean finite range; otherwise
/// ln f is fitted against r, r^κ and ln(1+r), and ties favour the exponential.
pub fn fit_profile(samples: &[(usize, f64)]) -> Result<ProfileFit> {
    if samples.is_empty() {
        return Err(Error::domain("profile fit needs at least one sample"));
    }
    let mut pts: Vec<(usize, f64)> = samples.to_vec();
    pts.sort_by_key(|p| p.0);
    let positive: Vec<(usize, f64)> = pts.iter().copied().filter(|p| p.1 > ZERO_FLOOR).collect();
    let last_positive = positive.last().map_or(0, |p| p.0);
    let max_r = pts.last().map_or(0, |p| p.0);
    if positive.len() <= 1 || last_positive < max_r {
        return Ok(ProfileFit {
            profile: DecayProfile::FiniteRange {
                range: last_positive,
            },
            rss: 0.0,
        });
    }
    let logs: Vec<(f64, f64)> = positive.iter().map(|&(r, v)| (r as f64, v.ln())).collect();
    let mut best: Option<ProfileFit> = None;
    let mut offer = |profile: DecayProfile, rss: f64| {
        if profile.validate().is_err() {
            return;
        }
        if best.is_none_or(|b| rss < b.rss - 1e-12 * (1.0 + b.rss)) {
            best = Some(ProfileFit { profile, rss });
        }
    };
    if let Some((k, rss)) = origin_slope(&logs) {
        offer(DecayProfile::Exponential { mu: -k }, rss);
    }
    for kappa in QUASI_KAPPAS {
        let xs: Vec<(f64, f64)> = logs.iter().map(|&(r, y)| (r.powf(kappa), y)).collect();
        if let Some((k, rss)) = origin_slope(&xs) {
            offer(DecayProfile::QuasiLocal { mu: -k, kappa }, rss);
        }
    }
    let xs: Vec<(f64, f64)> = logs.iter().map(|&(r, y)| ((1.0 + r).ln(), y)).collect();
    if let Some((k, rss)) = origin_slope(&xs) {
        offer(DecayProfile::PowerLaw { alpha: -k }, rss);
    }
    best.ok_or_else(|| Error::domain("profile values do not decay"))
}
