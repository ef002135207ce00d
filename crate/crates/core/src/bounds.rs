//! Closed-form locality machinery: the weight ν_μ, Lieb-Robinson velocity,
//! localization and comparison bounds, the Δ₀ envelope, the stability constant,
//! the power-law compatibility report, and a verifier that pits any of these
//! against exact time series.
//!
//! Every infinite series is summed term by term until a certified tail bound
//! (ratio test or integral comparison) falls below `TAIL_RTOL` of the partial
//! sum; the returned value is partial sum plus tail, so it is always an upper
//! bound on the true series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DecayProfile, Strength};

const TAIL_RTOL: f64 = 1e-12;
const MAX_TERMS: usize = 1_000_000;
/// Convolution sums are quadratic in the cutoff; past this the tail bound is added instead.
const MAX_CONV_TERMS: usize = 20_000;
/// Slack used by [`verify_bound`] when flagging violations.
pub const VIOLATION_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrClass {
    /// ν_μ(r) = e^{μr}.
    Exp,
    /// ν_μ(r) = (1 + r)^μ.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrData {
    pub class: LrClass,
    pub mu: f64,
    pub v: f64,
}

fn nu_raw(class: LrClass, mu: f64, r: f64) -> f64 {
    match class {
        LrClass::Exp => (mu * r).exp(),
        LrClass::Power => (1.0 + r).powf(mu),
    }
}

/// The submultiplicative weight ν_μ(r).
pub fn nu(lr: &LrData, r: f64) -> f64 {
    nu_raw(lr.class, lr.mu, r)
}

/// Sums `term(0..)` until `tail(n)`, a bound on Σ_{k>n} term(k), is negligible.
/// Returns partial + tail, or `None` if no finite tail bound was reached by `cap`.
fn certified_sum(
    cap: usize,
    mut term: impl FnMut(usize) -> f64,
    tail: impl Fn(usize) -> Option<f64>,
) -> Option<f64> {
    let mut partial = 0.0;
    let mut last_tail = None;
    for n in 0..cap {
        partial += term(n);
        last_tail = tail(n);
        if let Some(t) = last_tail {
            if t <= TAIL_RTOL * partial || t == 0.0 {
                return Some(partial + t);
            }
        }
    }
    last_tail.map(|t| partial + t)
}

/// Tail bound for a series whose consecutive-term ratio after n is at most `ratio(n)`,
/// given that `ratio` is non-increasing.
fn ratio_tail(next: f64, ratio: f64) -> Option<f64> {
    (ratio < 1.0).then(|| next / (1.0 - ratio))
}

/// sup_{x≥0} (1+x)^m e^{−μ x^κ} (κ = 1 allowed), so that e^{−μx^κ} ≤ K (1+x)^{−m}.
fn stretched_to_power(mu: f64, kappa: f64, m: f64) -> f64 {
    if (kappa - 1.0).abs() < f64::EPSILON {
        // exact supremum of (1+x)^m e^{−μx}
        if m <= mu {
            1.0
        } else {
            (m / mu).powf(m) * (mu - m).exp()
        }
    } else {
        let peak = (m / (kappa * mu * std::f64::consts::E)).powf(m / kappa);
        2f64.powf(m) * peak.max(1.0)
    }
}

/// Lieb-Robinson velocity v = 2J Σ_δ f(δ) ν_μ(δ) |b₀(δ)|², which equals 2J times the
/// double sum Σ_r |shell_r| Σ_{δ≥r} f(δ)ν_μ(δ)|b₀(δ)| in dimension `dim`.
pub fn lr_velocity(strength: &Strength, dim: usize, class: LrClass, mu: f64) -> Result<f64> {
    strength.profile.validate()?;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::domain(format!("LR exponent μ must be positive, got {mu}")));
    }
    if dim == 0 {
        return Err(Error::domain("lattice dimension must be at least 1"));
    }
    if strength.j == 0.0 {
        return Ok(0.0);
    }
    let d = dim as f64;
    let f = strength.profile;
    let term = |n: usize| {
        let x = n as f64;
        f.eval(n) * nu_raw(class, mu, x) * (2.0 * x + 1.0).powf(2.0 * d)
    };
    let shell_ratio = |n: usize| {
        let x = n as f64;
        ((2.0 * x + 3.0) / (2.0 * x + 1.0)).powf(2.0 * d)
    };
    let series = match (class, f) {
        (_, DecayProfile::FiniteRange { range }) => Some((0..=range).map(term).sum()),
        (LrClass::Exp, DecayProfile::Exponential { mu: rate }) => {
            if rate <= mu {
                return Err(Error::Divergence(format!(
                    "exponential LR class needs μ = {mu} < profile rate {rate}"
                )));
            }
            certified_sum(MAX_TERMS, term, |n| {
                ratio_tail(term(n + 1), shell_ratio(n + 1) * (mu - rate).exp())
            })
        }
        (LrClass::Exp, _) => {
            return Err(Error::Divergence(
                "exponential LR class needs an exponentially decaying or finite-range profile"
                    .into(),
            ))
        }
        (LrClass::Power, DecayProfile::Exponential { mu: rate }) => {
            certified_sum(MAX_TERMS, term, |n| {
                let x = (n + 1) as f64;
                let r = ((x + 2.0) / (x + 1.0)).powf(mu) * shell_ratio(n + 1) * (-rate).exp();
                ratio_tail(term(n + 1), r)
            })
        }
        (LrClass::Power, DecayProfile::QuasiLocal { mu: rate, kappa }) => {
            // f ν |b|² ≤ K 4^D (1+x)^{−2} with m = μ + 2D + 2
            let m = mu + 2.0 * d + 2.0;
            let k = stretched_to_power(rate, kappa, m) * 4f64.powf(d);
            certified_sum(MAX_TERMS, term, |n| Some(k / (1.0 + n as f64)))
        }
        (LrClass::Power, DecayProfile::PowerLaw { alpha }) => {
            let p = alpha - mu - 2.0 * d;
            if p <= 1.0 {
                return Err(Error::Divergence(format!(
                    "power-law LR class needs μ < α − (2D+1): μ = {mu}, α = {alpha}, D = {dim}"
                )));
            }
            let k = 4f64.powf(d) / (p - 1.0);
            certified_sum(MAX_TERMS, term, |n| Some(k * (1.0 + n as f64).powf(1.0 - p)))
        }
    };
    let series =
        series.ok_or_else(|| Error::Divergence("no certified tail bound within the term cap".into()))?;
    Ok(2.0 * strength.j * series)
}

/// Localization exponent β of a power-law profile with exponent α in dimension D.
pub fn beta_exponent(alpha: f64, dim: usize) -> Result<f64> {
    let d = dim as f64;
    if dim == 0 || !alpha.is_finite() || alpha <= 2.0 * d + 1.0 {
        return Err(Error::domain(format!("β needs α > 2D+1, got α = {alpha}, D = {dim}")));
    }
    Ok(if alpha >= 5.0 * d - 1.0 {
        alpha - 3.0 * d
    } else {
        0.5 * (alpha - d - 1.0)
    })
}

/// A finite sum Σ c_k (1 + x)^{e_k} with real exponents, used for the polynomial
/// prefactors p(·), q(·) and c(·).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub terms: Vec<(f64, f64)>,
}

impl Envelope {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * (1.0 + x).powf(e)).sum()
    }

    /// Largest exponent; the growth degree.
    pub fn degree(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .map(|&(_, e)| e)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub dim: usize,
    pub j: f64,
    pub profile: DecayProfile,
    pub lr: LrData,
    pub gamma: f64,
    pub delta: f64,
    pub beta: f64,
}

impl BoundContext {
    /// Derives v from the strength and β from the profile. Power-law profiles use
    /// [`beta_exponent`]; other power-class profiles decay faster than any power, so
    /// β = μ − D; the exponential class reuses β = μ.
    pub fn new(
        dim: usize,
        strength: &Strength,
        class: LrClass,
        mu: f64,
        gamma: f64,
        delta: f64,
    ) -> Result<Self> {
        let v = lr_velocity(strength, dim, class, mu)?;
        let beta = match (class, strength.profile.alpha()) {
            (LrClass::Power, Some(alpha)) => beta_exponent(alpha, dim)?,
            (LrClass::Power, None) => mu - dim as f64,
            (LrClass::Exp, _) => mu,
        };
        Self::from_parts(dim, strength.j, strength.profile, LrData { class, mu, v }, gamma, delta, beta)
    }

    pub fn from_parts(
        dim: usize,
        j: f64,
        profile: DecayProfile,
        lr: LrData,
        gamma: f64,
        delta: f64,
        beta: f64,
    ) -> Result<Self> {
        profile.validate()?;
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if dim == 0
            || !finite_nonneg(j)
            || !finite_pos(lr.mu)
            || !finite_nonneg(lr.v)
            || !finite_pos(gamma)
            || !finite_nonneg(delta)
            || !finite_pos(beta)
        {
            return Err(Error::domain(format!(
                "bound context needs D ≥ 1, J, v, δ ≥ 0 and μ, γ, β > 0 \
                 (D = {dim}, J = {j}, μ = {}, v = {}, γ = {gamma}, δ = {delta}, β = {beta})",
                lr.mu, lr.v
            )));
        }
        Ok(Self { dim, j, profile, lr, gamma, delta, beta })
    }

    fn d(&self) -> f64 {
        self.dim as f64
    }

    fn nu_beta(&self, r: f64) -> f64 {
        nu_raw(self.lr.class, self.beta, r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatReport {
    pub cc1: bool,
    pub cc2: bool,
    pub cc3: bool,
    pub k_bar: f64,
    pub delta0: f64,
    pub gamma_tilde: f64,
    /// γ̃μ/(γ̃ − v), present only when γ̃ > v.
    pub eps_tilde: Option<f64>,
}

impl CompatReport {
    pub fn passes(&self) -> bool {
        self.cc1 && self.cc2 && self.cc3
    }
}

/// Power-law compatibility conditions and the derived rates. Profiles without a
/// finite α satisfy the first condition trivially.
pub fn compat_check(ctx: &BoundContext) -> CompatReport {
    let d = ctx.d();
    let (v, g, b, dd) = (ctx.lr.v, ctx.gamma, ctx.beta, ctx.delta);
    let cc1 = ctx.profile.alpha().is_none_or(|a| a > 3.0 * d + 2.0);
    let cc2 = b > (v / g) * (v + g + d * dd);
    let cc3 = b >= v + g - d * dd;
    let k_bar = (b + d * dd) / (v + g);
    let delta0 = g * b / (v + g) - v * d * dd / (v + g);
    let gamma_tilde = delta0;
    let eps_tilde = (gamma_tilde > v).then(|| gamma_tilde * ctx.lr.mu / (gamma_tilde - v));
    CompatReport { cc1, cc2, cc3, k_bar, delta0, gamma_tilde, eps_tilde }
}

/// (e^{vt} − 1 − vt)/v, continuous at v = 0.
fn phi2_over_v(v: f64, t: f64) -> f64 {
    let x = v * t;
    if x < 1e-5 {
        t * x * (0.5 + x / 6.0)
    } else {
        (x.exp_m1() - x) / v
    }
}

/// ‖O_A(t) − O_r(t)‖ ≤ ‖O‖ |A| J (e^{vt} − 1 − vt)/v · ν_β⁻¹(r).
pub fn bound_localization(ctx: &BoundContext, a_size: usize, o_norm: f64, t: f64, r: f64) -> f64 {
    o_norm * a_size as f64 * ctx.j * phi2_over_v(ctx.lr.v, t) / ctx.nu_beta(r)
}

/// ‖K(O(t))‖ ≤ ‖K‖_cb ‖O‖ C(X,Y) (e^{vt} − 1)/ν_μ(dist), with C(X,Y) = min(|X|, |Y|).
pub fn bound_lr(ctx: &BoundContext, k_cb: f64, o_norm: f64, c_xy: f64, t: f64, dist: f64) -> f64 {
    k_cb * o_norm * c_xy * (ctx.lr.v * t).exp_m1() / nu(&ctx.lr, dist)
}

/// p(s) bounding |A(s)|^δ / |A|^δ: the s-fattening grows a set by at most (1+2s)^D ≤ 2^D(1+s)^D.
pub fn growth_envelope(ctx: &BoundContext) -> Envelope {
    let e = ctx.d() * ctx.delta;
    Envelope { terms: vec![(2f64.powf(e), e)] }
}

/// Time t(s) at which Δ₀ is evaluated: βs/(2v) for the exponential class, k̄ log(1+s)
/// for the power class.
pub fn delta0_time(ctx: &BoundContext, s: f64) -> Result<f64> {
    match ctx.lr.class {
        LrClass::Exp => {
            if ctx.lr.v == 0.0 {
                return Err(Error::domain("Δ₀ time selection needs v > 0"));
            }
            Ok(ctx.beta * s / (2.0 * ctx.lr.v))
        }
        LrClass::Power => {
            let report = compat_check(ctx);
            if !report.passes() {
                return Err(Error::Infeasible(format!(
                    "compatibility conditions fail: CC1 {}, CC2 {}, CC3 {}",
                    report.cc1, report.cc2, report.cc3
                )));
            }
            Ok(report.k_bar * (1.0 + s).ln())
        }
    }
}

/// Δ₀(s) = (J/v) e^{vt} ν_β⁻¹(s) + p(s) e^{−γt} at t = [`delta0_time`].
pub fn delta0_envelope(ctx: &BoundContext, s: f64) -> Result<f64> {
    let t = delta0_time(ctx, s)?;
    let v = ctx.lr.v;
    let first = if ctx.j == 0.0 {
        0.0
    } else {
        // combined exponent avoids overflow of e^{vt} and ν_β(s) separately
        let log = v * t - ctx.nu_beta(s).ln();
        ctx.j / v * log.exp()
    };
    Ok(first + growth_envelope(ctx).eval(s) * (-ctx.gamma * t).exp())
}

/// Upper envelope of a non-negative sequence: coef·e^{−rate x} or coef·(1+x)^{−rate}.
#[derive(Clone, Copy, Debug)]
enum Decay {
    Exp { coef: f64, rate: f64 },
    Poly { coef: f64, rate: f64 },
}

impl Decay {
    fn as_poly(self, m: f64) -> (f64, f64) {
        match self {
            Decay::Poly { coef, rate } => (coef, rate),
            Decay::Exp { coef, rate } => (coef * stretched_to_power(rate, 1.0, m), m),
        }
    }
}

fn profile_decay(p: &DecayProfile, weight: f64, dim: f64) -> Decay {
    match *p {
        DecayProfile::FiniteRange { range } => Decay::Exp { coef: weight * (range as f64).exp(), rate: 1.0 },
        DecayProfile::Exponential { mu } => Decay::Exp { coef: weight, rate: mu },
        DecayProfile::QuasiLocal { mu, kappa } => {
            let m = dim + 3.0;
            Decay::Poly { coef: weight * stretched_to_power(mu, kappa, m), rate: m }
        }
        DecayProfile::PowerLaw { alpha } => Decay::Poly { coef: weight, rate: alpha },
    }
}

/// The function g̃(δ) of the stability argument, with its upper envelope.
///
/// Exponential class: the split time t₀(δ) = max(0, (μδ/2 + ln v)/v) makes the
/// Lieb-Robinson piece at most e^{−μδ/2}, so g̃(δ) = e^{−μδ/2} + γ⁻¹e^{−γt₀(δ)}.
/// Power class: t₀ = k log(1+δ) with k = μ/(v + γ̃) balances both pieces at the
/// rate ρ = γ̃μ/(v + γ̃), giving g̃(δ) = (1/v + 1/γ̃)(1+δ)^{−ρ}.
fn stability_kernel(ctx: &BoundContext) -> Result<(Box<dyn Fn(usize) -> f64>, Decay)> {
    let (v, mu, gamma) = (ctx.lr.v, ctx.lr.mu, ctx.gamma);
    if v <= 0.0 {
        return Err(Error::domain("stability constant needs v > 0"));
    }
    match ctx.lr.class {
        LrClass::Exp => {
            let g = move |n: usize| {
                let x = n as f64;
                let t0 = ((mu * x / 2.0 + v.ln()) / v).max(0.0);
                (-mu * x / 2.0).exp() + (-gamma * t0).exp() / gamma
            };
            let coef = 1.0 + v.powf(-gamma / v).max(1.0) / gamma;
            let rate = (mu / 2.0).min(gamma * mu / (2.0 * v));
            Ok((Box::new(g), Decay::Exp { coef, rate }))
        }
        LrClass::Power => {
            let gt = compat_check(ctx).gamma_tilde;
            if gt <= 0.0 {
                return Err(Error::Infeasible(format!("local mixing rate γ̃ = {gt} is not positive")));
            }
            let rho = gt * mu / (v + gt);
            let coef = 1.0 / v + 1.0 / gt;
            Ok((Box::new(move |n: usize| coef * (1.0 + n as f64).powf(-rho)), Decay::Poly { coef, rate: rho }))
        }
    }
}

/// Stability constant c(|A|) for a perturbation with norm profile e(r) = weight·profile(r):
/// q₁(|A|)[g̃(0)|A|Σe(r) + Σ_{d>0} q(d)(e⋆g̃(d) + g̃(0)Σ_{r>d}e(r))], with
/// q₁(|A|) = max(|A|, |A|^δ) and q(d) = |A|((2d+1)^D − (2d−1)^D) bounding the
/// number of sites at distance d from A.
pub fn stability_envelope(
    ctx: &BoundContext,
    a_size: usize,
    profile: &DecayProfile,
    weight: f64,
) -> Result<f64> {
    profile.validate()?;
    if weight == 0.0 || a_size == 0 {
        return Ok(0.0);
    }
    if !(weight.is_finite() && weight > 0.0) {
        return Err(Error::domain(format!("perturbation weight must be positive, got {weight}")));
    }
    let d = ctx.d();
    let a = a_size as f64;
    let (g, g_decay) = stability_kernel(ctx)?;
    let e = |r: usize| weight * profile.eval(r);
    let e_decay = profile_decay(profile, weight, d);
    let g0 = g(0);

    // Σ_r e(r) with its own certified tail
    let e_total = match e_decay {
        Decay::Exp { coef, rate } => certified_sum(MAX_TERMS, e, |n| {
            Some(coef * (-rate * (n + 1) as f64).exp() / (1.0 - (-rate).exp()))
        }),
        Decay::Poly { coef, rate } if rate > 1.0 => {
            certified_sum(MAX_TERMS, e, |n| Some(coef * (1.0 + n as f64).powf(1.0 - rate) / (rate - 1.0)))
        }
        Decay::Poly { .. } => None,
    }
    .ok_or_else(|| Error::Infeasible("perturbation profile is not summable".into()))?;

    let shell = |n: usize| {
        let x = n as f64;
        a * ((2.0 * x + 1.0).powf(d) - (2.0 * x - 1.0).powf(d))
    };
    let tail: Box<dyn Fn(usize) -> Option<f64>> = match (e_decay, g_decay) {
        (Decay::Exp { coef: ce, rate: ra }, Decay::Exp { coef: cg, rate: rb }) => {
            let c = ra.min(rb);
            let k = a * 2.0 * d * (ce * cg + g0 * ce / (1.0 - (-ra).exp()));
            let b = move |n: usize| {
                let x = n as f64;
                k * (2.0 * x + 1.0).powf(d - 1.0) * (x + 1.0) * (-c * x).exp()
            };
            Box::new(move |n: usize| {
                let x = (n + 1) as f64;
                let ratio = ((2.0 * x + 3.0) / (2.0 * x + 1.0)).powf(d - 1.0) * ((x + 2.0) / (x + 1.0)) * (-c).exp();
                ratio_tail(b(n + 1), ratio)
            })
        }
        _ => {
            let m = d + 3.0;
            let (ce, ra) = e_decay.as_poly(m);
            let (cg, rb) = g_decay.as_poly(m);
            let mm = ra.min(rb);
            if ra <= d + 1.0 || mm <= d || rb <= 1.0 {
                return Err(Error::Infeasible(format!(
                    "stability sums diverge: perturbation exponent {ra}, kernel exponent {rb}, D = {d}"
                )));
            }
            let q = a * 2.0 * d * 2f64.powf(d - 1.0);
            let s = |x: f64| 1.0 + 1.0 / (x - 1.0);
            let k1 = q * ce * cg * 2f64.powf(ra.max(rb)) * (s(ra) + s(rb));
            let k2 = q * g0 * ce / (ra - 1.0);
            let (p1, p2) = (mm + 1.0 - d, ra - d);
            Box::new(move |n: usize| {
                let x = 1.0 + n as f64;
                Some(k1 * x.powf(1.0 - p1) / (p1 - 1.0) + k2 * x.powf(1.0 - p2) / (p2 - 1.0))
            })
        }
    };

    let mut e_vals: Vec<f64> = Vec::new();
    let mut g_vals: Vec<f64> = Vec::new();
    let mut e_prefix = 0.0;
    let outer = certified_sum(
        MAX_CONV_TERMS,
        |n| {
            e_vals.push(e(n));
            g_vals.push(g(n));
            e_prefix += e_vals[n];
            if n == 0 {
                return 0.0;
            }
            let conv: f64 = (0..=n).map(|r| e_vals[r] * g_vals[n - r]).sum();
            let e_beyond = (e_total - e_prefix).max(0.0);
            shell(n) * (conv + g0 * e_beyond)
        },
        |n| if n == 0 { None } else { tail(n) },
    )
    .ok_or_else(|| Error::Infeasible("stability series has no certified tail".into()))?;

    let q1 = a.max(a.powf(ctx.delta));
    Ok(q1 * (g0 * a * e_total + outer))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// exact / bound per grid point; 0 where both vanish.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Indices where exact > bound + [`VIOLATION_SLACK`].
    pub violations: Vec<usize>,
}

pub fn verify_bound(exact: &[f64], bound: &[f64]) -> Result<BoundCheck> {
    if exact.len() != bound.len() {
        return Err(Error::Validation(format!(
            "grid mismatch: {} exact values vs {} bound values",
            exact.len(),
            bound.len()
        )));
    }
    let mut ratios = Vec::with_capacity(exact.len());
    let mut violations = Vec::new();
    for (i, (&x, &b)) in exact.iter().zip(bound).enumerate() {
        ratios.push(if b > 0.0 {
            x / b
        } else if x.abs() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
        if x > b + VIOLATION_SLACK || x.is_nan() || b.is_nan() {
            violations.push(i);
        }
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(BoundCheck { ratios, max_ratio, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp_ctx(j: f64, v: f64, beta: f64) -> BoundContext {
        BoundContext::from_parts(
            1,
            j,
            DecayProfile::FiniteRange { range: 1 },
            LrData { class: LrClass::Exp, mu: beta, v },
            1.0,
            0.0,
            beta,
        )
        .unwrap()
    }

    #[test]
    fn nu_values() {
        let e = LrData { class: LrClass::Exp, mu: 1.3, v: 1.0 };
        let p = LrData { class: LrClass::Power, mu: 2.0, v: 1.0 };
        assert_eq!(nu(&e, 0.0), 1.0);
        assert_eq!(nu(&p, 3.0), 16.0);
    }

    #[test]
    fn zero_strength_has_zero_velocity() {
        let s = Strength { j: 0.0, profile: DecayProfile::Exponential { mu: 0.5 } };
        assert_eq!(lr_velocity(&s, 2, LrClass::Exp, 1.0).unwrap(), 0.0);
    }

    /// Σ_r |shell_r| Σ_{δ≥r} w(δ)|b₀(δ)| in D = 1 with w = fν, summed directly to `n` terms.
    fn direct_double_sum(w: impl Fn(f64) -> f64, n: usize) -> f64 {
        let inner: Vec<f64> = (0..n).map(|k| w(k as f64) * (2 * k + 1) as f64).collect();
        let mut suffix = vec![0.0; n + 1];
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] + inner[k];
        }
        (0..n).map(|r| if r == 0 { 1.0 } else { 2.0 } * suffix[r]).sum()
    }

    #[test]
    fn finite_range_velocity_matches_direct_summation() {
        let s = Strength { j: 1.0, profile: DecayProfile::FiniteRange { range: 1 } };
        let v = lr_velocity(&s, 1, LrClass::Exp, 1.0).unwrap();
        let direct = direct_double_sum(|k| if k <= 1.0 { k.exp() } else { 0.0 }, 1_000_000);
        assert!((v - 2.0 * direct).abs() < 1e-12 * v, "{v} vs {}", 2.0 * direct);
        // 1 + 9e by hand: the shells r = 0 and r = 1 each see the δ = 1 term
        assert!((v - 2.0 * (1.0 + 9.0 * 1f64.exp())).abs() < 1e-12);
    }

    #[test]
    fn exponential_velocity_is_a_certified_upper_bound() {
        let s = Strength { j: 0.7, profile: DecayProfile::Exponential { mu: 2.0 } };
        let v = lr_velocity(&s, 1, LrClass::Exp, 1.0).unwrap();
        let direct = 2.0 * 0.7 * direct_double_sum(|k| (-k).exp(), 2000);
        assert!(v >= direct && v - direct < 1e-10 * v, "{v} vs {direct}");
    }

    #[test]
    fn power_velocity_adds_a_valid_tail() {
        let s = Strength { j: 1.0, profile: DecayProfile::PowerLaw { alpha: 6.0 } };
        let v = lr_velocity(&s, 1, LrClass::Power, 1.5).unwrap();
        let partial = 2.0 * direct_double_sum(|k| (1.0 + k).powf(-4.5), 100_000);
        assert!(v >= partial, "{v} < {partial}");
        assert!(v - partial < 1e-3 * v);
    }

    #[test]
    fn divergent_series_are_rejected() {
        let p = Strength { j: 1.0, profile: DecayProfile::PowerLaw { alpha: 3.0 } };
        assert!(matches!(lr_velocity(&p, 1, LrClass::Power, 0.5), Err(Error::Divergence(_))));
        assert!(matches!(lr_velocity(&p, 1, LrClass::Exp, 0.5), Err(Error::Divergence(_))));
        let e = Strength { j: 1.0, profile: DecayProfile::Exponential { mu: 1.0 } };
        assert!(matches!(lr_velocity(&e, 1, LrClass::Exp, 1.0), Err(Error::Divergence(_))));
        let q = Strength { j: 1.0, profile: DecayProfile::QuasiLocal { mu: 2.0, kappa: 0.5 } };
        assert!(lr_velocity(&q, 1, LrClass::Power, 1.0).unwrap().is_finite());
    }

    #[test]
    fn beta_branches() {
        assert_eq!(beta_exponent(10.0, 1).unwrap(), 7.0);
        assert_eq!(beta_exponent(8.0, 2).unwrap(), 2.5);
        for dim in 1..5 {
            let d = dim as f64;
            let edge = 5.0 * d - 1.0;
            if edge > 2.0 * d + 1.0 {
                let hi = beta_exponent(edge, dim).unwrap();
                let lo = beta_exponent(edge - 1e-9, dim).unwrap();
                assert!((hi - (2.0 * d - 1.0)).abs() < 1e-12);
                assert!((hi - lo).abs() < 1e-8);
            }
        }
        assert!(beta_exponent(3.0, 1).is_err());
    }

    #[test]
    fn compat_examples() {
        let ctx = BoundContext::from_parts(
            1,
            1.0,
            DecayProfile::PowerLaw { alpha: 6.0 },
            LrData { class: LrClass::Power, mu: 1.0, v: 1.0 },
            1.0,
            0.0,
            3.0,
        )
        .unwrap();
        let r = compat_check(&ctx);
        assert!(r.cc1);
        // symmetric toy context: v = γ, δ = 0
        assert!((r.k_bar - 1.5).abs() < 1e-15);
        assert!((r.delta0 - 1.5).abs() < 1e-15);
        assert_eq!(r.gamma_tilde, r.delta0);
        assert!((r.eps_tilde.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn localization_formula() {
        let ctx = exp_ctx(1.0, 1.0, 1.0);
        let e = std::f64::consts::E;
        let want = (e - 2.0) * (-3.0f64).exp();
        assert!((bound_localization(&ctx, 1, 1.0, 1.0, 3.0) - want).abs() < 1e-15);
        assert_eq!(bound_localization(&ctx, 3, 2.0, 0.0, 1.0), 0.0);
        let mut prev = f64::INFINITY;
        for r in 0..60 {
            let b = bound_localization(&ctx, 2, 1.0, 2.0, r as f64);
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn lr_formula() {
        let ctx = exp_ctx(1.0, 0.8, 1.0);
        assert_eq!(bound_lr(&ctx, 2.0, 1.0, 1.0, 0.0, 3.0), 0.0);
        let at0 = bound_lr(&ctx, 2.0, 3.0, 1.0, 1.5, 0.0);
        assert!((at0 - 6.0 * ((0.8f64 * 1.5).exp() - 1.0)).abs() < 1e-12);
        for &t in &[0.1, 0.5, 2.0] {
            for &dist in &[1.0, 2.0, 5.0] {
                let want = 2.0 * 1.0 * 1.0 * ((0.8 * t as f64).exp() - 1.0) * (-dist as f64).exp();
                assert!((bound_lr(&ctx, 2.0, 1.0, 1.0, t, dist) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn delta0_exponential_class() {
        let ctx = BoundContext::from_parts(
            2,
            1.5,
            DecayProfile::Exponential { mu: 2.0 },
            LrData { class: LrClass::Exp, mu: 1.0, v: 3.0 },
            0.4,
            0.5,
            1.0,
        )
        .unwrap();
        for s in [0.0, 1.0, 4.0, 10.0, 50.0] {
            let got = delta0_envelope(&ctx, s).unwrap();
            let p = 2f64.powf(1.0) * (1.0 + s);
            let want = 1.5 / 3.0 * (-s / 2.0).exp() + p * (-0.4 * s / 6.0).exp();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{s}: {got} vs {want}");
        }
        assert!(delta0_envelope(&ctx, 2000.0).unwrap() < 1e-50);
    }

    #[test]
    fn delta0_power_class_decays_at_delta0() {
        let ctx = BoundContext::from_parts(
            1,
            1.0,
            DecayProfile::PowerLaw { alpha: 30.0 },
            LrData { class: LrClass::Power, mu: 1.0, v: 1.0 },
            2.0,
            0.5,
            27.0,
        )
        .unwrap();
        let rep = compat_check(&ctx);
        assert!(rep.passes());
        let (s1, s2) = (1e6, 1e7);
        let slope = (delta0_envelope(&ctx, s2).unwrap().ln() - delta0_envelope(&ctx, s1).unwrap().ln())
            / ((1.0 + s2).ln() - (1.0 + s1).ln());
        assert!((slope + rep.delta0).abs() < 1e-6, "{slope} vs −{}", rep.delta0);

        let bad = BoundContext { beta: 0.5, ..ctx };
        assert!(matches!(delta0_envelope(&bad, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn stability_zero_perturbation() {
        let ctx = exp_ctx(1.0, 2.0, 1.0);
        assert_eq!(stability_envelope(&ctx, 3, &DecayProfile::Exponential { mu: 1.0 }, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn stability_matches_direct_double_sum() {
        let (v, mu, gamma) = (2.0, 1.0, 0.5);
        let ctx = BoundContext::from_parts(
            1,
            1.0,
            DecayProfile::FiniteRange { range: 1 },
            LrData { class: LrClass::Exp, mu, v },
            gamma,
            0.0,
            mu,
        )
        .unwrap();
        let g = |x: f64| {
            let t0 = ((mu * x / 2.0 + f64::ln(v)) / v).max(0.0);
            (-mu * x / 2.0).exp() + (-gamma * t0).exp() / gamma
        };
        let e = |r: f64| (-1.5 * r).exp();
        // Σ_u Σ_r e(r) g̃(dist(A, b_r(u))) with A = {0} in one dimension
        let (l, rmax) = (300i64, 300i64);
        let mut direct = 0.0;
        for u in -l..=l {
            for r in 0..=rmax {
                direct += e(r as f64) * g((u.abs() - r).max(0) as f64);
            }
        }
        let got = stability_envelope(&ctx, 1, &DecayProfile::Exponential { mu: 1.5 }, 1.0).unwrap();
        assert!(got >= direct && (got - direct) < 1e-9 * got, "{got} vs {direct}");
    }

    #[test]
    fn stability_grows_polynomially() {
        let ctx = exp_ctx(1.0, 2.0, 1.0);
        let p = DecayProfile::Exponential { mu: 1.0 };
        for a in [1usize, 2, 4, 8, 16] {
            let c1 = stability_envelope(&ctx, a, &p, 1.0).unwrap();
            let c2 = stability_envelope(&ctx, 2 * a, &p, 1.0).unwrap();
            assert!(c2 / c1 <= 4.0 + 1e-9, "{a}: {}", c2 / c1);
        }
    }

    #[test]
    fn stability_power_class_needs_summable_profile() {
        let ctx = BoundContext::from_parts(
            1,
            1.0,
            DecayProfile::PowerLaw { alpha: 40.0 },
            LrData { class: LrClass::Power, mu: 3.0, v: 1.0 },
            2.0,
            0.0,
            37.0,
        )
        .unwrap();
        let ok = stability_envelope(&ctx, 2, &DecayProfile::PowerLaw { alpha: 5.0 }, 0.1).unwrap();
        assert!(ok.is_finite() && ok > 0.0);
        let bad = stability_envelope(&ctx, 2, &DecayProfile::PowerLaw { alpha: 1.5 }, 0.1);
        assert!(matches!(bad, Err(Error::Infeasible(_))));
    }

    #[test]
    fn verify_reports() {
        let x = [0.0, 0.5, 1.0];
        let r = verify_bound(&x, &x).unwrap();
        assert_eq!(r.max_ratio, 1.0);
        assert!(r.violations.is_empty());
        let r = verify_bound(&[0.0, 2.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.violations, vec![1]);
        assert!(verify_bound(&[1.0], &[]).is_err());
    }

    fn random_ctx() -> impl Strategy<Value = BoundContext> {
        (1usize..4, 0.1f64..5.0, 0.1f64..5.0, 0.0f64..3.0, 0.1f64..40.0, 3.0f64..60.0).prop_map(
            |(dim, v, gamma, delta, beta, alpha)| BoundContext {
                dim,
                j: 1.0,
                profile: DecayProfile::PowerLaw { alpha },
                lr: LrData { class: LrClass::Power, mu: 1.0, v },
                gamma,
                delta,
                beta,
            },
        )
    }

    proptest! {
        #[test]
        fn nu_is_submultiplicative_and_monotone(mu in 0.01f64..4.0, r in 0.0f64..50.0, s in 0.0f64..50.0, power in any::<bool>()) {
            let lr = LrData { class: if power { LrClass::Power } else { LrClass::Exp }, mu, v: 1.0 };
            prop_assert!(nu(&lr, r + s) <= nu(&lr, r) * nu(&lr, s) * (1.0 + 1e-12));
            prop_assert!(nu(&lr, r + s) >= nu(&lr, r));
        }

        #[test]
        fn beta_increases_on_each_branch(dim in 1usize..5, a in 0.0f64..30.0, h in 1e-3f64..5.0) {
            let alpha = 2.0 * dim as f64 + 1.0 + 1e-6 + a;
            prop_assert!(beta_exponent(alpha + h, dim).unwrap() > beta_exponent(alpha, dim).unwrap());
        }

        #[test]
        fn compat_double_identity(ctx in random_ctx()) {
            let r = compat_check(&ctx);
            let d = ctx.dim as f64;
            let a = ctx.beta - ctx.lr.v * r.k_bar;
            let b = ctx.gamma * r.k_bar - d * ctx.delta;
            let scale = ctx.beta.abs() + d * ctx.delta + 1.0;
            prop_assert!((a - r.delta0).abs() < 1e-12 * scale);
            prop_assert!((b - r.delta0).abs() < 1e-12 * scale);
            prop_assert_eq!(r.delta0 > 0.0, ctx.beta > ctx.lr.v / ctx.gamma * d * ctx.delta);
        }

        #[test]
        fn bounds_monotone(t in 0.0f64..5.0, dt in 0.0f64..1.0, r in 0.0f64..10.0, dr in 0.0f64..3.0, v in 0.01f64..4.0) {
            let ctx = exp_ctx(1.0, v, 0.7);
            prop_assert!(bound_localization(&ctx, 2, 1.0, t + dt, r) >= bound_localization(&ctx, 2, 1.0, t, r));
            prop_assert!(bound_localization(&ctx, 2, 1.0, t, r + dr) <= bound_localization(&ctx, 2, 1.0, t, r));
            prop_assert!(bound_lr(&ctx, 2.0, 1.0, 1.0, t + dt, r) >= bound_lr(&ctx, 2.0, 1.0, 1.0, t, r));
            prop_assert!(bound_lr(&ctx, 2.0, 1.0, 1.0, t, r + dr) <= bound_lr(&ctx, 2.0, 1.0, 1.0, t, r));
        }
    }
}
