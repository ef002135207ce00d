//! Contraction η(T_t) = ½ sup_ρ ‖T_t(ρ) − T_t T_φ(ρ)‖₁, global and after a
//! partial trace, by monotone ascent over pure states.

use faer::c64;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::dense::{cx, hermitian_part, outer, polar_unitary, top_eigvec, trace_norm, CMat, CVec};
use crate::linalg::tensor::partial_trace_positions;
use crate::linalg::{embed_operator, AscentOptions, Layout, SuperOp};
use crate::seeding::{haar_vector, Seeder};

use super::propagate::Semigroup;
use super::spectral::{asymptotic_projectors, CLASSIFY_TOL};

/// Points per axis of the Bloch-sphere grid used for qubits (θ count; φ uses twice as many).
const BLOCH_GRID: usize = 64;

#[derive(Clone, Debug)]
pub struct ContractionEstimate {
    /// Attained value, a lower bound of the supremum.
    pub value: f64,
    /// The pure state attaining `value`.
    pub maximizer: CMat,
    pub restarts: usize,
}

/// Restriction applied after the map: keep the tensor factors at `keep`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub layout: Layout,
    pub keep: Vec<usize>,
}

/// ½ sup over pure ψ of ‖R(M(ψψ†))‖₁ for a fixed map M.
pub fn maximize_trace_distance(
    m: &SuperOp,
    reduction: Option<&Reduction>,
    opts: &AscentOptions,
) -> Result<ContractionEstimate> {
    let d = m.dim();
    if let Some(r) = reduction {
        if r.layout.total() != d {
            return Err(Error::domain(format!(
                "layout of dimension {} does not match map of dimension {d}",
                r.layout.total()
            )));
        }
    }
    let madj = m.hs_adjoint();
    let image = |psi: &CVec| -> Result<CMat> {
        let out = m.apply(outer(psi, psi).as_ref());
        match reduction {
            None => Ok(out),
            Some(r) => partial_trace_positions(out.as_ref(), &r.layout, &r.keep),
        }
    };
    let value_of = |psi: &CVec| -> Result<f64> { Ok(0.5 * trace_norm(image(psi)?.as_ref())) };

    let ascend = |mut psi: CVec| -> Result<(f64, CVec)> {
        let mut value = value_of(&psi)?;
        for _ in 0..opts.max_iter {
            let z = image(&psi)?;
            let w = polar_unitary(z.as_ref());
            let lifted = match reduction {
                None => w,
                Some(r) => embed_operator(w.as_ref(), &r.keep, &r.layout)?,
            };
            let g = madj.apply(lifted.as_ref());
            let (_, next) = top_eigvec(hermitian_part(g.as_ref()).as_ref());
            let next_value = value_of(&next)?;
            if next_value < value {
                break;
            }
            let gain = next_value - value;
            psi = next;
            value = next_value;
            if gain <= opts.tol * value.max(1.0) {
                break;
            }
        }
        Ok((value, psi))
    };

    let seeder = Seeder::new(opts.seed);
    let restarts = opts.restarts.max(1);
    let mut best: Option<(f64, CVec)> = None;
    let mut consider = |cand: (f64, CVec)| {
        if best.as_ref().is_none_or(|b| cand.0 > b.0) {
            best = Some(cand);
        }
    };
    if d == 2 {
        let mut grid_best: Option<(f64, CVec)> = None;
        for i in 0..=BLOCH_GRID {
            let theta = std::f64::consts::PI * i as f64 / BLOCH_GRID as f64;
            for j in 0..2 * BLOCH_GRID {
                let phi = std::f64::consts::PI * j as f64 / BLOCH_GRID as f64;
                let psi = bloch(theta, phi);
                let v = value_of(&psi)?;
                if grid_best.as_ref().is_none_or(|b| v > b.0) {
                    grid_best = Some((v, psi));
                }
            }
        }
        let (_, psi) = grid_best.expect("non-empty grid");
        consider(ascend(psi)?);
    }
    for k in 0..restarts {
        let mut rng = seeder.stream(k as u64);
        let psi = haar_vector(&mut rng, d);
        consider(ascend(psi)?);
    }
    let (value, psi) = best.expect("at least one restart");
    Ok(ContractionEstimate {
        value: value.clamp(0.0, 1.0),
        maximizer: outer(&psi, &psi),
        restarts,
    })
}

fn bloch(theta: f64, phi: f64) -> CVec {
    let v = [
        cx((theta / 2.0).cos(), 0.0),
        c64::from_polar((theta / 2.0).sin(), phi),
    ];
    faer::Col::from_fn(2, |i| v[i])
}

/// exp(tL) − exp(tL)∘T_φ.
fn deviation_map(g: &Semigroup, t: f64) -> Result<SuperOp> {
    let proj = asymptotic_projectors(g.generator(), CLASSIFY_TOL)?;
    let tt = g.exp(t)?;
    tt.sub(&tt.compose(&proj.peripheral)?)
}

/// η(T_t).
pub fn contraction(g: &Semigroup, t: f64, opts: &AscentOptions) -> Result<ContractionEstimate> {
    maximize_trace_distance(&deviation_map(g, t)?, None, opts)
}

/// η^A(T_t): trace norm taken after tracing out the complement of `a` in
/// `system`, whose sites each carry dimension `local_dim`.
pub fn local_contraction(
    g: &Semigroup,
    t: f64,
    system: &Region,
    local_dim: usize,
    a: &Region,
    opts: &AscentOptions,
) -> Result<ContractionEstimate> {
    if !a.is_subset(system) {
        return Err(Error::domain("region A is not contained in the system"));
    }
    let layout = Layout::uniform(system.len(), local_dim);
    if layout.total() != g.dim() {
        return Err(Error::domain(format!(
            "system of {} sites with local dimension {local_dim} does not match generator dimension {}",
            system.len(),
            g.dim()
        )));
    }
    let keep: Vec<usize> = a.iter().map(|s| system.position(s).expect("subset")).collect();
    let reduction = Reduction { layout, keep };
    maximize_trace_distance(&deviation_map(g, t)?, Some(&reduction), opts)
}

/// Smallest t (to bisection precision) with η(T_t) ≤ ε, searched on a doubling grid up to `t_max`.
pub fn mixing_time(g: &Semigroup, eps: f64, t_max: f64, opts: &AscentOptions) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("threshold must lie in (0, 1), got {eps}")));
    }
    let eta = |t: f64| -> Result<f64> { Ok(contraction(g, t, opts)?.value) };
    if eta(0.0)? <= eps {
        return Ok(0.0);
    }
    let scale = g.generator().matrix().norm_l2().max(1e-300);
    let mut lo = 0.0;
    let mut hi = (1.0 / scale).min(t_max);
    loop {
        if eta(hi)? <= eps {
            break;
        }
        if hi >= t_max {
            return Err(Error::Horizon { target: eps, t_max });
        }
        lo = hi;
        hi = (2.0 * hi).min(t_max);
    }
    for _ in 0..40 {
        if hi - lo <= 1e-6 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eta(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
