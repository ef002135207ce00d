//! Exponentials: cached dense semigroups (Padé) and the action of e^{tL} on a
//! single operator (Taylor with scaling) for systems too large for dense maps.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use faer::{c64, MatRef};

use crate::error::{Error, Result};
use crate::linalg::dense::{scale, re, CMat};
use crate::linalg::{Generator, SuperOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    /// ρ ↦ e^{tL}(ρ).
    Schrodinger,
    /// O ↦ e^{tL*}(O).
    Heisenberg,
}

/// Per-step bound on ‖hL‖ in the Taylor scheme.
const STEP_NORM: f64 = 2.0;
const MAX_TERMS: usize = 80;

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be finite and non-negative, got {t}")))
    }
}

/// e^{tL} applied to `x` in the chosen picture.
pub fn propagate(gen: &dyn Generator, x: MatRef<'_, c64>, t: f64, picture: Picture) -> Result<CMat> {
    check_time(t)?;
    let mut cur = x.to_owned();
    if t == 0.0 {
        return Ok(cur);
    }
    let nb = gen.norm_bound();
    if nb == 0.0 {
        return Ok(cur);
    }
    let steps = ((t * nb) / STEP_NORM).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    for _ in 0..steps {
        let mut term = cur.clone();
        let mut acc = cur.clone();
        for k in 1..=MAX_TERMS {
            let applied = match picture {
                Picture::Schrodinger => gen.apply(term.as_ref()),
                Picture::Heisenberg => gen.apply_dual(term.as_ref()),
            };
            term = scale(applied.as_ref(), re(h / k as f64));
            acc += &term;
            let tn = term.norm_l2();
            if tn == 0.0 || tn <= 1e-17 * acc.norm_l2() {
                break;
            }
        }
        cur = acc;
    }
    Ok(cur)
}

/// Values of e^{tL}(x) on an ascending grid, marching between grid points.
pub fn propagate_grid(
    gen: &dyn Generator,
    x: MatRef<'_, c64>,
    ts: &[f64],
    picture: Picture,
) -> Result<Vec<CMat>> {
    let mut out = Vec::with_capacity(ts.len());
    let mut cur = x.to_owned();
    let mut now = 0.0;
    for &t in ts {
        check_time(t)?;
        if t < now {
            return Err(Error::domain("time grid must be ascending"));
        }
        cur = propagate(gen, cur.as_ref(), t - now, picture)?;
        now = t;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Long-time limit of e^{tL}(I/d), reached by doubling t until ‖L(ρ)‖_F ≤ tol·‖L‖.
/// Converges to the fixed point when it is unique; uniqueness is not certified.
pub fn relaxed_state(gen: &dyn Generator, tol: f64, t_max: f64) -> Result<CMat> {
    let d = gen.dim();
    let nb = gen.norm_bound();
    let mut rho = scale(crate::linalg::dense::eye(d).as_ref(), re(1.0 / d as f64));
    if nb == 0.0 {
        return Ok(rho);
    }
    let mut now = 0.0;
    let mut step = 1.0 / nb;
    while now < t_max {
        let dt = step.min(t_max - now);
        rho = propagate(gen, rho.as_ref(), dt, Picture::Schrodinger)?;
        now += dt;
        step *= 2.0;
        if gen.apply(rho.as_ref()).norm_l2() <= tol * nb {
            return Ok(crate::linalg::dense::hermitian_part(rho.as_ref()));
        }
    }
    Err(Error::Horizon { target: tol, t_max })
}

/// T_t = e^{tL} for a dense generator, with memoised exponentials.
#[derive(Debug)]
pub struct Semigroup {
    generator: SuperOp,
    cache: RwLock<HashMap<u64, Arc<SuperOp>>>,
}

impl Clone for Semigroup {
    fn clone(&self) -> Self {
        Semigroup::new(self.generator.clone())
    }
}

impl Semigroup {
    pub fn new(generator: SuperOp) -> Self {
        Semigroup {
            generator,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn generator(&self) -> &SuperOp {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn exp(&self, t: f64) -> Result<Arc<SuperOp>> {
        check_time(t)?;
        let key = t.to_bits();
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let value = Arc::new(if t == 0.0 {
            SuperOp::identity(self.dim())
        } else {
            self.generator.exp(t)
        });
        let mut w = self.cache.write().expect("cache lock");
        Ok(w.entry(key).or_insert(value).clone())
    }

    pub fn evolve(&self, t: f64, rho: MatRef<'_, c64>) -> Result<CMat> {
        Ok(self.exp(t)?.apply(rho))
    }

    pub fn heisenberg(&self, t: f64, o: MatRef<'_, c64>) -> Result<CMat> {
        Ok(Generator::apply_dual(self.exp(t)?.as_ref(), o))
    }
}
