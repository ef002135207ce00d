//! Correlation functionals of bipartite states, LTQO and fixed-point
//! indistinguishability measurements, and decay-class fitting.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::bounds::{delta0_envelope, BoundContext};
use crate::dynamics::{asymptotic_projectors, fixed_point, CLASSIFY_TOL};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::dense::{
    dagger, eigvalsh, entropy, eye, hermitian_part, kron, ketbra, op_norm, outer, polar_unitary,
    sign_hermitian, top_eigvec, trace, CMat,
};
use crate::linalg::tensor::{embed_operator, partial_trace_positions, Layout};
use crate::linalg::SuperOp;
use crate::model::UniformFamily;
use crate::seeding::{random_density, Seeder};

/// Density matrix on A ⊗ B, factor A first.
#[derive(Clone, Debug)]
pub struct BipartiteState {
    rho: CMat,
    da: usize,
    db: usize,
}

impl BipartiteState {
    pub fn new(rho: CMat, da: usize, db: usize) -> Result<Self> {
        let n = da * db;
        if da == 0 || db == 0 || rho.nrows() != n || rho.ncols() != n {
            return Err(Error::domain(format!(
                "state of size {}x{} does not split as {da} x {db}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let tr = trace(rho.as_ref());
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::domain(format!("state has trace {tr}")));
        }
        let herm = hermitian_part(rho.as_ref());
        if (&herm - &rho).norm_max() > 1e-8 {
            return Err(Error::domain("state is not Hermitian"));
        }
        if eigvalsh(herm.as_ref())[0] < -1e-8 {
            return Err(Error::domain("state is not positive semidefinite"));
        }
        Ok(BipartiteState { rho: herm, da, db })
    }

    /// Restricts a state on the sites of `sites` to the disjoint regions A and B.
    pub fn from_regions(rho: &CMat, sites: &Region, local_dim: usize, a: &Region, b: &Region) -> Result<Self> {
        if !a.intersection(b).is_empty() {
            return Err(Error::domain("regions A and B overlap"));
        }
        let layout = Layout::uniform(sites.len(), local_dim);
        let pos = |r: &Region| -> Result<Vec<usize>> {
            r.iter()
                .map(|s| sites.position(s).ok_or_else(|| Error::domain(format!("site {s} is outside the state"))))
                .collect()
        };
        let mut keep = pos(a)?;
        keep.extend(pos(b)?);
        let reduced = partial_trace_positions(rho.as_ref(), &layout, &keep)?;
        let da = local_dim.pow(a.len() as u32);
        let db = local_dim.pow(b.len() as u32);
        Self::new(reduced, da, db)
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    fn layout(&self) -> Layout {
        Layout::new(vec![self.da, self.db])
    }

    pub fn marginal_a(&self) -> CMat {
        partial_trace_positions(self.rho.as_ref(), &self.layout(), &[0]).expect("layout matches")
    }

    pub fn marginal_b(&self) -> CMat {
        partial_trace_positions(self.rho.as_ref(), &self.layout(), &[1]).expect("layout matches")
    }
}

fn trace_norm_hermitian(x: &CMat) -> f64 {
    eigvalsh(hermitian_part(x.as_ref()).as_ref()).iter().map(|v| v.abs()).sum()
}

/// T(ρ) = ‖ρ_AB − ρ_A ⊗ ρ_B‖₁.
pub fn trace_corr(s: &BipartiteState) -> f64 {
    let product = kron(s.marginal_a().as_ref(), s.marginal_b().as_ref());
    trace_norm_hermitian(&(&s.rho - &product))
}

/// Lower bound on C(ρ) = sup_{‖M‖,‖N‖≤1} |⟨M⊗N⟩ − ⟨M⟩⟨N⟩| by alternating polar steps
/// from `restarts` random unitary starts.
pub fn covariance_corr(s: &BipartiteState, restarts: usize, seed: u64) -> f64 {
    let (da, db) = (s.da, s.db);
    let layout = s.layout();
    let rho_a = s.marginal_a();
    let rho_b = s.marginal_b();
    // X_B(M) = tr_A[(M⊗I)ρ] − tr(Mρ_A) ρ_B, so that tr(N X_B(M)) is the covariance
    let side_b = |m: &CMat| -> CMat {
        let lifted = &kron(m.as_ref(), eye(db).as_ref()) * &s.rho;
        let part = partial_trace_positions(lifted.as_ref(), &layout, &[1]).expect("layout matches");
        let mean = trace((m * &rho_a).as_ref());
        &part - &rho_b * faer::Scale(mean)
    };
    let side_a = |n: &CMat| -> CMat {
        let lifted = &kron(eye(da).as_ref(), n.as_ref()) * &s.rho;
        let part = partial_trace_positions(lifted.as_ref(), &layout, &[0]).expect("layout matches");
        let mean = trace((n * &rho_b).as_ref());
        &part - &rho_a * faer::Scale(mean)
    };
    let nuclear = |x: &CMat| crate::linalg::dense::trace_norm(x.as_ref());

    let seeder = Seeder::new(seed);
    let mut best = 0.0f64;
    for k in 0..restarts.max(1) {
        let mut rng = seeder.stream(k as u64);
        let mut m = polar_unitary(crate::seeding::ginibre(&mut rng, da, da).as_ref());
        let mut value = 0.0f64;
        for _ in 0..500 {
            let xb = side_b(&m);
            let n = dagger(polar_unitary(xb.as_ref()).as_ref());
            let xa = side_a(&n);
            let next = nuclear(&xa);
            m = dagger(polar_unitary(xa.as_ref()).as_ref());
            let gain = next - value;
            value = value.max(next);
            if gain <= 1e-12 * value.max(1e-300) {
                break;
            }
        }
        best = best.max(value);
    }
    best
}

/// I(ρ) = S(ρ_A) + S(ρ_B) − S(ρ_AB) in nats.
pub fn mutual_info(s: &BipartiteState) -> f64 {
    let i = entropy(s.marginal_a().as_ref()) + entropy(s.marginal_b().as_ref()) - entropy(s.rho.as_ref());
    i.max(0.0)
}

/// Fannes-type ceiling T(ln D_AB − ln T) on the mutual information, defined when T ≤ 1/(2e).
pub fn fannes_bound(t: f64, d_ab: usize) -> Option<f64> {
    if !(0.0..=1.0 / (2.0 * std::f64::consts::E)).contains(&t) {
        return None;
    }
    if t == 0.0 {
        return Some(0.0);
    }
    Some(t * ((d_ab as f64).ln() - t.ln()))
}

/// Ceiling 3(|A|+|B|)^δ Δ₀(d_AB/2 − R) on the trace correlation of a rapidly mixing fixed point.
pub fn correlation_bound(ctx: &BoundContext, a_size: usize, b_size: usize, dist: f64, range: f64) -> Result<f64> {
    let s = (dist / 2.0 - range).max(0.0);
    Ok(3.0 * ((a_size + b_size) as f64).powf(ctx.delta) * delta0_envelope(ctx, s)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtqoEstimate {
    /// sup ‖ρ₁^A − ρ₂^A‖₁ over periodic states, or the best pair found.
    pub value: f64,
    /// False when the periodic states form a classical simplex and its vertices were enumerated.
    pub lower_bound: bool,
}

fn reduce(x: &CMat, layout: &Layout, keep: &[usize]) -> Result<CMat> {
    partial_trace_positions(x.as_ref(), layout, keep)
}

/// Largest pairwise reduced trace distance among `states`, with the maximising indices.
fn max_pair(reduced: &[CMat]) -> (f64, usize, usize) {
    let mut best = (0.0, 0, 0);
    for i in 0..reduced.len() {
        for j in i + 1..reduced.len() {
            let d = trace_norm_hermitian(&(&reduced[i] - &reduced[j]));
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

/// Reduced trace distance between periodic states of a generator on `sites`.
///
/// If T_φ kills every off-diagonal matrix unit, the periodic states are the convex
/// hull of T_φ(|i⟩⟨i|) and the vertex enumeration is exact. Otherwise `samples`
/// random states are projected by T_φ and the best pair is refined by alternating
/// Helstrom-projector steps.
pub fn periodic_state_distance(
    gen: &SuperOp,
    sites: &Region,
    local_dim: usize,
    a: &Region,
    samples: usize,
    seed: u64,
) -> Result<LtqoEstimate> {
    let d = gen.dim();
    let layout = Layout::uniform(sites.len(), local_dim);
    if layout.total() != d {
        return Err(Error::domain("generator dimension does not match the region"));
    }
    let keep: Vec<usize> = a
        .iter()
        .map(|s| sites.position(s).ok_or_else(|| Error::domain(format!("site {s} is outside the region"))))
        .collect::<Result<_>>()?;
    let phi = asymptotic_projectors(gen, CLASSIFY_TOL)?.peripheral;
    let pm = phi.matrix();
    let col_norm = |k: usize| (0..pm.nrows()).map(|r| pm[(r, k)].norm()).fold(0.0, f64::max);
    let classical = (0..d * d).filter(|k| k % d != k / d).all(|k| col_norm(k) <= 1e-9);

    let mut states: Vec<CMat> = (0..d).map(|i| hermitian_part(phi.apply(ketbra(d, i, i).as_ref()).as_ref())).collect();
    if !classical {
        let seeder = Seeder::new(seed);
        for k in 0..samples {
            let mut rng = seeder.stream(k as u64);
            let rho = random_density(&mut rng, d, 1 + k % d);
            states.push(hermitian_part(phi.apply(rho.as_ref()).as_ref()));
        }
    }
    let reduced: Vec<CMat> = states.iter().map(|x| reduce(x, &layout, &keep)).collect::<Result<_>>()?;
    let (mut value, i, j) = max_pair(&reduced);
    if classical {
        return Ok(LtqoEstimate { value, lower_bound: false });
    }

    // max over periodic ρ of tr(Wρ) is the top eigenvalue of T_φ†(W)
    let dual = phi.dual();
    let (mut r1, mut r2) = (reduced[i].clone(), reduced[j].clone());
    for _ in 0..100 {
        let w = sign_hermitian((&r1 - &r2).as_ref());
        let lifted = embed_operator(w.as_ref(), &keep, &layout)?;
        let g = hermitian_part(dual.apply(lifted.as_ref()).as_ref());
        let (_, top) = top_eigvec(g.as_ref());
        let neg = Mat::from_fn(d, d, |p, q| -g[(p, q)]);
        let (_, bottom) = top_eigvec(neg.as_ref());
        let s1 = hermitian_part(phi.apply(outer(&top, &top).as_ref()).as_ref());
        let s2 = hermitian_part(phi.apply(outer(&bottom, &bottom).as_ref()).as_ref());
        let (n1, n2) = (reduce(&s1, &layout, &keep)?, reduce(&s2, &layout, &keep)?);
        let next = trace_norm_hermitian(&(&n1 - &n2));
        if next <= value * (1.0 + 1e-12) {
            break;
        }
        value = next;
        r1 = n1;
        r2 = n2;
    }
    Ok(LtqoEstimate { value: value.min(2.0), lower_bound: true })
}

/// LTQO defect of `family` at margin ℓ: periodic states of the truncation to A(ℓ),
/// compared on A.
pub fn ltqo_delta(family: &UniformFamily, a: &Region, ell: usize, samples: usize, seed: u64) -> Result<LtqoEstimate> {
    let region = family.geometry.grow(a, ell)?;
    let gen = family.truncate(&region)?;
    periodic_state_distance(&gen, &region, family.local_dim, a, samples, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Indistinguishability {
    /// |tr O_A(ρ_∞ − ρ^s_∞)|.
    pub lhs: f64,
    /// ‖O_A‖ max(|A|, |A|^δ) Δ₀(s).
    pub rhs: f64,
}

/// Compares the fixed point of the closed generator on the whole lattice with the
/// fixed point of the closed generator on A(s), through an observable on A.
pub fn fixed_point_indistinguishability(
    family: &UniformFamily,
    a: &Region,
    s: usize,
    o_a: &CMat,
    ctx: &BoundContext,
) -> Result<Indistinguishability> {
    let full = family.geometry.all();
    let grown = family.geometry.grow(a, s)?;
    let d = family.local_dim;
    let on_a = |lam: &Region| -> Result<CMat> {
        let rho = fixed_point(&family.assemble_closed(lam)?)?;
        let keep: Vec<usize> = a.iter().map(|x| lam.position(x).expect("A ⊆ region")).collect();
        reduce(&rho, &Layout::uniform(lam.len(), d), &keep)
    };
    if !a.is_subset(&full) {
        return Err(Error::domain("region A is not inside the lattice"));
    }
    let diff = &on_a(&full)? - &on_a(&grown)?;
    let lhs = trace((o_a * &diff).as_ref()).norm();
    let size = a.len() as f64;
    let rhs = op_norm(o_a.as_ref()) * size.max(size.powf(ctx.delta)) * delta0_envelope(ctx, s as f64)?;
    Ok(Indistinguishability { lhs, rhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    Exponential,
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub class: DecayClass,
    pub rate: f64,
    /// Unexplained fraction 1 − R² of ln(value) under the chosen model.
    pub residual: f64,
}

/// Least-squares fit of y = a + b x; returns (slope, 1 − R²).
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let unexplained = if syy > 0.0 { rss / syy } else { 0.0 };
    (slope, unexplained)
}

/// Chooses exponential (ln y linear in x) or power-law (ln y linear in ln(1+x)) decay.
pub fn decay_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 4 {
        return Err(Error::Validation(format!("decay fit needs at least 4 points, got {}", series.len())));
    }
    if series.iter().any(|(x, y)| !x.is_finite() || !y.is_finite() || *x < 0.0) {
        return Err(Error::Validation("decay fit needs finite values at non-negative abscissae".into()));
    }
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = series.iter().map(|p| p.1.max(1e-15).ln()).collect();
    let (se, re) = linear_fit(&xs, &logs);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln_1p()).collect();
    let (sp, rp) = linear_fit(&lx, &logs);
    Ok(if re <= rp {
        DecayFit { class: DecayClass::Exponential, rate: -se, residual: re }
    } else {
        DecayFit { class: DecayClass::Power, rate: -sp, residual: rp }
    })
}

/// Convenience: the maximally entangled state on C^d ⊗ C^d.
pub fn maximally_entangled(d: usize) -> CMat {
    let n = d * d;
    let amp = 1.0 / d as f64;
    Mat::from_fn(n, n, |i, j| {
        if i % (d + 1) == 0 && j % (d + 1) == 0 {
            c64::new(amp, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}
