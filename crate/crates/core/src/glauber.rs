//! Classical Glauber dynamics of ±1 spins and its Lindblad embedding.
//!
//! Conventions: a configuration of the ordered sites s₀, s₁, … is an index whose
//! binary digit for sᵢ (most significant first) is 0 for spin +1 and 1 for spin −1,
//! matching the computational basis |0⟩, |1⟩ of the quantum embedding.
//! [`ClassicalGenerator::matrix`] acts on measures (columns sum to zero); its
//! transpose is the generator Q acting on functions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use faer::{c64, Mat};
use faer::linalg::solvers::Solve;
use serde::{Deserialize, Serialize};

use crate::dynamics::{asymptotic_projectors, contraction, maximize_trace_distance, Semigroup, CLASSIFY_TOL};
use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, Region, Site};
use crate::linalg::dense::{expm, ketbra, singular_values, CMat};
use crate::linalg::tensor::{embed_operator, Layout};
use crate::linalg::{AscentOptions, Gkls, SuperOp};
use crate::model::{BoundaryRule, DecayProfile, LocalTerm, Strength, TermGenerator, UniformFamily};

/// Largest configuration space enumerated exactly.
pub const ENUMERATION_LIMIT: usize = 1 << 20;
const MAX_TERM_SITES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialTerm {
    pub sites: Vec<Vec<i64>>,
    /// J_A on the 2^|A| configurations of `sites`.
    pub table: Vec<f64>,
}

/// Finite-range potential {J_A}; with `ti` every term is repeated at every translate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential {
    pub range: usize,
    pub terms: Vec<PotentialTerm>,
    #[serde(default = "default_ti")]
    pub ti: bool,
}

fn default_ti() -> bool {
    true
}

impl Potential {
    /// Validates and, for translation-invariant potentials, shifts each term so its
    /// lexicographically smallest site is the origin.
    pub fn new(range: usize, terms: Vec<PotentialTerm>, ti: bool) -> Result<Self> {
        if range == 0 {
            return Err(Error::Validation("potential range must be positive".into()));
        }
        let dim = terms.first().and_then(|t| t.sites.first()).map(|s| s.len());
        let mut canonical = Vec::with_capacity(terms.len());
        for (k, t) in terms.into_iter().enumerate() {
            if t.sites.is_empty() || t.sites.len() > MAX_TERM_SITES {
                return Err(Error::Validation(format!("term {k} must have 1..={MAX_TERM_SITES} sites")));
            }
            if t.sites.iter().any(|s| Some(s.len()) != dim || s.is_empty()) {
                return Err(Error::Validation(format!("term {k} mixes coordinate dimensions")));
            }
            if t.table.len() != 1usize << t.sites.len() {
                return Err(Error::Validation(format!(
                    "term {k} has {} table entries, expected {}",
                    t.table.len(),
                    1usize << t.sites.len()
                )));
            }
            if t.table.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("term {k} has a non-finite entry")));
            }
            for (i, a) in t.sites.iter().enumerate() {
                if t.sites[..i].contains(a) {
                    return Err(Error::Validation(format!("term {k} repeats a site")));
                }
                for b in &t.sites[..i] {
                    let diam = a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0);
                    if diam > range as u64 {
                        return Err(Error::Validation(format!("term {k} is wider than the range {range}")));
                    }
                }
            }
            let sites = if ti {
                let anchor = t.sites.iter().min().expect("non-empty").clone();
                t.sites
                    .iter()
                    .map(|s| s.iter().zip(&anchor).map(|(a, b)| a - b).collect())
                    .collect()
            } else {
                t.sites
            };
            canonical.push(PotentialTerm { sites, table: t.table });
        }
        Ok(Potential { range, terms: canonical, ti })
    }

    /// Nearest-neighbour Ising potential J_{xy} = J σ_xσ_y plus field J_x = h σ_x.
    pub fn ising(dim: usize, j: f64, h: f64) -> Result<Self> {
        let mut terms = Vec::new();
        for axis in 0..dim {
            let mut e = vec![0; dim];
            e[axis] = 1;
            terms.push(PotentialTerm { sites: vec![vec![0; dim], e], table: vec![j, -j, -j, j] });
        }
        if h != 0.0 {
            terms.push(PotentialTerm { sites: vec![vec![0; dim]], table: vec![h, -h] });
        }
        Self::new(1, terms, true)
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(1, vec![PotentialTerm { sites: vec![vec![0; dim]], table: vec![0.0, 0.0] }], true)
    }

    /// All instances A of the potential inside `geometry`, as (sites, term index).
    fn instances(&self, geometry: &LatticeGeometry) -> Result<Vec<(Vec<Site>, usize)>> {
        let mut out = Vec::new();
        for (k, t) in self.terms.iter().enumerate() {
            if t.sites[0].len() != geometry.dim() {
                return Err(Error::domain("potential and lattice disagree on the dimension"));
            }
            let anchors: Vec<Vec<i64>> = if self.ti {
                geometry.sites().map(|s| s.coords).collect()
            } else {
                vec![vec![0; geometry.dim()]]
            };
            for x in anchors {
                let placed: Option<Vec<Site>> = t
                    .sites
                    .iter()
                    .map(|s| geometry.wrap(&Site::new(s.iter().zip(&x).map(|(a, b)| a + b).collect::<Vec<_>>())))
                    .collect();
                let Some(placed) = placed else { continue };
                let distinct = (0..placed.len()).all(|i| !placed[..i].contains(&placed[i]));
                if distinct {
                    out.push((placed, k));
                }
            }
        }
        Ok(out)
    }
}

/// Reads a potential from JSON `{"range": r, "terms": [{"sites": [...], "table": [...]}], "ti": true}`.
pub fn parse_potential(bytes: &[u8]) -> Result<Potential> {
    let raw: Potential = serde_json::from_slice(bytes)?;
    Potential::new(raw.range, raw.terms, raw.ti)
}

fn spin_bit(config: usize, pos: usize, n: usize) -> usize {
    (config >> (n - 1 - pos)) & 1
}

fn flip(config: usize, pos: usize, n: usize) -> usize {
    config ^ (1 << (n - 1 - pos))
}

/// Sites carrying a configuration index, with the potential instances among them.
struct Frame {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    /// Positions of each instance's sites and its term index.
    instances: Vec<(Vec<usize>, usize)>,
    /// Instances touching each position.
    touching: Vec<Vec<usize>>,
}

impl Frame {
    fn new(potential: &Potential, geometry: &LatticeGeometry, sites: Vec<Site>) -> Result<Self> {
        if sites.len() >= usize::BITS as usize - 1 {
            return Err(Error::Resource { what: "spin frame", needed: sites.len(), limit: 62 });
        }
        let index: HashMap<Site, usize> = sites.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut instances = Vec::new();
        let mut touching = vec![Vec::new(); sites.len()];
        for (inst, k) in potential.instances(geometry)? {
            let pos: Option<Vec<usize>> = inst.iter().map(|s| index.get(s).copied()).collect();
            if let Some(pos) = pos {
                for &p in &pos {
                    touching[p].push(instances.len());
                }
                instances.push((pos, k));
            }
        }
        Ok(Frame { sites, index, instances, touching })
    }

    fn n(&self) -> usize {
        self.sites.len()
    }

    fn value(&self, potential: &Potential, inst: usize, config: usize) -> f64 {
        let (pos, k) = &self.instances[inst];
        let n = self.n();
        let local = pos.iter().fold(0, |acc, &p| (acc << 1) | spin_bit(config, p, n));
        potential.terms[*k].table[local]
    }

    /// Σ_{A∋x} J_A for the site at `pos`.
    fn field(&self, potential: &Potential, pos: usize, config: usize) -> f64 {
        self.touching[pos].iter().map(|&i| self.value(potential, i, config)).sum()
    }

    /// ΔH_x(σ) = H(σ^x) − H(σ) with H = −Σ J_A.
    fn delta_h(&self, potential: &Potential, pos: usize, config: usize) -> f64 {
        let flipped = flip(config, pos, self.n());
        self.field(potential, pos, config) - self.field(potential, pos, flipped)
    }

    /// −Σ J_A over instances touching any of the first `free` positions.
    fn energy(&self, potential: &Potential, free: usize, config: usize) -> f64 {
        -self
            .instances
            .iter()
            .enumerate()
            .filter(|(_, (pos, _))| pos.iter().any(|&p| p < free))
            .map(|(i, _)| self.value(potential, i, config))
            .sum::<f64>()
    }
}

fn check_enumeration(n: usize) -> Result<usize> {
    let size = 1usize.checked_shl(n as u32).filter(|&s| s <= ENUMERATION_LIMIT);
    size.ok_or(Error::Resource { what: "configuration space", needed: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX), limit: ENUMERATION_LIMIT })
}

fn normalise_log_weights(logw: &[f64]) -> (Vec<f64>, f64) {
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    (w.iter().map(|x| x / z).collect(), m + z.ln())
}

/// Gibbs distribution μ^τ_Λ over Ω_Λ, with τ an index over the sites of
/// `outer_boundary(Λ, range)`; returns (distribution, ln Z).
pub fn gibbs(geometry: &LatticeGeometry, potential: &Potential, lam: &Region, tau: usize) -> Result<(Vec<f64>, f64)> {
    let boundary = geometry.outer_boundary(lam, potential.range)?;
    let size = check_enumeration(lam.len())?;
    if tau >> boundary.len() != 0 {
        return Err(Error::domain(format!("boundary index {tau} exceeds {} boundary spins", boundary.len())));
    }
    let mut sites = lam.sites().to_vec();
    sites.extend(boundary.iter().cloned());
    let frame = Frame::new(potential, geometry, sites)?;
    let nb = boundary.len();
    let logw: Vec<f64> = (0..size).map(|s| -frame.energy(potential, lam.len(), (s << nb) | tau)).collect();
    Ok(normalise_log_weights(&logw))
}

/// All μ^τ_Λ for τ over the outer boundary of range r.
#[derive(Clone, Debug)]
pub struct GibbsEnsemble {
    pub region: Region,
    pub boundary: Region,
    pub distributions: Vec<Vec<f64>>,
    pub log_partition: Vec<f64>,
}

pub fn gibbs_ensemble(geometry: &LatticeGeometry, potential: &Potential, lam: &Region) -> Result<GibbsEnsemble> {
    let boundary = geometry.outer_boundary(lam, potential.range)?;
    let count = check_enumeration(boundary.len())?;
    check_enumeration(lam.len() + boundary.len())?;
    let mut distributions = Vec::with_capacity(count);
    let mut log_partition = Vec::with_capacity(count);
    for tau in 0..count {
        let (d, z) = gibbs(geometry, potential, lam, tau)?;
        distributions.push(d);
        log_partition.push(z);
    }
    Ok(GibbsEnsemble { region: lam.clone(), boundary, distributions, log_partition })
}

/// Rate as a function of the energy change ΔH of the flip.
#[derive(Clone)]
pub enum RateFamily {
    /// (1 + e^{ΔH})⁻¹.
    HeatBath,
    /// min(1, e^{−ΔH}).
    Metropolis,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFamily::HeatBath => f.write_str("HeatBath"),
            RateFamily::Metropolis => f.write_str("Metropolis"),
            RateFamily::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl RateFamily {
    pub fn eval(&self, dh: f64) -> f64 {
        match self {
            RateFamily::HeatBath => 1.0 / (1.0 + dh.exp()),
            RateFamily::Metropolis => (-dh).exp().min(1.0),
            RateFamily::Custom(f) => f(dh),
        }
    }
}

/// Glauber rates of a potential on a lattice, with their bounds c_m ≤ c ≤ c_M.
#[derive(Clone, Debug)]
pub struct GlauberRates {
    pub family: RateFamily,
    pub potential: Potential,
    pub geometry: LatticeGeometry,
    pub c_min: f64,
    pub c_max: f64,
}

/// Configurations of b_x(r) at one site, for audits.
fn local_frames(rates: &GlauberRates) -> Result<Vec<(Frame, usize)>> {
    let mut out = Vec::new();
    for x in rates.geometry.sites() {
        let ball = rates.geometry.ball(&x, rates.potential.range)?;
        check_enumeration(ball.len())?;
        let pos = ball.position(&x).expect("centre lies in its ball");
        out.push((Frame::new(&rates.potential, &rates.geometry, ball.sites().to_vec())?, pos));
        if rates.potential.ti && !rates.geometry.periodic_axes().iter().any(|&p| p) && rates.geometry.num_sites() > 64 {
            // open translation-invariant lattices repeat the same local frames away from the edges
            continue;
        }
    }
    Ok(out)
}

impl GlauberRates {
    /// Builds the rates and audits positivity over every local configuration.
    pub fn new(family: RateFamily, potential: Potential, geometry: LatticeGeometry) -> Result<Self> {
        let mut rates = GlauberRates { family, potential, geometry, c_min: f64::INFINITY, c_max: 0.0 };
        for (frame, pos) in local_frames(&rates)? {
            for config in 0..1usize << frame.n() {
                let c = rates.family.eval(frame.delta_h(&rates.potential, pos, config));
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Validation(format!("rate {c} at {} is not positive and finite", frame.sites[pos])));
                }
                rates.c_min = rates.c_min.min(c);
                rates.c_max = rates.c_max.max(c);
            }
        }
        Ok(rates)
    }

    pub fn heat_bath(potential: Potential, geometry: LatticeGeometry) -> Result<Self> {
        Self::new(RateFamily::HeatBath, potential, geometry)
    }

    pub fn metropolis(potential: Potential, geometry: LatticeGeometry) -> Result<Self> {
        Self::new(RateFamily::Metropolis, potential, geometry)
    }

    fn rate(&self, frame: &Frame, pos: usize, config: usize) -> f64 {
        self.family.eval(frame.delta_h(&self.potential, pos, config))
    }

    /// max over x, σ of |c(x,σ) − e^{−ΔH_x(σ)} c(x,σ^x)| relative to the larger side:
    /// zero exactly when μ(σ)c(x,σ) = μ(σ^x)c(x,σ^x) for μ ∝ e^{−H}.
    pub fn detailed_balance_identity_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (frame, pos) in local_frames(self)? {
            for config in 0..1usize << frame.n() {
                let dh = frame.delta_h(&self.potential, pos, config);
                let lhs = self.rate(&frame, pos, config);
                let rhs = (-dh).exp() * self.rate(&frame, pos, flip(config, pos, frame.n()));
                worst = worst.max((lhs - rhs).abs() / lhs.max(rhs));
            }
        }
        Ok(worst)
    }
}

/// Which spins of Λ flip and what lies outside.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlauberBoundary {
    /// Every x ∈ Λ flips; spins on the outer boundary are frozen to configuration τ.
    Fixed(usize),
    /// Truncation: only x with b_x(r) ⊆ Λ flip; nothing outside Λ is read.
    Truncated,
}

#[derive(Clone, Debug)]
pub struct ClassicalGenerator {
    pub region: Region,
    pub boundary: GlauberBoundary,
    /// Sites of Λ that flip.
    pub flip_sites: Region,
    /// Measure-side generator Qᵀ: matrix[(σ^x, σ)] = c(x,σ), columns sum to zero.
    pub matrix: Mat<f64>,
}

struct Setup {
    frame: Frame,
    free: usize,
    tau: usize,
    nb: usize,
    flips: Vec<usize>,
}

fn setup(rates: &GlauberRates, lam: &Region, boundary: GlauberBoundary) -> Result<Setup> {
    let g = &rates.geometry;
    let r = rates.potential.range;
    let (outer, tau, flips) = match boundary {
        GlauberBoundary::Fixed(tau) => {
            let outer = g.outer_boundary(lam, r)?;
            if tau >> outer.len() != 0 {
                return Err(Error::domain(format!("boundary index {tau} exceeds {} boundary spins", outer.len())));
            }
            (outer, tau, (0..lam.len()).collect())
        }
        GlauberBoundary::Truncated => {
            let mut flips = Vec::new();
            for (i, x) in lam.iter().enumerate() {
                if g.ball(x, r)?.is_subset(lam) {
                    flips.push(i);
                }
            }
            (Region::empty(), 0, flips)
        }
    };
    check_enumeration(lam.len())?;
    let mut sites = lam.sites().to_vec();
    sites.extend(outer.iter().cloned());
    let frame = Frame::new(&rates.potential, g, sites)?;
    Ok(Setup { frame, free: lam.len(), tau, nb: outer.len(), flips })
}

pub fn classical_generator(rates: &GlauberRates, lam: &Region, boundary: GlauberBoundary) -> Result<ClassicalGenerator> {
    if lam.is_empty() {
        return Err(Error::domain("region is empty"));
    }
    let s = setup(rates, lam, boundary)?;
    let size = 1usize << s.free;
    let mut m = Mat::<f64>::zeros(size, size);
    for sigma in 0..size {
        let full = (sigma << s.nb) | s.tau;
        for &p in &s.flips {
            let c = rates.rate(&s.frame, p, full);
            let to = flip(sigma, p, s.free);
            m[(to, sigma)] += c;
            m[(sigma, sigma)] -= c;
        }
    }
    let flip_sites = Region::new(s.flips.iter().map(|&p| lam.sites()[p].clone()));
    Ok(ClassicalGenerator { region: lam.clone(), boundary, flip_sites, matrix: m })
}

impl ClassicalGenerator {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// e^{tQᵀ}: the transition matrix acting on measures.
    pub fn transition(&self, t: f64) -> Mat<f64> {
        let scaled = Mat::from_fn(self.size(), self.size(), |i, j| c64::new(t * self.matrix[(i, j)], 0.0));
        let e = expm(scaled.as_ref());
        Mat::from_fn(self.size(), self.size(), |i, j| e[(i, j)].re)
    }

    /// Evolves a measure.
    pub fn evolve(&self, t: f64, p: &[f64]) -> Vec<f64> {
        let e = self.transition(t);
        (0..self.size()).map(|i| (0..self.size()).map(|j| e[(i, j)] * p[j]).sum()).collect()
    }

    /// Evolves a function: (e^{tQ} f)(σ).
    pub fn evolve_function(&self, t: f64, f: &[f64]) -> Vec<f64> {
        let e = self.transition(t);
        (0..self.size()).map(|j| (0..self.size()).map(|i| e[(i, j)] * f[i]).sum()).collect()
    }

    /// ‖Qᵀμ‖_∞.
    pub fn stationarity_residual(&self, mu: &[f64]) -> f64 {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.matrix[(i, j)] * mu[j]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// Extreme stationary measures: one per closed communicating class.
    pub fn stationary_vertices(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.size();
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|j| (0..n).filter(|&i| i != j && self.matrix[(i, j)] > 0.0).collect())
            .collect();
        let reach: Vec<Vec<bool>> = (0..n)
            .map(|s| {
                let mut seen = vec![false; n];
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(u) = stack.pop() {
                    for &v in &adj[u] {
                        if !seen[v] {
                            seen[v] = true;
                            stack.push(v);
                        }
                    }
                }
                seen
            })
            .collect();
        let mut assigned = vec![false; n];
        let mut vertices = Vec::new();
        for s in 0..n {
            if assigned[s] {
                continue;
            }
            // s lies in a closed class iff everything it reaches reaches it back
            let class: Vec<usize> = (0..n).filter(|&v| reach[s][v]).collect();
            if !class.iter().all(|&v| reach[v][s]) {
                continue;
            }
            for &v in &class {
                assigned[v] = true;
            }
            let k = class.len();
            // Q_C π = 0 with the last equation replaced by Σπ = 1
            let a = Mat::<f64>::from_fn(k, k, |i, j| if i == k - 1 { 1.0 } else { self.matrix[(class[i], class[j])] });
            let rhs = Mat::<f64>::from_fn(k, 1, |i, _| if i == k - 1 { 1.0 } else { 0.0 });
            let pi = a.partial_piv_lu().solve(rhs);
            if (0..k).any(|i| !pi[(i, 0)].is_finite()) {
                return Err(Error::Conditioning("stationary equation on a closed class is singular".into()));
            }
            let mut full = vec![0.0; n];
            for (i, &v) in class.iter().enumerate() {
                full[v] = pi[(i, 0)].max(0.0);
            }
            vertices.push(full);
        }
        Ok(vertices)
    }
}

/// Marginal of a measure on Ω_sites onto the positions `keep` (in order).
pub fn marginal(p: &[f64], n: usize, keep: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << keep.len()];
    for (sigma, &w) in p.iter().enumerate() {
        let local = keep.iter().fold(0, |acc, &k| (acc << 1) | spin_bit(sigma, k, n));
        out[local] += w;
    }
    out
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn max_pairwise_l1(ps: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            best = best.max(l1(&ps[i], &ps[j]));
        }
    }
    best
}

/// Quantum embedding of Glauber dynamics on Λ.
#[derive(Clone, Debug)]
pub struct EmbeddedGlauber {
    pub classical: ClassicalGenerator,
    /// L_Λ from the jumps √c(x,η)|η^x⟩⟨η| ⊗ 1.
    pub glauber: SuperOp,
    /// Per-site dephasing with jumps √γ|0⟩⟨0|, √γ|1⟩⟨1|.
    pub dephasing: SuperOp,
    pub generator: SuperOp,
    pub gamma: f64,
}

fn glauber_jumps(rates: &GlauberRates, s: &Setup, lam: &Region) -> Result<Vec<CMat>> {
    let layout = Layout::uniform(s.free, 2);
    let mut jumps = Vec::new();
    for &p in &s.flips {
        let ball = rates.geometry.ball(&lam.sites()[p], rates.potential.range)?;
        let positions: Vec<usize> = ball.iter().filter_map(|y| s.frame.index.get(y).copied()).filter(|&q| q < s.free).collect();
        let k = positions.len();
        let centre = positions.iter().position(|&q| q == p).expect("centre in its ball");
        for eta in 0..1usize << k {
            // place η on the ball, zeros elsewhere in Λ: the rate reads only b_x(r)
            let mut sigma = 0usize;
            for (i, &q) in positions.iter().enumerate() {
                if spin_bit(eta, i, k) == 1 {
                    sigma |= 1 << (s.free - 1 - q);
                }
            }
            let c = rates.rate(&s.frame, p, (sigma << s.nb) | s.tau);
            let target = flip(eta, centre, k);
            let local = Mat::from_fn(1 << k, 1 << k, |i, j| {
                if i == target && j == eta {
                    c64::new(c.sqrt(), 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            });
            jumps.push(embed_operator(local.as_ref(), &positions, &layout)?);
        }
    }
    Ok(jumps)
}

pub(crate) fn dephasing_jumps_on(n: usize, gamma: f64) -> Result<Vec<CMat>> {
    let layout = Layout::uniform(n, 2);
    let mut jumps = Vec::new();
    for x in 0..n {
        for i in 0..2 {
            let local = Mat::from_fn(2, 2, |a, b| if a == i && b == i { c64::new(gamma.sqrt(), 0.0) } else { c64::new(0.0, 0.0) });
            jumps.push(embed_operator(local.as_ref(), &[x], &layout)?);
        }
    }
    Ok(jumps)
}

fn superop_from_jumps(d: usize, jumps: Vec<CMat>) -> Result<SuperOp> {
    if jumps.is_empty() {
        return Ok(SuperOp::zero(d));
    }
    Gkls::new(Mat::zeros(d, d), jumps)?.to_superop()
}

pub fn embed(rates: &GlauberRates, lam: &Region, boundary: GlauberBoundary, gamma: f64) -> Result<EmbeddedGlauber> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!("dephasing rate must be non-negative, got {gamma}")));
    }
    let classical = classical_generator(rates, lam, boundary)?;
    let d = 1usize << lam.len();
    crate::linalg::superop::check_dense_dim(d)?;
    let s = setup(rates, lam, boundary)?;
    let glauber = superop_from_jumps(d, glauber_jumps(rates, &s, lam)?)?;
    let dephasing = if gamma > 0.0 { superop_from_jumps(d, dephasing_jumps_on(lam.len(), gamma)?)? } else { SuperOp::zero(d) };
    let generator = glauber.add(&dephasing)?;
    Ok(EmbeddedGlauber { classical, glauber, dephasing, generator, gamma })
}

/// The embedding as a uniform family: at each x a term on b_x(r) carrying the jumps
/// √c(x,η)|η^x⟩⟨η| and the dephasing of x. Rates read only the clipped ball.
pub fn glauber_family(rates: &GlauberRates, gamma: f64) -> Result<UniformFamily> {
    let r = rates.potential.range;
    let geometry = rates.geometry.clone();
    let mut terms: HashMap<Site, Vec<LocalTerm>> = HashMap::new();
    for x in geometry.sites() {
        let ball = geometry.ball(&x, r)?;
        let s = setup(rates, &ball, GlauberBoundary::Truncated)?;
        let centre = ball.position(&x).expect("centre in its ball");
        let s = Setup { flips: vec![centre], ..s };
        let jumps = glauber_jumps(rates, &s, &ball)?;
        let d = 1usize << ball.len();
        let mut here = vec![LocalTerm::new(x.clone(), r, ball.sites().to_vec(), TermGenerator::Gkls(Gkls::new(Mat::zeros(d, d), jumps)?), 2)?];
        // dephasing is its own on-site term so truncations keep it at every site
        if gamma > 0.0 {
            let deph = dephasing_jumps_on(1, gamma)?;
            here.push(LocalTerm::on_site(x.clone(), Gkls::dissipative(deph)?)?);
        }
        terms.insert(x, here);
    }
    let terms = Arc::new(terms);
    let bulk = Arc::new(move |u: &Site| terms.get(u).cloned().unwrap_or_default());
    let j = rates.c_max * 2.0 + 2.0 * gamma;
    UniformFamily::new(geometry, 2, bulk, BoundaryRule::Open, Strength { j, profile: DecayProfile::FiniteRange { range: r } })
}

impl EmbeddedGlauber {
    pub fn dim(&self) -> usize {
        self.classical.size()
    }

    /// Basis of the stationary space, each element the image of a basis state under T_∞.
    pub fn fixed_point_set(&self) -> Result<Vec<CMat>> {
        let proj = asymptotic_projectors(&self.generator, CLASSIFY_TOL)?;
        let d = self.dim();
        let mut out: Vec<CMat> = Vec::new();
        for i in 0..d {
            let x = proj.stationary.apply(ketbra(d, i, i).as_ref());
            if !out.iter().any(|y| (y - &x).norm_max() < 1e-9) {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// Largest entry off the diagonal among fixed-point-set elements.
    pub fn fixed_point_offdiagonal(&self) -> Result<f64> {
        let d = self.dim();
        Ok(self
            .fixed_point_set()?
            .iter()
            .map(|x| {
                (0..d)
                    .flat_map(|i| (0..d).map(move |j| (i, j)))
                    .filter(|(i, j)| i != j)
                    .map(|(i, j)| x[(i, j)].norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max))
    }
}

/// δ_τ ⊗ μ^τ over configurations τ of the non-flipping sites, for a truncated generator.
pub fn gibbs_simplex(rates: &GlauberRates, lam: &Region) -> Result<Vec<Vec<f64>>> {
    let g = &rates.geometry;
    let r = rates.potential.range;
    let gen = classical_generator(rates, lam, GlauberBoundary::Truncated)?;
    let interior = &gen.flip_sites;
    let frozen = lam.difference(interior);
    let n = lam.len();
    let pos = |s: &Site| lam.position(s).expect("subset");
    let mut out = Vec::new();
    for tau in 0..1usize << frozen.len() {
        let mut p = vec![0.0; 1 << n];
        let mut base = 0usize;
        for (i, s) in frozen.iter().enumerate() {
            if spin_bit(tau, i, frozen.len()) == 1 {
                base |= 1 << (n - 1 - pos(s));
            }
        }
        if interior.is_empty() {
            p[base] = 1.0;
            out.push(p);
            continue;
        }
        let outer = g.outer_boundary(interior, r)?;
        let outer_tau = outer.iter().enumerate().fold(0usize, |acc, (_, s)| {
            let bit = if lam.contains(s) { spin_bit(base, pos(s), n) } else { 0 };
            (acc << 1) | bit
        });
        let (mu, _) = gibbs(g, &rates.potential, interior, outer_tau)?;
        for (k, w) in mu.iter().enumerate() {
            let mut sigma = base;
            for (i, s) in interior.iter().enumerate() {
                if spin_bit(k, i, interior.len()) == 1 {
                    sigma |= 1 << (n - 1 - pos(s));
                }
            }
            p[sigma] = *w;
        }
        out.push(p);
    }
    Ok(out)
}

/// Upper bound on the trace-norm Hausdorff distance between two simplices,
/// from the vertex-to-vertex distances.
pub fn vertex_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let one_sided = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| l1(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Detailed-balance defect ‖L∘Γ_μ − Γ_μ∘L†‖ (largest singular value) with Γ_μ the Schur
/// multiplier √μ(η₁)√μ(η₂).
pub fn detailed_balance_residual(l: &SuperOp, mu: &[f64]) -> Result<f64> {
    let d = l.dim();
    if mu.len() != d {
        return Err(Error::domain("distribution does not match the generator dimension"));
    }
    if mu.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::domain("detailed balance needs a full-rank distribution"));
    }
    let coeff = Mat::from_fn(d, d, |i, j| c64::new((mu[i] * mu[j]).sqrt(), 0.0));
    let gamma = SuperOp::schur_multiplier(coeff.as_ref())?;
    let lhs = l.compose(&gamma)?;
    let rhs = gamma.compose(&l.dual())?;
    let diff = lhs.sub(&rhs)?;
    Ok(singular_values(diff.matrix().as_ref())[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub t: f64,
    /// Estimate of η(T_t).
    pub total: f64,
    /// Exact η(T_t∘C), from the classical chain.
    pub classical: f64,
    /// Estimate of η(exp(tD)).
    pub dephasing: f64,
    /// |Λ| e^{−γt/2}.
    pub dephasing_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub rows: Vec<SplitRow>,
    /// Grid indices where total > classical + dephasing + slack or dephasing > its bound + slack.
    pub violations: Vec<usize>,
    pub slack: f64,
}

/// Exact ½ max_σ ‖e^{tQᵀ}δ_σ − T_∞δ_σ‖₁ for the embedded model's diagonal sector.
pub fn classical_contraction(model: &EmbeddedGlauber, t: f64) -> Result<f64> {
    let d = model.dim();
    let proj = asymptotic_projectors(&model.generator, CLASSIFY_TOL)?;
    let e = model.classical.transition(t);
    let mut best = 0.0f64;
    for s in 0..d {
        let inf = proj.stationary.apply(ketbra(d, s, s).as_ref());
        let dist: f64 = (0..d).map(|i| (e[(i, s)] - inf[(i, i)].re).abs()).sum();
        best = best.max(0.5 * dist);
    }
    Ok(best)
}

/// η(T_t) ≤ η(T_t∘C) + η(exp(tD)) and η(exp(tD)) ≤ |Λ|e^{−γt/2} on a time grid.
pub fn contraction_split_check(model: &EmbeddedGlauber, ts: &[f64], opts: &AscentOptions, slack: f64) -> Result<SplitReport> {
    let n = model.classical.region.len() as f64;
    let total = Semigroup::new(model.generator.clone());
    let deph = Semigroup::new(model.dephasing.clone());
    let mut rows = Vec::with_capacity(ts.len());
    let mut violations = Vec::new();
    for (k, &t) in ts.iter().enumerate() {
        let eta_total = contraction(&total, t, opts)?.value;
        let eta_c = classical_contraction(model, t)?;
        let eta_d = if model.gamma > 0.0 { contraction(&deph, t, opts)?.value } else { 1.0 };
        let bound = n * (-model.gamma * t / 2.0).exp();
        if eta_total > eta_c + eta_d + slack || (model.gamma > 0.0 && eta_d > bound + slack) {
            violations.push(k);
        }
        rows.push(SplitRow { t, total: eta_total, classical: eta_c, dephasing: eta_d, dephasing_bound: bound });
    }
    Ok(SplitReport { rows, violations, slack })
}

/// Ascent estimate of η(T_t∘C), for comparison with [`classical_contraction`].
pub fn dephased_contraction_estimate(model: &EmbeddedGlauber, t: f64, opts: &AscentOptions) -> Result<f64> {
    let d = model.dim();
    let c = SuperOp::schur_multiplier(Mat::from_fn(d, d, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }).as_ref())?;
    let proj = asymptotic_projectors(&model.generator, CLASSIFY_TOL)?;
    let tt = Semigroup::new(model.generator.clone()).exp(t)?;
    let dev = tt.sub(&proj.stationary)?.compose(&c)?;
    Ok(maximize_trace_distance(&dev, None, opts)?.value)
}

/// sup over boundary configurations τ, τ′ of ‖μ^τ_V − μ^{τ′}_V‖₁ restricted to Δ ⊆ V.
pub fn weak_mixing_sup(geometry: &LatticeGeometry, potential: &Potential, v: &Region, delta: &Region) -> Result<f64> {
    if !delta.is_subset(v) {
        return Err(Error::domain("Δ must lie inside V"));
    }
    let ens = gibbs_ensemble(geometry, potential, v)?;
    let keep: Vec<usize> = delta.iter().map(|s| v.position(s).expect("subset")).collect();
    let marginals: Vec<Vec<f64>> = ens.distributions.iter().map(|p| marginal(p, v.len(), &keep)).collect();
    Ok(max_pairwise_l1(&marginals))
}

/// LTQO defect of the embedded Glauber family, computed in the diagonal sector: the
/// stationary states of the truncation to A(ℓ) are the classical stationary measures.
pub fn glauber_ltqo_delta(rates: &GlauberRates, a: &Region, ell: usize) -> Result<f64> {
    let region = rates.geometry.grow(a, ell)?;
    let gen = classical_generator(rates, &region, GlauberBoundary::Truncated)?;
    let keep: Vec<usize> = a.iter().map(|s| region.position(s).expect("A ⊆ A(ℓ)")).collect();
    let marginals: Vec<Vec<f64>> = gen.stationary_vertices()?.iter().map(|p| marginal(p, region.len(), &keep)).collect();
    Ok(max_pairwise_l1(&marginals))
}

/// Sup-norm deviation ‖e^{tQ}f − e^{tQ′}f‖_∞ per t, where Q′ uses rates c + e.
pub fn perturbed_rates_experiment(
    rates: &GlauberRates,
    perturbation: &dyn Fn(&Site, f64) -> f64,
    lam: &Region,
    boundary: GlauberBoundary,
    f: &[f64],
    ts: &[f64],
) -> Result<Vec<f64>> {
    let base = classical_generator(rates, lam, boundary)?;
    if f.len() != base.size() {
        return Err(Error::domain("observable does not match the configuration space"));
    }
    let s = setup(rates, lam, boundary)?;
    let size = base.size();
    let mut m = Mat::<f64>::zeros(size, size);
    for sigma in 0..size {
        let full = (sigma << s.nb) | s.tau;
        for &p in &s.flips {
            let dh = s.frame.delta_h(&rates.potential, p, full);
            let c = rates.family.eval(dh) + perturbation(&lam.sites()[p], dh);
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::domain(format!("perturbed rate {c} at {} is not positive", lam.sites()[p])));
            }
            m[(flip(sigma, p, s.free), sigma)] += c;
            m[(sigma, sigma)] -= c;
        }
    }
    let perturbed = ClassicalGenerator { matrix: m, ..base.clone() };
    Ok(ts
        .iter()
        .map(|&t| {
            let a = base.evolve_function(t, f);
            let b = perturbed.evolve_function(t, f);
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::trace_norm;
    use proptest::prelude::*;

    fn chain_rates(n: usize, j: f64, h: f64) -> GlauberRates {
        GlauberRates::heat_bath(Potential::ising(1, j, h).unwrap(), LatticeGeometry::chain(n)).unwrap()
    }

    #[test]
    fn potential_json_round_trip() {
        let p = parse_potential(br#"{"range": 1, "terms": [{"sites": [[3], [4]], "table": [1, -1, -1, 1]}], "ti": true}"#).unwrap();
        assert_eq!(p.terms[0].sites, vec![vec![0], vec![1]]);
        let again = parse_potential(serde_json::to_string(&p).unwrap().as_bytes()).unwrap();
        assert_eq!(p, again);
        assert!(parse_potential(br#"{"range": 1, "terms": [{"sites": [[0], [2]], "table": [1, -1, -1, 1]}]}"#).is_err());
        assert!(parse_potential(br#"{"range": 1, "terms": [{"sites": [[0]], "table": [1]}]}"#).is_err());
        assert!(parse_potential(br#"{"range": 0, "terms": []}"#).is_err());
        assert!(parse_potential(b"{").is_err());
    }

    #[test]
    fn zero_potential_gives_uniform_gibbs() {
        let g = LatticeGeometry::chain(5);
        let p = Potential::zero(1).unwrap();
        let lam = Region::interval(1, 3);
        for tau in 0..4 {
            let (mu, _) = gibbs(&g, &p, &lam, tau).unwrap();
            assert!(mu.iter().all(|&x| (x - 0.125).abs() < 1e-15));
        }
    }

    #[test]
    fn two_spin_ising_gibbs_by_hand() {
        let j = 0.7f64;
        let g = LatticeGeometry::chain(2);
        let (mu, logz) = gibbs(&g, &Potential::ising(1, j, 0.0).unwrap(), &g.all(), 0).unwrap();
        let z = 2.0 * j.exp() + 2.0 * (-j).exp();
        let want = [j.exp() / z, (-j).exp() / z, (-j).exp() / z, j.exp() / z];
        for (a, b) in mu.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((logz - z.ln()).abs() < 1e-14);
    }

    #[test]
    fn built_in_rates_satisfy_detailed_balance() {
        for fam in [RateFamily::HeatBath, RateFamily::Metropolis] {
            let r = GlauberRates::new(fam, Potential::ising(1, 0.8, 0.3).unwrap(), LatticeGeometry::chain(5)).unwrap();
            assert!(r.detailed_balance_identity_residual().unwrap() < 1e-12);
            assert!(r.c_min > 0.0 && r.c_min <= r.c_max);
        }
        let tweaked = GlauberRates::new(
            RateFamily::Custom(Arc::new(|d: f64| 1.0 / (1.0 + d.exp()) + 0.1)),
            Potential::ising(1, 0.8, 0.3).unwrap(),
            LatticeGeometry::chain(3),
        )
        .unwrap();
        assert!(tweaked.detailed_balance_identity_residual().unwrap() > 1e-3);
        let negative = GlauberRates::new(RateFamily::Custom(Arc::new(|d: f64| -d)), Potential::ising(1, 1.0, 0.0).unwrap(), LatticeGeometry::chain(3));
        assert!(negative.is_err());
    }

    #[test]
    fn single_free_spin_generator() {
        let r = GlauberRates::heat_bath(Potential::zero(1).unwrap(), LatticeGeometry::chain(1)).unwrap();
        let q = classical_generator(&r, &r.geometry.all(), GlauberBoundary::Fixed(0)).unwrap();
        assert_eq!(q.size(), 2);
        assert!(q.stationarity_residual(&[0.5, 0.5]) < 1e-15);
        assert!((q.matrix[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gibbs_is_stationary_for_every_boundary() {
        let r = chain_rates(6, 0.9, 0.2);
        let lam = Region::interval(1, 3);
        let ens = gibbs_ensemble(&r.geometry, &r.potential, &lam).unwrap();
        assert_eq!(ens.distributions.len(), 4);
        for (tau, mu) in ens.distributions.iter().enumerate() {
            let q = classical_generator(&r, &lam, GlauberBoundary::Fixed(tau)).unwrap();
            assert!(q.stationarity_residual(mu) < 1e-12);
            for j in 0..q.size() {
                let col: f64 = (0..q.size()).map(|i| q.matrix[(i, j)]).sum();
                assert!(col.abs() < 1e-14);
                for i in 0..q.size() {
                    assert!(i == j || q.matrix[(i, j)] >= 0.0);
                    assert!(i == j || q.matrix[(i, j)] == 0.0 || (q.matrix[(i, j)] >= r.c_min - 1e-15 && q.matrix[(i, j)] <= r.c_max + 1e-15));
                }
            }
        }
    }

    #[test]
    fn embedding_matches_the_basis_action() {
        let r = chain_rates(3, 0.6, 0.1);
        let lam = r.geometry.all();
        let m = embed(&r, &lam, GlauberBoundary::Fixed(0), 0.0).unwrap();
        let s = setup(&r, &lam, GlauberBoundary::Fixed(0)).unwrap();
        let d = 8;
        for alpha in 0..d {
            for beta in 0..d {
                let got = m.glauber.apply(ketbra(d, alpha, beta).as_ref());
                let mut want = Mat::<c64>::zeros(d, d);
                for &p in &s.flips {
                    let ball = r.geometry.ball(&lam.sites()[p], 1).unwrap();
                    let agree = ball.iter().all(|y| {
                        let q = lam.position(y).unwrap();
                        spin_bit(alpha, q, 3) == spin_bit(beta, q, 3)
                    });
                    let ca = r.rate(&s.frame, p, alpha);
                    let cb = r.rate(&s.frame, p, beta);
                    if agree {
                        want[(flip(alpha, p, 3), flip(beta, p, 3))] += c64::new(ca, 0.0);
                        want[(alpha, beta)] -= c64::new(ca, 0.0);
                    } else {
                        want[(alpha, beta)] -= c64::new(0.5 * (ca + cb), 0.0);
                    }
                }
                assert!((&got - &want).norm_max() < 1e-13, "{alpha} {beta}");
            }
        }
        // dephasing commutes with the Glauber part
        let m = embed(&r, &lam, GlauberBoundary::Fixed(0), 0.7).unwrap();
        let c1 = m.glauber.compose(&m.dephasing).unwrap();
        let c2 = m.dephasing.compose(&m.glauber).unwrap();
        assert!((c1.matrix() - c2.matrix()).norm_max() < 1e-12);
    }

    #[test]
    fn diagonal_sector_is_the_classical_chain() {
        let r = chain_rates(3, 0.5, -0.2);
        let m = embed(&r, &r.geometry.all(), GlauberBoundary::Fixed(0), 1.0).unwrap();
        let semi = Semigroup::new(m.generator.clone());
        let p = [0.3, 0.0, 0.1, 0.05, 0.2, 0.15, 0.1, 0.1];
        let rho = Mat::from_fn(8, 8, |i, j| if i == j { c64::new(p[i], 0.0) } else { c64::new(0.0, 0.0) });
        for t in [0.0, 0.3, 1.0, 4.0] {
            let q = semi.evolve(t, rho.as_ref()).unwrap();
            let c = m.classical.evolve(t, &p);
            for i in 0..8 {
                assert!((q[(i, i)].re - c[i]).abs() < 1e-10);
                for j in 0..8 {
                    assert!(i == j || q[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_potential_fixed_point_is_uniform() {
        let r = GlauberRates::heat_bath(Potential::zero(1).unwrap(), LatticeGeometry::chain(3)).unwrap();
        let m = embed(&r, &r.geometry.all(), GlauberBoundary::Fixed(0), 0.5).unwrap();
        let fp = crate::dynamics::fixed_point(&m.generator).unwrap();
        assert!((&fp - &Mat::from_fn(8, 8, |i, j| if i == j { c64::new(0.125, 0.0) } else { c64::new(0.0, 0.0) })).norm_max() < 1e-12);
    }

    #[test]
    fn detailed_balance_of_the_embedding() {
        let r = chain_rates(3, 0.8, 0.25);
        let lam = r.geometry.all();
        let m = embed(&r, &lam, GlauberBoundary::Fixed(0), 0.6).unwrap();
        let (mu, _) = gibbs(&r.geometry, &r.potential, &lam, 0).unwrap();
        assert!(detailed_balance_residual(&m.glauber, &mu).unwrap() < 1e-10);
        assert!(detailed_balance_residual(&m.generator, &mu).unwrap() < 1e-10);
        let any = [0.1, 0.2, 0.05, 0.15, 0.1, 0.1, 0.2, 0.1];
        assert!(detailed_balance_residual(&m.dephasing, &any).unwrap() < 1e-12);
        let broken = GlauberRates::new(RateFamily::Custom(Arc::new(|d: f64| 1.0 / (1.0 + d.exp()) + 0.1)), r.potential.clone(), r.geometry.clone()).unwrap();
        let mb = embed(&broken, &lam, GlauberBoundary::Fixed(0), 0.0).unwrap();
        assert!(detailed_balance_residual(&mb.glauber, &mu).unwrap() > 1e-4);
        assert!(detailed_balance_residual(&m.glauber, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn truncated_fixed_points_are_the_gibbs_simplex() {
        let r = chain_rates(7, 0.7, 0.1);
        let lam = Region::interval(2, 5);
        let m = embed(&r, &lam, GlauberBoundary::Truncated, 1.0).unwrap();
        assert_eq!(m.classical.flip_sites.len(), 2);
        let simplex = gibbs_simplex(&r, &lam).unwrap();
        assert_eq!(simplex.len(), 4);
        for p in &simplex {
            assert!(m.classical.stationarity_residual(p) < 1e-12);
        }
        let fps = m.fixed_point_set().unwrap();
        assert!(m.fixed_point_offdiagonal().unwrap() < 1e-10);
        let diag: Vec<Vec<f64>> = fps.iter().map(|x| (0..16).map(|i| x[(i, i)].re).collect()).collect();
        assert!(vertex_hausdorff(&diag, &simplex) < 1e-8);
        let vertices = m.classical.stationary_vertices().unwrap();
        assert!(vertex_hausdorff(&vertices, &simplex) < 1e-10);
    }

    #[test]
    fn frustration_freeness() {
        let r = chain_rates(6, 0.7, 0.0);
        let big = Region::interval(0, 4);
        let small = Region::interval(1, 3);
        let vb = classical_generator(&r, &big, GlauberBoundary::Truncated).unwrap().stationary_vertices().unwrap();
        let small_gen = classical_generator(&r, &small, GlauberBoundary::Truncated).unwrap();
        let keep: Vec<usize> = small.iter().map(|s| big.position(s).unwrap()).collect();
        // the Δ-restriction of every Λ-stationary state is Δ-stationary (the other spins are
        // outside Δ's flip neighbourhood, so marginalisation commutes with Q_Δ)
        for p in &vb {
            let m = marginal(p, big.len(), &keep);
            assert!(small_gen.stationarity_residual(&m) < 1e-12);
        }
    }

    #[test]
    fn high_temperature_fixed_boundary_is_unique() {
        let r = chain_rates(5, 0.2, 0.0);
        let lam = Region::interval(1, 3);
        let m = embed(&r, &lam, GlauberBoundary::Fixed(2), 1.0).unwrap();
        assert_eq!(m.fixed_point_set().unwrap().len(), 1);
    }

    #[test]
    fn contraction_split_holds() {
        let r = GlauberRates::heat_bath(Potential::zero(1).unwrap(), LatticeGeometry::chain(2)).unwrap();
        let m = embed(&r, &r.geometry.all(), GlauberBoundary::Fixed(0), 1.0).unwrap();
        let ts: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let opts = AscentOptions::default().with_restarts(8);
        let rep = contraction_split_check(&m, &ts, &opts, 1e-3).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep);
        assert!(rep.rows[0].total <= 1.0 + 1e-12);
        for t in [0.5, 2.0] {
            let exact = classical_contraction(&m, t).unwrap();
            let est = dephased_contraction_estimate(&m, t, &opts).unwrap();
            assert!((exact - est).abs() < 1e-6, "{exact} vs {est}");
        }
    }

    #[test]
    fn offdiagonal_decay_rate() {
        let r = chain_rates(3, 0.4, 0.0);
        let m = embed(&r, &r.geometry.all(), GlauberBoundary::Fixed(0), 0.0).unwrap();
        let semi = Semigroup::new(m.generator.clone());
        let t = 1.5;
        for (a, b) in [(0usize, 1usize), (0, 7), (2, 5)] {
            let hamming = (a ^ b).count_ones() as f64;
            let out = semi.evolve(t, ketbra(8, a, b).as_ref()).unwrap();
            assert!(trace_norm(out.as_ref()) <= (-0.5 * r.c_min * hamming * t).exp() + 1e-10);
        }
        // dephasing commutes with the evolution
        let deph = SuperOp::schur_multiplier(Mat::from_fn(8, 8, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }).as_ref()).unwrap();
        let tt = semi.exp(t).unwrap();
        assert!((tt.compose(&deph).unwrap().matrix() - deph.compose(&tt).unwrap().matrix()).norm_max() < 1e-12);
    }

    #[test]
    fn weak_mixing_decays_and_dominates_ltqo() {
        let g = LatticeGeometry::chain(12);
        let p = Potential::ising(1, 0.3, 0.0).unwrap();
        assert_eq!(weak_mixing_sup(&g, &Potential::zero(1).unwrap(), &Region::interval(3, 6), &Region::new([Site::at(4)])).unwrap(), 0.0);
        let mut series = Vec::new();
        for ell in 1..=3i64 {
            let v = Region::interval(5 - ell, 5 + ell);
            series.push((ell as f64, weak_mixing_sup(&g, &p, &v, &Region::new([Site::at(5)])).unwrap()));
        }
        assert!(series.windows(2).all(|w| w[1].1 < w[0].1));
        let fit = crate::correlations::decay_fit(&[series.clone(), vec![(4.0, weak_mixing_sup(&g, &p, &Region::interval(1, 9), &Region::new([Site::at(5)])).unwrap())]].concat()).unwrap();
        assert_eq!(fit.class, crate::correlations::DecayClass::Exponential);

        let r = GlauberRates::heat_bath(p.clone(), g.clone()).unwrap();
        let a = Region::new([Site::at(5)]);
        for ell in 1..=3usize {
            let lt = glauber_ltqo_delta(&r, &a, ell).unwrap();
            // the interior of A(ℓ) is V = b_5(ℓ−1), with the frozen layer as its boundary
            let v = Region::interval(5 - ell as i64 + 1, 5 + ell as i64 - 1);
            let wm = weak_mixing_sup(&g, &p, &v, &a).unwrap();
            assert!(lt <= wm + 1e-12, "{ell}: {lt} > {wm}");
        }
    }

    #[test]
    fn ltqo_classical_route_matches_quantum_route() {
        let g = LatticeGeometry::chain(5);
        let r = GlauberRates::heat_bath(Potential::ising(1, 0.5, 0.0).unwrap(), g).unwrap();
        let fam = glauber_family(&r, 1.0).unwrap();
        let a = Region::new([Site::at(2)]);
        for ell in 0..=2 {
            let classical = glauber_ltqo_delta(&r, &a, ell).unwrap();
            let quantum = crate::correlations::ltqo_delta(&fam, &a, ell, 0, 0).unwrap();
            assert!(!quantum.lower_bound);
            assert!((classical - quantum.value).abs() < 1e-8, "{ell}: {classical} vs {}", quantum.value);
        }
    }

    #[test]
    fn perturbed_rates_deviation() {
        let r = chain_rates(3, 0.3, 0.0);
        let lam = r.geometry.all();
        let f: Vec<f64> = (0..8).map(|s| if s & 4 == 0 { 1.0 } else { -1.0 }).collect();
        let ts = [0.5, 1.0, 2.0, 5.0, 10.0];
        let zero = perturbed_rates_experiment(&r, &|_, _| 0.0, &lam, GlauberBoundary::Fixed(0), &f, &ts).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        let e1 = perturbed_rates_experiment(&r, &|_, d| 1e-4 * (1.0 + d), &lam, GlauberBoundary::Fixed(0), &f, &ts).unwrap();
        let e2 = perturbed_rates_experiment(&r, &|_, d| 2e-4 * (1.0 + d), &lam, GlauberBoundary::Fixed(0), &f, &ts).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((b / a - 2.0).abs() < 0.05 * 2.0);
        }
        assert!(perturbed_rates_experiment(&r, &|_, _| -5.0, &lam, GlauberBoundary::Fixed(0), &f, &ts).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn embedding_consistency(j in -1.0f64..1.0, h in -1.0f64..1.0, t in 0.0f64..3.0, metropolis in any::<bool>()) {
            let fam = if metropolis { RateFamily::Metropolis } else { RateFamily::HeatBath };
            let r = GlauberRates::new(fam, Potential::ising(1, j, h).unwrap(), LatticeGeometry::chain(3)).unwrap();
            prop_assert!(r.detailed_balance_identity_residual().unwrap() < 1e-12);
            let m = embed(&r, &r.geometry.all(), GlauberBoundary::Fixed(0), 0.3).unwrap();
            let semi = Semigroup::new(m.generator.clone());
            let p: Vec<f64> = (0..8).map(|i| (i + 1) as f64 / 36.0).collect();
            let rho = Mat::from_fn(8, 8, |a, b| if a == b { c64::new(p[a], 0.0) } else { c64::new(0.0, 0.0) });
            let q = semi.evolve(t, rho.as_ref()).unwrap();
            let c = m.classical.evolve(t, &p);
            for i in 0..8 {
                prop_assert!((q[(i, i)].re - c[i]).abs() < 1e-10);
            }
        }
    }
}
