//! Exact constructors for the worked examples: independent amplitude damping and its
//! rotated perturbation, the four-level counterexample family, and the pair chain
//! whose classical generator is upper triangular. Plus the local-observable
//! deviation experiment shared by all of them.

use std::collections::VecDeque;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::dynamics::{asymptotic_projectors, propagate_grid, Picture, CLASSIFY_TOL};
use crate::error::{Error, Result};
use crate::glauber::dephasing_jumps_on;
use crate::lattice::Region;
use crate::linalg::dense::{dagger, kron_all, ketbra, op_norm, trace_norm, CMat};
use crate::linalg::superop::{check_dense_dim, DENSE_DIM_LIMIT};
use crate::linalg::tensor::partial_trace_positions;
use crate::linalg::{embed_operator, Generator, Gkls, Layout, Liouvillian, SuperOp};

/// Largest classical configuration space for the pair chain (N ≤ 9).
pub const CLASSICAL_STATE_LIMIT: usize = 1 << 18;
/// Largest configuration space with a dense classical matrix.
pub const DENSE_CLASSICAL_LIMIT: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleId {
    AmplitudeDamping,
    FourLevel,
    AppendixChain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourLevelVariant {
    Base,
    /// Adds (2/N)-strength decay |2⟩ → |0⟩ on every site.
    PlusE,
    /// Adds the mirrored decay |0⟩ → |2⟩.
    PlusEDagger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AppendixVariant {
    Embedded,
    /// Embedded chain without the N-dependent jumps of strength √(2/(3N)).
    EmbeddedWithoutLk3,
}

/// A finite chain of `sites` factors of dimension `local_dim` with a GKLS generator.
#[derive(Clone, Debug)]
pub struct ExampleModel {
    pub id: ExampleId,
    pub n: usize,
    pub sites: usize,
    pub local_dim: usize,
    pub gkls: Gkls,
}

impl ExampleModel {
    pub fn dim(&self) -> usize {
        self.gkls.dim()
    }

    pub fn layout(&self) -> Layout {
        Layout::uniform(self.sites, self.local_dim)
    }

    pub fn region(&self) -> Region {
        Region::interval(0, self.sites as i64 - 1)
    }

    pub fn liouvillian(&self) -> Liouvillian {
        self.gkls.liouvillian()
    }

    /// Dense superoperator; only for Hilbert dimension within the dense ceiling.
    pub fn superop(&self) -> Result<SuperOp> {
        self.gkls.to_superop()
    }
}

fn check_hilbert(sites: usize, local_dim: usize) -> Result<usize> {
    let d = (local_dim as u32)
        .checked_pow(sites as u32)
        .map(|d| d as usize)
        .filter(|&d| d <= DENSE_DIM_LIMIT);
    d.ok_or(Error::Resource { what: "Hilbert dimension", needed: local_dim.saturating_pow(sites as u32), limit: DENSE_DIM_LIMIT })
}

fn sitewise(sites: usize, local_dim: usize, local_jumps: &[CMat]) -> Result<Vec<CMat>> {
    let layout = Layout::uniform(sites, local_dim);
    let mut out = Vec::with_capacity(sites * local_jumps.len());
    for k in 0..sites {
        for l in local_jumps {
            out.push(embed_operator(l.as_ref(), &[k], &layout)?);
        }
    }
    Ok(out)
}

fn vector(amps: &[f64]) -> Mat<c64> {
    Mat::from_fn(amps.len(), 1, |i, _| c64::new(amps[i], 0.0))
}

fn outer_real(a: &[f64], b: &[f64]) -> CMat {
    let (a, b) = (vector(a), vector(b));
    &a * dagger(b.as_ref())
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::domain(format!("ε must lie in [0, 1], got {eps}")))
    }
}

/// |α₀⟩ = √(1−ε²)|0⟩ + ε|1⟩.
pub fn alpha0(eps: f64) -> [f64; 2] {
    [(1.0 - eps * eps).sqrt(), eps]
}

/// Single-qubit decay into |α₀⟩: jump |α₀⟩⟨α₁| with α₁ ⊥ α₀. At ε = 0 this is |0⟩⟨1|.
pub fn amplitude_damping_site(eps: f64) -> Result<Gkls> {
    check_epsilon(eps)?;
    let a0 = alpha0(eps);
    let a1 = [-eps, (1.0 - eps * eps).sqrt()];
    Gkls::dissipative(vec![outer_real(&a0, &a1)])
}

/// N independent amplitude-damping qubits and the same chain rotated to prepare |α₀⟩^{⊗N}.
pub fn amplitude_damping(n: usize, eps: f64) -> Result<(ExampleModel, ExampleModel)> {
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    check_hilbert(n, 2)?;
    let build = |e: f64| -> Result<ExampleModel> {
        let site = amplitude_damping_site(e)?;
        Ok(ExampleModel {
            id: ExampleId::AmplitudeDamping,
            n,
            sites: n,
            local_dim: 2,
            gkls: Gkls::dissipative(sitewise(n, 2, &site.jumps)?)?,
        })
    };
    Ok((build(0.0)?, build(eps)?))
}

/// |0…0⟩⟨0…0| on the first r qubits of an N-qubit chain.
pub fn ground_projector(n: usize, r: usize) -> Result<CMat> {
    if r > n {
        return Err(Error::domain("observable support exceeds the chain"));
    }
    let layout = Layout::uniform(n, 2);
    let positions: Vec<usize> = (0..r).collect();
    embed_operator(ketbra(1 << r, 0, 0).as_ref(), &positions, &layout)
}

/// The four-level site generator with jumps |0⟩⟨1|, |0⟩⟨3|, |2⟩⟨1|, |2⟩⟨3|.
pub fn four_level_site() -> Gkls {
    let jumps = vec![ketbra(4, 0, 1), ketbra(4, 0, 3), ketbra(4, 2, 1), ketbra(4, 2, 3)];
    Gkls::dissipative(jumps).expect("four equal-size jumps")
}

fn e_jump(n: usize, dagger_variant: bool) -> CMat {
    let s = c64::new((2.0 / n as f64).sqrt(), 0.0);
    let k = if dagger_variant { ketbra(4, 2, 0) } else { ketbra(4, 0, 2) };
    crate::linalg::dense::scale(k.as_ref(), s)
}

pub fn four_level(n: usize, variant: FourLevelVariant) -> Result<ExampleModel> {
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    check_hilbert(n, 4)?;
    let mut local = four_level_site().jumps;
    match variant {
        FourLevelVariant::Base => {}
        FourLevelVariant::PlusE => local.push(e_jump(n, false)),
        FourLevelVariant::PlusEDagger => local.push(e_jump(n, true)),
    }
    Ok(ExampleModel { id: ExampleId::FourLevel, n, sites: n, local_dim: 4, gkls: Gkls::dissipative(sitewise(n, 4, &local)?)? })
}

/// |20…0⟩⟨20…0| − |02…0⟩⟨02…0| on N four-level sites (N ≥ 2).
pub fn four_level_sigma(n: usize) -> Result<CMat> {
    if n < 2 {
        return Err(Error::domain("needs at least two sites"));
    }
    check_hilbert(n, 4)?;
    let state = |first: usize, second: usize| {
        let mut parts = vec![ketbra(4, 0, 0); n];
        parts[0] = ketbra(4, first, first);
        parts[1] = ketbra(4, second, second);
        kron_all(&parts)
    };
    Ok(&state(2, 0) - &state(0, 2))
}

/// Pair states in the order used for the triangular form: 10, 00, 11, 01.
const PAIR_ORDER: [(usize, usize); 4] = [(1, 0), (0, 0), (1, 1), (0, 1)];

fn pair_rank(a: usize, b: usize) -> usize {
    PAIR_ORDER.iter().position(|&p| p == (a, b)).expect("bits")
}

/// Row-stochastic-generator blocks on one pair: diagonal entries make rows sum to zero.
fn pair_blocks(n: usize, with_lk3: bool) -> [[[f64; 4]; 4]; 3] {
    let c = if with_lk3 { 2.0 / (3.0 * n as f64) } else { 0.0 };
    let qc = [[-c, 0.0, 0.0, c], [0.0, -1.0, 0.0, 1.0], [0.0, 0.0, -1.0, 1.0], [0.0; 4]];
    let qr = [[-1.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 1.0], [0.0; 4], [0.0; 4]];
    let ql = [[-1.0, 1.0, 0.0, 0.0], [0.0; 4], [0.0, 0.0, -1.0, 1.0], [0.0; 4]];
    [qc, qr, ql]
}

/// Classical chain of 2N spins; pair i occupies positions (2i, 2i+1), periodically
/// flanked by positions 2i−1 and 2i+2. Stored on the function side as the row-convention
/// generator Q with Q[from][to] ≥ 0 off the diagonal.
#[derive(Clone, Debug)]
pub struct ClassicalChain {
    pub n: usize,
    pub spins: usize,
    /// Off-diagonal transitions (to, rate) out of each configuration.
    pub transitions: Vec<Vec<(usize, f64)>>,
}

fn bit(config: usize, pos: usize, n: usize) -> usize {
    (config >> (n - 1 - pos)) & 1
}

fn set_bit(config: usize, pos: usize, n: usize, value: usize) -> usize {
    let mask = 1 << (n - 1 - pos);
    if value == 1 {
        config | mask
    } else {
        config & !mask
    }
}

/// The classical pair chain; `with_lk3 = false` drops the 10 → 01 transition.
pub fn appendix_classical(n: usize, with_lk3: bool) -> Result<ClassicalChain> {
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    let spins = 2 * n;
    let size = 1usize
        .checked_shl(spins as u32)
        .filter(|&s| s <= CLASSICAL_STATE_LIMIT)
        .ok_or(Error::Resource { what: "classical configurations", needed: usize::MAX, limit: CLASSICAL_STATE_LIMIT })?;
    let [qc, qr, ql] = pair_blocks(n, with_lk3);
    let mut transitions = vec![Vec::new(); size];
    for (config, out) in transitions.iter_mut().enumerate() {
        for i in 0..n {
            let (pa, pb) = (2 * i, 2 * i + 1);
            let left = bit(config, (pa + spins - 1) % spins, spins);
            let right = bit(config, (pb + 1) % spins, spins);
            let from = pair_rank(bit(config, pa, spins), bit(config, pb, spins));
            for (to, &(a, b)) in PAIR_ORDER.iter().enumerate() {
                if to == from {
                    continue;
                }
                let mut rate = qc[from][to];
                if right == 0 {
                    rate += qr[from][to];
                }
                if left == 1 {
                    rate += ql[from][to];
                }
                if rate > 0.0 {
                    let target = set_bit(set_bit(config, pa, spins, a), pb, spins, b);
                    out.push((target, rate));
                }
            }
        }
    }
    Ok(ClassicalChain { n, spins, transitions })
}

/// Configuration with every pair in the given state, e.g. (0, 1) for 0101…01.
pub fn alternating_config(n: usize, pair: (usize, usize)) -> usize {
    (0..n).fold(0, |acc, _| (acc << 2) | (pair.0 << 1) | pair.1)
}

impl ClassicalChain {
    pub fn size(&self) -> usize {
        self.transitions.len()
    }

    pub fn exit_rate(&self, config: usize) -> f64 {
        self.transitions[config].iter().map(|&(_, r)| r).sum()
    }

    /// Dense Q (rows sum to zero).
    pub fn matrix(&self) -> Result<Mat<f64>> {
        if self.size() > DENSE_CLASSICAL_LIMIT {
            return Err(Error::Resource { what: "dense classical generator", needed: self.size(), limit: DENSE_CLASSICAL_LIMIT });
        }
        let mut q = Mat::<f64>::zeros(self.size(), self.size());
        for (from, out) in self.transitions.iter().enumerate() {
            for &(to, r) in out {
                q[(from, to)] += r;
                q[(from, from)] -= r;
            }
        }
        Ok(q)
    }

    /// Index of a configuration in the product of pair orders (10, 00, 11, 01), first pair
    /// most significant. Every transition increases it, so Q is upper triangular there.
    pub fn pair_order_index(&self, config: usize) -> usize {
        (0..self.n).fold(0, |acc, i| {
            (acc << 2) | pair_rank(bit(config, 2 * i, self.spins), bit(config, 2 * i + 1, self.spins))
        })
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.transitions
            .iter()
            .enumerate()
            .all(|(from, out)| out.iter().all(|&(to, _)| self.pair_order_index(to) > self.pair_order_index(from)))
    }

    /// Eigenvalues read off the diagonal; fails unless the triangular form holds.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_upper_triangular() {
            return Err(Error::Conditioning("generator is not triangular in pair order".into()));
        }
        Ok((0..self.size()).map(|c| -self.exit_rate(c)).collect())
    }

    /// Smallest |λ| among eigenvalues with |λ| > tol.
    pub fn smallest_nonzero_rate(&self, tol: f64) -> Result<f64> {
        self.eigenvalues()?
            .into_iter()
            .map(f64::abs)
            .filter(|&x| x > tol)
            .min_by(f64::total_cmp)
            .ok_or(Error::DegenerateSpectrum)
    }

    /// Configurations with no outgoing transition: the stationary point masses.
    pub fn absorbing(&self) -> Vec<usize> {
        (0..self.size()).filter(|&c| self.transitions[c].is_empty()).collect()
    }

    /// ‖πQ‖_∞ for a distribution π.
    pub fn stationarity_residual(&self, pi: &[f64]) -> f64 {
        let mut flow = vec![0.0; self.size()];
        for (from, out) in self.transitions.iter().enumerate() {
            for &(to, r) in out {
                flow[to] += pi[from] * r;
                flow[from] -= pi[from] * r;
            }
        }
        flow.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    fn distances_from(&self, s: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.size()];
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("visited");
            for &(v, _) in &self.transitions[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Longest shortest directed path between a configuration and one reachable from it.
    pub fn diameter(&self) -> Result<usize> {
        if self.size() > DENSE_CLASSICAL_LIMIT {
            return Err(Error::Resource { what: "diameter search", needed: self.size(), limit: DENSE_CLASSICAL_LIMIT });
        }
        Ok((0..self.size())
            .map(|s| self.distances_from(s).into_iter().flatten().max().unwrap_or(0))
            .max()
            .unwrap_or(0))
    }
}

fn sigma_x() -> CMat {
    &ketbra(2, 0, 1) + &ketbra(2, 1, 0)
}

fn projector(bitval: usize) -> CMat {
    ketbra(2, bitval, bitval)
}

fn kron2(a: &CMat, b: &CMat) -> CMat {
    kron_all(&[a.clone(), b.clone()])
}

/// Embedded pair chain with per-site dephasing of rate `gamma`. Jumps act on the ordered
/// position pair (p, p+1 mod 2N); even p (odd in one-based labels) carries the in-pair moves.
pub fn appendix_chain(n: usize, variant: AppendixVariant, gamma: f64) -> Result<ExampleModel> {
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!("dephasing rate must be non-negative, got {gamma}")));
    }
    let spins = 2 * n;
    check_hilbert(spins, 2)?;
    let layout = Layout::uniform(spins, 2);
    let x = sigma_x();
    let id = crate::linalg::dense::eye(2);
    let (p0, p1) = (projector(0), projector(1));
    let mut jumps = Vec::new();
    for p in 0..spins {
        let q = (p + 1) % spins;
        let mut local = Vec::new();
        if p % 2 == 0 {
            local.push(&kron2(&id, &x) * &kron2(&p0, &p0));
            local.push(&kron2(&x, &id) * &kron2(&p1, &p1));
            if variant == AppendixVariant::Embedded {
                let s = c64::new((2.0 / (3.0 * n as f64)).sqrt(), 0.0);
                let l3 = &kron2(&x, &x) * &kron2(&p1, &p0);
                local.push(crate::linalg::dense::scale(l3.as_ref(), s));
            }
        } else {
            local.push(&kron2(&x, &id) * &kron2(&p0, &p0));
            local.push(&kron2(&id, &x) * &kron2(&p1, &p1));
        }
        for l in local {
            jumps.push(embed_operator(l.as_ref(), &[p, q], &layout)?);
        }
    }
    if gamma > 0.0 {
        jumps.extend(dephasing_jumps_on(spins, gamma)?);
    }
    Ok(ExampleModel { id: ExampleId::AppendixChain, n, sites: spins, local_dim: 2, gkls: Gkls::dissipative(jumps)? })
}

/// |α⟩⟨α| for a configuration of `spins` qubits.
pub fn config_state(spins: usize, config: usize) -> CMat {
    ketbra(1 << spins, config, config)
}

/// lim_{t→∞} e^{tL*}(O) through the stationary projector of the dense generator.
pub fn heisenberg_limit(model: &ExampleModel, o: MatRef<'_, c64>) -> Result<CMat> {
    check_dense_dim(model.dim())?;
    let proj = asymptotic_projectors(&model.superop()?, CLASSIFY_TOL)?;
    Ok(Generator::apply_dual(&proj.stationary, o))
}

/// |⟨ψ|φ⟩| for pure states given as density matrices.
pub fn pure_overlap(rho: MatRef<'_, c64>, sigma: MatRef<'_, c64>) -> f64 {
    let prod = rho * sigma;
    crate::linalg::dense::trace(prod.as_ref()).re.max(0.0).sqrt()
}

/// Trace distance of the reductions of two states to the positions `keep`.
pub fn reduced_trace_distance(layout: &Layout, rho: MatRef<'_, c64>, sigma: MatRef<'_, c64>, keep: &[usize]) -> Result<f64> {
    let a = partial_trace_positions(rho, layout, keep)?;
    let b = partial_trace_positions(sigma, layout, keep)?;
    Ok(trace_norm((&a - &b).as_ref()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub ts: Vec<f64>,
    /// ‖e^{tL₀*}(O) − e^{tL₁*}(O)‖ in operator norm.
    pub deviation: Vec<f64>,
    pub sup: f64,
}

/// Exact Heisenberg evolution of O_A under both generators on an ascending grid.
pub fn observable_deviation(
    base: &ExampleModel,
    perturbed: &ExampleModel,
    o_local: MatRef<'_, c64>,
    support: &[usize],
    ts: &[f64],
) -> Result<DeviationSeries> {
    if base.sites != perturbed.sites || base.local_dim != perturbed.local_dim {
        return Err(Error::domain("models act on different chains"));
    }
    if support.iter().any(|&p| p >= base.sites) {
        return Err(Error::domain("observable support lies outside the chain"));
    }
    let o = embed_operator(o_local, support, &base.layout())?;
    let a = propagate_grid(&base.liouvillian(), o.as_ref(), ts, Picture::Heisenberg)?;
    let b = propagate_grid(&perturbed.liouvillian(), o.as_ref(), ts, Picture::Heisenberg)?;
    let deviation: Vec<f64> = a.iter().zip(&b).map(|(x, y)| op_norm((x - y).as_ref())).collect();
    let sup = deviation.iter().copied().fold(0.0, f64::max);
    Ok(DeviationSeries { ts: ts.to_vec(), deviation, sup })
}

/// Least-squares fit y ≈ a·x through the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    /// max |y − a·x| / |y| over the samples.
    pub max_relative_residual: f64,
}

pub fn linear_fit(samples: &[(f64, f64)]) -> Result<LinearFit> {
    let sxx: f64 = samples.iter().map(|(x, _)| x * x).sum();
    if samples.len() < 2 || sxx == 0.0 {
        return Err(Error::domain("linear fit needs two samples with non-zero abscissa"));
    }
    let slope = samples.iter().map(|(x, y)| x * y).sum::<f64>() / sxx;
    let max_relative_residual = samples
        .iter()
        .map(|(x, y)| if *y == 0.0 { f64::INFINITY } else { ((y - slope * x) / y).abs() })
        .fold(0.0, f64::max);
    Ok(LinearFit { slope, max_relative_residual })
}
