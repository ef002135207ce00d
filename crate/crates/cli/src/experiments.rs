//! Experiments driven by an inline model document or spin potential.

use faer::{c64, MatRef};
use rand::Rng;

use lindstab_core::bounds::{bound_localization, bound_lr, verify_bound, BoundContext, LrClass};
use lindstab_core::correlations::{covariance_corr, decay_fit, fannes_bound, ltqo_delta, mutual_info, trace_corr, BipartiteState};
use lindstab_core::dynamics::{
    commutator_growth, contraction as eta, eigenvalues, fit_grm, fixed_point, grm_samples, localization_error, propagate_grid,
    spectral_gap, stationary_dimension, Picture, Semigroup,
};
use lindstab_core::glauber::{
    contraction_split_check, detailed_balance_residual, embed, gibbs, gibbs_simplex, parse_potential,
    vertex_hausdorff, GlauberBoundary, GlauberRates, Potential, RateFamily,
};
use lindstab_core::lattice::{LatticeGeometry, Region, Site};
use lindstab_core::linalg::dense::{op_norm, scale, CMat};
use lindstab_core::linalg::{embed_operator, AscentOptions, Generator, Gkls, Layout};
use lindstab_core::model::{apply_perturbation_liouvillian, parse_model, BoundaryRule, LocalTerm, ModelSpec, Strength, UniformFamily};
use lindstab_core::seeding::{random_hermitian, Seeder};
use lindstab_core::zoo::{amplitude_damping_site, four_level_site};

use crate::config::{ExperimentConfig, RateChoice};
use crate::report::Report;
use crate::{CliError, Result};

pub const DEFAULT_TIMES: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
/// Slack for contraction estimates, which are lower bounds of a supremum.
pub const ESTIMATE_SLACK: f64 = 1e-3;

fn field(name: &str, message: impl Into<String>) -> CliError {
    CliError::Field { field: name.to_owned(), message: message.into() }
}

fn times(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.t_grid.is_empty() {
        DEFAULT_TIMES.to_vec()
    } else {
        cfg.t_grid.clone()
    }
}

fn opts(cfg: &ExperimentConfig) -> AscentOptions {
    AscentOptions::default().with_restarts(cfg.restarts).with_seed(cfg.seed)
}

/// Families available by name in model documents: on-site generators repeated at every site.
pub fn named_family(name: &str, spec: &ModelSpec) -> lindstab_core::Result<UniformFamily> {
    let site = match (name, spec.local_dim) {
        ("amplitude-damping", 2) => amplitude_damping_site(0.0)?,
        ("dephasing", d) => Gkls::dissipative(lindstab_core::linalg::superop::dephasing_jumps(d, 1.0))?,
        ("four-level", 4) => four_level_site(),
        _ => {
            return Err(lindstab_core::Error::Domain(format!(
                "unknown family `{name}` for local dimension {}",
                spec.local_dim
            )))
        }
    };
    let origin = Site::new(vec![0; spec.geometry.dim()]);
    let term = LocalTerm::on_site(origin, site)?;
    let strength = spec.strength.unwrap_or(Strength {
        j: term.cb_bound(),
        profile: lindstab_core::model::DecayProfile::FiniteRange { range: 0 },
    });
    UniformFamily::translation_invariant(spec.geometry.clone(), spec.local_dim, vec![term], BoundaryRule::Open, strength)
}

fn load_model(cfg: &ExperimentConfig) -> Result<(ModelSpec, UniformFamily)> {
    let value = cfg.model.as_ref().ok_or_else(|| field("model", "missing"))?;
    let bytes = serde_json::to_vec(value).map_err(|e| field("model", e.to_string()))?;
    let spec = parse_model(&bytes)?;
    let family = spec.family(&named_family)?;
    Ok((spec, family))
}

fn resolve_sites(family: &UniformFamily, sites: &[Site], default: Site, name: &str) -> Result<Region> {
    let region = if sites.is_empty() { Region::new([default]) } else { Region::new(sites.iter().cloned()) };
    if let Some(s) = region.iter().find(|s| !family.geometry.contains(s)) {
        return Err(field(name, format!("site {s} lies outside the lattice")));
    }
    Ok(region)
}

fn first_site(g: &LatticeGeometry) -> Site {
    g.site(0)
}

fn last_site(g: &LatticeGeometry) -> Site {
    g.site(g.num_sites() - 1)
}

/// Random Hermitian operator of unit operator norm.
pub fn unit_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let h = random_hermitian(rng, d);
    let n = op_norm(h.as_ref());
    scale(h.as_ref(), c64::new(1.0 / n, 0.0))
}

fn positions(lam: &Region, a: &Region) -> Vec<usize> {
    a.iter().map(|s| lam.position(s).expect("subset of Λ")).collect()
}

/// ‖e^{tL₀*}(O) − e^{tL₁*}(O)‖ on an ascending grid.
pub fn deviation_series(base: &dyn Generator, perturbed: &dyn Generator, o: MatRef<'_, c64>, ts: &[f64]) -> Result<Vec<f64>> {
    let a = propagate_grid(base, o, ts, Picture::Heisenberg)?;
    let b = propagate_grid(perturbed, o, ts, Picture::Heisenberg)?;
    Ok(a.iter().zip(&b).map(|(x, y)| op_norm((x - y).as_ref())).collect())
}

pub fn spectrum(cfg: &ExperimentConfig) -> Result<Report> {
    let (_, family) = load_model(cfg)?;
    let lam = family.geometry.all();
    let l = family.assemble_closed(&lam)?;
    let mut ev = eigenvalues(l.matrix().as_ref())?;
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let mut r = Report::new("spectrum", &["k", "re", "im"]);
    for (k, z) in ev.iter().enumerate() {
        r.push(vec![k.into(), z.re.into(), z.im.into()]);
    }
    let scale_l = l.matrix().norm_l2().max(1.0);
    let top = ev.first().map_or(0.0, |z| z.re);
    r.note("stationary_dimension", stationary_dimension(&l)?);
    match spectral_gap(&l) {
        Ok(g) => r.note("gap", g),
        Err(e) => r.note("gap", e.to_string()),
    }
    let validity = l.is_valid_lindbladian(1e-9);
    r.check("valid-lindbladian", validity.overall, format!("{validity:?}"));
    r.check("spectrum-in-left-half-plane", top <= 1e-9 * scale_l, format!("max Re λ = {top:.3e}"));
    Ok(r)
}

pub fn contraction(cfg: &ExperimentConfig) -> Result<Report> {
    let (_, family) = load_model(cfg)?;
    let lam = family.geometry.all();
    let g = Semigroup::new(family.assemble_closed(&lam)?);
    let o = opts(cfg);
    let mut r = Report::new("contraction", &["t", "eta"]);
    let mut worst = 0.0f64;
    for t in times(cfg) {
        let e = eta(&g, t, &o)?.value;
        worst = worst.max(e);
        r.push(vec![t.into(), e.into()]);
    }
    r.check("eta-at-most-one", worst <= 1.0 + 1e-9, format!("max η = {worst:.6e}"));
    Ok(r)
}

fn resized(spec: &ModelSpec, n: usize) -> Result<ModelSpec> {
    if spec.geometry.dim() != 1 {
        return Err(field("sizes", "size sweeps need a one-dimensional lattice"));
    }
    let mut s = spec.clone();
    s.geometry = LatticeGeometry::new(1, vec![n], spec.geometry.periodic_axes().to_vec())?;
    Ok(s)
}

pub fn grm_fit(cfg: &ExperimentConfig) -> Result<Report> {
    let (spec, _) = load_model(cfg)?;
    let sizes = if cfg.sizes.is_empty() { vec![2, 3, 4] } else { cfg.sizes.clone() };
    let samples = grm_samples(
        |n| {
            let s = resized(&spec, n).map_err(|e| lindstab_core::Error::Domain(e.to_string()))?;
            let fam = s.family(&named_family)?;
            fam.assemble_closed(&fam.geometry.all())
        },
        &sizes,
        &times(cfg),
        &opts(cfg),
    )?;
    let mut r = Report::new("grm-fit", &["size", "t", "eta"]);
    for s in &samples {
        r.push(vec![s.size.into(), s.t.into(), s.eta.into()]);
    }
    let fit = fit_grm(&samples)?;
    r.note("fit", fit);
    r.check("envelope-holds", fit.max_violation <= 1e-9, format!("max violation {:.3e}", fit.max_violation));
    Ok(r)
}

pub fn stability(cfg: &ExperimentConfig) -> Result<Report> {
    let (spec, family) = load_model(cfg)?;
    let p = spec.perturbation()?.ok_or_else(|| field("model.perturbation", "required for the stability experiment"))?;
    let lam = family.geometry.all();
    let base = family.assemble_closed_liouvillian(&lam)?;
    let perturbed = apply_perturbation_liouvillian(base.clone(), &p, &lam, family.local_dim)?;
    let a = resolve_sites(&family, &cfg.region, first_site(&family.geometry), "region")?;
    let mut rng = Seeder::new(cfg.seed).stream(0);
    let o_a = unit_hermitian(&mut rng, family.local_dim.pow(a.len() as u32));
    let o = embed_operator(o_a.as_ref(), &positions(&lam, &a), &Layout::uniform(lam.len(), family.local_dim))?;
    let ts = times(cfg);
    let dev = deviation_series(&base, &perturbed, o.as_ref(), &ts)?;
    let mut r = Report::new("stability", &["t", "deviation"]);
    for (t, d) in ts.iter().zip(&dev) {
        r.push(vec![(*t).into(), (*d).into()]);
    }
    let sup = dev.iter().copied().fold(0.0, f64::max);
    r.note("epsilon", p.epsilon);
    r.note("sup_deviation", sup);
    r.check("deviation-finite", sup.is_finite(), format!("sup = {sup:.6e}"));
    Ok(r)
}

fn context(cfg: &ExperimentConfig, family: &UniformFamily) -> Result<BoundContext> {
    Ok(BoundContext::new(
        family.geometry.dim(),
        &family.strength,
        cfg.lr_class.unwrap_or(LrClass::Exp),
        cfg.mu.unwrap_or(1.0),
        1.0,
        0.0,
    )?)
}

/// Exact ‖[K, O(t)]‖ against the Lieb-Robinson bound, K = [k, ·] with ‖k‖ = 1 on `probe`.
pub fn lr_rows(
    family: &UniformFamily,
    ctx: &BoundContext,
    a: &Region,
    probe: &Region,
    ts: &[f64],
    seed: u64,
    r: &mut Report,
) -> Result<Vec<usize>> {
    let lam = family.geometry.all();
    let d = family.local_dim;
    let layout = Layout::uniform(lam.len(), d);
    let mut rng = Seeder::new(seed).stream(1);
    let o = embed_operator(unit_hermitian(&mut rng, d.pow(a.len() as u32)).as_ref(), &positions(&lam, a), &layout)?;
    let k = embed_operator(unit_hermitian(&mut rng, d.pow(probe.len() as u32)).as_ref(), &positions(&lam, probe), &layout)?;
    let dist = family.geometry.distance(a, probe)? as f64;
    let c_xy = a.len().min(probe.len()) as f64;
    let exact = commutator_growth(&family.assemble_open_liouvillian(&lam)?, o.as_ref(), k.as_ref(), ts)?;
    let bound: Vec<f64> = ts.iter().map(|&t| bound_lr(ctx, 2.0, 1.0, c_xy, t, dist)).collect();
    for ((t, e), b) in ts.iter().zip(&exact).zip(&bound) {
        r.push(vec!["lieb-robinson".into(), (*t).into(), dist.into(), (*e).into(), (*b).into()]);
    }
    Ok(verify_bound(&exact, &bound)?.violations)
}

/// Exact ‖O_A(t) − O_r(t)‖ against the localization bound.
pub fn localization_rows(
    family: &UniformFamily,
    ctx: &BoundContext,
    a: &Region,
    radius: usize,
    ts: &[f64],
    seed: u64,
    r: &mut Report,
) -> Result<Vec<usize>> {
    let lam = family.geometry.all();
    let mut rng = Seeder::new(seed).stream(2 + radius as u64);
    let o = unit_hermitian(&mut rng, family.local_dim.pow(a.len() as u32));
    let exact = localization_error(family, &lam, a, o.as_ref(), radius, ts)?;
    let bound: Vec<f64> = ts.iter().map(|&t| bound_localization(ctx, a.len(), 1.0, t, radius as f64)).collect();
    for ((t, e), b) in ts.iter().zip(&exact).zip(&bound) {
        r.push(vec!["localization".into(), (*t).into(), (radius as f64).into(), (*e).into(), (*b).into()]);
    }
    Ok(verify_bound(&exact, &bound)?.violations)
}

pub const BOUND_HEADER: [&str; 5] = ["check", "t", "param", "exact", "bound"];

pub fn lr_verify(cfg: &ExperimentConfig) -> Result<Report> {
    let (_, family) = load_model(cfg)?;
    let ctx = context(cfg, &family)?;
    let a = resolve_sites(&family, &cfg.region, first_site(&family.geometry), "region")?;
    let probe = resolve_sites(&family, &cfg.region_b, last_site(&family.geometry), "region_b")?;
    if !a.intersection(&probe).is_empty() {
        return Err(field("region_b", "probe must be disjoint from the observable support"));
    }
    let mut r = Report::new("lr-verify", &BOUND_HEADER);
    let v = lr_rows(&family, &ctx, &a, &probe, &times(cfg), cfg.seed, &mut r)?;
    r.note("velocity", ctx.lr.v);
    r.check("lieb-robinson-bound", v.is_empty(), format!("{} violations", v.len()));
    Ok(r)
}

pub fn localization_verify(cfg: &ExperimentConfig) -> Result<Report> {
    let (_, family) = load_model(cfg)?;
    let ctx = context(cfg, &family)?;
    let a = resolve_sites(&family, &cfg.region, first_site(&family.geometry), "region")?;
    let radii: Vec<usize> = if cfg.s_grid.is_empty() { vec![1, 2] } else { cfg.s_grid.iter().map(|&s| s as usize).collect() };
    let mut r = Report::new("localization-verify", &BOUND_HEADER);
    let mut violations = 0;
    for radius in radii {
        violations += localization_rows(&family, &ctx, &a, radius, &times(cfg), cfg.seed, &mut r)?.len();
    }
    r.note("velocity", ctx.lr.v);
    r.check("localization-bound", violations == 0, format!("{violations} violations"));
    Ok(r)
}

pub fn ltqo(cfg: &ExperimentConfig) -> Result<Report> {
    let (_, family) = load_model(cfg)?;
    let a = resolve_sites(&family, &cfg.region, first_site(&family.geometry), "region")?;
    let ells: Vec<usize> = if cfg.s_grid.is_empty() { vec![0, 1, 2] } else { cfg.s_grid.iter().map(|&s| s as usize).collect() };
    let mut r = Report::new("ltqo", &["ell", "delta", "lower_bound"]);
    let mut series = Vec::new();
    let mut in_range = true;
    for ell in ells {
        let est = ltqo_delta(&family, &a, ell, cfg.restarts, cfg.seed)?;
        in_range &= (-1e-12..=2.0 + 1e-9).contains(&est.value);
        series.push((ell as f64, est.value));
        r.push(vec![ell.into(), est.value.into(), usize::from(est.lower_bound).into()]);
    }
    if series.len() >= 4 {
        if let Ok(fit) = decay_fit(&series) {
            r.note("decay_fit", fit);
        }
    }
    r.check("delta-in-range", in_range, "0 ≤ δ ≤ 2");
    Ok(r)
}

pub fn correlations(cfg: &ExperimentConfig) -> Result<Report> {
    let (_, family) = load_model(cfg)?;
    let lam = family.geometry.all();
    let a = resolve_sites(&family, &cfg.region, first_site(&family.geometry), "region")?;
    let b = resolve_sites(&family, &cfg.region_b, last_site(&family.geometry), "region_b")?;
    let rho = fixed_point(&family.assemble_closed(&lam)?)?;
    let s = BipartiteState::from_regions(&rho, &lam, family.local_dim, &a, &b)?;
    let mut r = Report::new("correlations", &["covariance", "trace", "mutual_info"]);
    let (c, t, i) = (covariance_corr(&s, cfg.restarts, cfg.seed), trace_corr(&s), mutual_info(&s));
    r.push(vec![c.into(), t.into(), i.into()]);
    r.check("covariance-below-trace", c <= t + 1e-9, format!("C = {c:.6e}, T = {t:.6e}"));
    r.check("trace-below-pinsker", t <= 2.0 * i.sqrt() + 1e-9, format!("T = {t:.6e}, I = {i:.6e}"));
    let (da, db) = s.dims();
    if let Some(f) = fannes_bound(t, da * db) {
        r.note("fannes_bound", f);
        r.check("fannes", i <= f + 1e-9, format!("I = {i:.6e}, bound = {f:.6e}"));
    }
    Ok(r)
}

fn rate_family(choice: RateChoice) -> RateFamily {
    match choice {
        RateChoice::HeatBath => RateFamily::HeatBath,
        RateChoice::Metropolis => RateFamily::Metropolis,
    }
}

/// Glauber checks on the chain interval Λ = [1, n] inside a chain of n + 2 spins: the
/// two end spins of Λ are frozen under truncation, so the Gibbs simplex is non-trivial.
pub fn glauber_checks(potential: &Potential, choice: RateChoice, n: usize, gamma: f64, ts: &[f64], opts: &AscentOptions, r: &mut Report) -> Result<()> {
    let geometry = LatticeGeometry::chain(n + 2);
    let rates = GlauberRates::new(rate_family(choice), potential.clone(), geometry.clone())?;
    let lam = Region::interval(1, n as i64);
    let db = rates.detailed_balance_identity_residual()?;
    r.check(&format!("{}-n{n}-detailed-balance-identity", choice.label()), db < 1e-12, format!("{db:.3e}"));

    let fixed = embed(&rates, &lam, GlauberBoundary::Fixed(0), gamma)?;
    let (mu, _) = gibbs(&geometry, potential, &lam, 0)?;
    let kms = detailed_balance_residual(&fixed.generator, &mu)?;
    r.check(&format!("{}-n{n}-embedded-detailed-balance", choice.label()), kms < 1e-9, format!("{kms:.3e}"));

    let truncated = embed(&rates, &lam, GlauberBoundary::Truncated, gamma)?;
    let d = truncated.dim();
    let diag: Vec<Vec<f64>> = truncated.fixed_point_set()?.iter().map(|x| (0..d).map(|i| x[(i, i)].re).collect()).collect();
    let simplex = gibbs_simplex(&rates, &lam)?;
    let haus = vertex_hausdorff(&diag, &simplex);
    let off = truncated.fixed_point_offdiagonal()?;
    r.note(&format!("n{n}_simplex_vertices"), simplex.len());
    r.check(&format!("{}-n{n}-fixed-points-are-gibbs-simplex", choice.label()), haus < 1e-8 && off < 1e-8, format!("hausdorff {haus:.3e}, off-diagonal {off:.3e}"));

    let semi = Semigroup::new(fixed.generator.clone());
    let p: Vec<f64> = (0..d).map(|i| (i + 1) as f64).collect();
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let rho = faer::Mat::from_fn(d, d, |i, j| if i == j { c64::new(p[i], 0.0) } else { c64::new(0.0, 0.0) });
    let mut diag_err = 0.0f64;
    for &t in ts {
        let q = semi.evolve(t, rho.as_ref())?;
        let c = fixed.classical.evolve(t, &p);
        for i in 0..d {
            diag_err = diag_err.max((q[(i, i)].re - c[i]).abs());
        }
    }
    r.check(&format!("{}-n{n}-diagonal-sector-matches-chain", choice.label()), diag_err < 1e-10, format!("{diag_err:.3e}"));

    let split = contraction_split_check(&fixed, ts, opts, ESTIMATE_SLACK)?;
    for row in &split.rows {
        r.push(vec![choice.label().into(), n.into(), row.t.into(), row.total.into(), row.classical.into(), row.dephasing.into(), row.dephasing_bound.into()]);
    }
    r.check(&format!("{}-n{n}-contraction-split", choice.label()), split.violations.is_empty(), format!("{} violations", split.violations.len()));
    Ok(())
}

pub const GLAUBER_HEADER: [&str; 7] = ["rates", "n", "t", "eta_total", "eta_classical", "eta_dephasing", "dephasing_bound"];

pub fn glauber(cfg: &ExperimentConfig) -> Result<Report> {
    let value = cfg.potential.as_ref().ok_or_else(|| field("potential", "missing"))?;
    let bytes = serde_json::to_vec(value).map_err(|e| field("potential", e.to_string()))?;
    let potential = parse_potential(&bytes)?;
    if potential.terms.first().map(|t| t.sites[0].len()) != Some(1) {
        return Err(field("potential", "the glauber experiment runs on chains; use one-dimensional sites"));
    }
    let sizes = if cfg.sizes.is_empty() { vec![3] } else { cfg.sizes.clone() };
    let mut r = Report::new("glauber", &GLAUBER_HEADER);
    for n in sizes {
        glauber_checks(&potential, cfg.rates, n, cfg.gamma.unwrap_or(1.0), &times(cfg), &opts(cfg), &mut r)?;
    }
    Ok(r)
}
