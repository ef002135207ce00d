//! Named, fully parameterized runs over the built-in example models.

use faer::c64;

use lindstab_core::bounds::{BoundContext, LrClass};
use lindstab_core::correlations::{
    covariance_corr, decay_fit, fannes_bound, maximally_entangled, mutual_info, trace_corr, BipartiteState, DecayClass,
};
use lindstab_core::dynamics::{contraction, eigenvalues, fixed_point, relaxed_state, spectral_gap, Semigroup};
use lindstab_core::glauber::{glauber_ltqo_delta, weak_mixing_sup, GlauberRates, Potential};
use lindstab_core::lattice::{LatticeGeometry, Region, Site};
use lindstab_core::linalg::dense::{ketbra, op_norm, scale, CMat};
use lindstab_core::linalg::{AscentOptions, Gkls};
use lindstab_core::model::{sum_superop, BoundaryRule, DecayProfile, LocalTerm, Strength, TermGenerator, UniformFamily};
use lindstab_core::seeding::{ginibre, random_density, random_hermitian, Seeder};
use lindstab_core::zoo::{
    alternating_config, amplitude_damping, amplitude_damping_site, appendix_chain, appendix_classical, config_state,
    four_level, four_level_sigma, four_level_site, linear_fit, observable_deviation, reduced_trace_distance,
    AppendixVariant, ExampleModel, FourLevelVariant,
};
use rand::Rng;

use crate::config::RateChoice;
use crate::experiments::{glauber_checks, localization_rows, lr_rows, BOUND_HEADER, ESTIMATE_SLACK, GLAUBER_HEADER};
use crate::report::Report;
use crate::{CliError, Result};

pub const PRESETS: [&str; 9] = [
    "amplitude-damping-stability",
    "four-level-instability",
    "appendix-instability",
    "example-spectra",
    "glauber-ising",
    "lieb-robinson",
    "commuting-subadditivity",
    "correlation-chain",
    "weak-mixing-ltqo",
];

pub fn run_preset(name: &str, seed: u64, restarts: usize) -> Result<Report> {
    let opts = AscentOptions::default().with_restarts(restarts).with_seed(seed);
    match name {
        "amplitude-damping-stability" => amplitude_damping_stability(),
        "four-level-instability" => four_level_instability(),
        "appendix-instability" => appendix_instability(),
        "example-spectra" => example_spectra(),
        "glauber-ising" => glauber_ising(&opts),
        "lieb-robinson" => lieb_robinson(seed),
        "commuting-subadditivity" => commuting_subadditivity(seed, &opts),
        "correlation-chain" => correlation_chain(seed, restarts),
        "weak-mixing-ltqo" => weak_mixing_ltqo(),
        _ => Err(CliError::UnknownPreset(name.to_owned())),
    }
}

/// Long enough that every example has relaxed to machine precision.
const LONG_TIMES: [f64; 10] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0, 64.0];

pub const SMALL_EPS: [f64; 4] = [0.0025, 0.005, 0.01, 0.02];
pub const LARGE_EPS: [f64; 3] = [0.05, 0.1, 0.2];

fn amplitude_damping_stability() -> Result<Report> {
    let mut r = Report::new("amplitude-damping-stability", &["n", "eps", "t", "deviation"]);
    let o = ketbra(2, 0, 0);
    let sizes = 2..=5usize;
    let mut limit_err = 0.0f64;
    let mut spread = 0.0f64;
    let mut sups = Vec::new();
    for eps in SMALL_EPS.iter().chain(&LARGE_EPS).copied() {
        let mut reference: Option<Vec<f64>> = None;
        for n in sizes.clone() {
            let (base, perturbed) = amplitude_damping(n, eps)?;
            let s = observable_deviation(&base, &perturbed, o.as_ref(), &[0], &LONG_TIMES)?;
            for (t, d) in s.ts.iter().zip(&s.deviation) {
                r.push(vec![n.into(), eps.into(), (*t).into(), (*d).into()]);
            }
            let last = *s.deviation.last().expect("non-empty grid");
            limit_err = limit_err.max((last - eps * eps).abs());
            match &reference {
                None => {
                    if SMALL_EPS.contains(&eps) {
                        sups.push((eps, s.sup));
                    }
                    reference = Some(s.deviation);
                }
                Some(first) => {
                    let gap = first.iter().zip(&s.deviation).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    spread = spread.max(gap);
                }
            }
        }
    }
    let fit = linear_fit(&sups)?;
    r.note("linear_fit_slope", fit.slope);
    r.check("long-time-limit-is-eps-squared", limit_err < 1e-8, format!("max |dev(∞) − ε²| = {limit_err:.3e}"));
    r.check("size-independent", spread < 1e-8, format!("spread across N = {spread:.3e}"));
    r.check(
        "linear-in-eps",
        fit.max_relative_residual < 0.05,
        format!("max relative residual {:.3e}", fit.max_relative_residual),
    );
    Ok(r)
}

fn four_level_instability() -> Result<Report> {
    let mut r = Report::new("four-level-instability", &["n", "comparison", "t", "deviation"]);
    let o = ketbra(4, 0, 0);
    let gap = spectral_gap(&four_level_site().to_superop()?)?;
    r.check("site-gap-is-one", (gap - 1.0).abs() < 1e-10, format!("gap = {gap:.12}"));
    for n in 2..=3usize {
        let base = four_level(n, FourLevelVariant::Base)?;
        let plus = four_level(n, FourLevelVariant::PlusE)?;
        let minus = four_level(n, FourLevelVariant::PlusEDagger)?;

        let sigma = four_level_sigma(n)?;
        let out = lindstab_core::linalg::Generator::apply(&plus.liouvillian(), sigma.as_ref());
        let want = scale(sigma.as_ref(), c64::new(-2.0 / n as f64, 0.0));
        let res = (&out - &want).norm_max();
        r.check(&format!("n{n}-eigenrelation"), res < 1e-10, format!("residual {res:.3e}"));

        let (fp, fm) = (stationary_state(&plus)?, stationary_state(&minus)?);
        let dist = reduced_trace_distance(&plus.layout(), fp.as_ref(), fm.as_ref(), &[0])?;
        r.check(&format!("n{n}-fixed-points-locally-orthogonal"), (dist - 2.0).abs() < 1e-8, format!("distance {dist:.12}"));

        r.note(&format!("n{n}_perturbation_rate"), 2.0 / n as f64);
        for (label, a, b) in [("base-vs-plus-e", &base, &plus), ("plus-e-vs-plus-e-dagger", &plus, &minus)] {
            let s = observable_deviation(a, b, o.as_ref(), &[0], &LONG_TIMES)?;
            for (t, d) in s.ts.iter().zip(&s.deviation) {
                r.push(vec![n.into(), label.into(), (*t).into(), (*d).into()]);
            }
            r.check(&format!("n{n}-{label}-order-one"), s.sup > 0.9, format!("sup = {:.6}", s.sup));
        }
    }
    Ok(r)
}

/// Dense kernel for small chains; beyond that the d²×d² SVD dominates, so relax in time instead.
fn stationary_state(model: &ExampleModel) -> Result<CMat> {
    if model.dim() <= 16 {
        Ok(fixed_point(&model.superop()?)?)
    } else {
        Ok(relaxed_state(&model.liouvillian(), 1e-12, 1e5)?)
    }
}

fn appendix_instability() -> Result<Report> {
    let mut r = Report::new("appendix-instability", &["n", "t", "deviation"]);
    for n in 1..=3usize {
        let c = appendix_classical(n, true)?;
        let rate = c.smallest_nonzero_rate(1e-12)?;
        r.check(&format!("n{n}-gap-two-thirds"), (rate - 2.0 / 3.0).abs() < 1e-9, format!("{rate:.12}"));
        let steady = alternating_config(n, (0, 1));
        r.check(&format!("n{n}-unique-steady-state"), c.absorbing() == vec![steady], format!("absorbing {:?}", c.absorbing()));
        r.check(&format!("n{n}-upper-triangular"), c.is_upper_triangular(), "pair order (10, 00, 11, 01)");

        let cut = appendix_chain(n, AppendixVariant::EmbeddedWithoutLk3, 1.0)?;
        let frozen = config_state(2 * n, alternating_config(n, (1, 0)));
        let res = lindstab_core::linalg::Generator::apply(&cut.liouvillian(), frozen.as_ref()).norm_max();
        r.check(&format!("n{n}-perturbed-steady-state"), res < 1e-10, format!("residual {res:.3e}"));

        let full = appendix_chain(n, AppendixVariant::Embedded, 1.0)?;
        let s = observable_deviation(&full, &cut, ketbra(4, 1, 1).as_ref(), &[0, 1], &LONG_TIMES)?;
        for (t, d) in s.ts.iter().zip(&s.deviation) {
            r.push(vec![n.into(), (*t).into(), (*d).into()]);
        }
        r.check(&format!("n{n}-order-one-deviation"), s.sup > 0.9, format!("sup = {:.6}", s.sup));
    }
    for n in 2..=6usize {
        let d = appendix_classical(n, true)?.diameter()?;
        r.check(&format!("n{n}-diameter"), d == n, format!("diameter {d}"));
    }
    Ok(r)
}

fn example_spectra() -> Result<Report> {
    let mut r = Report::new("example-spectra", &["example", "k", "re", "im"]);
    for (label, site, gap_want) in [
        ("amplitude-damping", amplitude_damping_site(0.0)?, 0.5),
        ("four-level", four_level_site(), 1.0),
    ] {
        let l = site.to_superop()?;
        let mut ev = eigenvalues(l.matrix().as_ref())?;
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        for (k, z) in ev.iter().enumerate() {
            r.push(vec![label.into(), k.into(), z.re.into(), z.im.into()]);
        }
        let gap = spectral_gap(&l)?;
        r.check(&format!("{label}-gap"), (gap - gap_want).abs() < 1e-10, format!("gap = {gap:.12}"));
    }
    Ok(r)
}

fn glauber_ising(opts: &AscentOptions) -> Result<Report> {
    let mut r = Report::new("glauber-ising", &GLAUBER_HEADER);
    let potential = Potential::ising(1, 0.4, 0.15)?;
    let ts = [0.1, 0.5, 1.0, 2.0, 4.0];
    for choice in [RateChoice::HeatBath, RateChoice::Metropolis] {
        for n in [3, 4] {
            glauber_checks(&potential, choice, n, 1.0, &ts, opts, &mut r)?;
        }
    }
    Ok(r)
}

/// Twenty equally spaced times on [0, 5].
pub fn lr_times() -> Vec<f64> {
    (0..20).map(|i| 5.0 * i as f64 / 19.0).collect()
}

/// Translation-invariant qubit chain whose nearest-neighbour term is drawn from `seed`.
pub fn random_chain(n: usize, seed: u64) -> Result<UniformFamily> {
    let mut rng = Seeder::new(seed).stream(0);
    let h = random_hermitian(&mut rng, 4);
    let h = scale(h.as_ref(), c64::new(0.5 / op_norm(h.as_ref()), 0.0));
    let l = ginibre(&mut rng, 4, 4);
    let l = scale(l.as_ref(), c64::new(0.5 / op_norm(l.as_ref()), 0.0));
    let jump_norm = op_norm(l.as_ref());
    let j = 2.0 * op_norm(h.as_ref()) + 2.0 * jump_norm * jump_norm;
    let gkls = Gkls::new(h, vec![l])?;
    let pair = LocalTerm::new(Site::at(0), 1, vec![Site::at(0), Site::at(1)], TermGenerator::Gkls(gkls), 2)?;
    let strength = Strength { j, profile: DecayProfile::FiniteRange { range: 1 } };
    Ok(UniformFamily::translation_invariant(LatticeGeometry::chain(n), 2, vec![pair], BoundaryRule::Open, strength)?)
}

fn lieb_robinson(seed: u64) -> Result<Report> {
    let family = random_chain(5, seed)?;
    let ctx = BoundContext::new(1, &family.strength, LrClass::Exp, 1.0, 1.0, 0.0)?;
    let ts = lr_times();
    let mut r = Report::new("lieb-robinson", &BOUND_HEADER);
    r.note("strength_j", family.strength.j);
    r.note("velocity", ctx.lr.v);
    let a = Region::new([Site::at(0)]);
    let mut lr = 0;
    for dist in [2, 3] {
        lr += lr_rows(&family, &ctx, &a, &Region::new([Site::at(dist)]), &ts, seed, &mut r)?.len();
    }
    let mut loc = 0;
    for radius in [1, 2] {
        loc += localization_rows(&family, &ctx, &a, radius, &ts, seed, &mut r)?.len();
    }
    r.check("lieb-robinson-bound", lr == 0, format!("{lr} violations"));
    r.check("localization-bound", loc == 0, format!("{loc} violations"));
    Ok(r)
}

fn random_site_generator<R: Rng + ?Sized>(rng: &mut R) -> lindstab_core::Result<Gkls> {
    let h = random_hermitian(rng, 2);
    let jumps = (0..2).map(|_| {
        let g = ginibre(rng, 2, 2);
        scale(g.as_ref(), c64::new(0.7 / op_norm(g.as_ref()), 0.0))
    });
    Gkls::new(h, jumps.collect())
}

/// Twenty log-spaced times on [0.01, 10].
pub fn log_times() -> Vec<f64> {
    (0..20).map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 19.0)).collect()
}

fn commuting_subadditivity(seed: u64, opts: &AscentOptions) -> Result<Report> {
    let mut r = Report::new("commuting-subadditivity", &["k", "t", "eta_sum", "eta_parts"]);
    let seeder = Seeder::new(seed);
    let ts = log_times();
    let mut violations = 0;
    for k in 1..=4usize {
        let mut rng = seeder.stream(k as u64);
        let lam = Region::interval(0, k as i64 - 1);
        let terms: Vec<LocalTerm> = (0..k)
            .map(|i| LocalTerm::on_site(Site::at(i as i64), random_site_generator(&mut rng)?))
            .collect::<lindstab_core::Result<_>>()?;
        let whole = Semigroup::new(sum_superop(&terms, &lam, 2)?);
        let parts: Vec<Semigroup> = terms
            .iter()
            .map(|t| Ok(Semigroup::new(t.superop_on(&lam)?)))
            .collect::<lindstab_core::Result<_>>()?;
        for &t in &ts {
            let total = contraction(&whole, t, opts)?.value;
            let mut sum = 0.0;
            for p in &parts {
                sum += contraction(p, t, opts)?.value;
            }
            if total > sum + ESTIMATE_SLACK {
                violations += 1;
            }
            r.push(vec![k.into(), t.into(), total.into(), sum.into()]);
        }
    }
    r.check("subadditive", violations == 0, format!("{violations} violations"));
    Ok(r)
}

fn correlation_chain(seed: u64, restarts: usize) -> Result<Report> {
    let mut r = Report::new(
        "correlation-chain",
        &["i", "da", "db", "covariance", "trace", "mutual_info", "fannes_bound"],
    );
    let seeder = Seeder::new(seed);
    let (mut chain_bad, mut fannes_bad, mut fannes_checked) = (0, 0, 0);
    for i in 0..500u64 {
        let mut rng = seeder.stream(i);
        let da = rng.random_range(2..=4usize);
        let db = rng.random_range(2..=4usize);
        let rank = rng.random_range(1..=da * db);
        let s = BipartiteState::new(random_density(&mut rng, da * db, rank), da, db)?;
        let c = covariance_corr(&s, restarts, seed ^ i);
        let t = trace_corr(&s);
        let mi = mutual_info(&s);
        let f = fannes_bound(t, da * db);
        if !(c >= -1e-12 && c <= t + 1e-9 && t <= 2.0 * mi.max(0.0).sqrt() + 1e-9) {
            chain_bad += 1;
        }
        if let Some(f) = f {
            fannes_checked += 1;
            if mi > f + 1e-9 {
                fannes_bad += 1;
            }
        }
        r.push(vec![
            (i as usize).into(),
            da.into(),
            db.into(),
            c.into(),
            t.into(),
            mi.into(),
            f.map_or_else(|| "".into(), Into::into),
        ]);
    }
    r.check("covariance-trace-pinsker-chain", chain_bad == 0, format!("{chain_bad} of 500 states out of order"));
    r.check("fannes", fannes_bad == 0, format!("{fannes_bad} of {fannes_checked} checked states exceed the bound"));

    let s = BipartiteState::new(maximally_entangled(2), 2, 2)?;
    let (c, t, mi) = (covariance_corr(&s, restarts, seed), trace_corr(&s), mutual_info(&s));
    let err = (t - 1.5).abs().max((mi - 2.0 * std::f64::consts::LN_2).abs()).max((c - 1.0).abs());
    r.check("maximally-entangled-reference", err < 1e-8, format!("C = {c:.12}, T = {t:.12}, I = {mi:.12}"));
    Ok(r)
}

fn weak_mixing_ltqo() -> Result<Report> {
    let mut r = Report::new("weak-mixing-ltqo", &["ell", "weak_mixing", "ltqo", "envelope"]);
    let geometry = LatticeGeometry::chain(12);
    let potential = Potential::ising(1, 0.3, 0.0)?;
    let center = 5i64;
    let a = Region::new([Site::at(center)]);
    let ells = 1..=4i64;
    // V = b(ℓ − 1) has its outer boundary at distance ℓ from A, like the frozen layer of A(ℓ)
    let wm: Vec<(f64, f64)> = ells
        .clone()
        .map(|ell| {
            let v = Region::interval(center - ell + 1, center + ell - 1);
            Ok((ell as f64, weak_mixing_sup(&geometry, &potential, &v, &a)?))
        })
        .collect::<lindstab_core::Result<_>>()?;
    let fit = decay_fit(&wm)?;
    r.note("decay_fit", fit);
    r.check(
        "weak-mixing-decays-exponentially",
        fit.class == DecayClass::Exponential && fit.residual < 0.1,
        format!("{:?}, rate {:.4}, residual {:.3e}", fit.class, fit.rate, fit.residual),
    );
    let m = fit.rate;
    // smallest prefactor putting every weak-mixing sample under C e^{−mℓ}
    let c = wm.iter().map(|(ell, w)| w * (m * ell).exp()).fold(0.0, f64::max);
    r.note("envelope_c", c);
    r.note("envelope_m", m);

    let rates = GlauberRates::heat_bath(potential, geometry.clone())?;
    let mut violations = 0;
    for (ell, w) in ells.zip(wm.iter().map(|p| p.1)) {
        let lt = glauber_ltqo_delta(&rates, &a, ell as usize)?;
        let shell = geometry.outer_boundary(&geometry.grow(&a, ell as usize)?, 1)?.len();
        let envelope = c * (-m * ell as f64).exp() * a.len() as f64 * shell as f64;
        if lt > envelope + 1e-12 {
            violations += 1;
        }
        r.push(vec![(ell as usize).into(), w.into(), lt.into(), envelope.into()]);
    }
    r.check("ltqo-under-envelope", violations == 0, format!("{violations} violations"));
    Ok(r)
}
