//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use faer::c64;
use rand::Rng;

use lindstab_cli::presets::{run_preset, PRESETS};
use lindstab_cli::Report;
use lindstab_core::bounds::{beta_exponent, compat_check, BoundContext, LrClass, LrData};
use lindstab_core::dynamics::{eigenvalues, propagate, relaxed_state, spectral_gap, Picture};
use lindstab_core::linalg::dense::{eye, scale};
use lindstab_core::linalg::Generator;
use lindstab_core::model::DecayProfile;
use lindstab_core::seeding::Seeder;
use lindstab_core::zoo::{
    alternating_config, amplitude_damping, amplitude_damping_site, appendix_chain, appendix_classical, config_state,
    ground_projector, pure_overlap, AppendixVariant,
};

const SEED: u64 = 20_240_601;
const RESTARTS: usize = 8;

type Outcome = Result<String, String>;

struct Suite {
    reports: BTreeMap<&'static str, Report>,
    failed: usize,
}

impl Suite {
    fn preset(&mut self, name: &'static str) -> Result<&Report, String> {
        if !self.reports.contains_key(name) {
            let r = run_preset(name, SEED, RESTARTS).map_err(|e| format!("{name}: {e}"))?;
            self.reports.insert(name, r);
        }
        Ok(&self.reports[name])
    }

    /// Passes when every assertion of `name` whose label contains one of `keys` held.
    fn preset_checks(&mut self, name: &'static str, keys: &[&str]) -> Outcome {
        let r = self.preset(name)?;
        let picked: Vec<_> = r.assertions.iter().filter(|a| keys.iter().any(|k| a.name.contains(k))).collect();
        if picked.is_empty() {
            return Err(format!("{name}: no assertion matches {keys:?}"));
        }
        let bad: Vec<String> = picked.iter().filter(|a| !a.passed).map(|a| format!("{}: {}", a.name, a.detail)).collect();
        if bad.is_empty() {
            Ok(format!("{name}: {} checks", picked.len()))
        } else {
            Err(bad.join("; "))
        }
    }

    fn criterion(&mut self, id: usize, title: &str, budget: Duration, f: impl FnOnce(&mut Self) -> Outcome) {
        let start = Instant::now();
        let outcome = f(self);
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > budget => Err(format!("{d}; over budget ({:.1}s > {:.0}s)", elapsed.as_secs_f64(), budget.as_secs_f64())),
            o => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            self.failed += 1;
        }
        println!("{tag} {id:>2} {title} [{:.2}s] {detail}", elapsed.as_secs_f64());
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: lindstab_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn amplitude_damping_gap() -> Outcome {
    let l = core(core(amplitude_damping_site(0.0))?.to_superop())?;
    let mut ev = core(eigenvalues(l.matrix().as_ref()))?;
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    let want = [-1.0, -0.5, -0.5, 0.0];
    let err = ev.iter().zip(want).map(|(z, w)| (z.re - w).abs().max(z.im.abs())).fold(0.0, f64::max);
    ensure(err < 1e-10, || format!("spectrum {ev:?}"))?;
    let gap = core(spectral_gap(&l))?;
    ensure((gap - 0.5).abs() < 1e-10, || format!("gap {gap}"))?;
    Ok(format!("gap {gap:.12}, spectrum error {err:.1e}"))
}

fn amplitude_damping_numbers() -> Outcome {
    // e^{−t/2} at t = 50 is far below the 1e-8 tolerance
    const T_LONG: f64 = 50.0;
    let mut worst = 0.0f64;
    for n in 1..=5usize {
        let d = 1usize << n;
        let projectors: Vec<_> = (1..=n).map(|r| core(ground_projector(n, r))).collect::<Result<_, _>>()?;
        // the base model does not depend on ε
        let lb = core(amplitude_damping(n, 0.0))?.0.liouvillian();
        let fb = core(relaxed_state(&lb, 1e-13, 1e4))?;
        for o in &projectors {
            let hb = core(propagate(&lb, o.as_ref(), T_LONG, Picture::Heisenberg))?;
            worst = worst.max((&hb - &eye(d)).norm_max());
        }
        for eps in [0.05, 0.1, 0.2] {
            let lp = core(amplitude_damping(n, eps))?.1.liouvillian();
            let fp = core(relaxed_state(&lp, 1e-13, 1e4))?;
            let overlap = pure_overlap(fb.as_ref(), fp.as_ref());
            worst = worst.max((overlap - (1.0 - eps * eps).powf(n as f64 / 2.0)).abs());
            for (r, o) in (1..=n).zip(&projectors) {
                let hp = core(propagate(&lp, o.as_ref(), T_LONG, Picture::Heisenberg))?;
                let want = scale(eye(d).as_ref(), c64::new((1.0 - eps * eps).powi(r as i32), 0.0));
                worst = worst.max((&hp - &want).norm_max());
            }
        }
    }
    ensure(worst < 1e-8, || format!("max error {worst:.3e}"))?;
    Ok(format!("N ≤ 5, ε ∈ {{0.05, 0.1, 0.2}}: max error {worst:.1e}"))
}

fn appendix_chain_numbers() -> Outcome {
    for n in 1..=3usize {
        let c = core(appendix_classical(n, true))?;
        let rate = core(c.smallest_nonzero_rate(1e-12))?;
        ensure((rate - 2.0 / 3.0).abs() < 1e-9, || format!("N={n}: smallest rate {rate}"))?;
        ensure(c.absorbing() == vec![alternating_config(n, (0, 1))], || format!("N={n}: absorbing {:?}", c.absorbing()))?;
        let mut pi = vec![0.0; c.size()];
        pi[alternating_config(n, (0, 1))] = 1.0;
        ensure(c.stationarity_residual(&pi) < 1e-12, || format!("N={n}: δ_0101 not stationary"))?;

        let cut = core(appendix_chain(n, AppendixVariant::EmbeddedWithoutLk3, 1.0))?;
        let frozen = config_state(2 * n, alternating_config(n, (1, 0)));
        let res = cut.liouvillian().apply(frozen.as_ref()).norm_max();
        ensure(res < 1e-10, || format!("N={n}: δ_1010 residual {res:.3e}"))?;
    }
    for n in 1..=6usize {
        let d = core(core(appendix_classical(n, true))?.diameter())?;
        ensure(d == n, || format!("N={n}: diameter {d}"))?;
    }
    Ok("gap 2/3 and steady state for N ≤ 3, diameter = N for N ≤ 6, δ_1010 frozen without L_k3".into())
}

fn bound_formulas() -> Outcome {
    let beta = |a, d| beta_exponent(a, d).map_err(|e| e.to_string());
    ensure(beta(10.0, 1)? == 7.0 && beta(8.0, 2)? == 2.5, || "branch values".into())?;
    for d in 1..=3usize {
        let edge = 5.0 * d as f64 - 1.0;
        let at = beta(edge, d)?;
        let (lo, hi) = (beta(edge - 1e-9, d)?, beta(edge + 1e-9, d)?);
        ensure((at - (2.0 * d as f64 - 1.0)).abs() < 1e-12 && (lo - at).abs() < 1e-8 && (hi - at).abs() < 1e-8, || {
            format!("discontinuous at α = {edge}: {lo}, {at}, {hi}")
        })?;
    }
    ensure(beta_exponent(3.0, 1).is_err(), || "α ≤ 2D+1 accepted".into())?;

    let mut rng = Seeder::new(SEED).stream(9);
    let mut truth = [0usize; 3];
    for i in 0..100 {
        let dim = rng.random_range(1..=3usize);
        let d = dim as f64;
        let alpha = rng.random_range(2.0 * d + 1.5..6.0 * d + 4.0);
        let (v, gamma, delta, b) =
            (rng.random_range(0.05..3.0), rng.random_range(0.05..3.0), rng.random_range(0.0..2.0), rng.random_range(0.1..8.0));
        let lr = LrData { class: LrClass::Power, mu: 1.0, v };
        let ctx = BoundContext::from_parts(dim, 1.0, DecayProfile::PowerLaw { alpha }, lr, gamma, delta, b).map_err(|e| e.to_string())?;
        let rep = compat_check(&ctx);
        let id1 = (rep.delta0 - (b - v * rep.k_bar)).abs();
        let id2 = (rep.delta0 - (gamma * rep.k_bar - d * delta)).abs();
        ensure(id1 < 1e-12 && id2 < 1e-12, || format!("context {i}: identity defects {id1:.1e}, {id2:.1e}"))?;
        let want = [alpha > 3.0 * d + 2.0, b * gamma > v * (v + gamma + d * delta), b + d * delta >= v + gamma];
        let got = [rep.cc1, rep.cc2, rep.cc3];
        ensure(want == got, || format!("context {i}: CC truth {got:?}, expected {want:?}"))?;
        for (t, w) in truth.iter_mut().zip(want) {
            *t += usize::from(w);
        }
    }
    ensure(truth.iter().all(|&t| t > 0 && t < 100), || format!("degenerate truth tables {truth:?}"))?;
    Ok(format!("100 contexts, conditions true in {truth:?} of 100"))
}

fn reproducibility(suite: &mut Suite) -> Outcome {
    for name in PRESETS {
        let first = suite.preset(name)?.to_csv().map_err(|e| e.to_string())?;
        let again = run_preset(name, SEED, RESTARTS).map_err(|e| e.to_string())?.to_csv().map_err(|e| e.to_string())?;
        ensure(first == again, || format!("{name}: CSV differs between runs"))?;
    }
    Ok(format!("{} presets byte-identical", PRESETS.len()))
}

fn main() {
    let secs = Duration::from_secs;
    let mut s = Suite { reports: BTreeMap::new(), failed: 0 };
    s.criterion(1, "amplitude-damping gap", secs(1), |_| amplitude_damping_gap());
    s.criterion(2, "amplitude-damping instability numbers", secs(30), |_| amplitude_damping_numbers());
    s.criterion(3, "four-level example", secs(60), |s| {
        s.preset_checks("four-level-instability", &["site-gap", "eigenrelation", "locally-orthogonal"])
    });
    s.criterion(4, "appendix chain", secs(60), |_| appendix_chain_numbers());
    s.criterion(5, "commuting subadditivity", secs(120), |s| s.preset_checks("commuting-subadditivity", &["subadditive"]));
    s.criterion(6, "Lieb-Robinson and localization bounds", secs(180), |s| {
        s.preset_checks("lieb-robinson", &["lieb-robinson-bound", "localization-bound"])
    });
    s.criterion(7, "Glauber embedding", secs(180), |s| s.preset_checks("glauber-ising", &["-n"]));
    s.criterion(8, "weak mixing implies LTQO shape", secs(120), |s| {
        s.preset_checks("weak-mixing-ltqo", &["weak-mixing", "ltqo"])
    });
    s.criterion(9, "bound-formula unit suite", secs(1), |_| bound_formulas());
    s.criterion(10, "correlation chain", secs(60), |s| {
        s.preset_checks("correlation-chain", &["chain", "fannes", "maximally-entangled"])
    });
    s.criterion(11, "stability dichotomy", secs(300), |s| {
        let stable = s.preset_checks("amplitude-damping-stability", &["size-independent", "linear-in-eps", "eps-squared"])?;
        let four = s.preset_checks("four-level-instability", &["order-one"])?;
        let appendix = s.preset_checks("appendix-instability", &["order-one"])?;
        Ok(format!("{stable}; {four}; {appendix}"))
    });
    s.criterion(12, "reproducibility", Duration::MAX, reproducibility);
    println!("{} of 12 criteria passed", 12 - s.failed);
    if s.failed > 0 {
        std::process::exit(1);
    }
}
