//! Uniform families: a bulk rule producing terms at every site, a boundary
//! rule, and a declared strength (J, f).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, Region, Site};
use crate::linalg::{diamond_norm_estimate, AscentOptions, Liouvillian, SuperOp};

use super::profile::{fit_profile, DecayProfile, ProfileFit};
use super::term::{sum_liouvillian, sum_superop, LocalTerm};

pub type BulkRule = Arc<dyn Fn(&Site) -> Vec<LocalTerm> + Send + Sync>;
pub type BoundaryHook = Arc<dyn Fn(&Region) -> Result<BoundaryCondition> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strength {
    pub j: f64,
    pub profile: DecayProfile,
}

#[derive(Clone)]
pub enum BoundaryRule {
    Open,
    /// Wrap-around closure on the box spanned by Λ.
    Periodic,
    Custom(BoundaryHook),
}

impl fmt::Debug for BoundaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryRule::Open => write!(f, "Open"),
            BoundaryRule::Periodic => write!(f, "Periodic"),
            BoundaryRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// N_d terms indexed by depth d.
#[derive(Clone, Debug, Default)]
pub struct BoundaryCondition {
    pub terms: Vec<(usize, LocalTerm)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryAudit {
    pub depth: usize,
    pub norm_bound: f64,
    pub allowance: f64,
    pub ok: bool,
}

impl BoundaryCondition {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.iter().map(|t| t.0).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// ‖N_d‖ (triangle-inequality bound) against J |∂_dΛ| f(d), per depth.
    pub fn audit(&self, geometry: &LatticeGeometry, lam: &Region, strength: &Strength) -> Result<Vec<BoundaryAudit>> {
        let mut out = Vec::new();
        for d in self.depths() {
            let norm_bound: f64 = self.terms.iter().filter(|t| t.0 == d).map(|t| t.1.cb_bound()).sum();
            let layer = geometry.boundary_layer(lam, d)?;
            let allowance = strength.j * layer.len() as f64 * strength.profile.eval(d);
            out.push(BoundaryAudit {
                depth: d,
                norm_bound,
                allowance,
                ok: norm_bound <= allowance * (1.0 + 1e-9) + 1e-12,
            });
        }
        Ok(out)
    }
}

#[derive(Clone)]
pub struct UniformFamily {
    /// Ambient lattice whose sites carry the bulk terms; balls are clipped to it.
    pub geometry: LatticeGeometry,
    pub local_dim: usize,
    pub bulk: BulkRule,
    pub boundary: BoundaryRule,
    pub strength: Strength,
}

impl fmt::Debug for UniformFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UniformFamily")
            .field("geometry", &self.geometry)
            .field("local_dim", &self.local_dim)
            .field("boundary", &self.boundary)
            .field("strength", &self.strength)
            .finish_non_exhaustive()
    }
}

impl UniformFamily {
    pub fn new(
        geometry: LatticeGeometry,
        local_dim: usize,
        bulk: BulkRule,
        boundary: BoundaryRule,
        strength: Strength,
    ) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::domain("local dimension must be at least 2"));
        }
        strength.profile.validate()?;
        if !(strength.j.is_finite() && strength.j >= 0.0) {
            return Err(Error::Validation("strength J must be finite and non-negative".into()));
        }
        Ok(UniformFamily {
            geometry,
            local_dim,
            bulk,
            boundary,
            strength,
        })
    }

    /// Translation-invariant family from terms anchored at the origin.
    pub fn translation_invariant(
        geometry: LatticeGeometry,
        local_dim: usize,
        terms_at_origin: Vec<LocalTerm>,
        boundary: BoundaryRule,
        strength: Strength,
    ) -> Result<Self> {
        let dim = geometry.dim();
        for t in &terms_at_origin {
            if t.center().coords != vec![0; dim] {
                return Err(Error::domain("translation-invariant terms must be centred at the origin"));
            }
            if t.local_dim() != local_dim {
                return Err(Error::domain("terms disagree on the local dimension"));
            }
        }
        let rule: BulkRule = Arc::new(move |u: &Site| terms_at_origin.iter().map(|t| t.translated(&u.coords)).collect());
        Self::new(geometry, local_dim, rule, boundary, strength)
    }

    fn check_region(&self, lam: &Region) -> Result<()> {
        if lam.is_empty() {
            return Err(Error::domain("region is empty"));
        }
        if let Some(s) = lam.iter().find(|s| !self.geometry.contains(s)) {
            return Err(Error::domain(format!("site {s} is outside the lattice")));
        }
        Ok(())
    }

    fn check_dim(&self, lam: &Region) -> Result<()> {
        let dim = (self.local_dim as f64).powi(lam.len() as i32);
        if dim > crate::linalg::superop::DENSE_DIM_LIMIT as f64 {
            return Err(Error::Resource {
                what: "Hilbert-space dimension",
                needed: dim.min(usize::MAX as f64) as usize,
                limit: crate::linalg::superop::DENSE_DIM_LIMIT,
            });
        }
        Ok(())
    }

    /// Bulk terms with b_u(r) ⊆ Λ, sorted by (u, r).
    pub fn bulk_terms(&self, lam: &Region) -> Result<Vec<LocalTerm>> {
        self.check_region(lam)?;
        let mut out = Vec::new();
        for u in lam.iter() {
            for t in (self.bulk)(u) {
                if t.sites().iter().any(|s| !self.geometry.contains(s)) {
                    continue;
                }
                if self.geometry.ball(t.center(), t.radius())?.is_subset(lam) {
                    out.push(t);
                }
            }
        }
        out.sort_by(|a, b| (a.center(), a.radius()).cmp(&(b.center(), b.radius())));
        Ok(out)
    }

    pub fn boundary_condition(&self, lam: &Region) -> Result<BoundaryCondition> {
        match &self.boundary {
            BoundaryRule::Open => Ok(BoundaryCondition::default()),
            BoundaryRule::Custom(hook) => hook(lam),
            BoundaryRule::Periodic => self.periodic_closure(lam),
        }
    }

    /// Terms at u ∈ Λ left out of the bulk, wrapped onto the box of Λ, each at
    /// the least depth d with support ⊆ ∂_dΛ.
    fn periodic_closure(&self, lam: &Region) -> Result<BoundaryCondition> {
        self.check_region(lam)?;
        let dim = self.geometry.dim();
        let lo: Vec<i64> = (0..dim).map(|k| lam.iter().map(|s| s.coords[k]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..dim).map(|k| lam.iter().map(|s| s.coords[k]).max().unwrap()).collect();
        let volume: i64 = lo.iter().zip(&hi).map(|(a, b)| b - a + 1).product();
        if volume as usize != lam.len() {
            return Err(Error::domain("periodic closure needs Λ to be a full box"));
        }
        let wrap = |s: &Site| {
            Site::new(
                (0..dim)
                    .map(|k| lo[k] + (s.coords[k] - lo[k]).rem_euclid(hi[k] - lo[k] + 1))
                    .collect::<Vec<_>>(),
            )
        };
        let bulk = self.bulk_terms(lam)?;
        let max_depth = self.geometry.diameter(lam) as usize + 1;
        let mut terms = Vec::new();
        for u in lam.iter() {
            for t in (self.bulk)(u) {
                if bulk.contains(&t) {
                    continue;
                }
                let wrapped: Vec<Site> = t.sites().iter().map(wrap).collect();
                let mut uniq = wrapped.clone();
                uniq.sort();
                uniq.dedup();
                if uniq.len() != wrapped.len() {
                    return Err(Error::domain(format!(
                        "term at {} wraps onto itself on a box of this size",
                        t.center()
                    )));
                }
                let support = Region::new(wrapped.iter().cloned());
                let mut depth = None;
                for d in 0..=max_depth {
                    if support.is_subset(&self.geometry.boundary_layer(lam, d)?) {
                        depth = Some(d);
                        break;
                    }
                }
                let depth = depth.unwrap_or(max_depth);
                terms.push((depth, t.relocated(wrapped)));
            }
        }
        Ok(BoundaryCondition { terms })
    }

    pub fn assemble_open_liouvillian(&self, lam: &Region) -> Result<Liouvillian> {
        sum_liouvillian(&self.bulk_terms(lam)?, lam, self.local_dim)
    }

    /// L_Λ = Σ_{b_u(r) ⊆ Λ} L_u(r).
    pub fn assemble_open(&self, lam: &Region) -> Result<SuperOp> {
        self.check_dim(lam)?;
        sum_superop(&self.bulk_terms(lam)?, lam, self.local_dim)
    }

    /// Truncation to A, identical to open assembly on A.
    pub fn truncate(&self, a: &Region) -> Result<SuperOp> {
        self.assemble_open(a)
    }

    fn closed_terms(&self, lam: &Region) -> Result<Vec<LocalTerm>> {
        let mut terms = self.bulk_terms(lam)?;
        terms.extend(self.boundary_condition(lam)?.terms.into_iter().map(|t| t.1));
        Ok(terms)
    }

    pub fn assemble_closed_liouvillian(&self, lam: &Region) -> Result<Liouvillian> {
        sum_liouvillian(&self.closed_terms(lam)?, lam, self.local_dim)
    }

    /// L^Λ̄ = L_Λ + Σ_d N_d.
    pub fn assemble_closed(&self, lam: &Region) -> Result<SuperOp> {
        self.check_dim(lam)?;
        sum_superop(&self.closed_terms(lam)?, lam, self.local_dim)
    }
}

/// Perturbation E = Σ E_u(r), scaled by ε.
#[derive(Clone, Debug)]
pub struct Perturbation {
    terms: Vec<LocalTerm>,
    pub epsilon: f64,
    pub profile: DecayProfile,
}

impl Perturbation {
    /// Terms are unit-scale; each must satisfy ‖E_u(r)‖ ≤ e(r).
    pub fn new(terms: Vec<LocalTerm>, epsilon: f64, profile: DecayProfile) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::domain("epsilon must be finite and non-negative"));
        }
        profile.validate()?;
        for t in &terms {
            if !t.is_perturbation() {
                return Err(Error::Validation("perturbation terms must be built as perturbations".into()));
            }
            let allowance = profile.eval(t.radius());
            if t.cb_bound() > allowance * (1.0 + 1e-9) {
                let est = diamond_norm_estimate(&t.superop()?, &AscentOptions::default().with_restarts(8)).lower;
                if est > allowance * (1.0 + 1e-6) {
                    return Err(Error::Validation(format!(
                        "perturbation term at {} has norm {est:.6} above e({}) = {allowance:.6}",
                        t.center(),
                        t.radius()
                    )));
                }
            }
        }
        Ok(Perturbation {
            terms,
            epsilon,
            profile,
        })
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Perturbation::new(self.terms.clone(), epsilon, self.profile)
    }

    fn check_inside(&self, lam: &Region) -> Result<()> {
        for t in &self.terms {
            if !t.support().is_subset(lam) {
                return Err(Error::domain(format!("perturbation term at {} leaves Λ", t.center())));
            }
        }
        Ok(())
    }

    pub fn superop_on(&self, lam: &Region, local_dim: usize) -> Result<SuperOp> {
        self.check_inside(lam)?;
        Ok(sum_superop(&self.terms, lam, local_dim)?.scaled(self.epsilon))
    }

    pub fn liouvillian_on(&self, lam: &Region, local_dim: usize) -> Result<Liouvillian> {
        self.check_inside(lam)?;
        Ok(sum_liouvillian(&self.terms, lam, local_dim)?.scaled(self.epsilon))
    }
}

/// base + ε Σ E_u(r) on Λ.
pub fn apply_perturbation(base: &SuperOp, p: &Perturbation, lam: &Region, local_dim: usize) -> Result<SuperOp> {
    let e = p.superop_on(lam, local_dim)?;
    let out = base.add(&e)?;
    let defect = e.trace_annihilation_residual();
    if defect > 1e-9 * e.matrix().norm_l2().max(1.0) {
        return Err(Error::Validation(format!("perturbation does not annihilate the trace ({defect:.3e})")));
    }
    Ok(out)
}

pub fn apply_perturbation_liouvillian(
    base: Liouvillian,
    p: &Perturbation,
    lam: &Region,
    local_dim: usize,
) -> Result<Liouvillian> {
    base.plus(&p.liouvillian_on(lam, local_dim)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractivityProbe {
    pub t: f64,
    pub min_choi_eigenvalue: f64,
    pub trace_defect: f64,
    pub ok: bool,
}

/// Checks that exp(tL) is CPTP on a grid of times (default {0.1, 1, 10}).
pub fn probe_contractivity(gen: &SuperOp, ts: &[f64]) -> Vec<ContractivityProbe> {
    let d = gen.dim() as f64;
    ts.iter()
        .map(|&t| {
            let e = gen.exp(t);
            let choi = e.choi();
            let min = crate::linalg::dense::min_eigenvalue(choi.matrix.as_ref());
            let trace_defect = {
                let probe = e.dual();
                let one = probe.apply(crate::linalg::dense::eye(gen.dim()).as_ref());
                (one - crate::linalg::dense::eye(gen.dim())).norm_max()
            };
            ContractivityProbe {
                t,
                min_choi_eigenvalue: min,
                trace_defect,
                ok: min >= -1e-9 * d && trace_defect <= 1e-10 * d.max(1.0),
            }
        })
        .collect()
}

pub const DEFAULT_PROBE_TIMES: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Clone, Debug, Serialize)]
pub struct StrengthEstimate {
    pub j: f64,
    /// Largest term norm found at each sampled radius.
    pub per_radius: Vec<(usize, f64)>,
    pub profile: Option<ProfileFit>,
}

/// J = max diamond-norm estimate over the terms produced at `sites`, with a
/// decay-class fit of the per-radius maxima normalised by J.
pub fn strength_estimate(family: &UniformFamily, sites: &[Site], opts: &AscentOptions) -> Result<StrengthEstimate> {
    let mut per_radius: Vec<(usize, f64)> = Vec::new();
    for u in sites {
        for t in (family.bulk)(u) {
            let norm = diamond_norm_estimate(&t.superop()?, opts).lower;
            match per_radius.iter_mut().find(|p| p.0 == t.radius()) {
                Some(p) => p.1 = p.1.max(norm),
                None => per_radius.push((t.radius(), norm)),
            }
        }
    }
    per_radius.sort_by_key(|p| p.0);
    let j = per_radius.iter().map(|p| p.1).fold(0.0, f64::max);
    let profile = if j > 0.0 {
        let normalised: Vec<(usize, f64)> = per_radius.iter().map(|&(r, v)| (r, v / j)).collect();
        Some(fit_profile(&normalised)?)
    } else {
        None
    };
    Ok(StrengthEstimate { j, per_radius, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::{from_real, ketbra, kron, re, scale};
    use crate::linalg::{embed_superop, from_gkls, Generator, Gkls, Layout};
    use crate::model::term::TermGenerator;
    use faer::Mat;

    fn ad_gkls() -> Gkls {
        Gkls::new(Mat::zeros(2, 2), vec![ketbra(2, 0, 1)]).unwrap()
    }

    fn xx_gkls() -> Gkls {
        let x = from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let mut jump = kron(ketbra(2, 0, 1).as_ref(), ketbra(2, 1, 1).as_ref());
        jump = scale(jump.as_ref(), re(0.5));
        Gkls::new(kron(x.as_ref(), x.as_ref()), vec![jump]).unwrap()
    }

    fn nn_terms() -> Vec<LocalTerm> {
        vec![
            LocalTerm::on_site(Site::at(0), ad_gkls()).unwrap(),
            LocalTerm::new(Site::at(0), 1, vec![Site::at(0), Site::at(1)], TermGenerator::Gkls(xx_gkls()), 2).unwrap(),
        ]
    }

    fn family(n: usize, boundary: BoundaryRule) -> UniformFamily {
        UniformFamily::translation_invariant(
            LatticeGeometry::chain(n),
            2,
            nn_terms(),
            boundary,
            Strength {
                j: 4.0,
                profile: DecayProfile::FiniteRange { range: 1 },
            },
        )
        .unwrap()
    }

    fn close(a: &SuperOp, b: &SuperOp) -> bool {
        (a.matrix() - b.matrix()).norm_max() < 1e-12
    }

    #[test]
    fn single_site_keeps_only_on_site_terms() {
        let f = family(4, BoundaryRule::Open);
        let lam = Region::interval(2, 2);
        let terms = f.bulk_terms(&lam).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].radius(), 0);
        let l = f.assemble_open(&lam).unwrap();
        assert!(close(&l, &ad_gkls().to_superop().unwrap()));
    }

    #[test]
    fn empty_rule_gives_zero_map() {
        let f = UniformFamily::new(
            LatticeGeometry::chain(3),
            2,
            Arc::new(|_| Vec::new()),
            BoundaryRule::Open,
            Strength {
                j: 0.0,
                profile: DecayProfile::FiniteRange { range: 0 },
            },
        )
        .unwrap();
        let l = f.assemble_open(&Region::interval(0, 2)).unwrap();
        assert!(close(&l, &SuperOp::zero(8)));
    }

    #[test]
    fn open_chain_matches_hand_assembly() {
        let f = family(4, BoundaryRule::Open);
        let lam = Region::interval(0, 3);
        let layout = Layout::uniform(4, 2);
        let ad = ad_gkls().to_superop().unwrap();
        let xx = xx_gkls().to_superop().unwrap();
        let mut hand = SuperOp::zero(16);
        for x in 0..4 {
            hand = hand.add(&embed_superop(&ad, &[x], &layout).unwrap()).unwrap();
        }
        // bonds (0,1), (1,2), (2,3) have clipped balls inside Λ; (3,4) leaves the lattice
        for x in 0..3 {
            hand = hand.add(&embed_superop(&xx, &[x, x + 1], &layout).unwrap()).unwrap();
        }
        let l = f.assemble_open(&lam).unwrap();
        assert!(close(&l, &hand));
        assert!(l.is_valid_lindbladian(1e-9).overall);
        assert!(close(&f.truncate(&lam).unwrap(), &l));
        // on a sub-interval, the literal ball rule drops bonds whose ball pokes out
        let sub = Region::interval(1, 2);
        let terms = f.bulk_terms(&sub).unwrap();
        assert_eq!(terms.iter().filter(|t| t.radius() == 1).count(), 0);
        // open boundary rule adds nothing
        assert!(close(&f.assemble_closed(&lam).unwrap(), &l));
        let sparse = f.assemble_open_liouvillian(&lam).unwrap().to_superop().unwrap();
        assert!((sparse.matrix() - l.matrix()).norm_max() < 1e-12);
    }

    #[test]
    fn periodic_ring_matches_torus_assembly() {
        let f = family(4, BoundaryRule::Periodic);
        let lam = Region::interval(0, 3);
        let layout = Layout::uniform(4, 2);
        let ad = ad_gkls().to_superop().unwrap();
        let xx = xx_gkls().to_superop().unwrap();
        let mut torus = SuperOp::zero(16);
        for x in 0..4 {
            torus = torus.add(&embed_superop(&ad, &[x], &layout).unwrap()).unwrap();
            torus = torus.add(&embed_superop(&xx, &[x, (x + 1) % 4], &layout).unwrap()).unwrap();
        }
        let closed = f.assemble_closed(&lam).unwrap();
        assert!(close(&closed, &torus));
        let bc = f.boundary_condition(&lam).unwrap();
        assert_eq!(bc.terms.len(), 1);
        assert_eq!(bc.terms[0].0, 1);
        let audit = bc.audit(&f.geometry, &lam, &f.strength).unwrap();
        assert!(audit.iter().all(|a| a.ok), "{audit:?}");
        // cyclic shift leaves the closed generator invariant
        let shift = Mat::from_fn(16, 16, |i, j| {
            let digits: Vec<usize> = (0..4).map(|k| (j >> (3 - k)) & 1).collect();
            let rotated: usize = (0..4).fold(0, |acc, k| (acc << 1) | digits[(k + 3) % 4]);
            if i == rotated {
                re(1.0)
            } else {
                re(0.0)
            }
        });
        let conj = SuperOp::sandwich(shift.as_ref(), crate::linalg::dense::dagger(shift.as_ref()).as_ref()).unwrap();
        let shifted = conj.compose(&closed).unwrap().compose(&conj.dual()).unwrap();
        assert!(close(&shifted, &closed));
    }

    #[test]
    fn bulk_terms_do_not_depend_on_system_size() {
        let small = family(5, BoundaryRule::Open);
        let large = family(9, BoundaryRule::Open);
        let interior = Region::interval(1, 3);
        let a = small.bulk_terms(&interior).unwrap();
        let b = large.bulk_terms(&interior).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perturbation_is_linear_and_checked() {
        let f = family(2, BoundaryRule::Open);
        let lam = Region::interval(0, 1);
        let base = f.assemble_open(&lam).unwrap();
        let h = from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = from_gkls(scale(h.as_ref(), re(0.5)), vec![]).unwrap();
        let term = LocalTerm::perturbation(Site::at(1), 0, vec![Site::at(1)], e, 2).unwrap();
        let profile = DecayProfile::FiniteRange { range: 0 };
        let p1 = Perturbation::new(vec![term.clone()], 0.1, profile).unwrap();
        let p2 = p1.with_epsilon(0.2).unwrap();
        let d1 = apply_perturbation(&base, &p1, &lam, 2).unwrap().sub(&base).unwrap();
        let d2 = apply_perturbation(&base, &p2, &lam, 2).unwrap().sub(&base).unwrap();
        assert!((d2.matrix() - d1.matrix().clone() * 2.0).norm_max() < 1e-14);
        let p0 = p1.with_epsilon(0.0).unwrap();
        assert!(close(&apply_perturbation(&base, &p0, &lam, 2).unwrap(), &base));
        let probe = probe_contractivity(&apply_perturbation(&base, &p1, &lam, 2).unwrap(), &DEFAULT_PROBE_TIMES);
        assert!(probe.iter().all(|p| p.ok), "{probe:?}");
        // a trace-changing perturbation is refused
        let bad = SuperOp::identity(2);
        assert!(LocalTerm::perturbation(Site::at(0), 0, vec![Site::at(0)], bad, 2).is_err());
        // a term larger than e(r) is refused
        let big = LocalTerm::perturbation(Site::at(0), 0, vec![Site::at(0)], from_gkls(scale(h.as_ref(), re(3.0)), vec![]).unwrap(), 2).unwrap();
        assert!(Perturbation::new(vec![big], 0.1, profile).is_err());
        // terms outside Λ are refused
        let outside = Perturbation::new(vec![term], 0.1, profile).unwrap();
        assert!(apply_perturbation(&f.assemble_open(&Region::interval(0, 0)).unwrap(), &outside, &Region::interval(0, 0), 2).is_err());
    }

    #[test]
    fn strength_estimates() {
        let opts = AscentOptions::default().with_restarts(8);
        // dephasing-type map ρ ↦ ZρZ − ρ has diamond norm 2
        let z = from_real(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let g = Gkls::new(Mat::zeros(2, 2), vec![z]).unwrap();
        let single = UniformFamily::translation_invariant(
            LatticeGeometry::chain(1),
            2,
            vec![LocalTerm::on_site(Site::at(0), g).unwrap()],
            BoundaryRule::Open,
            Strength {
                j: 2.0,
                profile: DecayProfile::FiniteRange { range: 0 },
            },
        )
        .unwrap();
        let est = strength_estimate(&single, &[Site::at(0)], &opts).unwrap();
        assert!((est.j - 2.0).abs() < 1e-8, "{est:?}");
        assert_eq!(est.profile.unwrap().profile, DecayProfile::FiniteRange { range: 0 });

        // terms of radius r scaled by 2^{-r}
        let base = ad_gkls().to_superop().unwrap();
        let rule: BulkRule = Arc::new(move |u: &Site| {
            (0..4)
                .map(|r| {
                    LocalTerm::new(
                        u.clone(),
                        r,
                        vec![u.clone()],
                        TermGenerator::Dense(base.scaled(0.5f64.powi(r as i32))),
                        2,
                    )
                    .unwrap()
                })
                .collect()
        });
        let decaying = UniformFamily::new(
            LatticeGeometry::chain(1),
            2,
            rule,
            BoundaryRule::Open,
            Strength {
                j: 2.0,
                profile: DecayProfile::Exponential { mu: 0.5 },
            },
        )
        .unwrap();
        let est = strength_estimate(&decaying, &[Site::at(0)], &opts).unwrap();
        match est.profile.unwrap().profile {
            DecayProfile::Exponential { mu } => assert!((mu - 2f64.ln()).abs() < 0.05 * 2f64.ln()),
            other => panic!("{other:?}"),
        }

        let zero = UniformFamily::new(
            LatticeGeometry::chain(1),
            2,
            Arc::new(|_| Vec::new()),
            BoundaryRule::Open,
            Strength {
                j: 0.0,
                profile: DecayProfile::FiniteRange { range: 0 },
            },
        )
        .unwrap();
        assert_eq!(strength_estimate(&zero, &[Site::at(0)], &opts).unwrap().j, 0.0);
    }

    #[test]
    fn dimension_ceiling_is_a_resource_error() {
        let f = family(8, BoundaryRule::Open);
        assert!(matches!(
            f.assemble_open(&Region::interval(0, 7)),
            Err(Error::Resource { .. })
        ));
        assert!(f.assemble_open_liouvillian(&Region::interval(0, 7)).is_ok());
    }
}
