//! Local interaction terms L_u(r): a generator on an ordered list of sites
//! inside the cube b_u(r).

use crate::error::{Error, Result};
use crate::lattice::{Region, Site};
use crate::linalg::dense::CMat;
use crate::linalg::superop::{Factor, Sandwich, STRUCTURE_TOL};
use crate::linalg::{embed_operator, embed_superop, Gkls, Layout, Liouvillian, SuperOp};

/// Relative cut-off for operator-Schmidt components kept when embedding dense terms.
const SCHMIDT_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub enum TermGenerator {
    Gkls(Gkls),
    Dense(SuperOp),
}

impl TermGenerator {
    pub fn dim(&self) -> usize {
        match self {
            TermGenerator::Gkls(g) => g.dim(),
            TermGenerator::Dense(s) => s.dim(),
        }
    }

    pub fn to_superop(&self) -> Result<SuperOp> {
        match self {
            TermGenerator::Gkls(g) => g.to_superop(),
            TermGenerator::Dense(s) => Ok(s.clone()),
        }
    }

    /// Certified upper bound on the cb 1→1 norm.
    pub fn cb_bound(&self) -> f64 {
        match self {
            TermGenerator::Gkls(g) => {
                let dense = g.to_superop().map(|s| s.cb_norm_upper_bound());
                dense.map_or(g.cb_norm_upper_bound(), |b| b.min(g.cb_norm_upper_bound()))
            }
            TermGenerator::Dense(s) => s.cb_norm_upper_bound(),
        }
    }

    fn scaled(&self, s: f64) -> TermGenerator {
        TermGenerator::Dense(
            self.to_superop()
                .expect("local terms are small")
                .scaled(s),
        )
    }
}

#[derive(Clone, Debug)]
pub struct LocalTerm {
    center: Site,
    radius: usize,
    /// Tensor-factor order of the generator.
    sites: Vec<Site>,
    generator: TermGenerator,
    local_dim: usize,
    perturbation_only: bool,
}

fn chebyshev(a: &Site, b: &Site) -> u64 {
    a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| x.abs_diff(*y))
        .max()
        .unwrap_or(0)
}

impl LocalTerm {
    fn build(
        center: Site,
        radius: usize,
        sites: Vec<Site>,
        generator: TermGenerator,
        local_dim: usize,
        perturbation_only: bool,
    ) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::domain("a local term needs at least one site"));
        }
        let mut sorted = sites.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::domain("term sites must be distinct"));
        }
        for s in &sites {
            if s.coords.len() != center.coords.len() {
                return Err(Error::domain("term site dimension differs from its center"));
            }
            if chebyshev(s, &center) > radius as u64 {
                return Err(Error::domain(format!(
                    "site {s} lies outside the ball of radius {radius} around {center}"
                )));
            }
        }
        let expected = local_dim
            .checked_pow(sites.len() as u32)
            .ok_or_else(|| Error::domain("term dimension overflows"))?;
        if generator.dim() != expected {
            return Err(Error::domain(format!(
                "generator acts on dimension {}, expected {expected} for {} sites",
                generator.dim(),
                sites.len()
            )));
        }
        let term = LocalTerm {
            center,
            radius,
            sites,
            generator,
            local_dim,
            perturbation_only,
        };
        let op = term.generator.to_superop()?;
        if perturbation_only {
            let defect = op.trace_annihilation_residual();
            if defect > STRUCTURE_TOL * op.matrix().norm_l2().max(1.0) {
                return Err(Error::Validation(format!(
                    "perturbation term does not annihilate the trace (dual(E)(1) defect {defect:.3e})"
                )));
            }
        } else if !matches!(term.generator, TermGenerator::Gkls(_)) {
            let report = op.is_valid_lindbladian(1e-9);
            if !report.overall {
                return Err(Error::Validation(format!(
                    "term at {} is not a valid Lindbladian: {report:?}",
                    term.center
                )));
            }
        }
        Ok(term)
    }

    /// A Lindbladian term, checked for GKLS validity.
    pub fn new(
        center: Site,
        radius: usize,
        sites: Vec<Site>,
        generator: TermGenerator,
        local_dim: usize,
    ) -> Result<Self> {
        Self::build(center, radius, sites, generator, local_dim, false)
    }

    /// A perturbation term: only dual(E)(1) = 0 is required.
    pub fn perturbation(
        center: Site,
        radius: usize,
        sites: Vec<Site>,
        generator: SuperOp,
        local_dim: usize,
    ) -> Result<Self> {
        Self::build(
            center,
            radius,
            sites,
            TermGenerator::Dense(generator),
            local_dim,
            true,
        )
    }

    /// On-site GKLS term of radius 0.
    pub fn on_site(site: Site, gkls: Gkls) -> Result<Self> {
        let d = gkls.dim();
        Self::new(site.clone(), 0, vec![site], TermGenerator::Gkls(gkls), d)
    }

    pub fn center(&self) -> &Site {
        &self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn support(&self) -> Region {
        Region::new(self.sites.iter().cloned())
    }

    pub fn generator(&self) -> &TermGenerator {
        &self.generator
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn is_perturbation(&self) -> bool {
        self.perturbation_only
    }

    pub fn superop(&self) -> Result<SuperOp> {
        self.generator.to_superop()
    }

    pub fn cb_bound(&self) -> f64 {
        self.generator.cb_bound()
    }

    pub fn scaled(&self, s: f64) -> LocalTerm {
        LocalTerm {
            generator: self.generator.scaled(s),
            ..self.clone()
        }
    }

    /// The same term moved by `shift`.
    pub fn translated(&self, shift: &[i64]) -> LocalTerm {
        let mv = |s: &Site| Site::new(s.coords.iter().zip(shift).map(|(a, b)| a + b).collect::<Vec<_>>());
        LocalTerm {
            center: mv(&self.center),
            sites: self.sites.iter().map(mv).collect(),
            ..self.clone()
        }
    }

    /// The same generator acting on different sites (same order), keeping center and radius.
    pub(crate) fn relocated(&self, sites: Vec<Site>) -> LocalTerm {
        LocalTerm {
            sites,
            ..self.clone()
        }
    }

    fn positions_in(&self, system: &Region) -> Result<Vec<usize>> {
        self.sites
            .iter()
            .map(|s| {
                system
                    .position(s)
                    .ok_or_else(|| Error::domain(format!("term site {s} is outside the system")))
            })
            .collect()
    }

    /// The term as a generator on `system` (sites in region order).
    pub fn liouvillian_on(&self, system: &Region) -> Result<Liouvillian> {
        let layout = Layout::uniform(system.len(), self.local_dim);
        let positions = self.positions_in(system)?;
        let total = layout.total();
        let lift = |m: &CMat| -> Result<Factor> {
            Ok(Factor::from_matrix(embed_operator(m.as_ref(), &positions, &layout)?))
        };
        match &self.generator {
            TermGenerator::Gkls(g) => {
                let h = embed_operator(g.h.as_ref(), &positions, &layout)?;
                let jumps = g
                    .jumps
                    .iter()
                    .map(|l| embed_operator(l.as_ref(), &positions, &layout))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Gkls::new(h, jumps)?.liouvillian())
            }
            TermGenerator::Dense(op) => {
                let terms = op
                    .sandwich_terms(SCHMIDT_TOL)
                    .into_iter()
                    .map(|(s, a, b)| {
                        Ok(Sandwich {
                            coeff: crate::linalg::dense::re(s),
                            left: lift(&a)?,
                            right: lift(&b)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Liouvillian::from_terms(total, terms)
            }
        }
    }

    /// The term as a dense superoperator on `system`.
    pub fn superop_on(&self, system: &Region) -> Result<SuperOp> {
        let layout = Layout::uniform(system.len(), self.local_dim);
        crate::linalg::superop::check_dense_dim(layout.total())?;
        let positions = self.positions_in(system)?;
        embed_superop(&self.superop()?, &positions, &layout)
    }
}

/// Sum of term generators on `system`.
pub fn sum_liouvillian(terms: &[LocalTerm], system: &Region, local_dim: usize) -> Result<Liouvillian> {
    let layout = Layout::uniform(system.len(), local_dim);
    let mut acc = Liouvillian::zero(layout.total());
    for t in terms {
        if t.local_dim != local_dim {
            return Err(Error::domain("terms disagree on the local dimension"));
        }
        acc = acc.plus(&t.liouvillian_on(system)?)?;
    }
    Ok(acc)
}

/// Dense sum of term generators on `system`.
pub fn sum_superop(terms: &[LocalTerm], system: &Region, local_dim: usize) -> Result<SuperOp> {
    let layout = Layout::uniform(system.len(), local_dim);
    crate::linalg::superop::check_dense_dim(layout.total())?;
    let mut acc = SuperOp::zero(layout.total());
    for t in terms {
        if t.local_dim != local_dim {
            return Err(Error::domain("terms disagree on the local dimension"));
        }
        acc = acc.add(&t.superop_on(system)?)?;
    }
    Ok(acc)
}

impl PartialEq for LocalTerm {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center
            && self.radius == other.radius
            && self.sites == other.sites
            && self.local_dim == other.local_dim
            && self.perturbation_only == other.perturbation_only
            && match (self.superop(), other.superop()) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            }
    }
}
