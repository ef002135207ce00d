//! JSON model descriptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, Site};
use crate::linalg::dense::CMat;
use crate::linalg::{Gkls, SuperOp};

use super::family::{BoundaryRule, Perturbation, Strength, UniformFamily};
use super::profile::DecayProfile;
use super::term::{LocalTerm, TermGenerator};

const MAX_LOCAL_DIM: usize = 16;

/// One term, either GKLS data or a dense superoperator in column-stacking convention.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub center: Site,
    #[serde(default)]
    pub radius: usize,
    pub sites: Vec<Site>,
    #[serde(default, with = "opt_cmat", skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<CMat>,
    #[serde(default, with = "vec_cmat", skip_serializing_if = "Vec::is_empty")]
    pub jumps: Vec<CMat>,
    #[serde(default, with = "opt_cmat", skip_serializing_if = "Option::is_none")]
    pub superop: Option<CMat>,
}

mod opt_cmat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match m {
            Some(m) => crate::linalg::codec::matrix_to_json(m).serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMat>, D::Error> {
        let v = Option::<serde_json::Value>::deserialize(d)?;
        v.map(|v| crate::linalg::codec::matrix_from_json(&v).map_err(serde::de::Error::custom))
            .transpose()
    }
}

mod vec_cmat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<serde_json::Value> = m.iter().map(crate::linalg::codec::matrix_to_json).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let v = Vec::<serde_json::Value>::deserialize(d)?;
        v.iter()
            .map(|v| crate::linalg::codec::matrix_from_json(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl TermSpec {
    fn square(m: &CMat, what: &str) -> Result<usize> {
        if m.nrows() != m.ncols() {
            return Err(Error::domain(format!("{what} must be square")));
        }
        Ok(m.nrows())
    }

    /// Builds the term; `perturbation` relaxes validity to trace annihilation.
    pub fn build(&self, local_dim: usize, perturbation: bool) -> Result<LocalTerm> {
        let generator = match (&self.superop, &self.hamiltonian, self.jumps.is_empty()) {
            (Some(m), None, true) => {
                let n = Self::square(m, "superop")?;
                let d = (n as f64).sqrt().round() as usize;
                if d * d != n {
                    return Err(Error::domain("superop size is not a square"));
                }
                TermGenerator::Dense(SuperOp::new(d, m.clone())?)
            }
            (None, h, _) => {
                let d = match (h, self.jumps.first()) {
                    (Some(h), _) => Self::square(h, "hamiltonian")?,
                    (None, Some(l)) => Self::square(l, "jump")?,
                    (None, None) => return Err(Error::domain("term has neither hamiltonian, jumps nor superop")),
                };
                let h = h.clone().unwrap_or_else(|| crate::linalg::dense::zeros(d, d));
                TermGenerator::Gkls(Gkls::new(h, self.jumps.clone())?)
            }
            _ => return Err(Error::domain("a term gives either GKLS data or a superop, not both")),
        };
        if perturbation {
            let op = generator.to_superop()?;
            LocalTerm::perturbation(self.center.clone(), self.radius, self.sites.clone(), op, local_dim)
        } else {
            LocalTerm::new(self.center.clone(), self.radius, self.sites.clone(), generator, local_dim)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    /// A built-in family resolved by name.
    Named(String),
    /// Translation-invariant family from terms centred at the origin.
    Inline { terms: Vec<TermSpec> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySpec {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub profile: Option<DecayProfile>,
    /// Site-anchored terms (not translated).
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: FamilySpec,
    pub geometry: LatticeGeometry,
    #[serde(default = "default_local_dim")]
    pub local_dim: usize,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub strength: Option<Strength>,
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
}

fn default_local_dim() -> usize {
    2
}

/// Parses and shape-checks a model description.
pub fn parse_model(bytes: &[u8]) -> Result<ModelSpec> {
    let spec: ModelSpec = serde_json::from_slice(bytes)?;
    if !(2..=MAX_LOCAL_DIM).contains(&spec.local_dim) {
        return Err(Error::domain(format!(
            "local dimension must lie in 2..={MAX_LOCAL_DIM}, got {}",
            spec.local_dim
        )));
    }
    if let Some(s) = &spec.strength {
        s.profile.validate()?;
    }
    if let Some(p) = &spec.perturbation {
        if !(p.epsilon.is_finite() && p.epsilon >= 0.0) {
            return Err(Error::domain("epsilon must be finite and non-negative"));
        }
    }
    let dim = spec.geometry.dim();
    let terms = match &spec.family {
        FamilySpec::Inline { terms } => terms.iter().collect::<Vec<_>>(),
        FamilySpec::Named(_) => Vec::new(),
    };
    let extra = spec.perturbation.iter().flat_map(|p| p.terms.iter());
    for t in terms.into_iter().chain(extra) {
        if t.center.coords.len() != dim || t.sites.iter().any(|s| s.coords.len() != dim) {
            return Err(Error::domain("term coordinates do not match the lattice dimension"));
        }
    }
    Ok(spec)
}

impl ModelSpec {
    fn boundary_rule(&self) -> BoundaryRule {
        match self.boundary {
            BoundarySpec::Open => BoundaryRule::Open,
            BoundarySpec::Periodic => BoundaryRule::Periodic,
        }
    }

    /// Builds the family; named families go through `resolve`.
    pub fn family(
        &self,
        resolve: &dyn Fn(&str, &ModelSpec) -> Result<UniformFamily>,
    ) -> Result<UniformFamily> {
        match &self.family {
            FamilySpec::Named(name) => resolve(name, self),
            FamilySpec::Inline { terms } => {
                let built = terms
                    .iter()
                    .map(|t| t.build(self.local_dim, false))
                    .collect::<Result<Vec<_>>>()?;
                let strength = match self.strength {
                    Some(s) => s,
                    None => Strength {
                        j: built.iter().map(|t| t.cb_bound()).fold(0.0, f64::max),
                        profile: DecayProfile::FiniteRange {
                            range: built.iter().map(|t| t.radius()).max().unwrap_or(0),
                        },
                    },
                };
                UniformFamily::translation_invariant(
                    self.geometry.clone(),
                    self.local_dim,
                    built,
                    self.boundary_rule(),
                    strength,
                )
            }
        }
    }

    pub fn perturbation(&self) -> Result<Option<Perturbation>> {
        let Some(p) = &self.perturbation else {
            return Ok(None);
        };
        let terms = p
            .terms
            .iter()
            .map(|t| t.build(self.local_dim, true))
            .collect::<Result<Vec<_>>>()?;
        let profile = p.profile.unwrap_or(DecayProfile::FiniteRange {
            range: terms.iter().map(|t| t.radius()).max().unwrap_or(0),
        });
        let profile_scale = terms.iter().map(|t| t.cb_bound() / profile.eval(t.radius()).max(1e-300)).fold(1.0, f64::max);
        // unit-normalise so that each term obeys ‖E_u(r)‖ ≤ e(r); ε absorbs the scale
        let scaled: Vec<LocalTerm> = terms.iter().map(|t| t.scaled(1.0 / profile_scale)).collect();
        Perturbation::new(scaled, p.epsilon * profile_scale, profile).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Region;

    const CHAIN: &str = r#"{
        "family": {"terms": [
            {"center": [0], "sites": [[0]], "jumps": [[[0, 1], [0, 0]]]},
            {"center": [0], "radius": 1, "sites": [[0], [1]],
             "hamiltonian": [[0,0,0,0],[0,0,1,0],[0,1,0,0],[0,0,0,0]]}
        ]},
        "geometry": {"dim": 1, "extent": [3]},
        "boundary": "periodic"
    }"#;

    fn no_names(name: &str, _: &ModelSpec) -> Result<UniformFamily> {
        Err(Error::domain(format!("unknown family {name}")))
    }

    #[test]
    fn inline_family_parses_and_assembles() {
        let spec = parse_model(CHAIN.as_bytes()).unwrap();
        let fam = spec.family(&no_names).unwrap();
        let lam = Region::interval(0, 2);
        let open = fam.assemble_open(&lam).unwrap();
        let closed = fam.assemble_closed(&lam).unwrap();
        assert!(open.is_valid_lindbladian(1e-9).overall);
        assert!(closed.is_valid_lindbladian(1e-9).overall);
        assert!((open.matrix() - closed.matrix()).norm_max() > 0.1);
    }

    #[test]
    fn malformed_models_rejected() {
        for bad in [
            "{}",
            r#"{"family": "x", "geometry": {"dim": 1, "extent": [0]}}"#,
            r#"{"family": "x", "geometry": {"dim": 1, "extent": [2]}, "local_dim": 1}"#,
            r#"{"family": {"terms": [{"center": [0, 0], "sites": [[0]]}]}, "geometry": {"dim": 1, "extent": [2]}}"#,
            r#"{"family": "x", "geometry": {"dim": 1, "extent": [2]}, "colour": 3}"#,
        ] {
            assert!(parse_model(bad.as_bytes()).is_err(), "{bad}");
        }
        let spec = parse_model(br#"{"family": "x", "geometry": {"dim": 1, "extent": [2]}}"#).unwrap();
        assert!(spec.family(&no_names).is_err());
    }

    #[test]
    fn perturbation_terms_are_normalised() {
        let json = r#"{
            "family": {"terms": [{"center": [0], "sites": [[0]], "jumps": [[[0, 1], [0, 0]]]}]},
            "geometry": {"dim": 1, "extent": [2]},
            "perturbation": {"epsilon": 0.1, "terms": [
                {"center": [1], "sites": [[1]], "hamiltonian": [[0, 1], [1, 0]]}
            ]}
        }"#;
        let spec = parse_model(json.as_bytes()).unwrap();
        let p = spec.perturbation().unwrap().unwrap();
        let lam = Region::interval(0, 1);
        let e = p.superop_on(&lam, 2).unwrap();
        // ε·(unit term) reproduces 0.1·(Hamiltonian part)
        let direct = spec.perturbation.as_ref().unwrap().terms[0]
            .build(2, true)
            .unwrap()
            .superop_on(&lam)
            .unwrap()
            .scaled(0.1);
        assert!((e.matrix() - direct.matrix()).norm_max() < 1e-12);
    }
}
