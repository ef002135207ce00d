//! Experiment configuration files.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use lindstab_core::bounds::LrClass;
use lindstab_core::lattice::Site;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    Contraction,
    GrmFit,
    Stability,
    LrVerify,
    LocalizationVerify,
    Ltqo,
    Correlations,
    Glauber,
    Preset,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateChoice {
    #[default]
    HeatBath,
    Metropolis,
}

impl RateChoice {
    pub fn label(self) -> &'static str {
        match self {
            RateChoice::HeatBath => "heat-bath",
            RateChoice::Metropolis => "metropolis",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Inline model document; validated when the experiment runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Spin potential for the glauber experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Value>,
    /// Chain lengths for size sweeps (grm-fit, glauber).
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Margins ℓ, radii r or distances, depending on the experiment.
    #[serde(default)]
    pub s_grid: Vec<f64>,
    /// Region A (observable support, LTQO region, first correlation region).
    #[serde(default)]
    pub region: Vec<Site>,
    /// Region B for correlations; probe site for lr-verify.
    #[serde(default)]
    pub region_b: Vec<Site>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub lr_class: Option<LrClass>,
    #[serde(default)]
    pub mu: Option<f64>,
    /// Dephasing rate of the glauber embedding.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub rates: RateChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_restarts() -> usize {
    8
}

pub const MAX_RESTARTS: usize = 4096;

/// Parses and schema-checks a configuration. Errors carry line and column.
pub fn parse_config(bytes: &[u8]) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = serde_json::from_slice(bytes).map_err(|e| CliError::Schema {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let field = |name: &str, message: &str| CliError::Field { field: name.to_owned(), message: message.to_owned() };
    match cfg.experiment {
        ExperimentKind::Preset if cfg.preset.is_none() => return Err(field("preset", "required when experiment is \"preset\"")),
        ExperimentKind::Glauber if cfg.potential.is_none() => return Err(field("potential", "required for the glauber experiment")),
        ExperimentKind::Preset | ExperimentKind::Glauber => {}
        _ if cfg.model.is_none() => return Err(field("model", "required for this experiment")),
        _ => {}
    }
    if cfg.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(field("t_grid", "times must be finite and non-negative"));
    }
    if cfg.t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(field("t_grid", "times must be ascending"));
    }
    if cfg.s_grid.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(field("s_grid", "entries must be finite and non-negative"));
    }
    if cfg.restarts == 0 || cfg.restarts > MAX_RESTARTS {
        return Err(field("restarts", "must lie in 1..=4096"));
    }
    for (name, v) in [("mu", cfg.mu), ("gamma", cfg.gamma)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(field(name, "must be finite and positive"));
            }
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config() {
        let cfg = parse_config(br#"{"experiment": "preset", "preset": "appendix-instability", "seed": 7}"#).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Preset);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.restarts, 8);
    }

    #[test]
    fn schema_errors_carry_positions() {
        match parse_config(b"{\n  \"experiment\": \"spectrum\",\n  \"bogus\": 1\n}") {
            Err(CliError::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config(b"{"), Err(CliError::Schema { .. })));
        assert!(matches!(parse_config(br#"{"experiment": "spectrum"}"#), Err(CliError::Field { .. })));
        assert!(matches!(
            parse_config(br#"{"experiment": "preset", "preset": "x", "t_grid": [2, 1]}"#),
            Err(CliError::Field { .. })
        ));
        assert!(matches!(
            parse_config(br#"{"experiment": "preset", "preset": "x", "restarts": 0}"#),
            Err(CliError::Field { .. })
        ));
    }
}
