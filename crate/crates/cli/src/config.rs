use std::path::{Path, PathBuf};

use secbid::securities::FamilySpec;
use secbid::{ModelSpec, SecurityKind, Tolerances, UtilityFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One experiment, read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_investment")]
    pub investment: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default)]
    pub utility: UtilityFunction,
    #[serde(default = "default_families")]
    pub families: Vec<FamilySpec>,
    #[serde(default)]
    pub grids: GridSizes,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub monte_carlo: MonteCarlo,
    #[serde(default)]
    pub figures: Figures,
    #[serde(default)]
    pub lemmas: Lemmas,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSizes {
    /// Signal grid of tabulated bid curves.
    pub signal: usize,
    /// Value grid of structural and plot checks.
    pub value: usize,
    /// Points per axis in dependence checks.
    pub dependence: usize,
    /// Bids per family in steepness checks.
    pub bid: usize,
    /// Deviation bids in best-response checks.
    pub deviation: usize,
    /// Signals per axis of the dominance grid.
    pub dominance: usize,
    /// Signals at which best responses are checked.
    pub best_response: usize,
}

impl Default for GridSizes {
    fn default() -> Self {
        Self {
            signal: 201,
            value: 2001,
            dependence: 401,
            bid: 101,
            deviation: 101,
            dominance: 21,
            best_response: 21,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarlo {
    /// Signal pairs drawn per family; zero disables the cross-check.
    pub draws: usize,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self { draws: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Figures {
    pub y1: f64,
    pub z1: f64,
}

impl Default for Figures {
    fn default() -> Self {
        Self { y1: 0.8, z1: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemmas {
    pub trials: usize,
}

impl Default for Lemmas {
    fn default() -> Self {
        Self { trials: 1000 }
    }
}

fn default_investment() -> f64 {
    0.2
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_model() -> ModelSpec {
    ModelSpec::Example1 {}
}

fn default_families() -> Vec<FamilySpec> {
    [
        SecurityKind::Cash,
        SecurityKind::Debt,
        SecurityKind::Equity,
        SecurityKind::CallOption,
    ]
    .into_iter()
    .map(FamilySpec::standard)
    .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7
investment = 0.15
out_dir = "results"

[model]
kind = "linear_tilt"
n_buyers = 3
kappa = 0.5

[utility]
kind = "cara"
risk_aversion = 2.0

[[families]]
kind = "debt"

[[families]]
kind = "equity"
name = "half_equity"
bid_hi = 0.5

[grids]
signal = 51
dominance = 11

[tolerances]
quadrature = 1e-9

[monte_carlo]
draws = 1000
"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::parse(FULL).unwrap();
        assert_eq!(cfg.grids.signal, 51);
        assert_eq!(cfg.grids.value, 2001);
        assert_eq!(cfg.tolerances.root, 1e-10);
        assert_eq!(cfg.families[1].bid_hi, Some(0.5));
        let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);

        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&d.to_toml().unwrap()).unwrap(), d);
        assert_eq!(d.families.len(), 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in [
            "sead = 1",
            "[grids]\nsignals = 3",
            "[model]\nkind = \"example1\"\nkappa = 1.0",
            "[[families]]\nkind = \"debt\"\ncap = 1.0",
            "[utility]\nkind = \"crra\"",
            "[utility]\nkind = \"linear\"\nrisk_aversion = 2.0",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(bad), Err(CliError::Config(_))),
                "{bad}"
            );
        }
    }
}
