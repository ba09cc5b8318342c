//! TOML experiment configuration: a `[sim]` block mirroring `SimConfig`
//! plus one optional block per experiment. Parsing is strict — unknown
//! keys are rejected — and dotted-key overrides (`--sim.epsilon=0.05`)
//! are applied to the raw TOML tree before deserialization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::SimConfig;
use crate::spectral::SobolevSpace;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub sim: SimConfig,
    pub output: OutputSection,
    pub moments: MomentsSection,
    pub modulus: ModulusSection,
    pub converge: ConvergeSection,
    pub ou_check: OuCheckSection,
    pub energy_check: EnergyCheckSection,
    pub strong_order: StrongOrderSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Also dump the simulated trajectory in the binary format.
    pub binary_trajectory: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "reports".into(), binary_trajectory: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsSection {
    pub epsilons: Vec<f64>,
    pub p: Vec<f64>,
    pub samples: usize,
}

impl Default for MomentsSection {
    fn default() -> Self {
        MomentsSection { epsilons: vec![0.0, 0.01, 0.1, 0.5], p: vec![2.0, 4.0], samples: 64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulusSection {
    pub deltas: Vec<f64>,
    pub space: SobolevSpace,
    pub samples: usize,
}

impl Default for ModulusSection {
    fn default() -> Self {
        ModulusSection {
            deltas: vec![0.02, 0.04, 0.08, 0.16],
            space: SobolevSpace::Hneg1,
            samples: 32,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeSection {
    pub epsilons: Vec<f64>,
    /// Exceedance level; defaults to half the median gap at the largest eps.
    pub delta: Option<f64>,
    pub samples: usize,
    pub exceedance_threshold: f64,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        ConvergeSection {
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            delta: None,
            samples: 64,
            exceedance_threshold: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OuCheckSection {
    pub epsilons: Vec<f64>,
    pub modes: Vec<usize>,
    pub gamma: f64,
    pub c0: f64,
    pub samples: usize,
}

impl Default for OuCheckSection {
    fn default() -> Self {
        OuCheckSection {
            epsilons: vec![0.0, 0.1, 0.5],
            modes: vec![1, 2],
            gamma: 1.0,
            c0: 0.0,
            samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyCheckSection {
    pub paths: usize,
}

impl Default for EnergyCheckSection {
    fn default() -> Self {
        EnergyCheckSection { paths: 100 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrongOrderSection {
    pub levels: usize,
    pub samples: usize,
}

impl Default for StrongOrderSection {
    fn default() -> Self {
        StrongOrderSection { levels: 4, samples: 32 }
    }
}

/// Applies one `key.path=value` override to the raw TOML tree. The value
/// is parsed as TOML; anything that does not parse is taken as a string.
pub fn apply_override(root: &mut toml::Value, dotted_key: &str, raw_value: &str) -> Result<()> {
    let parsed: toml::Value = match format!("v = {raw_value}").parse::<toml::Table>() {
        Ok(table) => table["v"].clone(),
        Err(_) => toml::Value::String(raw_value.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = dotted_key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Validation(format!("override key '{dotted_key}': '{part}' is not a table"))
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    unreachable!()
}

/// Parses a TOML document, applies overrides, and validates the sim block.
pub fn load_config(text: &str, overrides: &[(String, String)]) -> Result<ConfigFile> {
    let mut tree: toml::Value = text
        .parse::<toml::Table>()
        .map(toml::Value::Table)
        .map_err(Error::Toml)?;
    for (key, value) in overrides {
        apply_override(&mut tree, key, value)?;
    }
    let cfg: ConfigFile = ConfigFile::deserialize(tree).map_err(|e| {
        Error::Validation(format!("config error: {e}"))
    })?;
    cfg.sim.validate()?;
    Ok(cfg)
}
