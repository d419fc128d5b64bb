//! Scenario ingestion: YAML files on disk plus the committed canonical set.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ccs_core::sim::ScenarioConfig;

/// The committed scenario files, compiled in so `reproduce` works from a
/// fresh checkout regardless of the working directory.
pub const SCENARIO_A: &str = include_str!("../../../scenarios/scenario_a.yaml");
pub const SCENARIO_B: &str = include_str!("../../../scenarios/scenario_b.yaml");
pub const SCENARIO_C: &str = include_str!("../../../scenarios/scenario_c.yaml");
pub const SCENARIO_D: &str = include_str!("../../../scenarios/scenario_d.yaml");
pub const POINTER: &str = include_str!("../../../scenarios/pointer.yaml");

/// Parse and validate a scenario from YAML text. Parse failures carry the
/// offending location and field.
pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_yaml::from_str(text)
        .with_context(|| format!("{origin}: scenario does not match the expected schema"))?;
    if let Err(e) = cfg.validate() {
        bail!("{origin}: {e}");
    }
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    parse_scenario(&text, &path.display().to_string())
}

/// The four canonical scenarios, in order.
pub fn canonical_scenarios() -> Result<Vec<ScenarioConfig>> {
    [
        (SCENARIO_A, "scenario_a.yaml"),
        (SCENARIO_B, "scenario_b.yaml"),
        (SCENARIO_C, "scenario_c.yaml"),
        (SCENARIO_D, "scenario_d.yaml"),
    ]
    .iter()
    .map(|(text, origin)| parse_scenario(text, origin))
    .collect()
}

pub fn pointer_scenario() -> Result<ScenarioConfig> {
    parse_scenario(POINTER, "pointer.yaml")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_files_parse() {
        let scenarios = canonical_scenarios().unwrap();
        assert_eq!(scenarios.len(), 4);
        assert_eq!(scenarios[0].seed, 20260305);
        assert_eq!(scenarios[3].seed, 20260308);
        assert!(scenarios.iter().all(|s| s.runs == 10 && s.strategy == "lazy"));
        let vs: Vec<f64> = scenarios.iter().map(|s| s.v).collect();
        assert_eq!(vs, vec![0.05, 0.10, 0.25, 0.50]);
    }

    #[test]
    fn pointer_file_parses() {
        let p = pointer_scenario().unwrap();
        assert_eq!(p.m, 1);
        assert_eq!(p.p, 1.0);
        assert_eq!(p.access_model, ccs_core::sim::AccessModel::Pointer);
    }

    #[test]
    fn malformed_yaml_names_the_problem() {
        let err = parse_scenario("name: x\nn: 4\n", "broken.yaml").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("broken.yaml"), "{msg}");
        // Missing mandatory field is called out by serde.
        assert!(msg.contains("missing field"), "{msg}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        let text = "name: x\nn: 4\nm: 3\nartifact_tokens: 4096\ns: 40\nv: 3.0\nseed: 1\n";
        let err = parse_scenario(text, "bad.yaml").unwrap_err();
        assert!(format!("{err:#}").contains("v must be in [0, 1]"));
    }
}
