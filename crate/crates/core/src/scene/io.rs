//! Scenario loading and saving. The on-disk format is a single JSON document;
//! unknown top-level keys are rejected.

use std::fs;
use std::path::Path;

use crate::error::Error;
use crate::scene::Scenario;

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| {
        Error::Parse(format!("cannot read {}: {e}", path.as_ref().display()))
    })?;
    scenario_from_json(&text)
}

/// Parses and validates a scenario from JSON text.
pub fn scenario_from_json(text: &str) -> Result<Scenario, Error> {
    let scenario: Scenario =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

/// Serializes a scenario as pretty-printed JSON.
pub fn scenario_to_json(scenario: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(scenario).expect("scenario serializes");
    text.push('\n');
    text
}

pub fn save_scenario(path: impl AsRef<Path>, scenario: &Scenario) -> Result<(), Error> {
    fs::write(path, scenario_to_json(scenario))?;
    Ok(())
}
