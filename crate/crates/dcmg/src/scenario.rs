use std::path::Path;

use dcmg_core::sim::ScenarioConfig;
use thiserror::Error;

/// Shipped scenarios, by name.
pub const BUILTIN: [(&str, &str); 3] = [
    ("baseline", include_str!("../scenarios/baseline.json")),
    ("jam-no-defense", include_str!("../scenarios/jam-no-defense.json")),
    ("jam-with-defense", include_str!("../scenarios/jam-with-defense.json")),
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario {name}: {source}")]
    Json { name: String, source: serde_json::Error },
}

pub fn parse_scenario(name: &str, json: &str) -> Result<ScenarioConfig, ScenarioError> {
    serde_json::from_str(json).map_err(|source| ScenarioError::Json { name: name.to_owned(), source })
}

/// Loads a scenario from a file path, or a shipped one by name when no such
/// file exists.
pub fn load_scenario(which: &str) -> Result<ScenarioConfig, ScenarioError> {
    let path = Path::new(which);
    if !path.exists() {
        if let Some((name, json)) = BUILTIN.iter().find(|(n, _)| *n == which) {
            return parse_scenario(name, json);
        }
    }
    let json = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: which.to_owned(), source })?;
    parse_scenario(which, &json)
}
