use std::path::Path;

use super::config::ScenarioConfig;
use super::HarnessError;

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../scenarios/", $name, ".toml")))),*]
    };
}

/// Shipped scenarios, by name.
pub const SCENARIOS: &[(&str, &str)] = builtin!(
    "ou-scalar",
    "heat-diagonal-64",
    "perturbed-dense-4",
    "transport-shift",
    "boundary-heat-1d",
    "delay-scalar-1plus-t",
    "delay-stochastic",
    "semilinear-tanh-obs",
    "controllability-2mode",
    "fractional-power-observation",
);

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}

pub fn builtin_text(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig, HarnessError> {
    let text = builtin_text(name).ok_or_else(|| HarnessError::Schema(format!("no builtin scenario named {name}")))?;
    ScenarioConfig::parse(text)
}

/// A file path if one exists, otherwise a builtin name.
pub fn load(spec: &str) -> Result<ScenarioConfig, HarnessError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{spec}: {e}")))?;
        ScenarioConfig::parse(&text)
    } else if let Some(text) = builtin_text(spec) {
        ScenarioConfig::parse(text)
    } else {
        Err(HarnessError::Io(format!("{spec}: no such file or builtin scenario")))
    }
}
