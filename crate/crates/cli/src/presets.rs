//! Job configurations shipped inside the binary.

use crate::config::{ConfigError, JobConfig};

pub const NAMES: [&str; 4] = ["figure1a", "figure1b", "multiplicative", "pt-bound"];

pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "figure1a" => include_str!("../presets/figure1a.json"),
        "figure1b" => include_str!("../presets/figure1b.json"),
        "multiplicative" => include_str!("../presets/multiplicative.json"),
        "pt-bound" => include_str!("../presets/pt-bound.json"),
        _ => return None,
    })
}

pub fn load(name: &str) -> Result<JobConfig, ConfigError> {
    let text = source(name).ok_or_else(|| {
        ConfigError::new("preset", format!("unknown preset \"{name}\"; available: {}", NAMES.join(", ")))
    })?;
    JobConfig::from_json(text)
}
