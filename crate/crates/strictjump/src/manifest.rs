use std::path::Path;
use std::time::Duration;

use serde_json::{json, Map, Value};

/// How the master seed was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Flag,
    Entropy,
}

/// Everything needed to reproduce a run, written next to its outputs.
/// Two runs with equal manifests (duration aside) produce identical files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub spec_sha256: Option<String>,
    pub seed: Option<(u64, SeedSource)>,
    pub version: &'static str,
    pub duration: Duration,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            parameters: Map::new(),
            spec_sha256: None,
            seed: None,
            version: env!("CARGO_PKG_VERSION"),
            duration: Duration::ZERO,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    pub fn to_json(&self) -> Value {
        let (seed, source) = match self.seed {
            Some((s, SeedSource::Flag)) => (json!(s), json!("flag")),
            Some((s, SeedSource::Entropy)) => (json!(s), json!("entropy")),
            None => (Value::Null, Value::Null),
        };
        json!({
            "command": self.command,
            "parameters": self.parameters,
            "spec_sha256": self.spec_sha256,
            "seed": seed,
            "seed_source": source,
            "version": self.version,
            "duration_seconds": self.duration.as_secs_f64(),
        })
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json()).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text)
    }
}
