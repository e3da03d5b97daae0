use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::jobs::{Artifact, Job};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written next to every set of outputs. Output paths are relative to the
/// manifest's directory so the whole directory can be moved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub job: Job,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(job: Job, artifacts: &[Artifact]) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            subcommand: job.name().to_owned(),
            seed: job.seed(),
            job,
            outputs: artifacts.iter().map(|a| a.name.clone()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("malformed manifest {}", path.display()))
    }
}

/// Writes the artifacts and their manifest into `dir`.
pub fn write_outputs(dir: &Path, job: Job, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let manifest = RunManifest::new(job, artifacts);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}
