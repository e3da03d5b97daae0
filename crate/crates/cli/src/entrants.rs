//! Collecting tournament entrants from directories, files, built-ins and
//! a TOML config.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use slotgame_core::builtin::builtin_by_name;
use slotgame_core::serialize_strategy;

use crate::jobs::EntrantSource;

pub const STRATEGY_EXTENSION: &str = "strat";

/// Tournament config file. Relative paths are resolved against the file's
/// directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentFile {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub strategies: Vec<PathBuf>,
    #[serde(default)]
    pub builtins: Vec<String>,
    pub horizon: Option<u32>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
}

impl TournamentFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: Self =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = &cfg.dir {
            cfg.dir = Some(base.join(d));
        }
        cfg.strategies = cfg.strategies.iter().map(|p| base.join(p)).collect();
        Ok(cfg)
    }
}

pub fn read_strategy(path: &Path) -> Result<EntrantSource> {
    let source = fs::read_to_string(path)
        .with_context(|| format!("cannot read strategy file {}", path.display()))?;
    Ok(EntrantSource {
        origin: path.display().to_string(),
        source,
    })
}

/// All `*.strat` files in `dir`, sorted by file name.
pub fn read_dir(dir: &Path) -> Result<Vec<EntrantSource>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read strategy directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == STRATEGY_EXTENSION))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .{STRATEGY_EXTENSION} files in {}", dir.display());
    }
    paths.iter().map(|p| read_strategy(p)).collect()
}

pub fn builtin_source(name: &str) -> Result<EntrantSource> {
    let machine = builtin_by_name(name)?;
    Ok(EntrantSource {
        origin: format!("builtin:{name}"),
        source: serialize_strategy(&machine),
    })
}
