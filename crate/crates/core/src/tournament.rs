//! Round-robin tournaments between strategy machines.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{play_compiled, play_scores, GameTranscript, Horizon};
use crate::machine::{CompiledMachine, StrategyMachine};
use crate::rng::{RngStream, StreamId};
use crate::stats::{Estimate, Moments};

pub const DEFAULT_RUNS: u64 = 1000;
pub const DEFAULT_HORIZON: u32 = 100;

/// Pairing ids must stay below the reserved simulation domains.
const MAX_ENTRANTS: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Entrant {
    pub name: String,
    pub machine: StrategyMachine,
}

impl Entrant {
    pub fn new(name: impl Into<String>, machine: StrategyMachine) -> Self {
        Self {
            name: name.into(),
            machine,
        }
    }
}

impl From<StrategyMachine> for Entrant {
    fn from(machine: StrategyMachine) -> Self {
        Self {
            name: machine.name.clone(),
            machine,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TournamentConfig {
    pub entrants: Vec<Entrant>,
    pub horizon: Horizon,
    pub runs: u64,
    pub seed: u64,
}

impl TournamentConfig {
    pub fn new(entrants: Vec<Entrant>, horizon: Horizon, runs: u64, seed: u64) -> Self {
        Self {
            entrants,
            horizon,
            runs,
            seed,
        }
    }

    /// Checks the config and compiles every entrant.
    pub fn compile(&self) -> Result<Vec<CompiledMachine>> {
        if self.entrants.is_empty() {
            return Err(Error::InvalidConfig(
                "tournament needs at least one entrant".into(),
            ));
        }
        if self.entrants.len() > MAX_ENTRANTS {
            return Err(Error::InvalidConfig(format!(
                "at most {MAX_ENTRANTS} entrants are supported"
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entrants {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate entrant name `{}`",
                    e.name
                )));
            }
        }
        self.entrants
            .iter()
            .map(|e| CompiledMachine::new(&e.machine))
            .collect()
    }
}

fn pairing_id(i: usize, j: usize, k: usize) -> u64 {
    (i * k + j) as u64
}

fn streams(seed: u64, pairing: u64, run: u64) -> (RngStream, RngStream) {
    (
        RngStream::new(seed, StreamId::new(pairing, run, 0)),
        RngStream::new(seed, StreamId::new(pairing, run, 1)),
    )
}

/// Mean score of row entrant `i` against column entrant `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub names: Vec<String>,
    pub horizon: u32,
    pub runs: u64,
    pub entries: Vec<Vec<Estimate>>,
    /// Row sums of the means.
    pub totals: Vec<f64>,
    /// Entrants that can never transmit, detected from their structure.
    pub never_transmit: Vec<bool>,
}

impl ScoreMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn mean(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j].mean
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Plays every unordered pairing (self-play included) `runs` times.
///
/// The games of pairing `{i, j}` fill both cell `(i, j)` and cell `(j, i)`.
/// In self-play the diagonal records the first player's score.
pub fn run_tournament(config: &TournamentConfig) -> Result<ScoreMatrix> {
    let machines = config.compile()?;
    let k = machines.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let horizon = config.horizon;
    let seed = config.seed;
    let results: Vec<[Moments; 2]> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let pairing = pairing_id(i, j, k);
            (0..config.runs)
                .into_par_iter()
                .fold(
                    || [Moments::default(); 2],
                    |mut acc, run| {
                        let (sa, sb) = streams(seed, pairing, run);
                        let s = play_scores(&machines[i], &machines[j], horizon, &sa, &sb);
                        acc[0].push(u64::from(s[0]));
                        acc[1].push(u64::from(s[1]));
                        acc
                    },
                )
                .reduce(
                    || [Moments::default(); 2],
                    |a, b| [a[0].merge(b[0]), a[1].merge(b[1])],
                )
        })
        .collect();

    let empty = Moments::default().estimate();
    let mut entries = vec![vec![empty; k]; k];
    for (&(i, j), m) in pairs.iter().zip(&results) {
        entries[i][j] = m[0].estimate();
        if i != j {
            entries[j][i] = m[1].estimate();
        }
    }
    let totals = entries
        .iter()
        .map(|row| row.iter().map(|e| e.mean).sum())
        .collect();
    Ok(ScoreMatrix {
        names: config.entrants.iter().map(|e| e.name.clone()).collect(),
        horizon: horizon.get(),
        runs: config.runs,
        entries,
        totals,
        never_transmit: machines
            .iter()
            .map(CompiledMachine::never_transmits)
            .collect(),
    })
}

/// Transcript of the first run of one pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingTranscript {
    pub row: String,
    pub column: String,
    pub transcript: GameTranscript,
}

/// Replays run 0 of every pairing with full slot records, using the same
/// streams as [`run_tournament`].
pub fn dump_transcripts(config: &TournamentConfig) -> Result<Vec<PairingTranscript>> {
    let machines = config.compile()?;
    let k = machines.len();
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in i..k {
            let (sa, sb) = streams(config.seed, pairing_id(i, j, k), 0);
            out.push(PairingTranscript {
                row: config.entrants[i].name.clone(),
                column: config.entrants[j].name.clone(),
                transcript: play_compiled(&machines[i], &machines[j], config.horizon, &sa, &sb),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritRow {
    pub name: String,
    /// Self-competition score.
    pub alpha: Estimate,
    /// Score against the silent opponent; `None` when no entrant is silent.
    pub beta: Option<Estimate>,
    /// Mean score over all pairings.
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub horizon: u32,
    pub runs: u64,
    /// Entrant used as the silent opponent for `beta`.
    pub beta_reference: Option<String>,
    pub rows: Vec<MeritRow>,
}

impl MeritReport {
    pub fn row(&self, name: &str) -> Option<&MeritRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn beta_defined(&self) -> bool {
        self.beta_reference.is_some()
    }
}

pub fn merit_report(matrix: &ScoreMatrix) -> MeritReport {
    let k = matrix.len();
    let never = matrix.never_transmit.iter().position(|&n| n);
    let rows = (0..k)
        .map(|i| MeritRow {
            name: matrix.names[i].clone(),
            alpha: matrix.entries[i][i],
            beta: never.map(|j| matrix.entries[i][j]),
            gamma: if k == 0 {
                0.0
            } else {
                matrix.totals[i] / k as f64
            },
        })
        .collect();
    MeritReport {
        horizon: matrix.horizon,
        runs: matrix.runs,
        beta_reference: never.map(|j| matrix.names[j].clone()),
        rows,
    }
}
