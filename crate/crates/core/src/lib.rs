//! Slotted multiple-access games and channel capture.
//!
//! The crate has three layers:
//!
//! * a 2-player repeated game over `T` slots ([`game`]), whose players are
//!   probabilistic finite-state machines ([`machine`], [`dsl`], [`builtin`])
//!   and which can be run as a round-robin [`tournament`];
//! * closed-form expected scores for 3-State and 4-State
//!   ([`analytics`]);
//! * the `n`-user first-capture problem with exact transmitter-count
//!   feedback ([`capture`]) and its multichannel variants ([`multichannel`]).
//!
//! All randomness flows through [`rng::RngStream`], so every simulation is
//! reproducible from a master seed regardless of thread count.

pub mod analytics;
pub mod builtin;
pub mod capture;
pub mod dsl;
pub mod error;
pub mod game;
pub mod machine;
pub mod multichannel;
pub mod optimize;
pub mod rng;
pub mod stats;
pub mod tournament;

pub use analytics::{alpha_optimal, beta3, beta4, expected_y, ClosedForm};
pub use builtin::{builtin, BuiltinName};
pub use capture::{
    capture_objective, simulate_capture, solve_capture_table, CapturePolicy, CaptureTable,
};
pub use dsl::{parse_strategy, serialize_strategy};
pub use error::{Error, Result};
pub use game::{
    play_capture_episode, play_game, CaptureOutcome, Decision, Feedback, GameTranscript, Horizon,
    SlotRecord, Strategy,
};
pub use machine::{
    is_deterministic, validate_machine, CompiledMachine, Diagnostic, Observation, Severity,
    StateSpec, StrategyMachine,
};
pub use rng::{RngStream, SlotRng, StreamId};
pub use stats::Estimate;
pub use tournament::{merit_report, run_tournament, MeritReport, ScoreMatrix, TournamentConfig};
