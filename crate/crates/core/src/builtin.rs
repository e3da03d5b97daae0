//! Named strategies: the two constant players, the tit-for-tat pair, and
//! the turn-taking 3-State / 4-State family.
//!
//! 3-State randomizes (p = 1/2) until someone scores, then alternates:
//! state 2 yields one slot, state 3 transmits until it scores. 4-State adds
//! state 4, entered when the opponent does not use the slot yielded in
//! state 2; it transmits every slot and falls back to state 2 on a
//! collision.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::Decision::{Idle as I, Transmit as T};
use crate::machine::{StateSpec, StrategyMachine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinName {
    Never,
    Always,
    Tft0,
    Tft1,
    ThreeState,
    FourState,
    FourStateEnhanced,
}

impl BuiltinName {
    pub const ALL: [BuiltinName; 7] = [
        BuiltinName::Never,
        BuiltinName::Always,
        BuiltinName::Tft0,
        BuiltinName::Tft1,
        BuiltinName::ThreeState,
        BuiltinName::FourState,
        BuiltinName::FourStateEnhanced,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BuiltinName::Never => "never",
            BuiltinName::Always => "always",
            BuiltinName::Tft0 => "tft0",
            BuiltinName::Tft1 => "tft1",
            BuiltinName::ThreeState => "three_state",
            BuiltinName::FourState => "four_state",
            BuiltinName::FourStateEnhanced => "four_state_enhanced",
        }
    }
}

impl fmt::Display for BuiltinName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown built-in strategy `{0}`")]
pub struct UnknownBuiltin(pub String);

impl FromStr for BuiltinName {
    type Err = UnknownBuiltin;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| UnknownBuiltin(s.to_owned()))
    }
}

pub fn builtin(name: BuiltinName) -> StrategyMachine {
    match name {
        BuiltinName::Never => constant("never", 0.0),
        BuiltinName::Always => constant("always", 1.0),
        BuiltinName::Tft0 => tit_for_tat("tft0", "idle"),
        BuiltinName::Tft1 => tit_for_tat("tft1", "send"),
        BuiltinName::ThreeState => three_state(),
        BuiltinName::FourState => four_state("four_state"),
        BuiltinName::FourStateEnhanced => {
            four_state("four_state_enhanced").with_last_slot_override(true)
        }
    }
}

/// Looks a built-in up by its string name.
pub fn builtin_by_name(name: &str) -> Result<StrategyMachine, UnknownBuiltin> {
    name.parse().map(builtin)
}

fn constant(name: &str, p: f64) -> StrategyMachine {
    let mut s = StateSpec::new("s", p);
    if p > 0.0 {
        s = s.on(T, 1, "s").on(T, 2, "s");
    }
    if p < 1.0 {
        s = s.on(I, 0, "s").on(I, 1, "s");
    }
    StrategyMachine::new(name, "s").with_state(s)
}

/// Repeats the opponent's previous action, read off the feedback.
fn tit_for_tat(name: &str, start: &str) -> StrategyMachine {
    StrategyMachine::new(name, start)
        .with_state(
            StateSpec::new("idle", 0.0)
                .on(I, 0, "idle")
                .on(I, 1, "send"),
        )
        .with_state(
            StateSpec::new("send", 1.0)
                .on(T, 1, "idle")
                .on(T, 2, "send"),
        )
}

fn randomizing_state() -> StateSpec {
    StateSpec::new("1", 0.5)
        .on(T, 1, "2")
        .on(T, 2, "1")
        .on(I, 0, "1")
        .on(I, 1, "3")
}

fn own_turn_state() -> StateSpec {
    StateSpec::new("3", 1.0).on(T, 1, "2").on(T, 2, "3")
}

fn three_state() -> StrategyMachine {
    StrategyMachine::new("three_state", "1")
        .with_state(randomizing_state())
        .with_state(StateSpec::new("2", 0.0).on(I, 0, "3").on(I, 1, "3"))
        .with_state(own_turn_state())
}

fn four_state(name: &str) -> StrategyMachine {
    StrategyMachine::new(name, "1")
        .with_state(randomizing_state())
        .with_state(StateSpec::new("2", 0.0).on(I, 0, "4").on(I, 1, "3"))
        .with_state(own_turn_state())
        .with_state(StateSpec::new("4", 1.0).on(T, 1, "4").on(T, 2, "2"))
}
