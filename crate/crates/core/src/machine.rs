//! Probabilistic finite-state strategies for the 2-player game.
//!
//! A [`StrategyMachine`] is plain data: named states, each with a transmit
//! probability and a transition table keyed by the player's own action and
//! the transmitter count seen on that slot. It may be malformed; use
//! [`validate_machine`] to list problems, and [`CompiledMachine::new`] to get
//! an index-based form the engine can run.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Decision, Feedback, Strategy};
use crate::rng::SlotRng;

/// What a player sees at the end of a slot: its own action and the
/// transmitter count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Observation {
    pub action: Decision,
    pub feedback: u8,
}

impl Observation {
    pub const fn new(action: Decision, feedback: u8) -> Self {
        Self { action, feedback }
    }

    /// Observations that can occur in a 2-player game.
    pub const TWO_PLAYER: [Observation; 4] = [
        Observation::new(Decision::Transmit, 1),
        Observation::new(Decision::Transmit, 2),
        Observation::new(Decision::Idle, 0),
        Observation::new(Decision::Idle, 1),
    ];

    pub fn is_possible_two_player(&self) -> bool {
        match self.action {
            Decision::Transmit => matches!(self.feedback, 1 | 2),
            Decision::Idle => matches!(self.feedback, 0 | 1),
        }
    }

    fn slot(&self) -> Option<usize> {
        (self.feedback <= 2).then(|| self.action.bit() as usize * 3 + self.feedback as usize)
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.action {
            Decision::Transmit => 'T',
            Decision::Idle => 'I',
        };
        write!(f, "{a} f={}", self.feedback)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub id: String,
    pub transmit_prob: f64,
    pub transitions: BTreeMap<Observation, String>,
}

impl StateSpec {
    pub fn new(id: impl Into<String>, transmit_prob: f64) -> Self {
        Self {
            id: id.into(),
            transmit_prob,
            transitions: BTreeMap::new(),
        }
    }

    pub fn on(mut self, action: Decision, feedback: u8, target: impl Into<String>) -> Self {
        self.transitions
            .insert(Observation::new(action, feedback), target.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyMachine {
    pub name: String,
    pub start: String,
    pub states: Vec<StateSpec>,
    /// Transmit surely on the final slot once the opponent has shown
    /// behaviour this machine never produces against a copy of itself.
    pub last_slot_override: bool,
}

impl StrategyMachine {
    pub fn new(name: impl Into<String>, start: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            start: start.into(),
            states: Vec::new(),
            last_slot_override: false,
        }
    }

    pub fn with_state(mut self, state: StateSpec) -> Self {
        self.states.push(state);
        self
    }

    pub fn with_last_slot_override(mut self, on: bool) -> Self {
        self.last_slot_override = on;
        self
    }

    pub fn state(&self, id: &str) -> Option<&StateSpec> {
        self.states.iter().find(|s| s.id == id)
    }
}

/// True iff every state transmits with probability 0 or 1.
pub fn is_deterministic(machine: &StrategyMachine) -> bool {
    machine
        .states
        .iter()
        .all(|s| s.transmit_prob == 0.0 || s.transmit_prob == 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    NoStates,
    DuplicateState,
    UnknownStart { start: String },
    UnknownState { target: String },
    ProbabilityOutOfRange { prob: f64 },
    MissingTransition,
    UnreachableTransition,
    UnreachableState,
    Syntax { message: String },
}

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub state: Option<String>,
    pub observation: Option<Observation>,
    pub location: Option<Location>,
}

impl Diagnostic {
    pub(crate) fn new(severity: Severity, kind: DiagnosticKind) -> Self {
        Self {
            severity,
            kind,
            state: None,
            observation: None,
            location: None,
        }
    }

    pub(crate) fn in_state(mut self, state: &str) -> Self {
        self.state = Some(state.to_owned());
        self
    }

    pub(crate) fn at(mut self, obs: Observation) -> Self {
        self.observation = Some(obs);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(loc) = self.location {
            write!(f, "{loc}: ")?;
        }
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let state = self.state.as_deref().unwrap_or("?");
        let obs = self.observation.map(|o| o.to_string()).unwrap_or_default();
        match &self.kind {
            DiagnosticKind::NoStates => write!(f, "{level}: machine has no states"),
            DiagnosticKind::DuplicateState => {
                write!(f, "{level}: duplicate state id `{state}`")
            }
            DiagnosticKind::UnknownStart { start } => {
                write!(f, "{level}: start state `{start}` is not defined")
            }
            DiagnosticKind::UnknownState { target } => write!(
                f,
                "{level}: state `{state}` on {obs} goes to undefined state `{target}`"
            ),
            DiagnosticKind::ProbabilityOutOfRange { prob } => write!(
                f,
                "{level}: state `{state}` has transmit probability {prob} outside [0, 1]"
            ),
            DiagnosticKind::MissingTransition => write!(
                f,
                "{level}: reachable state `{state}` has no transition for {obs}"
            ),
            DiagnosticKind::UnreachableTransition => write!(
                f,
                "{level}: transition {obs} of state `{state}` can never fire in a 2-player game"
            ),
            DiagnosticKind::UnreachableState => {
                write!(
                    f,
                    "{level}: state `{state}` is unreachable from the start state"
                )
            }
            DiagnosticKind::Syntax { message } => write!(f, "{level}: {message}"),
        }
    }
}

/// Lists every problem with `machine`. An empty result (or warnings only)
/// means the machine can be compiled and played.
pub fn validate_machine(machine: &StrategyMachine) -> Vec<Diagnostic> {
    use DiagnosticKind::*;
    let mut out = Vec::new();
    if machine.states.is_empty() {
        out.push(Diagnostic::new(Severity::Error, NoStates));
        return out;
    }

    let mut seen = HashSet::new();
    for s in &machine.states {
        if !seen.insert(s.id.as_str()) {
            out.push(Diagnostic::new(Severity::Error, DuplicateState).in_state(&s.id));
        }
    }
    let defined = seen;

    for s in &machine.states {
        let p = s.transmit_prob;
        if !(0.0..=1.0).contains(&p) {
            out.push(
                Diagnostic::new(Severity::Error, ProbabilityOutOfRange { prob: p }).in_state(&s.id),
            );
        }
        for (obs, target) in &s.transitions {
            if !obs.is_possible_two_player() {
                out.push(
                    Diagnostic::new(Severity::Warning, UnreachableTransition)
                        .in_state(&s.id)
                        .at(*obs),
                );
            }
            if !defined.contains(target.as_str()) {
                out.push(
                    Diagnostic::new(
                        Severity::Error,
                        UnknownState {
                            target: target.clone(),
                        },
                    )
                    .in_state(&s.id)
                    .at(*obs),
                );
            }
        }
    }

    if !defined.contains(machine.start.as_str()) {
        out.push(Diagnostic::new(
            Severity::Error,
            UnknownStart {
                start: machine.start.clone(),
            },
        ));
        return out;
    }

    // Breadth-first walk over states reachable from the start, checking that
    // every observation those states can produce has a transition.
    let mut reached: HashSet<&str> = HashSet::new();
    let mut queue = VecDeque::from([machine.start.as_str()]);
    reached.insert(machine.start.as_str());
    while let Some(id) = queue.pop_front() {
        let Some(state) = machine.state(id) else {
            continue;
        };
        for obs in possible_observations(state.transmit_prob) {
            match state.transitions.get(&obs) {
                None => out.push(
                    Diagnostic::new(Severity::Error, MissingTransition)
                        .in_state(id)
                        .at(obs),
                ),
                Some(target) => {
                    if defined.contains(target.as_str()) && reached.insert(target.as_str()) {
                        queue.push_back(target.as_str());
                    }
                }
            }
        }
    }
    for s in &machine.states {
        if !reached.contains(s.id.as_str()) {
            out.push(Diagnostic::new(Severity::Warning, UnreachableState).in_state(&s.id));
        }
    }
    out
}

fn possible_observations(p: f64) -> impl Iterator<Item = Observation> {
    // out-of-range probabilities are reported separately; treat both actions as possible
    let may_transmit = p > 0.0 || p.is_nan();
    let may_idle = p < 1.0 || p.is_nan();
    Observation::TWO_PLAYER
        .into_iter()
        .filter(move |o| match o.action {
            Decision::Transmit => may_transmit,
            Decision::Idle => may_idle,
        })
}

const NO_STATE: usize = usize::MAX;

/// Index-based, validated form of a [`StrategyMachine`].
#[derive(Clone, Debug)]
pub struct CompiledMachine {
    name: String,
    start: usize,
    probs: Vec<f64>,
    next: Vec<[usize; 6]>,
    /// Per state and observation: `true` when a copy of this machine could
    /// never have produced the observation. Only built with the override.
    foreign: Option<Vec<[bool; 6]>>,
}

impl CompiledMachine {
    pub fn new(machine: &StrategyMachine) -> Result<Self> {
        let diagnostics = validate_machine(machine);
        if diagnostics.iter().any(Diagnostic::is_error) {
            return Err(Error::InvalidMachine {
                name: machine.name.clone(),
                diagnostics,
            });
        }
        let index: HashMap<&str, usize> = machine
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        let next = machine
            .states
            .iter()
            .map(|s| {
                let mut row = [NO_STATE; 6];
                for (obs, target) in &s.transitions {
                    if let Some(k) = obs.slot() {
                        row[k] = index[target.as_str()];
                    }
                }
                row
            })
            .collect();
        let mut compiled = Self {
            name: machine.name.clone(),
            start: index[machine.start.as_str()],
            probs: machine.states.iter().map(|s| s.transmit_prob).collect(),
            next,
            foreign: None,
        };
        if machine.last_slot_override {
            compiled.foreign = Some(compiled.foreign_observations());
        }
        Ok(compiled)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_count(&self) -> usize {
        self.probs.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn transmit_prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    /// Successor state; observations without a transition leave the state
    /// unchanged (validation guarantees they cannot occur in 2-player play).
    pub fn next_state(&self, state: usize, obs: Observation) -> usize {
        match obs.slot().map(|k| self.next[state][k]) {
            Some(n) if n != NO_STATE => n,
            _ => state,
        }
    }

    pub fn has_last_slot_override(&self) -> bool {
        self.foreign.is_some()
    }

    pub fn is_foreign(&self, state: usize, obs: Observation) -> bool {
        match (&self.foreign, obs.slot()) {
            (Some(table), Some(k)) => table[state][k],
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    /// True when the machine never transmits from any state reachable from
    /// its start.
    pub fn never_transmits(&self) -> bool {
        self.reachable_states()
            .iter()
            .all(|&s| self.probs[s] == 0.0)
    }

    pub fn reachable_states(&self) -> Vec<usize> {
        let mut seen = vec![false; self.probs.len()];
        let mut stack = vec![self.start];
        seen[self.start] = true;
        let mut out = Vec::new();
        while let Some(s) = stack.pop() {
            out.push(s);
            for obs in possible_observations(self.probs[s]) {
                let n = self.next_state(s, obs);
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Marks observations that never occur when this machine plays an
    /// independent copy of itself, by exploring all joint states reachable
    /// with positive probability in self-play.
    fn foreign_observations(&self) -> Vec<[bool; 6]> {
        let n = self.probs.len();
        let mut consistent = vec![[false; 6]; n];
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([(self.start, self.start)]);
        seen.insert((self.start, self.start));
        let actions = |p: f64| {
            let mut v = Vec::with_capacity(2);
            if p > 0.0 {
                v.push(Decision::Transmit);
            }
            if p < 1.0 {
                v.push(Decision::Idle);
            }
            v
        };
        while let Some((a, b)) = queue.pop_front() {
            for &xa in &actions(self.probs[a]) {
                for &xb in &actions(self.probs[b]) {
                    let f = xa.bit() + xb.bit();
                    let oa = Observation::new(xa, f);
                    let ob = Observation::new(xb, f);
                    consistent[a][oa.slot().unwrap()] = true;
                    consistent[b][ob.slot().unwrap()] = true;
                    let pair = (self.next_state(a, oa), self.next_state(b, ob));
                    if seen.insert(pair) {
                        queue.push_back(pair);
                    }
                }
            }
        }
        consistent.into_iter().map(|row| row.map(|c| !c)).collect()
    }

    pub fn player(&self) -> MachinePlayer<'_> {
        MachinePlayer {
            machine: self,
            state: self.start,
            triggered: false,
        }
    }
}

/// Per-game runtime state of a compiled machine.
#[derive(Clone, Debug)]
pub struct MachinePlayer<'m> {
    machine: &'m CompiledMachine,
    state: usize,
    triggered: bool,
}

impl MachinePlayer<'_> {
    pub fn state(&self) -> usize {
        self.state
    }

    pub fn override_triggered(&self) -> bool {
        self.triggered
    }
}

impl Strategy for MachinePlayer<'_> {
    fn decide(&mut self, slot: u32, horizon: u32, rng: &mut SlotRng) -> Decision {
        if self.triggered && slot == horizon {
            return Decision::Transmit;
        }
        Decision::from(rng.bernoulli(self.machine.probs[self.state]))
    }

    fn observe(&mut self, own: Decision, feedback: Feedback) {
        let obs = Observation::new(own, feedback.count());
        if self.machine.is_foreign(self.state, obs) {
            self.triggered = true;
        }
        self.state = self.machine.next_state(self.state, obs);
    }
}
