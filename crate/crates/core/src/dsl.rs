//! Line-oriented text format for strategy machines.
//!
//! ```text
//! machine tft0
//! start idle
//! state idle transmit 0
//!   on I f=0 -> idle
//!   on I f=1 -> send
//! end
//! state send transmit 1
//!   on T f=1 -> idle
//!   on T f=2 -> send
//! end
//! ```
//!
//! `#` starts a comment. An optional `lastslot-override on-foreign-behavior`
//! line may appear in the header. Transitions for observations a state can
//! never produce (an always-transmitting state never sees `I`, and no
//! 2-player slot gives `T f=0` or `I f=2`) may be left out.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::game::Decision;
use crate::machine::{
    validate_machine, Diagnostic, DiagnosticKind, Location, Observation, Severity, StateSpec,
    StrategyMachine,
};

const OVERRIDE_KEYWORD: &str = "lastslot-override";
const OVERRIDE_MODE: &str = "on-foreign-behavior";

/// Parse failure; every error found is listed with its position.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let errors: Vec<String> = self
            .diagnostics
            .iter()
            .filter(|d| d.is_error())
            .map(|d| d.to_string())
            .collect();
        f.write_str(&errors.join("\n"))
    }
}

/// Parses and validates one machine.
pub fn parse_strategy(text: &str) -> Result<StrategyMachine, ParseError> {
    let (machine, diagnostics) = check_source(text);
    match machine {
        Some(m) if !diagnostics.iter().any(Diagnostic::is_error) => Ok(m),
        _ => Err(ParseError { diagnostics }),
    }
}

/// Like [`parse_strategy`] for raw bytes; non-UTF-8 input is a syntax error.
pub fn parse_strategy_bytes(bytes: &[u8]) -> Result<StrategyMachine, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_strategy(text),
        Err(e) => {
            let prefix = &bytes[..e.valid_up_to()];
            let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
            let column = prefix.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
            Err(ParseError {
                diagnostics: vec![syntax(
                    Location { line, column },
                    "input is not valid UTF-8".into(),
                )],
            })
        }
    }
}

/// Parses `text` and returns the machine (when it is structurally complete)
/// together with every error and warning, located in the source.
pub fn check_source(text: &str) -> (Option<StrategyMachine>, Vec<Diagnostic>) {
    let mut p = Parser::default();
    for (i, line) in text.lines().enumerate() {
        p.line(i + 1, line);
    }
    p.finish()
}

/// Renders a machine in the text format. Names and state ids must be
/// single tokens without `#` for the output to parse back.
pub fn serialize_strategy(machine: &StrategyMachine) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "machine {}", machine.name);
    let _ = writeln!(out, "start {}", machine.start);
    if machine.last_slot_override {
        let _ = writeln!(out, "{OVERRIDE_KEYWORD} {OVERRIDE_MODE}");
    }
    for s in &machine.states {
        let _ = writeln!(out, "state {} transmit {}", s.id, s.transmit_prob);
        for (obs, target) in &s.transitions {
            let a = match obs.action {
                Decision::Transmit => 'T',
                Decision::Idle => 'I',
            };
            let _ = writeln!(out, "  on {a} f={} -> {target}", obs.feedback);
        }
        out.push_str("end\n");
    }
    out
}

fn syntax(location: Location, message: String) -> Diagnostic {
    let mut d = Diagnostic::new(Severity::Error, DiagnosticKind::Syntax { message });
    d.location = Some(location);
    d
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in code.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some((byte, col + 1)),
            (true, Some((b, c))) => {
                tokens.push(Token {
                    text: &code[b..byte],
                    column: c,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token {
            text: &code[b..],
            column: c,
        });
    }
    tokens
}

fn parse_decimal(s: &str) -> Option<f64> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let ok = !(int.is_empty() && frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
        && !(digits.contains('.') && frac.is_empty() && int.is_empty());
    if ok {
        s.parse().ok()
    } else {
        None
    }
}

#[derive(Default)]
struct Parser {
    name: Option<String>,
    start: Option<(String, Location)>,
    last_slot_override: bool,
    seen_override: bool,
    states: Vec<StateSpec>,
    state_locations: Vec<Location>,
    transition_locations: HashMap<(usize, Observation), Location>,
    open_state: Option<usize>,
    diagnostics: Vec<Diagnostic>,
    ids: HashSet<String>,
    last_line: usize,
}

impl Parser {
    fn error(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.diagnostics
            .push(syntax(Location { line, column }, message.into()));
    }

    fn line(&mut self, n: usize, line: &str) {
        self.last_line = n;
        let tokens = tokenize(line);
        let Some(head) = tokens.first() else {
            return;
        };
        if self.name.is_none() && head.text != "machine" {
            self.error(
                n,
                head.column,
                "expected `machine <name>` as the first line",
            );
            // keep going so later errors are still reported
            self.name = Some(String::new());
        }
        match head.text {
            "machine" => self.machine_line(n, &tokens),
            "start" => self.start_line(n, &tokens),
            OVERRIDE_KEYWORD => self.override_line(n, &tokens),
            "state" => self.state_line(n, &tokens),
            "on" => self.transition_line(n, &tokens),
            "end" => {
                if tokens.len() > 1 {
                    self.error(n, tokens[1].column, "unexpected text after `end`");
                }
                if self.open_state.take().is_none() {
                    self.error(n, head.column, "`end` without an open state block");
                }
            }
            other => {
                let msg = format!("unknown directive `{other}`");
                self.error(n, head.column, msg);
            }
        }
    }

    fn expect_top_level(&mut self, n: usize, tok: &Token<'_>) -> bool {
        if self.open_state.is_some() {
            let msg = format!("`{}` inside a state block (missing `end`?)", tok.text);
            self.error(n, tok.column, msg);
            false
        } else {
            true
        }
    }

    fn machine_line(&mut self, n: usize, t: &[Token<'_>]) {
        if matches!(&self.name, Some(name) if !name.is_empty()) {
            self.error(n, t[0].column, "only one `machine` line is allowed");
            return;
        }
        if t.len() != 2 {
            self.error(n, t[0].column, "expected `machine <name>`");
            self.name = Some(String::new());
            return;
        }
        self.name = Some(t[1].text.to_owned());
    }

    fn start_line(&mut self, n: usize, t: &[Token<'_>]) {
        if !self.expect_top_level(n, &t[0]) {
            return;
        }
        if self.start.is_some() {
            self.error(n, t[0].column, "duplicate `start` line");
        } else if t.len() != 2 {
            self.error(n, t[0].column, "expected `start <state-id>`");
        } else {
            self.start = Some((
                t[1].text.to_owned(),
                Location {
                    line: n,
                    column: t[1].column,
                },
            ));
        }
    }

    fn override_line(&mut self, n: usize, t: &[Token<'_>]) {
        if !self.expect_top_level(n, &t[0]) {
            return;
        }
        if self.seen_override {
            self.error(n, t[0].column, "duplicate `lastslot-override` line");
        } else if t.len() != 2 || t[1].text != OVERRIDE_MODE {
            let msg = format!("expected `{OVERRIDE_KEYWORD} {OVERRIDE_MODE}`");
            self.error(n, t[0].column, msg);
        } else {
            self.last_slot_override = true;
        }
        self.seen_override = true;
    }

    fn state_line(&mut self, n: usize, t: &[Token<'_>]) {
        if !self.expect_top_level(n, &t[0]) {
            return;
        }
        if t.len() != 4 || t[2].text != "transmit" {
            self.error(n, t[0].column, "expected `state <id> transmit <prob>`");
            return;
        }
        let id = t[1].text;
        let loc = Location {
            line: n,
            column: t[1].column,
        };
        if !self.ids.insert(id.to_owned()) {
            let mut d =
                Diagnostic::new(Severity::Error, DiagnosticKind::DuplicateState).in_state(id);
            d.location = Some(loc);
            self.diagnostics.push(d);
        }
        let Some(prob) = parse_decimal(t[3].text) else {
            let msg = format!("`{}` is not a decimal probability", t[3].text);
            self.error(n, t[3].column, msg);
            return;
        };
        if !(0.0..=1.0).contains(&prob) {
            let mut d = Diagnostic::new(
                Severity::Error,
                DiagnosticKind::ProbabilityOutOfRange { prob },
            )
            .in_state(id);
            d.location = Some(Location {
                line: n,
                column: t[3].column,
            });
            self.diagnostics.push(d);
        }
        self.states.push(StateSpec {
            id: id.to_owned(),
            transmit_prob: prob,
            transitions: BTreeMap::new(),
        });
        self.state_locations.push(loc);
        self.open_state = Some(self.states.len() - 1);
    }

    fn transition_line(&mut self, n: usize, t: &[Token<'_>]) {
        let Some(idx) = self.open_state else {
            self.error(n, t[0].column, "`on` outside a state block");
            return;
        };
        if t.len() != 5 || t[3].text != "->" {
            self.error(
                n,
                t[0].column,
                "expected `on <T|I> f=<count> -> <state-id>`",
            );
            return;
        }
        let action = match t[1].text {
            "T" => Decision::Transmit,
            "I" => Decision::Idle,
            other => {
                let msg = format!("expected action `T` or `I`, found `{other}`");
                self.error(n, t[1].column, msg);
                return;
            }
        };
        let feedback = match t[2].text.strip_prefix("f=").map(str::parse::<u8>) {
            Some(Ok(f)) if f <= 2 => f,
            _ => {
                let msg = format!("expected `f=0`, `f=1` or `f=2`, found `{}`", t[2].text);
                self.error(n, t[2].column, msg);
                return;
            }
        };
        let obs = Observation::new(action, feedback);
        let loc = Location {
            line: n,
            column: t[4].column,
        };
        if self.states[idx]
            .transitions
            .insert(obs, t[4].text.to_owned())
            .is_some()
        {
            let msg = format!("duplicate transition for {obs}");
            self.error(n, t[0].column, msg);
        }
        self.transition_locations.insert((idx, obs), loc);
    }

    fn finish(mut self) -> (Option<StrategyMachine>, Vec<Diagnostic>) {
        if let Some(idx) = self.open_state {
            let loc = self.state_locations[idx];
            self.error(loc.line, loc.column, "state block is missing `end`");
        }
        let name = match self.name.take() {
            Some(n) => n,
            None => {
                self.error(
                    self.last_line.max(1),
                    1,
                    "empty input: expected `machine <name>`",
                );
                return (None, self.diagnostics);
            }
        };
        let Some((start, start_loc)) = self.start.take() else {
            self.error(self.last_line.max(1), 1, "missing `start <state-id>` line");
            return (None, self.diagnostics);
        };
        let machine = StrategyMachine {
            name,
            start,
            states: std::mem::take(&mut self.states),
            last_slot_override: self.last_slot_override,
        };

        let first_index: HashMap<&str, usize> = machine
            .states
            .iter()
            .enumerate()
            .rev()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        for mut d in validate_machine(&machine) {
            // already reported with exact positions while parsing
            if matches!(
                d.kind,
                DiagnosticKind::DuplicateState | DiagnosticKind::ProbabilityOutOfRange { .. }
            ) {
                continue;
            }
            let state_idx = d.state.as_deref().and_then(|s| first_index.get(s).copied());
            d.location = match (&d.kind, state_idx, d.observation) {
                (DiagnosticKind::UnknownStart { .. }, _, _) => Some(start_loc),
                (_, Some(i), Some(obs)) => self
                    .transition_locations
                    .get(&(i, obs))
                    .copied()
                    .or(Some(self.state_locations[i])),
                (_, Some(i), None) => Some(self.state_locations[i]),
                _ => None,
            };
            self.diagnostics.push(d);
        }
        self.diagnostics
            .sort_by_key(|d| d.location.map(|l| (l.line, l.column)));
        (Some(machine), self.diagnostics)
    }
}
