//! Slot-level engine for the 2-player game and for `n`-user capture
//! episodes.

use serde::{Deserialize, Serialize};

use crate::capture::CapturePolicy;
use crate::error::{Error, Result};
use crate::machine::{CompiledMachine, StrategyMachine};
use crate::rng::{RngStream, SlotRng};

/// Per-slot transmit decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Idle,
    Transmit,
}

impl Decision {
    pub const fn bit(self) -> u8 {
        match self {
            Decision::Idle => 0,
            Decision::Transmit => 1,
        }
    }

    pub fn is_transmit(self) -> bool {
        self == Decision::Transmit
    }
}

impl From<bool> for Decision {
    fn from(transmit: bool) -> Self {
        if transmit {
            Decision::Transmit
        } else {
            Decision::Idle
        }
    }
}

/// Number of transmitters on a slot, announced to every player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Feedback(pub u8);

impl Feedback {
    pub const fn count(self) -> u8 {
        self.0
    }

    pub const fn is_success(self) -> bool {
        self.0 == 1
    }
}

/// Number of slots in a game; always at least one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Horizon(u32);

impl Horizon {
    pub fn new(slots: u32) -> Result<Self> {
        if slots == 0 {
            Err(Error::ZeroHorizon)
        } else {
            Ok(Self(slots))
        }
    }

    pub const fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Horizon {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Horizon::new(v)
    }
}

impl From<Horizon> for u32 {
    fn from(h: Horizon) -> u32 {
        h.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    /// 1-based slot index.
    pub t: u32,
    pub decisions: [Decision; 2],
    pub feedback: Feedback,
    pub scorer: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub horizon: u32,
    pub slots: Vec<SlotRecord>,
    pub scores: [u32; 2],
}

impl GameTranscript {
    /// Slots before the first success (the whole game if nobody scores).
    pub fn initial_silent_slots(&self) -> u32 {
        self.slots
            .iter()
            .position(|s| s.scorer.is_some())
            .map_or(self.horizon, |p| p as u32)
    }
}

/// A player in the 2-player game.
///
/// `decide` is called once per slot, then `observe` with the player's own
/// decision and the transmitter count for that slot. Any history-dependent
/// algorithm can be written against this trait; state machines are one
/// implementation.
pub trait Strategy {
    fn decide(&mut self, slot: u32, horizon: u32, rng: &mut SlotRng) -> Decision;
    fn observe(&mut self, own: Decision, feedback: Feedback);
}

impl<S: Strategy + ?Sized> Strategy for &mut S {
    fn decide(&mut self, slot: u32, horizon: u32, rng: &mut SlotRng) -> Decision {
        (**self).decide(slot, horizon, rng)
    }
    fn observe(&mut self, own: Decision, feedback: Feedback) {
        (**self).observe(own, feedback)
    }
}

/// Runs one game between two arbitrary strategies, handing every slot to
/// `sink`, and returns the scores.
pub fn play_with<A, B>(
    mut a: A,
    mut b: B,
    horizon: Horizon,
    rng_a: &mut SlotRng,
    rng_b: &mut SlotRng,
    mut sink: impl FnMut(SlotRecord),
) -> [u32; 2]
where
    A: Strategy,
    B: Strategy,
{
    let horizon = horizon.get();
    let mut scores = [0u32; 2];
    for t in 1..=horizon {
        let xa = a.decide(t, horizon, rng_a);
        let xb = b.decide(t, horizon, rng_b);
        let feedback = Feedback(xa.bit() + xb.bit());
        let scorer = match (xa, xb) {
            (Decision::Transmit, Decision::Idle) => Some(0),
            (Decision::Idle, Decision::Transmit) => Some(1),
            _ => None,
        };
        if let Some(i) = scorer {
            scores[i] += 1;
        }
        a.observe(xa, feedback);
        b.observe(xb, feedback);
        sink(SlotRecord {
            t,
            decisions: [xa, xb],
            feedback,
            scorer,
        });
    }
    scores
}

/// Plays two strategy machines against each other and records every slot.
/// Invalid machines are rejected before the first slot.
pub fn play_game(
    strategy_a: &StrategyMachine,
    strategy_b: &StrategyMachine,
    horizon: Horizon,
    rng_a: &RngStream,
    rng_b: &RngStream,
) -> Result<GameTranscript> {
    let a = CompiledMachine::new(strategy_a)?;
    let b = CompiledMachine::new(strategy_b)?;
    Ok(play_compiled(&a, &b, horizon, rng_a, rng_b))
}

pub fn play_compiled(
    a: &CompiledMachine,
    b: &CompiledMachine,
    horizon: Horizon,
    rng_a: &RngStream,
    rng_b: &RngStream,
) -> GameTranscript {
    let mut slots = Vec::with_capacity(horizon.get() as usize);
    let scores = play_with(
        a.player(),
        b.player(),
        horizon,
        &mut rng_a.generator(),
        &mut rng_b.generator(),
        |r| slots.push(r),
    );
    GameTranscript {
        horizon: horizon.get(),
        slots,
        scores,
    }
}

/// Scores only; the tournament hot path.
pub fn play_scores(
    a: &CompiledMachine,
    b: &CompiledMachine,
    horizon: Horizon,
    rng_a: &RngStream,
    rng_b: &RngStream,
) -> [u32; 2] {
    play_with(
        a.player(),
        b.player(),
        horizon,
        &mut rng_a.generator(),
        &mut rng_b.generator(),
        |_| {},
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaptureOutcome {
    /// First slot (1-based) with exactly one transmitter.
    Captured { slot: u64 },
    /// No success within `max_slots`.
    Censored { max_slots: u64 },
}

impl CaptureOutcome {
    pub fn slot(self) -> Option<u64> {
        match self {
            CaptureOutcome::Captured { slot } => Some(slot),
            CaptureOutcome::Censored { .. } => None,
        }
    }
}

/// Runs `n` users, each with its own generator, under the group-splitting
/// capture policy until the first success.
///
/// Every user follows the same rule using only its own draws, its own past
/// actions and the announced transmitter counts. The active group size is
/// common knowledge because it is a function of the feedback alone.
pub fn play_capture_episode(
    policy: &CapturePolicy,
    n: usize,
    rngs: &mut [SlotRng],
    max_slots: u64,
) -> Result<CaptureOutcome> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "user count",
            min: 1,
            got: 0,
        });
    }
    if max_slots == 0 {
        return Err(Error::OutOfRange {
            what: "max_slots",
            min: 1,
            got: 0,
        });
    }
    if rngs.len() != n {
        return Err(Error::StreamCount {
            expected: n,
            got: rngs.len(),
        });
    }
    if n > policy.n_max() {
        return Err(Error::TableTooSmall {
            n,
            n_max: policy.n_max(),
        });
    }

    let mut active = vec![true; n];
    let mut sent = vec![false; n];
    let mut group = n;
    for t in 1..=max_slots {
        let p = policy.transmit_prob(group);
        let mut count = 0usize;
        for ((s, &a), rng) in sent.iter_mut().zip(&active).zip(rngs.iter_mut()) {
            *s = a && rng.bernoulli(p);
            count += usize::from(*s);
        }
        if count == 1 {
            return Ok(CaptureOutcome::Captured { slot: t });
        }
        if count == 0 || count == group {
            continue;
        }
        let keep_senders = policy.keep_transmitters(group, count);
        for (a, &s) in active.iter_mut().zip(&sent) {
            *a = *a && s == keep_senders;
        }
        group = if keep_senders { count } else { group - count };
    }
    Ok(CaptureOutcome::Censored { max_slots })
}
