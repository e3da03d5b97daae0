//! Independent reference computations shared by the integration tests.
//!
//! Nothing here goes through the engine's compiled machines: the oracle
//! works on the string-keyed machine description directly and propagates
//! the exact joint state distribution slot by slot.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use slotgame_core::{Decision, StateSpec, StrategyMachine};

pub fn rational(p: f64) -> BigRational {
    BigRational::from_float(p).expect("finite probability")
}

pub fn pow2_inv(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k as usize)
}

struct Indexed {
    prob: Vec<BigRational>,
    next: Vec<BTreeMap<(bool, u8), usize>>,
    start: usize,
}

fn index(m: &StrategyMachine) -> Indexed {
    assert!(!m.last_slot_override, "oracle does not model the override");
    let pos = |id: &str| {
        m.states
            .iter()
            .position(|s| s.id == id)
            .expect("known state")
    };
    Indexed {
        prob: m.states.iter().map(|s| rational(s.transmit_prob)).collect(),
        next: m
            .states
            .iter()
            .map(|s| {
                s.transitions
                    .iter()
                    .map(|(o, t)| ((o.action.is_transmit(), o.feedback), pos(t)))
                    .collect()
            })
            .collect(),
        start: pos(&m.start),
    }
}

/// Exact expected scores of `a` against `b` over `horizon` slots.
pub fn exact_scores(a: &StrategyMachine, b: &StrategyMachine, horizon: u32) -> [BigRational; 2] {
    let (ia, ib) = (index(a), index(b));
    let mut dist: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
    dist.insert((ia.start, ib.start), BigRational::one());
    let mut scores = [BigRational::zero(), BigRational::zero()];
    for _ in 0..horizon {
        let mut next: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for ((sa, sb), w) in dist {
            for xa in [true, false] {
                let pa = if xa {
                    ia.prob[sa].clone()
                } else {
                    BigRational::one() - &ia.prob[sa]
                };
                for xb in [true, false] {
                    let pb = if xb {
                        ib.prob[sb].clone()
                    } else {
                        BigRational::one() - &ib.prob[sb]
                    };
                    let pw = &w * &pa * &pb;
                    if pw.is_zero() {
                        continue;
                    }
                    let f = u8::from(xa) + u8::from(xb);
                    if f == 1 {
                        scores[usize::from(xb)] += &pw;
                    }
                    let na = *ia.next[sa].get(&(xa, f)).unwrap_or(&sa);
                    let nb = *ib.next[sb].get(&(xb, f)).unwrap_or(&sb);
                    *next.entry((na, nb)).or_insert_with(BigRational::zero) += pw;
                }
            }
        }
        dist = next;
    }
    scores
}

/// A machine with `k` states and every 2-player observation wired to a
/// random target. Deterministic machines use probabilities 0 and 1 only.
pub fn random_machine(rng: &mut impl Rng, k: usize, deterministic: bool) -> StrategyMachine {
    let ids: Vec<String> = (0..k).map(|i| format!("s{i}")).collect();
    let mut m = StrategyMachine::new("random", ids[rng.random_range(0..k)].clone());
    for id in &ids {
        let prob = if deterministic {
            f64::from(u8::from(rng.random_bool(0.5)))
        } else {
            match rng.random_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                _ => (rng.random_range(1..100u32) as f64) / 100.0,
            }
        };
        let mut s = StateSpec::new(id.clone(), prob);
        for (action, f) in [
            (Decision::Transmit, 1),
            (Decision::Transmit, 2),
            (Decision::Idle, 0),
            (Decision::Idle, 1),
        ] {
            s = s.on(action, f, ids[rng.random_range(0..k)].clone());
        }
        m = m.with_state(s);
    }
    m
}

/// Expected capture time of `n` in {2, 3} users that all transmit with
/// probability `p` on every slot, by enumerating one slot's transmit
/// patterns: a lone sender ends the episode, all-or-none repeats, and a
/// split with one silent user costs exactly one more slot.
pub fn repeat_policy_time(n: u32, p: f64) -> f64 {
    assert!(n == 2 || n == 3);
    let (mut repeat, mut split) = (0.0, 0.0);
    for pattern in 0u32..1 << n {
        let c = pattern.count_ones();
        let w = p.powi(c as i32) * (1.0 - p).powi((n - c) as i32);
        if c == 0 || c == n {
            repeat += w;
        } else if c >= 2 {
            split += w;
        }
    }
    (1.0 + split) / (1.0 - repeat)
}
