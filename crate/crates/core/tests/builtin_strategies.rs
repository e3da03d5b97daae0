mod support;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slotgame_core::game::{play_scores, play_with};
use slotgame_core::machine::MachinePlayer;
use slotgame_core::stats::Moments;
use slotgame_core::{
    alpha_optimal, beta3, beta4, builtin, expected_y, BuiltinName, CompiledMachine, Decision,
    Feedback, Horizon, RngStream, SlotRng, Strategy, StreamId,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use BuiltinName::*;

fn h(t: u32) -> Horizon {
    Horizon::new(t).unwrap()
}

fn compiled(name: BuiltinName) -> CompiledMachine {
    CompiledMachine::new(&builtin(name)).unwrap()
}

fn streams(seed: u64, pairing: u64, run: u64) -> (RngStream, RngStream) {
    (
        RngStream::new(seed, StreamId::new(pairing, run, 0)),
        RngStream::new(seed, StreamId::new(pairing, run, 1)),
    )
}

#[test]
fn enumeration_matches_alpha() {
    for t in 1..=12 {
        for name in [ThreeState, FourState] {
            let m = builtin(name);
            let [a, b] = support::exact_scores(&m, &m, t);
            assert_eq!(&a, alpha_optimal(h(t)).exact(), "{name} T={t}");
            assert_eq!(a, b);
        }
    }
    let four = builtin(FourState);
    let three_slots = support::exact_scores(&four, &four, 3);
    assert_eq!(three_slots[0].to_f64().unwrap(), 1.0625);
}

#[test]
fn enumeration_matches_beta() {
    let never = builtin(Never);
    for t in 1..=40 {
        let [b4, zero] = support::exact_scores(&builtin(FourState), &never, t);
        assert_eq!(&b4, beta4(h(t)).exact(), "T={t}");
        assert!(num_traits::Zero::is_zero(&zero));
        let [b3, _] = support::exact_scores(&builtin(ThreeState), &never, t);
        assert_eq!(&b3, beta3(h(t)).exact(), "T={t}");
    }
}

#[test]
fn tft1_against_four_state() {
    let [s, _] = support::exact_scores(&builtin(Tft1), &builtin(FourState), 100);
    let exact = s.to_f64().unwrap();
    assert!((exact - 149.0 / 3.0).abs() < 1e-12, "{exact}");
    assert!((exact - 49.7).abs() < 0.05, "{exact}");

    let (a, b) = (compiled(Tft1), compiled(FourState));
    let mut m = Moments::default();
    for run in 0..20_000 {
        let (ra, rb) = streams(11, 0, run);
        m.push(u64::from(play_scores(&a, &b, h(100), &ra, &rb)[0]));
    }
    let e = m.estimate();
    assert!(e.within_sigmas(exact, 4.0), "{e:?} vs {exact}");
}

#[test]
fn four_state_self_play_mean() {
    let m4 = compiled(FourState);
    let target = alpha_optimal(h(100)).to_f64();
    let mut m = Moments::default();
    for run in 0..50_000 {
        let (ra, rb) = streams(5, 0, run);
        let s = play_scores(&m4, &m4, h(100), &ra, &rb);
        m.push(u64::from(s[0]));
    }
    let e = m.estimate();
    assert!(e.within_sigmas(target, 4.0), "{e:?}");
}

/// Number of slots before the first success in a game, `None` if no slot
/// succeeded.
fn silent_prefix(a: &CompiledMachine, horizon: u32, ra: &RngStream, rb: &RngStream) -> u32 {
    let mut first = None;
    play_with(
        a.player(),
        a.player(),
        h(horizon),
        &mut ra.generator(),
        &mut rb.generator(),
        |r| {
            if first.is_none() && r.scorer.is_some() {
                first = Some(r.t - 1);
            }
        },
    );
    first.unwrap_or(horizon)
}

// Before the first success both players are in the randomizing state, so
// the silent prefix is geometric: P[Y = i] = 2^-(i+1) for i < T.
#[test]
fn silent_prefix_is_geometric() {
    const T: u32 = 20;
    const N: u64 = 1_000_000;
    const BINS: usize = 12;
    let m3 = compiled(ThreeState);
    let mut counts = [0u64; BINS + 1];
    let mut moments = Moments::default();
    for run in 0..N {
        let (ra, rb) = streams(2024, 0, run);
        let y = silent_prefix(&m3, T, &ra, &rb);
        moments.push(u64::from(y));
        counts[(y as usize).min(BINS)] += 1;
    }
    let mut stat = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let p = if i < BINS {
            0.5f64.powi(i as i32 + 1)
        } else {
            0.5f64.powi(BINS as i32)
        };
        let expected = p * N as f64;
        stat += (c as f64 - expected).powi(2) / expected;
    }
    let p_value = 1.0 - ChiSquared::new(BINS as f64).unwrap().cdf(stat);
    assert!(p_value > 1e-3, "chi-square {stat}, p = {p_value}");
    let e = moments.estimate();
    assert!(e.within_sigmas(expected_y(h(T)).to_f64(), 4.0), "{e:?}");
}

/// Records the machine state after every slot.
struct Traced<'m> {
    inner: MachinePlayer<'m>,
    visited: Vec<usize>,
}

impl Strategy for Traced<'_> {
    fn decide(&mut self, slot: u32, horizon: u32, rng: &mut SlotRng) -> Decision {
        self.inner.decide(slot, horizon, rng)
    }

    fn observe(&mut self, own: Decision, feedback: Feedback) {
        self.inner.observe(own, feedback);
        self.visited.push(self.inner.state());
    }
}

#[test]
fn four_state_self_play_avoids_state_four() {
    let m = builtin(FourState);
    let four = m.states.iter().position(|s| s.id == "4").unwrap();
    let c = CompiledMachine::new(&m).unwrap();
    for run in 0..20_000 {
        let (ra, rb) = streams(3, 0, run);
        let mut a = Traced {
            inner: c.player(),
            visited: vec![],
        };
        let mut b = Traced {
            inner: c.player(),
            visited: vec![],
        };
        play_with(
            &mut a,
            &mut b,
            h(100),
            &mut ra.generator(),
            &mut rb.generator(),
            |_| {},
        );
        assert!(
            !a.visited.contains(&four) && !b.visited.contains(&four),
            "run {run}"
        );
    }
}

#[test]
fn alternation_after_first_success() {
    for name in [ThreeState, FourState, FourStateEnhanced] {
        let c = compiled(name);
        for run in 0..5_000 {
            let (ra, rb) = streams(8, 0, run);
            let mut started = false;
            play_with(
                c.player(),
                c.player(),
                h(60),
                &mut ra.generator(),
                &mut rb.generator(),
                |r| {
                    if started {
                        assert!(r.scorer.is_some(), "{name} run {run} slot {}", r.t);
                    }
                    started |= r.scorer.is_some();
                },
            );
        }
    }
}

#[test]
fn enhanced_matches_plain_in_self_play() {
    let (plain, enhanced) = (compiled(FourState), compiled(FourStateEnhanced));
    for run in 0..5_000 {
        let (ra, rb) = streams(12, 0, run);
        assert_eq!(
            play_scores(&plain, &plain, h(50), &ra, &rb),
            play_scores(&enhanced, &enhanced, h(50), &ra, &rb)
        );
    }
}

#[test]
fn enhanced_takes_last_slot_from_silent_opponent() {
    let (plain, enhanced, never) = (
        compiled(FourState),
        compiled(FourStateEnhanced),
        compiled(Never),
    );
    for run in 0..2_000 {
        let (ra, rb) = streams(13, 0, run);
        let p = play_scores(&plain, &never, h(30), &ra, &rb)[0];
        let e = play_scores(&enhanced, &never, h(30), &ra, &rb)[0];
        assert!(e >= p);
    }
}

fn never_behind_by_more_than_one(
    subject: &CompiledMachine,
    opponent: &CompiledMachine,
    seed: u64,
    runs: u64,
) {
    for run in 0..runs {
        for t in [1, 2, 3, 7, 50] {
            let (ra, rb) = streams(seed, 1, run);
            let [mine, theirs] = play_scores(subject, opponent, h(t), &ra, &rb);
            assert!(
                theirs <= mine + 1,
                "{} vs {}: {mine}-{theirs}",
                subject.name(),
                opponent.name()
            );
            let (ra, rb) = streams(seed, 2, run);
            let [theirs, mine] = play_scores(opponent, subject, h(t), &ra, &rb);
            assert!(
                theirs <= mine + 1,
                "{} vs {}: {mine}-{theirs}",
                subject.name(),
                opponent.name()
            );
        }
    }
}

#[test]
fn never_loses_by_more_than_one_point() {
    let subjects = [
        compiled(ThreeState),
        compiled(FourState),
        compiled(FourStateEnhanced),
    ];
    let corpus: Vec<CompiledMachine> = BuiltinName::ALL.iter().map(|&n| compiled(n)).collect();
    for s in &subjects {
        for o in &corpus {
            never_behind_by_more_than_one(s, o, 17, 300);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..1_000 {
        let mut opp = support::random_machine(&mut rng, 1 + i % 6, i % 3 == 0);
        opp.last_slot_override = i % 5 == 0;
        let opp = CompiledMachine::new(&opp).unwrap();
        for s in &subjects {
            never_behind_by_more_than_one(s, &opp, i as u64, 20);
        }
    }
}
