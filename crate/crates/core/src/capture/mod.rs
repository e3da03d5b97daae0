//! First capture of a channel by `n` indistinguishable users.
//!
//! Users transmit independently with probability `p_n`. After a slot with
//! `i` transmitters, `2 <= i <= n-1`, the users split into the `i`
//! transmitters and the `n-i` others; the group with the smaller expected
//! capture time continues alone and the other falls silent for good. The
//! expected times satisfy
//!
//! ```text
//! z_n = min over p of [1 + sum_{i=2}^{n-1} min(z_i, z_{n-i}) C(n,i) p^i (1-p)^(n-i)]
//!                     / [1 - p^n - (1-p)^n]
//! ```
//!
//! with `z_1 = 1`, which [`solve_capture_table`] evaluates by recursion.

pub mod converse;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{play_capture_episode, CaptureOutcome};
use crate::optimize::{linspace, scan_then_refine};
use crate::rng::{domain, RngStream, StreamId};
use crate::stats::{Estimate, Moments};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_SLOTS: u64 = 10_000;

/// Solved `(p_n, z_n)` for `n = 1..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureTable {
    p: Vec<f64>,
    z: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureRow {
    pub n: usize,
    pub p: f64,
    pub z: f64,
}

impl CaptureTable {
    pub fn n_max(&self) -> usize {
        self.z.len()
    }

    /// First-slot transmit probability for `n` users.
    pub fn p(&self, n: usize) -> f64 {
        self.p[n - 1]
    }

    /// Expected capture time for `n` users.
    pub fn z(&self, n: usize) -> f64 {
        self.z[n - 1]
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z
    }

    pub fn rows(&self) -> impl Iterator<Item = CaptureRow> + '_ {
        self.p
            .iter()
            .zip(&self.z)
            .enumerate()
            .map(|(i, (&p, &z))| CaptureRow { n: i + 1, p, z })
    }
}

/// Binomial probabilities `C(n,i) p^i (1-p)^(n-i)` for `i = 0..=n`.
fn binomial_row(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    if n <= 1000 {
        let mut coeff = 1.0f64;
        (0..=n)
            .map(|i| {
                if i > 0 {
                    coeff = coeff * (n - i + 1) as f64 / i as f64;
                }
                coeff * p.powi(i as i32) * q.powi((n - i) as i32)
            })
            .collect()
    } else {
        let mut ln_fact = vec![0.0f64; n + 1];
        for k in 1..=n {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let (lp, lq) = (p.ln(), q.ln());
        (0..=n)
            .map(|i| {
                (ln_fact[n] - ln_fact[i] - ln_fact[n - i] + i as f64 * lp + (n - i) as f64 * lq)
                    .exp()
            })
            .collect()
    }
}

/// Expected capture time for `n >= 2` users that transmit with probability
/// `p` on the first slot and then follow the table for smaller groups.
/// `z_prefix` must hold `z_1..z_{n-1}`.
pub fn capture_objective(n: usize, p: f64, z_prefix: &[f64]) -> Result<f64> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "user count",
            min: 2,
            got: n as u64,
        });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateProbability(p));
    }
    if z_prefix.len() < n - 1 {
        return Err(Error::TableTooSmall {
            n,
            n_max: z_prefix.len() + 1,
        });
    }
    Ok(objective_unchecked(n, p, z_prefix))
}

fn objective_unchecked(n: usize, p: f64, z: &[f64]) -> f64 {
    let pmf = binomial_row(n, p);
    let numerator = 1.0
        + (2..n)
            .map(|i| z[i - 1].min(z[n - i - 1]) * pmf[i])
            .sum::<f64>();
    let denominator = 1.0 - p.powi(n as i32) - (1.0 - p).powi(n as i32);
    numerator / denominator
}

/// Solves the recursion for `n = 1..=n_max`. Each minimization scans a
/// grid of step `min(1e-3, 1/(10n))` over `(0,1)` and then golden-section
/// refines the best bracket to width `tol`.
pub fn solve_capture_table(n_max: usize, tol: f64) -> Result<CaptureTable> {
    if n_max == 0 {
        return Err(Error::OutOfRange {
            what: "n_max",
            min: 1,
            got: 0,
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut p = vec![1.0];
    let mut z = vec![1.0];
    for n in 2..=n_max {
        let step = (1e-3f64).min(1.0 / (10.0 * n as f64));
        let points = (1.0 / step).round() as usize - 1;
        let grid = linspace(step, 1.0 - step, points);
        let best = scan_then_refine(|x| objective_unchecked(n, x, &z), &grid, tol);
        p.push(best.x);
        z.push(best.value);
    }
    Ok(CaptureTable { p, z })
}

/// The group-splitting rule every user runs, derived from a solved table.
#[derive(Clone, Debug, PartialEq)]
pub struct CapturePolicy {
    table: CaptureTable,
}

impl CapturePolicy {
    pub fn new(table: CaptureTable) -> Self {
        Self { table }
    }

    pub fn n_max(&self) -> usize {
        self.table.n_max()
    }

    pub fn table(&self) -> &CaptureTable {
        &self.table
    }

    /// Transmit probability for every member of an active group of size `m`.
    pub fn transmit_prob(&self, m: usize) -> f64 {
        if m <= 1 {
            1.0
        } else {
            self.table.p(m)
        }
    }

    /// After `i` of `m` active users collided, whether the transmitters
    /// (rather than the silent users) stay active. Ties keep the
    /// transmitters.
    pub fn keep_transmitters(&self, m: usize, i: usize) -> bool {
        if m == 3 && i == 2 {
            // the lone silent user sends by itself on the next slot
            return false;
        }
        self.table.z(i) <= self.table.z(m - i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureEstimate {
    /// Mean and standard error over captured episodes only.
    pub estimate: Estimate,
    pub episodes: u64,
    pub censored: u64,
    pub max_slots: u64,
}

/// Monte-Carlo capture time for `n` users under `table`'s policy. Episode
/// `e`, user `u` draws from stream `(seed, (CAPTURE + n, e, u))`.
pub fn simulate_capture(
    n: usize,
    table: &CaptureTable,
    episodes: u64,
    seed: u64,
    max_slots: u64,
) -> Result<CaptureEstimate> {
    if n == 0 || n > table.n_max() {
        return Err(Error::TableTooSmall {
            n,
            n_max: table.n_max(),
        });
    }
    let policy = CapturePolicy::new(table.clone());
    let pairing = domain::CAPTURE + n as u64;
    let (moments, censored) = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rngs: Vec<_> = (0..n as u64)
                .map(|u| RngStream::new(seed, StreamId::new(pairing, e, u)).generator())
                .collect();
            play_capture_episode(&policy, n, &mut rngs, max_slots)
        })
        .try_fold(
            || (Moments::default(), 0u64),
            |(mut m, c), outcome| {
                outcome.map(|o| match o {
                    CaptureOutcome::Captured { slot } => {
                        m.push(slot);
                        (m, c)
                    }
                    CaptureOutcome::Censored { .. } => (m, c + 1),
                })
            },
        )
        .try_reduce(
            || (Moments::default(), 0),
            |(a, ca), (b, cb)| Ok((a.merge(b), ca + cb)),
        )?;
    Ok(CaptureEstimate {
        estimate: moments.estimate(),
        episodes,
        censored,
        max_slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SlotRng;

    #[test]
    fn objective_rejects_degenerate_probability() {
        let z = [1.0, 2.0];
        assert!(matches!(
            capture_objective(3, 0.0, &z),
            Err(Error::DegenerateProbability(_))
        ));
        assert!(capture_objective(3, 1.0, &z).is_err());
        assert!(capture_objective(1, 0.5, &z).is_err());
        assert!(capture_objective(4, 0.5, &z).is_err());
    }

    #[test]
    fn objective_known_points() {
        assert_eq!(capture_objective(2, 0.5, &[1.0]).unwrap(), 2.0);
        // closed form for n = 3 with z_1 = 1
        let p: f64 = 0.411972;
        let direct = (1.0 + 3.0 * p * p * (1.0 - p)) / (1.0 - p.powi(3) - (1.0 - p).powi(3));
        let via = capture_objective(3, p, &[1.0, 2.0]).unwrap();
        assert!((direct - via).abs() < 1e-15);
        assert!((via - 1.78795).abs() < 1e-5);
    }

    #[test]
    fn binomial_rows_sum_to_one() {
        for n in [1, 2, 7, 50, 1000, 1500] {
            for p in [0.01, 0.3, 0.5, 0.97] {
                let s: f64 = binomial_row(n, p).iter().sum();
                assert!((s - 1.0).abs() < 1e-9, "n={n} p={p} sum={s}");
            }
        }
    }

    #[test]
    fn small_table() {
        let t = solve_capture_table(3, DEFAULT_TOLERANCE).unwrap();
        assert_eq!((t.p(1), t.z(1)), (1.0, 1.0));
        assert!((t.p(2) - 0.5).abs() < 1e-6);
        assert!((t.z(2) - 2.0).abs() < 1e-12);
        assert!((t.p(3) - 0.411972).abs() < 1e-5);
        assert!(t.z(3) < t.z(2));
    }

    #[test]
    fn solver_rejects_bad_arguments() {
        assert!(solve_capture_table(0, 1e-9).is_err());
        assert!(solve_capture_table(3, 0.0).is_err());
    }

    #[test]
    fn single_user_captures_immediately() {
        let t = solve_capture_table(1, DEFAULT_TOLERANCE).unwrap();
        let est = simulate_capture(1, &t, 1000, 3, DEFAULT_MAX_SLOTS).unwrap();
        assert_eq!(est.estimate.mean, 1.0);
        assert_eq!(est.estimate.stderr, 0.0);
        assert_eq!(est.censored, 0);
    }

    #[test]
    fn three_user_collision_hands_slot_to_silent_user() {
        let t = solve_capture_table(3, DEFAULT_TOLERANCE).unwrap();
        let policy = CapturePolicy::new(t);
        assert!(!policy.keep_transmitters(3, 2));
        // find a seed whose first slot has exactly two transmitters, then
        // check the episode ends on slot 2
        let p3 = policy.transmit_prob(3);
        let mut found = 0;
        for e in 0..2000u64 {
            let streams: Vec<_> = (0..3)
                .map(|u| RngStream::new(11, StreamId::new(0, e, u)))
                .collect();
            let first: usize = streams
                .iter()
                .map(|s| usize::from(s.generator().bernoulli(p3)))
                .sum();
            if first == 2 {
                let mut rngs: Vec<SlotRng> = streams.iter().map(|s| s.generator()).collect();
                let out = play_capture_episode(&policy, 3, &mut rngs, 10).unwrap();
                assert_eq!(out, CaptureOutcome::Captured { slot: 2 });
                found += 1;
            }
        }
        assert!(found > 100);
    }

    #[test]
    fn censoring_is_reported() {
        let t = solve_capture_table(2, DEFAULT_TOLERANCE).unwrap();
        let est = simulate_capture(2, &t, 20_000, 5, 1).unwrap();
        // P[no success on slot 1] = 1/2
        assert!(est.censored > 9_000 && est.censored < 11_000);
        assert_eq!(est.estimate.samples + est.censored, 20_000);
        assert_eq!(est.estimate.mean, 1.0);
    }

    #[test]
    fn episode_argument_checks() {
        let policy = CapturePolicy::new(solve_capture_table(2, 1e-9).unwrap());
        let mut rngs = vec![RngStream::new(0, StreamId::new(0, 0, 0)).generator()];
        assert!(play_capture_episode(&policy, 2, &mut rngs, 10).is_err());
        assert!(play_capture_episode(&policy, 0, &mut [], 10).is_err());
        assert!(play_capture_episode(&policy, 1, &mut rngs, 0).is_err());
        let mut three: Vec<_> = (0..3)
            .map(|u| RngStream::new(0, StreamId::new(0, 0, u)).generator())
            .collect();
        assert!(matches!(
            play_capture_episode(&policy, 3, &mut three, 10),
            Err(Error::TableTooSmall { .. })
        ));
    }
}
