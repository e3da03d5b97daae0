//! First capture over `m` orthogonal channels.
//!
//! On each slot every user picks a subset of channels to transmit on; the
//! slot succeeds when some channel carries exactly one packet. For two
//! users, picking each channel independently with probability 1/2 is
//! optimal with expected time `1 / (1 - 2^-m)`. For three users on two
//! channels, correlating the channels beats using them independently:
//! sending on exactly one of the two channels, chosen uniformly, achieves
//! 4/3, while the best independent policy only reaches about 1.34373.
//!
//! A three-user policy is scored through its first slot only: with
//! probability `beta` all users pick the same subset (nothing learned,
//! start over) and with probability `theta` no channel has a single sender
//! but one has exactly two (the third user is then singled out and sends
//! alone next slot). The expected capture time is `(1 + theta) / (1 - beta)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capture::CaptureEstimate;
use crate::error::{Error, Result};
use crate::optimize::{linspace, refine_coordinates, scan_then_refine};
use crate::rng::{domain, RngStream, StreamId};
use crate::stats::Moments;

const MAX_CHANNELS: usize = 16;

/// Two-channel, three-user policy family: `p` = P(send on channel 1),
/// `q` = P(send on channel 2 | sent on 1), `r` = P(send on channel 2 | not
/// on 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelPolicyParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl ChannelPolicyParams {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q), ("r", r)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidDistribution(format!(
                    "{name} = {v} is not a probability"
                )));
            }
        }
        Ok(Self { p, q, r })
    }

    /// Same per-channel probability on both channels, independently.
    pub fn independent(p: f64) -> Result<Self> {
        Self::new(p, p, p)
    }

    /// Parameters of the same subset distribution with the channels
    /// swapped.
    pub fn relabeled(&self) -> Self {
        let on2 = self.p * self.q + (1.0 - self.p) * self.r;
        let q = if on2 > 0.0 {
            self.p * self.q / on2
        } else {
            0.0
        };
        let r = if on2 < 1.0 {
            self.p * (1.0 - self.q) / (1.0 - on2)
        } else {
            0.0
        };
        Self { p: on2, q, r }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaTheta {
    pub beta: f64,
    pub theta: f64,
}

impl BetaTheta {
    /// `(1 + theta) / (1 - beta)`; infinite when `beta = 1`.
    pub fn renewal_value(&self) -> f64 {
        if self.beta >= 1.0 {
            f64::INFINITY
        } else {
            (1.0 + self.theta) / (1.0 - self.beta)
        }
    }
}

/// Distribution over the `2^m` channel subsets a user transmits on in one
/// slot. Index bit `k` set means "transmit on channel `k + 1`".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetDistribution {
    channels: usize,
    probs: Vec<f64>,
}

impl SubsetDistribution {
    pub fn new(channels: usize, probs: Vec<f64>) -> Result<Self> {
        if channels == 0 || channels > MAX_CHANNELS {
            return Err(Error::Unsupported(format!(
                "channel count must be in 1..={MAX_CHANNELS}, got {channels}"
            )));
        }
        if probs.len() != 1 << channels {
            return Err(Error::InvalidDistribution(format!(
                "{} subset probabilities given for {channels} channels (need {})",
                probs.len(),
                1usize << channels
            )));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(
                "subset probabilities must be in [0, 1] and sum to 1".into(),
            ));
        }
        Ok(Self { channels, probs })
    }

    /// Each channel used independently with probability `p`.
    pub fn independent(p: f64, channels: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "p = {p} is not a probability"
            )));
        }
        if channels == 0 || channels > MAX_CHANNELS {
            return Self::new(channels, Vec::new());
        }
        let probs = (0..1usize << channels)
            .map(|mask| {
                let on = mask.count_ones() as i32;
                p.powi(on) * (1.0 - p).powi(channels as i32 - on)
            })
            .collect();
        Self::new(channels, probs)
    }

    pub fn from_params(params: ChannelPolicyParams) -> Self {
        let ChannelPolicyParams { p, q, r } = params;
        Self {
            channels: 2,
            probs: vec![(1.0 - p) * (1.0 - r), p * (1.0 - q), (1.0 - p) * r, p * q],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Optimal two-user capture time on `m` channels, `1 / (1 - 2^-m)`.
pub fn two_user_capture_time(m: u32) -> f64 {
    1.0 / (1.0 - 0.5f64.powi(m as i32))
}

/// Two-user capture time of an arbitrary memoryless subset distribution:
/// slot 1 succeeds iff the users pick different subsets.
pub fn two_user_capture_time_for(dist: &SubsetDistribution) -> f64 {
    let same: f64 = dist.probs.iter().map(|p| p * p).sum();
    if same >= 1.0 {
        f64::INFINITY
    } else {
        1.0 / (1.0 - same)
    }
}

/// `beta` and `theta` for the `(p, q, r)` family.
pub fn beta_theta_full(params: ChannelPolicyParams) -> BetaTheta {
    let ChannelPolicyParams { p, q, r } = params;
    let np = 1.0 - p;
    let (nq, nr) = (1.0 - q, 1.0 - r);
    let beta = p.powi(3) * (q.powi(3) + nq.powi(3)) + np.powi(3) * (r.powi(3) + nr.powi(3));
    let theta = p.powi(3) * (3.0 * q * q * nq)
        + np.powi(3) * (3.0 * r * r * nr)
        + 3.0 * p * p * np * (1.0 - 2.0 * q * nq * nr - r * nq * nq);
    BetaTheta { beta, theta }
}

/// `beta` and `theta` when both channels are used independently with the
/// same probability `p`.
pub fn beta_theta_independent(p: f64) -> BetaTheta {
    let same = p.powi(3) + (1.0 - p).powi(3);
    let pair = 3.0 * p * p * (1.0 - p);
    BetaTheta {
        beta: same * same,
        theta: same * pair + pair * (1.0 - 3.0 * p * (1.0 - p).powi(2)),
    }
}

/// `beta` and `theta` of any three-user subset distribution, by summing
/// over all joint subset choices.
pub fn three_user_beta_theta(dist: &SubsetDistribution) -> BetaTheta {
    let n = dist.probs.len();
    let mut beta = 0.0;
    let mut theta = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let w = dist.probs[a] * dist.probs[b] * dist.probs[c];
                if w == 0.0 {
                    continue;
                }
                match classify_slot(&[a, b, c], dist.channels) {
                    SlotClass::AllSame => beta += w,
                    SlotClass::PairOnly => theta += w,
                    SlotClass::Success | SlotClass::Nothing => {}
                }
            }
        }
    }
    BetaTheta { beta, theta }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SlotClass {
    Success,
    /// No single sender anywhere but exactly two senders on some channel.
    PairOnly,
    AllSame,
    /// Different subsets, no single sender, no pair (impossible for
    /// three users; listed so the match is total).
    Nothing,
}

fn classify_slot(masks: &[usize], channels: usize) -> SlotClass {
    let mut pair = false;
    for ch in 0..channels {
        let count = masks.iter().filter(|&&m| m >> ch & 1 == 1).count();
        if count == 1 {
            return SlotClass::Success;
        }
        pair |= count == 2;
    }
    if masks.windows(2).all(|w| w[0] == w[1]) {
        SlotClass::AllSame
    } else if pair {
        SlotClass::PairOnly
    } else {
        SlotClass::Nothing
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Grid points per parameter axis for the full family.
    pub grid: usize,
    /// Grid points for the restricted (single-parameter) family.
    pub restricted_grid: usize,
    pub tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid: 101,
            restricted_grid: 1001,
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptimum {
    pub params: ChannelPolicyParams,
    pub beta_theta: BetaTheta,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeUserOptimum {
    pub full: FamilyOptimum,
    pub restricted: FamilyOptimum,
}

fn full_objective(x: &[f64]) -> f64 {
    match ChannelPolicyParams::new(x[0], x[1], x[2]) {
        Ok(params) => beta_theta_full(params).renewal_value(),
        Err(_) => f64::INFINITY,
    }
}

/// Minimizes `(1 + theta) / (1 - beta)` for three users on two channels,
/// over `(p, q, r)` in `[0,1]^3` and over the independent-channel family.
/// Points with `beta = 1` are infeasible.
pub fn optimize_three_user_two_channel(settings: OptimizerSettings) -> ThreeUserOptimum {
    let axis = linspace(0.0, 1.0, settings.grid.max(3));
    let best = axis
        .par_iter()
        .map(|&p| {
            let mut best = (f64::INFINITY, [p, 0.0, 0.0]);
            for &q in &axis {
                for &r in &axis {
                    let v = full_objective(&[p, q, r]);
                    if v < best.0 {
                        best = (v, [p, q, r]);
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(
            (f64::INFINITY, [0.0; 3]),
            |a, b| if b.0 < a.0 { b } else { a },
        );
    let mut x = best.1;
    let radius = 1.0 / (axis.len() - 1) as f64;
    let z = refine_coordinates(
        full_objective,
        &mut x,
        &[0.0; 3],
        &[1.0; 3],
        radius,
        settings.tol,
    );
    let params = ChannelPolicyParams {
        p: x[0],
        q: x[1],
        r: x[2],
    };
    let full = FamilyOptimum {
        params,
        beta_theta: beta_theta_full(params),
        z,
    };

    let grid = linspace(0.0, 1.0, settings.restricted_grid.max(3));
    let m = scan_then_refine(
        |p| beta_theta_independent(p).renewal_value(),
        &grid,
        settings.tol,
    );
    let restricted = FamilyOptimum {
        params: ChannelPolicyParams {
            p: m.x,
            q: m.x,
            r: m.x,
        },
        beta_theta: beta_theta_independent(m.x),
        z: m.value,
    };
    ThreeUserOptimum { full, restricted }
}

/// One row of a parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub params: ChannelPolicyParams,
    pub beta_theta: BetaTheta,
    pub z: f64,
}

/// Evaluates the restricted family on `steps` evenly spaced values of `p`.
pub fn sweep_restricted(steps: usize) -> Vec<SweepPoint> {
    linspace(0.0, 1.0, steps)
        .into_iter()
        .map(|p| {
            let bt = beta_theta_independent(p);
            SweepPoint {
                params: ChannelPolicyParams { p, q: p, r: p },
                beta_theta: bt,
                z: bt.renewal_value(),
            }
        })
        .collect()
}

/// Evaluates the full family on a `steps^3` grid.
pub fn sweep_full(steps: usize) -> Vec<SweepPoint> {
    let axis = linspace(0.0, 1.0, steps);
    let mut out = Vec::with_capacity(axis.len().pow(3));
    for &p in &axis {
        for &q in &axis {
            for &r in &axis {
                let params = ChannelPolicyParams { p, q, r };
                let bt = beta_theta_full(params);
                out.push(SweepPoint {
                    params,
                    beta_theta: bt,
                    z: bt.renewal_value(),
                });
            }
        }
    }
    out
}

/// Monte-Carlo capture time for `users` (2 or 3) independently drawing
/// their channel subsets from `dist` every slot.
///
/// With three users, a slot with no single sender but a pair on some
/// channel singles out the user outside the lowest-numbered such pair;
/// that user transmits alone on the next slot, which therefore succeeds.
pub fn simulate_multichannel(
    dist: &SubsetDistribution,
    users: usize,
    episodes: u64,
    seed: u64,
    max_slots: u64,
) -> Result<CaptureEstimate> {
    if !(2..=3).contains(&users) {
        return Err(Error::Unsupported(format!(
            "multichannel simulation supports 2 or 3 users, got {users}"
        )));
    }
    let pairing = domain::MULTICHANNEL + (users as u64) * 64 + dist.channels as u64;
    let (moments, censored) = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rngs: Vec<_> = (0..users as u64)
                .map(|u| RngStream::new(seed, StreamId::new(pairing, e, u)).generator())
                .collect();
            let mut masks = vec![0usize; users];
            for t in 1..=max_slots {
                for (m, g) in masks.iter_mut().zip(rngs.iter_mut()) {
                    *m = g.categorical(&dist.probs);
                }
                match classify_slot(&masks, dist.channels) {
                    SlotClass::Success => return Some(t),
                    SlotClass::PairOnly if users == 3 => {
                        return (t < max_slots).then_some(t + 1);
                    }
                    _ => {}
                }
            }
            None
        })
        .fold(
            || (Moments::default(), 0u64),
            |(mut m, c), slot| match slot {
                Some(t) => {
                    m.push(t);
                    (m, c)
                }
                None => (m, c + 1),
            },
        )
        .reduce(
            || (Moments::default(), 0),
            |(a, ca), (b, cb)| (a.merge(b), ca + cb),
        );
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

    #[test]
    fn two_user_formula() {
        assert_eq!(two_user_capture_time(1), 2.0);
        assert_eq!(two_user_capture_time(2), 4.0 / 3.0);
        let uniform = SubsetDistribution::independent(0.5, 3).unwrap();
        assert!((two_user_capture_time_for(&uniform) - two_user_capture_time(3)).abs() < 1e-15);
    }

    #[test]
    fn correlated_optimum_point() {
        let bt = beta_theta_full(ChannelPolicyParams::new(0.5, 0.0, 1.0).unwrap());
        assert_eq!(bt.beta, 0.25);
        assert_eq!(bt.theta, 0.0);
        assert!((bt.renewal_value() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_points() {
        assert_eq!(
            beta_theta_full(ChannelPolicyParams::new(1.0, 1.0, 1.0).unwrap()).beta,
            1.0
        );
        assert_eq!(beta_theta_independent(0.0).beta, 1.0);
        assert!(beta_theta_independent(0.0).renewal_value().is_infinite());
    }

    #[test]
    fn restricted_is_full_with_equal_parameters() {
        for p in [0.0, 0.1, 0.360882, 0.5, 0.77, 1.0] {
            let a = beta_theta_independent(p);
            let b = beta_theta_full(ChannelPolicyParams::independent(p).unwrap());
            assert!((a.beta - b.beta).abs() < 1e-15 && (a.theta - b.theta).abs() < 1e-15);
        }
    }

    #[test]
    fn formulas_match_enumeration() {
        for (p, q, r) in [
            (0.5, 0.0, 1.0),
            (0.3, 0.6, 0.2),
            (0.9, 0.1, 0.45),
            (0.0, 0.3, 0.7),
        ] {
            let params = ChannelPolicyParams::new(p, q, r).unwrap();
            let closed = beta_theta_full(params);
            let enumerated = three_user_beta_theta(&SubsetDistribution::from_params(params));
            assert!((closed.beta - enumerated.beta).abs() < 1e-14);
            assert!((closed.theta - enumerated.theta).abs() < 1e-14);
        }
    }

    #[test]
    fn single_channel_reduces_to_three_user_capture() {
        let p: f64 = 0.411972;
        let dist = SubsetDistribution::independent(p, 1).unwrap();
        let z = three_user_beta_theta(&dist).renewal_value();
        let direct = (1.0 + 3.0 * p * p * (1.0 - p)) / (1.0 - p.powi(3) - (1.0 - p).powi(3));
        assert!((z - direct).abs() < 1e-14);
    }

    #[test]
    fn distribution_validation() {
        assert!(SubsetDistribution::new(2, vec![0.5, 0.5]).is_err());
        assert!(SubsetDistribution::new(1, vec![0.7, 0.7]).is_err());
        assert!(SubsetDistribution::new(0, vec![1.0]).is_err());
        assert!(SubsetDistribution::independent(1.2, 2).is_err());
        assert!(ChannelPolicyParams::new(0.5, -0.1, 0.0).is_err());
    }

    #[test]
    fn unsupported_user_counts() {
        let d = SubsetDistribution::independent(0.5, 2).unwrap();
        assert!(simulate_multichannel(&d, 4, 10, 0, 10).is_err());
        assert!(simulate_multichannel(&d, 1, 10, 0, 10).is_err());
    }
}
