//! Numerical checks behind the lower bounds on capture time.
//!
//! * Two "virtual devices" that may each send any number of packets per
//!   slot, succeeding only when the total is exactly one: sending 0 or 1
//!   packet with equal probability takes 2 slots on average.
//! * The 3-device, 0/1/2-packet relaxation: over
//!   `a, c >= 0, a + c <= 1, a^3 + (1-a-c)^3 + c^3 <= 3/4` the value
//!   `1 + (1 - 3(1-a-c)a^2) / (1 - a^3 - (1-a-c)^3 - c^3)` is minimized at
//!   `c = 0`, where it equals `z_3`.
//! * Everyone transmitting with probability `1/n` gives
//!   `1 / (1 - 1/n)^(n-1) <= e`, an upper bound on `z_n`.

use std::f64::consts::E;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CaptureEstimate, CaptureTable};
use crate::error::{Error, Result};
use crate::optimize::{linspace, refine_coordinates};
use crate::rng::{domain, RngStream, StreamId};
use crate::stats::Moments;

/// Simulates two independent devices, each sending `k` packets with
/// probability `packet_dist[k]` on every slot, until a slot carries
/// exactly one packet in total.
pub fn simulate_virtual_devices(
    packet_dist: &[f64],
    episodes: u64,
    seed: u64,
    max_slots: u64,
) -> Result<CaptureEstimate> {
    let total: f64 = packet_dist.iter().sum();
    if packet_dist.is_empty()
        || packet_dist.iter().any(|&p| !(0.0..=1.0).contains(&p))
        || (total - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidDistribution(format!(
            "packet-count distribution {packet_dist:?} must be a probability vector"
        )));
    }
    let (moments, censored) = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut devices: Vec<_> = (0..2)
                .map(|d| {
                    RngStream::new(seed, StreamId::new(domain::VIRTUAL_DEVICES, e, d)).generator()
                })
                .collect();
            (1..=max_slots).find(|_| {
                let packets: usize = devices.iter_mut().map(|g| g.categorical(packet_dist)).sum();
                packets == 1
            })
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

/// Objective of the 3-device relaxation; `+inf` outside the feasible set.
/// `a` is the probability of sending no packet, `c` of sending two.
pub fn relaxation_objective(a: f64, c: f64) -> f64 {
    let b = 1.0 - a - c;
    if a < 0.0 || c < 0.0 || b < -1e-15 {
        return f64::INFINITY;
    }
    let b = b.max(0.0);
    let same = a.powi(3) + b.powi(3) + c.powi(3);
    if same > 0.75 {
        return f64::INFINITY;
    }
    1.0 + (1.0 - 3.0 * b * a * a) / (1.0 - same)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationMinimum {
    pub a: f64,
    pub c: f64,
    pub value: f64,
}

/// Grid scan of the feasible triangle (`grid` points per axis) followed by
/// coordinate-wise golden-section refinement.
pub fn relaxation_infimum(grid: usize) -> RelaxationMinimum {
    let axis = linspace(0.0, 1.0, grid.max(3));
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &a in &axis {
        for &c in axis.iter().take_while(|&&c| a + c <= 1.0 + 1e-12) {
            let v = relaxation_objective(a, c);
            if v < best.0 {
                best = (v, a, c);
            }
        }
    }
    let radius = 2.0 / (axis.len() - 1) as f64;
    let mut x = [best.1, best.2];
    let value = refine_coordinates(
        |p| relaxation_objective(p[0], p[1]),
        &mut x,
        &[0.0, 0.0],
        &[1.0, 1.0],
        radius,
        1e-12,
    );
    RelaxationMinimum {
        a: x[0],
        c: x[1],
        value,
    }
}

/// Capture time when all `n` users transmit with probability `1/n` every
/// slot.
pub fn naive_bound(n: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let n = n as f64;
    1.0 / (1.0 - 1.0 / n).powf(n - 1.0)
}

/// Interval `[1 - (1 - 1/(2e))^(1/n), (1 - 1/(2e))^(1/n)]` that the first-slot
/// probability of any near-optimal `n`-user algorithm must lie in.
pub fn near_optimal_interval(n: usize) -> (f64, f64) {
    let hi = (1.0 - 1.0 / (2.0 * E)).powf(1.0 / n as f64);
    (1.0 - hi, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub z: f64,
    pub naive_bound: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverseReport {
    pub virtual_devices: CaptureEstimate,
    pub relaxation: RelaxationMinimum,
    pub z3: f64,
    pub bounds: Vec<BoundRow>,
}

impl ConverseReport {
    pub fn bounds_hold(&self) -> bool {
        self.bounds.iter().all(|b| b.within)
    }
}

pub fn converse_checks(
    table: &CaptureTable,
    episodes: u64,
    seed: u64,
    max_slots: u64,
) -> Result<ConverseReport> {
    if table.n_max() < 3 {
        return Err(Error::TableTooSmall {
            n: 3,
            n_max: table.n_max(),
        });
    }
    let virtual_devices = simulate_virtual_devices(&[0.5, 0.5], episodes, seed, max_slots)?;
    let relaxation = relaxation_infimum(1001);
    let bounds = table
        .rows()
        .map(|r| {
            let naive = naive_bound(r.n);
            BoundRow {
                n: r.n,
                z: r.z,
                naive_bound: naive,
                within: r.z <= naive + 1e-12 && naive <= E,
            }
        })
        .collect();
    Ok(ConverseReport {
        virtual_devices,
        relaxation,
        z3: table.z(3),
        bounds,
    })
}
