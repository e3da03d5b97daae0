//! Closed-form expected scores for 3-State / 4-State, used as oracles for
//! the simulator.
//!
//! Values are exact rationals. The `2^-T` tails are kept for horizons up to
//! [`EXACT_HORIZON_LIMIT`]; past that the limiting value is returned and
//! flagged.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::game::Horizon;

pub const EXACT_HORIZON_LIMIT: u32 = 200;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedForm {
    value: BigRational,
    limiting: bool,
}

impl ClosedForm {
    pub fn exact(&self) -> &BigRational {
        &self.value
    }

    /// Nearest `f64`.
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }

    /// True when the `2^-T` tail was dropped because `T` exceeded
    /// [`EXACT_HORIZON_LIMIT`].
    pub fn is_limiting(&self) -> bool {
        self.limiting
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for ClosedForm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `coeff * 2^-exp`, or zero (flagged) beyond the exact range.
fn tail(coeff: BigRational, exp: u32, horizon: u32) -> (BigRational, bool) {
    if horizon > EXACT_HORIZON_LIMIT {
        (BigRational::zero(), true)
    } else {
        let denom = BigInt::one() << exp as usize;
        (coeff / BigRational::from_integer(denom), false)
    }
}

fn form(main: BigRational, (t, limiting): (BigRational, bool)) -> ClosedForm {
    ClosedForm {
        value: main + t,
        limiting,
    }
}

/// Largest achievable self-competition score, `(T-1)/2 + 2^-(T+1)`,
/// attained by 3-State and 4-State.
pub fn alpha_optimal(horizon: Horizon) -> ClosedForm {
    let t = horizon.get();
    form(rat(i64::from(t) - 1, 2), tail(BigRational::one(), t + 1, t))
}

/// 4-State against NeverTransmit: `T - 2 + 3 * 2^-T`.
pub fn beta4(horizon: Horizon) -> ClosedForm {
    let t = horizon.get();
    form(
        BigRational::from_integer(BigInt::from(i64::from(t) - 2)),
        tail(rat(3, 1), t, t),
    )
}

/// 3-State against NeverTransmit: `T/2 - 1/3 + 2^-T / 3` for even `T`,
/// `T/2 - 1/6 + 2^-T / 3` for odd `T`.
pub fn beta3(horizon: Horizon) -> ClosedForm {
    let t = horizon.get();
    let offset = if t.is_multiple_of(2) {
        rat(1, 3)
    } else {
        rat(1, 6)
    };
    form(rat(i64::from(t), 2) - offset, tail(rat(1, 3), t, t))
}

/// Expected number of slots before the first success when both players
/// transmit with probability 1/2 (equivalently, a 1/2-transmitter facing
/// a silent opponent), truncated at `T`: `1 - 2^-T`.
pub fn expected_y(horizon: Horizon) -> ClosedForm {
    let t = horizon.get();
    let (tl, limiting) = tail(BigRational::one(), t, t);
    ClosedForm {
        value: BigRational::one() - tl,
        limiting,
    }
}
