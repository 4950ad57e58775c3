//! Fixed-point passenger car units.
//!
//! Every traffic quantity (capacity, occupancy, counter, turn rate) is stored
//! as a signed integer count of 10^-5 PCU. All arithmetic inside the
//! simulator is exact integer arithmetic, so traces are bit-reproducible.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of fractional decimal digits carried by a [`Pcu`].
pub const PCU_DECIMALS: u32 = 5;

/// Scale factor between a whole PCU and its raw representation.
pub const PCU_SCALE: i64 = 100_000;

/// A PCU quantity scaled by 10^5.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Pcu(i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcuError {
    #[error("empty decimal literal")]
    Empty,
    #[error("invalid decimal literal `{0}`")]
    Malformed(String),
    #[error("`{0}` has more than {PCU_DECIMALS} fractional digits")]
    TooPrecise(String),
    #[error("`{0}` does not fit in 64-bit fixed point")]
    OutOfRange(String),
}

impl Pcu {
    pub const ZERO: Pcu = Pcu(0);
    pub const MAX: Pcu = Pcu(i64::MAX);
    pub const MIN: Pcu = Pcu(i64::MIN);

    /// Wraps an already-scaled integer.
    pub const fn from_scaled(raw: i64) -> Self {
        Pcu(raw)
    }

    /// Whole PCU, e.g. `Pcu::from_units(3)` is 3.00000.
    pub const fn from_units(units: i64) -> Self {
        Pcu(units * PCU_SCALE)
    }

    pub const fn scaled(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, rhs: Pcu) -> Option<Pcu> {
        self.0.checked_add(rhs.0).map(Pcu)
    }

    pub fn checked_sub(self, rhs: Pcu) -> Option<Pcu> {
        self.0.checked_sub(rhs.0).map(Pcu)
    }

    /// Multiplies by a dimensionless integer factor.
    pub fn checked_mul_int(self, factor: i64) -> Option<Pcu> {
        self.0.checked_mul(factor).map(Pcu)
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Renders the value with exactly five fractional digits.
    pub fn to_decimal(self) -> String {
        self.to_string()
    }
}

/// Parses a decimal literal with at most five fractional digits into a
/// scaled integer. Extra precision is rejected, never rounded.
pub fn pcu_from_decimal(text: &str) -> Result<Pcu, PcuError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(PcuError::Empty);
    }
    let malformed = || PcuError::Malformed(trimmed.to_string());
    let (negative, body) = match trimmed.as_bytes()[0] {
        b'-' => (true, &trimmed[1..]),
        b'+' => (false, &trimmed[1..]),
        _ => (false, trimmed),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(malformed());
    }
    if body.contains('.') && frac_part.is_empty() {
        return Err(malformed());
    }
    if frac_part.len() > PCU_DECIMALS as usize {
        return Err(PcuError::TooPrecise(trimmed.to_string()));
    }
    let out_of_range = || PcuError::OutOfRange(trimmed.to_string());
    let whole: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| out_of_range())?
    };
    let mut frac: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| malformed())?
    };
    for _ in frac_part.len()..PCU_DECIMALS as usize {
        frac *= 10;
    }
    let magnitude = whole
        .checked_mul(PCU_SCALE)
        .and_then(|w| w.checked_add(frac))
        .ok_or_else(out_of_range)?;
    Ok(Pcu(if negative { -magnitude } else { magnitude }))
}

impl FromStr for Pcu {
    type Err = PcuError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        pcu_from_decimal(s)
    }
}

impl fmt::Display for Pcu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let raw = i128::from(self.0);
        let sign = if raw < 0 { "-" } else { "" };
        let abs = raw.abs();
        let scale = i128::from(PCU_SCALE);
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / scale,
            abs % scale,
            width = PCU_DECIMALS as usize
        )
    }
}

impl Add for Pcu {
    type Output = Pcu;

    fn add(self, rhs: Pcu) -> Pcu {
        Pcu(self.0 + rhs.0)
    }
}

impl AddAssign for Pcu {
    fn add_assign(&mut self, rhs: Pcu) {
        self.0 += rhs.0;
    }
}

impl Sub for Pcu {
    type Output = Pcu;

    fn sub(self, rhs: Pcu) -> Pcu {
        Pcu(self.0 - rhs.0)
    }
}

impl SubAssign for Pcu {
    fn sub_assign(&mut self, rhs: Pcu) {
        self.0 -= rhs.0;
    }
}

impl Neg for Pcu {
    type Output = Pcu;

    fn neg(self) -> Pcu {
        Pcu(-self.0)
    }
}

impl Sum for Pcu {
    fn sum<I: Iterator<Item = Pcu>>(iter: I) -> Pcu {
        iter.fold(Pcu::ZERO, Add::add)
    }
}

/// Link capacity. A link with no capacity fact never reports full.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Capacity {
    Bounded(Pcu),
    Unbounded,
}

impl Capacity {
    pub fn limit(self) -> Option<Pcu> {
        match self {
            Capacity::Bounded(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }

    /// True while `occ` is strictly below the limit.
    pub fn admits(self, occ: Pcu) -> bool {
        match self {
            Capacity::Bounded(c) => occ < c,
            Capacity::Unbounded => true,
        }
    }
}
