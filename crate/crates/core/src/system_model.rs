//! System states, unit geometry on the circle and the three balance
//! conditions.
//!
//! A state of an `n`-unit system is stored as an integer whose bit `n - i`
//! holds the status of unit `i` (unit 1 is the most significant bit, 1 =
//! nonfailed). The canonical index of a state is `2^n - bits`, so the
//! all-ones state has index 1 and the all-zeros state index `2^n`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::continuous::InterShockSpec;
use crate::error::{Error, Result};

/// Capacity bound on the number of units.
pub const MAX_UNITS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    bits: u32,
    n: u8,
}

impl SystemState {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        check_unit_count(n)?;
        if n < 32 && u64::from(bits) >= 1u64 << n {
            return Err(Error::InvalidConfig(format!(
                "state bits {bits:#b} do not fit in {n} units"
            )));
        }
        Ok(SystemState { bits, n: n as u8 })
    }

    /// Builds a state from a tuple of unit statuses, unit 1 first.
    pub fn from_tuple(units: &[u8]) -> Result<Self> {
        let n = units.len();
        check_unit_count(n)?;
        let mut bits = 0u32;
        for &u in units {
            if u > 1 {
                return Err(Error::InvalidConfig(format!("unit status {u} is not binary")));
            }
            bits = (bits << 1) | u32::from(u);
        }
        Ok(SystemState { bits, n: n as u8 })
    }

    /// Builds a state whose operating units are `members` (1-based).
    pub fn from_members(n: usize, members: &[usize]) -> Result<Self> {
        check_unit_count(n)?;
        let mut bits = 0u32;
        for &i in members {
            bits |= unit_bit(i, n)?;
        }
        Ok(SystemState { bits, n: n as u8 })
    }

    pub fn all_up(n: usize) -> Result<Self> {
        check_unit_count(n)?;
        Ok(SystemState {
            bits: full_mask(n),
            n: n as u8,
        })
    }

    /// Inverse of [`SystemState::index`].
    pub fn from_index(index: u64, n: usize) -> Result<Self> {
        check_unit_count(n)?;
        let total = 1u64 << n;
        if index == 0 || index > total {
            return Err(Error::InvalidConfig(format!(
                "state index {index} outside 1..={total}"
            )));
        }
        Ok(SystemState {
            bits: (total - index) as u32,
            n: n as u8,
        })
    }

    pub(crate) fn from_raw(bits: u32, n: usize) -> Self {
        debug_assert!(n <= MAX_UNITS && u64::from(bits) < 1u64 << n);
        SystemState { bits, n: n as u8 }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n(&self) -> usize {
        usize::from(self.n)
    }

    /// Canonical index `2^n - bits` (1-based).
    pub fn index(&self) -> u64 {
        (1u64 << self.n) - u64::from(self.bits)
    }

    /// Status of unit `i` (1-based).
    pub fn is_up(&self, i: usize) -> Result<bool> {
        Ok(self.bits & unit_bit(i, self.n())? != 0)
    }

    pub fn up_count(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Operating units in ascending order (1-based).
    pub fn operating_units(&self) -> Vec<usize> {
        let n = self.n();
        (1..=n).filter(|&i| self.bits & (1 << (n - i)) != 0).collect()
    }

    /// Unit statuses, unit 1 first.
    pub fn tuple(&self) -> Vec<u8> {
        let n = self.n();
        (1..=n).map(|i| ((self.bits >> (n - i)) & 1) as u8).collect()
    }

    /// True when every operating unit of `other` also operates in `self`.
    pub fn contains(&self, other: &SystemState) -> bool {
        other.bits & !self.bits == 0
    }

    /// Moves every unit `s` positions forward around the circle.
    pub fn rotate(&self, s: usize) -> SystemState {
        let n = self.n();
        let mut bits = 0u32;
        for i in self.operating_units() {
            let j = (i - 1 + s) % n + 1;
            bits |= 1 << (n - j);
        }
        SystemState { bits, n: self.n }
    }

    /// Mirrors the state across the axis at angle `pi * axis / n`.
    pub fn reflect(&self, axis: usize) -> SystemState {
        let n = self.n();
        SystemState {
            bits: reflect_bits(self.bits, n, axis),
            n: self.n,
        }
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.tuple().iter().map(u8::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub(crate) fn check_unit_count(n: usize) -> Result<()> {
    if (1..=MAX_UNITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnitCount(n))
    }
}

pub(crate) fn full_mask(n: usize) -> u32 {
    ((1u64 << n) - 1) as u32
}

fn unit_bit(i: usize, n: usize) -> Result<u32> {
    if i == 0 || i > n {
        return Err(Error::UnitIndexOutOfRange { index: i, n });
    }
    Ok(1 << (n - i))
}

/// Position of the unit stored at bit `bit` (0 = unit 1).
#[inline]
fn bit_position(bit: usize, n: usize) -> usize {
    n - 1 - bit
}

fn rotate_bits(bits: u32, n: usize, s: usize) -> u32 {
    let mut out = 0u32;
    let mut rest = bits;
    while rest != 0 {
        let bit = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let pos = (bit_position(bit, n) + s) % n;
        out |= 1 << bit_position(pos, n);
    }
    out
}

// Reflection across the axis at angle pi*axis/n sends position t to axis - t.
fn reflect_bits(bits: u32, n: usize, axis: usize) -> u32 {
    let mut out = 0u32;
    let mut rest = bits;
    while rest != 0 {
        let bit = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let pos = (axis % n + n - bit_position(bit, n)) % n;
        out |= 1 << bit_position(pos, n);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BalanceCondition {
    /// A pair of perpendicular symmetry axes exists.
    #[serde(rename = "BC1")]
    Bc1,
    /// The operating units are spread proportionately (rotational symmetry).
    #[serde(rename = "BC2")]
    Bc2,
    /// The center of gravity sits at the center of the circle.
    #[serde(rename = "BC3")]
    Bc3,
}

impl BalanceCondition {
    pub const ALL: [BalanceCondition; 3] =
        [BalanceCondition::Bc1, BalanceCondition::Bc2, BalanceCondition::Bc3];

    pub fn label(self) -> &'static str {
        match self {
            BalanceCondition::Bc1 => "BC1",
            BalanceCondition::Bc2 => "BC2",
            BalanceCondition::Bc3 => "BC3",
        }
    }

    /// Checks that the condition is defined for an `n`-unit system.
    pub fn check_units(self, n: usize) -> Result<()> {
        check_unit_count(n)?;
        if self == BalanceCondition::Bc1 && n % 2 == 1 {
            return Err(Error::OddNUnsupported(n));
        }
        Ok(())
    }
}

impl fmt::Display for BalanceCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BalanceCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BC1" => Ok(BalanceCondition::Bc1),
            "BC2" => Ok(BalanceCondition::Bc2),
            "BC3" => Ok(BalanceCondition::Bc3),
            other => Err(Error::InvalidConfig(format!(
                "unknown balance condition `{other}`"
            ))),
        }
    }
}

/// Angle of unit `i` (1-based) on an `n`-unit circle; unit 1 sits at 0.
pub fn unit_angle(i: usize, n: usize) -> Result<f64> {
    check_unit_count(n)?;
    if i == 0 || i > n {
        return Err(Error::UnitIndexOutOfRange { index: i, n });
    }
    Ok(2.0 * PI * (i - 1) as f64 / n as f64)
}

/// Balance predicate specialised to one `(n, bc)` pair, operating on raw
/// state bits. Trigonometric tables are built once.
#[derive(Debug, Clone)]
pub struct BalanceChecker {
    n: usize,
    bc: BalanceCondition,
    cos: Vec<f64>,
    sin: Vec<f64>,
    tolerance: f64,
}

impl BalanceChecker {
    pub fn new(n: usize, bc: BalanceCondition) -> Result<Self> {
        bc.check_units(n)?;
        let angles: Vec<f64> = (0..n)
            .map(|bit| 2.0 * PI * bit_position(bit, n) as f64 / n as f64)
            .collect();
        Ok(BalanceChecker {
            n,
            bc,
            cos: angles.iter().map(|a| a.cos()).collect(),
            sin: angles.iter().map(|a| a.sin()).collect(),
            tolerance: 1e-9 * n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn condition(&self) -> BalanceCondition {
        self.bc
    }

    pub fn is_balanced_bits(&self, bits: u32) -> bool {
        if bits == 0 {
            return false;
        }
        match self.bc {
            BalanceCondition::Bc1 => self.perpendicular_symmetry(bits),
            BalanceCondition::Bc2 => self.rotational_symmetry(bits),
            BalanceCondition::Bc3 => self.centroid_norm(bits) <= self.tolerance,
        }
    }

    /// Norm of the vector sum of the operating unit positions.
    pub fn centroid_norm(&self, bits: u32) -> f64 {
        let (mut x, mut y) = (0.0, 0.0);
        let mut rest = bits;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            x += self.cos[bit];
            y += self.sin[bit];
        }
        x.hypot(y)
    }

    fn perpendicular_symmetry(&self, bits: u32) -> bool {
        let half = self.n / 2;
        (0..half).any(|axis| {
            reflect_bits(bits, self.n, axis) == bits
                && reflect_bits(bits, self.n, axis + half) == bits
        })
    }

    fn rotational_symmetry(&self, bits: u32) -> bool {
        (1..self.n).any(|s| rotate_bits(bits, self.n, s) == bits)
    }
}

pub fn is_balanced_bc3(state: &SystemState) -> bool {
    BalanceChecker::new(state.n(), BalanceCondition::Bc3)
        .map(|c| c.is_balanced_bits(state.bits))
        .unwrap_or(false)
}

pub fn is_balanced_bc1(state: &SystemState) -> Result<bool> {
    let checker = BalanceChecker::new(state.n(), BalanceCondition::Bc1)?;
    Ok(checker.is_balanced_bits(state.bits))
}

pub fn is_balanced_bc2(state: &SystemState) -> bool {
    BalanceChecker::new(state.n(), BalanceCondition::Bc2)
        .map(|c| c.is_balanced_bits(state.bits))
        .unwrap_or(false)
}

pub fn is_balanced(state: &SystemState, bc: BalanceCondition) -> Result<bool> {
    match bc {
        BalanceCondition::Bc1 => is_balanced_bc1(state),
        BalanceCondition::Bc2 => Ok(is_balanced_bc2(state)),
        BalanceCondition::Bc3 => Ok(is_balanced_bc3(state)),
    }
}

/// `(n, k, r, bc)` plus an optional inter-shock law for continuous-time work.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n: usize,
    pub k: usize,
    pub r: f64,
    pub bc: BalanceCondition,
    pub shock: Option<InterShockSpec>,
}

impl SystemConfig {
    pub fn new(n: usize, k: usize, r: f64, bc: BalanceCondition) -> Result<Self> {
        let config = SystemConfig {
            n,
            k,
            r,
            bc,
            shock: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_shock(mut self, shock: InterShockSpec) -> Self {
        self.shock = Some(shock);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_count(self.n)?;
        if self.k < 2 || self.k > self.n {
            return Err(Error::InvalidConfig(format!(
                "k = {} must satisfy 2 <= k <= n = {}",
                self.k, self.n
            )));
        }
        check_reliability(self.r)?;
        self.bc.check_units(self.n)
    }

    /// One-step failure probability `1 - r`.
    pub fn r_tilde(&self) -> f64 {
        1.0 - self.r
    }
}

pub(crate) fn check_reliability(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "unit reliability r = {r} must lie strictly between 0 and 1"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn st(t: &[u8]) -> SystemState {
        SystemState::from_tuple(t).unwrap()
    }

    #[test]
    fn canonical_index_matches_descending_binary_listing() {
        assert_eq!(st(&[1, 1, 1]).index(), 1);
        assert_eq!(st(&[1, 1, 0]).index(), 2);
        assert_eq!(st(&[0, 0, 0]).index(), 8);
        assert_eq!(st(&[1, 0, 1, 0]).index(), 6);
        assert_eq!(SystemState::from_index(11, 4).unwrap(), st(&[0, 1, 0, 1]));
        assert!(SystemState::from_index(17, 4).is_err());
        assert!(SystemState::new(0, 31).is_err());
        assert!(SystemState::new(16, 4).is_err());
    }

    #[test]
    fn unit_angles() {
        assert_eq!(unit_angle(1, 4).unwrap(), 0.0);
        assert_relative_eq!(unit_angle(3, 4).unwrap(), PI);
        assert_relative_eq!(unit_angle(2, 6).unwrap(), PI / 3.0);
        assert_eq!(
            unit_angle(5, 4),
            Err(Error::UnitIndexOutOfRange { index: 5, n: 4 })
        );
        assert!(unit_angle(0, 4).is_err());
    }

    #[test]
    fn bc3_examples() {
        assert!(is_balanced_bc3(&st(&[1, 0, 1, 0])));
        assert!(!is_balanced_bc3(&st(&[1, 1, 0, 0])));
        assert!(is_balanced_bc3(&st(&[1, 1, 1, 1])));
        assert!(!is_balanced_bc3(&st(&[0, 0, 0, 0])));
        // units 1, 3, 5 of a hexagon form an equilateral triangle
        assert!(is_balanced_bc3(&st(&[1, 0, 1, 0, 1, 0])));
    }

    #[test]
    fn bc1_examples() {
        assert!(is_balanced_bc1(&st(&[1, 0, 1, 0])).unwrap());
        assert!(!is_balanced_bc1(&st(&[1, 1, 0, 0])).unwrap());
        assert!(is_balanced_bc1(&st(&[1; 6])).unwrap());
        assert!(!is_balanced_bc1(&st(&[0; 6])).unwrap());
        assert_eq!(is_balanced_bc1(&st(&[1, 1, 1])), Err(Error::OddNUnsupported(3)));
        // equilateral triangle has no perpendicular pair of symmetry axes
        assert!(!is_balanced_bc1(&st(&[1, 0, 1, 0, 1, 0])).unwrap());
    }

    #[test]
    fn bc2_examples() {
        assert!(is_balanced_bc2(&st(&[1, 0, 1, 0, 1, 0])));
        assert!(!is_balanced_bc2(&st(&[1, 1, 0, 0, 0, 0])));
        assert!(is_balanced_bc2(&st(&[1, 1, 1, 1])));
        assert!(!is_balanced_bc2(&st(&[0, 0, 0, 0])));
    }

    #[test]
    fn dispatch() {
        let s = st(&[1, 0, 1, 0]);
        assert!(is_balanced(&s, BalanceCondition::Bc3).unwrap());
        assert!(!is_balanced(&st(&[0, 0, 0, 0]), BalanceCondition::Bc3).unwrap());
        assert!(is_balanced(&s, BalanceCondition::Bc2).unwrap());
        assert!(is_balanced(&st(&[1, 1, 1]), BalanceCondition::Bc1).is_err());
    }

    #[test]
    fn table_one_nonfailed_balanced_sets() {
        // BC3-balanced states of the 4-unit circle (not the rebalanced ones)
        let balanced: Vec<u64> = (1..=16)
            .filter(|&j| is_balanced_bc3(&SystemState::from_index(j, 4).unwrap()))
            .collect();
        assert_eq!(balanced, vec![1, 6, 11]);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::new(4, 2, 0.7, BalanceCondition::Bc3).is_ok());
        assert!(SystemConfig::new(4, 5, 0.7, BalanceCondition::Bc3).is_err());
        assert!(SystemConfig::new(4, 1, 0.7, BalanceCondition::Bc3).is_err());
        assert!(SystemConfig::new(4, 2, 0.0, BalanceCondition::Bc3).is_err());
        assert!(SystemConfig::new(4, 2, 1.0, BalanceCondition::Bc3).is_err());
        assert_eq!(
            SystemConfig::new(3, 2, 0.5, BalanceCondition::Bc1),
            Err(Error::OddNUnsupported(3))
        );
        let c = SystemConfig::new(4, 2, 0.7, BalanceCondition::Bc3).unwrap();
        assert_relative_eq!(c.r_tilde(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn bc_labels_roundtrip() {
        for bc in BalanceCondition::ALL {
            assert_eq!(bc.label().parse::<BalanceCondition>().unwrap(), bc);
        }
        assert!("BC4".parse::<BalanceCondition>().is_err());
    }

    #[test]
    fn bc1_and_bc2_imply_bc3_exhaustively() {
        for n in (2..=12).step_by(2) {
            let c1 = BalanceChecker::new(n, BalanceCondition::Bc1).unwrap();
            let c2 = BalanceChecker::new(n, BalanceCondition::Bc2).unwrap();
            let c3 = BalanceChecker::new(n, BalanceCondition::Bc3).unwrap();
            for bits in 0..(1u32 << n) {
                if c1.is_balanced_bits(bits) || c2.is_balanced_bits(bits) {
                    assert!(c3.is_balanced_bits(bits), "n={n} bits={bits:b}");
                }
            }
        }
        for n in (3..=11).step_by(2) {
            let c2 = BalanceChecker::new(n, BalanceCondition::Bc2).unwrap();
            let c3 = BalanceChecker::new(n, BalanceCondition::Bc3).unwrap();
            for bits in 0..(1u32 << n) {
                if c2.is_balanced_bits(bits) {
                    assert!(c3.is_balanced_bits(bits), "n={n} bits={bits:b}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bc3_invariant_under_rotation_and_reflection(
            n in 2usize..=14, raw in any::<u32>(), s in 0usize..14, axis in 0usize..28,
        ) {
            let state = SystemState::new(raw & full_mask(n), n).unwrap();
            let balanced = is_balanced_bc3(&state);
            prop_assert_eq!(is_balanced_bc3(&state.rotate(s)), balanced);
            prop_assert_eq!(is_balanced_bc3(&state.reflect(axis)), balanced);
            prop_assert_eq!(state.rotate(s).up_count(), state.up_count());
        }

        #[test]
        fn tuple_roundtrip(n in 1usize..=30, raw in any::<u32>()) {
            let state = SystemState::new(raw & full_mask(n), n).unwrap();
            prop_assert_eq!(SystemState::from_tuple(&state.tuple()).unwrap(), state);
            prop_assert_eq!(SystemState::from_index(state.index(), n).unwrap(), state);
            prop_assert_eq!(
                SystemState::from_members(n, &state.operating_units()).unwrap(),
                state
            );
        }
    }
}
