//! Minimum tie-sets, the rebalancing rule and system reliability.

use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::system_model::{check_reliability, BalanceChecker, BalanceCondition, SystemState};

/// Largest `n` accepted by [`system_reliability_exact`].
pub const EXACT_RELIABILITY_MAX_UNITS: usize = 20;

/// An inclusion-minimal balanced set of at least `k` units.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TieSet {
    members: Vec<usize>,
    state: SystemState,
}

impl TieSet {
    fn from_state(state: SystemState) -> Self {
        TieSet {
            members: state.operating_units(),
            state,
        }
    }

    /// Unit indices, ascending, 1-based.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The state in which exactly the members operate.
    pub fn as_state(&self) -> SystemState {
        self.state
    }
}

impl fmt::Display for TieSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// The collection of minimum tie-sets for one `(n, k, bc)`, ordered by
/// cardinality then lexicographically by members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieSetCollection {
    n: usize,
    k: usize,
    bc: BalanceCondition,
    tiesets: Vec<TieSet>,
}

impl TieSetCollection {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn condition(&self) -> BalanceCondition {
        self.bc
    }

    pub fn tiesets(&self) -> &[TieSet] {
        &self.tiesets
    }

    pub fn len(&self) -> usize {
        self.tiesets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiesets.is_empty()
    }

    pub(crate) fn masks(&self) -> impl Iterator<Item = u32> + '_ {
        self.tiesets.iter().map(|t| t.state.bits())
    }

    pub(crate) fn contains_tieset_bits(&self, bits: u32) -> bool {
        self.masks().any(|t| t & !bits == 0)
    }

    /// Every state in which the system functions, in ascending canonical
    /// index order (the all-ones state first).
    pub fn nonfailed_states(&self) -> Vec<SystemState> {
        let n = self.n;
        let full = crate::system_model::full_mask(n);
        (0..=full)
            .rev()
            .filter(|&bits| self.contains_tieset_bits(bits))
            .map(|bits| SystemState::from_raw(bits, n))
            .collect()
    }
}

/// Enumerates the inclusion-minimal balanced subsets with at least `k` units.
pub fn enumerate_min_tiesets(n: usize, k: usize, bc: BalanceCondition) -> Result<TieSetCollection> {
    enumerate_min_tiesets_with(n, k, bc, Exec::default())
}

pub fn enumerate_min_tiesets_with(
    n: usize,
    k: usize,
    bc: BalanceCondition,
    exec: Exec,
) -> Result<TieSetCollection> {
    let checker = BalanceChecker::new(n, bc)?;
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!(
            "k = {k} must satisfy 2 <= k <= n = {n}"
        )));
    }
    let masks = scan_minimal(n, k, exec, |bits| checker.is_balanced_bits(bits));
    if masks.is_empty() {
        return Err(Error::NoTieSets { n, k, bc });
    }
    let tiesets = masks
        .into_iter()
        .map(|bits| TieSet::from_state(SystemState::from_raw(bits, n)))
        .collect();
    Ok(TieSetCollection { n, k, bc, tiesets })
}

/// Ascending-cardinality scan with superset pruning. Within one cardinality
/// band no candidate can contain another, so a band is filtered in parallel
/// against the tie-sets of the smaller bands.
fn scan_minimal<F>(n: usize, k: usize, exec: Exec, balanced: F) -> Vec<u32>
where
    F: Fn(u32) -> bool + Sync + Send,
{
    let mut found: Vec<u32> = Vec::new();
    for size in k..=n {
        let band = subsets_of_size(n, size);
        let keep = exec.map_slice(&band, |&bits| {
            !found.iter().any(|&t| t & !bits == 0) && balanced(bits)
        });
        let mut new: Vec<u32> = band
            .into_iter()
            .zip(keep)
            .filter_map(|(bits, keep)| keep.then_some(bits))
            .collect();
        // unit 1 is the most significant bit, so descending numeric order is
        // lexicographic order of the member lists
        new.sort_unstable_by(|a, b| b.cmp(a));
        found.extend(new);
    }
    found
}

/// All `n`-bit masks with exactly `size` bits set (Gosper's hack).
fn subsets_of_size(n: usize, size: usize) -> Vec<u32> {
    let mut out = Vec::new();
    if size == 0 || size > n {
        return out;
    }
    let limit = 1u64 << n;
    let mut v: u64 = (1u64 << size) - 1;
    while v < limit {
        out.push(v as u32);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Rebalancing rule: the system functions iff the operating set contains a
/// minimum tie-set.
pub fn is_nonfailed(state: &SystemState, tiesets: &TieSetCollection) -> bool {
    state.n() == tiesets.n && tiesets.contains_tieset_bits(state.bits())
}

/// `1 - prod_T (1 - prod_{i in T} x_i)`, evaluated literally.
pub fn structure_function(state: &SystemState, tiesets: &TieSetCollection) -> u8 {
    let x = state.tuple();
    let mut none = 1u8;
    for t in &tiesets.tiesets {
        let all: u8 = t.members.iter().map(|&i| x[i - 1]).product();
        none *= 1 - all;
    }
    1 - none
}

/// `1 - prod_T (1 - r^|T|)`. Treats the tie-set events as independent, so it
/// differs from [`system_reliability_exact`] when tie-sets overlap.
pub fn system_reliability_product(tiesets: &TieSetCollection, r: f64) -> f64 {
    1.0 - tiesets
        .tiesets
        .iter()
        .map(|t| 1.0 - r.powi(t.len() as i32))
        .product::<f64>()
}

/// `E[phi(X)]` by enumeration over all `2^n` states.
pub fn system_reliability_exact(n: usize, tiesets: &TieSetCollection, r: f64) -> Result<f64> {
    if n > EXACT_RELIABILITY_MAX_UNITS {
        return Err(Error::CapacityExceeded(format!(
            "exact reliability enumerates 2^n states; n = {n} exceeds {EXACT_RELIABILITY_MAX_UNITS}"
        )));
    }
    if n != tiesets.n {
        return Err(Error::InvalidConfig(format!(
            "tie-sets were built for n = {}, not {n}",
            tiesets.n
        )));
    }
    check_reliability(r)?;
    let q = 1.0 - r;
    let total = (0..(1u32 << n))
        .filter(|&bits| tiesets.contains_tieset_bits(bits))
        .map(|bits| {
            let up = bits.count_ones() as i32;
            r.powi(up) * q.powi(n as i32 - up)
        })
        .sum();
    Ok(total)
}
