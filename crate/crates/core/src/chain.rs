//! The shock process as a Markov chain: one-step and m-step transition laws,
//! and the consolidated chain in which every failed state is merged into a
//! single absorbing state.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::matrix::TriangularMatrix;
use crate::system_model::{check_reliability, BalanceCondition, SystemState};
use crate::tiesets::{enumerate_min_tiesets_with, TieSetCollection};

/// Largest `n` for which the consolidated chain is built (the build scans
/// all `2^n` states and keeps a dense index table).
pub const MAX_CHAIN_UNITS: usize = 24;

/// Counts of the unit-state pairs `(1,1)`, `(1,0)`, `(0,1)`, `(0,0)` between
/// two states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionCounts {
    pub c1: u32,
    pub c2: u32,
    pub c3: u32,
    pub c4: u32,
}

pub fn transition_counts(xa: &SystemState, xb: &SystemState) -> TransitionCounts {
    debug_assert_eq!(xa.n(), xb.n());
    let (a, b) = (xa.bits(), xb.bits());
    let c1 = (a & b).count_ones();
    let c2 = (a & !b).count_ones();
    let c3 = (!a & b).count_ones();
    TransitionCounts {
        c1,
        c2,
        c3,
        c4: xa.n() as u32 - c1 - c2 - c3,
    }
}

/// Probability of moving from `xa` to `xb` on a single shock.
pub fn one_step_prob(xa: &SystemState, xb: &SystemState, r: f64) -> f64 {
    let c = transition_counts(xa, xb);
    if c.c3 > 0 {
        return 0.0;
    }
    r.powi(c.c1 as i32) * (1.0 - r).powi(c.c2 as i32)
}

/// Probability of moving from `xa` to `xb` over `m` shocks:
/// `(r^m)^c1 (1 - r^m)^c2`, or zero when a failed unit would have to revive.
pub fn mstep_prob(xa: &SystemState, xb: &SystemState, m: u32, r: f64) -> f64 {
    let c = transition_counts(xa, xb);
    if c.c3 > 0 {
        return 0.0;
    }
    let rm = r.powi(m as i32);
    rm.powi(c.c1 as i32) * (1.0 - rm).powi(c.c2 as i32)
}

/// Nonfailed states for `(n, k, bc)`, ascending canonical index.
pub fn nonfailed_states(n: usize, k: usize, bc: BalanceCondition) -> Result<Vec<SystemState>> {
    check_chain_units(n)?;
    Ok(enumerate_min_tiesets_with(n, k, bc, Exec::default())?.nonfailed_states())
}

fn check_chain_units(n: usize) -> Result<()> {
    if n > MAX_CHAIN_UNITS {
        return Err(Error::CapacityExceeded(format!(
            "the consolidated chain scans 2^n states; n = {n} exceeds {MAX_CHAIN_UNITS}"
        )));
    }
    Ok(())
}

/// Transient part `P_BC` of the consolidated chain plus its absorption column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidatedChain {
    n: usize,
    k: usize,
    bc: BalanceCondition,
    r: f64,
    states: Vec<SystemState>,
    matrix: TriangularMatrix,
    absorb: Vec<f64>,
    // c1(x1, x) for every state x: the number of operating units
    up_counts: Vec<u32>,
}

pub fn build_consolidated(
    n: usize,
    k: usize,
    bc: BalanceCondition,
    r: f64,
) -> Result<ConsolidatedChain> {
    check_chain_units(n)?;
    let tiesets = enumerate_min_tiesets_with(n, k, bc, Exec::default())?;
    ConsolidatedChain::from_tiesets(&tiesets, r, Exec::default())
}

impl ConsolidatedChain {
    pub fn from_tiesets(tiesets: &TieSetCollection, r: f64, exec: Exec) -> Result<Self> {
        check_reliability(r)?;
        let n = tiesets.n();
        check_chain_units(n)?;
        let states = tiesets.nonfailed_states();

        const ABSENT: u32 = u32::MAX;
        let mut position = vec![ABSENT; 1usize << n];
        for (i, s) in states.iter().enumerate() {
            position[s.bits() as usize] = i as u32;
        }
        let up_pow: Vec<f64> = (0..=n as i32).map(|c| r.powi(c)).collect();
        let down_pow: Vec<f64> = (0..=n as i32).map(|c| (1.0 - r).powi(c)).collect();

        let rows = exec.map_slice(&states, |from| {
            let bits = from.bits();
            let ups = bits.count_ones() as usize;
            let mut row = Vec::new();
            // submasks in descending numeric order = ascending state index
            let mut sub = bits;
            loop {
                let col = position[sub as usize];
                if col != ABSENT {
                    let kept = sub.count_ones() as usize;
                    row.push((col as usize, up_pow[kept] * down_pow[ups - kept]));
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & bits;
            }
            row
        });
        let matrix = TriangularMatrix::from_rows(rows)?;
        let absorb = (0..states.len()).map(|a| 1.0 - matrix.row_sum(a)).collect();
        let up_counts = states.iter().map(SystemState::up_count).collect();
        Ok(ConsolidatedChain {
            n,
            k: tiesets.k(),
            bc: tiesets.condition(),
            r,
            states,
            matrix,
            absorb,
            up_counts,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn condition(&self) -> BalanceCondition {
        self.bc
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Number of transient (nonfailed) states.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn matrix(&self) -> &TriangularMatrix {
        &self.matrix
    }

    /// One-step absorption probabilities `e - P_BC e`.
    pub fn absorb(&self) -> &[f64] {
        &self.absorb
    }

    /// `c1(x1, x)` for each transient state; `c2 = n - c1`.
    pub fn up_counts(&self) -> &[u32] {
        &self.up_counts
    }

    /// `P_BC` as a dense row-major table.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|a| (0..self.dim()).map(|b| self.matrix.get(a, b)).collect())
            .collect()
    }

    /// The full consolidated matrix with the absorbing state appended.
    pub fn augmented(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut out: Vec<Vec<f64>> = self
            .dense()
            .into_iter()
            .zip(&self.absorb)
            .map(|(mut row, &exit)| {
                row.push(exit);
                row
            })
            .collect();
        let mut last = vec![0.0; dim + 1];
        last[dim] = 1.0;
        out.push(last);
        out
    }

    /// Structural check of the consolidated chain: nonnegative entries, row
    /// sums in `[0, 1]`, augmented rows summing to one, upper-triangular
    /// storage, and the all-ones state first.
    pub fn check_stochastic(&self, tol: f64) -> std::result::Result<(), String> {
        if self.states.first().map(SystemState::up_count) != Some(self.n as u32) {
            return Err("first transient state is not the all-ones state".into());
        }
        for a in 0..self.dim() {
            let mut sum = 0.0;
            for (b, p) in self.matrix.row(a) {
                if b < a {
                    return Err(format!("entry ({a}, {b}) below the diagonal"));
                }
                if !(p >= 0.0) {
                    return Err(format!("entry ({a}, {b}) = {p} is negative"));
                }
                sum += p;
            }
            if sum > 1.0 + tol {
                return Err(format!("row {a} sums to {sum} > 1"));
            }
            let total = sum + self.absorb[a];
            if (total - 1.0).abs() > tol {
                return Err(format!("row {a} with absorption sums to {total}"));
            }
        }
        Ok(())
    }

    /// Writes the augmented matrix as CSV with state tuples as headers.
    pub fn to_csv(&self) -> String {
        let label = |s: &SystemState| {
            s.tuple().iter().map(u8::to_string).collect::<Vec<_>>().join("")
        };
        let mut out = String::from("from");
        for s in &self.states {
            let _ = write!(out, ",{}", label(s));
        }
        out.push_str(",failed\n");
        for (a, row) in self.augmented().iter().enumerate() {
            let name = self.states.get(a).map_or_else(|| "failed".to_string(), label);
            out.push_str(&name);
            for v in row {
                let _ = write!(out, ",{}", crate::format::sig12(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Changes one transition probability without touching the absorption
    /// column. Exists for negative-control tests of the validation checks.
    #[doc(hidden)]
    pub fn perturb_entry(&mut self, a: usize, b: usize, delta: f64) {
        let value = self.matrix.get(a, b) + delta;
        self.matrix.set_unchecked(a, b, value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FullChain;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use BalanceCondition::*;

    fn st(t: &[u8]) -> SystemState {
        SystemState::from_tuple(t).unwrap()
    }

    #[test]
    fn counts() {
        let full = st(&[1, 1, 1, 1]);
        let alt = st(&[1, 0, 1, 0]);
        let c = |c1, c2, c3, c4| TransitionCounts { c1, c2, c3, c4 };
        assert_eq!(transition_counts(&full, &alt), c(2, 2, 0, 0));
        assert_eq!(transition_counts(&alt, &full), c(2, 0, 2, 0));
        assert_eq!(transition_counts(&st(&[0; 4]), &st(&[0; 4])), c(0, 0, 0, 4));
    }

    #[test]
    fn one_step_examples() {
        let full = st(&[1, 1, 1, 1]);
        let alt = st(&[1, 0, 1, 0]);
        assert_relative_eq!(one_step_prob(&full, &full, 0.7), 0.2401, epsilon = 1e-15);
        assert_relative_eq!(one_step_prob(&full, &alt, 0.7), 0.0441, epsilon = 1e-15);
        assert_eq!(one_step_prob(&alt, &full, 0.7), 0.0);
    }

    #[test]
    fn mstep_examples() {
        let full = st(&[1, 1, 1, 1]);
        let alt = st(&[1, 0, 1, 0]);
        assert_relative_eq!(mstep_prob(&full, &alt, 2, 0.7), 0.062_450_01, epsilon = 1e-15);
        assert_eq!(mstep_prob(&alt, &full, 5, 0.7), 0.0);
        for a in 0..16 {
            for b in 0..16 {
                let (xa, xb) = (SystemState::new(a, 4).unwrap(), SystemState::new(b, 4).unwrap());
                assert_relative_eq!(
                    mstep_prob(&xa, &xb, 1, 0.3),
                    one_step_prob(&xa, &xb, 0.3),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn descriptive_case_states_and_matrix() {
        let chain = build_consolidated(4, 2, Bc3, 0.7).unwrap();
        let idx: Vec<u64> = chain.states().iter().map(SystemState::index).collect();
        assert_eq!(idx, vec![1, 2, 3, 5, 6, 9, 11]);
        let p = chain.dense();
        let first = [0.2401, 0.1029, 0.1029, 0.1029, 0.0441, 0.1029, 0.0441];
        for (x, y) in p[0].iter().zip(first) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
        let second = [0.0, 0.343, 0.0, 0.0, 0.147, 0.0, 0.0];
        for (x, y) in p[1].iter().zip(second) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
        assert_relative_eq!(chain.absorb()[0], 0.2601, epsilon = 1e-15);
        for &a in &chain.absorb()[1..] {
            assert_relative_eq!(a, 0.51, epsilon = 1e-15);
        }
        assert!(chain.check_stochastic(1e-12).is_ok());
        assert_eq!(chain.up_counts(), &[4, 3, 3, 3, 2, 3, 2]);
    }

    #[test]
    fn single_state_chains() {
        let c = build_consolidated(2, 2, Bc3, 0.6).unwrap();
        assert_eq!(c.dim(), 1);
        assert_relative_eq!(c.dense()[0][0], 0.36, epsilon = 1e-15);
        assert_relative_eq!(c.absorb()[0], 0.64, epsilon = 1e-15);
        let c = build_consolidated(4, 4, Bc3, 0.6).unwrap();
        assert_eq!(c.states(), &[SystemState::all_up(4).unwrap()]);
        assert_eq!(nonfailed_states(2, 2, Bc3).unwrap(), vec![st(&[1, 1])]);
    }

    #[test]
    fn rejects_bad_reliability() {
        assert!(build_consolidated(4, 2, Bc3, 1.0).is_err());
        assert!(build_consolidated(4, 2, Bc3, 0.0).is_err());
        assert!(build_consolidated(25, 2, Bc3, 0.5).is_err());
    }

    #[test]
    fn csv_dump_has_headers() {
        let csv = build_consolidated(4, 2, Bc3, 0.7).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 9);
        assert!(lines[0].starts_with("from,1111,1110,1101,1011,1010,0111,0101,failed"));
        assert!(lines[1].starts_with("1111,0.2401,"));
        assert!(lines[8].starts_with("failed,0,0,0,0,0,0,0,1"));
    }

    #[test]
    fn perturbed_chain_fails_the_check() {
        let mut chain = build_consolidated(4, 2, Bc3, 0.7).unwrap();
        chain.perturb_entry(1, 4, 0.05);
        assert!(chain.check_stochastic(1e-12).is_err());
    }

    #[test]
    fn row_build_is_deterministic_across_modes() {
        let t = crate::tiesets::enumerate_min_tiesets(10, 3, Bc3).unwrap();
        let a = ConsolidatedChain::from_tiesets(&t, 0.7, Exec::Sequential).unwrap();
        let b = ConsolidatedChain::from_tiesets(&t, 0.7, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rows_stochastic_for_many_configs() {
        for n in 2..=10 {
            for k in 2..=n {
                let chain = build_consolidated(n, k, Bc3, 0.37).unwrap();
                assert!(chain.check_stochastic(1e-12).is_ok(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn consolidated_entries_match_full_chain() {
        for n in 2..=6 {
            let full = FullChain::new(n, 0.7).unwrap();
            let chain = build_consolidated(n, 2, Bc3, 0.7).unwrap();
            for (a, xa) in chain.states().iter().enumerate() {
                for (b, xb) in chain.states().iter().enumerate() {
                    assert_eq!(chain.matrix().get(a, b), full.entry(xa, xb));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mstep_matches_full_matrix_power(
            n in 1usize..=8, m in 1u32..=6, hi in proptest::bool::ANY,
            a in any::<u32>(), b in any::<u32>(),
        ) {
            let r = if hi { 0.7 } else { 0.3 };
            let full = FullChain::new(n, r).unwrap();
            let power = full.power(m);
            let mask = crate::system_model::full_mask(n);
            let xa = SystemState::new(a & mask, n).unwrap();
            let xb = SystemState::new(b & mask, n).unwrap();
            let direct = mstep_prob(&xa, &xb, m, r);
            let via_power = power[(xa.index() - 1) as usize][(xb.index() - 1) as usize];
            prop_assert!((direct - via_power).abs() <= 1e-12);
        }
    }
}
