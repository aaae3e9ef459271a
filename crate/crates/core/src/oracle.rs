//! Verification-only reference: the full `2^n`-state one-step chain.
//!
//! Never used by the analytic paths. Capped at `n <= 8` (a 256 x 256 dense
//! matrix).

use crate::chain::one_step_prob;
use crate::error::{Error, Result};
use crate::system_model::{check_reliability, SystemState};
use crate::tiesets::{is_nonfailed, TieSetCollection};

pub const FULL_CHAIN_MAX_UNITS: usize = 8;

/// Dense one-step matrix over all states, rows and columns in canonical
/// index order.
#[derive(Debug, Clone)]
pub struct FullChain {
    n: usize,
    states: Vec<SystemState>,
    matrix: Vec<Vec<f64>>,
}

impl FullChain {
    pub fn new(n: usize, r: f64) -> Result<Self> {
        if n == 0 || n > FULL_CHAIN_MAX_UNITS {
            return Err(Error::CapacityExceeded(format!(
                "full chain oracle supports 1 <= n <= {FULL_CHAIN_MAX_UNITS}, got {n}"
            )));
        }
        check_reliability(r)?;
        let total = 1u64 << n;
        let states: Vec<SystemState> = (1..=total)
            .map(|j| SystemState::from_index(j, n))
            .collect::<Result<_>>()?;
        let matrix = states
            .iter()
            .map(|a| states.iter().map(|b| one_step_prob(a, b, r)).collect())
            .collect();
        Ok(FullChain { n, states, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn entry(&self, from: &SystemState, to: &SystemState) -> f64 {
        self.matrix[(from.index() - 1) as usize][(to.index() - 1) as usize]
    }

    /// `P^m` by repeated dense multiplication.
    pub fn power(&self, m: u32) -> Vec<Vec<f64>> {
        let dim = self.states.len();
        let mut acc: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        for _ in 0..m {
            acc = acc
                .iter()
                .map(|row| {
                    (0..dim)
                        .map(|j| row.iter().zip(&self.matrix).map(|(a, p)| a * p[j]).sum())
                        .collect()
                })
                .collect();
        }
        acc
    }

    /// `P{system failed by shock m}` for `m = 1..=m_max`, starting from the
    /// all-ones state: `1 - sum_{nonfailed b} P^m[x1][b]`.
    pub fn failure_by_step(&self, tiesets: &TieSetCollection, m_max: u32) -> Vec<f64> {
        let alive: Vec<bool> = self.states.iter().map(|s| is_nonfailed(s, tiesets)).collect();
        let dim = self.states.len();
        let mut dist = vec![0.0; dim];
        dist[0] = 1.0;
        (1..=m_max)
            .map(|_| {
                let mut next = vec![0.0; dim];
                for (a, &u) in dist.iter().enumerate() {
                    if u != 0.0 {
                        for (b, p) in self.matrix[a].iter().enumerate() {
                            next[b] += u * p;
                        }
                    }
                }
                dist = next;
                1.0 - dist.iter().zip(&alive).filter(|(_, &ok)| ok).map(|(u, _)| u).sum::<f64>()
            })
            .collect()
    }
}
