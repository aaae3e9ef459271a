//! Shock numbers to failure (SNTF) as a discrete phase-type distribution.
//!
//! Two independent routes to the pmf are provided: [`DiscretePhaseType`]
//! propagates the initial vector through `P_BC`, while [`DirectSntf`] sums the
//! closed-form m-step probabilities from the all-ones state and never touches
//! a matrix.

use crate::chain::{build_consolidated, ConsolidatedChain};
use crate::error::{Error, Result};
use crate::matrix::TriangularMatrix;
use crate::numeric::NeumaierSum;
use crate::system_model::SystemConfig;
use crate::tiesets::enumerate_min_tiesets;

/// Upper bound on the number of terms of a moment series.
pub const SERIES_MAX_TERMS: usize = 10_000_000;

/// `M ~ PH_d(alpha_d, P_BC)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePhaseType {
    alpha: Vec<f64>,
    chain: ConsolidatedChain,
}

pub fn sntf_distribution(config: &SystemConfig) -> Result<DiscretePhaseType> {
    config.validate()?;
    let chain = build_consolidated(config.n, config.k, config.bc, config.r)?;
    Ok(DiscretePhaseType::from_chain(chain))
}

impl DiscretePhaseType {
    /// Starts in the all-ones state, which the chain lists first.
    pub fn from_chain(chain: ConsolidatedChain) -> Self {
        let mut alpha = vec![0.0; chain.dim()];
        alpha[0] = 1.0;
        DiscretePhaseType { alpha, chain }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn subtransition(&self) -> &TriangularMatrix {
        self.chain.matrix()
    }

    pub fn chain(&self) -> &ConsolidatedChain {
        &self.chain
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha P^(m-1) (e - P e)`.
    pub fn pmf_matrix(&self, m: u32) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let u = self.propagate(m - 1);
        dot(&u, self.chain.absorb())
    }

    /// `pmf_matrix(1..=m_max)` with one vector propagation.
    pub fn pmf_matrix_series(&self, m_max: u32) -> Vec<f64> {
        let mut u = self.alpha.clone();
        let mut out = Vec::with_capacity(m_max as usize);
        for _ in 0..m_max {
            out.push(dot(&u, self.chain.absorb()));
            u = self.subtransition().vec_mul(&u);
        }
        out
    }

    /// `P{M > m} = alpha P^m e`.
    pub fn survival(&self, m: u32) -> f64 {
        self.propagate(m).iter().sum()
    }

    fn propagate(&self, steps: u32) -> Vec<f64> {
        let mut u = self.alpha.clone();
        for _ in 0..steps {
            u = self.subtransition().vec_mul(&u);
        }
        u
    }

    /// Mean shock number to failure `alpha (I - P)^-1 e`, by back-substitution.
    pub fn mean_closed(&self) -> Result<f64> {
        let x = self
            .subtransition()
            .solve_identity_minus(&vec![1.0; self.dim()])?;
        Ok(dot(&self.alpha, &x))
    }

    /// Factorial moment `E[M (M-1) ... (M-p+1)] = p! alpha (I-P)^-p P^(p-1) e`.
    pub fn factorial_moment(&self, p: u32) -> Result<f64> {
        if p == 0 {
            return Err(Error::InvalidConfig("moment order must be >= 1".into()));
        }
        let matrix = self.subtransition();
        let mut v = vec![1.0; self.dim()];
        for _ in 1..p {
            v = matrix.mul_vec(&v);
        }
        for _ in 0..p {
            v = matrix.solve_identity_minus(&v)?;
        }
        Ok(factorial(p) * dot(&self.alpha, &v))
    }

    pub fn variance(&self) -> Result<f64> {
        let mean = self.mean_closed()?;
        Ok(self.factorial_moment(2)? + mean - mean * mean)
    }
}

/// The SNTF law from the closed-form m-step probabilities out of the
/// all-ones state. Only the number of nonfailed states with each count of
/// operating units is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSntf {
    n: usize,
    r: f64,
    // states_with_ups[c] = #{nonfailed x : x has c operating units}
    states_with_ups: Vec<u64>,
}

impl DirectSntf {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let tiesets = enumerate_min_tiesets(config.n, config.k, config.bc)?;
        let mut states_with_ups = vec![0u64; config.n + 1];
        for s in tiesets.nonfailed_states() {
            states_with_ups[s.up_count() as usize] += 1;
        }
        Ok(DirectSntf {
            n: config.n,
            r: config.r,
            states_with_ups,
        })
    }

    pub fn from_chain(chain: &ConsolidatedChain) -> Self {
        let mut states_with_ups = vec![0u64; chain.n() + 1];
        for &c in chain.up_counts() {
            states_with_ups[c as usize] += 1;
        }
        DirectSntf {
            n: chain.n(),
            r: chain.r(),
            states_with_ups,
        }
    }

    pub fn states_with_ups(&self) -> &[u64] {
        &self.states_with_ups
    }

    fn groups(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        let n = self.n as i32;
        self.states_with_ups
            .iter()
            .enumerate()
            .filter(|(_, &count)| count > 0)
            .map(move |(c1, &count)| (c1 as i32, n - c1 as i32, count as f64))
    }

    /// `sum_b r^((m-1) c1) ((1 - r^(m-1))^c2 - r^c1 (1 - r^m)^c2)`, with
    /// `0^0 = 1`.
    pub fn pmf(&self, m: u32) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let r = self.r;
        let fail_m = one_minus_pow(r, m);
        let fail_prev = one_minus_pow(r, m - 1);
        let mut sum = NeumaierSum::default();
        for (c1, c2, count) in self.groups() {
            let lead = r.powi((m as i32 - 1) * c1);
            let inner = fail_prev.powi(c2) - r.powi(c1) * fail_m.powi(c2);
            sum.add(count * lead * inner);
        }
        sum.total()
    }

    /// `P{M > m} = sum_b (r^m)^c1 (1 - r^m)^c2`.
    pub fn survival(&self, m: u32) -> f64 {
        let rm = self.r.powi(m as i32);
        let fail = one_minus_pow(self.r, m);
        let mut sum = NeumaierSum::default();
        for (c1, c2, count) in self.groups() {
            sum.add(count * rm.powi(c1) * fail.powi(c2));
        }
        sum.total()
    }

    /// `E[M^p] = sum_m m^p P{M = m}`, truncated once the geometric tail bound
    /// `S(m) / (1 - rho) * (m + rho / (1 - rho))^p` drops below `tol`. Row
    /// sums of `P_BC` grow with the operating set, so the largest one,
    /// `rho`, is the first row's: `rho = S(1)`.
    pub fn raw_moment_series(&self, p: u32, tol: f64) -> Result<f64> {
        if p == 0 {
            return Err(Error::InvalidConfig("moment order must be >= 1".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance {tol} must be positive")));
        }
        let rho = self.survival(1);
        let gap = 1.0 - rho;
        let mut acc = NeumaierSum::default();
        for m in 1..=SERIES_MAX_TERMS as u32 {
            let mf = f64::from(m);
            acc.add(mf.powi(p as i32) * self.pmf(m));
            let tail = self.survival(m) / gap * (mf + rho / gap).powi(p as i32);
            if tail < tol {
                return Ok(acc.total());
            }
        }
        Err(Error::NonConvergence(SERIES_MAX_TERMS))
    }
}

pub fn pmf_direct(config: &SystemConfig, m: u32) -> Result<f64> {
    Ok(DirectSntf::new(config)?.pmf(m))
}

pub fn raw_moment_series(config: &SystemConfig, p: u32, tol: f64) -> Result<f64> {
    DirectSntf::new(config)?.raw_moment_series(p, tol)
}

/// `1 - r^m` without cancellation for `r^m` close to one.
fn one_minus_pow(r: f64, m: u32) -> f64 {
    -(f64::from(m) * r.ln()).exp_m1()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}
