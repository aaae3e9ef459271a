//! Continuous phase-type distributions: inter-shock presets, the compound
//! time-to-failure law `Z = Y_1 + ... + Y_M`, densities by uniformization and
//! moments by structured block solves.
//!
//! The compound subgenerator `T_Z = I (x) T_c + P_BC (x) (t alpha_c)`, with
//! exit vector `t = -T_c e`, is never stored. Every product and solve works
//! on `P_BC`, `T_c`, `t` and `alpha_c` directly: the coupling term is rank
//! one per block, and `P_BC` is upper triangular, so `-T_Z` is block upper
//! triangular with `K x K` diagonal blocks.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discrete::{factorial, DiscretePhaseType};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Default cap on the compound dimension `N_BC * K`.
pub const DEFAULT_MAX_COMPOUND_DIM: usize = 1 << 20;

/// Largest compound dimension for which [`CompoundPhaseType::to_dense`]
/// materialises `T_Z`.
pub const DENSE_EXPORT_LIMIT: usize = 4096;

/// Poisson tail mass left out of each uniformization step.
pub const UNIFORMIZATION_TAIL: f64 = 1e-14;

// Longest uniformization step, measured in expected jumps.
const MAX_STEP_JUMPS: f64 = 32.0;

// Grid points per independently evaluated segment in `density_grid`.
const GRID_SEGMENT: usize = 16;

const GENERATOR_TOL: f64 = 1e-12;

/// `Y ~ PH_c(alpha_c, T_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPhaseType {
    alpha: DVector<f64>,
    generator: DMatrix<f64>,
}

impl ContinuousPhaseType {
    /// Validates and builds a representation. Nothing is renormalised.
    pub fn new(alpha: Vec<f64>, generator: Vec<Vec<f64>>) -> Result<Self> {
        let k = alpha.len();
        if k == 0 {
            return Err(Error::InvalidPhaseType("alpha is empty".into()));
        }
        if generator.len() != k || generator.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidPhaseType(format!(
                "T must be {k} x {k} to match alpha"
            )));
        }
        if alpha.iter().chain(generator.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPhaseType("non-finite entry".into()));
        }
        if let Some(a) = alpha.iter().find(|a| **a < 0.0) {
            return Err(Error::InvalidPhaseType(format!("alpha entry {a} is negative")));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > GENERATOR_TOL {
            return Err(Error::InvalidPhaseType(format!("alpha sums to {total}, not 1")));
        }
        let mut any_exit = false;
        for (i, row) in generator.iter().enumerate() {
            if !(row[i] < 0.0) {
                return Err(Error::InvalidPhaseType(format!(
                    "diagonal entry T[{i}][{i}] = {} must be negative",
                    row[i]
                )));
            }
            if let Some((j, v)) = row.iter().enumerate().find(|&(j, v)| j != i && *v < 0.0) {
                return Err(Error::InvalidPhaseType(format!("off-diagonal T[{i}][{j}] = {v} is negative")));
            }
            let sum: f64 = row.iter().sum();
            if sum > GENERATOR_TOL {
                return Err(Error::InvalidPhaseType(format!("row {i} of T sums to {sum} > 0")));
            }
            any_exit |= sum < -GENERATOR_TOL;
        }
        if !any_exit {
            return Err(Error::InvalidPhaseType("exit vector -T e is identically zero".into()));
        }
        let generator = DMatrix::from_fn(k, k, |i, j| generator[i][j]);
        if (-&generator).lu().solve(&DVector::from_element(k, 1.0)).is_none() {
            return Err(Error::InvalidPhaseType("T is singular (absorption not certain)".into()));
        }
        Ok(ContinuousPhaseType {
            alpha: DVector::from_vec(alpha),
            generator,
        })
    }

    /// Single phase with the given rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        ContinuousPhaseType::new(vec![1.0], vec![vec![-rate]])
    }

    pub fn from_preset(preset: Preset) -> Self {
        let (alpha, generator) = match preset {
            Preset::Er => (vec![1.0, 0.0], vec![vec![-2.0, 2.0], vec![0.0, -2.0]]),
            Preset::Exp => (vec![1.0], vec![vec![-1.0]]),
            Preset::He => {
                let s = std::f64::consts::SQRT_2;
                (
                    vec![0.5, 0.5],
                    vec![vec![-2.0 / (2.0 - s), 0.0], vec![0.0, -2.0 / (2.0 + s)]],
                )
            }
        };
        ContinuousPhaseType::new(alpha, generator).expect("preset representations are valid")
    }

    /// Number of phases `K`.
    pub fn phases(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// `-T e`.
    pub fn exit_vector(&self) -> DVector<f64> {
        -self.generator.column_sum()
    }

    /// `E[Y^p] = p! alpha (-T)^-p e`.
    pub fn moment(&self, p: u32) -> Result<f64> {
        if p == 0 {
            return Err(Error::InvalidConfig("moment order must be >= 1".into()));
        }
        let lu = (-&self.generator).lu();
        let mut x = DVector::from_element(self.phases(), 1.0);
        for _ in 0..p {
            x = lu
                .solve(&x)
                .ok_or_else(|| Error::SingularSystem("-T_c".into()))?;
        }
        Ok(factorial(p) * self.alpha.dot(&x))
    }

    /// `(E[Y], E[Y^2] / E[Y]^2 - 1)`.
    pub fn mean_scv(&self) -> Result<(f64, f64)> {
        let mean = self.moment(1)?;
        let second = self.moment(2)?;
        Ok((mean, second / (mean * mean) - 1.0))
    }
}

pub fn ph_from_preset(label: &str) -> Result<ContinuousPhaseType> {
    Ok(ContinuousPhaseType::from_preset(label.parse()?))
}

pub fn ph_mean_scv(y: &ContinuousPhaseType) -> Result<(f64, f64)> {
    y.mean_scv()
}

/// Unit-mean inter-shock presets: Erlang-2 (SCV 0.5), exponential (SCV 1)
/// and a balanced two-phase hyperexponential (SCV 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "ER")]
    Er,
    #[serde(rename = "EXP")]
    Exp,
    #[serde(rename = "HE")]
    He,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Er, Preset::Exp, Preset::He];

    pub fn label(self) -> &'static str {
        match self {
            Preset::Er => "ER",
            Preset::Exp => "EXP",
            Preset::He => "HE",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ER" => Ok(Preset::Er),
            "EXP" => Ok(Preset::Exp),
            "HE" => Ok(Preset::He),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

/// Inter-shock law: a named preset or a user-supplied representation.
#[derive(Debug, Clone, PartialEq)]
pub enum InterShockSpec {
    Preset(Preset),
    Custom(ContinuousPhaseType),
}

impl InterShockSpec {
    pub fn phase_type(&self) -> ContinuousPhaseType {
        match self {
            InterShockSpec::Preset(p) => ContinuousPhaseType::from_preset(*p),
            InterShockSpec::Custom(y) => y.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            InterShockSpec::Preset(p) => p.label().to_string(),
            InterShockSpec::Custom(y) => format!("custom({} phases)", y.phases()),
        }
    }
}

/// `Z ~ PH_c(alpha_d (x) alpha_c, I (x) T_c + P_BC (x) (t alpha_c))`, kept in
/// factored form.
#[derive(Debug, Clone)]
pub struct CompoundPhaseType {
    discrete: DiscretePhaseType,
    inter: ContinuousPhaseType,
    exit: DVector<f64>,
    rate: f64,
}

pub fn compound_ph(m: &DiscretePhaseType, y: &ContinuousPhaseType) -> Result<CompoundPhaseType> {
    CompoundPhaseType::new(m.clone(), y.clone(), DEFAULT_MAX_COMPOUND_DIM)
}

impl CompoundPhaseType {
    pub fn new(discrete: DiscretePhaseType, inter: ContinuousPhaseType, max_dim: usize) -> Result<Self> {
        let dim = discrete.dim() * inter.phases();
        if dim > max_dim {
            return Err(Error::CapacityExceeded(format!(
                "compound dimension {} x {} = {dim} exceeds {max_dim}",
                discrete.dim(),
                inter.phases()
            )));
        }
        let exit = inter.exit_vector();
        let matrix = discrete.subtransition();
        let t = inter.generator();
        // largest |diagonal| of T_Z: T_c[i][i] + P[a][a] t_i alpha_i
        let mut rate: f64 = 0.0;
        for a in 0..discrete.dim() {
            let paa = matrix.diagonal(a);
            for i in 0..inter.phases() {
                let d = t[(i, i)] + paa * exit[i] * inter.alpha()[i];
                rate = rate.max(d.abs());
            }
        }
        Ok(CompoundPhaseType {
            discrete,
            inter,
            exit,
            rate,
        })
    }

    pub fn discrete(&self) -> &DiscretePhaseType {
        &self.discrete
    }

    pub fn inter_shock(&self) -> &ContinuousPhaseType {
        &self.inter
    }

    pub fn dim(&self) -> usize {
        self.discrete.dim() * self.inter.phases()
    }

    /// Uniformization rate: the largest |diagonal entry| of `T_Z`.
    pub fn uniformization_rate(&self) -> f64 {
        self.rate
    }

    fn k(&self) -> usize {
        self.inter.phases()
    }

    /// `alpha_d (x) alpha_c`.
    pub fn alpha_z(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for &a in self.discrete.alpha() {
            out.extend(self.inter.alpha().iter().map(|c| a * c));
        }
        out
    }

    /// Exit vector `-T_Z e`; block `a` is `(1 - sum_b P[a][b]) t`.
    pub fn exit_z(&self) -> Vec<f64> {
        let absorb = self.discrete.chain().absorb();
        let mut out = Vec::with_capacity(self.dim());
        for &p_out in absorb {
            out.extend(self.exit.iter().map(|t| p_out * t));
        }
        out
    }

    /// `T_Z` as a dense matrix; refused above [`DENSE_EXPORT_LIMIT`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > DENSE_EXPORT_LIMIT {
            return Err(Error::CapacityExceeded(format!(
                "dense T_Z of dimension {dim} exceeds {DENSE_EXPORT_LIMIT}"
            )));
        }
        let k = self.k();
        let t = self.inter.generator();
        let alpha = self.inter.alpha();
        let matrix = self.discrete.subtransition();
        let mut out = DMatrix::zeros(dim, dim);
        for a in 0..self.discrete.dim() {
            for i in 0..k {
                for j in 0..k {
                    out[(a * k + i, a * k + j)] += t[(i, j)];
                }
            }
            for (b, p) in matrix.row(a) {
                for i in 0..k {
                    for j in 0..k {
                        out[(a * k + i, b * k + j)] += p * self.exit[i] * alpha[j];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row-vector product `u T_Z`.
    pub fn apply_left(&self, u: &[f64]) -> Vec<f64> {
        let k = self.k();
        let t = self.inter.generator();
        let n = self.discrete.dim();
        // s_a = u_a . t
        let s: Vec<f64> = (0..n)
            .map(|a| (0..k).map(|i| u[a * k + i] * self.exit[i]).sum())
            .collect();
        let coupled = self.discrete.subtransition().vec_mul(&s);
        let mut out = vec![0.0; u.len()];
        for b in 0..n {
            let block = &u[b * k..(b + 1) * k];
            for j in 0..k {
                let mut acc = coupled[b] * self.inter.alpha()[j];
                for (i, ui) in block.iter().enumerate() {
                    acc += ui * t[(i, j)];
                }
                out[b * k + j] = acc;
            }
        }
        out
    }

    /// Column-vector product `T_Z v`.
    pub fn apply_right(&self, v: &[f64]) -> Vec<f64> {
        let k = self.k();
        let t = self.inter.generator();
        let n = self.discrete.dim();
        let w: Vec<f64> = (0..n)
            .map(|b| (0..k).map(|j| self.inter.alpha()[j] * v[b * k + j]).sum())
            .collect();
        let coupled = self.discrete.subtransition().mul_vec(&w);
        let mut out = vec![0.0; v.len()];
        for a in 0..n {
            for i in 0..k {
                let mut acc = self.exit[i] * coupled[a];
                for j in 0..k {
                    acc += t[(i, j)] * v[a * k + j];
                }
                out[a * k + i] = acc;
            }
        }
        out
    }

    /// Solves `-T_Z x = v` by block back-substitution.
    pub fn solve_negative(&self, v: &[f64]) -> Result<Vec<f64>> {
        let k = self.k();
        let n = self.discrete.dim();
        let matrix = self.discrete.subtransition();
        let alpha = self.inter.alpha();
        let neg_t = -self.inter.generator();
        let mut factors: HashMap<u64, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> =
            HashMap::new();
        let mut x = vec![0.0; v.len()];
        // w_b = alpha_c . x_b for solved blocks
        let mut w = vec![0.0; n];
        for a in (0..n).rev() {
            let mut coupling = 0.0;
            let mut diag = 0.0;
            for (b, p) in matrix.row(a) {
                if b == a {
                    diag = p;
                } else {
                    coupling += p * w[b];
                }
            }
            let lu = factors.entry(diag.to_bits()).or_insert_with(|| {
                let block = &neg_t - (&self.exit * alpha.transpose()) * diag;
                block.lu()
            });
            let rhs = DVector::from_fn(k, |i, _| v[a * k + i] + self.exit[i] * coupling);
            let xa = lu
                .solve(&rhs)
                .ok_or_else(|| Error::SingularSystem(format!("diagonal block {a} of -T_Z")))?;
            w[a] = alpha.dot(&xa);
            x[a * k..(a + 1) * k].copy_from_slice(xa.as_slice());
        }
        Ok(x)
    }

    /// `E[Z^p] = p! alpha_Z (-T_Z)^-p e`.
    pub fn raw_moment(&self, p: u32) -> Result<f64> {
        if p == 0 {
            return Err(Error::InvalidConfig("moment order must be >= 1".into()));
        }
        let mut x = vec![1.0; self.dim()];
        for _ in 0..p {
            x = self.solve_negative(&x)?;
        }
        let alpha = self.alpha_z();
        Ok(factorial(p) * alpha.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Mean time to failure.
    pub fn mttf(&self) -> Result<f64> {
        self.raw_moment(1)
    }

    /// `Var[Z] / E[Z]^2`.
    pub fn scv(&self) -> Result<f64> {
        let mean = self.raw_moment(1)?;
        let second = self.raw_moment(2)?;
        Ok((second - mean * mean) / (mean * mean))
    }

    /// `u exp(h T_Z)` by uniformization, split into steps of at most
    /// `MAX_STEP_JUMPS` expected jumps.
    pub fn evolve(&self, u: &[f64], h: f64) -> Result<Vec<f64>> {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::InvalidConfig(format!("time {h} must be finite and >= 0")));
        }
        let steps = (h * self.rate / MAX_STEP_JUMPS).ceil().max(1.0) as usize;
        let dt = h / steps as f64;
        let mut current = u.to_vec();
        for _ in 0..steps {
            current = self.uniformized_step(&current, dt)?;
        }
        Ok(current)
    }

    fn uniformized_step(&self, u: &[f64], h: f64) -> Result<Vec<f64>> {
        let lambda = self.rate * h;
        if lambda == 0.0 {
            return Ok(u.to_vec());
        }
        let max_terms = (lambda + 20.0 * lambda.sqrt() + 100.0) as usize;
        let mut weight = (-lambda).exp();
        let mut cumulative = weight;
        let mut term = u.to_vec();
        let mut acc: Vec<f64> = term.iter().map(|x| weight * x).collect();
        let mut j = 0usize;
        while 1.0 - cumulative > UNIFORMIZATION_TAIL {
            j += 1;
            if j > max_terms {
                return Err(Error::NonConvergence(max_terms));
            }
            // term <- term (I + T_Z / rate)
            let moved = self.apply_left(&term);
            for (x, d) in term.iter_mut().zip(&moved) {
                *x += d / self.rate;
            }
            weight *= lambda / j as f64;
            cumulative += weight;
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += weight * x;
            }
        }
        Ok(acc)
    }

    /// `alpha_Z exp(z T_Z)`: the phase occupancy at time `z`.
    pub fn transient(&self, z: f64) -> Result<Vec<f64>> {
        self.evolve(&self.alpha_z(), z)
    }

    /// Density `alpha_Z exp(z T_Z) (-T_Z e)`.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        Ok(self.pdf_survival(z)?.0)
    }

    /// `P{Z > z} = alpha_Z exp(z T_Z) e`.
    pub fn survival(&self, z: f64) -> Result<f64> {
        Ok(self.pdf_survival(z)?.1)
    }

    pub fn pdf_survival(&self, z: f64) -> Result<(f64, f64)> {
        let u = self.transient(z)?;
        Ok(self.read_out(&u))
    }

    fn read_out(&self, u: &[f64]) -> (f64, f64) {
        let exit = self.exit_z();
        let pdf: f64 = u.iter().zip(&exit).map(|(a, b)| a * b).sum();
        let survival: f64 = u.iter().sum();
        (pdf.max(0.0), survival.clamp(0.0, 1.0))
    }

    /// `(pdf, survival)` at each point of an ascending grid. The grid is cut
    /// into fixed segments of 16 points; each segment starts from scratch at
    /// its first point and steps forward, so the output does not depend on
    /// the number of workers.
    pub fn density_grid(&self, zs: &[f64], exec: Exec) -> Result<Vec<(f64, f64)>> {
        if zs.windows(2).any(|w| !(w[1] >= w[0])) || zs.first().is_some_and(|z| !(*z >= 0.0)) {
            return Err(Error::InvalidConfig("time grid must be ascending and >= 0".into()));
        }
        let segments: Vec<&[f64]> = zs.chunks(GRID_SEGMENT).collect();
        let results = exec.map_slice(&segments, |segment| -> Result<Vec<(f64, f64)>> {
            let mut out = Vec::with_capacity(segment.len());
            let mut u = self.transient(segment[0])?;
            out.push(self.read_out(&u));
            for pair in segment.windows(2) {
                u = self.evolve(&u, pair[1] - pair[0])?;
                out.push(self.read_out(&u));
            }
            Ok(out)
        });
        let mut out = Vec::with_capacity(zs.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    /// Smallest `z` (doubling from the mean) with `P{Z > z} < level`.
    pub fn survival_horizon(&self, level: f64) -> Result<f64> {
        let mut z = self.mttf()?.max(1e-3);
        let mut u = self.transient(z)?;
        for _ in 0..60 {
            if u.iter().sum::<f64>() < level {
                return Ok(z);
            }
            u = self.evolve(&u, z)?;
            z *= 2.0;
        }
        Err(Error::NonConvergence(60))
    }
}
