//! Exact lifetime distributions of circular k-out-of-n: G balanced systems
//! subject to random shocks.
//!
//! Units sit evenly on a circle and fail only when a shock hits them. After
//! each shock every operating unit survives independently with probability
//! `r`. The system works while its operating units contain a minimal tie-set:
//! at least `k` units whose positions satisfy a balance condition. The crate
//! enumerates those tie-sets, builds the consolidated absorbing chain over
//! the nonfailed states, and derives the shock-number-to-failure law `M`
//! (discrete phase-type) and the time-to-failure law `Z` (continuous
//! phase-type, compounding `M` with phase-type inter-shock times). A Monte
//! Carlo simulator and a full `2^n`-state chain serve as independent checks.
//!
//! ```
//! use ckngb::{compound_ph, sntf_distribution, BalanceCondition, ContinuousPhaseType, Preset, SystemConfig};
//!
//! let config = SystemConfig::new(4, 2, 0.7, BalanceCondition::Bc3)?;
//! let m = sntf_distribution(&config)?;
//! assert_eq!(m.dim(), 7);
//! let z = compound_ph(&m, &ContinuousPhaseType::from_preset(Preset::Er))?;
//! assert!((z.mttf()? - m.mean_closed()?).abs() < 1e-10);
//! # Ok::<(), ckngb::Error>(())
//! ```

// `!(x >= 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod exec;
pub mod format;
pub mod matrix;
pub mod montecarlo;
pub mod numeric;
pub mod oracle;
pub mod system_model;
pub mod tiesets;

pub use chain::{build_consolidated, ConsolidatedChain};
pub use continuous::{
    compound_ph, ph_from_preset, ph_mean_scv, CompoundPhaseType, ContinuousPhaseType, InterShockSpec, Preset,
};
pub use discrete::{pmf_direct, raw_moment_series, sntf_distribution, DirectSntf, DiscretePhaseType};
pub use error::{Error, Result};
pub use exec::Exec;
pub use montecarlo::{sample_ph, simulate_sntf, simulate_ttf, SimulationResult};
pub use system_model::{is_balanced, BalanceCondition, SystemConfig, SystemState};
pub use tiesets::{enumerate_min_tiesets, TieSet, TieSetCollection};
