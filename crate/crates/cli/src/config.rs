//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "n": 4, "k": 2, "r": 0.7, "bc": "BC3",
//!   "shock": { "preset": "ER" },
//!   "m_max": 50, "z_max": 20.0, "z_points": 201,
//!   "reps": 100000, "seed": 1, "bins": 40,
//!   "sweep": { "n": [12], "k": [4, 6, 8], "r": [0.5, 0.9], "bc": ["BC3"], "presets": ["ER"] }
//! }
//! ```
//!
//! Every key is optional. `shock` is either `{"preset": ...}` or
//! `{"alpha": [...], "T": [[...], ...]}`. Command-line flags override the
//! file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};

use ckngb::{BalanceCondition, ContinuousPhaseType, InterShockSpec, Preset, SystemConfig};

use crate::error::CliError;

pub const DEFAULT_M_MAX: u32 = 50;
pub const DEFAULT_Z_POINTS: usize = 201;
pub const DEFAULT_REPS: usize = ckngb::montecarlo::DEFAULT_REPLICATIONS;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BINS: usize = 40;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<f64>,
    pub bc: Option<BalanceCondition>,
    pub shock: Option<ShockFile>,
    pub m_max: Option<u32>,
    pub z_max: Option<f64>,
    pub z_points: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub bins: Option<usize>,
    pub sweep: Option<SweepFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockFile {
    pub preset: Option<String>,
    pub alpha: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub generator: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub n: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub r: Option<Vec<f64>>,
    pub bc: Option<Vec<BalanceCondition>>,
    pub presets: Option<Vec<String>>,
}

/// Values given on the command line; each wins over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub m_max: Option<u32>,
    pub z_max: Option<f64>,
}

/// Validated settings shared by all commands.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub source: Option<PathBuf>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<f64>,
    pub bc: BalanceCondition,
    pub shock: Option<InterShockSpec>,
    pub m_max: u32,
    pub z_max: Option<f64>,
    pub z_points: usize,
    pub reps: usize,
    pub seed: u64,
    pub bins: usize,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, Default)]
pub struct SweepSpec {
    pub n: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub r: Option<Vec<f64>>,
    pub bc: Option<Vec<BalanceCondition>>,
    pub presets: Option<Vec<Preset>>,
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentSpec, CliError> {
    let file = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(de)
                .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", p.display(), e.path(), e.inner())))?
        }
        None => ConfigFile::default(),
    };
    ExperimentSpec::from_file(file, path.map(Path::to_path_buf), overrides)
}

impl ExperimentSpec {
    pub fn from_file(file: ConfigFile, source: Option<PathBuf>, o: &Overrides) -> Result<Self, CliError> {
        let shock = file.shock.map(parse_shock).transpose()?;
        let sweep = file.sweep.map(parse_sweep).transpose()?.unwrap_or_default();
        let spec = ExperimentSpec {
            source,
            n: file.n,
            k: file.k,
            r: file.r,
            bc: file.bc.unwrap_or(BalanceCondition::Bc3),
            shock,
            m_max: o.m_max.or(file.m_max).unwrap_or(DEFAULT_M_MAX),
            z_max: o.z_max.or(file.z_max),
            z_points: file.z_points.unwrap_or(DEFAULT_Z_POINTS),
            reps: o.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
            seed: o.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            bins: file.bins.unwrap_or(DEFAULT_BINS),
            sweep,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.m_max == 0 {
            return Err(CliError::Config("m_max must be >= 1".into()));
        }
        if let Some(z) = self.z_max {
            if !(z > 0.0 && z.is_finite()) {
                return Err(CliError::Config(format!("z_max = {z} must be positive")));
            }
        }
        if self.z_points < 2 {
            return Err(CliError::Config("z_points must be >= 2".into()));
        }
        if self.reps == 0 {
            return Err(CliError::Config("reps must be >= 1".into()));
        }
        if self.bins == 0 {
            return Err(CliError::Config("bins must be >= 1".into()));
        }
        if let Some(r) = self.r {
            if !(r > 0.0 && r < 1.0) {
                return Err(CliError::Config(format!("r = {r} must lie strictly between 0 and 1")));
            }
        }
        match (self.n, self.k) {
            (Some(n), Some(k)) => {
                SystemConfig::new(n, k, self.r.unwrap_or(0.5), self.bc)?;
            }
            (Some(n), None) => self.bc.check_units(n).map_err(CliError::from)?,
            (None, Some(_)) => return Err(CliError::Config("k given without n".into())),
            (None, None) => {}
        }
        let s = &self.sweep;
        for (name, empty) in [
            ("sweep.n", s.n.as_ref().is_some_and(Vec::is_empty)),
            ("sweep.k", s.k.as_ref().is_some_and(Vec::is_empty)),
            ("sweep.r", s.r.as_ref().is_some_and(Vec::is_empty)),
            ("sweep.bc", s.bc.as_ref().is_some_and(Vec::is_empty)),
            ("sweep.presets", s.presets.as_ref().is_some_and(Vec::is_empty)),
        ] {
            if empty {
                return Err(CliError::Config(format!("{name} must not be empty")));
            }
        }
        if let Some(rs) = &s.r {
            if let Some(r) = rs.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
                return Err(CliError::Config(format!("sweep.r entry {r} must lie strictly between 0 and 1")));
            }
        }
        if let Some(ns) = &s.n {
            if let Some(n) = ns.iter().find(|n| **n < 3 || **n > ckngb::chain::MAX_CHAIN_UNITS) {
                return Err(CliError::Config(format!(
                    "sweep.n entry {n} outside 3..={}",
                    ckngb::chain::MAX_CHAIN_UNITS
                )));
            }
        }
        if let Some(ks) = &s.k {
            if ks.contains(&0) || ks.contains(&1) {
                return Err(CliError::Config("sweep.k entries must be >= 2".into()));
            }
        }
        Ok(())
    }

    /// The single system the command acts on.
    pub fn system(&self, command: &str) -> Result<SystemConfig, CliError> {
        let (Some(n), Some(k)) = (self.n, self.k) else {
            return Err(CliError::Config(format!("`{command}` needs n and k in the config")));
        };
        let Some(r) = self.r else {
            return Err(CliError::Config(format!("`{command}` needs r in the config")));
        };
        let mut config = SystemConfig::new(n, k, r, self.bc)?;
        config.shock = self.shock.clone();
        Ok(config)
    }

    /// Effective settings, echoed to stderr before a command runs.
    pub fn to_json(&self) -> Value {
        let shock = self.shock.as_ref().map(|s| match s {
            InterShockSpec::Preset(p) => json!({ "preset": p.label() }),
            InterShockSpec::Custom(y) => json!({
                "alpha": y.alpha().as_slice(),
                "T": (0..y.phases()).map(|i| y.generator().row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            }),
        });
        json!({
            "config": self.source.as_ref().map(|p| p.display().to_string()),
            "n": self.n,
            "k": self.k,
            "r": self.r,
            "bc": self.bc.label(),
            "shock": shock,
            "m_max": self.m_max,
            "z_max": self.z_max,
            "z_points": self.z_points,
            "reps": self.reps,
            "seed": self.seed,
            "bins": self.bins,
            "sweep": {
                "n": self.sweep.n,
                "k": self.sweep.k,
                "r": self.sweep.r,
                "bc": self.sweep.bc.as_ref().map(|v| v.iter().map(|b| b.label()).collect::<Vec<_>>()),
                "presets": self.sweep.presets.as_ref().map(|v| v.iter().map(|p| p.label()).collect::<Vec<_>>()),
            },
        })
    }
}

fn parse_shock(shock: ShockFile) -> Result<InterShockSpec, CliError> {
    match shock {
        ShockFile {
            preset: Some(label),
            alpha: None,
            generator: None,
        } => Ok(InterShockSpec::Preset(label.parse()?)),
        ShockFile {
            preset: None,
            alpha: Some(alpha),
            generator: Some(t),
        } => Ok(InterShockSpec::Custom(ContinuousPhaseType::new(alpha, t)?)),
        _ => Err(CliError::Config(
            "shock must be either {\"preset\": ...} or {\"alpha\": [...], \"T\": [[...]]}".into(),
        )),
    }
}

fn parse_sweep(sweep: SweepFile) -> Result<SweepSpec, CliError> {
    let presets = sweep
        .presets
        .map(|v| v.iter().map(|s| s.parse::<Preset>()).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    Ok(SweepSpec {
        n: sweep.n,
        k: sweep.k,
        r: sweep.r,
        bc: sweep.bc,
        presets,
    })
}
