use std::fmt::Write as _;

use ckngb::chain::ConsolidatedChain;
use ckngb::discrete::DirectSntf;
use ckngb::format::sig12;
use ckngb::montecarlo::{simulate_sntf_with, simulate_ttf_with, SimulationResult};
use ckngb::tiesets::enumerate_min_tiesets_with;
use ckngb::{
    compound_ph, BalanceCondition, ContinuousPhaseType, DiscretePhaseType, Error, Exec, InterShockSpec, Preset,
    SystemConfig,
};

use crate::config::ExperimentSpec;
use crate::error::CliError;

pub const SERIES_TOL: f64 = 1e-12;
const TTF_HORIZON_MASS: f64 = 1e-6;

/// Text produced by a command plus the exit status to report after writing it.
pub struct Output {
    pub text: String,
    pub status: Result<(), CliError>,
}

impl From<String> for Output {
    fn from(text: String) -> Self {
        Output { text, status: Ok(()) }
    }
}

pub fn tiesets(spec: &ExperimentSpec, exec: Exec) -> Result<Output, CliError> {
    let (Some(n), Some(k)) = (spec.n, spec.k) else {
        return Err(CliError::Config("`tiesets` needs n and k in the config".into()));
    };
    let ts = enumerate_min_tiesets_with(n, k, spec.bc, exec)?;
    let mut out = format!("# n={n} k={k} bc={} count={}\n", spec.bc, ts.len());
    for t in ts.tiesets() {
        let _ = writeln!(out, "{t}");
    }
    Ok(out.into())
}

pub fn sntf_pmf(
    spec: &ExperimentSpec,
    use_matrix: bool,
    chain_csv: Option<&mut String>,
) -> Result<Output, CliError> {
    let config = spec.system("sntf-pmf")?;
    let mut out = String::from("m,pmf,survival\n");
    if use_matrix || chain_csv.is_some() {
        let m = ckngb::sntf_distribution(&config)?;
        if let Some(csv) = chain_csv {
            *csv = m.chain().to_csv();
        }
        if use_matrix {
            let pmf = m.pmf_matrix_series(spec.m_max);
            let mut u = m.alpha().to_vec();
            for (i, p) in pmf.iter().enumerate() {
                u = m.subtransition().vec_mul(&u);
                let _ = writeln!(out, "{},{},{}", i + 1, sig12(*p), sig12(u.iter().sum()));
            }
            return Ok(out.into());
        }
    }
    let direct = DirectSntf::new(&config)?;
    for m in 1..=spec.m_max {
        let _ = writeln!(out, "{m},{},{}", sig12(direct.pmf(m)), sig12(direct.survival(m)));
    }
    Ok(out.into())
}

pub fn sntf_moments(spec: &ExperimentSpec) -> Result<Output, CliError> {
    let config = spec.system("sntf-moments")?;
    let m = ckngb::sntf_distribution(&config)?;
    let direct = DirectSntf::from_chain(m.chain());
    let tiesets = ckngb::enumerate_min_tiesets(config.n, config.k, config.bc)?;
    let mean = m.mean_closed()?;
    let second = m.factorial_moment(2)? + mean;
    let variance = second - mean * mean;
    let mut rows = vec![
        ("tiesets", tiesets.len() as f64),
        ("states", m.dim() as f64),
        ("msntf", mean),
        ("second_moment", second),
        ("variance", variance),
        ("scv", variance / (mean * mean)),
        ("msntf_series", direct.raw_moment_series(1, SERIES_TOL)?),
        ("second_moment_series", direct.raw_moment_series(2, SERIES_TOL)?),
    ];
    if let Some(shock) = &config.shock {
        let z = compound_ph(&m, &shock.phase_type())?;
        rows.push(("mttf", z.mttf()?));
        rows.push(("ttf_scv", z.scv()?));
    }
    let mut out = String::from("metric,value\n");
    for (name, v) in rows {
        let _ = writeln!(out, "{name},{}", sig12(v));
    }
    Ok(out.into())
}

pub fn ttf(spec: &ExperimentSpec, exec: Exec) -> Result<Output, CliError> {
    let config = spec.system("ttf")?;
    let shock = config
        .shock
        .as_ref()
        .ok_or_else(|| CliError::Config("`ttf` needs a shock entry in the config".into()))?;
    let y = shock.phase_type();
    let m = ckngb::sntf_distribution(&config)?;
    let z = compound_ph(&m, &y)?;
    let z_max = match spec.z_max {
        Some(v) => v,
        None => z.survival_horizon(TTF_HORIZON_MASS)?,
    };
    let last = spec.z_points - 1;
    let grid: Vec<f64> = (0..spec.z_points)
        .map(|i| if i == last { z_max } else { z_max * i as f64 / last as f64 })
        .collect();
    let values = z.density_grid(&grid, exec)?;
    let mut out = String::from("z,pdf,survival\n");
    for (x, (pdf, surv)) in grid.iter().zip(&values) {
        let _ = writeln!(out, "{},{},{}", sig12(*x), sig12(*pdf), sig12(*surv));
    }
    let (mean_y, _) = y.mean_scv()?;
    let _ = writeln!(
        out,
        "# mttf={},scv={},wald_mttf={}",
        sig12(z.mttf()?),
        sig12(z.scv()?),
        sig12(m.mean_closed()? * mean_y)
    );
    Ok(out.into())
}

/// Default r-grid 0.05, 0.10, ..., 0.95.
pub fn default_r_grid() -> Vec<f64> {
    (1..=19).map(|i| f64::from(i) / 20.0).collect()
}

struct GridPoint {
    bc: BalanceCondition,
    n: usize,
    k: usize,
}

fn sorted<T: PartialOrd + Copy>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("grid values are finite"));
    v.dedup();
    v
}

/// `(bc, n, k)` groups in output order, skipping `k >= n`.
fn grid_points(spec: &ExperimentSpec, default_n: usize, default_k: Option<Vec<usize>>) -> Vec<GridPoint> {
    let bcs = sorted(spec.sweep.bc.clone().unwrap_or_else(|| vec![spec.bc]));
    let ns = sorted(spec.sweep.n.clone().or(spec.n.map(|n| vec![n])).unwrap_or(vec![default_n]));
    let mut out = Vec::new();
    for &bc in &bcs {
        for &n in &ns {
            let ks = spec.sweep.k.clone().or(default_k.clone()).unwrap_or_else(|| (2..n).collect());
            for k in sorted(ks) {
                if k >= n {
                    eprintln!("ckngb: skipping k = {k} for n = {n} (sweeps need 2 <= k <= n - 1)");
                    continue;
                }
                out.push(GridPoint { bc, n, k });
            }
        }
    }
    out
}

/// Tie-sets of a grid point, or the status marker for a point with no
/// analytic answer.
fn feasibility(p: &GridPoint, exec: Exec) -> Result<Result<ckngb::TieSetCollection, &'static str>, CliError> {
    match enumerate_min_tiesets_with(p.n, p.k, p.bc, exec) {
        Ok(ts) => Ok(Ok(ts)),
        Err(Error::OddNUnsupported(_)) => Ok(Err("unsupported")),
        Err(Error::NoTieSets { .. }) => Ok(Err("infeasible")),
        Err(e) => Err(e.into()),
    }
}

pub fn sweep_msntf(spec: &ExperimentSpec, exec: Exec) -> Result<Output, CliError> {
    let points = grid_points(spec, 12, None);
    let rs = sorted(spec.sweep.r.clone().unwrap_or_else(default_r_grid));
    let blocks = exec.map_slice(&points, |p| -> Result<String, CliError> {
        let mut out = String::new();
        let ts = feasibility(p, Exec::Sequential)?;
        for &r in &rs {
            let head = format!("{},{},{},{}", p.bc, p.n, p.k, sig12(r));
            match &ts {
                Ok(ts) => {
                    let chain = ConsolidatedChain::from_tiesets(ts, r, Exec::Sequential)?;
                    let mean = DiscretePhaseType::from_chain(chain).mean_closed()?;
                    let _ = writeln!(out, "{head},{},ok", sig12(mean));
                }
                Err(status) => {
                    let _ = writeln!(out, "{head},,{status}");
                }
            }
        }
        Ok(out)
    });
    let mut out = String::from("bc,n,k,r,msntf,status\n");
    for b in blocks {
        out.push_str(&b?);
    }
    Ok(out.into())
}

pub fn sweep_scv(spec: &ExperimentSpec, exec: Exec) -> Result<Output, CliError> {
    let points = grid_points(spec, 12, spec.k.map(|k| vec![k]).or(Some(vec![4, 6, 8])));
    let rs = sorted(spec.sweep.r.clone().or(spec.r.map(|r| vec![r])).unwrap_or(vec![0.5, 0.7, 0.9]));
    let shocks: Vec<(String, ContinuousPhaseType)> = match (&spec.sweep.presets, &spec.shock) {
        (Some(presets), _) => sorted_presets(presets),
        (None, Some(shock)) => vec![(shock.label(), shock.phase_type())],
        (None, None) => sorted_presets(&Preset::ALL),
    };
    let blocks = exec.map_slice(&points, |p| -> Result<String, CliError> {
        let mut out = String::new();
        let ts = feasibility(p, Exec::Sequential)?;
        for &r in &rs {
            let m = match &ts {
                Ok(ts) => Ok(DiscretePhaseType::from_chain(ConsolidatedChain::from_tiesets(
                    ts,
                    r,
                    Exec::Sequential,
                )?)),
                Err(status) => Err(*status),
            };
            for (label, y) in &shocks {
                let head = format!("{},{},{},{},{label}", p.bc, p.n, p.k, sig12(r));
                match &m {
                    Ok(m) => {
                        let z = compound_ph(m, y)?;
                        let msntf = m.mean_closed()?;
                        let (mean_y, _) = y.mean_scv()?;
                        let _ = writeln!(
                            out,
                            "{head},{},{},{},{},ok",
                            sig12(msntf),
                            sig12(z.mttf()?),
                            sig12(msntf * mean_y),
                            sig12(z.scv()?)
                        );
                    }
                    Err(status) => {
                        let _ = writeln!(out, "{head},,,,,{status}");
                    }
                }
            }
        }
        Ok(out)
    });
    let mut out = String::from("bc,n,k,r,shock,msntf,mttf,wald_mttf,scv,status\n");
    for b in blocks {
        out.push_str(&b?);
    }
    Ok(out.into())
}

fn sorted_presets(presets: &[Preset]) -> Vec<(String, ContinuousPhaseType)> {
    let mut v = presets.to_vec();
    v.sort();
    v.dedup();
    v.into_iter()
        .map(|p| (p.label().to_string(), ContinuousPhaseType::from_preset(p)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    Sntf,
    Ttf,
}

pub struct Simulation {
    pub summary: Output,
    pub histogram: String,
}

pub fn simulate(spec: &ExperimentSpec, quantity: Option<Quantity>, exec: Exec) -> Result<Simulation, CliError> {
    let config = spec.system("simulate")?;
    let m = ckngb::sntf_distribution(&config)?;
    let sntf = simulate_sntf_with(&config, spec.seed, spec.reps, exec)?;
    let mut out = String::from(
        "quantity,replications,seed,exact_mean,mean,variance,std_error,half_width_95,ci99_low,ci99_high,q05,median,q95\n",
    );
    summary_row(&mut out, "sntf", &sntf, m.mean_closed()?)?;
    let ttf = match &config.shock {
        Some(shock) => {
            let res = simulate_ttf_with(&config, spec.seed, spec.reps, exec)?;
            let exact = compound_ph(&m, &shock.phase_type())?.mttf()?;
            summary_row(&mut out, "ttf", &res, exact)?;
            Some(res)
        }
        None => None,
    };
    let target = match (quantity, ttf) {
        (Some(Quantity::Sntf), _) | (None, None) => sntf,
        (_, Some(t)) => t,
        (Some(Quantity::Ttf), None) => {
            return Err(CliError::Config("a TTF histogram needs a shock entry in the config".into()))
        }
    };
    Ok(Simulation {
        summary: out.into(),
        histogram: target.histogram_csv(spec.bins),
    })
}

fn summary_row(out: &mut String, name: &str, res: &SimulationResult, exact: f64) -> Result<(), CliError> {
    let (lo, hi) = res.confidence_interval(0.99)?;
    let _ = writeln!(
        out,
        "{name},{},{},{},{},{},{},{},{},{},{},{},{}",
        res.replications,
        res.seed,
        sig12(exact),
        sig12(res.mean),
        sig12(res.variance),
        sig12(res.std_error),
        sig12(res.half_width_95),
        sig12(lo),
        sig12(hi),
        sig12(res.quantile(0.05)),
        sig12(res.quantile(0.5)),
        sig12(res.quantile(0.95))
    );
    Ok(())
}

/// The descriptive system used by `validate` when no config is given.
pub fn descriptive_case() -> SystemConfig {
    SystemConfig::new(4, 2, 0.7, BalanceCondition::Bc3)
        .expect("valid")
        .with_shock(InterShockSpec::Preset(Preset::Er))
}
