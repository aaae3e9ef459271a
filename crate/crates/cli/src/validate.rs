//! `validate`: analytic results against their independent oracles.

use std::fmt::Write as _;

use ckngb::chain::ConsolidatedChain;
use ckngb::discrete::DirectSntf;
use ckngb::format::sig;
use ckngb::montecarlo::{simulate_sntf_with, simulate_ttf_with};
use ckngb::numeric::adaptive_simpson;
use ckngb::oracle::{FullChain, FULL_CHAIN_MAX_UNITS};
use ckngb::tiesets::enumerate_min_tiesets_with;
use ckngb::{compound_ph, DiscretePhaseType, Exec, InterShockSpec, Preset, SystemConfig};

use crate::commands::{Output, SERIES_TOL};
use crate::error::CliError;

const FULL_CHAIN_STEPS: u32 = 20;
const DENSITY_CHECK_LIMIT: usize = 4096;

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Table {
    rows: Vec<(String, Verdict, String)>,
}

impl Table {
    fn record(&mut self, name: &str, ok: bool, detail: String) {
        let v = if ok { Verdict::Pass } else { Verdict::Fail };
        self.rows.push((name.to_string(), v, detail));
    }

    fn within(&mut self, name: &str, error: f64, tol: f64) {
        self.record(name, error <= tol, format!("max_abs_error={} tol={}", sig(error, 3), sig(tol, 3)));
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.rows.push((name.to_string(), Verdict::Skip, why.to_string()));
    }
}

/// Runs every check on `config`; `corrupt` perturbs one transition
/// probability first, as a negative control.
pub fn validate(
    config: &SystemConfig,
    m_max: u32,
    reps: usize,
    seed: u64,
    corrupt: bool,
    exec: Exec,
) -> Result<Output, CliError> {
    let tiesets = enumerate_min_tiesets_with(config.n, config.k, config.bc, exec)?;
    let mut chain = ConsolidatedChain::from_tiesets(&tiesets, config.r, exec)?;
    if corrupt {
        chain.perturb_entry(0, 0, 0.05);
    }
    let m = DiscretePhaseType::from_chain(chain.clone());
    let direct = DirectSntf::new(config)?;
    let mut t = Table { rows: Vec::new() };

    match chain.check_stochastic(1e-12) {
        Ok(()) => t.record("chain_row_sums", true, "rows of [P | absorb] sum to 1".into()),
        Err(e) => t.record("chain_row_sums", false, e),
    }

    let pmf = m.pmf_matrix_series(m_max);
    let err = (1..=m_max)
        .map(|i| (direct.pmf(i) - pmf[i as usize - 1]).abs())
        .fold(0.0, f64::max);
    t.within("pmf_direct_vs_matrix", err, 1e-12);

    if config.n <= FULL_CHAIN_MAX_UNITS {
        let full = FullChain::new(config.n, config.r)?;
        let oracle = full.failure_by_step(&tiesets, FULL_CHAIN_STEPS);
        let err = (1..=FULL_CHAIN_STEPS)
            .map(|i| (1.0 - m.survival(i) - oracle[i as usize - 1]).abs())
            .fold(0.0, f64::max);
        t.within("consolidated_vs_full_chain", err, 1e-12);
    } else {
        t.skip("consolidated_vs_full_chain", "full chain oracle limited to n <= 8");
    }

    let mean = m.mean_closed()?;
    t.within("mean_closed_vs_series", (mean - direct.raw_moment_series(1, SERIES_TOL)?).abs(), 1e-9);
    let second = m.factorial_moment(2)? + mean;
    t.within(
        "second_moment_vs_series",
        (second - direct.raw_moment_series(2, SERIES_TOL)?).abs(),
        1e-9,
    );

    let shocks: Vec<InterShockSpec> = match &config.shock {
        Some(s) => vec![s.clone()],
        None => Preset::ALL.iter().map(|p| InterShockSpec::Preset(*p)).collect(),
    };
    for shock in &shocks {
        let y = shock.phase_type();
        let z = compound_ph(&m, &y)?;
        let (mean_y, _) = y.mean_scv()?;
        let label = shock.label();
        t.within(&format!("wald_{label}"), (z.mttf()? - mean * mean_y).abs(), 1e-8);
        if z.dim() <= DENSITY_CHECK_LIMIT {
            let horizon = z.survival_horizon(1e-10)?;
            let mass = adaptive_simpson(|x| z.pdf(x), 0.0, horizon, 1e-9)?;
            t.within(&format!("density_mass_{label}"), (mass - 1.0).abs(), 1e-6);
        } else {
            t.skip(&format!("density_mass_{label}"), "compound dimension above 4096");
        }
    }

    let sim = simulate_sntf_with(config, seed, reps, exec)?;
    let (lo, hi) = sim.confidence_interval(0.99)?;
    t.record(
        "monte_carlo_msntf",
        lo <= mean && mean <= hi,
        format!("exact={} ci99=[{}, {}]", sig(mean, 8), sig(lo, 8), sig(hi, 8)),
    );
    let ttf_config = config.clone().with_shock(shocks[0].clone());
    let sim = simulate_ttf_with(&ttf_config, seed.wrapping_add(1), reps, exec)?;
    let exact = compound_ph(&m, &shocks[0].phase_type())?.mttf()?;
    let (lo, hi) = sim.confidence_interval(0.99)?;
    t.record(
        &format!("monte_carlo_mttf_{}", shocks[0].label()),
        lo <= exact && exact <= hi,
        format!("exact={} ci99=[{}, {}]", sig(exact, 8), sig(lo, 8), sig(hi, 8)),
    );

    let mut out = String::from("check,status,detail\n");
    let mut failed = Vec::new();
    for (name, verdict, detail) in &t.rows {
        let status = match verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => {
                failed.push(name.clone());
                "fail"
            }
            Verdict::Skip => "skip",
        };
        let _ = writeln!(out, "{name},{status},{detail}");
    }
    let status = if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    };
    Ok(Output { text: out, status })
}
