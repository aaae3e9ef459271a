//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line
//! followed by any failing checks.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use ckngb::chain::build_consolidated;
use ckngb::discrete::DirectSntf;
use ckngb::oracle::FullChain;
use ckngb::system_model::is_balanced;
use ckngb::{
    compound_ph, enumerate_min_tiesets, ph_mean_scv, simulate_sntf, simulate_ttf, sntf_distribution,
    BalanceCondition, ContinuousPhaseType, DiscretePhaseType, InterShockSpec, Preset, SystemConfig,
    SystemState,
};
use BalanceCondition::{Bc1, Bc2, Bc3};

struct Report {
    id: u32,
    title: &'static str,
    checks: usize,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Report {
    fn new(id: u32, title: &'static str) -> Self {
        Report {
            id,
            title,
            checks: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(detail());
        }
    }

    fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || {
            format!("{label}: got {got:.15e}, expected {want:.15e} (tol {tol:e})")
        });
    }

    fn note(&mut self, text: String) {
        self.notes.push(text);
    }

    fn finish(self) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {status} {} ({} checks, {} failed)",
            self.id,
            self.title,
            self.checks,
            self.failures.len()
        );
        for n in &self.notes {
            println!("    note: {n}");
        }
        for f in self.failures.iter().take(25) {
            println!("    fail: {f}");
        }
        assert!(self.failures.is_empty(), "criterion {} failed", self.id);
    }
}

fn conditions_for(n: usize) -> Vec<BalanceCondition> {
    if n.is_multiple_of(2) {
        vec![Bc1, Bc2, Bc3]
    } else {
        vec![Bc3]
    }
}

/// `(n, k, r, bc)` for n in 3..=8, k in 2..=n, four reliabilities.
fn small_grid() -> Vec<(usize, usize, f64, BalanceCondition)> {
    let mut out = Vec::new();
    for n in 3..=8 {
        for k in 2..=n {
            for r in [0.3, 0.5, 0.7, 0.9] {
                for bc in conditions_for(n) {
                    out.push((n, k, r, bc));
                }
            }
        }
    }
    out
}

fn dist(n: usize, k: usize, r: f64, bc: BalanceCondition) -> DiscretePhaseType {
    sntf_distribution(&SystemConfig::new(n, k, r, bc).unwrap()).unwrap()
}

fn presets() -> [(Preset, ContinuousPhaseType); 3] {
    Preset::ALL.map(|p| (p, ContinuousPhaseType::from_preset(p)))
}

fn mttf(n: usize, k: usize, r: f64, preset: Preset) -> f64 {
    let m = dist(n, k, r, Bc3);
    compound_ph(&m, &ContinuousPhaseType::from_preset(preset))
        .unwrap()
        .mttf()
        .unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[test]
fn criterion_01_descriptive_chain() {
    let mut rep = Report::new(1, "descriptive-case consolidated matrix and state list");
    let (chain, elapsed) = timed(|| build_consolidated(4, 2, Bc3, 0.7).unwrap());

    // printed to three decimals, last column = absorption
    let printed: [[f64; 8]; 7] = [
        [0.240, 0.103, 0.103, 0.103, 0.044, 0.103, 0.044, 0.260],
        [0.0, 0.343, 0.0, 0.0, 0.147, 0.0, 0.0, 0.510],
        [0.0, 0.0, 0.343, 0.0, 0.0, 0.0, 0.147, 0.510],
        [0.0, 0.0, 0.0, 0.343, 0.147, 0.0, 0.0, 0.510],
        [0.0, 0.0, 0.0, 0.0, 0.490, 0.0, 0.0, 0.510],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.343, 0.147, 0.510],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.490, 0.510],
    ];
    let augmented = chain.augmented();
    rep.check(augmented.len() == 8, || format!("augmented matrix has {} rows", augmented.len()));
    for (a, row) in printed.iter().enumerate() {
        for (b, want) in row.iter().enumerate() {
            rep.close(&format!("P[{}][{}]", a + 1, b + 1), augmented[a][b], *want, 5e-4);
        }
    }
    rep.close("P[8][8]", augmented[7][7], 1.0, 0.0);

    let tuples: Vec<Vec<u8>> = chain.states().iter().map(SystemState::tuple).collect();
    let table = vec![
        vec![1, 1, 1, 1],
        vec![1, 1, 1, 0],
        vec![1, 1, 0, 1],
        vec![1, 0, 1, 1],
        vec![1, 0, 1, 0],
        vec![0, 1, 1, 1],
        vec![0, 1, 0, 1],
    ];
    rep.check(tuples == table, || format!("nonfailed states {tuples:?}"));
    rep.check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"));
    rep.finish();
}

#[test]
fn criterion_02_descriptive_compound() {
    let mut rep = Report::new(2, "descriptive-case compound phase-type parameters");
    let ((alpha, t), elapsed) = timed(|| {
        let z = compound_ph(&dist(4, 2, 0.7, Bc3), &ContinuousPhaseType::from_preset(Preset::Er)).unwrap();
        (z.alpha_z(), z.to_dense().unwrap())
    });
    rep.check(alpha.len() == 14 && t.nrows() == 14, || format!("dimension {}", alpha.len()));
    let mut unit = vec![0.0; 14];
    unit[0] = 1.0;
    rep.check(alpha == unit, || format!("alpha_Z = {alpha:?}"));

    // every nonzero entry as printed, 1-based (row, col, value)
    let mut printed: Vec<(usize, usize, f64)> = Vec::new();
    for block in 0..7 {
        let i = 2 * block + 1;
        printed.push((i, i, -2.0));
        printed.push((i, i + 1, 2.0));
        printed.push((i + 1, i + 1, -2.0));
    }
    printed.extend([
        (2, 1, -0.480),
        (2, 3, -0.206),
        (2, 5, -0.206),
        (2, 7, -0.206),
        (2, 9, -0.088),
        (2, 11, -0.206),
        (2, 13, -0.088),
        (4, 3, -0.686),
        (4, 9, -0.294),
        (6, 5, -0.686),
        (6, 13, -0.294),
        (8, 7, -0.686),
        (8, 9, -0.294),
        (10, 9, -0.980),
        (12, 11, -0.686),
        (12, 13, -0.294),
        (14, 13, -0.980),
    ]);
    let mut magnitude_mismatch = 0;
    let mut sign_mismatch = Vec::new();
    for &(i, j, want) in &printed {
        let got = t[(i - 1, j - 1)];
        if (got.abs() - want.abs()).abs() > 5e-4 {
            magnitude_mismatch += 1;
        } else if (got - want).abs() > 5e-4 {
            sign_mismatch.push((i, j));
        }
        rep.close(&format!("T_Z[{i}][{j}]"), got, want, 5e-4);
    }
    let mut extra = 0;
    for i in 0..14 {
        for j in 0..14 {
            let listed = printed.iter().any(|&(a, b, _)| a == i + 1 && b == j + 1);
            if !listed && t[(i, j)].abs() > 5e-4 {
                extra += 1;
            }
        }
    }
    rep.check(extra == 0, || format!("{extra} entries nonzero where the printed matrix has a dot"));
    rep.check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"));
    rep.note(format!(
        "{} printed entries: {} differ in magnitude, {} agree in magnitude but carry the opposite sign",
        printed.len(),
        magnitude_mismatch,
        sign_mismatch.len()
    ));
    if !sign_mismatch.is_empty() {
        rep.note(
            "the sign-flipped entries are the coupling terms P_BC (x) (t alpha_c); they are \
             transition rates of a subgenerator and the block formula makes them nonnegative"
                .into(),
        );
    }
    rep.finish();
}

#[test]
fn criterion_03_direct_equals_matrix_pmf() {
    let mut rep = Report::new(3, "closed-form pmf equals matrix pmf");
    let (_, elapsed) = timed(|| {
        for (n, k, r, bc) in small_grid() {
            let m = dist(n, k, r, bc);
            let direct = DirectSntf::from_chain(m.chain());
            let series = m.pmf_matrix_series(50);
            for (i, via_matrix) in series.iter().enumerate() {
                let step = i as u32 + 1;
                rep.close(&format!("({n},{k},{r},{bc}) m={step}"), direct.pmf(step), *via_matrix, 1e-12);
            }
        }
    });
    rep.check(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"));
    rep.finish();
}

#[test]
fn criterion_04_consolidation_fidelity() {
    let mut rep = Report::new(4, "consolidated chain matches full chain");
    for n in 2..=6 {
        for k in 2..=n {
            for r in [0.3, 0.5, 0.7, 0.9] {
                let full = FullChain::new(n, r).unwrap();
                for bc in conditions_for(n) {
                    let tiesets = enumerate_min_tiesets(n, k, bc).unwrap();
                    let oracle = full.failure_by_step(&tiesets, 20);
                    let m = dist(n, k, r, bc);
                    for step in 1..=20u32 {
                        rep.close(
                            &format!("({n},{k},{r},{bc}) m={step}"),
                            1.0 - m.survival(step),
                            oracle[step as usize - 1],
                            1e-12,
                        );
                    }
                }
            }
        }
    }
    rep.finish();
}

#[test]
fn criterion_05_closed_form_moments_match_series() {
    let mut rep = Report::new(5, "closed-form moments match truncated series");
    for (n, k, r, bc) in small_grid() {
        let m = dist(n, k, r, bc);
        let direct = DirectSntf::from_chain(m.chain());
        let mean = m.mean_closed().unwrap();
        let second = m.factorial_moment(2).unwrap() + mean;
        let label = format!("({n},{k},{r},{bc})");
        rep.close(&format!("{label} E[M]"), mean, direct.raw_moment_series(1, 1e-12).unwrap(), 1e-9);
        rep.close(&format!("{label} E[M^2]"), second, direct.raw_moment_series(2, 1e-12).unwrap(), 1e-9);
    }
    rep.finish();
}

#[test]
fn criterion_06_mttf_reproduction() {
    let mut rep = Report::new(6, "n = 12 mean time to failure values and ratios");
    let (_, elapsed) = timed(|| {
        let mut table = std::collections::BTreeMap::new();
        for k in [4, 6, 8] {
            for r in [0.5, 0.7, 0.9] {
                let values: Vec<f64> = Preset::ALL.iter().map(|p| mttf(12, k, r, *p)).collect();
                for (p, v) in Preset::ALL.iter().zip(&values) {
                    rep.close(&format!("k={k} r={r} {p} equals EXP"), *v, values[1], 1e-9);
                }
                table.insert((k, (r * 10.0) as u32), values[1]);
            }
        }
        let get = |k: usize, r: f64| table[&(k, (r * 10.0) as u32)];
        for (k, r, want) in [(8, 0.5, 1.04), (6, 0.5, 1.2), (4, 0.5, 1.55), (4, 0.7, 2.59), (4, 0.9, 7.58)] {
            rep.close(&format!("MTTF(k={k}, r={r})"), get(k, r), want, 0.01);
        }
        for (r, want) in [(0.5, 1.49), (0.7, 1.89), (0.9, 2.20)] {
            rep.close(&format!("MTTF(k=4)/MTTF(k=8) at r={r}"), get(4, r) / get(8, r), want, 0.02);
        }
        for (k, want) in [(8, 3.31), (6, 4.35), (4, 4.89)] {
            rep.close(&format!("MTTF(r=0.9)/MTTF(r=0.5) at k={k}"), get(k, 0.9) / get(k, 0.5), want, 0.02);
        }
        rep.note(format!(
            "MTTF k=8,6,4 at r=0.5: {:.4} {:.4} {:.4}; k=4 at r=0.7, 0.9: {:.4} {:.4}",
            get(8, 0.5),
            get(6, 0.5),
            get(4, 0.5),
            get(4, 0.7),
            get(4, 0.9)
        ));
    });
    rep.check(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"));
    rep.finish();
}

#[test]
fn criterion_07_wald_identity() {
    let mut rep = Report::new(7, "Wald identity for the compound law");
    let mut configs = small_grid();
    for k in [4, 6, 8] {
        for r in [0.5, 0.7, 0.9] {
            configs.push((12, k, r, Bc3));
        }
    }
    for (n, k, r, bc) in configs {
        let m = dist(n, k, r, bc);
        let msntf = m.mean_closed().unwrap();
        for (preset, y) in presets() {
            let (mean_y, _) = ph_mean_scv(&y).unwrap();
            let z = compound_ph(&m, &y).unwrap().mttf().unwrap();
            rep.close(&format!("({n},{k},{r},{bc}) {preset}"), z, msntf * mean_y, 1e-8);
        }
    }
    rep.finish();
}

#[test]
fn criterion_08_preset_fidelity() {
    let mut rep = Report::new(8, "inter-shock preset mean and SCV");
    for ((preset, y), want) in presets().into_iter().zip([0.5, 1.0, 2.0]) {
        let (mean, scv) = ph_mean_scv(&y).unwrap();
        rep.close(&format!("{preset} mean"), mean, 1.0, 1e-12);
        rep.close(&format!("{preset} scv"), scv, want, 1e-12);
    }
    rep.finish();
}

#[test]
fn criterion_09_scv_ordering() {
    let mut rep = Report::new(9, "SCV ordering across presets and k");
    let mut by_k = Vec::new();
    for k in [4, 6, 8] {
        let m = dist(12, k, 0.9, Bc3);
        let scv: Vec<f64> = presets()
            .iter()
            .map(|(_, y)| compound_ph(&m, y).unwrap().scv().unwrap())
            .collect();
        let (er, exp, he) = (scv[0], scv[1], scv[2]);
        rep.check(he > exp && exp > er, || format!("k={k}: HE {he} EXP {exp} ER {er}"));
        rep.note(format!("k={k}: ER {er:.5} EXP {exp:.5} HE {he:.5}"));
        by_k.push(scv);
    }
    for p in 0..3 {
        rep.check(by_k[0][p] < by_k[1][p] && by_k[1][p] < by_k[2][p], || {
            format!("{}: SCV not increasing in k: {:?}", Preset::ALL[p], by_k.iter().map(|v| v[p]).collect::<Vec<_>>())
        });
    }
    rep.finish();
}

#[test]
fn criterion_10_geometric_special_case() {
    let mut rep = Report::new(10, "k = n gives a geometric shock count");
    for n in 2..=8 {
        for r in [0.3, 0.7] {
            let m = dist(n, n, r, Bc3);
            let direct = DirectSntf::from_chain(m.chain());
            let series = m.pmf_matrix_series(30);
            let q = r.powi(n as i32);
            for step in 1..=30u32 {
                let want = q.powi(step as i32 - 1) * (1.0 - q);
                rep.close(&format!("n={n} r={r} m={step} direct"), direct.pmf(step), want, 1e-15);
                rep.close(&format!("n={n} r={r} m={step} matrix"), series[step as usize - 1], want, 1e-15);
            }
        }
    }
    rep.finish();
}

#[test]
fn criterion_11_monte_carlo_agreement() {
    let mut rep = Report::new(11, "Monte Carlo agreement on the descriptive case");
    let config = SystemConfig::new(4, 2, 0.7, Bc3)
        .unwrap()
        .with_shock(InterShockSpec::Preset(Preset::Er));
    let m = sntf_distribution(&config).unwrap();
    let msntf = m.mean_closed().unwrap();
    let mttf = compound_ph(&m, &ContinuousPhaseType::from_preset(Preset::Er))
        .unwrap()
        .mttf()
        .unwrap();
    let reps = 1_000_000;
    let sntf = simulate_sntf(&config, 20_240_601, reps).unwrap();
    let ttf = simulate_ttf(&config, 20_240_602, reps).unwrap();
    for (label, res, exact) in [("MSNTF", &sntf, msntf), ("MTTF", &ttf, mttf)] {
        let (lo, hi) = res.confidence_interval(0.99).unwrap();
        rep.check(lo <= exact && exact <= hi, || format!("{label} {exact} outside [{lo}, {hi}]"));
        rep.note(format!("{label}: exact {exact:.6}, simulated {:.6} +/- {:.6} (99%)", res.mean, res.half_width_99()));
    }
    let (p1, se) = sntf.proportion_equal(1.0);
    rep.check((p1 - 0.2601).abs() <= 3.0 * se, || format!("P{{M=1}} = {p1} (se {se})"));
    rep.note(format!("P{{M=1}}: simulated {p1:.6} (se {se:.6})"));
    rep.finish();
}

/// Centroid test written out independently of the library.
fn centroid_balanced(n: usize, units: &[usize]) -> bool {
    let (x, y) = units.iter().fold((0.0, 0.0), |(x, y), &i| {
        let a = 2.0 * PI * (i - 1) as f64 / n as f64;
        (x + a.cos(), y + a.sin())
    });
    !units.is_empty() && x.hypot(y) < 1e-9
}

#[test]
fn criterion_12_balance_containment() {
    let mut rep = Report::new(12, "balance-condition containment and MSNTF ordering");
    for n in (2..=12).step_by(2) {
        for bits in 1..(1u32 << n) {
            let s = SystemState::new(bits, n).unwrap();
            let bc3 = centroid_balanced(n, &s.operating_units());
            for bc in [Bc1, Bc2] {
                if is_balanced(&s, bc).unwrap() {
                    rep.check(bc3, || format!("{s} is {bc}-balanced but not BC3-balanced"));
                }
            }
        }
        for k in 2..=n {
            let count = |bc| enumerate_min_tiesets(n, k, bc).unwrap().len();
            let (c1, c2, c3) = (count(Bc1), count(Bc2), count(Bc3));
            rep.check(c3 >= c1.max(c2), || format!("n={n} k={k}: |T| BC1 {c1} BC2 {c2} BC3 {c3}"));
        }
    }
    let r_grid: Vec<f64> = (1..=19).map(|i| f64::from(i) * 0.05).collect();
    for k in [4, 6, 8] {
        for &r in &r_grid {
            let mean = |bc| dist(12, k, r, bc).mean_closed().unwrap();
            let (m1, m2, m3) = (mean(Bc1), mean(Bc2), mean(Bc3));
            rep.check(m3 >= m2 && m2 >= m1, || {
                format!("n=12 k={k} r={r:.2}: MSNTF BC1 {m1} BC2 {m2} BC3 {m3}")
            });
        }
    }
    rep.finish();
}
