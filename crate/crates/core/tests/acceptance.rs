//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria as well.

use smallblocks_core::gof::GofReport;
use smallblocks_core::intensity::{self, ConeWindow};
use smallblocks_core::rng::derive_rng;
use smallblocks_core::verify::{run_suite, suite_passes, Suite, SuiteConfig};

fn report_line(criterion: u32, name: &str, pass: bool) {
    println!(
        "acceptance criterion {criterion:2} [{name}]: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed");
}

fn failures(reports: &[GofReport]) -> Vec<&GofReport> {
    reports.iter().filter(|r| !r.pass).collect()
}

#[test]
fn criterion_01_oracle_duality() {
    let cfg = SuiteConfig { families: 1000, ..SuiteConfig::default() };
    let reports = run_suite(Suite::Oracle, &cfg).unwrap();
    let duality = reports
        .iter()
        .find(|r| r.test == "oracle-duality-random-families")
        .unwrap();
    report_line(1, "oracle duality on 1000 random families", duality.pass);
}

#[test]
fn criterion_02_worked_example() {
    let cfg = SuiteConfig::default();
    let reports = run_suite(Suite::Oracle, &cfg).unwrap();
    let ok = reports
        .iter()
        .filter(|r| r.test.starts_with("oracle-worked-example"))
        .all(|r| r.pass);
    report_line(2, "worked two-tuple example, both routes", ok);
}

#[test]
fn criterion_03_ewens_exactness() {
    let cfg = SuiteConfig { replicates: 1_000_000, ..SuiteConfig::default() };
    let reports = run_suite(Suite::Ewens, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  ewens failure: {r:?}");
    }
    report_line(3, "Ewens exactness + Monte Carlo at 1e6", suite_passes(&reports));
}

#[test]
fn criterion_04_theorem1_desk_scale() {
    let cfg = SuiteConfig { n: 100_000, replicates: 2000, ..SuiteConfig::default() };
    let reports = run_suite(Suite::Theorem1, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  theorem1 failure: {r:?}");
    }
    report_line(4, "Poisson window counts, N in {1,2}, 3 windows each", suite_passes(&reports));
}

#[test]
fn criterion_05_joint_counts() {
    let cfg = SuiteConfig { n: 100_000, replicates: 5000, count_sizes: 3, ..SuiteConfig::default() };
    let reports = run_suite(Suite::Counts, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  counts failure: {r:?}");
    }
    report_line(5, "two-time block counts: means, laws, covariance", suite_passes(&reports));
}

#[test]
fn criterion_06_singleton_pgf() {
    let cfg = SuiteConfig { n: 100_000, replicates: 4000, ..SuiteConfig::default() };
    let reports = run_suite(Suite::Fpc, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  fpc failure: {r:?}");
    }
    report_line(6, "singleton-count pgf and Poisson marginals", suite_passes(&reports));
}

#[test]
fn criterion_07_first_singleton() {
    let cfg = SuiteConfig { n: 100_000, replicates: 4000, ..SuiteConfig::default() };
    let reports = run_suite(Suite::Minpoint, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  minpoint failure: {r:?}");
    }
    report_line(7, "first-singleton survival law", suite_passes(&reports));
}

#[test]
fn criterion_08_shortlived_pair() {
    let cfg = SuiteConfig {
        n: 100_000,
        replicates: 2000,
        delta: 0.5,
        horizon_multiple: 200.0,
        ..SuiteConfig::default()
    };
    let reports = run_suite(Suite::Shortlived, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  shortlived failure: {r:?}");
    }
    report_line(8, "short-lived singleton lifetime vs Pareto, censoring < 1%", suite_passes(&reports));
}

#[test]
fn criterion_09_counting_process() {
    let cfg = SuiteConfig {
        n: 10_000,
        replicates: 4000,
        delta: 1.0,
        horizon_multiple: 500.0,
        ..SuiteConfig::default()
    };
    let reports = run_suite(Suite::Qprocess, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  qprocess failure: {r:?}");
    }
    report_line(9, "doubleton counting process increments", suite_passes(&reports));
}

#[test]
fn criterion_10_measure_identities() {
    use rand::Rng;
    let mut ok = true;
    // scale invariance and the lifting consistency identity on random windows
    let mut rng = derive_rng(99, &[10]);
    for case in 0..20 {
        let n = rng.random_range(1..=3usize);
        let mut x_bounds = Vec::new();
        for _ in 0..n {
            let l: f64 = rng.random::<f64>() * 0.8;
            x_bounds.push((l, l + 0.1 + rng.random::<f64>()));
        }
        let l_y: f64 = 1.0 + rng.random::<f64>();
        let w = ConeWindow::new(x_bounds, (l_y, l_y + 0.2 + rng.random::<f64>())).unwrap();
        let theta = 0.5 + 2.0 * rng.random::<f64>();
        let m0 = intensity::mass(&w, theta).unwrap();
        let c = 0.2 + 4.0 * rng.random::<f64>();
        let scaled_err = (intensity::mass(&w.scaled(c), theta).unwrap() - m0).abs();
        let lift_to = n + 1 + (case % 2);
        let (_, _, lift_err) = intensity::consistency_check(&w, lift_to, theta).unwrap();
        if scaled_err > 1e-8 || lift_err.abs() > 1e-8 {
            eprintln!("  identity failure on window {w:?}: scale {scaled_err}, lift {lift_err}");
            ok = false;
        }
    }
    // row identity for the block-count rates
    for &alpha in &[1.5, 2.0, 4.0] {
        for n in 1..=8u64 {
            let c = intensity::PropCountsConstants::new(1.0, alpha, n);
            for i in 1..=n.min(5) {
                let err = (c.row_sum(i) - 1.0 / i as f64).abs();
                if err > 1e-12 {
                    eprintln!("  row identity failure at alpha={alpha}, N={n}, i={i}: {err}");
                    ok = false;
                }
            }
        }
    }
    report_line(10, "scale invariance, lifting consistency, rate row sums", ok);
}

#[test]
fn criterion_11_lattice_riemann_sum() {
    let cfg = SuiteConfig { lemma2_n: vec![100, 300, 1000, 2000], ..SuiteConfig::default() };
    let reports = run_suite(Suite::Lemma2, &cfg).unwrap();
    for r in failures(&reports) {
        eprintln!("  lemma2 failure: {r:?}");
    }
    report_line(11, "exact lattice sums approach window-mass powers", suite_passes(&reports));
}

#[test]
fn criterion_12_determinism() {
    // every suite, rerun under an identical config, must reproduce
    // byte-identical reports (reduced scale keeps the double run cheap)
    let cfg = SuiteConfig {
        n: 3000,
        replicates: 200,
        families: 100,
        lemma2_n: vec![50, 150],
        horizon_multiple: 300.0,
        ..SuiteConfig::default()
    };
    let mut ok = true;
    for suite in Suite::ALL {
        let cfg = if suite == Suite::Ewens {
            SuiteConfig { replicates: 5000, ..cfg.clone() }
        } else {
            cfg.clone()
        };
        let a = serde_json::to_vec(&run_suite(suite, &cfg).unwrap()).unwrap();
        let b = serde_json::to_vec(&run_suite(suite, &cfg).unwrap()).unwrap();
        if a != b {
            eprintln!("  determinism failure in suite {}", suite.name());
            ok = false;
        }
    }
    report_line(12, "byte-identical reports on rerun, all suites", ok);
}
