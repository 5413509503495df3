//! End-to-end pipeline tests on a synthetic year: selection, dispatch,
//! ledger accumulation, cash flows, and determinism.

use bess_core::config::Config;
use bess_core::finance::{build_cashflows, irr, CostModel};
use bess_core::lifecycle::run_lifecycle;
use bess_core::synth;

fn config_for(price_root: &std::path::Path, extra: &str) -> Config {
    Config::from_toml(&format!(
        "[market]\nprice_root = \"{}\"\n\n[lifecycle]\nyear = 2021\n{extra}",
        price_root.display()
    ))
    .unwrap()
}

fn synthetic_tree(dir: &std::path::Path) {
    let (days, _) = synth::planted_year(2021, 5, 77, 0.02);
    synth::write_price_tree(dir, &days).unwrap();
}

#[test]
fn typical_lifecycle_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_tree(dir.path());
    let cfg = config_for(dir.path(), "method = \"typical\"\n");
    let resolved = cfg.resolve().unwrap();
    let run = run_lifecycle(&resolved.run_spec(dir.path(), 1.0)).unwrap();

    assert_eq!(run.representative.len(), 36);
    assert_eq!(run.ledger.method, "typical");
    assert!(!run.ledger.truncated);

    // cumulative capacity loss strictly increases and crosses the
    // threshold exactly at the final row
    let rows = &run.ledger.rows;
    assert!(!rows.is_empty());
    for w in rows.windows(2) {
        assert!(w[1].cap_loss > w[0].cap_loss);
        assert!(w[1].income >= w[0].income);
    }
    for row in &rows[..rows.len() - 1] {
        assert!(row.cap_loss < run.ledger.threshold);
    }
    assert!(rows.last().unwrap().cap_loss >= run.ledger.threshold * (1.0 - 1e-9));
    assert_eq!(run.ledger.end_of_life_year, rows.len() as u32);

    // the synthetic fixture lands in a plausible lifetime band
    assert!(
        (8..=20).contains(&run.ledger.end_of_life_year),
        "lifetime {} years",
        run.ledger.end_of_life_year
    );

    // a profitable ledger yields a well-defined positive IRR
    let flows = build_cashflows(&run.ledger, &CostModel::lfp()).unwrap();
    assert!(flows.flows[0] < 0.0);
    let sol = irr(&flows).unwrap();
    assert!(sol.rate > 0.0, "irr {}", sol.rate);
}

#[test]
fn cluster_lifecycle_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_tree(dir.path());
    let cfg = config_for(
        dir.path(),
        "method = \"cluster\"\nk = 5\nseed = 11\nmetric = \"dtw\"\n",
    );
    let resolved = cfg.resolve().unwrap();
    let a = run_lifecycle(&resolved.run_spec(dir.path(), 1.0)).unwrap();
    let b = run_lifecycle(&resolved.run_spec(dir.path(), 1.0)).unwrap();

    let ser = |r: &bess_core::lifecycle::LifecycleRun| {
        (
            serde_json::to_string(&r.ledger).unwrap(),
            serde_json::to_string(&r.cluster).unwrap(),
            serde_json::to_string(&r.representative).unwrap(),
        )
    };
    assert_eq!(
        ser(&a),
        ser(&b),
        "identical inputs must serialize identically"
    );

    let model = a.cluster.as_ref().unwrap();
    assert_eq!(model.day_counts.iter().sum::<usize>(), 365);
    assert_eq!(model.assignments.len(), 365);

    // ledger JSON round-trips through the parser
    let text = serde_json::to_string(&a.ledger).unwrap();
    let back: bess_core::lifecycle::LifecycleLedger = serde_json::from_str(&text).unwrap();
    assert_eq!(back, a.ledger);
}

#[test]
fn accelerated_fade_extends_life_beyond_the_knee() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_tree(dir.path());
    let base = config_for(
        dir.path(),
        "method = \"cluster\"\nk = 4\nseed = 2\nmetric = \"euclidean\"\n",
    )
    .resolve()
    .unwrap();
    let standard = run_lifecycle(&base.run_spec(dir.path(), 1.0)).unwrap();

    let deep = config_for(
        dir.path(),
        "method = \"cluster\"\nk = 4\nseed = 2\nmetric = \"euclidean\"\nthreshold = 0.40\naccelerated_fade = true\n",
    )
    .resolve()
    .unwrap();
    let extended = run_lifecycle(&deep.run_spec(dir.path(), 1.0)).unwrap();

    assert!(extended.ledger.end_of_life_year > standard.ledger.end_of_life_year);
    // beyond the knee each year loses triple, so the extension is shorter
    // than a naive doubling of the post-knee span
    let base_years = standard.ledger.end_of_life_year as f64;
    let extra_years = extended.ledger.end_of_life_year as f64 - base_years;
    assert!(
        extra_years <= (base_years / 3.0).ceil() + 1.0,
        "extension {extra_years} too long for the x3 rule"
    );
}

#[test]
fn price_scale_raises_annual_income_on_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_tree(dir.path());
    let resolved = config_for(
        dir.path(),
        "method = \"cluster\"\nk = 4\nseed = 5\nmetric = \"euclidean\"\n",
    )
    .resolve()
    .unwrap();
    let base = run_lifecycle(&resolved.run_spec(dir.path(), 1.0)).unwrap();
    let scaled = run_lifecycle(&resolved.run_spec(dir.path(), 1.10)).unwrap();
    assert!(scaled.annual.income >= base.annual.income);
}
