//! Undefended baseline: the mark is essentially free for the adversary.

use fan_sim::{run, SimConfig};

#[test]
fn the_dropmark_is_near_perfectly_detectable_without_the_defense() {
    let cfg = SimConfig {
        circuits: 2_000,
        seed: 11,
        ..SimConfig::default()
    };
    let report = run(&cfg);

    assert!(report.malicious >= 150, "unlucky draw: {}", report.malicious);
    assert!(report.benign >= 1_500, "unlucky draw: {}", report.benign);
    assert!(report.tpr >= 0.99, "tpr {}", report.tpr);
    assert!(report.fpr <= 0.02, "fpr {}", report.fpr);

    // Nothing pads and nothing signals when the bundle is not loaded.
    assert_eq!(report.max_padding_cells, 0);
    assert_eq!(report.signals_leaked, 0);
    assert_eq!(report.native_padding_runs, 0);
    assert_eq!(report.plugin_faults, 0);
}

#[test]
fn marked_circuits_carry_exactly_the_injected_extra_cells() {
    let cfg = SimConfig {
        circuits: 400,
        seed: 3,
        ..SimConfig::default()
    };
    let report = run(&cfg);

    // Two data rounds mean four legitimate inbound cells: CREATED,
    // CONNECTED and two DATA replies. A marking exit adds its junk on top.
    for r in &report.records {
        let expected = if r.malicious_exit { 4 + 3 } else { 4 };
        assert_eq!(r.cells_total, expected, "circuit {}", r.circuit_id);
        assert_eq!(r.padding_cells, 0);
        assert_eq!(r.cover_ms, 0);
    }
}

#[test]
fn fewer_junk_cells_than_the_cluster_size_go_unflagged() {
    let cfg = SimConfig {
        circuits: 300,
        seed: 9,
        dropmark_cells: 1,
        ..SimConfig::default()
    };
    let report = run(&cfg);
    assert!(report.malicious > 0);
    assert_eq!(report.tpr, 0.0, "a lone cell is not a cluster");
    assert_eq!(report.fpr, 0.0);
}
