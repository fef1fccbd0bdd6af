//! Acceptance gate: one test per verification criterion.
//!
//! Each test prints the PASS/FAIL line of every sub-check (visible with
//! `--nocapture`, and in full on failure) and asserts that the criterion
//! holds. The same functions back the `quench verify` command.

use quench::verify;

fn run(criterion: u8) {
    let checks = verify::run_criterion(criterion);
    assert!(!checks.is_empty(), "criterion {criterion} produced no checks");
    let mut lines = String::new();
    let mut all = true;
    for check in &checks {
        let line = check.line();
        println!("{line}");
        lines.push_str(&line);
        lines.push('\n');
        all &= check.passed;
    }
    assert!(all, "criterion {criterion} has failing checks:\n{lines}");
}

#[test]
fn acceptance_01_replica_identity() {
    run(1);
}

#[test]
fn acceptance_02_variance_slope() {
    run(2);
}

#[test]
fn acceptance_03_corridor_route_equivalence() {
    run(3);
}

#[test]
fn acceptance_04_cut_route_equivalence() {
    run(4);
}

#[test]
fn acceptance_05_flip_symmetry() {
    run(5);
}

#[test]
fn acceptance_06_tau_bounds() {
    run(6);
}

#[test]
fn acceptance_07_high_temperature_value() {
    run(7);
}

#[test]
fn acceptance_08_small_beta_trend() {
    run(8);
}

#[test]
fn acceptance_09_property_suite() {
    run(9);
}

#[test]
fn acceptance_10_determinism() {
    run(10);
}
