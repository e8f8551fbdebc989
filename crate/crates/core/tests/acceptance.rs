//! One test per acceptance criterion, run with pinned tolerances at the full
//! level. Each prints a PASS/FAIL line with its measurements.

use kdv_vessel::suite::{run_check, Check, CheckOutcome, Level, SuiteOptions};

fn run(check: Check) -> CheckOutcome {
    let opts = SuiteOptions {
        level: Level::Full,
        ..SuiteOptions::default()
    };
    let outcome = run_check(check, &opts).unwrap_or_else(|e| panic!("{check}: numerical error: {e}"));
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {:<22} value={:.3e} tolerance={:.3e} runtime={:.0}ms",
        outcome.check, outcome.value, outcome.tolerance, outcome.runtime_ms
    );
    for m in &outcome.measurements {
        let mark = if m.pass { "ok" } else { "FAILED" };
        println!(
            "    {:<32} {:>12.4e} {:?} {:.3e} {mark}",
            m.name, m.value, m.bound, m.tolerance
        );
    }
    for note in &outcome.notes {
        println!("    note: {note}");
    }
    outcome
}

fn assert_passes(check: Check) {
    let outcome = run(check);
    let failed: Vec<String> = outcome
        .failures()
        .map(|m| format!("{}={:e}", m.name, m.value))
        .collect();
    assert!(outcome.pass, "{check} failed: {}", failed.join(", "));
}

#[test]
fn criterion_01_one_soliton_identity() {
    assert_passes(Check::SolitonIdentity);
}

#[test]
fn criterion_02_cauchy_determinant() {
    assert_passes(Check::CauchyDeterminant);
}

#[test]
fn criterion_03_vessel_identities() {
    assert_passes(Check::VesselIdentities);
}

#[test]
fn criterion_04_evolution_conditions() {
    assert_passes(Check::EvolutionConditions);
}

#[test]
fn criterion_05_kdv_residual() {
    assert_passes(Check::KdvResidual);
}

#[test]
fn criterion_06_transfer_symmetry() {
    assert_passes(Check::TransferSymmetry);
}

#[test]
fn criterion_07_gelfand_levitan() {
    assert_passes(Check::GelfandLevitan);
}

#[test]
fn criterion_08_fixed_vector() {
    assert_passes(Check::FixedVector);
}

#[test]
fn criterion_09_moment_recursion() {
    assert_passes(Check::MomentRecursion);
}

#[test]
fn criterion_10_coefficient_system() {
    assert_passes(Check::CoefficientSystem);
}

#[test]
fn criterion_11_periodicity() {
    assert_passes(Check::Periodicity);
}

#[test]
fn criterion_12_q_from_k_sign() {
    assert_passes(Check::QFromK);
}
