//! Acceptance criteria, one test per criterion. Each test prints a single
//! `criterion <id> <name> PASS|FAIL <stats>` line and asserts the verdict.

use kron_trace::suite::{run_criterion, SuiteConfig};

fn check(id: u32) {
    let res = run_criterion(id, &SuiteConfig::default());
    println!("{}", res.line());
    assert!(res.pass, "{}", res.line());
}

#[test]
fn criterion_01_star_identity() {
    check(1);
}

#[test]
fn criterion_02_conservativeness() {
    check(2);
}

#[test]
fn criterion_03_schur_tower() {
    check(3);
}

#[test]
fn criterion_04_energy_minimality() {
    check(4);
}

#[test]
fn criterion_05_resistance_exponent() {
    check(5);
}

#[test]
fn criterion_06_theta_exponent() {
    check(6);
}

#[test]
fn criterion_07_jump_exponent() {
    check(7);
}

#[test]
fn criterion_08_jump_comparability() {
    check(8);
}

#[test]
fn criterion_09_restriction_extension() {
    check(9);
}

#[test]
fn criterion_10_besov_comparability() {
    check(10);
}

#[test]
fn criterion_11_exit_time() {
    check(11);
}

#[test]
fn criterion_12_heat_kernel() {
    check(12);
}

#[test]
fn criterion_13_doubling_capacity_density() {
    check(13);
}

#[test]
fn criterion_14_killing() {
    check(14);
}

#[test]
fn criterion_15_harmonic_vs_uniform() {
    check(15);
}
