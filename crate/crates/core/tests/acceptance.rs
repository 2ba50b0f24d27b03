//! Acceptance criteria 1–9. Each test prints one pass/fail line.

use double_phase::suite::run_criterion;
use double_phase::tolerances::*;

fn check(id: u8) {
    let out = run_criterion(id);
    println!("{}", out.line());
    assert!(out.passed, "{}", out.line());
}

#[test]
fn tolerances_are_pinned() {
    assert_eq!(MODULAR_CLAUSE_SLACK, 1e-9);
    assert_eq!(UNIT_MODULAR_TOL, 1e-10);
    assert_eq!(EIGEN_ORACLE_REL_TOL, 1e-6);
    assert_eq!(RAYLEIGH_SLACK, 1e-8);
    assert_eq!(MONOTONICITY_SLACK, 1e-12);
    assert_eq!(SIGN_TOL, 1e-8);
    assert_eq!(RESIDUAL_TOL, 1e-6);
    assert_eq!(PICARD_STEP_TOL, 1e-8);
    assert_eq!(FD_REL_TOL, 1e-5);
}

#[test]
fn criterion_1_modular_norm() {
    check(1);
}

#[test]
fn criterion_2_eigen_oracle() {
    check(2);
}

#[test]
fn criterion_3_rayleigh() {
    check(3);
}

#[test]
fn criterion_4_operator() {
    check(4);
}

#[test]
fn criterion_5_steklov_type() {
    check(5);
}

#[test]
fn criterion_6_robin_type() {
    check(6);
}

#[test]
fn criterion_7_convection() {
    check(7);
}

#[test]
fn criterion_8_gradients() {
    check(8);
}

#[test]
fn criterion_9_coercivity() {
    check(9);
}
