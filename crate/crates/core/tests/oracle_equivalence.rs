//! Completion and reconciliation agree with brute-force enumeration on
//! randomized small inputs.

mod common;

use common::checks;

const CASES: usize = 250;

#[test]
fn completion_matches_bruteforce() {
    let t = checks::completion_equivalence(0x00a5_1e55, CASES).unwrap_or_else(|e| panic!("{e}"));
    assert!(t.positive > CASES / 4, "only {} satisfiable cases", t.positive);
}

#[test]
fn reconciliation_cost_matches_bruteforce() {
    let t = checks::reconciliation_equivalence(0x0ec0_2c11, CASES).unwrap_or_else(|e| panic!("{e}"));
    assert!(t.positive > CASES / 4, "only {} repairable cases", t.positive);
}
