//! Acceptance suite: one test per criterion over a single shared run.
//! Each test writes its verdict line to stderr, uncaptured.

use std::io::Write;
use std::sync::OnceLock;

use overdet_cli::acceptance::{self, AcceptanceReport};
use overdet_cli::RunConfig;

fn report() -> &'static AcceptanceReport {
    static R: OnceLock<AcceptanceReport> = OnceLock::new();
    R.get_or_init(|| {
        let cfg = RunConfig { seed: Some(20261015), ..RunConfig::default() };
        let r = acceptance::run(&cfg).expect("acceptance run");
        let mut err = std::io::stderr().lock();
        for line in r.lines() {
            let _ = writeln!(err, "acceptance: {line}");
        }
        r
    })
}

fn criterion(id: u8) {
    let r = report();
    let c = r.criteria.iter().find(|c| c.id == id).expect("criterion present");
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id:>2} {}: {}",
        c.name,
        if c.passed { "PASS" } else { "FAIL" }
    );
    assert!(c.passed, "criterion {id} ({}) failed: {:#?}", c.name, c.metrics);
}

#[test]
fn all_twelve_criteria_reported() {
    let r = report();
    let ids: Vec<u8> = r.criteria.iter().map(|c| c.id).collect();
    assert_eq!(ids, (1..=12).collect::<Vec<_>>());
}

#[test]
fn c01_profile_fidelity() {
    criterion(1);
}

#[test]
fn c02_projection_constants() {
    criterion(2);
}

#[test]
fn c03_corrector_decay() {
    criterion(3);
}

#[test]
fn c04_dtn_symbol() {
    criterion(4);
}

#[test]
fn c05_geometry() {
    criterion(5);
}

#[test]
fn c06_jacobi_kernels() {
    criterion(6);
}

#[test]
fn c07_bdg_angular_profile() {
    criterion(7);
}

#[test]
fn c08_lemahc_decay_fits() {
    criterion(8);
}

#[test]
fn c09_residual_orders() {
    criterion(9);
}

#[test]
fn c10_boundary_exactness() {
    criterion(10);
}

#[test]
fn c11_degeneracy() {
    criterion(11);
}

#[test]
fn c12_determinism() {
    criterion(12);
}
