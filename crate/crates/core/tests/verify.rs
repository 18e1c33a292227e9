use std::path::PathBuf;

use bose_transit::bounds::BoundParams;
use bose_transit::fock::Sector;
use bose_transit::lindblad::DissipatorSpec;
use bose_transit::verify::{
    audit_result4, audit_with, crosscheck_b_function, tightness_report_mott, transported_fraction_closed,
    transported_fraction_result1, AuditKind, BasisSpec, Scenario,
};
use bose_transit::Error;

fn scenario(name: &str) -> Scenario {
    Scenario::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))).unwrap()
}

#[test]
fn fractions_follow_definitions() {
    let s = scenario("result1_chain6");
    let sim = s.simulate().unwrap();
    let traj = &sim.trajectory;
    let (x, y) = (&s.regions.x, &s.regions.y);
    let gamma = 0.05;
    for tau in [0.0, 1.0, 2.5] {
        let k = traj.sample_index(tau).unwrap();
        let now = traj.occupations(k);
        let start = traj.occupations(0);
        let x_y: f64 = [4, 5].iter().map(|&i| now[i]).sum();
        let x_c0: f64 = [2, 3, 4, 5].iter().map(|&i| start[i]).sum();
        let f1 = transported_fraction_result1(traj, x, y, tau).unwrap();
        assert!((f1 - (x_y - (-gamma * tau).exp() * x_c0)).abs() < 1e-15);
        let f0 = transported_fraction_closed(traj, x, y, tau).unwrap();
        assert!((f0 - (x_y - x_c0)).abs() < 1e-15);
    }
    // the source sites start full, so nothing has been transported at t = 0
    assert_eq!(transported_fraction_result1(traj, x, y, 0.0).unwrap(), 0.0);
}

#[test]
fn mott_chain_matches_closed_audit() {
    let s = scenario("result2_mott6");
    let sim = s.simulate().unwrap();
    let r2 = audit_with(AuditKind::Result2, &s, &sim).unwrap();
    let closed = audit_with(AuditKind::Closed, &s, &sim).unwrap();
    assert!(r2.passed() && closed.passed());
    for rec in closed.records.iter().filter(|r| r.name != "number_law") {
        let other = r2.record(&rec.name, rec.time).unwrap();
        assert!((rec.lhs - other.lhs).abs() < 1e-8 && (rec.rhs - other.rhs).abs() < 1e-8, "{}", rec.name);
    }
    let closed_drift = closed.record("number_law", 4.0).unwrap().lhs;
    assert!(closed_drift < 1e-8 && r2.record("number_monotone", 4.0).unwrap().pass);
    assert_eq!(r2.tau_emp, closed.tau_emp);
    // no doubly occupied states, so the loss rates vanish identically
    let loss = r2.records.iter().filter(|r| r.name == "loss_nonneg");
    assert!(loss.into_iter().all(|r| r.lhs.abs() < 1e-15));
}

#[test]
fn two_body_loss_on_soft_core_chain() {
    let s = scenario("result2_chain3");
    let sim = s.simulate().unwrap();
    let traj = &sim.trajectory;
    for k in 1..traj.len() {
        assert!(traj.total(k) <= traj.total(k - 1) + 1e-12);
    }
    assert!(traj.total(traj.len() - 1) < traj.total(0) - 1e-3);
    let r2 = audit_with(AuditKind::Result2, &s, &sim).unwrap();
    assert!(r2.passed(), "{:?}", r2.failures().collect::<Vec<_>>());
}

#[test]
fn audits_reject_wrong_dynamics() {
    let s = scenario("result1_chain6");
    let sim = s.simulate().unwrap();
    assert!(audit_with(AuditKind::Closed, &s, &sim).is_err());
    assert!(audit_with(AuditKind::Result2, &s, &sim).is_err());
    assert!(audit_with(AuditKind::Result3, &s, &sim).is_err());
}

#[test]
fn quadrature_tolerance_covers_refinement() {
    let coarse = scenario("result1_chain6");
    let mut fine = coarse.clone();
    fine.run.dt /= 2.0;
    let rc = audit_with(AuditKind::Result1, &coarse, &coarse.simulate().unwrap()).unwrap();
    let rf = audit_with(AuditKind::Result1, &fine, &fine.simulate().unwrap()).unwrap();
    for &t in &coarse.run.checkpoints {
        let a = rc.record("kr_upper", t).unwrap();
        let b = rf.record("kr_upper", t).unwrap();
        assert!((a.rhs - b.rhs).abs() <= a.tolerance, "t = {t}: {} vs {}", a.rhs, b.rhs);
    }
}

#[test]
fn tightness_ratios_respect_bound() {
    let s = scenario("result2_mott6");
    let t = tightness_report_mott(&s).unwrap();
    assert_eq!(t.points.len(), 4);
    assert!(t.points.windows(2).all(|w| w[0].distance <= w[1].distance));
    let reached: Vec<f64> = t.points.iter().filter_map(|p| p.ratio).collect();
    assert!(!reached.is_empty());
    assert!(reached.iter().all(|&r| r >= 1.0), "{reached:?}");
    assert!(tightness_report_mott(&scenario("result1_chain6")).is_err());
}

#[test]
fn result4_with_threshold_shift() {
    let s = scenario("result4_chain3");
    let base = audit_result4(&s, 0, 1).unwrap();
    let shifted = audit_result4(&s, 1, 1).unwrap();
    assert!(base.passed() && shifted.passed());
    // a higher threshold can only lower the event probability
    let (a, b) = (base.record("headline", 0.2).unwrap(), shifted.record("headline", 0.2).unwrap());
    assert!(b.lhs <= a.lhs + 1e-15);
}

#[test]
fn crosscheck_dilute_limit() {
    let mut p = BoundParams::new(1.0, 2.0, 3.0, 1, 0.5);
    p.gamma1 = 1.0;
    p.gamma2 = 0.5;
    p.n_bosons = 1_000_000;
    let c = crosscheck_b_function(&p).unwrap();
    assert!(c.agrees, "{c:?}");
    assert!((c.grid_max - 2.0 / std::f64::consts::E).abs() < 1e-3);
    p.gamma2 = 1.0;
    assert!(crosscheck_b_function(&p).is_err());
}

#[test]
fn truncation_leakage_aborts() {
    let mut s = scenario("result1_chain6");
    s.basis = BasisSpec {
        n_max: Some(1),
        hard_core: false,
        sector: Sector::AtMost(2),
    };
    s.dissipator = DissipatorSpec::OneBodyLoss { gamma: 0.05 };
    assert!(matches!(s.simulate(), Err(Error::UntrustedTruncation { .. })));
}
