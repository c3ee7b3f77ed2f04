use std::cell::Cell;
use std::sync::OnceLock;

use cutinit::cstr::{instance_features, sample_disturbance, CaseConfig, CaseStudy, NominalSchedule, ScheduleInstance};
use cutinit::gbd::{select_initial_cuts, GbdConfig};
use cutinit::policy::{choose_cuts, InitPolicy, PolicyError};
use cutinit::surrogate::{ModelKind, ModelOptions, Surrogate};
use proptest::prelude::*;

fn fixture() -> &'static (CaseStudy, NominalSchedule, ScheduleInstance) {
    static F: OnceLock<(CaseStudy, NominalSchedule, ScheduleInstance)> = OnceLock::new();
    F.get_or_init(|| {
        let case = CaseStudy::new(CaseConfig::default()).unwrap();
        let nominal = case.nominal_schedule(&GbdConfig::default()).unwrap();
        let inst = (0..50)
            .find_map(|s| {
                let d = sample_disturbance(s, &case.config.disturbance, case.config.horizon);
                case.disturbed_instance(s, &nominal, &d).ok().filter(|i| case.check_feasible(i))
            })
            .unwrap();
        (case, nominal, inst)
    })
}

fn n_of(f: &[f64]) -> f64 {
    *f.last().unwrap()
}

/// Tree fit on labels that depend only on the cut count.
fn policy_with(cost: impl Fn(usize) -> f64, n_max: usize) -> InitPolicy {
    let (_, _, inst) = fixture();
    let (x, y): (Vec<_>, Vec<_>) = (2..=n_max).map(|n| (instance_features(inst, n), cost(n))).unzip();
    let model = Surrogate::fit(ModelKind::Dt, &x, &y, &ModelOptions::default()).unwrap();
    InitPolicy::new(model, n_max).unwrap()
}

#[test]
fn monotone_and_tied_scores() {
    let (_, _, inst) = fixture();
    let cands = [2, 3, 4, 5, 6];
    assert_eq!(choose_cuts(inst, &cands, |f| Ok(n_of(f))).unwrap(), 2);
    assert_eq!(choose_cuts(inst, &cands, |f| Ok(-n_of(f))).unwrap(), 6);
    assert_eq!(choose_cuts(inst, &cands, |f| Ok(if n_of(f) >= 4.0 { 1.0 } else { 2.0 })).unwrap(), 4);
    assert!(matches!(choose_cuts(inst, &[], |_| Ok(0.0)), Err(PolicyError::NoCandidates)));

    assert_eq!(policy_with(|n| n as f64, 6).optimal_cuts(inst).unwrap(), 2);
    assert_eq!(policy_with(|n| 10.0 - n as f64, 6).optimal_cuts(inst).unwrap(), 6);
    assert_eq!(policy_with(|n| (n as f64 - 4.0).abs(), 6).optimal_cuts(inst).unwrap(), 4);
}

#[test]
fn one_prediction_per_candidate() {
    let (_, _, inst) = fixture();
    let calls = Cell::new(0);
    choose_cuts(inst, &[2, 3, 4, 5, 6, 7, 8], |f| {
        calls.set(calls.get() + 1);
        Ok(n_of(f).sin())
    })
    .unwrap();
    assert_eq!(calls.get(), 7);
    let p = policy_with(|n| n as f64, 5);
    assert_eq!(p.scores(inst).unwrap().len(), 4);
    assert_eq!(p.n_max(), 5);
}

#[test]
fn dimension_mismatch_is_reported() {
    let (_, _, inst) = fixture();
    let x = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0]];
    let model = Surrogate::fit(ModelKind::Dt, &x, &[1.0, 2.0], &ModelOptions::default()).unwrap();
    let p = InitPolicy::new(model, 6).unwrap();
    assert!(matches!(
        p.optimal_cuts(inst),
        Err(PolicyError::DimensionMismatch { expected: 3, got: 11 })
    ));
    let model = Surrogate::fit(ModelKind::Dt, &x, &[1.0, 2.0], &ModelOptions::default()).unwrap();
    assert!(matches!(InitPolicy::new(model, 1), Err(PolicyError::NoCandidates)));
}

#[test]
fn policy_file_round_trip() {
    let (_, _, inst) = fixture();
    let p = policy_with(|n| (n as f64 - 3.0).powi(2), 6);
    let q = InitPolicy::from_json(&p.to_json()).unwrap();
    assert_eq!(p, q);
    assert_eq!(q.optimal_cuts(inst).unwrap(), 3);
    let stale = p.to_json().replace("\"schema\":1", "\"schema\":9");
    assert!(matches!(InitPolicy::from_json(&stale), Err(PolicyError::Format(_))));
}

#[test]
fn learned_solve_matches_uninitialized_objective() {
    let (case, _, inst) = fixture();
    let cfg = GbdConfig::default();
    let lib = case.cut_library(6).unwrap();
    let p = policy_with(|n| (n as f64 - 5.0).abs(), 6);
    let s = p.solve_with_learned_init(case, &lib, inst, &cfg).unwrap();
    assert_eq!(s.n_cuts, 5);
    assert!(s.overhead_seconds >= 0.0);
    let base = case.solve(inst, &select_initial_cuts(&lib, 0).unwrap(), &cfg).unwrap();
    assert!(s.result.converged);
    assert!((s.result.upper - base.upper).abs() <= 2.0 * cfg.tol / 100.0 * base.upper.abs());
}

proptest! {
    #[test]
    fn argmin_survives_positive_affine_maps(
        scores in prop::collection::vec(-1e3f64..1e3, 5),
        a in 1e-3f64..1e3,
        b in -1e3f64..1e3,
    ) {
        let (_, _, inst) = fixture();
        let cands = [2, 3, 4, 5, 6];
        let raw = |f: &[f64]| scores[n_of(f) as usize - 2];
        let n1 = choose_cuts(inst, &cands, |f| Ok(raw(f))).unwrap();
        let n2 = choose_cuts(inst, &cands, |f| Ok(a * raw(f) + b)).unwrap();
        prop_assert_eq!(n1, n2);
    }
}
