use qsep::measures::{
    log_robustness_with, regularized_estimate_with, smoothed_log_robustness_with, MeasureKind,
};
use qsep::states::{phi2, random_separable, random_state};
use qsep::{DimProfile, Error, SolveOptions};

fn opts() -> SolveOptions {
    SolveOptions::new(1e-6, 0)
}

fn p22() -> DimProfile {
    DimProfile::bipartite(2, 2).unwrap()
}

#[test]
fn relative_entropy_of_phi2_is_one_per_copy() {
    let trace = regularized_estimate_with(MeasureKind::RelEntropy, &phi2(), 2, &opts()).unwrap();
    assert_eq!(trace.entries.len(), 2);
    for e in &trace.entries {
        assert!(e.per_copy.contains(1.0, 1e-5) && e.per_copy.width() < 1e-5, "n = {}: {:?}", e.n, e.per_copy);
        assert!((e.total.upper - e.n as f64).abs() < 1e-5 * e.n as f64);
    }
}

#[test]
fn smoothed_log_robustness_tracks_relative_entropy() {
    let rel = regularized_estimate_with(MeasureKind::RelEntropy, &phi2(), 2, &opts()).unwrap();
    let smooth = regularized_estimate_with(MeasureKind::SmoothedLogRobustness { eps: 0.01 }, &phi2(), 2, &opts()).unwrap();
    for (s, r) in smooth.per_copy().zip(rel.per_copy()) {
        assert!(s.upper >= r.lower - 0.1, "{} < {} - 0.1", s.upper, r.lower);
    }
}

#[test]
fn separable_state_regularizes_to_zero() {
    let (sigma, _) = random_separable(&p22(), 3, 11).unwrap();
    let trace = regularized_estimate_with(MeasureKind::RelEntropy, &sigma, 2, &opts()).unwrap();
    for b in trace.per_copy() {
        assert!(b.lower.abs() < 1e-5 && b.upper.abs() < 1e-5, "{b:?}");
    }
}

#[test]
fn oversized_powers_are_rejected_before_solving() {
    let rho = random_state(&DimProfile::bipartite(3, 3).unwrap(), 2, 1).unwrap();
    match regularized_estimate_with(MeasureKind::GlobalRobustness, &rho, 3, &opts()) {
        Err(Error::DimensionTooLarge { .. }) => {}
        other => panic!("expected a dimension rejection, got {other:?}"),
    }
    assert!(regularized_estimate_with(MeasureKind::GlobalRobustness, &rho, 0, &opts()).is_err());
}

#[test]
fn smoothing_is_monotone_and_bottoms_out() {
    let rho = phi2();
    let plain = log_robustness_with(&rho, &opts()).unwrap();
    let mut last = f64::INFINITY;
    for (i, eps) in [0.0, 0.05, 0.1, 0.3, 0.6, 1.0, 2.0].into_iter().enumerate() {
        let b = smoothed_log_robustness_with(&rho, eps, &opts()).unwrap();
        assert!(b.lower >= -1e-9, "eps {eps}: {b:?}");
        assert!(b.upper <= last + 1e-8, "eps {eps}: {} after {last}", b.upper);
        last = b.upper;
        if i == 0 {
            assert!((b.upper - plain.upper).abs() < 1e-6);
        }
        if eps == 0.1 {
            assert!(b.lower > 0.0 && b.upper < 1.0);
        }
        if eps == 2.0 {
            assert!(b.upper.abs() < 1e-6);
        }
    }
}

#[test]
fn npt_states_have_positive_relative_entropy_lower_bound() {
    let mut checked = 0;
    for seed in 0..12u64 {
        let rho = random_state(&p22(), 1 + seed as usize % 3, 300 + seed).unwrap();
        if qsep::sep_geometry::is_ppt(&rho, &[1]).unwrap().0 {
            continue;
        }
        let b = MeasureKind::RelEntropy.evaluate(&rho, &opts()).unwrap();
        assert!(b.lower > 0.0, "seed {seed}: {b:?}");
        let lrg = MeasureKind::LogRobustness.evaluate(&rho, &opts()).unwrap();
        assert!(lrg.lower >= 0.0);
        checked += 1;
    }
    assert!(checked >= 3);
}
