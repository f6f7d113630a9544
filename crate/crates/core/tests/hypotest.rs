use qsep::hypotest::{
    fsep_bounded_with, fsep_relaxed_with, fsep_with, sfne_eval_with, stein_functional_with,
};
use qsep::states::{isotropic, max_entangled, phi2, random_separable, random_state, IsotropicParams};
use qsep::{DimProfile, Error, SolveOptions};

fn generic() -> SolveOptions {
    SolveOptions::default().generic()
}

fn p22() -> DimProfile {
    DimProfile::bipartite(2, 2).unwrap()
}

#[test]
fn separable_input_reaches_only_threshold() {
    for seed in 0..3 {
        let (rho, _) = random_separable(&p22(), 3, seed).unwrap();
        for k in [2.0, 4.0] {
            let b = fsep_with(&rho, k, &generic()).unwrap();
            assert!(b.contains(1.0 / k, 1e-6), "{b:?}");
            assert!(b.width() < 1e-6);
        }
    }
}

#[test]
fn maximally_entangled_input_reaches_one() {
    for k in [2usize, 3] {
        let rho = max_entangled(k).unwrap();
        let b = fsep_with(&rho, k as f64, &SolveOptions::default()).unwrap();
        assert!(b.contains(1.0, 1e-9) && b.width() < 1e-9);
    }
    let b = fsep_with(&phi2(), 2.0, &generic()).unwrap();
    assert!(b.contains(1.0, 1e-6) && b.width() < 1e-6, "{b:?}");
}

#[test]
fn isotropic_sweep_is_monotone_and_pinned_at_threshold() {
    let mut last = 0.0;
    for i in 0..=10 {
        let f = i as f64 / 10.0;
        let rho = isotropic(IsotropicParams { k: 2, fidelity: f }).unwrap();
        let b = fsep_with(&rho, 2.0, &generic()).unwrap();
        assert!(b.width() < 1e-6);
        assert!(b.upper >= last - 1e-7, "f = {f}: {} < {last}", b.upper);
        last = b.upper;
        if i == 5 {
            assert!(b.contains(0.5, 1e-6));
        }
        let closed = fsep_with(&rho, 2.0, &SolveOptions::default()).unwrap();
        assert!((closed.upper - b.upper).abs() < 1e-6);
    }
}

#[test]
fn duality_gap_closes_and_fidelity_bound_holds() {
    let phi = max_entangled(2).unwrap();
    for seed in 0..5 {
        let rho = random_state(&p22(), 1 + seed as usize % 4, seed).unwrap();
        for k in [2.0, 4.0] {
            let b = fsep_with(&rho, k, &generic()).unwrap();
            assert!(b.lower <= b.upper + 1e-9);
            assert!(b.width() < 1e-5, "seed {seed} K {k}: {b:?}");
            assert!(b.lower >= 1.0 / k - 1e-9);
        }
        let fid = rho.op().inner(phi.op());
        let b = fsep_with(&rho, 2.0, &generic()).unwrap();
        assert!(b.upper >= fid.max(0.5) - 1e-7);
    }
}

#[test]
fn relaxed_and_bounded_variants_order() {
    let rho = random_state(&p22(), 2, 7).unwrap();
    let base = fsep_with(&rho, 2.0, &generic()).unwrap();
    let at_zero = fsep_relaxed_with(&rho, 2.0, 0.0, &generic()).unwrap();
    assert!((at_zero.upper - base.upper).abs() < 1e-6);
    let mut last = 0.0;
    for i in 0..6 {
        let eps = 0.1 * i as f64;
        let relaxed = fsep_relaxed_with(&rho, 2.0, eps, &generic()).unwrap();
        let bounded = fsep_bounded_with(&rho, 2.0, eps, &generic()).unwrap();
        assert!(relaxed.upper <= 1.0 + 1e-9);
        assert!(relaxed.upper >= last - 1e-6);
        assert!(bounded.lower <= relaxed.upper + 1e-8);
        last = relaxed.upper;
    }
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(matches!(fsep_with(&phi2(), 0.5, &generic()), Err(Error::InvalidArgument(_))));
    assert!(matches!(
        fsep_relaxed_with(&phi2(), 2.0, -0.1, &generic()),
        Err(Error::InvalidArgument(_))
    ));
    assert!(stein_functional_with(&phi2(), 4, 0.5, &generic()).is_err());
    let big = random_state(&DimProfile::bipartite(3, 3).unwrap(), 2, 0).unwrap();
    assert!(matches!(
        stein_functional_with(&big, 3, 0.5, &generic()),
        Err(Error::DimensionTooLarge { .. })
    ));
}

#[test]
fn stein_on_phi2() {
    let b = stein_functional_with(&phi2(), 1, 1.0, &generic()).unwrap();
    assert!(b.contains(0.0, 1e-6) && b.upper < 1e-6, "{b:?}");
    let b = stein_functional_with(&phi2(), 1, 0.0, &generic()).unwrap();
    assert!(b.contains(0.5, 1e-6) && b.width() < 1e-6, "{b:?}");
}

#[test]
fn stein_vanishes_on_separable_states() {
    let (rho, _) = random_separable(&p22(), 2, 3).unwrap();
    for y in [0.0, 0.5] {
        for n in 1..=2 {
            let b = stein_functional_with(&rho, n, y, &generic()).unwrap();
            assert!(b.upper < 1e-6, "n {n} y {y}: {b:?}");
        }
    }
}

#[test]
fn stein_is_monotone_in_rate() {
    let rho = random_state(&p22(), 2, 11).unwrap();
    let mut last = f64::INFINITY;
    for i in 0..=10 {
        let y = 0.1 * i as f64;
        let b = stein_functional_with(&rho, 1, y, &generic()).unwrap();
        assert!(b.upper <= last + 1e-7 && (0.0..=1.0 + 1e-9).contains(&b.upper));
        last = b.upper;
    }
}

#[test]
fn sfne_matches_singlet_fraction() {
    let rho = random_state(&p22(), 2, 5).unwrap();
    for y in [0.3, 1.0] {
        let (b, opt) = sfne_eval_with(&rho, 1, y, &generic()).unwrap();
        let f = fsep_with(&rho, y.exp2(), &generic()).unwrap();
        assert!(b.upper <= 1.0 + 1e-9 && opt <= y + 1e-6);
        assert!((b.upper - f.upper).abs() < 1e-3, "y {y}: {} vs {}", b.upper, f.upper);
    }
    // one ebit cannot beat fidelity 1/2 with Φ(4)
    let (b, _) = sfne_eval_with(&phi2(), 1, 2.0, &SolveOptions::default()).unwrap();
    assert!(b.contains(0.5, 1e-5) && b.width() < 1e-5, "{b:?}");
}
