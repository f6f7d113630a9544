use qsep::measures::global_robustness;
use qsep::protocols::{
    build_distill_map, build_formation_map, check_er_monotonicity, check_lr_monotonicity, compose,
    find_mixing_state, reversibility_demo, sepp_composition_bound, twirl, verify_cptp, verify_sepp,
    Channel, MeasurePrepareMap, ReversibilityOptions, SeppMethod, Verdict,
};
use qsep::sep_geometry::is_ppt;
use qsep::states::{
    basis_product, isotropic, isotropic_boundary, max_entangled, maximally_mixed, phi2, phi_minus,
    random_separable, random_state, IsotropicParams,
};
use qsep::tensor_core::{c64, trace_norm, CVec};
use qsep::{DimProfile, Error, HermitianOp, MultiState, Parties, SepWitness, SeparableDecomposition, SolveOptions};

fn p22() -> DimProfile {
    DimProfile::bipartite(2, 2).unwrap()
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn fidelity(rho: &MultiState, k: usize) -> f64 {
    rho.op().inner(max_entangled(k).unwrap().op())
}

fn ket(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = c64(1.0, 0.0);
    v
}

/// `(|00⟩⟨00| + |11⟩⟨11|)/2` as an explicit decomposition.
fn classical_mixture() -> SepWitness {
    SepWitness::Decomposition(
        SeparableDecomposition::new(
            p22(),
            Parties::singletons(2),
            vec![0.5, 0.5],
            vec![vec![ket(2, 0), ket(2, 0)], vec![ket(2, 1), ket(2, 1)]],
        )
        .unwrap(),
    )
}

fn phi2_formation() -> MeasurePrepareMap {
    build_formation_map(&phi2(), 2, &phi_minus(), &classical_mixture()).unwrap()
}

fn phi2_distill() -> MeasurePrepareMap {
    build_distill_map(phi2().op(), &p22(), 2).unwrap()
}

#[test]
fn distill_map_outputs() {
    let map = phi2_distill();
    let out = map.apply(&phi2()).unwrap();
    assert!(out.op().max_abs_diff(phi2().op()) < 1e-12);
    for seed in 0..20 {
        let (sep, _) = random_separable(&p22(), 3, seed).unwrap();
        let out = map.apply(&sep).unwrap();
        assert!(fidelity(&out, 2) <= 0.5 + 1e-12);
        assert!(is_ppt(&out, &[1]).unwrap().0);
    }

    let flat = build_distill_map(&HermitianOp::identity(4).scale(0.5), &p22(), 2).unwrap();
    for seed in 0..5 {
        let rho = random_state(&p22(), 2, seed).unwrap();
        assert!((fidelity(&flat.apply(&rho).unwrap(), 2) - 0.5).abs() < 1e-12);
    }
}

#[test]
fn distill_map_rejects_bad_povm() {
    let twice = HermitianOp::identity(4).scale(2.0);
    assert!(matches!(build_distill_map(&twice, &p22(), 2), Err(Error::InvalidArgument(_))));
    let neg = HermitianOp::identity(4).scale(-0.1);
    assert!(build_distill_map(&neg, &p22(), 2).is_err());
}

#[test]
fn formation_map_outputs() {
    let map = phi2_formation();
    let out = map.apply(&phi2()).unwrap();
    assert!(out.op().max_abs_diff(phi2().op()) < 1e-12);

    let mixed = map.apply(&isotropic_boundary(2).unwrap()).unwrap();
    let expected = phi2().op().add(phi_minus().op()).scale(0.5);
    assert!(mixed.op().max_abs_diff(&expected) < 1e-12);
    let diag = HermitianOp::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
    assert!(mixed.op().max_abs_diff(&diag) < 1e-12);
    assert!(is_ppt(&mixed, &[1]).unwrap().0);
}

#[test]
fn formation_map_requires_matching_certificate() {
    let wrong = SepWitness::Decomposition(
        SeparableDecomposition::new(p22(), Parties::singletons(2), vec![1.0], vec![vec![ket(2, 0), ket(2, 0)]])
            .unwrap(),
    );
    assert!(matches!(
        build_formation_map(&phi2(), 2, &phi_minus(), &wrong),
        Err(Error::Certificate(_))
    ));
}

#[test]
fn mixing_state_for_phi2() {
    let mix = find_mixing_state(&phi2(), 2, &opts()).unwrap();
    // 2σ − φ₂ = π ⪰ 0 for the separable σ behind the mixture
    let sigma = mix.mixture.operator().unwrap();
    let diff = sigma.scale(2.0).sub(phi2().op());
    assert!(diff.min_eigenvalue() > -1e-10);
    assert!(diff.max_abs_diff(mix.pi.op()) < 1e-10);
    let map = build_formation_map(&phi2(), 2, &mix.pi, &mix.mixture).unwrap();
    let cert = verify_sepp(&map, &opts()).unwrap();
    assert!(cert.epsilon <= 1.0 + 1e-6);
}

#[test]
fn mixing_state_for_separable_target() {
    let (rho, _) = random_separable(&p22(), 2, 4).unwrap();
    let mix = find_mixing_state(&rho, 2, &opts()).unwrap();
    assert!(trace_norm(&mix.pi.op().sub(rho.op())) < 1e-5);
    build_formation_map(&rho, 2, &mix.pi, &mix.mixture).unwrap();
}

#[test]
fn mixing_state_for_phi3() {
    let rho = max_entangled(3).unwrap();
    let mix = find_mixing_state(&rho, 3, &opts()).unwrap();
    assert!(matches!(mix.mixture, SepWitness::Isotropic { .. }));
    // the isotropic family is closed under the construction
    let f = fidelity(&mix.pi, 3).max(0.0);
    let iso = isotropic(IsotropicParams { k: 3, fidelity: f }).unwrap();
    assert!(iso.op().max_abs_diff(mix.pi.op()) < 1e-12);
    assert!(f.abs() < 1e-12);
    let map = build_formation_map(&rho, 3, &mix.pi, &mix.mixture).unwrap();
    assert!(verify_sepp(&map, &opts()).unwrap().epsilon <= 0.5 + 1e-6);
}

#[test]
fn mixing_state_rejects_small_k() {
    let rho = max_entangled(3).unwrap();
    assert!(matches!(find_mixing_state(&rho, 2, &opts()), Err(Error::KTooSmall { k: 2, .. })));
}

#[test]
fn twirl_fixed_points_and_fidelity() {
    for k in [2usize, 3] {
        let phi = max_entangled(k).unwrap();
        assert!(twirl(&phi, k).unwrap().op().max_abs_diff(phi.op()) < 1e-12);
        let mixed = maximally_mixed(&DimProfile::bipartite(k, k).unwrap());
        assert!(twirl(&mixed, k).unwrap().op().max_abs_diff(mixed.op()) < 1e-12);
    }
    for seed in 0..100 {
        let rho = random_state(&p22(), 1 + (seed as usize % 4), seed).unwrap();
        let t = twirl(&rho, 2).unwrap();
        assert!((fidelity(&t, 2) - fidelity(&rho, 2)).abs() < 1e-12);
    }
    let rho = random_state(&DimProfile::bipartite(2, 3).unwrap(), 2, 0).unwrap();
    assert!(twirl(&rho, 2).is_err());
}

#[test]
fn choi_of_identity() {
    let rho = phi2();
    let ch = Channel::identity_on(&rho);
    let choi = ch.choi_matrix();
    let expected = max_entangled(4).unwrap().op().scale(4.0);
    assert!(choi.max_abs_diff(&expected) < 1e-12);
    assert!(verify_cptp(&ch).passed);
}

#[test]
fn measure_prepare_maps_are_cptp() {
    assert!(verify_cptp(&phi2_distill().into()).passed);
    assert!(verify_cptp(&phi2_formation().into()).passed);
    let mix = find_mixing_state(&max_entangled(3).unwrap(), 3, &opts()).unwrap();
    let f3 = build_formation_map(&max_entangled(3).unwrap(), 3, &mix.pi, &mix.mixture).unwrap();
    assert!(verify_cptp(&f3.into()).passed);
}

#[test]
fn scaled_povm_fails_cptp() {
    let map = MeasurePrepareMap::unchecked(
        phi2().op().scale(2.0),
        phi2(),
        phi_minus(),
        p22(),
        Parties::singletons(2),
    )
    .unwrap();
    let report = verify_cptp(&map.into());
    assert!(!report.passed);
    assert!(report.min_choi_eigenvalue < -0.5);
}

#[test]
fn sepp_of_structured_maps() {
    let d = verify_sepp(&phi2_distill(), &opts()).unwrap();
    assert_eq!(d.epsilon, 0.0);
    assert_eq!(d.method, SeppMethod::ClosedFormIsotropic);

    let f = verify_sepp(&phi2_formation(), &opts()).unwrap();
    assert!(f.epsilon <= 1.0 + 1e-9);
    // π = Φ⁻ has robustness exactly 1
    assert!((f.epsilon - 1.0).abs() < 1e-6);
    let out = phi2_formation().apply(&f.witness_input).unwrap();
    assert!(global_robustness(&out).unwrap().upper <= f.epsilon + 1e-7);
}

#[test]
fn sepp_of_general_map_brackets_sampled_value() {
    // A = |00⟩⟨00|: product inputs reach the full range [0, 1]
    let a = basis_product(&p22(), &[0, 0]).unwrap().op().clone();
    let map = MeasurePrepareMap::new(a, phi2(), maximally_mixed(&p22()), p22(), Parties::singletons(2)).unwrap();
    let c = verify_sepp(&map, &opts()).unwrap();
    assert!((c.epsilon - 1.0).abs() < 1e-6, "{c:?}");
    assert!(c.epsilon_lower <= c.epsilon + 1e-7);
    assert!((c.epsilon_lower - 1.0).abs() < 1e-6);
}

#[test]
fn composition_bound_values() {
    assert_eq!(sepp_composition_bound(0.0, 0.0), 0.0);
    assert_eq!(sepp_composition_bound(1.0, 1.0), 3.0);
}

#[test]
fn formation_after_distillation_within_bound() {
    let d = phi2_distill();
    let f = phi2_formation();
    let composed = compose(&d, &f).unwrap();
    let out = composed.apply(&phi2()).unwrap();
    assert!(out.op().max_abs_diff(phi2().op()) < 1e-10);
    let e1 = verify_sepp(&d, &opts()).unwrap().epsilon;
    let e2 = verify_sepp(&f, &opts()).unwrap().epsilon;
    let ec = verify_sepp(&composed, &opts()).unwrap().epsilon;
    assert!(ec <= sepp_composition_bound(e1, e2) + 1e-6, "{ec} vs {e1}, {e2}");

    let bad = compose(&f, &build_distill_map(&HermitianOp::identity(9).scale(0.5), &DimProfile::bipartite(3, 3).unwrap(), 3).unwrap());
    assert!(bad.is_err());
}

#[test]
fn identity_monotonicity_has_zero_allowance() {
    let rho = random_state(&p22(), 2, 11).unwrap();
    let ch = Channel::identity_on(&rho);
    let lr = check_lr_monotonicity(&ch, 0.0, &rho, &opts()).unwrap();
    assert_eq!(lr.verdict, Verdict::Holds);
    assert!(lr.margin.abs() < 1e-5);
    let er = check_er_monotonicity(&ch, 0.0, &rho, &opts()).unwrap();
    assert_eq!(er.verdict, Verdict::Holds);
}

#[test]
fn distill_map_does_not_raise_log_robustness() {
    let ch: Channel = phi2_distill().into();
    let r = check_lr_monotonicity(&ch, 0.0, &phi2(), &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(r.output.upper <= r.input.lower + 1e-6);
}

#[test]
fn formation_map_on_boundary_input() {
    let ch: Channel = phi2_formation().into();
    let input = isotropic_boundary(2).unwrap();
    let r = check_lr_monotonicity(&ch, 1.0, &input, &opts()).unwrap();
    assert!(r.allowance + r.input.lower >= 1.0 - 1e-9);
    assert_eq!(r.verdict, Verdict::Holds);
    let er = check_er_monotonicity(&ch, 1.0, &input, &opts()).unwrap();
    assert_eq!(er.verdict, Verdict::Holds);
}

#[test]
fn reversibility_phi2_single_copy() {
    let rep = reversibility_demo(&phi2(), 1, &ReversibilityOptions::default()).unwrap();
    assert!((rep.distill_rate.lower - 1.0).abs() < 1e-12);
    assert!((rep.distill_rate.upper - 1.0).abs() < 1e-12);
    assert_eq!(rep.form_k, 2);
    assert!((rep.form_rate.upper - 1.0).abs() < 1e-12);
    assert!(rep.form_epsilon <= 1.0 + 1e-6);
    assert_eq!(rep.distill_epsilon, 0.0);
    assert!(rep.form_error < 1e-10);
    assert!(rep.er_per_copy.contains(1.0, 1e-6));
}

#[test]
fn reversibility_separable_state() {
    let (rho, _) = random_separable(&p22(), 3, 2).unwrap();
    let rep = reversibility_demo(&rho, 1, &ReversibilityOptions::default()).unwrap();
    for row in &rep.distill_table {
        assert!(row.fidelity.contains(1.0 / row.k as f64, 1e-6), "{row:?}");
    }
    assert_eq!(rep.form_k, 1);
    assert_eq!(rep.form_rate.upper, 0.0);
    assert!(rep.formation_map.is_none());
}

#[test]
fn reversibility_gap_does_not_grow() {
    let rho = isotropic(IsotropicParams { k: 2, fidelity: 0.9 }).unwrap();
    let one = reversibility_demo(&rho, 1, &ReversibilityOptions::default()).unwrap();
    let two = reversibility_demo(&rho, 2, &ReversibilityOptions::default()).unwrap();
    assert!(two.gap.upper <= one.gap.upper + 0.05, "{:?} vs {:?}", two.gap, one.gap);
    assert!(reversibility_demo(&rho, 3, &ReversibilityOptions::default()).is_err());
}
