use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qsep::sep_geometry::{is_ppt, is_ppt_all_cuts, max_product_overlap};
use qsep::states::{
    basis_product, isotropic, max_entangled, phi2, random_separable, random_state, werner, IsotropicParams,
};
use qsep::{DimProfile, HermitianOp};

fn fidelity_with_max_entangled(rho: &qsep::MultiState, k: usize) -> f64 {
    rho.op().inner(max_entangled(k).unwrap().op())
}

/// Bisects the PPT boundary of the isotropic family on `[0, 1]`.
fn isotropic_ppt_threshold(k: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let rho = isotropic(IsotropicParams { k, fidelity: mid }).unwrap();
        if is_ppt(&rho, &[1]).unwrap().0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn isotropic_ppt_boundary_sits_at_inverse_dimension() {
    for k in [2usize, 3] {
        let t = isotropic_ppt_threshold(k);
        assert!((t - 1.0 / k as f64).abs() < 1e-6, "K = {k}: {t}");
    }
}

#[test]
fn isotropic_fidelity_is_its_parameter() {
    for k in [2usize, 3, 4] {
        for f in [0.0, 0.2, 0.7, 1.0] {
            let rho = isotropic(IsotropicParams { k, fidelity: f }).unwrap();
            assert_abs_diff_eq!(fidelity_with_max_entangled(&rho, k), f, epsilon = 1e-12);
        }
    }
    assert!(isotropic(IsotropicParams { k: 2, fidelity: 1.5 }).is_err());
    assert!(isotropic(IsotropicParams { k: 1, fidelity: 0.5 }).is_err());
}

#[test]
fn maximally_entangled_states() {
    assert_abs_diff_eq!(phi2().purity(), 1.0, epsilon = 1e-12);
    assert!(phi2().op().max_abs_diff(max_entangled(2).unwrap().op()) < 1e-15);
    let (ppt, min) = is_ppt(&max_entangled(3).unwrap(), &[1]).unwrap();
    assert!(!ppt);
    assert_abs_diff_eq!(min, -1.0 / 3.0, epsilon = 1e-12);
}

#[test]
fn werner_antisymmetric_state_is_npt() {
    let w = werner(3, 1.0).unwrap();
    assert!(!is_ppt(&w, &[1]).unwrap().0);
    let sym = werner(3, 0.0).unwrap();
    assert!(is_ppt(&sym, &[1]).unwrap().0);
    assert!(werner(3, 1.1).is_err());
}

#[test]
fn basis_products_are_pure_products() {
    let p = DimProfile::new(vec![2, 3]).unwrap();
    let s = basis_product(&p, &[1, 2]).unwrap();
    assert_abs_diff_eq!(s.op().matrix()[(5, 5)].re, 1.0, epsilon = 0.0);
    assert!(basis_product(&p, &[2, 0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_separable_states_are_ppt(seed in 0u64..100_000, terms in 1usize..8, d2 in 2usize..4) {
        let profile = DimProfile::new(vec![2, d2]).unwrap();
        let (rho, dec) = random_separable(&profile, terms, seed).unwrap();
        let (_, min) = is_ppt_all_cuts(&rho);
        prop_assert!(min >= -1e-10);
        prop_assert!(dec.operator().max_abs_diff(rho.op()) < 1e-12);
    }

    #[test]
    fn random_states_are_seed_deterministic(seed in 0u64..100_000, rank in 1usize..5) {
        let p = DimProfile::bipartite(2, 2).unwrap();
        let a = random_state(&p, rank, seed).unwrap();
        let b = random_state(&p, rank, seed).unwrap();
        prop_assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn product_overlap_never_exceeds_top_eigenvalue(seed in 0u64..10_000) {
        let p = DimProfile::bipartite(2, 3).unwrap();
        let rho = random_state(&p, 3, seed).unwrap();
        let h: HermitianOp = rho.op().scale(2.0).sub(&HermitianOp::identity(6).scale(0.3));
        let (value, v) = max_product_overlap(&h, &p, 8, seed);
        prop_assert!(value <= h.max_eigenvalue() + 1e-10);
        prop_assert!((h.expectation(&v) - value).abs() < 1e-10);
    }
}
