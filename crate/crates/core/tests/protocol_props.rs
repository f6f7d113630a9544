use proptest::prelude::*;
use qsep::protocols::{build_distill_map, twirl, verify_cptp, Channel, MeasurePrepareMap};
use qsep::sep_geometry::max_product_overlap;
use qsep::states::{max_entangled, random_separable, random_state};
use qsep::{DimProfile, HermitianOp, MultiState, Parties};

fn p22() -> DimProfile {
    DimProfile::bipartite(2, 2).unwrap()
}

/// `0 ⪯ A ⪯ I` from a random state, scaled so its top eigenvalue is `top`.
fn random_effect(seed: u64, rank: usize, top: f64) -> HermitianOp {
    let rho = random_state(&p22(), rank, seed).unwrap();
    rho.op().scale(top / rho.op().max_eigenvalue())
}

fn fidelity(rho: &MultiState, k: usize) -> f64 {
    rho.op().inner(max_entangled(k).unwrap().op())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn measure_prepare_maps_with_valid_effects_are_cptp(
        seed in 0u64..50_000, rank in 1usize..5, top in 0.0f64..=1.0, s_hit in 0u64..1000, s_miss in 0u64..1000,
    ) {
        let a = random_effect(seed, rank, top);
        let hit = random_state(&DimProfile::bipartite(2, 3).unwrap(), 2, s_hit).unwrap();
        let miss = random_state(&DimProfile::bipartite(2, 3).unwrap(), 3, s_miss + 1000).unwrap();
        let map = MeasurePrepareMap::new(a, hit, miss, p22(), Parties::singletons(2)).unwrap();
        let report = verify_cptp(&Channel::from(map));
        prop_assert!(report.passed, "{report:?}");
        prop_assert!(report.min_choi_eigenvalue >= -1e-9);
        prop_assert!(report.trace_preservation_error < 1e-9);
    }

    #[test]
    fn effects_above_identity_are_rejected(seed in 0u64..50_000, over in 1.01f64..3.0) {
        let a = random_effect(seed, 2, over);
        let hit = max_entangled(2).unwrap();
        prop_assert!(MeasurePrepareMap::new(a, hit.clone(), hit, p22(), Parties::singletons(2)).is_err());
    }

    #[test]
    fn twirl_keeps_fidelity_and_is_idempotent(seed in 0u64..50_000, rank in 1usize..5) {
        let rho = random_state(&p22(), rank, seed).unwrap();
        let t = twirl(&rho, 2).unwrap();
        prop_assert!((fidelity(&t, 2) - fidelity(&rho, 2)).abs() < 1e-12);
        let tt = twirl(&t, 2).unwrap();
        prop_assert!(tt.op().max_abs_diff(t.op()) < 1e-12);
    }

    #[test]
    fn distillation_of_separable_inputs_stays_below_threshold(seed in 0u64..50_000, terms in 1usize..6, k in 2usize..4) {
        // A = Φ(2) has product overlap exactly 1/2, so the certified bound is
        // 1/2 ≤ 1/K only at K = 2; at larger K the outputs may exceed 1/K
        let a = max_entangled(2).unwrap().op().clone();
        let (overlap, _) = max_product_overlap(&a, &p22(), 8, seed);
        let map = build_distill_map(&a, &p22(), k).unwrap();
        let (sigma, _) = random_separable(&p22(), terms, seed).unwrap();
        let out = map.apply(&sigma).unwrap();
        let f = fidelity(&out, k);
        prop_assert!(f <= overlap + 1e-9);
        if overlap <= 1.0 / k as f64 + 1e-12 {
            prop_assert!(f <= 1.0 / k as f64 + 1e-9);
        }
        prop_assert!(verify_cptp(&Channel::from(map)).passed);
    }
}
