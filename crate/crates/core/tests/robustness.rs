use std::time::Instant;

use qsep::measures::{global_robustness_with, mixing_robustness_with, smoothed_log_robustness_with};
use qsep::states::{isotropic, phi2, random_state, IsotropicParams};
use qsep::{DimProfile, SolveOptions};

#[test]
fn phi2_robustness_is_one_generic() {
    let b = global_robustness_with(&phi2(), &SolveOptions::default().generic()).unwrap();
    eprintln!("{:?} {:?}", (b.lower, b.upper), b.runtime);
    assert!((b.lower - 1.0).abs() < 1e-5 && (b.upper - 1.0).abs() < 1e-5);
}

#[test]
fn phi2_squared_robustness_is_three_generic() {
    let rho = phi2().tensor(&phi2()).unwrap();
    let t = Instant::now();
    let b = global_robustness_with(&rho, &SolveOptions::default().generic()).unwrap();
    eprintln!("{:?} {:?} rounds {}", (b.lower, b.upper), t.elapsed(), b.iterations);
    assert!((b.lower - 3.0).abs() < 1e-5 && (b.upper - 3.0).abs() < 1e-5);
}

#[test]
fn generic_matches_isotropic_closed_form() {
    let rho = isotropic(IsotropicParams { k: 3, fidelity: 0.7 }).unwrap();
    let sym = global_robustness_with(&rho, &SolveOptions::default()).unwrap();
    let gen = global_robustness_with(&rho, &SolveOptions::default().generic()).unwrap();
    eprintln!("{:?} {:?}", (sym.lower, sym.upper), (gen.lower, gen.upper));
    assert!((sym.upper - 1.1).abs() < 1e-9);
    assert!(gen.contains(sym.upper, 1e-5));
}

#[test]
fn mixing_and_smoothed_run_on_random_state() {
    let rho = random_state(&DimProfile::bipartite(2, 2).unwrap(), 2, 3).unwrap();
    let opts = SolveOptions::default();
    let g = global_robustness_with(&rho, &opts).unwrap();
    let m = mixing_robustness_with(&rho, &opts).unwrap();
    let s = smoothed_log_robustness_with(&rho, 0.05, &opts).unwrap();
    eprintln!("g {:?} m {:?} s {:?}", (g.lower, g.upper), (m.lower, m.upper), (s.lower, s.upper));
    assert!(m.lower <= m.upper && g.lower <= g.upper);
    assert!(s.upper <= (1.0 + g.upper).log2() + 1e-6);
}
