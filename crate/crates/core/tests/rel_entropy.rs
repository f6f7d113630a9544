use std::time::Instant;

use qsep::measures::{rel_ent_entanglement_with, RelEntropyOptions};
use qsep::states::{max_entangled, phi2, random_separable, random_state};
use qsep::measures::UpperCertificate;
use qsep::{DimProfile, SepWitness};

fn run(rho: &qsep::MultiState, tol: f64) -> qsep::Bracket {
    let t = Instant::now();
    let b = rel_ent_entanglement_with(rho, &RelEntropyOptions::new(tol, 0).generic()).unwrap();
    eprintln!(
        "[{:.9}, {:.9}] width {:.2e} iters {} conv {} {:?}",
        b.lower, b.upper, b.width(), b.iterations, b.converged, t.elapsed()
    );
    b
}

#[test]
fn phi2_bracket_closes_around_one() {
    let b = run(&phi2(), 1e-5);
    assert!(b.contains(1.0, 1e-9) && b.width() < 1e-4);
}

#[test]
fn phi3_bracket_closes_around_log3() {
    let b = run(&max_entangled(3).unwrap(), 1e-4);
    assert!(b.contains(3f64.log2(), 1e-9) && b.width() < 1e-3);
}

#[test]
fn random_states() {
    let p = DimProfile::bipartite(2, 2).unwrap();
    for seed in 0..3 {
        let b = run(&random_state(&p, 2, seed).unwrap(), 1e-5);
        assert!(b.width() <= 1e-5 && b.converged);
    }
    let _ = random_separable;
}

#[test]
fn two_copy_phi2_is_two() {
    let rho = phi2().tensor(&phi2()).unwrap();
    let b = run(&rho, 1e-4);
    assert!(b.contains(2.0, 1e-9) && b.width() < 1e-3);
}

fn decomposition(b: &qsep::Bracket) -> qsep::SeparableDecomposition {
    match &b.upper_certificate {
        UpperCertificate::RelEntropyState(SepWitness::Decomposition(d)) => d.clone(),
        other => panic!("unexpected certificate {other:?}"),
    }
}

#[test]
fn subadditive_on_random_pair() {
    let p = DimProfile::bipartite(2, 2).unwrap();
    let a = random_state(&p, 2, 21).unwrap();
    let c = random_state(&p, 3, 22).unwrap();
    let ba = run(&a, 1e-5);
    let bc = run(&c, 1e-5);
    let start = decomposition(&ba).tensor(&decomposition(&bc)).unwrap();
    let mut opts = RelEntropyOptions::new(1e-4, 0).generic();
    opts.max_iter = 60;
    opts.start = Some(start);
    let t = Instant::now();
    let bac = rel_ent_entanglement_with(&a.tensor(&c).unwrap(), &opts).unwrap();
    eprintln!("pair [{:.6}, {:.6}] {:?}", bac.lower, bac.upper, t.elapsed());
    assert!(bac.upper <= ba.upper + bc.upper + 1e-9);
    assert!(bac.lower <= bac.upper);
}
