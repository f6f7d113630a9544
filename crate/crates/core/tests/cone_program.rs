use qsep::sep_geometry::{add_ppt_cone, Affine, ConeProgram, SolveStatus};
use qsep::states::{phi2, random_state};
use qsep::{DimProfile, HermitianOp, Parties};

#[test]
fn dominating_trace_recovers_state() {
    let rho = random_state(&DimProfile::bipartite(2, 2).unwrap(), 3, 7).unwrap();
    let mut p = ConeProgram::new();
    let x = p.add_psd(4);
    p.require_psd(Affine::new(4).var(x, 1.0).constant(rho.op(), -1.0));
    p.minimize_trace(x, 1.0);
    let sol = p.solve(1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-7, "{}", sol.objective);
    assert!(sol.hermitian(x).max_abs_diff(rho.op()) < 1e-6);
}

#[test]
fn ppt_dominating_trace_of_phi2_is_two() {
    let rho = phi2();
    let mut p = ConeProgram::new();
    let x = add_ppt_cone(&mut p, rho.profile(), &Parties::singletons(2));
    p.require_psd(Affine::new(4).var(x, 1.0).constant(rho.op(), -1.0));
    p.minimize_trace(x, 1.0);
    let sol = p.solve(1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 2.0).abs() < 1e-7, "{}", sol.objective);
    assert!((sol.dual_objective - 2.0).abs() < 1e-7);
}

#[test]
fn identity_lower_bound_with_zero_trace_is_infeasible() {
    let mut p = ConeProgram::new();
    let x = p.add_hermitian(3);
    p.require_psd(Affine::new(3).var(x, 1.0).constant(&HermitianOp::identity(3), -1.0));
    p.require_trace(x, 0.0);
    p.minimize_trace(x, 1.0);
    let sol = p.solve(1e-8).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}
