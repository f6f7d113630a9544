//! Global robustness, its logarithm and smoothed version, and the mixing
//! robustness with a separable mixer.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::sep_geometry::inner::{column_generation, AtomPool};
use crate::sep_geometry::isotropic::{self, detect_isotropic};
use crate::sep_geometry::{
    add_ppt_cone, exactness_for, identity_decomposition, is_ppt_all_cuts, polish_decomposition,
    product_expansion, require_solved, Affine, ConeProgram, SepWitness, SeparableDecomposition, SolveOptions, Var,
};
use crate::tensor_core::{partial_transpose_herm, HermitianOp, MultiState};

use super::{Bracket, Exactness, LowerCertificate, UpperCertificate};

fn relaxation_certificate(sol: &crate::sep_geometry::ConeSolution) -> LowerCertificate {
    LowerCertificate::Relaxation {
        status: sol.status,
        primal: sol.objective,
        dual: sol.dual_objective,
        iterations: sol.iterations,
    }
}

fn isotropic_witness(rho: &MultiState, k: usize, fidelity: f64, scale: f64) -> SepWitness {
    SepWitness::Isotropic {
        profile: rho.profile().clone(),
        parties: rho.parties().clone(),
        k,
        fidelity,
        scale,
    }
}

/// Adds `λ·I` to a cone decomposition so that it dominates `target`.
fn dominate(x: SeparableDecomposition, target: &HermitianOp) -> Result<SeparableDecomposition> {
    let slack = x.operator().sub(target).min_eigenvalue();
    if slack >= 0.0 {
        return Ok(x);
    }
    // a little beyond the violation so the repaired certificate is strict
    let lambda = -slack * (1.0 + 1e-9) + 1e-15;
    x.combine(&identity_decomposition(x.profile(), x.parties(), lambda)?)
}

/// `R_G(ρ) = min { tr X − 1 : X ⪰ ρ, X separable }`.
pub fn global_robustness(rho: &MultiState) -> Result<Bracket> {
    global_robustness_with(rho, &SolveOptions::default())
}

pub fn global_robustness_with(rho: &MultiState, opts: &SolveOptions) -> Result<Bracket> {
    let start = Instant::now();
    if rho.parties().count() < 2 {
        return Err(Error::InvalidSubsystems("at least two parties are required".into()));
    }
    if opts.use_symmetry {
        if let Some((k, f)) = detect_isotropic(rho) {
            let r = isotropic::robustness(k, f);
            let cert = UpperCertificate::RobustnessCone(isotropic_witness(
                rho,
                k,
                f.min(1.0 / k as f64),
                1.0 + r,
            ));
            let upper = cert.evaluate(rho.op())?.unwrap_or(r);
            return Bracket::new(
                r.min(upper),
                upper,
                LowerCertificate::ClosedForm(format!("isotropic K={k}, F={f:.12}")),
                cert,
                Exactness::Exact,
                0,
                start.elapsed(),
            );
        }
    }
    let d = rho.dim();
    let build = |p: &mut ConeProgram, x: Var| {
        p.require_psd(Affine::new(d).var(x, 1.0).constant(rho.op(), -1.0));
        p.minimize_trace(x, 1.0);
        p.add_objective_constant(-1.0);
    };

    let mut p = ConeProgram::new();
    let x = add_ppt_cone(&mut p, rho.profile(), rho.parties());
    build(&mut p, x);
    let sol = p.solve(opts.solver_tol())?;
    require_solved(&sol, "robustness relaxation")?;
    let lower = sol.lower_value().max(0.0);

    // seed the inner search with products that the relaxation's optimum
    // prices at (near) zero
    let mut pool = AtomPool::spanning(rho.profile(), rho.parties());
    pool.add_range_products(rho.op(), 4 * opts.restarts, opts.seed);
    let g = p.reduced_cost(&sol, x);
    pool.add_optima(&g.scale(-1.0), -1e-6, 12, opts.restarts, opts.seed);

    let out = column_generation(vec![pool], &opts.inner_config(), |p, vars| {
        build(p, vars[0]);
        Ok(())
    })?;
    // `dominate` repairs any cone point into a feasible one, so a solve
    // stopped at its iteration limit still yields a valid upper endpoint
    if out.solution.status == crate::sep_geometry::SolveStatus::Infeasible {
        require_solved(&out.solution, "robustness inner search")?;
    }
    let raw = out.decomposition(0)?;
    let mut x_dec = dominate(raw.clone(), rho.op())?;
    // `λ_max·I ⪰ ρ` always works and caps a poor inner solve
    let flat = identity_decomposition(rho.profile(), rho.parties(), rho.op().max_eigenvalue())?;
    if flat.scale() < x_dec.scale() {
        x_dec = flat;
    }
    if x_dec.scale() - 1.0 - lower > opts.tol && is_ppt_all_cuts(rho).0 {
        // a PPT input may be a boundary separable state, where the inner
        // program is degenerate; try to reproduce it directly
        if let Some(polished) = polish_decomposition(rho.op(), &raw) {
            let repaired = dominate(polished, rho.op())?;
            if repaired.scale() < x_dec.scale() {
                x_dec = repaired;
            }
        }
    }
    let cert = UpperCertificate::RobustnessCone(SepWitness::Decomposition(x_dec));
    let upper = cert.evaluate(rho.op())?.expect("robustness certificate has a value");
    Bracket::new(
        lower.min(upper),
        upper,
        relaxation_certificate(&sol),
        cert,
        exactness_for(rho, lower, upper, opts.tol),
        out.rounds,
        start.elapsed(),
    )
}

/// `LR_G = log₂(1 + R_G)`.
pub fn log_robustness(rho: &MultiState) -> Result<Bracket> {
    log_robustness_with(rho, &SolveOptions::default())
}

pub fn log_robustness_with(rho: &MultiState, opts: &SolveOptions) -> Result<Bracket> {
    let b = global_robustness_with(rho, opts)?;
    Ok(to_log(b))
}

fn to_log(b: Bracket) -> Bracket {
    let mut out = b.map_monotone(|r| (1.0 + r.max(0.0)).log2());
    out.upper_certificate = UpperCertificate::LogOnePlus(Box::new(out.upper_certificate));
    out
}

/// `min log₂(1 + R_G(ρ̃))` over states `ρ̃` with `‖ρ − ρ̃‖₁ ≤ ε`.
pub fn smoothed_log_robustness(rho: &MultiState, eps: f64) -> Result<Bracket> {
    smoothed_log_robustness_with(rho, eps, &SolveOptions::default())
}

pub fn smoothed_log_robustness_with(rho: &MultiState, eps: f64, opts: &SolveOptions) -> Result<Bracket> {
    let start = Instant::now();
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("smoothing radius {eps} must be >= 0")));
    }
    if eps == 0.0 {
        return log_robustness_with(rho, opts);
    }
    if rho.parties().count() < 2 {
        return Err(Error::InvalidSubsystems("at least two parties are required".into()));
    }
    if opts.use_symmetry {
        if let Some((k, f)) = detect_isotropic(rho) {
            let thr = 1.0 / k as f64;
            let f_new = if f > thr { (f - eps / 2.0).max(thr) } else { f };
            let r = isotropic::robustness(k, f_new);
            let perturbed = isotropic::isotropic_embedded(rho.profile(), rho.parties(), f_new)?;
            let cert = UpperCertificate::Smoothed {
                perturbed,
                radius: eps,
                cone: isotropic_witness(rho, k, f_new.min(thr), 1.0 + r),
            };
            let value = (1.0 + r).log2();
            let upper = cert.evaluate(rho.op())?.unwrap_or(value);
            return Bracket::new(
                value.min(upper),
                upper,
                LowerCertificate::ClosedForm(format!("isotropic K={k}, F={f:.12}")),
                cert,
                Exactness::Exact,
                0,
                start.elapsed(),
            );
        }
    }
    let d = rho.dim();
    let id = HermitianOp::identity(d);
    let one = HermitianOp::identity(1);
    // variables: X (cone), P, N ⪰ 0 with ρ̃ = ρ + P − N
    let build = |p: &mut ConeProgram, x: Var| -> (Var, Var) {
        let pos = p.add_psd(d);
        let neg = p.add_psd(d);
        p.require_psd(
            Affine::new(d)
                .var(x, 1.0)
                .constant(rho.op(), -1.0)
                .var(pos, -1.0)
                .var(neg, 1.0),
        );
        p.require_psd(Affine::new(d).constant(rho.op(), 1.0).var(pos, 1.0).var(neg, -1.0));
        p.require_eq(vec![(pos, id.clone()), (neg, id.scale(-1.0))], 0.0);
        p.require_psd(
            Affine::new(1)
                .constant_identity(eps)
                .functional(pos, &id.scale(-1.0), &one)
                .functional(neg, &id.scale(-1.0), &one),
        );
        p.minimize_trace(x, 1.0);
        (pos, neg)
    };

    let mut p = ConeProgram::new();
    let x = add_ppt_cone(&mut p, rho.profile(), rho.parties());
    build(&mut p, x);
    let sol = p.solve(opts.solver_tol())?;
    require_solved(&sol, "smoothed robustness relaxation")?;
    let lower = sol.lower_value().max(1.0).log2();

    let mut pool = AtomPool::spanning(rho.profile(), rho.parties());
    let g = p.reduced_cost(&sol, x);
    pool.add_optima(&g.scale(-1.0), -1e-6, 12, opts.restarts, opts.seed);
    let out = column_generation(vec![pool], &opts.inner_config(), |p, vars| Ok(build(p, vars[0])))?;
    require_solved(&out.solution, "smoothed robustness inner search")?;

    // Repair: clip ρ̃ to a state, pull it toward ρ until it is inside the
    // ball, then let X dominate it.
    let (pos, neg) = out.extra;
    let raw = rho
        .op()
        .add(out.solution.hermitian(pos))
        .sub(out.solution.hermitian(neg));
    let clipped = crate::tensor_core::apply_fn(&crate::tensor_core::eigh(&raw), |v| v.max(0.0));
    let clipped = clipped.scale(1.0 / clipped.trace());
    let dist = crate::tensor_core::trace_norm(&rho.op().sub(&clipped));
    let t = if dist > eps { eps / dist * (1.0 - 1e-12) } else { 1.0 };
    let perturbed = rho.op().scale(1.0 - t).add_scaled(&clipped, t);
    let x_dec = dominate(out.decomposition(0)?, &perturbed)?;
    let cert = UpperCertificate::Smoothed {
        perturbed,
        radius: eps,
        cone: SepWitness::Decomposition(x_dec),
    };
    let upper = cert.evaluate(rho.op())?.expect("smoothed certificate has a value");
    Bracket::new(
        lower.min(upper),
        upper,
        relaxation_certificate(&sol),
        cert,
        exactness_for(rho, lower, upper, opts.tol),
        out.rounds,
        start.elapsed(),
    )
}

/// `R(ρ) = min { s : σ separable, (ρ + sσ)/(1 + s) separable }`, written as
/// `min tr S₁` over separable cone elements with `S₂ = ρ + S₁`.
pub fn mixing_robustness(rho: &MultiState) -> Result<Bracket> {
    mixing_robustness_with(rho, &SolveOptions::default())
}

pub fn mixing_robustness_with(rho: &MultiState, opts: &SolveOptions) -> Result<Bracket> {
    let start = Instant::now();
    if rho.parties().count() != 2 {
        return Err(Error::InvalidSubsystems("mixing robustness needs two parties".into()));
    }
    if opts.use_symmetry {
        if let Some((k, f)) = detect_isotropic(rho) {
            let r = isotropic::robustness(k, f);
            let thr = 1.0 / k as f64;
            let cert = UpperCertificate::MixingPair {
                mixer: isotropic_witness(rho, k, 0.0, r),
                mixture: isotropic_witness(rho, k, f.min(thr), 1.0 + r),
            };
            let upper = cert.evaluate(rho.op())?.unwrap_or(r);
            return Bracket::new(
                r.min(upper),
                upper,
                LowerCertificate::ClosedForm(format!("isotropic K={k}, F={f:.12}")),
                cert,
                Exactness::Exact,
                0,
                start.elapsed(),
            );
        }
    }
    let d = rho.dim();
    let build = |p: &mut ConeProgram, s1: Var, s2: Var| {
        p.require_mat_eq(Affine::new(d).var(s2, 1.0).var(s1, -1.0).constant(rho.op(), -1.0));
        p.minimize_trace(s1, 1.0);
    };
    // relaxation with the mixture eliminated: S₁ and ρ + S₁ both PPT
    let mut p = ConeProgram::new();
    let s1 = add_ppt_cone(&mut p, rho.profile(), rho.parties());
    p.require_psd(Affine::new(d).var(s1, 1.0).constant(rho.op(), 1.0));
    for mask in rho.parties().cut_masks(rho.profile().len()) {
        let rho_pt = partial_transpose_herm(rho.op(), rho.profile(), &mask);
        p.require_psd(
            Affine::new(d)
                .var_pt(s1, rho.profile().dims(), &mask, 1.0)
                .constant(&rho_pt, 1.0),
        );
    }
    p.minimize_trace(s1, 1.0);
    let sol = p.solve(opts.solver_tol())?;
    require_solved(&sol, "mixing robustness relaxation")?;
    let lower = sol.lower_value().max(0.0);

    let pools = vec![
        AtomPool::spanning(rho.profile(), rho.parties()),
        AtomPool::spanning(rho.profile(), rho.parties()),
    ];
    let out = column_generation(pools, &opts.inner_config(), |p, vars| {
        build(p, vars[0], vars[1]);
        Ok(())
    })?;
    require_solved(&out.solution, "mixing robustness inner search")?;
    let mixer = out.decomposition(0)?;
    let mixture = out.decomposition(1)?;
    // Repair the equality exactly: with Δ = S₂ − S₁ − ρ expanded as
    // Σ c_k P_k over product projectors, move the positive part of the
    // expansion into the mixer and the negative part into the mixture.
    let delta = mixture.operator().sub(&mixer.operator()).sub(rho.op());
    let (atoms, coefs) = product_expansion(&delta, rho.profile(), rho.parties())?;
    let (pos_w, neg_w): (Vec<f64>, Vec<f64>) =
        coefs.iter().map(|&c| (c.max(0.0), (-c).max(0.0))).unzip();
    let pos = SeparableDecomposition::from_cone(
        rho.profile().clone(),
        rho.parties().clone(),
        pos_w,
        atoms.clone(),
    )?;
    let neg = SeparableDecomposition::from_cone(
        rho.profile().clone(),
        rho.parties().clone(),
        neg_w,
        atoms,
    )?;
    let mixer = mixer.combine(&pos)?;
    let mixture = mixture.combine(&neg)?;
    let cert = UpperCertificate::MixingPair {
        mixer: SepWitness::Decomposition(mixer),
        mixture: SepWitness::Decomposition(mixture),
    };
    let upper = cert.evaluate(rho.op())?.expect("mixing certificate has a value");
    Bracket::new(
        lower.min(upper),
        upper,
        relaxation_certificate(&sol),
        cert,
        exactness_for(rho, lower, upper, opts.tol),
        out.rounds,
        start.elapsed(),
    )
}

/// `LR = log₂(1 + R)`.
pub fn log_mixing_robustness_with(rho: &MultiState, opts: &SolveOptions) -> Result<Bracket> {
    Ok(to_log(mixing_robustness_with(rho, opts)?))
}
