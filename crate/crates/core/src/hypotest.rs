//! Singlet fractions reachable under non-entangling maps and the finite-n
//! generalized Stein functional.
//!
//! All functionals here reduce to two hinge programs over the separable set:
//!
//! * cone form `min_{σ ∈ cone(𝒮)} tr(ρ − σ)₊ + c·tr σ`, whose dual is
//!   `max tr(Aρ)` over `0 ⪯ A ⪯ I` with `tr(Aσ) ≤ c` on separable states;
//! * state form `min_{ω ∈ 𝒮} tr(ρ − c·ω)₊`.
//!
//! The PPT relaxation gives the lower endpoint, column generation over
//! product atoms the upper one.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::measures::{
    power_within_limit, Bracket, Exactness, LowerCertificate, UpperCertificate,
};
use crate::sep_geometry::inner::{column_generation, AtomPool, InnerConfig};
use crate::sep_geometry::isotropic::{self, detect_isotropic};
use crate::sep_geometry::{
    add_ppt_cone, exactness_for, is_ppt_all_cuts, polish_decomposition, require_solved, Affine, ConeProgram, ConeSolution,
    SepWitness, SeparableDecomposition, SolveOptions, SolveStatus, Var,
};
use crate::tensor_core::{positive_part_trace, CVec, HermitianOp, MultiState};

/// Largest number of copies accepted by the n-copy functionals.
pub const MAX_COPIES: usize = 3;

/// Grid resolution of the outer search over the exponent `b`.
pub const B_GRID_POINTS: usize = 64;
/// Left end of the `b` grid.
pub const B_GRID_FLOOR: f64 = -2.0;
/// Golden-section refinement stops once the bracketing interval is this wide.
pub const B_SEARCH_TOL: f64 = 1e-4;

fn relaxation_certificate(sol: &ConeSolution) -> LowerCertificate {
    LowerCertificate::Relaxation {
        status: sol.status,
        primal: sol.objective,
        dual: sol.dual_objective,
        iterations: sol.iterations,
    }
}

fn iso_witness(rho: &MultiState, k: usize, fidelity: f64, scale: f64) -> SepWitness {
    SepWitness::Isotropic {
        profile: rho.profile().clone(),
        parties: rho.parties().clone(),
        k,
        fidelity,
        scale,
    }
}

/// The hinge objectives are re-evaluated exactly at the returned cone
/// point, so an inner solve that stopped at its iteration limit still gives
/// a valid upper endpoint; only an infeasible one is useless.
fn require_usable(sol: &ConeSolution, what: &str) -> Result<()> {
    match sol.status {
        SolveStatus::Infeasible => require_solved(sol, what),
        _ => Ok(()),
    }
}

/// Atom pool for the hinge programs: the spanning frame, product vectors
/// in the range of `ρ` (which carry exact decompositions of rank-deficient
/// separable states, where pricing alone is degenerate), and the optima of
/// the relaxation's reduced cost.
fn hinge_pool(rho: &MultiState, reduced: &HermitianOp, opts: &SolveOptions) -> AtomPool {
    let mut pool = AtomPool::spanning(rho.profile(), rho.parties());
    pool.add_range_products(rho.op(), 4 * opts.restarts, opts.seed);
    pool.add_optima(&reduced.scale(-1.0), -1e-6, 12, opts.restarts, opts.seed);
    pool
}

fn hinge_config(opts: &SolveOptions) -> InnerConfig {
    InnerConfig {
        prune: true,
        ..opts.inner_config()
    }
}

fn require_parties(rho: &MultiState) -> Result<()> {
    if rho.parties().count() < 2 {
        return Err(Error::InvalidSubsystems("at least two parties are required".into()));
    }
    Ok(())
}

/// `min_{σ ∈ cone(𝒮)} tr(ρ − σ)₊ + cost·tr σ`.
pub fn hinge_cone(rho: &MultiState, cost: f64, opts: &SolveOptions) -> Result<Bracket> {
    let start = Instant::now();
    require_parties(rho)?;
    if !(cost >= 0.0 && cost.is_finite()) {
        return Err(Error::InvalidArgument(format!("cost {cost} must be finite and >= 0")));
    }
    // A = min(cost, 1)·I is always dual feasible
    let floor = cost.min(1.0);

    if opts.use_symmetry {
        if let Some((k, f)) = detect_isotropic(rho) {
            let (value, a, b) = isotropic::cone_hinge(k, f, cost);
            let scale = a + b;
            let fidelity = if scale > 0.0 { (a / scale).min(1.0 / k as f64) } else { 0.0 };
            let cert = UpperCertificate::HingeCone {
                sigma: iso_witness(rho, k, fidelity, scale),
                cost,
            };
            let upper = cert.evaluate(rho.op())?.unwrap_or(value);
            return Bracket::new(
                value.max(floor).min(upper),
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
    let build = |p: &mut ConeProgram, s: Var| {
        let y = p.add_psd(d);
        p.require_psd(Affine::new(d).var(y, 1.0).var(s, 1.0).constant(rho.op(), -1.0));
        p.minimize_trace(y, 1.0);
        p.minimize_trace(s, cost);
    };

    let mut p = ConeProgram::new();
    let s = add_ppt_cone(&mut p, rho.profile(), rho.parties());
    build(&mut p, s);
    let sol = p.solve(opts.solver_tol())?;
    require_solved(&sol, "singlet-fraction relaxation")?;
    let lower = sol.lower_value().max(floor);

    let pool = hinge_pool(rho, &p.reduced_cost(&sol, s), opts);
    let out = column_generation(vec![pool], &hinge_config(opts), |p, vars| {
        build(p, vars[0]);
        Ok(())
    })?;
    require_usable(&out.solution, "singlet-fraction inner search")?;
    let sigma = out.decomposition(0)?;
    let eval = |sigma: SeparableDecomposition| -> Result<(f64, UpperCertificate)> {
        let cert = UpperCertificate::HingeCone {
            sigma: SepWitness::Decomposition(sigma),
            cost,
        };
        Ok((cert.evaluate(rho.op())?.expect("hinge certificate has a value"), cert))
    };
    let (mut upper, mut cert) = eval(sigma.clone())?;
    let zero = SeparableDecomposition::from_cone(rho.profile().clone(), rho.parties().clone(), Vec::new(), Vec::new())?;
    let (u, c) = eval(zero)?;
    if u < upper {
        (upper, cert) = (u, c);
    }
    if upper - lower > opts.tol && is_ppt_all_cuts(rho).0 {
        // a PPT input may be a boundary separable state; try to reproduce it
        if let Some(polished) = polish_decomposition(rho.op(), &sigma) {
            let (u, c) = eval(polished)?;
            if u < upper {
                (upper, cert) = (u, c);
            }
        }
    }
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

/// `min_{ω ∈ 𝒮} tr(ρ − factor·ω)₊`.
pub fn hinge_state(rho: &MultiState, factor: f64, opts: &SolveOptions) -> Result<Bracket> {
    let start = Instant::now();
    require_parties(rho)?;
    if !(factor >= 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!("factor {factor} must be finite and >= 0")));
    }

    if opts.use_symmetry {
        if let Some((k, f)) = detect_isotropic(rho) {
            let (value, a) = isotropic::state_hinge(k, f, factor);
            let cert = UpperCertificate::HingeState {
                omega: iso_witness(rho, k, a, 1.0),
                factor,
            };
            let upper = cert.evaluate(rho.op())?.unwrap_or(value);
            return Bracket::new(
                value.max(0.0).min(upper),
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
    let build = |p: &mut ConeProgram, w: Var| {
        let y = p.add_psd(d);
        p.require_psd(Affine::new(d).var(y, 1.0).var(w, factor).constant(rho.op(), -1.0));
        p.require_trace(w, 1.0);
        p.minimize_trace(y, 1.0);
    };

    let mut p = ConeProgram::new();
    let w = add_ppt_cone(&mut p, rho.profile(), rho.parties());
    build(&mut p, w);
    let sol = p.solve(opts.solver_tol())?;
    require_solved(&sol, "hypothesis-testing relaxation")?;
    let lower = sol.lower_value().max(0.0);

    let pool = hinge_pool(rho, &p.reduced_cost(&sol, w), opts);
    let try_polish = is_ppt_all_cuts(rho).0;
    let (upper, cert, rounds) = state_inner(rho, factor, pool, opts, |u| try_polish && u - lower > opts.tol)?;
    Bracket::new(
        lower.min(upper),
        upper,
        relaxation_certificate(&sol),
        cert,
        exactness_for(rho, lower, upper, opts.tol),
        rounds,
        start.elapsed(),
    )
}

/// Inner search for the state form starting from `pool`; `polish` decides
/// from the upper value whether to refine toward `ρ`.
fn state_inner(
    rho: &MultiState,
    factor: f64,
    pool: AtomPool,
    opts: &SolveOptions,
    polish: impl Fn(f64) -> bool,
) -> Result<(f64, UpperCertificate, usize)> {
    let d = rho.dim();
    let out = column_generation(vec![pool], &hinge_config(opts), |p, vars| {
        let y = p.add_psd(d);
        p.require_psd(Affine::new(d).var(y, 1.0).var(vars[0], factor).constant(rho.op(), -1.0));
        p.require_trace(vars[0], 1.0);
        p.minimize_trace(y, 1.0);
        Ok(())
    })?;
    require_usable(&out.solution, "hypothesis-testing inner search")?;
    let omega = out.decomposition(0)?.normalized();
    let eval = |omega: SeparableDecomposition| -> Result<(f64, UpperCertificate)> {
        let cert = UpperCertificate::HingeState {
            omega: SepWitness::Decomposition(omega.normalized()),
            factor,
        };
        Ok((cert.evaluate(rho.op())?.expect("hinge certificate has a value"), cert))
    };
    let (mut upper, mut cert) = eval(omega.clone())?;
    if polish(upper) {
        if let Some(polished) = polish_decomposition(rho.op(), &omega) {
            let (u, c) = eval(polished)?;
            if u < upper {
                (upper, cert) = (u, c);
            }
        }
    }
    Ok((upper, cert, out.rounds))
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("K = {k} must be finite and >= 1")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must be finite and >= 0")));
    }
    Ok(())
}

/// Largest fidelity with `Φ(K)` reachable from `ρ` by non-entangling maps:
/// `min_{σ ∈ cone(𝒮)} tr(ρ − σ)₊ + tr(σ)/K`. `K` may be any real `≥ 1`
/// so that `K = 2^{ny}` can be used directly.
pub fn fsep(rho: &MultiState, k: f64) -> Result<Bracket> {
    fsep_with(rho, k, &SolveOptions::default())
}

pub fn fsep_with(rho: &MultiState, k: f64, opts: &SolveOptions) -> Result<Bracket> {
    check_k(k)?;
    hinge_cone(rho, 1.0 / k, opts)
}

/// Singlet fraction under maps whose separable outputs may exceed the
/// threshold fidelity by `ε` in trace norm: cost `1/K + ε`.
pub fn fsep_relaxed(rho: &MultiState, k: f64, eps: f64) -> Result<Bracket> {
    fsep_relaxed_with(rho, k, eps, &SolveOptions::default())
}

pub fn fsep_relaxed_with(rho: &MultiState, k: f64, eps: f64, opts: &SolveOptions) -> Result<Bracket> {
    check_k(k)?;
    check_eps(eps)?;
    hinge_cone(rho, 1.0 / k + eps, opts)
}

/// Singlet fraction under `ε`-robustness-bounded maps: cost `(1 + ε)/K`.
pub fn fsep_bounded(rho: &MultiState, k: f64, eps: f64) -> Result<Bracket> {
    fsep_bounded_with(rho, k, eps, &SolveOptions::default())
}

pub fn fsep_bounded_with(rho: &MultiState, k: f64, eps: f64, opts: &SolveOptions) -> Result<Bracket> {
    check_k(k)?;
    check_eps(eps)?;
    hinge_cone(rho, (1.0 + eps) / k, opts)
}

fn copies(rho: &MultiState, n: usize) -> Result<MultiState> {
    if n == 0 || n > MAX_COPIES {
        return Err(Error::InvalidArgument(format!(
            "copy count n = {n} must lie in 1..={MAX_COPIES}"
        )));
    }
    power_within_limit(rho, n)
}

/// `min_{ω ∈ 𝒮} tr(ρ^{⊗n} − 2^{yn} ω)₊`.
pub fn stein_functional(rho: &MultiState, n: usize, y: f64) -> Result<Bracket> {
    stein_functional_with(rho, n, y, &SolveOptions::default())
}

pub fn stein_functional_with(rho: &MultiState, n: usize, y: f64, opts: &SolveOptions) -> Result<Bracket> {
    if !y.is_finite() {
        return Err(Error::InvalidArgument(format!("rate y = {y} must be finite")));
    }
    let rho_n = copies(rho, n)?;
    hinge_state(&rho_n, (y * n as f64).exp2(), opts)
}

/// `min_{b, ω ∈ 𝒮} tr(ρ^{⊗n} − 2^{nb} ω)₊ + 2^{−(y−b)n}` together with the
/// minimizing `b`.
///
/// The upper endpoint comes from a `b` grid on `[min(−2, y − 1), y]` refined
/// by golden-section search. Each `b` is scored exactly at the best known
/// separable state (the normalized optimum of the cone form, plus the
/// state-form optimum computed at the refined `b`). Since the functional
/// equals the singlet fraction at `K = 2^{ny}`, the lower endpoint is that
/// relaxation. When every candidate exceeds 1 the `b → −∞` limit (`σ = 0`,
/// value 1) is reported with `b` at the grid floor.
pub fn sfne_eval(rho: &MultiState, n: usize, y: f64) -> Result<(Bracket, f64)> {
    sfne_eval_with(rho, n, y, &SolveOptions::default())
}

pub fn sfne_eval_with(rho: &MultiState, n: usize, y: f64, opts: &SolveOptions) -> Result<(Bracket, f64)> {
    let start = Instant::now();
    if !y.is_finite() {
        return Err(Error::InvalidArgument(format!("rate y = {y} must be finite")));
    }
    let rho_n = copies(rho, n)?;
    let nf = n as f64;
    let cost = (-y * nf).exp2();

    // the cone form at K = 2^{ny} supplies the lower endpoint, and its
    // optimal atoms seed every point of the b search
    let cone = hinge_cone(&rho_n, cost, opts)?;
    let seeds: Vec<Vec<CVec>> = match &cone.upper_certificate {
        UpperCertificate::HingeCone {
            sigma: SepWitness::Decomposition(d),
            ..
        } => d.factors().to_vec(),
        _ => Vec::new(),
    };
    let symmetric = opts.use_symmetry && detect_isotropic(&rho_n).is_some();
    let mut candidates: Vec<SepWitness> = match &cone.upper_certificate {
        UpperCertificate::HingeCone { sigma, .. } if sigma.scale() > 0.0 => {
            vec![sigma.scaled(1.0 / sigma.scale())]
        }
        _ => Vec::new(),
    };

    // Generic states: every b is scored with the best candidate state
    // (exact evaluation, hence still an upper bound), and the state-form
    // program is solved once at the refined b to add a tailored candidate.
    let score = |b: f64, candidates: &[SepWitness]| -> Result<(f64, Option<SepWitness>)> {
        let factor = (b * nf).exp2();
        let tail = ((b - y) * nf).exp2();
        if symmetric {
            let br = hinge_state(&rho_n, factor, opts)?;
            let omega = match br.upper_certificate {
                UpperCertificate::HingeState { omega, .. } => omega,
                _ => unreachable!("state form returns a state certificate"),
            };
            return Ok((br.upper + tail, Some(omega)));
        }
        let mut best = (f64::INFINITY, None);
        for omega in candidates {
            let v = positive_part_trace(&rho_n.op().add_scaled(&omega.operator()?, -factor)) + tail;
            if v < best.0 {
                best = (v, Some(omega.clone()));
            }
        }
        Ok(best)
    };
    let eval = |b: f64| -> Result<(f64, Option<SepWitness>, usize)> {
        let (v, w) = score(b, &candidates)?;
        Ok((v, w, 0))
    };

    let lo = B_GRID_FLOOR.min(y - 1.0);
    let step = (y - lo) / (B_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..B_GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let values = grid.iter().map(|&b| eval(b)).collect::<Result<Vec<_>>>()?;
    let mut iterations: usize = values.iter().map(|v| v.2).sum();
    let best_i = (0..values.len()).fold(0, |bi, i| if values[i].0 < values[bi].0 { i } else { bi });
    let (mut best_b, mut best) = (grid[best_i], values[best_i].clone());

    // golden-section refinement between the neighbours of the grid minimum
    let (mut a, mut c) = (grid[best_i.saturating_sub(1)], grid[(best_i + 1).min(grid.len() - 1)]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = c - ratio * (c - a);
    let mut x2 = a + ratio * (c - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    loop {
        for (x, f) in [(x1, &f1), (x2, &f2)] {
            if f.0 < best.0 {
                best_b = x;
                best = f.clone();
            }
        }
        if c - a <= B_SEARCH_TOL {
            break;
        }
        if f1.0 <= f2.0 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - ratio * (c - a);
            f1 = eval(x1)?;
            iterations += f1.2;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (c - a);
            f2 = eval(x2)?;
            iterations += f2.2;
        }
    }

    if !symmetric {
        let mut pool = AtomPool::spanning(rho_n.profile(), rho_n.parties());
        for s in &seeds {
            pool.push(s.clone());
        }
        let factor = (best_b * nf).exp2();
        let (_, cert, rounds) = state_inner(&rho_n, factor, pool, opts, |_| false)?;
        iterations += rounds;
        if let UpperCertificate::HingeState { omega, .. } = cert {
            candidates.push(omega);
        }
        let (v, w) = score(best_b, &candidates)?;
        if v < best.0 {
            best = (v, w, 0);
        }
    }

    let (witness, best_b) = match best.1 {
        Some(omega) if best.0 <= 1.0 => (omega.scaled((best_b * nf).exp2()), best_b),
        _ => {
            let zero = SeparableDecomposition::from_cone(
                rho_n.profile().clone(),
                rho_n.parties().clone(),
                Vec::new(),
                Vec::new(),
            )?;
            (SepWitness::Decomposition(zero), lo)
        }
    };
    let cert = UpperCertificate::HingeCone { sigma: witness, cost };
    let upper = cert.evaluate(rho_n.op())?.expect("hinge certificate has a value");

    let lower = cone.lower;
    let exactness = match cone.exactness {
        Exactness::Exact if upper - lower <= opts.tol => Exactness::Exact,
        _ => exactness_for(&rho_n, lower, upper, opts.tol),
    };
    let bracket = Bracket::new(
        lower.min(upper),
        upper,
        cone.lower_certificate,
        cert,
        exactness,
        iterations,
        start.elapsed(),
    )?;
    Ok((bracket, best_b))
}
