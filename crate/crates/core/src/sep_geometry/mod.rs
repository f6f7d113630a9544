//! Inner and outer handles on the separable set: explicit decompositions,
//! PPT tests, the product-overlap oracle, and the cone-program solver the
//! measures reduce to.

mod cone;
mod decomposition;
pub mod inner;
mod ipm;
pub mod isotropic;
mod polish;
mod product;

use std::time::Instant;

pub use cone::{
    Affine, ConeProgram, ConeSolution, EqId, MatEqId, Map, PsdId, SolveStatus, Var, VarKind,
    VarValue, IpmSettings, MAX_COORDINATES, MAX_TOTAL_DIM,
};
pub use decomposition::{SeparableDecomposition, SepWitness};
pub use polish::polish_decomposition;
pub use product::{
    basis_products, embed_product, max_product_overlap, max_product_overlap_parties,
    product_expansion, product_local_optima, tomographic_products, ProductOptimum,
    DEFAULT_RESTARTS, SWEEP_TOL,
};

pub(crate) use product::ascend_from;

use crate::error::{Error, Result};
use crate::measures::{Bracket, Exactness, LowerCertificate, UpperCertificate};
use crate::tensor_core::{partial_transpose, trace_norm, MultiState, Parties, DimProfile, PSD_TOL};

use inner::{column_generation, AtomPool, InnerConfig};

/// PPT test across one cut: `(ρ^{T_cut} ⪰ −1e-10, λ_min(ρ^{T_cut}))`.
/// `cut` lists the parties that are transposed.
pub fn is_ppt(rho: &MultiState, cut: &[usize]) -> Result<(bool, f64)> {
    let min = partial_transpose(rho, cut)?.min_eigenvalue();
    Ok((min >= -PSD_TOL, min))
}

/// PPT test across every bipartition of the parties.
pub fn is_ppt_all_cuts(rho: &MultiState) -> (bool, f64) {
    let n = rho.profile().len();
    let min = rho
        .parties()
        .cut_masks(n)
        .iter()
        .map(|mask| {
            crate::tensor_core::partial_transpose_herm(rho.op(), rho.profile(), mask).min_eigenvalue()
        })
        .fold(f64::INFINITY, f64::min);
    (min >= -PSD_TOL, min)
}

/// Two parties whose local dimensions multiply to at most 6, where PPT
/// coincides with separability.
pub fn ppt_is_exact(profile: &DimProfile, parties: &Parties) -> bool {
    let d = parties.local_dims(profile);
    d.len() == 2 && d[0] * d[1] <= 6
}

/// Adds a PSD variable whose partial transposes across every cut are PSD.
pub fn add_ppt_cone(p: &mut ConeProgram, profile: &DimProfile, parties: &Parties) -> Var {
    let d = profile.total();
    let x = p.add_psd(d);
    for mask in parties.cut_masks(profile.len()) {
        p.require_psd(Affine::new(d).var_pt(x, profile.dims(), &mask, 1.0));
    }
    x
}

/// Options shared by the bracket computations.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub seed: u64,
    /// Use exact symmetry reductions (isotropic twirl) when they apply.
    pub use_symmetry: bool,
    pub max_rounds: usize,
    pub restarts: usize,
}

impl SolveOptions {
    pub fn new(tol: f64, seed: u64) -> Self {
        Self {
            tol,
            seed,
            use_symmetry: true,
            max_rounds: 40,
            restarts: 16,
        }
    }

    pub fn generic(mut self) -> Self {
        self.use_symmetry = false;
        self
    }

    pub(crate) fn solver_tol(&self) -> f64 {
        (self.tol * 1e-2).clamp(1e-10, 1e-7)
    }

    pub(crate) fn inner_config(&self) -> InnerConfig {
        InnerConfig {
            tol: self.solver_tol(),
            max_rounds: self.max_rounds,
            restarts: self.restarts,
            seed: self.seed,
            per_round: 6,
            prune: false,
        }
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self::new(1e-6, 0)
    }
}

pub(crate) fn exactness_for(rho: &MultiState, lower: f64, upper: f64, tol: f64) -> Exactness {
    if ppt_is_exact(rho.profile(), rho.parties()) && upper - lower <= tol {
        Exactness::PptExact
    } else {
        Exactness::Bracket
    }
}

pub(crate) fn require_solved(sol: &ConeSolution, what: &str) -> Result<()> {
    match sol.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Infeasible => Err(Error::Infeasible {
            violation: sol.infeasibility.unwrap_or(f64::NAN),
        }),
        SolveStatus::MaxIter => Err(Error::Solver(format!(
            "{what}: iteration limit reached (gap {:.3e}, residuals {:.3e}/{:.3e})",
            sol.gap, sol.primal_residual, sol.dual_residual
        ))),
    }
}

/// `min_{π separable} ‖ρ − π‖₁`, bracketed by the PPT relaxation and an
/// explicit separable state.
pub fn nearest_sep_distance(rho: &MultiState) -> Result<Bracket> {
    nearest_sep_distance_with(rho, &SolveOptions::default())
}

pub fn nearest_sep_distance_with(rho: &MultiState, opts: &SolveOptions) -> Result<Bracket> {
    let start = Instant::now();
    if rho.parties().count() < 2 {
        return Err(Error::InvalidSubsystems("at least two parties are required".into()));
    }
    if opts.use_symmetry {
        if let Some((k, f)) = isotropic::detect_isotropic(rho) {
            let target = f.min(1.0 / k as f64);
            let value = 2.0 * (f - target).max(0.0);
            let witness = SepWitness::Isotropic {
                profile: rho.profile().clone(),
                parties: rho.parties().clone(),
                k,
                fidelity: target,
                scale: 1.0,
            };
            let upper_certificate = UpperCertificate::TraceDistance(witness);
            let upper = upper_certificate.evaluate(rho.op())?.unwrap_or(value);
            return Bracket::new(
                value.min(upper),
                upper,
                LowerCertificate::ClosedForm(format!("isotropic K={k}, F={f:.12}")),
                upper_certificate,
                Exactness::Exact,
                0,
                start.elapsed(),
            );
        }
    }
    let (is_ppt_state, _) = is_ppt_all_cuts(rho);
    let d = rho.dim();
    let tol = opts.solver_tol();

    let build = |p: &mut ConeProgram, pi: Var| {
        let n = p.add_psd(d);
        p.require_psd(
            Affine::new(d)
                .constant(rho.op(), 1.0)
                .var(pi, -1.0)
                .var(n, 1.0),
        );
        p.require_trace(pi, 1.0);
        p.minimize_trace(n, 2.0);
    };

    let (lower, lower_certificate) = if is_ppt_state && ppt_is_exact(rho.profile(), rho.parties()) {
        (0.0, LowerCertificate::Trivial("input is PPT on a PPT-exact profile".into()))
    } else {
        let mut p = ConeProgram::new();
        let pi = add_ppt_cone(&mut p, rho.profile(), rho.parties());
        build(&mut p, pi);
        let sol = p.solve(tol)?;
        require_solved(&sol, "nearest separable distance relaxation")?;
        (
            sol.lower_value().max(0.0),
            LowerCertificate::Relaxation {
                status: sol.status,
                primal: sol.objective,
                dual: sol.dual_objective,
                iterations: sol.iterations,
            },
        )
    };

    let pool = AtomPool::spanning(rho.profile(), rho.parties());
    let out = column_generation(vec![pool], &opts.inner_config(), |p, vars| {
        build(p, vars[0]);
        Ok(())
    })?;
    require_solved(&out.solution, "nearest separable distance inner search")?;
    let decomposition = out.decomposition(0)?;
    let witness = SepWitness::Decomposition(decomposition.normalized());
    let upper = trace_norm(&rho.op().sub(&witness.operator()?));
    let upper_certificate = UpperCertificate::TraceDistance(witness);
    let exactness = exactness_for(rho, lower, upper, opts.tol);
    Bracket::new(
        lower.min(upper),
        upper,
        lower_certificate,
        upper_certificate,
        exactness,
        out.rounds,
        start.elapsed(),
    )
}

/// Operator `λ·I` as computational-basis product atoms, used to repair
/// small feasibility defects of inner certificates.
pub(crate) fn identity_decomposition(profile: &DimProfile, parties: &Parties, lambda: f64) -> Result<SeparableDecomposition> {
    let atoms = basis_products(profile, parties);
    let w = vec![lambda.max(0.0); atoms.len()];
    SeparableDecomposition::from_cone(profile.clone(), parties.clone(), w, atoms)
}

