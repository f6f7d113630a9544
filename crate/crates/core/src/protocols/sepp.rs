//! Separability-preservation constants of measure-and-prepare maps.
//!
//! For a separable input `σ` the output is `p·hit + (1−p)·miss` with
//! `p = tr(Aσ)`, so the image of the separable set is the segment between
//! the outputs at the smallest and largest attainable `p`. `R_G` is convex,
//! hence its maximum over the segment sits at an endpoint.

use crate::error::{Error, Result};
use crate::measures::{global_robustness_with, Bracket};
use crate::sep_geometry::isotropic::{party_max_entangled, ISOTROPIC_TOL};
use crate::sep_geometry::{
    add_ppt_cone, embed_product, max_product_overlap_parties, require_solved, ConeProgram, SolveOptions,
};
use crate::states::basis_product;
use crate::tensor_core::{c64, CVec, DimProfile, HermitianOp, MultiState, Parties};

use super::{MapKind, MeasurePrepareMap};

/// Range of `tr(Aσ)` over separable states `σ`.
#[derive(Clone, Debug)]
pub struct OverlapRange {
    /// Certified: no separable state goes below this.
    pub lower_bound: f64,
    /// Certified: no separable state goes above this.
    pub upper_bound: f64,
    /// Product state with the smallest overlap found, and that overlap.
    pub min_attained: (f64, MultiState),
    pub max_attained: (f64, MultiState),
    /// Bounds are exact (isotropic POVM element).
    pub closed_form: bool,
}

fn product_state(profile: &DimProfile, parties: &Parties, locals: &[CVec]) -> Result<MultiState> {
    let v = embed_product(profile, parties, locals);
    MultiState::with_parties(profile.clone(), parties.clone(), HermitianOp::projector(&v))
}

fn basis_vector(d: usize, i: usize) -> CVec {
    let mut e = CVec::zeros(d);
    e[i] = c64(1.0, 0.0);
    e
}

/// `A = a·Φ + b·(I − Φ)` for two parties of equal dimension: the overlap
/// is `b + (a − b)·F` with `F ∈ [0, 1/D]` on separable states.
fn isotropic_range(a_op: &HermitianOp, profile: &DimProfile, parties: &Parties) -> Result<Option<OverlapRange>> {
    let dims = parties.local_dims(profile);
    if dims.len() != 2 || dims[0] != dims[1] || dims[0] < 2 {
        return Ok(None);
    }
    let d = dims[0];
    let phi_vec = party_max_entangled(profile, parties)?;
    let phi = HermitianOp::projector(&phi_vec);
    let a = a_op.expectation(&phi_vec);
    let total = profile.total() as f64;
    let b = (a_op.trace() - a) / (total - 1.0);
    let model = phi.scale(a).add_scaled(&HermitianOp::identity(profile.total()).sub(&phi), b);
    if model.max_abs_diff(a_op) > ISOTROPIC_TOL {
        return Ok(None);
    }
    let at_threshold = b + (a - b) / d as f64;
    let aligned = product_state(profile, parties, &[basis_vector(d, 0), basis_vector(d, 0)])?;
    let orthogonal = product_state(profile, parties, &[basis_vector(d, 0), basis_vector(d, 1)])?;
    let (lo, hi) = if at_threshold >= b {
        ((b, orthogonal), (at_threshold, aligned))
    } else {
        ((at_threshold, aligned), (b, orthogonal))
    };
    Ok(Some(OverlapRange {
        lower_bound: lo.0,
        upper_bound: hi.0,
        min_attained: lo,
        max_attained: hi,
        closed_form: true,
    }))
}

/// `min tr(c·σ)` over PPT states: a certified lower bound for separable ones.
fn ppt_min(c: &HermitianOp, profile: &DimProfile, parties: &Parties, opts: &SolveOptions) -> Result<f64> {
    let mut p = ConeProgram::new();
    let x = add_ppt_cone(&mut p, profile, parties);
    p.require_trace(x, 1.0);
    p.minimize(x, c);
    let sol = p.solve(opts.solver_tol())?;
    require_solved(&sol, "overlap relaxation")?;
    Ok(sol.lower_value())
}

/// Certified range of `tr(Aσ)` over separable `σ`, with product states that
/// come close to both ends.
pub fn overlap_range(
    povm: &HermitianOp,
    profile: &DimProfile,
    parties: &Parties,
    opts: &SolveOptions,
) -> Result<OverlapRange> {
    if parties.count() < 2 {
        return Err(Error::InvalidSubsystems("at least two parties are required".into()));
    }
    if opts.use_symmetry {
        if let Some(r) = isotropic_range(povm, profile, parties)? {
            return Ok(r);
        }
    }
    let hi = max_product_overlap_parties(povm, profile, parties, opts.restarts, opts.seed);
    let lo = max_product_overlap_parties(&povm.scale(-1.0), profile, parties, opts.restarts, opts.seed);
    let lower_bound = ppt_min(povm, profile, parties, opts)?.min(-lo.value);
    let upper_bound = (-ppt_min(&povm.scale(-1.0), profile, parties, opts)?).max(hi.value);
    Ok(OverlapRange {
        lower_bound,
        upper_bound,
        min_attained: (-lo.value, product_state(profile, parties, &lo.locals)?),
        max_attained: (hi.value, product_state(profile, parties, &hi.locals)?),
        closed_form: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeppMethod {
    /// Reduction to isotropic inputs with exact overlap range.
    ClosedFormIsotropic,
    /// Product-state sampling for the lower value, PPT relaxation of the
    /// overlap range for the upper one.
    Sampled,
}

/// `R_G(Λ(σ)) ≤ epsilon` for every separable `σ`.
#[derive(Clone, Debug)]
pub struct SeppCertificate {
    pub epsilon: f64,
    /// `R_G` lower endpoint at the image of `witness_input`.
    pub epsilon_lower: f64,
    /// Separable input whose image has the largest robustness found.
    pub witness_input: MultiState,
    pub method: SeppMethod,
}

/// Smallest `ε` with `R_G(Λ(σ)) ≤ ε` on separable inputs, up to bracket
/// resolution.
pub fn verify_sepp(map: &MeasurePrepareMap, opts: &SolveOptions) -> Result<SeppCertificate> {
    let rg = |s: &MultiState| -> Result<Bracket> { global_robustness_with(s, opts) };
    match map.kind() {
        MapKind::Distill { k } => {
            let kf = *k as f64;
            let range = overlap_range(map.povm(), map.in_profile(), map.in_parties(), opts)?;
            let hi = range.upper_bound.min(1.0);
            Ok(SeppCertificate {
                epsilon: (kf * hi - 1.0).max(0.0),
                epsilon_lower: (kf * range.max_attained.0 - 1.0).max(0.0),
                witness_input: range.max_attained.1,
                method: if range.closed_form {
                    SeppMethod::ClosedFormIsotropic
                } else {
                    SeppMethod::Sampled
                },
            })
        }
        MapKind::Formation { k, .. } => {
            // overlap with Φ(K) ranges over [0, 1/K] on separable inputs; at
            // 1/K the image is the certified mixture, at 0 it is π
            let witness = basis_product(map.in_profile(), &[0, 1])?;
            let r = rg(map.out_miss())?;
            let cap = 1.0 / (*k as f64 - 1.0);
            Ok(SeppCertificate {
                epsilon: r.upper.min(cap),
                epsilon_lower: r.lower,
                witness_input: witness,
                method: SeppMethod::ClosedFormIsotropic,
            })
        }
        MapKind::General => {
            let range = overlap_range(map.povm(), map.in_profile(), map.in_parties(), opts)?;
            let at_lo = rg(&map.output_at(range.lower_bound)?)?;
            let at_hi = rg(&map.output_at(range.upper_bound)?)?;
            let sampled = |p: f64, bound: f64, b: &Bracket| -> Result<f64> {
                if (p - bound).abs() <= 1e-12 {
                    Ok(b.lower)
                } else {
                    Ok(rg(&map.output_at(p)?)?.lower)
                }
            };
            let lo_val = sampled(range.min_attained.0, range.lower_bound, &at_lo)?;
            let hi_val = sampled(range.max_attained.0, range.upper_bound, &at_hi)?;
            let (epsilon_lower, witness_input) = if hi_val >= lo_val {
                (hi_val, range.max_attained.1)
            } else {
                (lo_val, range.min_attained.1)
            };
            Ok(SeppCertificate {
                epsilon: at_lo.upper.max(at_hi.upper).max(0.0),
                epsilon_lower: epsilon_lower.max(0.0),
                witness_input,
                method: if range.closed_form {
                    SeppMethod::ClosedFormIsotropic
                } else {
                    SeppMethod::Sampled
                },
            })
        }
    }
}

/// Separability-preservation constant of a composition of an `ε₁`- and an
/// `ε₂`-preserving map.
pub fn sepp_composition_bound(eps1: f64, eps2: f64) -> f64 {
    eps1 + eps2 + eps1 * eps2
}
