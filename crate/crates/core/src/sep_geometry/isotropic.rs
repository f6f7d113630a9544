//! Exact reductions for states invariant under `U ⊗ U*` twirling.
//!
//! For two parties of equal local dimension `D`, the twirl maps every
//! operator to `a·Φ + b·(I − Φ)/(D² − 1)` and keeps the separable cone
//! invariant. Optimizations over separable operators whose objective is
//! twirl-invariant therefore reduce to two scalars, with separability
//! equivalent to `(D − 1)·a ≤ b`.

use crate::error::{Error, Result};
use crate::tensor_core::{c64, CVec, DimProfile, HermitianOp, MultiState, Parties};

use super::product::party_indices;

/// Largest max-abs deviation from the isotropic family still treated as
/// isotropic.
pub const ISOTROPIC_TOL: f64 = 1e-10;

/// `(1/√D) Σ_i |i⟩_A|i⟩_B` with the two parties' local indices.
pub fn party_max_entangled(profile: &DimProfile, parties: &Parties) -> Result<CVec> {
    let dims = parties.local_dims(profile);
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::InvalidSubsystems(format!(
            "maximally entangled vector needs two parties of equal dimension, got {dims:?}"
        )));
    }
    let idx = party_indices(profile, parties);
    let amp = 1.0 / (dims[0] as f64).sqrt();
    Ok(CVec::from_fn(profile.total(), |i, _| {
        if idx[0][i] == idx[1][i] {
            c64(amp, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    }))
}

/// Isotropic operator `F·Φ + (1−F)(I − Φ)/(D² − 1)` in the parties' layout.
pub fn isotropic_embedded(profile: &DimProfile, parties: &Parties, fidelity: f64) -> Result<HermitianOp> {
    let phi = HermitianOp::projector(&party_max_entangled(profile, parties)?);
    let d = profile.total() as f64;
    let rest = HermitianOp::identity(profile.total()).sub(&phi);
    Ok(phi.scale(fidelity).add_scaled(&rest, (1.0 - fidelity) / (d - 1.0)))
}

/// Local dimension and fidelity when `rho` is isotropic for its parties.
pub fn detect_isotropic(rho: &MultiState) -> Option<(usize, f64)> {
    let dims = rho.party_dims();
    if dims.len() != 2 || dims[0] != dims[1] || dims[0] < 2 {
        return None;
    }
    let phi = party_max_entangled(rho.profile(), rho.parties()).ok()?;
    let fidelity = rho.op().expectation(&phi);
    let iso = isotropic_embedded(rho.profile(), rho.parties(), fidelity).ok()?;
    (iso.max_abs_diff(rho.op()) <= ISOTROPIC_TOL).then_some((dims[0], fidelity))
}

/// Twirl onto the isotropic family of the parties' layout.
pub fn twirl_embedded(rho: &MultiState) -> Result<MultiState> {
    let phi = party_max_entangled(rho.profile(), rho.parties())?;
    let fidelity = rho.op().expectation(&phi).clamp(0.0, 1.0);
    MultiState::with_parties(
        rho.profile().clone(),
        rho.parties().clone(),
        isotropic_embedded(rho.profile(), rho.parties(), fidelity)?,
    )
}

/// Global (and mixing) robustness of an isotropic state: `max(0, D·F − 1)`.
pub fn robustness(local_dim: usize, fidelity: f64) -> f64 {
    (local_dim as f64 * fidelity - 1.0).max(0.0)
}

/// Relative entropy of entanglement (base 2) of an isotropic state.
pub fn rel_entropy(local_dim: usize, fidelity: f64) -> f64 {
    let d = local_dim as f64;
    if fidelity <= 1.0 / d {
        return 0.0;
    }
    let xlog = |x: f64, y: f64| if x <= 0.0 { 0.0 } else { x * (x * y).log2() };
    (xlog(fidelity, d) + xlog(1.0 - fidelity, d / (d - 1.0))).max(0.0)
}

/// Closest separable isotropic state in relative entropy.
pub fn rel_entropy_minimizer_fidelity(local_dim: usize, fidelity: f64) -> f64 {
    fidelity.min(1.0 / local_dim as f64)
}

/// `min_{a,b ≥ 0, (D−1)a ≤ b} (F − a)₊ + (1 − F − b)₊ + cost·(a + b)` and the
/// minimizing `(a, b)`.
pub fn cone_hinge(local_dim: usize, fidelity: f64, cost: f64) -> (f64, f64, f64) {
    let dm1 = local_dim as f64 - 1.0;
    let f = fidelity;
    let g = 1.0 - f;
    let eval = |a: f64, b: f64| (f - a).max(0.0) + (g - b).max(0.0) + cost * (a + b);
    let mut candidates = vec![(0.0, 0.0), (0.0, g), (f, dm1 * f)];
    if g >= dm1 * f {
        candidates.push((f, g));
    }
    if dm1 > 0.0 {
        candidates.push((g / dm1, g));
    }
    candidates
        .into_iter()
        .filter(|&(a, b)| a >= 0.0 && b >= 0.0 && dm1 * a <= b + 1e-15)
        .map(|(a, b)| (eval(a, b), a, b))
        .fold((f64::INFINITY, 0.0, 0.0), |best, c| if c.0 < best.0 { c } else { best })
}

/// `min_{0 ≤ a ≤ 1/D} (F − c·a)₊ + (1 − F − c·(1 − a))₊` and the minimizing
/// separable fidelity `a`.
pub fn state_hinge(local_dim: usize, fidelity: f64, c: f64) -> (f64, f64) {
    let top = 1.0 / local_dim as f64;
    let f = fidelity;
    let eval = |a: f64| (f - c * a).max(0.0) + (1.0 - f - c * (1.0 - a)).max(0.0);
    let mut candidates = vec![0.0, top];
    if c > 0.0 {
        candidates.push(f / c);
        candidates.push(1.0 - (1.0 - f) / c);
    }
    candidates
        .into_iter()
        .filter(|a| (0.0..=top).contains(a))
        .map(|a| (eval(a), a))
        .fold((f64::INFINITY, 0.0), |best, c| if c.0 < best.0 { c } else { best })
}
