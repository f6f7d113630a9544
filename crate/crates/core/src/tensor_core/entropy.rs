use super::{eigh, MultiState};
use crate::error::{Error, Result};

/// Eigenvalues of σ below this are outside its support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Weight of ρ on the kernel of σ above which `S(ρ‖σ)` is infinite.
pub const KERNEL_WEIGHT_TOL: f64 = 1e-10;

/// `S(ρ‖σ) = tr ρ(log₂ρ − log₂σ)`, `+∞` when the support of ρ is not
/// contained in that of σ.
pub fn relative_entropy(rho: &MultiState, sigma: &MultiState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(relative_entropy_ops(rho.op(), sigma.op()))
}

pub(crate) fn relative_entropy_ops(rho: &super::HermitianOp, sigma: &super::HermitianOp) -> f64 {
    let es = eigh(sigma);
    let mut cross = 0.0;
    for (k, &lam) in es.values.iter().enumerate() {
        let v = es.vectors.column(k).into_owned();
        let w = rho.expectation(&v);
        if lam < SUPPORT_TOL {
            if w > KERNEL_WEIGHT_TOL {
                return f64::INFINITY;
            }
            continue;
        }
        cross += w * lam.log2();
    }
    let neg_entropy: f64 = eigh(rho)
        .values
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.log2())
        .sum();
    (neg_entropy - cross).max(0.0)
}

/// `−Σ λ log₂ λ` with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &MultiState) -> f64 {
    eigh(rho.op())
        .values
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}
