use crate::error::{Error, Result};
use crate::tensor_core::{kron_vec, CMat, CVec, DimProfile, HermitianOp, MultiState, Parties};

use super::isotropic::party_max_entangled;
use super::product::embed_product;

/// Explicit finite decomposition `scale · Σ_j p_j ⊗_parties |f_{j,p}⟩⟨f_{j,p}|`.
///
/// With `scale = 1` this is a separable state; other scales represent
/// elements of the separable cone.
#[derive(Clone, Debug)]
pub struct SeparableDecomposition {
    profile: DimProfile,
    parties: Parties,
    weights: Vec<f64>,
    factors: Vec<Vec<CVec>>,
    scale: f64,
}

const WEIGHT_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-8;

impl SeparableDecomposition {
    /// Separable state from probability weights and per-party unit vectors.
    pub fn new(
        profile: DimProfile,
        parties: Parties,
        weights: Vec<f64>,
        factors: Vec<Vec<CVec>>,
    ) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Certificate(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Self::with_scale(profile, parties, weights, factors, 1.0)
    }

    /// Cone element from nonnegative (unnormalized) weights.
    pub fn from_cone(
        profile: DimProfile,
        parties: Parties,
        weights: Vec<f64>,
        factors: Vec<Vec<CVec>>,
    ) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::Certificate(format!("negative cone weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Self::with_scale(profile, parties, Vec::new(), Vec::new(), 0.0);
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Self::with_scale(profile, parties, weights, factors, total)
    }

    fn with_scale(
        profile: DimProfile,
        parties: Parties,
        weights: Vec<f64>,
        factors: Vec<Vec<CVec>>,
        scale: f64,
    ) -> Result<Self> {
        if weights.len() != factors.len() {
            return Err(Error::Certificate(format!(
                "{} weights for {} terms",
                weights.len(),
                factors.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::Certificate(format!("negative weight {w}")));
        }
        let local = parties.local_dims(&profile);
        for term in &factors {
            if term.len() != local.len() {
                return Err(Error::Certificate(format!(
                    "term has {} factors for {} parties",
                    term.len(),
                    local.len()
                )));
            }
            for (v, &d) in term.iter().zip(&local) {
                if v.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: v.len(),
                    });
                }
                if (v.norm() - 1.0).abs() > NORM_TOL {
                    return Err(Error::Certificate(format!(
                        "factor norm {} is not 1",
                        v.norm()
                    )));
                }
            }
        }
        Ok(Self {
            profile,
            parties,
            weights,
            factors,
            scale,
        })
    }

    pub fn profile(&self) -> &DimProfile {
        &self.profile
    }

    pub fn parties(&self) -> &Parties {
        &self.parties
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> &[Vec<CVec>] {
        &self.factors
    }

    /// Trace of the represented cone element.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Product vector of term `j` in the full space.
    pub fn product_vector(&self, j: usize) -> CVec {
        embed_product(&self.profile, &self.parties, &self.factors[j])
    }

    /// Reconstructed operator `scale · Σ_j p_j |v_j⟩⟨v_j|`.
    pub fn operator(&self) -> HermitianOp {
        let d = self.profile.total();
        let mut m = CMat::zeros(d, d);
        for (j, &w) in self.weights.iter().enumerate() {
            let v = self.product_vector(j);
            m += (&v * v.adjoint()) * crate::tensor_core::c64(w * self.scale, 0.0);
        }
        HermitianOp::from_matrix_lossy(m)
    }

    /// Normalized state (requires a positive scale).
    pub fn state(&self) -> Result<MultiState> {
        if self.scale <= 0.0 {
            return Err(Error::Certificate("empty decomposition".into()));
        }
        MultiState::with_parties(
            self.profile.clone(),
            self.parties.clone(),
            self.operator().scale(1.0 / self.scale),
        )
    }

    /// Same terms with probability weights (scale 1).
    pub fn normalized(&self) -> Self {
        Self {
            scale: 1.0,
            ..self.clone()
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            scale: self.scale * s,
            ..self.clone()
        }
    }

    /// Cone sum of two decompositions on the same profile.
    pub fn combine(&self, other: &Self) -> Result<Self> {
        if self.profile != other.profile || self.parties != other.parties {
            return Err(Error::Certificate("decompositions live on different spaces".into()));
        }
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w * self.scale).collect();
        weights.extend(other.weights.iter().map(|w| w * other.scale));
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::from_cone(self.profile.clone(), self.parties.clone(), weights, factors)
    }

    /// `self ⊗ other`, with party `p` owning party `p` of both factors (the
    /// grouping used by [`MultiState::tensor`]).
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let parties = self.parties.merge_copies(&other.parties, self.profile.len())?;
        let mut weights = Vec::with_capacity(self.len() * other.len());
        let mut factors = Vec::with_capacity(self.len() * other.len());
        for (wa, fa) in self.weights.iter().zip(&self.factors) {
            for (wb, fb) in other.weights.iter().zip(&other.factors) {
                weights.push(wa * wb);
                factors.push(fa.iter().zip(fb).map(|(a, b)| kron_vec(a, b)).collect());
            }
        }
        Self::with_scale(
            self.profile.concat(&other.profile),
            parties,
            weights,
            factors,
            self.scale * other.scale,
        )
    }

    /// Drops terms whose weight is below `threshold` (relative to the
    /// total), keeping the scale.
    pub fn pruned(&self, threshold: f64) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&j| self.weights[j] > threshold).collect();
        let total: f64 = keep.iter().map(|&j| self.weights[j]).sum();
        if total <= 0.0 {
            return self.clone();
        }
        Self {
            weights: keep.iter().map(|&j| self.weights[j] / total).collect(),
            factors: keep.iter().map(|&j| self.factors[j].clone()).collect(),
            scale: self.scale * total,
            ..self.clone()
        }
    }

    /// Max-abs deviation between the reconstruction and `target`.
    pub fn deviation_from(&self, target: &HermitianOp) -> f64 {
        self.operator().max_abs_diff(target)
    }
}

/// Re-verifiable certificate that an operator lies in the separable cone.
#[derive(Clone, Debug)]
pub enum SepWitness {
    /// Explicit product-state decomposition.
    Decomposition(SeparableDecomposition),
    /// `scale · iso(K, F)` with `F ≤ 1/K`: isotropic states at or below the
    /// threshold fidelity are separable.
    Isotropic {
        profile: DimProfile,
        parties: Parties,
        k: usize,
        fidelity: f64,
        scale: f64,
    },
}

impl SepWitness {
    pub fn operator(&self) -> Result<HermitianOp> {
        match self {
            SepWitness::Decomposition(d) => Ok(d.operator()),
            SepWitness::Isotropic {
                profile,
                parties,
                k,
                fidelity,
                scale,
            } => {
                let phi = HermitianOp::projector(&party_max_entangled(profile, parties)?);
                let d = profile.total() as f64;
                let rest = HermitianOp::identity(profile.total()).sub(&phi);
                debug_assert_eq!(k * k, profile.total());
                Ok(phi
                    .scale(fidelity * scale)
                    .add_scaled(&rest, (1.0 - fidelity) * scale / (d - 1.0)))
            }
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            SepWitness::Decomposition(d) => d.scale(),
            SepWitness::Isotropic { scale, .. } => *scale,
        }
    }

    /// Same witness with its trace multiplied by `s ≥ 0`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            SepWitness::Decomposition(d) => SepWitness::Decomposition(d.scaled(s)),
            SepWitness::Isotropic {
                profile,
                parties,
                k,
                fidelity,
                scale,
            } => SepWitness::Isotropic {
                profile: profile.clone(),
                parties: parties.clone(),
                k: *k,
                fidelity: *fidelity,
                scale: scale * s,
            },
        }
    }

    /// Checks the witness's own separability condition.
    pub fn is_valid(&self) -> bool {
        match self {
            SepWitness::Decomposition(d) => {
                d.weights().iter().all(|w| *w >= 0.0) && d.scale() >= 0.0
            }
            SepWitness::Isotropic {
                k, fidelity, scale, ..
            } => *scale >= 0.0 && *fidelity >= -1e-12 && *fidelity <= 1.0 / *k as f64 + 1e-12,
        }
    }

    /// Short human-readable description.
    pub fn summary(&self) -> String {
        match self {
            SepWitness::Decomposition(d) => {
                format!("product decomposition with {} terms, trace {:.9}", d.len(), d.scale())
            }
            SepWitness::Isotropic {
                k, fidelity, scale, ..
            } => format!("isotropic K={k} fidelity {fidelity:.9} trace {scale:.9}"),
        }
    }
}
