//! Measure-and-prepare maps for distillation and formation, their CPTP and
//! separability-preservation checks, and finite-n reversibility runs.
//!
//! Every map here has the form `ρ ↦ tr(Aρ)·hit + tr((I−A)ρ)·miss` with a
//! two-outcome POVM `{A, I−A}`. Such maps compose within the family, and
//! the image of the separable set is a segment between two output states,
//! which is what makes their separability-preservation constant computable.

mod monotone;
mod reversibility;
mod sepp;

pub use monotone::{check_er_monotonicity, check_lr_monotonicity, MonotonicityReport, Verdict};
pub use reversibility::{reversibility_demo, DistillRow, ReversibilityOptions, ReversibilityReport};
pub use sepp::{overlap_range, sepp_composition_bound, verify_sepp, OverlapRange, SeppCertificate, SeppMethod};

use crate::error::{Error, Result};
use crate::sep_geometry::isotropic::twirl_embedded;
use crate::sep_geometry::SepWitness;
use crate::measures::{global_robustness_with, Bracket};
use crate::sep_geometry::SolveOptions;
use crate::states::max_entangled;
use crate::tensor_core::{kron, partial_trace_op, DimProfile, HermitianOp, MultiState, Parties, PSD_TOL};

/// Largest deviation between a formation map's mixture and its separable
/// certificate that is accepted.
pub const MIXTURE_TOL: f64 = 1e-8;

/// How a map was constructed; verification exploits the structure.
#[derive(Clone, Debug)]
pub enum MapKind {
    /// Hit prepares `Φ(K)`, miss prepares `(I − Φ(K))/(K² − 1)`.
    Distill { k: usize },
    /// POVM `Φ(K)` on `K ⊗ K`; `mixture` certifies that
    /// `(hit + (K−1)·miss)/K` is separable.
    Formation { k: usize, mixture: SepWitness },
    General,
}

/// `ρ ↦ tr(Aρ)·hit + tr((I−A)ρ)·miss`.
#[derive(Clone, Debug)]
pub struct MeasurePrepareMap {
    povm: HermitianOp,
    out_hit: MultiState,
    out_miss: MultiState,
    in_profile: DimProfile,
    in_parties: Parties,
    kind: MapKind,
}

fn check_operator_interval(a: &HermitianOp) -> Result<()> {
    let lo = a.min_eigenvalue();
    let hi = a.max_eigenvalue();
    if lo < -PSD_TOL || hi > 1.0 + PSD_TOL {
        return Err(Error::InvalidArgument(format!(
            "POVM element must satisfy 0 <= A <= I, spectrum is [{lo:.3e}, {hi:.3e}]"
        )));
    }
    Ok(())
}

impl MeasurePrepareMap {
    /// General measure-and-prepare map; checks `0 ⪯ A ⪯ I` and that both
    /// outputs share a profile.
    pub fn new(
        povm: HermitianOp,
        out_hit: MultiState,
        out_miss: MultiState,
        in_profile: DimProfile,
        in_parties: Parties,
    ) -> Result<Self> {
        check_operator_interval(&povm)?;
        Self::unchecked(povm, out_hit, out_miss, in_profile, in_parties)
    }

    /// Skips the operator-interval check, so maps that are not positive can
    /// be built for diagnostics. Dimensions are still checked.
    pub fn unchecked(
        povm: HermitianOp,
        out_hit: MultiState,
        out_miss: MultiState,
        in_profile: DimProfile,
        in_parties: Parties,
    ) -> Result<Self> {
        if povm.dim() != in_profile.total() {
            return Err(Error::DimensionMismatch {
                expected: in_profile.total(),
                found: povm.dim(),
            });
        }
        if out_hit.profile() != out_miss.profile() {
            return Err(Error::InvalidArgument(format!(
                "output profiles differ: {:?} vs {:?}",
                out_hit.profile().dims(),
                out_miss.profile().dims()
            )));
        }
        Ok(Self {
            povm,
            out_hit,
            out_miss,
            in_profile,
            in_parties,
            kind: MapKind::General,
        })
    }

    pub fn povm(&self) -> &HermitianOp {
        &self.povm
    }

    pub fn out_hit(&self) -> &MultiState {
        &self.out_hit
    }

    pub fn out_miss(&self) -> &MultiState {
        &self.out_miss
    }

    pub fn in_profile(&self) -> &DimProfile {
        &self.in_profile
    }

    pub fn in_parties(&self) -> &Parties {
        &self.in_parties
    }

    pub fn out_profile(&self) -> &DimProfile {
        self.out_hit.profile()
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// Output for hit probability `p`.
    pub fn output_at(&self, p: f64) -> Result<MultiState> {
        let p = p.clamp(0.0, 1.0);
        self.out_hit
            .with_op(self.out_hit.op().scale(p).add_scaled(self.out_miss.op(), 1.0 - p))
    }

    pub fn apply(&self, rho: &MultiState) -> Result<MultiState> {
        if rho.profile() != &self.in_profile {
            return Err(Error::InvalidArgument(format!(
                "input profile {:?} does not match map input {:?}",
                rho.profile().dims(),
                self.in_profile.dims()
            )));
        }
        self.output_at(self.povm.inner(rho.op()))
    }

    /// Choi operator `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|) = Aᵀ ⊗ hit + (I − A)ᵀ ⊗ miss`.
    pub fn choi_matrix(&self) -> HermitianOp {
        let a_t = self.povm.transpose();
        let rest = HermitianOp::identity(self.povm.dim()).sub(&a_t);
        kron(&a_t, self.out_hit.op()).add(&kron(&rest, self.out_miss.op()))
    }
}

/// Maps whose Choi operators and actions can be checked.
#[derive(Clone, Debug)]
pub enum Channel {
    Identity { profile: DimProfile, parties: Parties },
    MeasurePrepare(MeasurePrepareMap),
}

impl Channel {
    pub fn identity_on(rho: &MultiState) -> Self {
        Channel::Identity {
            profile: rho.profile().clone(),
            parties: rho.parties().clone(),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Channel::Identity { profile, .. } => profile.total(),
            Channel::MeasurePrepare(m) => m.in_profile.total(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Channel::Identity { profile, .. } => profile.total(),
            Channel::MeasurePrepare(m) => m.out_profile().total(),
        }
    }

    pub fn apply(&self, rho: &MultiState) -> Result<MultiState> {
        match self {
            Channel::Identity { profile, .. } => {
                if rho.profile() != profile {
                    return Err(Error::InvalidArgument("input profile does not match the identity map".into()));
                }
                Ok(rho.clone())
            }
            Channel::MeasurePrepare(m) => m.apply(rho),
        }
    }

    pub fn choi_matrix(&self) -> HermitianOp {
        match self {
            Channel::Identity { profile, .. } => {
                let d = profile.total();
                let mut m = crate::tensor_core::CMat::zeros(d * d, d * d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i * d + i, j * d + j)] = crate::tensor_core::c64(1.0, 0.0);
                    }
                }
                HermitianOp::from_matrix_lossy(m)
            }
            Channel::MeasurePrepare(m) => m.choi_matrix(),
        }
    }
}

impl From<MeasurePrepareMap> for Channel {
    fn from(m: MeasurePrepareMap) -> Self {
        Channel::MeasurePrepare(m)
    }
}

/// Outcome of [`verify_cptp`].
#[derive(Clone, Debug)]
pub struct CptpReport {
    pub min_choi_eigenvalue: f64,
    /// Max-abs deviation of the output partial trace from `I`.
    pub trace_preservation_error: f64,
    pub passed: bool,
}

/// Checks `J ⪰ −1e-10` and `tr_out J = I_in` within `1e-10`.
pub fn verify_cptp(channel: &Channel) -> CptpReport {
    let choi = channel.choi_matrix();
    let (din, dout) = (channel.in_dim(), channel.out_dim());
    let reduced = partial_trace_op(choi.matrix(), &[din, dout], &[0]);
    let reduced = HermitianOp::from_matrix_lossy(reduced);
    let min = choi.min_eigenvalue();
    let err = reduced.max_abs_diff(&HermitianOp::identity(din));
    CptpReport {
        min_choi_eigenvalue: min,
        trace_preservation_error: err,
        passed: min >= -PSD_TOL && err <= PSD_TOL,
    }
}

fn k_by_k(k: usize) -> Result<(DimProfile, Parties)> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("K = {k} must be >= 2")));
    }
    Ok((DimProfile::bipartite(k, k)?, Parties::singletons(2)))
}

/// Distillation map onto `Φ(K)`, with the miss branch sent to the
/// orthogonal complement. The input is `A`'s space with singleton parties.
pub fn build_distill_map(povm: &HermitianOp, in_profile: &DimProfile, k: usize) -> Result<MeasurePrepareMap> {
    build_distill_map_parties(povm, in_profile, &Parties::singletons(in_profile.len()), k)
}

pub fn build_distill_map_parties(
    povm: &HermitianOp,
    in_profile: &DimProfile,
    in_parties: &Parties,
    k: usize,
) -> Result<MeasurePrepareMap> {
    k_by_k(k)?;
    let hit = max_entangled(k)?;
    let d2 = (k * k) as f64;
    let miss = hit.with_op(
        HermitianOp::identity(k * k)
            .sub(hit.op())
            .scale(1.0 / (d2 - 1.0)),
    )?;
    let mut map = MeasurePrepareMap::new(povm.clone(), hit, miss, in_profile.clone(), in_parties.clone())?;
    map.kind = MapKind::Distill { k };
    Ok(map)
}

/// Formation map `Λ(ω) = tr(Φ(K)ω)·target + tr((I−Φ(K))ω)·π` on `K ⊗ K`.
/// `mixture` must certify that `(target + (K−1)π)/K` is separable.
pub fn build_formation_map(
    target: &MultiState,
    k: usize,
    pi: &MultiState,
    mixture: &SepWitness,
) -> Result<MeasurePrepareMap> {
    let (profile, parties) = k_by_k(k)?;
    if pi.profile() != target.profile() {
        return Err(Error::InvalidArgument("π and the target live on different profiles".into()));
    }
    if !mixture.is_valid() {
        return Err(Error::Certificate(format!("invalid mixture witness: {}", mixture.summary())));
    }
    let kf = k as f64;
    let mix = target.op().scale(1.0 / kf).add_scaled(pi.op(), (kf - 1.0) / kf);
    let witness_op = mixture.operator()?;
    if witness_op.dim() != mix.dim() {
        return Err(Error::Certificate("mixture witness has the wrong dimension".into()));
    }
    let dev = witness_op.max_abs_diff(&mix);
    if dev > MIXTURE_TOL {
        return Err(Error::Certificate(format!(
            "mixture witness deviates from (target + (K-1)π)/K by {dev:.3e}"
        )));
    }
    let povm = max_entangled(k)?.op().clone();
    let mut map = MeasurePrepareMap::new(povm, target.clone(), pi.clone(), profile, parties)?;
    map.kind = MapKind::Formation {
        k,
        mixture: mixture.clone(),
    };
    Ok(map)
}

/// Mixing state `π` and separable witness for `(ρ + (K−1)π)/K`.
#[derive(Clone, Debug)]
pub struct MixingState {
    pub pi: MultiState,
    pub mixture: SepWitness,
    /// Robustness bracket of the target used for the construction.
    pub robustness_upper: f64,
}

/// Takes the robustness certificate `X ⪰ ρ` (separable, `tr X = 1 + R`),
/// sets `σ = X / tr X` and `π = (K·σ − ρ)/(K − 1)`. For `K ≥ tr X`, `π` is
/// a state and the mixture equals `σ`.
pub fn find_mixing_state(target: &MultiState, k: usize, opts: &SolveOptions) -> Result<MixingState> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("K = {k} must be >= 2")));
    }
    let bracket = global_robustness_with(target, opts)?;
    mixing_from_robustness(target, k, &bracket)
}

pub(crate) fn mixing_from_robustness(target: &MultiState, k: usize, bracket: &Bracket) -> Result<MixingState> {
    let too_small = || Error::KTooSmall {
        k,
        lower: bracket.lower,
        upper: bracket.upper,
    };
    let x = match &bracket.upper_certificate {
        crate::measures::UpperCertificate::RobustnessCone(w) => w.clone(),
        other => return Err(Error::Certificate(format!("unexpected robustness certificate {}", other.summary()))),
    };
    let tr_x = x.scale();
    let kf = k as f64;
    if kf < 1.0 + bracket.lower - PSD_TOL {
        return Err(too_small());
    }
    let sigma = x.scaled(1.0 / tr_x);
    let sigma_op = sigma.operator()?;
    let pi_op = sigma_op.scale(kf / (kf - 1.0)).add_scaled(target.op(), -1.0 / (kf - 1.0));
    // inside the bracket `π` may still be a state; otherwise K is too small
    let pi = target.with_op(pi_op).map_err(|_| too_small())?;
    Ok(MixingState {
        pi,
        mixture: sigma,
        robustness_upper: bracket.upper,
    })
}

/// `U ⊗ U*` twirl onto the isotropic family of `K ⊗ K`.
pub fn twirl(rho: &MultiState, k: usize) -> Result<MultiState> {
    let (profile, _) = k_by_k(k)?;
    if rho.profile() != &profile || rho.parties().count() != 2 {
        return Err(Error::InvalidArgument(format!(
            "twirl needs a {k}x{k} bipartite state, got profile {:?}",
            rho.profile().dims()
        )));
    }
    twirl_embedded(rho)
}

/// `second ∘ first`: measure with `first`'s POVM, prepare `second`'s images
/// of `first`'s outputs.
pub fn compose(first: &MeasurePrepareMap, second: &MeasurePrepareMap) -> Result<MeasurePrepareMap> {
    if first.out_profile() != second.in_profile() {
        return Err(Error::InvalidArgument(format!(
            "cannot compose: output profile {:?} vs input profile {:?}",
            first.out_profile().dims(),
            second.in_profile().dims()
        )));
    }
    MeasurePrepareMap::unchecked(
        first.povm.clone(),
        second.apply(&first.out_hit)?,
        second.apply(&first.out_miss)?,
        first.in_profile.clone(),
        first.in_parties.clone(),
    )
}
