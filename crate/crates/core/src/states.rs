//! Named states and seeded random-state generators.
//!
//! Random pure vectors have independent standard complex Gaussian entries
//! and are normalized afterwards, so their distribution is unitarily
//! invariant. Every generator owns its RNG, seeded from the caller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sep_geometry::SeparableDecomposition;
use crate::tensor_core::{c64, kron_vec, CMat, CVec, DimProfile, HermitianOp, MultiState};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fidelity parameters of an isotropic state on `K ⊗ K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicParams {
    pub k: usize,
    pub fidelity: f64,
}

/// `(1/√K) Σ_i |i,i⟩`.
pub fn max_entangled_vector(k: usize) -> CVec {
    let mut v = CVec::zeros(k * k);
    let amp = 1.0 / (k as f64).sqrt();
    for i in 0..k {
        v[i * k + i] = c64(amp, 0.0);
    }
    v
}

/// `Φ(K) = Σ_ij |i,i⟩⟨j,j| / K`.
pub fn max_entangled(k: usize) -> Result<MultiState> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("K = {k} must be >= 2")));
    }
    let op = HermitianOp::projector(&max_entangled_vector(k));
    MultiState::new(DimProfile::bipartite(k, k)?, op)
}

/// `φ₂ = Φ(2)`.
pub fn phi2() -> MultiState {
    max_entangled(2).expect("K = 2 is valid")
}

/// Operator `F·Φ(K) + (1−F)·(I−Φ(K))/(K²−1)` without validation.
pub(crate) fn isotropic_op(k: usize, fidelity: f64) -> HermitianOp {
    let d = k * k;
    let phi = HermitianOp::projector(&max_entangled_vector(k));
    let rest = HermitianOp::identity(d).sub(&phi);
    phi.scale(fidelity)
        .add_scaled(&rest, (1.0 - fidelity) / (d as f64 - 1.0))
}

pub fn isotropic(params: IsotropicParams) -> Result<MultiState> {
    let IsotropicParams { k, fidelity } = params;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("K = {k} must be >= 2")));
    }
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::InvalidArgument(format!(
            "isotropic fidelity {fidelity} outside [0, 1]"
        )));
    }
    MultiState::new(DimProfile::bipartite(k, k)?, isotropic_op(k, fidelity))
}

/// Boundary separable isotropic state `I_b = Φ(K)/K + (I−Φ(K))/(K(K+1))`.
pub fn isotropic_boundary(k: usize) -> Result<MultiState> {
    isotropic(IsotropicParams {
        k,
        fidelity: 1.0 / k as f64,
    })
}

/// `|Φ⁻⟩ = (|00⟩ − |11⟩)/√2` as a state.
pub fn phi_minus() -> MultiState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVec::zeros(4);
    v[0] = c64(s, 0.0);
    v[3] = c64(-s, 0.0);
    MultiState::new(
        DimProfile::bipartite(2, 2).expect("2x2"),
        HermitianOp::projector(&v),
    )
    .expect("pure state")
}

/// Pure product state of computational basis vectors.
pub fn basis_product(profile: &DimProfile, digits: &[usize]) -> Result<MultiState> {
    if digits.len() != profile.len() || digits.iter().zip(profile.dims()).any(|(&x, &d)| x >= d) {
        return Err(Error::InvalidArgument(format!(
            "basis digits {digits:?} do not fit profile {:?}",
            profile.dims()
        )));
    }
    let mut v = CVec::from_element(1, c64(1.0, 0.0));
    for (&x, &d) in digits.iter().zip(profile.dims()) {
        let mut e = CVec::zeros(d);
        e[x] = c64(1.0, 0.0);
        v = kron_vec(&v, &e);
    }
    MultiState::new(profile.clone(), HermitianOp::projector(&v))
}

pub fn maximally_mixed(profile: &DimProfile) -> MultiState {
    let d = profile.total();
    MultiState::new(
        profile.clone(),
        HermitianOp::identity(d).scale(1.0 / d as f64),
    )
    .expect("I/d is a state")
}

pub(crate) fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> CVec {
    CVec::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(re, im)
    })
}

pub(crate) fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> CVec {
    let v = gaussian_vector(rng, dim);
    let n = v.norm();
    v.unscale(n)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal folded into `Q`.
pub fn random_unitary(dim: usize, seed: u64) -> CMat {
    let mut r = rng(seed);
    let g = CMat::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        c64(re, im)
    });
    let qr = g.qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = rr[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random state `GG†/tr(GG†)` with `G` a `total × rank` complex Ginibre
/// matrix.
pub fn random_state(profile: &DimProfile, rank: usize, seed: u64) -> Result<MultiState> {
    let total = profile.total();
    if rank == 0 || rank > total {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={total}"
        )));
    }
    let mut r = rng(seed);
    let g = CMat::from_fn(total, rank, |_, _| {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        c64(re, im)
    });
    let op = HermitianOp::from_matrix_lossy(&g * g.adjoint());
    let tr = op.trace();
    MultiState::new(profile.clone(), op.scale(1.0 / tr))
}

/// Random product pure state with one normalized local vector per
/// subsystem.
pub fn random_product_pure(profile: &DimProfile, seed: u64) -> (MultiState, Vec<CVec>) {
    let mut r = rng(seed);
    let locals: Vec<CVec> = profile
        .dims()
        .iter()
        .map(|&d| random_unit_vector(&mut r, d))
        .collect();
    let v = locals
        .iter()
        .fold(CVec::from_element(1, c64(1.0, 0.0)), |acc, l| kron_vec(&acc, l));
    let state = MultiState::new(profile.clone(), HermitianOp::projector(&v))
        .expect("product of unit vectors is a pure state");
    (state, locals)
}

/// Convex combination of `terms` random product pure states with
/// Dirichlet(1) weights.
pub fn random_separable(
    profile: &DimProfile,
    terms: usize,
    seed: u64,
) -> Result<(MultiState, SeparableDecomposition)> {
    if terms == 0 {
        return Err(Error::InvalidArgument("at least one term is required".into()));
    }
    let mut r = rng(seed);
    let mut weights: Vec<f64> = (0..terms)
        .map(|_| -(1.0 - r.random::<f64>()).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let factors: Vec<Vec<CVec>> = (0..terms)
        .map(|_| {
            profile
                .dims()
                .iter()
                .map(|&d| random_unit_vector(&mut r, d))
                .collect()
        })
        .collect();
    let parties = crate::tensor_core::Parties::singletons(profile.len());
    let decomposition = SeparableDecomposition::new(profile.clone(), parties, weights, factors)?;
    let state = MultiState::new(profile.clone(), decomposition.operator())?;
    Ok((state, decomposition))
}

/// SWAP operator on `d ⊗ d`.
pub fn swap_operator(d: usize) -> HermitianOp {
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = c64(1.0, 0.0);
        }
    }
    HermitianOp::from_matrix_lossy(m)
}

/// Werner state `p·P₋/dim(P₋) + (1−p)·P₊/dim(P₊)` on `d ⊗ d`, parameterized by
/// the antisymmetric weight `p`.
pub fn werner(d: usize, p: f64) -> Result<MultiState> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("d = {d} must be >= 2")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "antisymmetric weight {p} outside [0, 1]"
        )));
    }
    let dd = (d * d) as f64;
    let id = HermitianOp::identity(d * d);
    let swap = swap_operator(d);
    let anti = id.sub(&swap).scale(0.5);
    let sym = id.add(&swap).scale(0.5);
    let op = anti
        .scale(p * 2.0 / (dd - d as f64))
        .add_scaled(&sym, (1.0 - p) * 2.0 / (dd + d as f64));
    MultiState::new(DimProfile::bipartite(d, d)?, op)
}
