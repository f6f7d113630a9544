//! Dense complex Hermitian linear algebra over multipartite tensor-product
//! spaces.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`, stored column-major.
//! Composite basis indices are row-major in the subsystem digits: the first
//! subsystem of a [`DimProfile`] is the most significant digit, matching the
//! Kronecker product convention `kron(a, b)[(i*db + k), (j*db + l)] = a[i,j] b[k,l]`.

mod entropy;
mod linalg;
mod ops;

pub use entropy::{relative_entropy, von_neumann_entropy};
pub use linalg::{apply_fn, eigh, log_derivative, positive_part_trace, trace_norm, Eigh};
pub use ops::{
    kron, kron_vec, partial_trace, partial_trace_op, partial_transpose, partial_transpose_op,
    IndexLayout,
};
pub(crate) use ops::partial_transpose_herm;
pub(crate) use entropy::relative_entropy_ops;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StateCheck};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Elementwise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue tolerated in a density operator.
pub const PSD_TOL: f64 = 1e-10;
/// Trace tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Ordered local dimensions of a multipartite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimProfile {
    dims: Vec<usize>,
}

impl DimProfile {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidProfile("empty dimension list".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidProfile(format!(
                "local dimension {d} is below 2"
            )));
        }
        Ok(Self { dims })
    }

    /// Two-party profile `da ⊗ db`.
    pub fn bipartite(da: usize, db: usize) -> Result<Self> {
        Self::new(vec![da, db])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &DimProfile) -> DimProfile {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DimProfile { dims }
    }

    pub fn restrict(&self, keep: &[usize]) -> Result<DimProfile> {
        DimProfile::new(keep.iter().map(|&k| self.dims[k]).collect())
    }
}

/// Grouping of subsystems into parties. Separability always refers to the
/// parties, so `ρ^{⊗n}` of a bipartite `ρ` is still a two-party state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Parties {
    groups: Vec<Vec<usize>>,
}

impl Parties {
    /// Every subsystem is its own party.
    pub fn singletons(n_subsystems: usize) -> Self {
        Self {
            groups: (0..n_subsystems).map(|i| vec![i]).collect(),
        }
    }

    pub fn new(groups: Vec<Vec<usize>>, n_subsystems: usize) -> Result<Self> {
        let mut seen = vec![false; n_subsystems];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidSubsystems("empty party".into()));
            }
            for &s in g {
                if s >= n_subsystems || seen[s] {
                    return Err(Error::InvalidSubsystems(format!(
                        "subsystem {s} out of range or assigned twice"
                    )));
                }
                seen[s] = true;
            }
        }
        if seen.iter().any(|&b| !b) {
            return Err(Error::InvalidSubsystems(
                "every subsystem must belong to a party".into(),
            ));
        }
        let mut groups = groups;
        for g in &mut groups {
            g.sort_unstable();
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn count(&self) -> usize {
        self.groups.len()
    }

    /// Local dimension of each party.
    pub fn local_dims(&self, profile: &DimProfile) -> Vec<usize> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&s| profile.dims()[s]).product())
            .collect()
    }

    /// Subsystem mask selecting every subsystem owned by the given parties.
    pub fn mask(&self, parties: &[usize], n_subsystems: usize) -> Vec<bool> {
        let mut mask = vec![false; n_subsystems];
        for &p in parties {
            for &s in &self.groups[p] {
                mask[s] = true;
            }
        }
        mask
    }

    /// Subsystem masks of every bipartition `{S, S^c}` of the parties, one
    /// per unordered pair (the side containing party 0 is left untransposed).
    pub fn cut_masks(&self, n_subsystems: usize) -> Vec<Vec<bool>> {
        let k = self.groups.len();
        if k < 2 {
            return Vec::new();
        }
        (1..(1usize << (k - 1)))
            .map(|bits| {
                let transposed: Vec<usize> = (1..k).filter(|p| bits >> (p - 1) & 1 == 1).collect();
                self.mask(&transposed, n_subsystems)
            })
            .collect()
    }

    /// Parties of `self ⊗ other` where party `p` of the product owns party
    /// `p` of both factors. Requires equal party counts.
    pub fn merge_copies(&self, other: &Parties, offset: usize) -> Result<Parties> {
        if self.groups.len() != other.groups.len() {
            return Err(Error::InvalidSubsystems(
                "tensor product of states with different party counts".into(),
            ));
        }
        let groups = self
            .groups
            .iter()
            .zip(&other.groups)
            .map(|(a, b)| {
                let mut g = a.clone();
                g.extend(b.iter().map(|s| s + offset));
                g
            })
            .collect();
        Ok(Parties { groups })
    }
}

/// Hermitian operator on a finite-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    mat: CMat,
}

impl HermitianOp {
    /// Accepts `mat` if it equals its adjoint to within [`HERMITIAN_TOL`]
    /// elementwise; the stored matrix is the exact Hermitian part.
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let deviation = hermitian_deviation(&mat);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::from_matrix_lossy(mat))
    }

    /// Replaces `mat` by its Hermitian part without checking how far it was.
    pub fn from_matrix_lossy(mat: CMat) -> Self {
        let adj = mat.adjoint();
        Self {
            mat: (mat + adj).scale(0.5),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMat::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = CMat::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = c64(d, 0.0);
        }
        Self { mat }
    }

    /// Real symmetric matrix given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut mat = CMat::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                mat[(i, j)] = c64(v, 0.0);
            }
        }
        Self::new(mat)
    }

    /// `|v⟩⟨v|` (not normalized).
    pub fn projector(v: &CVec) -> Self {
        Self {
            mat: v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// `Re tr(self · other)`, the Hilbert–Schmidt inner product.
    pub fn inner(&self, other: &HermitianOp) -> f64 {
        hs_inner(&self.mat, &other.mat)
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &CVec) -> f64 {
        (v.adjoint() * &self.mat * v)[(0, 0)].re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: self.mat.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &HermitianOp) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &HermitianOp) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &HermitianOp, s: f64) -> Self {
        Self {
            mat: &self.mat + other.mat.map(|z| z * s),
        }
    }

    /// Complex transpose (equals the entrywise conjugate for Hermitian input).
    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    /// `U self U†`.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        Self::from_matrix_lossy(u * &self.mat * u.adjoint())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianOp) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh(self).values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *eigh(self).values.last().expect("non-empty spectrum")
    }
}

pub(crate) fn hermitian_deviation(mat: &CMat) -> f64 {
    let n = mat.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `Re tr(a b)` for square matrices of equal size.
pub(crate) fn hs_inner(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// A density operator with an explicit multipartite dimension profile and
/// party grouping.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiState {
    profile: DimProfile,
    parties: Parties,
    op: HermitianOp,
}

impl MultiState {
    /// Validates positivity, unit trace and dimension agreement. Each
    /// subsystem is its own party.
    pub fn new(profile: DimProfile, op: HermitianOp) -> Result<Self> {
        let parties = Parties::singletons(profile.len());
        Self::with_parties(profile, parties, op)
    }

    pub fn with_parties(profile: DimProfile, parties: Parties, op: HermitianOp) -> Result<Self> {
        if op.dim() != profile.total() {
            return Err(Error::InvalidState {
                check: StateCheck::Dims,
                detail: format!(
                    "operator dimension {} does not match profile total {}",
                    op.dim(),
                    profile.total()
                ),
            });
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState {
                check: StateCheck::Trace,
                detail: format!("trace is {tr}"),
            });
        }
        let min = op.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState {
                check: StateCheck::Psd,
                detail: format!("minimum eigenvalue {min:.3e}"),
            });
        }
        Ok(Self {
            profile,
            parties,
            op,
        })
    }

    /// Builds from a raw complex matrix, reporting a failed Hermiticity check
    /// as [`StateCheck::Hermitian`].
    pub fn from_matrix(profile: DimProfile, mat: CMat) -> Result<Self> {
        if mat.nrows() != profile.total() || mat.ncols() != profile.total() {
            return Err(Error::InvalidState {
                check: StateCheck::Dims,
                detail: format!(
                    "matrix is {}x{}, profile total is {}",
                    mat.nrows(),
                    mat.ncols(),
                    profile.total()
                ),
            });
        }
        let op = HermitianOp::new(mat).map_err(|e| Error::InvalidState {
            check: StateCheck::Hermitian,
            detail: e.to_string(),
        })?;
        Self::new(profile, op)
    }

    pub fn profile(&self) -> &DimProfile {
        &self.profile
    }

    pub fn parties(&self) -> &Parties {
        &self.parties
    }

    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Local dimensions of the parties.
    pub fn party_dims(&self) -> Vec<usize> {
        self.parties.local_dims(&self.profile)
    }

    /// Re-groups subsystems into parties.
    pub fn regroup(&self, parties: Parties) -> Result<Self> {
        if parties
            .groups()
            .iter()
            .flatten()
            .any(|&s| s >= self.profile.len())
        {
            return Err(Error::InvalidSubsystems("party refers to missing subsystem".into()));
        }
        Ok(Self {
            profile: self.profile.clone(),
            parties,
            op: self.op.clone(),
        })
    }

    /// `self ⊗ other` with party `p` owning party `p` of both factors.
    pub fn tensor(&self, other: &MultiState) -> Result<MultiState> {
        let parties = self.parties.merge_copies(&other.parties, self.profile.len())?;
        Ok(MultiState {
            profile: self.profile.concat(&other.profile),
            parties,
            op: kron(&self.op, &other.op),
        })
    }

    /// `self^{⊗n}`, `n ≥ 1`.
    pub fn tensor_power(&self, n: usize) -> Result<MultiState> {
        if n == 0 {
            return Err(Error::InvalidArgument("tensor power n must be >= 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// Same profile and parties, different operator (validated).
    pub fn with_op(&self, op: HermitianOp) -> Result<MultiState> {
        MultiState::with_parties(self.profile.clone(), self.parties.clone(), op)
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.op.inner(&self.op)
    }
}
