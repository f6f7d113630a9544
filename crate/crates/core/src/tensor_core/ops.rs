use super::{CMat, CVec, DimProfile, HermitianOp, MultiState, Parties};
use crate::error::{Error, Result};

/// Kronecker product.
pub fn kron(a: &HermitianOp, b: &HermitianOp) -> HermitianOp {
    HermitianOp::from_matrix_lossy(a.matrix().kronecker(b.matrix()))
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

/// Digit bookkeeping for composite indices (row-major, first subsystem most
/// significant).
#[derive(Clone, Debug)]
pub struct IndexLayout {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl IndexLayout {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self {
            dims: dims.to_vec(),
            strides,
        }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.dims[k]
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    /// Splits `index` into the sub-index over the subsystems listed in
    /// `which` (in that order, row-major).
    pub fn sub_index(&self, index: usize, which: &[usize]) -> usize {
        which
            .iter()
            .fold(0, |acc, &k| acc * self.dims[k] + self.digit(index, k))
    }
}

/// Partial trace of a raw operator keeping the listed subsystems, in
/// ascending order.
pub fn partial_trace_op(op: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let layout = IndexLayout::new(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();
    let mut buckets: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for i in 0..layout.total() {
        buckets[layout.sub_index(i, &traced)].push((layout.sub_index(i, keep), i));
    }
    let mut out = CMat::zeros(kept_dim, kept_dim);
    for bucket in &buckets {
        for &(ka, ia) in bucket {
            for &(kb, ib) in bucket {
                out[(ka, kb)] += op[(ia, ib)];
            }
        }
    }
    out
}

/// Reduced state on the subsystems in `keep`.
pub fn partial_trace(rho: &MultiState, keep: &[usize]) -> Result<MultiState> {
    let n = rho.profile().len();
    if keep.is_empty() {
        return Err(Error::InvalidSubsystems("keep set is empty".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= n) {
        return Err(Error::InvalidSubsystems(format!(
            "keep set {keep:?} refers to a subsystem beyond {n}"
        )));
    }
    let profile = rho.profile().restrict(&keep)?;
    let reduced = partial_trace_op(rho.matrix(), rho.profile().dims(), &keep);
    let groups: Vec<Vec<usize>> = rho
        .parties()
        .groups()
        .iter()
        .map(|g| {
            g.iter()
                .filter_map(|s| keep.iter().position(|k| k == s))
                .collect::<Vec<_>>()
        })
        .filter(|g| !g.is_empty())
        .collect();
    let parties = Parties::new(groups, keep.len())?;
    MultiState::with_parties(profile, parties, HermitianOp::from_matrix_lossy(reduced))
}

/// Transposes the subsystems flagged in `mask`.
pub fn partial_transpose_op(op: &CMat, dims: &[usize], mask: &[bool]) -> CMat {
    let layout = IndexLayout::new(dims);
    let n = layout.total();
    let mut out = CMat::zeros(n, n);
    let masked: Vec<usize> = (0..dims.len()).filter(|&k| mask[k]).collect();
    for i in 0..n {
        for j in 0..n {
            let (mut ii, mut jj) = (i, j);
            for &k in &masked {
                let (di, dj) = (layout.digit(i, k), layout.digit(j, k));
                let s = layout.stride(k);
                ii = ii - di * s + dj * s;
                jj = jj - dj * s + di * s;
            }
            out[(ii, jj)] = op[(i, j)];
        }
    }
    out
}

/// Partial transpose across the bipartition that transposes the listed
/// parties. The cut must leave both sides non-empty.
pub fn partial_transpose(rho: &MultiState, transposed_parties: &[usize]) -> Result<HermitianOp> {
    let k = rho.parties().count();
    if transposed_parties.is_empty()
        || transposed_parties.len() >= k
        || transposed_parties.iter().any(|&p| p >= k)
    {
        return Err(Error::InvalidSubsystems(format!(
            "cut {transposed_parties:?} is not a proper bipartition of {k} parties"
        )));
    }
    let mask = rho
        .parties()
        .mask(transposed_parties, rho.profile().len());
    Ok(HermitianOp::from_matrix_lossy(partial_transpose_op(
        rho.matrix(),
        rho.profile().dims(),
        &mask,
    )))
}

/// Partial transpose of a Hermitian operator over a profile.
pub(crate) fn partial_transpose_herm(op: &HermitianOp, profile: &DimProfile, mask: &[bool]) -> HermitianOp {
    HermitianOp::from_matrix_lossy(partial_transpose_op(op.matrix(), profile.dims(), mask))
}
