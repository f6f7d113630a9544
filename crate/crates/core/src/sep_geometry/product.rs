//! Maximization of `⟨v|h|v⟩` over product vectors `v = ⊗_p v_p` by
//! alternating local eigenvector updates.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::states::random_unit_vector;
use crate::tensor_core::{c64, eigh, CMat, CVec, DimProfile, HermitianOp, IndexLayout, Parties};

pub const DEFAULT_RESTARTS: usize = 32;
pub const SWEEP_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 500;

/// Local optimum of the product overlap.
#[derive(Clone, Debug)]
pub struct ProductOptimum {
    pub value: f64,
    /// Unit vector per party.
    pub locals: Vec<CVec>,
    /// `⊗_p locals[p]` in the full space.
    pub vector: CVec,
    pub restart: usize,
}

/// For each party, the party-local index of every full composite index.
pub(crate) fn party_indices(profile: &DimProfile, parties: &Parties) -> Vec<Vec<usize>> {
    let layout = IndexLayout::new(profile.dims());
    parties
        .groups()
        .iter()
        .map(|g| (0..profile.total()).map(|i| layout.sub_index(i, g)).collect())
        .collect()
}

/// `⊗_p locals[p]` arranged in the full composite index.
pub fn embed_product(profile: &DimProfile, parties: &Parties, locals: &[CVec]) -> CVec {
    let idx = party_indices(profile, parties);
    embed_with(&idx, locals)
}

fn embed_with(idx: &[Vec<usize>], locals: &[CVec]) -> CVec {
    let total = idx.first().map_or(1, |v| v.len());
    CVec::from_fn(total, |i, _| {
        idx.iter()
            .zip(locals)
            .fold(c64(1.0, 0.0), |acc, (ix, v)| acc * v[ix[i]])
    })
}

/// Makes the first non-negligible entry real and positive.
pub(crate) fn canonical_phase(mut v: CVec) -> CVec {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let ph = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= ph);
    }
    v
}

/// Effective operator on party `p` with every other party fixed.
fn contract(h: &CMat, idx: &[Vec<usize>], locals: &[CVec], p: usize, dp: usize) -> HermitianOp {
    let total = h.nrows();
    let mut r = CMat::zeros(total, dp);
    for i in 0..total {
        let amp = idx
            .iter()
            .zip(locals)
            .enumerate()
            .filter(|(q, _)| *q != p)
            .fold(c64(1.0, 0.0), |acc, (_, (ix, v))| acc * v[ix[i]]);
        r[(i, idx[p][i])] = amp;
    }
    HermitianOp::from_matrix_lossy(r.adjoint() * h * r)
}

fn ascend(h: &CMat, idx: &[Vec<usize>], dims: &[usize], mut locals: Vec<CVec>) -> (f64, Vec<CVec>) {
    let mut value = f64::NEG_INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut current = value;
        for p in 0..dims.len() {
            let hp = contract(h, idx, &locals, p, dims[p]);
            let (top, v) = eigh(&hp).top();
            // accept only non-decreasing updates
            if top >= current || current == f64::NEG_INFINITY {
                locals[p] = v;
                current = top;
            }
        }
        let done = current - value <= SWEEP_TOL;
        value = current;
        if done {
            break;
        }
    }
    let locals = locals.into_iter().map(canonical_phase).collect();
    (value, locals)
}

/// Deterministic start: each party takes the top eigenvector of the
/// reduced operator of `h`'s top eigenvector.
fn spectral_start(h: &HermitianOp, idx: &[Vec<usize>], dims: &[usize]) -> Vec<CVec> {
    let (_, top) = eigh(h).top();
    (0..dims.len())
        .map(|p| {
            let mut red = CMat::zeros(dims[p], dims[p]);
            // group amplitudes by the other parties' joint index
            let mut buckets: std::collections::BTreeMap<Vec<usize>, Vec<(usize, usize)>> =
                Default::default();
            for i in 0..top.len() {
                let key: Vec<usize> = (0..dims.len()).filter(|&q| q != p).map(|q| idx[q][i]).collect();
                buckets.entry(key).or_default().push((idx[p][i], i));
            }
            for entries in buckets.values() {
                for &(a, i) in entries {
                    for &(b, j) in entries {
                        red[(a, b)] += top[i] * top[j].conj();
                    }
                }
            }
            eigh(&HermitianOp::from_matrix_lossy(red)).top().1
        })
        .collect()
}

/// Every restart's local optimum, ordered by restart index. Restart 0 is
/// the deterministic spectral start; the rest are seeded Gaussian starts.
pub fn product_local_optima(
    h: &HermitianOp,
    profile: &DimProfile,
    parties: &Parties,
    restarts: usize,
    seed: u64,
) -> Vec<ProductOptimum> {
    let idx = party_indices(profile, parties);
    let dims = parties.local_dims(profile);
    let restarts = restarts.max(1);
    (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                spectral_start(h, &idx, &dims)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                dims.iter().map(|&d| random_unit_vector(&mut rng, d)).collect()
            };
            let (_, locals) = ascend(h.matrix(), &idx, &dims, start);
            let vector = embed_with(&idx, &locals);
            ProductOptimum {
                value: h.expectation(&vector),
                locals,
                vector,
                restart: r,
            }
        })
        .collect()
}

/// Local optimum reached by ascending from the given product start.
pub(crate) fn ascend_from(h: &HermitianOp, profile: &DimProfile, parties: &Parties, start: Vec<CVec>) -> ProductOptimum {
    let idx = party_indices(profile, parties);
    let dims = parties.local_dims(profile);
    let (_, locals) = ascend(h.matrix(), &idx, &dims, start);
    let vector = embed_with(&idx, &locals);
    ProductOptimum {
        value: h.expectation(&vector),
        locals,
        vector,
        restart: usize::MAX,
    }
}

/// Best local optimum with the parties of `parties`.
pub fn max_product_overlap_parties(
    h: &HermitianOp,
    profile: &DimProfile,
    parties: &Parties,
    restarts: usize,
    seed: u64,
) -> ProductOptimum {
    let all = product_local_optima(h, profile, parties, restarts, seed);
    let mut best: Option<ProductOptimum> = None;
    for o in all {
        match &best {
            Some(b) if o.value <= b.value + 1e-12 => {}
            _ => best = Some(o),
        }
    }
    best.expect("at least one restart")
}

/// Largest `⟨v|h|v⟩` found over fully product unit vectors `v` (one factor
/// per subsystem of `profile`). The value is exactly attained by the
/// returned vector, so it is a lower bound on the true maximum.
pub fn max_product_overlap(
    h: &HermitianOp,
    profile: &DimProfile,
    restarts: usize,
    seed: u64,
) -> (f64, CVec) {
    let parties = Parties::singletons(profile.len());
    let best = max_product_overlap_parties(h, profile, &parties, restarts, seed);
    (best.value, best.vector)
}

/// Distinct local optima above `threshold`, best first, at most `limit`.
pub(crate) fn distinct_optima(mut all: Vec<ProductOptimum>, threshold: f64, limit: usize) -> Vec<ProductOptimum> {
    all.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.restart.cmp(&b.restart)));
    let mut out: Vec<ProductOptimum> = Vec::new();
    for o in all {
        if o.value <= threshold || out.len() >= limit {
            continue;
        }
        if out
            .iter()
            .all(|k| k.vector.dotc(&o.vector).norm() < 1.0 - 1e-8)
        {
            out.push(o);
        }
    }
    out
}

/// Product basis that spans all operators on each party:
/// `|j⟩`, `(|j⟩+|k⟩)/√2`, `(|j⟩+i|k⟩)/√2` per party, all combinations.
pub fn tomographic_products(profile: &DimProfile, parties: &Parties) -> Vec<Vec<CVec>> {
    let dims = parties.local_dims(profile);
    let local_sets: Vec<Vec<CVec>> = dims.iter().map(|&d| local_frame(d)).collect();
    let mut out: Vec<Vec<CVec>> = vec![Vec::new()];
    for set in &local_sets {
        let mut next = Vec::with_capacity(out.len() * set.len());
        for prefix in &out {
            for v in set {
                let mut t = prefix.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn local_frame(d: usize) -> Vec<CVec> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut e = CVec::zeros(d);
        e[j] = c64(1.0, 0.0);
        out.push(e);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut a = CVec::zeros(d);
            a[j] = c64(s, 0.0);
            a[k] = c64(s, 0.0);
            out.push(a);
            let mut b = CVec::zeros(d);
            b[j] = c64(s, 0.0);
            b[k] = c64(0.0, s);
            out.push(b);
        }
    }
    out
}

/// Computational-basis products, which sum to the identity.
pub fn basis_products(profile: &DimProfile, parties: &Parties) -> Vec<Vec<CVec>> {
    let dims = parties.local_dims(profile);
    let mut out: Vec<Vec<CVec>> = vec![Vec::new()];
    for &d in &dims {
        let mut next = Vec::with_capacity(out.len() * d);
        for prefix in &out {
            for j in 0..d {
                let mut e = CVec::zeros(d);
                e[j] = c64(1.0, 0.0);
                let mut t = prefix.clone();
                t.push(e);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Real coordinates of a Hermitian matrix: diagonal, then real and
/// imaginary parts of the strict upper triangle.
fn hermitian_coords(h: &CMat) -> Vec<f64> {
    let d = h.nrows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(h[(i, i)].re);
    }
    for i in 0..d {
        for j in i + 1..d {
            out.push(h[(i, j)].re);
            out.push(h[(i, j)].im);
        }
    }
    out
}

/// Expands a Hermitian operator in the product basis of
/// [`tomographic_products`]: `h = Σ_k c_k |v_k⟩⟨v_k|` with real `c_k`.
pub fn product_expansion(
    h: &HermitianOp,
    profile: &DimProfile,
    parties: &Parties,
) -> crate::error::Result<(Vec<Vec<CVec>>, Vec<f64>)> {
    let atoms = tomographic_products(profile, parties);
    let d = profile.total();
    let mut a = nalgebra::DMatrix::<f64>::zeros(d * d, atoms.len());
    for (k, locals) in atoms.iter().enumerate() {
        let v = embed_product(profile, parties, locals);
        let coords = hermitian_coords(&(&v * v.adjoint()));
        for (r, x) in coords.into_iter().enumerate() {
            a[(r, k)] = x;
        }
    }
    let b = nalgebra::DVector::from_vec(hermitian_coords(h.matrix()));
    let c = a
        .lu()
        .solve(&b)
        .ok_or_else(|| crate::error::Error::Solver("product basis is singular".into()))?;
    Ok((atoms, c.iter().copied().collect()))
}
