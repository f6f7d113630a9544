use nalgebra::linalg::SymmetricEigen;

use super::{c64, CMat, HermitianOp};

/// Eigendecomposition of a Hermitian operator: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvector of the largest eigenvalue; among eigenvalues tied with
    /// the maximum to within `1e-12` the lowest sorted index wins.
    pub fn top(&self) -> (f64, super::CVec) {
        let max = *self.values.last().expect("non-empty spectrum");
        let idx = self
            .values
            .iter()
            .position(|&v| v >= max - 1e-12)
            .expect("maximum is present");
        (self.values[idx], self.vectors.column(idx).into_owned())
    }
}

pub fn eigh(h: &HermitianOp) -> Eigh {
    let n = h.dim();
    if n == 0 {
        return Eigh {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(h.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Eigh { values, vectors }
}

/// `V f(Λ) V†`.
pub fn apply_fn(e: &Eigh, f: impl Fn(f64) -> f64) -> HermitianOp {
    let n = e.dim();
    let mut scaled = e.vectors.clone();
    for k in 0..n {
        let s = f(e.values[k]);
        for i in 0..n {
            scaled[(i, k)] *= s;
        }
    }
    HermitianOp::from_matrix_lossy(scaled * e.vectors.adjoint())
}

/// `‖h‖₁ = Σ|λᵢ|`.
pub fn trace_norm(h: &HermitianOp) -> f64 {
    eigh(h).values.iter().map(|v| v.abs()).sum()
}

/// `tr(h)₊ = Σ max(λᵢ, 0)`.
pub fn positive_part_trace(h: &HermitianOp) -> f64 {
    eigh(h).values.iter().map(|v| v.max(0.0)).sum()
}

/// Fréchet derivative of the natural logarithm at `σ = V Λ V†` (all
/// eigenvalues positive) applied to the direction `x`:
/// `V (Γ ∘ V†xV) V†` with `Γ_kl = (ln λ_k − ln λ_l)/(λ_k − λ_l)`.
pub fn log_derivative(sigma: &Eigh, x: &HermitianOp) -> HermitianOp {
    let n = sigma.dim();
    let v = &sigma.vectors;
    let mut y = v.adjoint() * x.matrix() * v;
    for k in 0..n {
        for l in 0..n {
            let (a, b) = (sigma.values[k], sigma.values[l]);
            let g = if (a - b).abs() <= 1e-12 * a.max(b) {
                2.0 / (a + b)
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            y[(k, l)] *= c64(g, 0.0);
        }
    }
    HermitianOp::from_matrix_lossy(v * y * v.adjoint())
}
