//! Infeasible-start primal-dual interior-point method (HKM direction with
//! Mehrotra predictor-corrector) for
//!
//! ```text
//!   min cᵀx   s.t.  Z_b = Σ_i x_i F_{b,i} − F_{b,0} ⪰ 0,   E x = f
//!   max Σ_b tr(F_{b,0} Y_b) + fᵀw   s.t.  Σ_b 𝒜_b(Y_b) + Eᵀw = c,  Y_b ⪰ 0
//! ```
//!
//! where `𝒜_b(Y)_i = Re tr(F_{b,i} Y)`. All 1×1 blocks are gathered into one
//! diagonal (LP) block. If the main solve does not converge, a phase-I
//! program decides whether the constraints are strictly infeasible.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::cone::SolveStatus;
use crate::error::{Error, Result};
use crate::tensor_core::{c64, CMat, CVec, C64};

pub(crate) type Triplets = Vec<(usize, usize, C64)>;

/// Constraint matrix of one coordinate inside one block.
#[derive(Clone, Debug)]
pub(crate) enum Basis {
    Sparse(Triplets),
    /// `s·|a⟩⟨a|`.
    Rank1(CVec, f64),
}

impl Basis {
    /// `Re tr(F·Y)`.
    pub(crate) fn re_trace(&self, y: &CMat) -> f64 {
        match self {
            Basis::Sparse(t) => re_trace(t, y),
            Basis::Rank1(a, s) => s * a.dotc(&(y * a)).re,
        }
    }

    fn add_to(&self, out: &mut CMat, x: f64) {
        match self {
            Basis::Sparse(t) => {
                for &(r, c, v) in t {
                    out[(r, c)] += v * x;
                }
            }
            Basis::Rank1(a, s) => {
                let f = c64(s * x, 0.0);
                for j in 0..a.len() {
                    let aj = a[j].conj() * f;
                    for i in 0..a.len() {
                        out[(i, j)] += a[i] * aj;
                    }
                }
            }
        }
    }

    fn norm_sqr(&self) -> f64 {
        match self {
            Basis::Sparse(t) => t.iter().map(|(_, _, v)| v.norm_sqr()).sum(),
            Basis::Rank1(a, s) => (s * a.norm_squared()).powi(2),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IpmSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Run phase-I on failure to certify infeasibility.
    pub diagnose_infeasibility: bool,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 120,
            step_fraction: 0.95,
            diagnose_infeasibility: true,
        }
    }
}

pub(crate) struct DenseBlock {
    dim: usize,
    f0: CMat,
    /// `(coordinate, F_i)` for every coordinate that touches this block.
    terms: Vec<(usize, Basis)>,
}

impl DenseBlock {
    pub(crate) fn new(dim: usize, f0: CMat, terms: Vec<(usize, Basis)>) -> Self {
        Self { dim, f0, terms }
    }
}

#[derive(Default)]
pub(crate) struct LpBlock {
    pub(crate) f0: Vec<f64>,
    /// `(row, coordinate, value)`.
    pub(crate) entries: Vec<(usize, usize, f64)>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl LpBlock {
    pub(crate) fn finalize(&mut self, _m: usize) {
        let mut rows = vec![Vec::new(); self.f0.len()];
        for &(r, g, v) in &self.entries {
            rows[r].push((g, v));
        }
        self.rows = rows;
    }

    fn len(&self) -> usize {
        self.f0.len()
    }
}

pub(crate) struct Compiled {
    m: usize,
    c: Vec<f64>,
    dense: Vec<DenseBlock>,
    lp: LpBlock,
    /// Independent equality rows and the original row index of each.
    eq: DMatrix<f64>,
    f: DVector<f64>,
    kept_rows: Vec<usize>,
    total_rows: usize,
    /// Dropped dependent rows were inconsistent with the kept ones.
    inconsistent: Option<f64>,
}

/// Raw solver output in coordinate form.
pub(crate) struct RawSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y_dense: Vec<CMat>,
    pub y_lp: Vec<f64>,
    pub w: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub infeasibility: Option<f64>,
}

impl Compiled {
    pub(crate) fn new(
        m: usize,
        c: Vec<f64>,
        dense: Vec<DenseBlock>,
        lp: LpBlock,
        eq_rows: Vec<(Vec<f64>, f64)>,
    ) -> Result<Self> {
        if c.len() != m {
            return Err(Error::MalformedProgram("objective length mismatch".into()));
        }
        // Drop linearly dependent equality rows (modified Gram-Schmidt) and
        // check that the dropped ones are consistent.
        let total_rows = eq_rows.len();
        let mut basis: Vec<(DVector<f64>, f64)> = Vec::new();
        let mut kept_rows = Vec::new();
        let mut inconsistent: Option<f64> = None;
        for (idx, (row, rhs)) in eq_rows.iter().enumerate() {
            let mut v = DVector::from_column_slice(row);
            let mut r = *rhs;
            let norm0 = v.norm();
            if norm0 == 0.0 {
                if rhs.abs() > 1e-9 {
                    inconsistent = Some(inconsistent.unwrap_or(0.0).max(rhs.abs()));
                }
                continue;
            }
            for (q, qr) in &basis {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
                r -= p * qr;
            }
            let n = v.norm();
            if n <= 1e-10 * norm0 {
                if r.abs() > 1e-8 * (1.0 + rhs.abs()) {
                    inconsistent = Some(inconsistent.unwrap_or(0.0).max(r.abs()));
                }
                continue;
            }
            basis.push((v / n, r / n));
            kept_rows.push(idx);
        }
        let mut eq = DMatrix::zeros(kept_rows.len(), m);
        let mut f = DVector::zeros(kept_rows.len());
        for (k, &idx) in kept_rows.iter().enumerate() {
            eq.row_mut(k).copy_from(&DVector::from_column_slice(&eq_rows[idx].0).transpose());
            f[k] = eq_rows[idx].1;
        }
        Ok(Self {
            m,
            c,
            dense,
            lp,
            eq,
            f,
            kept_rows,
            total_rows,
            inconsistent,
        })
    }

    fn n_total(&self) -> usize {
        self.dense.iter().map(|b| b.dim).sum::<usize>() + self.lp.len()
    }

    /// `Σ_i x_i F_{b,i}` for every block.
    fn apply_transpose(&self, x: &[f64]) -> (Vec<CMat>, Vec<f64>) {
        let dense = self
            .dense
            .iter()
            .map(|b| {
                let mut out = CMat::zeros(b.dim, b.dim);
                for (g, t) in &b.terms {
                    let xg = x[*g];
                    if xg != 0.0 {
                        t.add_to(&mut out, xg);
                    }
                }
                out
            })
            .collect();
        let lp = self
            .lp
            .rows
            .iter()
            .map(|row| row.iter().map(|&(g, v)| v * x[g]).sum())
            .collect();
        (dense, lp)
    }

    /// `𝒜(Y)_i = Σ_b Re tr(F_{b,i} Y_b)`.
    fn apply(&self, y_dense: &[CMat], y_lp: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (b, y) in self.dense.iter().zip(y_dense) {
            for (g, t) in &b.terms {
                out[*g] += t.re_trace(y);
            }
        }
        for &(r, g, v) in &self.lp.entries {
            out[g] += v * y_lp[r];
        }
        out
    }
}

/// `Re tr(F·Y)` for sparse `F`.
fn re_trace(t: &Triplets, y: &CMat) -> f64 {
    t.iter()
        .map(|&(r, c, v)| {
            let a = y[(c, r)];
            a.re * v.re - a.im * v.im
        })
        .sum()
}

fn herm(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn identity(d: usize, s: f64) -> CMat {
    CMat::from_diagonal_element(d, d, c64(s, 0.0))
}

fn re_inner(a: &CMat, b: &CMat) -> f64 {
    // Re tr(A B) for Hermitian A, B = Re Σ conj(a_ij) b_ij
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Largest `α ≤ 1` keeping `Z + αΔZ ⪰ 0`, given the Cholesky factor of `Z`.
fn max_step_dense(l: &CMat, dz: &CMat) -> f64 {
    let Some(a) = l.solve_lower_triangular(dz) else {
        return 0.0;
    };
    let Some(w) = l.solve_lower_triangular(&a.adjoint()) else {
        return 0.0;
    };
    let w = herm(&w);
    let min = w
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

fn max_step_lp(z: &[f64], dz: &[f64]) -> f64 {
    z.iter()
        .zip(dz)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&zi, &d)| -zi / d)
        .fold(f64::INFINITY, f64::min)
}

struct Iterate {
    x: Vec<f64>,
    w: DVector<f64>,
    z_dense: Vec<CMat>,
    y_dense: Vec<CMat>,
    z_lp: Vec<f64>,
    y_lp: Vec<f64>,
}

struct Direction {
    dx: Vec<f64>,
    dw: DVector<f64>,
    dz_dense: Vec<CMat>,
    dy_dense: Vec<CMat>,
    dz_lp: Vec<f64>,
    dy_lp: Vec<f64>,
}

struct Factors {
    zinv: Vec<CMat>,
    zchol: Vec<CMat>,
    /// Cholesky of the Schur matrix `M`.
    schur: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    /// Cholesky of `E M⁻¹ Eᵀ` (absent without equalities).
    eq_schur: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    /// `M⁻¹ Eᵀ`.
    m_inv_et: DMatrix<f64>,
}

struct Residuals {
    rp_dense: Vec<CMat>,
    rp_lp: Vec<f64>,
    re: DVector<f64>,
    primal: f64,
    dual: f64,
}

fn cholesky_factor(z: &CMat) -> Option<CMat> {
    z.clone().cholesky().map(|c| c.l())
}

fn schur_matrix(p: &Compiled, it: &Iterate, zinv: &[CMat]) -> DMatrix<f64> {
    let m = p.m;
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for (b, block) in p.dense.iter().enumerate() {
        let y = &it.y_dense[b];
        let zi = &zinv[b];
        let d = block.dim;
        let sparse: Vec<(usize, &Triplets)> = block
            .terms
            .iter()
            .filter_map(|(g, t)| match t {
                Basis::Sparse(tr) => Some((*g, tr)),
                Basis::Rank1(..) => None,
            })
            .collect();
        let rank1: Vec<(usize, &CVec, f64)> = block
            .terms
            .iter()
            .filter_map(|(g, t)| match t {
                Basis::Rank1(a, s) => Some((*g, a, *s)),
                Basis::Sparse(_) => None,
            })
            .collect();

        // Rank-one pairs: M_ij = s_i s_j Re[(A†YA)_ij (A†Z⁻¹A)_ji].
        if !rank1.is_empty() {
            let mut a = CMat::zeros(d, rank1.len());
            for (k, (_, v, _)) in rank1.iter().enumerate() {
                a.set_column(k, v);
            }
            let ya = a.adjoint() * y * &a;
            let za = a.adjoint() * zi * &a;
            for (i, (gi, _, si)) in rank1.iter().enumerate() {
                for (j, (gj, _, sj)) in rank1.iter().enumerate() {
                    let pr = ya[(i, j)] * za[(j, i)];
                    mat[(*gi, *gj)] += si * sj * pr.re;
                }
            }
        }

        // Sparse columns: G_j = Y F_j Z⁻¹ and M_ij = Re tr(F_i G_j).
        let cols: Vec<Vec<(usize, usize, f64, bool)>> = sparse
            .par_iter()
            .map(|(gj, tj)| {
                let g = if tj.len() <= d {
                    let mut g = CMat::zeros(d, d);
                    for &(r, c, v) in tj.iter() {
                        let ycol = y.column(r);
                        let zrow = zi.row(c);
                        for jj in 0..d {
                            let s = zrow[jj] * v;
                            for ii in 0..d {
                                g[(ii, jj)] += ycol[ii] * s;
                            }
                        }
                    }
                    g
                } else {
                    let mut f = CMat::zeros(d, d);
                    for &(r, c, v) in tj.iter() {
                        f[(r, c)] += v;
                    }
                    y * f * zi
                };
                let mut col: Vec<(usize, usize, f64, bool)> = sparse
                    .iter()
                    .map(|(gi, ti)| (*gi, *gj, re_trace(ti, &g), false))
                    .collect();
                col.extend(
                    rank1
                        .iter()
                        .map(|(gi, a, s)| (*gi, *gj, s * a.dotc(&(&g * *a)).re, true)),
                );
                col
            })
            .collect();
        for col in cols {
            for (gi, gj, v, mirror) in col {
                mat[(gi, gj)] += v;
                if mirror {
                    mat[(gj, gi)] += v;
                }
            }
        }
    }
    for (r, row) in p.lp.rows.iter().enumerate() {
        let s = it.y_lp[r] / it.z_lp[r];
        for &(gi, vi) in row {
            for &(gj, vj) in row {
                mat[(gi, gj)] += s * vi * vj;
            }
        }
    }
    let t = mat.transpose();
    (mat + t) * 0.5
}

fn factorize(p: &Compiled, it: &Iterate) -> Option<Factors> {
    let mut zinv = Vec::with_capacity(p.dense.len());
    let mut zchol = Vec::with_capacity(p.dense.len());
    for z in &it.z_dense {
        let ch = z.clone().cholesky()?;
        zinv.push(herm(&ch.inverse()));
        zchol.push(ch.l());
    }
    let mut m = schur_matrix(p, it, &zinv);
    let scale = (0..p.m).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut schur = None;
    for k in 0..8 {
        let reg = if k == 0 { 0.0 } else { scale * 1e-14 * 100f64.powi(k - 1) };
        let mut mm = m.clone();
        for i in 0..p.m {
            mm[(i, i)] += reg;
        }
        if let Some(c) = mm.cholesky() {
            schur = Some(c);
            break;
        }
    }
    let schur = schur?;
    m = DMatrix::zeros(0, 0);
    drop(m);
    let (eq_schur, m_inv_et) = if p.eq.nrows() > 0 {
        let m_inv_et = schur.solve(&p.eq.transpose());
        let s = &p.eq * &m_inv_et;
        let s = (&s + s.transpose()) * 0.5;
        let sc = (0..s.nrows()).map(|i| s[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut fac = None;
        for k in 0..8 {
            let reg = if k == 0 { 0.0 } else { sc * 1e-14 * 100f64.powi(k - 1) };
            let mut ss = s.clone();
            for i in 0..ss.nrows() {
                ss[(i, i)] += reg;
            }
            if let Some(c) = ss.cholesky() {
                fac = Some(c);
                break;
            }
        }
        (Some(fac?), m_inv_et)
    } else {
        (None, DMatrix::zeros(p.m, 0))
    };
    Some(Factors {
        zinv,
        zchol,
        schur,
        eq_schur,
        m_inv_et,
    })
}

fn residuals(p: &Compiled, it: &Iterate) -> Residuals {
    let (ax_dense, ax_lp) = p.apply_transpose(&it.x);
    let rp_dense: Vec<CMat> = ax_dense
        .iter()
        .zip(&p.dense)
        .zip(&it.z_dense)
        .map(|((ax, b), z)| ax - &b.f0 - z)
        .collect();
    let rp_lp: Vec<f64> = ax_lp
        .iter()
        .zip(&p.lp.f0)
        .zip(&it.z_lp)
        .map(|((a, f), z)| a - f - z)
        .collect();
    let ay = p.apply(&it.y_dense, &it.y_lp);
    let etw = p.eq.transpose() * &it.w;
    let rd: Vec<f64> = (0..p.m).map(|i| p.c[i] - ay[i] - etw[i]).collect();
    let x = DVector::from_column_slice(&it.x);
    let re = &p.f - &p.eq * &x;

    let f0_norm = (p.dense.iter().map(|b| frob(&b.f0).powi(2)).sum::<f64>()
        + p.lp.f0.iter().map(|v| v * v).sum::<f64>())
    .sqrt();
    let rp_norm = (rp_dense.iter().map(|r| frob(r).powi(2)).sum::<f64>()
        + rp_lp.iter().map(|v| v * v).sum::<f64>())
    .sqrt();
    let primal = (rp_norm / (1.0 + f0_norm)).max(re.norm() / (1.0 + p.f.norm()));
    let c_norm = p.c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dual = rd.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + c_norm);
    Residuals {
        rp_dense,
        rp_lp,
        re,
        primal,
        dual,
    }
}

/// Newton direction for target `mu` with optional corrector terms
/// `Q_b = ΔY_aff ΔZ_aff Z⁻¹`.
fn direction(
    p: &Compiled,
    it: &Iterate,
    fac: &Factors,
    res: &Residuals,
    mu: f64,
    corrector: Option<&Direction>,
) -> Direction {
    // right-hand side g = 𝒜(μZ⁻¹ − Y R_p Z⁻¹ − Q) − c + Eᵀw
    let mut rhs_dense = Vec::with_capacity(p.dense.len());
    for (b, block) in p.dense.iter().enumerate() {
        let zi = &fac.zinv[b];
        let y = &it.y_dense[b];
        let mut t = zi * c64(mu, 0.0) - y * &res.rp_dense[b] * zi;
        if let Some(cor) = corrector {
            t -= &cor.dy_dense[b] * &cor.dz_dense[b] * zi;
        }
        let _ = block;
        rhs_dense.push(t);
    }
    let rhs_lp: Vec<f64> = (0..p.lp.len())
        .map(|r| {
            let z = it.z_lp[r];
            let y = it.y_lp[r];
            let mut t = mu / z - y * res.rp_lp[r] / z;
            if let Some(cor) = corrector {
                t -= cor.dy_lp[r] * cor.dz_lp[r] / z;
            }
            t
        })
        .collect();
    let a = p.apply(&rhs_dense, &rhs_lp);
    let etw = p.eq.transpose() * &it.w;
    let g = DVector::from_iterator(p.m, (0..p.m).map(|i| a[i] - p.c[i] + etw[i]));

    let m_inv_g = fac.schur.solve(&g);
    let (dx, dw) = if let Some(es) = &fac.eq_schur {
        let r = &res.re - &p.eq * &m_inv_g;
        let dw = es.solve(&r);
        let dx = &m_inv_g + &fac.m_inv_et * &dw;
        (dx, dw)
    } else {
        (m_inv_g, DVector::zeros(0))
    };
    let dx: Vec<f64> = dx.iter().copied().collect();

    let (adx_dense, adx_lp) = p.apply_transpose(&dx);
    let mut dz_dense = Vec::with_capacity(p.dense.len());
    let mut dy_dense = Vec::with_capacity(p.dense.len());
    for b in 0..p.dense.len() {
        let dz = &adx_dense[b] + &res.rp_dense[b];
        let zi = &fac.zinv[b];
        let y = &it.y_dense[b];
        let mut dy = zi * c64(mu, 0.0) - y - y * &dz * zi;
        if let Some(cor) = corrector {
            dy -= &cor.dy_dense[b] * &cor.dz_dense[b] * zi;
        }
        dy_dense.push(herm(&dy));
        dz_dense.push(dz);
    }
    let mut dz_lp = Vec::with_capacity(p.lp.len());
    let mut dy_lp = Vec::with_capacity(p.lp.len());
    for r in 0..p.lp.len() {
        let dz = adx_lp[r] + res.rp_lp[r];
        let z = it.z_lp[r];
        let y = it.y_lp[r];
        let mut dy = mu / z - y - y * dz / z;
        if let Some(cor) = corrector {
            dy -= cor.dy_lp[r] * cor.dz_lp[r] / z;
        }
        dz_lp.push(dz);
        dy_lp.push(dy);
    }
    Direction {
        dx,
        dw,
        dz_dense,
        dy_dense,
        dz_lp,
        dy_lp,
    }
}

fn step_lengths(p: &Compiled, it: &Iterate, fac: &Factors, d: &Direction) -> (f64, f64) {
    let mut ap = max_step_lp(&it.z_lp, &d.dz_lp);
    let mut ad = max_step_lp(&it.y_lp, &d.dy_lp);
    for b in 0..p.dense.len() {
        ap = ap.min(max_step_dense(&fac.zchol[b], &d.dz_dense[b]));
        match cholesky_factor(&it.y_dense[b]) {
            Some(l) => ad = ad.min(max_step_dense(&l, &d.dy_dense[b])),
            None => ad = 0.0,
        }
    }
    (ap, ad)
}

fn complementarity(it: &Iterate) -> f64 {
    it.z_dense
        .iter()
        .zip(&it.y_dense)
        .map(|(z, y)| re_inner(z, y))
        .sum::<f64>()
        + it.z_lp.iter().zip(&it.y_lp).map(|(z, y)| z * y).sum::<f64>()
}

fn objectives(p: &Compiled, it: &Iterate) -> (f64, f64) {
    let pobj: f64 = p.c.iter().zip(&it.x).map(|(c, x)| c * x).sum();
    let dobj = p
        .dense
        .iter()
        .zip(&it.y_dense)
        .map(|(b, y)| re_inner(&b.f0, y))
        .sum::<f64>()
        + p.lp.f0.iter().zip(&it.y_lp).map(|(f, y)| f * y).sum::<f64>()
        + p.f.dot(&it.w);
    (pobj, dobj)
}

fn initial_iterate(p: &Compiled) -> Iterate {
    let n = p.n_total().max(1) as f64;
    let mut f_norms = vec![0.0f64; p.m];
    for b in &p.dense {
        for (g, t) in &b.terms {
            f_norms[*g] += t.norm_sqr();
        }
    }
    for &(_, g, v) in &p.lp.entries {
        f_norms[g] += v * v;
    }
    let f_norms: Vec<f64> = f_norms.into_iter().map(f64::sqrt).collect();
    let alpha = (0..p.m)
        .map(|i| (1.0 + p.c[i].abs()) / (1.0 + f_norms[i]))
        .fold(1.0f64, f64::max)
        * n;
    let f0_norm = p
        .dense
        .iter()
        .map(|b| frob(&b.f0))
        .chain(p.lp.f0.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let beta = (1.0 + f_norms.iter().copied().fold(f0_norm, f64::max)) / n.sqrt();
    let (alpha, beta) = (10.0 * alpha, 10.0 * beta);
    Iterate {
        x: vec![0.0; p.m],
        w: DVector::zeros(p.eq.nrows()),
        z_dense: p.dense.iter().map(|b| identity(b.dim, beta)).collect(),
        y_dense: p.dense.iter().map(|b| identity(b.dim, alpha)).collect(),
        z_lp: vec![beta; p.lp.len()],
        y_lp: vec![alpha; p.lp.len()],
    }
}

fn advance(it: &mut Iterate, d: &Direction, ap: f64, ad: f64) {
    for (x, dx) in it.x.iter_mut().zip(&d.dx) {
        *x += ap * dx;
    }
    it.w += &d.dw * ad;
    for (z, dz) in it.z_dense.iter_mut().zip(&d.dz_dense) {
        *z = herm(&(&*z + dz * c64(ap, 0.0)));
    }
    for (y, dy) in it.y_dense.iter_mut().zip(&d.dy_dense) {
        *y = herm(&(&*y + dy * c64(ad, 0.0)));
    }
    for (z, dz) in it.z_lp.iter_mut().zip(&d.dz_lp) {
        *z += ap * dz;
    }
    for (y, dy) in it.y_lp.iter_mut().zip(&d.dy_lp) {
        *y += ad * dy;
    }
}

struct Outcome {
    status: SolveStatus,
    it: Iterate,
    pobj: f64,
    dobj: f64,
    primal: f64,
    dual: f64,
    iterations: usize,
}

fn run(p: &Compiled, settings: &IpmSettings) -> Outcome {
    let tol = settings.tol;
    let n = p.n_total().max(1) as f64;
    let mut it = initial_iterate(p);
    let mut last = None;
    let mut stalls = 0;
    for k in 0..settings.max_iter {
        let res = residuals(p, &it);
        let (pobj, dobj) = objectives(p, &it);
        let comp = complementarity(&it);
        let scale = 1.0 + pobj.abs() + dobj.abs();
        let gap = (pobj - dobj).abs() / scale;
        if res.primal <= tol && res.dual <= tol && gap <= tol && comp.abs() / scale <= tol {
            return Outcome {
                status: SolveStatus::Optimal,
                it,
                pobj,
                dobj,
                primal: res.primal,
                dual: res.dual,
                iterations: k,
            };
        }
        let x_norm = it.x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let y_norm = it
            .y_dense
            .iter()
            .map(frob)
            .chain(it.y_lp.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        if !x_norm.is_finite() || !y_norm.is_finite() || x_norm > 1e12 || y_norm > 1e12 {
            break;
        }
        let Some(fac) = factorize(p, &it) else {
            break;
        };
        let mu = comp / n;
        let aff = direction(p, &it, &fac, &res, 0.0, None);
        let (ap, ad) = step_lengths(p, &it, &fac, &aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        // predicted complementarity after the affine step
        let mut trial = Iterate {
            x: Vec::new(),
            w: DVector::zeros(0),
            z_dense: it
                .z_dense
                .iter()
                .zip(&aff.dz_dense)
                .map(|(z, dz)| z + dz * c64(ap, 0.0))
                .collect(),
            y_dense: it
                .y_dense
                .iter()
                .zip(&aff.dy_dense)
                .map(|(y, dy)| y + dy * c64(ad, 0.0))
                .collect(),
            z_lp: it.z_lp.iter().zip(&aff.dz_lp).map(|(z, d)| z + ap * d).collect(),
            y_lp: it.y_lp.iter().zip(&aff.dy_lp).map(|(y, d)| y + ad * d).collect(),
        };
        let mu_aff = complementarity(&trial) / n;
        trial.z_dense.clear();
        let sigma = if mu > 0.0 {
            (mu_aff / mu).max(0.0).powi(3).min(1.0)
        } else {
            0.0
        };
        let dir = direction(p, &it, &fac, &res, sigma * mu, Some(&aff));
        let (ap, ad) = step_lengths(p, &it, &fac, &dir);
        let tau = settings.step_fraction;
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls > 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        advance(&mut it, &dir, ap, ad);
        last = Some(k + 1);
    }
    let res = residuals(p, &it);
    let (pobj, dobj) = objectives(p, &it);
    Outcome {
        status: SolveStatus::MaxIter,
        it,
        pobj,
        dobj,
        primal: res.primal,
        dual: res.dual,
        iterations: last.unwrap_or(0),
    }
}

/// Phase-I program: `min t` subject to every block `+ t·I ⪰ 0`, the same
/// equalities, and `t ≥ −1`.
fn phase_one(p: &Compiled) -> Compiled {
    let m = p.m + 1;
    let mut c = vec![0.0; m];
    c[p.m] = 1.0;
    let dense = p
        .dense
        .iter()
        .map(|b| {
            let mut terms = b.terms.clone();
            terms.push((
                p.m,
                Basis::Sparse((0..b.dim).map(|i| (i, i, c64(1.0, 0.0))).collect()),
            ));
            DenseBlock::new(b.dim, b.f0.clone(), terms)
        })
        .collect();
    let mut lp = LpBlock {
        f0: p.lp.f0.clone(),
        entries: p.lp.entries.clone(),
        rows: Vec::new(),
    };
    for r in 0..p.lp.len() {
        lp.entries.push((r, p.m, 1.0));
    }
    let row = lp.f0.len();
    lp.f0.push(-1.0);
    lp.entries.push((row, p.m, 1.0));
    lp.finalize(m);
    let mut eq = DMatrix::zeros(p.eq.nrows(), m);
    eq.view_mut((0, 0), (p.eq.nrows(), p.m)).copy_from(&p.eq);
    Compiled {
        m,
        c,
        dense,
        lp,
        eq,
        f: p.f.clone(),
        kept_rows: p.kept_rows.clone(),
        total_rows: p.total_rows,
        inconsistent: None,
    }
}

fn infeasible_solution(p: &Compiled, violation: f64, iterations: usize) -> RawSolution {
    RawSolution {
        status: SolveStatus::Infeasible,
        x: vec![f64::NAN; p.m],
        y_dense: p.dense.iter().map(|b| CMat::zeros(b.dim, b.dim)).collect(),
        y_lp: vec![0.0; p.lp.len()],
        w: vec![0.0; p.total_rows],
        primal_objective: f64::INFINITY,
        dual_objective: f64::INFINITY,
        primal_residual: f64::INFINITY,
        dual_residual: 0.0,
        iterations,
        infeasibility: Some(violation),
    }
}

pub(crate) fn solve(p: &Compiled, settings: &IpmSettings) -> Result<RawSolution> {
    if let Some(v) = p.inconsistent {
        return Ok(infeasible_solution(p, v, 0));
    }
    let out = run(p, settings);
    let mut infeasibility = None;
    if out.status != SolveStatus::Optimal && settings.diagnose_infeasibility {
        let phase = phase_one(p);
        let sub = IpmSettings {
            diagnose_infeasibility: false,
            ..settings.clone()
        };
        let ph = run(&phase, &sub);
        let t = ph.it.x[p.m];
        let threshold = settings.tol.sqrt().max(1e-6);
        if ph.status == SolveStatus::Optimal && t > threshold && ph.dobj > threshold {
            return Ok(infeasible_solution(p, ph.dobj.min(t), out.iterations + ph.iterations));
        }
        infeasibility = Some(t);
    }
    let mut w = vec![0.0; p.total_rows];
    for (k, &idx) in p.kept_rows.iter().enumerate() {
        w[idx] = out.it.w[k];
    }
    Ok(RawSolution {
        status: out.status,
        x: out.it.x,
        y_dense: out.it.y_dense,
        y_lp: out.it.y_lp,
        w,
        primal_objective: out.pobj,
        dual_objective: out.dobj,
        primal_residual: out.primal,
        dual_residual: out.dual,
        iterations: out.iterations,
        infeasibility,
    })
}
