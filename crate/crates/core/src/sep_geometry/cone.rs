//! Small dense cone programs over Hermitian matrix variables.
//!
//! A [`ConeProgram`] minimizes a real-linear objective over Hermitian
//! matrix variables, real scalars and nonnegative combinations of fixed
//! rank-one atoms, subject to
//!
//! * affine Hermitian expressions constrained to the PSD cone (partial
//!   transposes of variables are allowed, which yields PPT constraints),
//! * scalar linear equalities,
//! * Hermitian matrix equalities.
//!
//! Programs compile to the linear-matrix-inequality form consumed by the
//! interior-point solver in [`super::ipm`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor_core::{c64, partial_transpose_op, CMat, CVec, HermitianOp, IndexLayout};

use super::ipm::{self, Basis, Compiled, DenseBlock, LpBlock, Triplets};
pub use super::ipm::IpmSettings;

/// Largest accepted sum of variable dimensions.
pub const MAX_TOTAL_DIM: usize = 200;
/// Largest accepted number of real coordinates (size of the Schur system).
pub const MAX_COORDINATES: usize = 4200;

/// Handle to a program variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

/// Handle to a PSD constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PsdId(usize);

/// Handle to a scalar equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EqId(usize);

/// Handle to a matrix equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatEqId(usize);

#[derive(Clone, Debug)]
pub enum VarKind {
    /// Free Hermitian `dim × dim` matrix.
    Hermitian { dim: usize },
    /// Free real scalar.
    Scalar,
    /// `Σ_j w_j |a_j⟩⟨a_j|` with `w ≥ 0`; the weights are the coordinates.
    Atoms { dim: usize, atoms: Arc<Vec<CVec>> },
}

impl VarKind {
    pub fn dim(&self) -> usize {
        match self {
            VarKind::Hermitian { dim } | VarKind::Atoms { dim, .. } => *dim,
            VarKind::Scalar => 1,
        }
    }

    fn coordinates(&self) -> usize {
        match self {
            VarKind::Hermitian { dim } => dim * dim,
            VarKind::Scalar => 1,
            VarKind::Atoms { atoms, .. } => atoms.len(),
        }
    }
}

/// Linear map taking a variable into a constraint space.
#[derive(Clone, Debug)]
pub enum Map {
    /// `X ↦ s·X`.
    Scale(f64),
    /// `X ↦ s·X^{T_mask}` over the local dimensions `dims`.
    PartialTranspose {
        dims: Vec<usize>,
        mask: Vec<bool>,
        scale: f64,
    },
    /// `X ↦ Re tr(coef·X) · out`.
    Functional { coef: HermitianOp, out: HermitianOp },
}

impl Map {
    fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            Map::Functional { out, .. } => out.dim(),
            _ => input_dim,
        }
    }

    fn apply(&self, x: &CMat) -> CMat {
        match self {
            Map::Scale(s) => x.map(|z| z * *s),
            Map::PartialTranspose { dims, mask, scale } => {
                partial_transpose_op(x, dims, mask).map(|z| z * *scale)
            }
            Map::Functional { coef, out } => {
                let s = crate::tensor_core::hs_inner(coef.matrix(), x);
                out.matrix().map(|z| z * s)
            }
        }
    }

    /// Adjoint with respect to `Re tr(A B)`.
    fn adjoint(&self, y: &CMat) -> CMat {
        match self {
            Map::Scale(s) => y.map(|z| z * *s),
            Map::PartialTranspose { dims, mask, scale } => {
                partial_transpose_op(y, dims, mask).map(|z| z * *scale)
            }
            Map::Functional { coef, out } => {
                let s = crate::tensor_core::hs_inner(out.matrix(), y);
                coef.matrix().map(|z| z * s)
            }
        }
    }
}

/// Affine Hermitian expression `Σ map_k(var_k) + constant`.
#[derive(Clone, Debug)]
pub struct Affine {
    dim: usize,
    terms: Vec<(Var, Map)>,
    constant: CMat,
}

impl Affine {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            constant: CMat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `+ s·X`.
    pub fn var(mut self, var: Var, scale: f64) -> Self {
        self.terms.push((var, Map::Scale(scale)));
        self
    }

    /// `+ s·X^{T_mask}`.
    pub fn var_pt(mut self, var: Var, dims: &[usize], mask: &[bool], scale: f64) -> Self {
        self.terms.push((
            var,
            Map::PartialTranspose {
                dims: dims.to_vec(),
                mask: mask.to_vec(),
                scale,
            },
        ));
        self
    }

    /// `+ x·out` for a scalar variable `x`.
    pub fn scalar(mut self, var: Var, out: &HermitianOp) -> Self {
        self.terms.push((
            var,
            Map::Functional {
                coef: HermitianOp::identity(1),
                out: out.clone(),
            },
        ));
        self
    }

    /// `+ Re tr(coef·X) · out`.
    pub fn functional(mut self, var: Var, coef: &HermitianOp, out: &HermitianOp) -> Self {
        self.terms.push((
            var,
            Map::Functional {
                coef: coef.clone(),
                out: out.clone(),
            },
        ));
        self
    }

    /// `+ s·c`.
    pub fn constant(mut self, c: &HermitianOp, s: f64) -> Self {
        self.constant += c.matrix().map(|z| z * s);
        self
    }

    /// `+ s·I`.
    pub fn constant_identity(mut self, s: f64) -> Self {
        for i in 0..self.dim {
            self.constant[(i, i)] += c64(s, 0.0);
        }
        self
    }
}

#[derive(Clone, Debug)]
struct ScalarEq {
    terms: Vec<(Var, HermitianOp)>,
    rhs: f64,
}

/// Dense cone program; see the module docs.
#[derive(Clone, Debug, Default)]
pub struct ConeProgram {
    vars: Vec<VarKind>,
    objective: Vec<(Var, HermitianOp)>,
    objective_constant: f64,
    psd: Vec<Affine>,
    eqs: Vec<ScalarEq>,
    mat_eqs: Vec<Affine>,
}

/// Terminal state of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug)]
pub enum VarValue {
    Hermitian(HermitianOp),
    Scalar(f64),
    Weights(Vec<f64>),
}

/// Primal and dual solution of a [`ConeProgram`].
#[derive(Clone, Debug)]
pub struct ConeSolution {
    pub status: SolveStatus,
    /// Primal objective (including the constant term).
    pub objective: f64,
    /// Dual objective (including the constant term).
    pub dual_objective: f64,
    /// `|objective − dual_objective| / (1 + |objective| + |dual_objective|)`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Phase-I optimum when infeasibility was diagnosed.
    pub infeasibility: Option<f64>,
    values: Vec<VarValue>,
    psd_duals: Vec<HermitianOp>,
    eq_duals: Vec<f64>,
    mat_eq_duals: Vec<HermitianOp>,
}

impl ConeSolution {
    pub fn value(&self, var: Var) -> &VarValue {
        &self.values[var.0]
    }

    pub fn hermitian(&self, var: Var) -> &HermitianOp {
        match &self.values[var.0] {
            VarValue::Hermitian(h) => h,
            other => panic!("variable {var:?} is not Hermitian: {other:?}"),
        }
    }

    pub fn scalar(&self, var: Var) -> f64 {
        match &self.values[var.0] {
            VarValue::Scalar(x) => *x,
            other => panic!("variable {var:?} is not scalar: {other:?}"),
        }
    }

    pub fn weights(&self, var: Var) -> &[f64] {
        match &self.values[var.0] {
            VarValue::Weights(w) => w,
            other => panic!("variable {var:?} is not an atom cone: {other:?}"),
        }
    }

    /// Dual matrix paired with a PSD constraint.
    pub fn psd_dual(&self, id: PsdId) -> &HermitianOp {
        &self.psd_duals[id.0]
    }

    pub fn eq_dual(&self, id: EqId) -> f64 {
        self.eq_duals[id.0]
    }

    pub fn mat_eq_dual(&self, id: MatEqId) -> &HermitianOp {
        &self.mat_eq_duals[id.0]
    }

    /// Smaller of the primal and dual objectives; a lower bound for a
    /// minimization solved to optimality.
    pub fn lower_value(&self) -> f64 {
        self.objective.min(self.dual_objective)
    }
}

/// Orthonormal (w.r.t. `Re tr(AB)`) Hermitian basis element `g` of
/// `dim × dim` matrices, as nonzero entries.
pub(crate) fn hermitian_basis(dim: usize, g: usize) -> Triplets {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if g < dim {
        return vec![(g, g, c64(1.0, 0.0))];
    }
    let pairs = dim * (dim - 1) / 2;
    let (k, imag) = if g < dim + pairs {
        (g - dim, false)
    } else {
        (g - dim - pairs, true)
    };
    // k-th strictly upper pair in row-major order
    let mut rem = k;
    let mut row = 0;
    while rem >= dim - row - 1 {
        rem -= dim - row - 1;
        row += 1;
    }
    let col = row + 1 + rem;
    if imag {
        vec![(row, col, c64(0.0, s)), (col, row, c64(0.0, -s))]
    } else {
        vec![(row, col, c64(s, 0.0)), (col, row, c64(s, 0.0))]
    }
}

fn dense_to_triplets(m: &CMat) -> Triplets {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cut = 1e-15 * scale.max(1e-300);
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.norm() > cut {
                out.push((i, j, z));
            }
        }
    }
    out
}

fn triplets_to_dense(t: &Triplets, dim: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for &(r, c, v) in t {
        m[(r, c)] += v;
    }
    m
}

fn re_trace_with(coef: &CMat, t: &Triplets) -> f64 {
    // Re tr(coef · B) = Re Σ_{(r,c,v)} coef[c, r] v
    t.iter()
        .map(|&(r, c, v)| {
            let a = coef[(c, r)];
            a.re * v.re - a.im * v.im
        })
        .sum()
}

/// Applies a map to a sparse basis element, staying sparse when possible.
fn map_triplets(map: &Map, basis: &Triplets, in_dim: usize) -> Triplets {
    match map {
        Map::Scale(s) => basis.iter().map(|&(r, c, v)| (r, c, v * *s)).collect(),
        Map::PartialTranspose { dims, mask, scale } => {
            let layout = IndexLayout::new(dims);
            basis
                .iter()
                .map(|&(r, c, v)| {
                    let (mut rr, mut cc) = (r, c);
                    for (k, &m) in mask.iter().enumerate() {
                        if m {
                            let (dr, dc) = (layout.digit(r, k), layout.digit(c, k));
                            let st = layout.stride(k);
                            rr = rr - dr * st + dc * st;
                            cc = cc - dc * st + dr * st;
                        }
                    }
                    (rr, cc, v * *scale)
                })
                .collect()
        }
        Map::Functional { coef, out } => {
            debug_assert_eq!(coef.dim(), in_dim);
            let s = re_trace_with(coef.matrix(), basis);
            if s == 0.0 {
                return Vec::new();
            }
            dense_to_triplets(&out.matrix().map(|z| z * s))
        }
    }
}

fn merge_triplets(acc: &mut Triplets, add: Triplets) {
    acc.extend(add);
}

fn canonical(mut t: Triplets) -> Triplets {
    t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Triplets = Vec::with_capacity(t.len());
    for (r, c, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|&(_, _, v)| v.norm() > 1e-300);
    out
}

enum ConstraintSlot {
    Dense(usize),
    Lp(usize),
}

/// Coordinate layout shared by compile and solution extraction.
struct Layout {
    offsets: Vec<usize>,
    total: usize,
}

impl ConeProgram {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_var(&mut self, kind: VarKind) -> Var {
        self.vars.push(kind);
        Var(self.vars.len() - 1)
    }

    pub fn add_hermitian(&mut self, dim: usize) -> Var {
        self.push_var(VarKind::Hermitian { dim })
    }

    /// Hermitian variable constrained to be PSD.
    pub fn add_psd(&mut self, dim: usize) -> Var {
        let v = self.add_hermitian(dim);
        self.require_psd(Affine::new(dim).var(v, 1.0));
        v
    }

    pub fn add_scalar(&mut self) -> Var {
        self.push_var(VarKind::Scalar)
    }

    pub fn add_nonneg(&mut self) -> Var {
        let v = self.add_scalar();
        self.require_psd(Affine::new(1).scalar(v, &HermitianOp::identity(1)));
        v
    }

    /// Cone generated by the rank-one atoms `|a⟩⟨a|`.
    pub fn add_atoms(&mut self, dim: usize, atoms: Arc<Vec<CVec>>) -> Var {
        self.push_var(VarKind::Atoms { dim, atoms })
    }

    pub fn var_kind(&self, var: Var) -> &VarKind {
        &self.vars[var.0]
    }

    /// Adds `Re tr(coef·X)` to the objective.
    pub fn minimize(&mut self, var: Var, coef: &HermitianOp) {
        self.objective.push((var, coef.clone()));
    }

    /// Adds `s·tr(X)` (or `s·x` for scalars) to the objective.
    pub fn minimize_trace(&mut self, var: Var, s: f64) {
        let d = self.vars[var.0].dim();
        self.objective.push((var, HermitianOp::identity(d).scale(s)));
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.objective_constant += c;
    }

    /// `expr ⪰ 0`.
    pub fn require_psd(&mut self, expr: Affine) -> PsdId {
        self.psd.push(expr);
        PsdId(self.psd.len() - 1)
    }

    /// `Σ Re tr(coef_k X_k) = rhs`.
    pub fn require_eq(&mut self, terms: Vec<(Var, HermitianOp)>, rhs: f64) -> EqId {
        self.eqs.push(ScalarEq { terms, rhs });
        EqId(self.eqs.len() - 1)
    }

    /// `tr(X) = rhs`.
    pub fn require_trace(&mut self, var: Var, rhs: f64) -> EqId {
        let d = self.vars[var.0].dim();
        self.require_eq(vec![(var, HermitianOp::identity(d))], rhs)
    }

    /// `expr = 0` as a Hermitian matrix identity.
    pub fn require_mat_eq(&mut self, expr: Affine) -> MatEqId {
        self.mat_eqs.push(expr);
        MatEqId(self.mat_eqs.len() - 1)
    }

    fn validate(&self) -> Result<()> {
        let dim_sum: usize = self.vars.iter().map(VarKind::dim).sum();
        if dim_sum > MAX_TOTAL_DIM {
            return Err(Error::DimensionTooLarge {
                what: "total variable dimension",
                size: dim_sum,
                limit: MAX_TOTAL_DIM,
            });
        }
        let coords = self.layout().total;
        if coords > MAX_COORDINATES {
            return Err(Error::DimensionTooLarge {
                what: "real coordinates",
                size: coords,
                limit: MAX_COORDINATES,
            });
        }
        let check_affine = |a: &Affine, what: &str| -> Result<()> {
            for (v, map) in &a.terms {
                let kind = self.vars.get(v.0).ok_or_else(|| {
                    Error::MalformedProgram(format!("{what} references undeclared variable {}", v.0))
                })?;
                let in_dim = kind.dim();
                if let Map::Functional { coef, .. } = map {
                    if coef.dim() != in_dim {
                        return Err(Error::MalformedProgram(format!(
                            "{what}: functional coefficient of size {} on variable of size {in_dim}",
                            coef.dim()
                        )));
                    }
                }
                if let Map::PartialTranspose { dims, mask, .. } = map {
                    if dims.iter().product::<usize>() != in_dim || mask.len() != dims.len() {
                        return Err(Error::MalformedProgram(format!(
                            "{what}: partial transpose layout {dims:?} does not fit size {in_dim}"
                        )));
                    }
                }
                if map.output_dim(in_dim) != a.dim {
                    return Err(Error::MalformedProgram(format!(
                        "{what}: term of size {} in expression of size {}",
                        map.output_dim(in_dim),
                        a.dim
                    )));
                }
            }
            Ok(())
        };
        for a in &self.psd {
            check_affine(a, "psd constraint")?;
        }
        for a in &self.mat_eqs {
            check_affine(a, "matrix equality")?;
        }
        let check_coef = |v: &Var, c: &HermitianOp, what: &str| -> Result<()> {
            let kind = self.vars.get(v.0).ok_or_else(|| {
                Error::MalformedProgram(format!("{what} references undeclared variable {}", v.0))
            })?;
            if kind.dim() != c.dim() {
                return Err(Error::MalformedProgram(format!(
                    "{what}: coefficient of size {} on variable of size {}",
                    c.dim(),
                    kind.dim()
                )));
            }
            Ok(())
        };
        for (v, c) in &self.objective {
            check_coef(v, c, "objective")?;
        }
        for e in &self.eqs {
            for (v, c) in &e.terms {
                check_coef(v, c, "equality")?;
            }
        }
        Ok(())
    }

    fn layout(&self) -> Layout {
        let mut offsets = Vec::with_capacity(self.vars.len());
        let mut total = 0;
        for v in &self.vars {
            offsets.push(total);
            total += v.coordinates();
        }
        Layout { offsets, total }
    }

    /// Basis element of coordinate `local` of a variable, as entries.
    fn basis(&self, var: usize, local: usize) -> Triplets {
        match &self.vars[var] {
            VarKind::Hermitian { dim } => hermitian_basis(*dim, local),
            VarKind::Scalar => vec![(0, 0, c64(1.0, 0.0))],
            VarKind::Atoms { atoms, .. } => {
                let a = &atoms[local];
                dense_to_triplets(&(a * a.adjoint()))
            }
        }
    }

    /// Total number of real coordinates.
    pub fn coordinate_count(&self) -> usize {
        self.layout().total
    }

    fn compile(&self) -> Result<(Compiled, Vec<ConstraintSlot>, usize)> {
        self.validate()?;
        let layout = self.layout();
        let m = layout.total;
        let mut c = vec![0.0; m];
        for (v, coef) in &self.objective {
            for local in 0..self.vars[v.0].coordinates() {
                c[layout.offsets[v.0] + local] += re_trace_with(coef.matrix(), &self.basis(v.0, local));
            }
        }

        let mut dense: Vec<DenseBlock> = Vec::new();
        let mut lp = LpBlock::default();
        let mut slots = Vec::with_capacity(self.psd.len());

        for expr in &self.psd {
            let images = self.expression_images(expr, &layout);
            if expr.dim == 1 {
                let row = lp.f0.len();
                lp.f0.push(-expr.constant[(0, 0)].re);
                for (g, t) in images {
                    let val = t.re_trace(&CMat::identity(1, 1));
                    if val != 0.0 {
                        lp.entries.push((row, g, val));
                    }
                }
                slots.push(ConstraintSlot::Lp(row));
            } else {
                let f0 = expr.constant.map(|z| -z);
                dense.push(DenseBlock::new(expr.dim, f0, images));
                slots.push(ConstraintSlot::Dense(dense.len() - 1));
            }
        }
        let n_user_lp = lp.f0.len();
        // atom weights are nonnegative
        for (vi, kind) in self.vars.iter().enumerate() {
            if let VarKind::Atoms { atoms, .. } = kind {
                for j in 0..atoms.len() {
                    let row = lp.f0.len();
                    lp.f0.push(0.0);
                    lp.entries.push((row, layout.offsets[vi] + j, 1.0));
                }
            }
        }

        let mut eq_rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for e in &self.eqs {
            let mut row = vec![0.0; m];
            for (v, coef) in &e.terms {
                for local in 0..self.vars[v.0].coordinates() {
                    row[layout.offsets[v.0] + local] +=
                        re_trace_with(coef.matrix(), &self.basis(v.0, local));
                }
            }
            eq_rows.push((row, e.rhs));
        }
        let n_scalar_eqs = eq_rows.len();
        for expr in &self.mat_eqs {
            let images = self.expression_images(expr, &layout);
            let dim = expr.dim;
            for k in 0..dim * dim {
                let hk = triplets_to_dense(&hermitian_basis(dim, k), dim);
                let mut row = vec![0.0; m];
                for (g, t) in &images {
                    row[*g] += t.re_trace(&hk);
                }
                let rhs = -crate::tensor_core::hs_inner(&hk, &expr.constant);
                eq_rows.push((row, rhs));
            }
        }
        lp.finalize(m);
        let compiled = Compiled::new(m, c, dense, lp, eq_rows)?;
        let _ = n_user_lp;
        Ok((compiled, slots, n_scalar_eqs))
    }

    /// Images of every coordinate's basis element under an expression.
    fn expression_images(&self, expr: &Affine, layout: &Layout) -> Vec<(usize, Basis)> {
        let mut per_coord: std::collections::BTreeMap<usize, Vec<Basis>> = Default::default();
        for (v, map) in &expr.terms {
            let kind = &self.vars[v.0];
            let in_dim = kind.dim();
            for local in 0..kind.coordinates() {
                let img = match (kind, map) {
                    (VarKind::Atoms { atoms, .. }, Map::Scale(s)) => {
                        Basis::Rank1(atoms[local].clone(), *s)
                    }
                    (VarKind::Atoms { atoms, .. }, _) => {
                        let a = &atoms[local];
                        Basis::Sparse(dense_to_triplets(&map.apply(&(a * a.adjoint()))))
                    }
                    _ => Basis::Sparse(map_triplets(map, &self.basis(v.0, local), in_dim)),
                };
                if matches!(&img, Basis::Sparse(t) if t.is_empty()) {
                    continue;
                }
                per_coord.entry(layout.offsets[v.0] + local).or_default().push(img);
            }
        }
        per_coord
            .into_iter()
            .filter_map(|(g, mut parts)| {
                if parts.len() == 1 && matches!(parts[0], Basis::Rank1(..)) {
                    return parts.pop().map(|b| (g, b));
                }
                let mut acc = Vec::new();
                for part in parts {
                    match part {
                        Basis::Sparse(t) => merge_triplets(&mut acc, t),
                        Basis::Rank1(a, s) => merge_triplets(
                            &mut acc,
                            dense_to_triplets(&(&a * a.adjoint()).map(|z| z * s)),
                        ),
                    }
                }
                let t = canonical(acc);
                (!t.is_empty()).then_some((g, Basis::Sparse(t)))
            })
            .collect()
    }

    /// Solves to tolerance `tol` with default iteration limits.
    pub fn solve(&self, tol: f64) -> Result<ConeSolution> {
        self.solve_with(&IpmSettings {
            tol,
            ..IpmSettings::default()
        })
    }

    pub fn solve_with(&self, settings: &IpmSettings) -> Result<ConeSolution> {
        let (compiled, slots, n_scalar_eqs) = self.compile()?;
        let raw = ipm::solve(&compiled, settings)?;
        let layout = self.layout();

        let values = self
            .vars
            .iter()
            .enumerate()
            .map(|(vi, kind)| {
                let off = layout.offsets[vi];
                match kind {
                    VarKind::Hermitian { dim } => {
                        let mut m = CMat::zeros(*dim, *dim);
                        for local in 0..dim * dim {
                            let x = raw.x[off + local];
                            for (r, c, v) in hermitian_basis(*dim, local) {
                                m[(r, c)] += v * x;
                            }
                        }
                        VarValue::Hermitian(HermitianOp::from_matrix_lossy(m))
                    }
                    VarKind::Scalar => VarValue::Scalar(raw.x[off]),
                    VarKind::Atoms { atoms, .. } => {
                        VarValue::Weights(raw.x[off..off + atoms.len()].to_vec())
                    }
                }
            })
            .collect();

        let psd_duals = slots
            .iter()
            .map(|s| match s {
                ConstraintSlot::Dense(b) => HermitianOp::from_matrix_lossy(raw.y_dense[*b].clone()),
                ConstraintSlot::Lp(r) => HermitianOp::from_real_diagonal(&[raw.y_lp[*r]]),
            })
            .collect();
        let eq_duals = raw.w[..n_scalar_eqs].to_vec();
        let mut mat_eq_duals = Vec::with_capacity(self.mat_eqs.len());
        let mut cursor = n_scalar_eqs;
        for expr in &self.mat_eqs {
            let dim = expr.dim;
            let mut m = CMat::zeros(dim, dim);
            for k in 0..dim * dim {
                let w = raw.w[cursor + k];
                for (r, c, v) in hermitian_basis(dim, k) {
                    m[(r, c)] += v * w;
                }
            }
            cursor += dim * dim;
            mat_eq_duals.push(HermitianOp::from_matrix_lossy(m));
        }

        let objective = raw.primal_objective + self.objective_constant;
        let dual_objective = raw.dual_objective + self.objective_constant;
        Ok(ConeSolution {
            status: raw.status,
            objective,
            dual_objective,
            gap: (objective - dual_objective).abs()
                / (1.0 + objective.abs() + dual_objective.abs()),
            primal_residual: raw.primal_residual,
            dual_residual: raw.dual_residual,
            iterations: raw.iterations,
            infeasibility: raw.infeasibility,
            values,
            psd_duals,
            eq_duals,
            mat_eq_duals,
        })
    }

    /// Gradient of the Lagrangian with respect to `var` as an operator:
    /// `C_var − Σ map†(dual)` over every user constraint. For an atom cone
    /// variable, `⟨a|G|a⟩` is the reduced cost of adding atom `a`.
    pub fn reduced_cost(&self, sol: &ConeSolution, var: Var) -> HermitianOp {
        let dim = self.vars[var.0].dim();
        let mut g = CMat::zeros(dim, dim);
        for (v, coef) in &self.objective {
            if *v == var {
                g += coef.matrix();
            }
        }
        for (k, expr) in self.psd.iter().enumerate() {
            for (v, map) in &expr.terms {
                if *v == var {
                    g -= map.adjoint(sol.psd_duals[k].matrix());
                }
            }
        }
        for (k, e) in self.eqs.iter().enumerate() {
            for (v, coef) in &e.terms {
                if *v == var {
                    g -= coef.matrix().map(|z| z * sol.eq_duals[k]);
                }
            }
        }
        for (k, expr) in self.mat_eqs.iter().enumerate() {
            for (v, map) in &expr.terms {
                if *v == var {
                    g -= map.adjoint(sol.mat_eq_duals[k].matrix());
                }
            }
        }
        HermitianOp::from_matrix_lossy(g)
    }
}

