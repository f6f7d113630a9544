//! Relative entropy of entanglement `min_σ S(ρ‖σ)` over separable states.
//!
//! Upper endpoint: conditional-gradient descent over mixtures of product
//! pure states (away and pairwise steps, exact line search), started at
//! the maximally mixed state. Lower endpoint: convexity of the objective
//! gives `f(σ) + min_{s ∈ PPT} ⟨∇f(σ), s − σ⟩ ≤ min_{PPT} f`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::sep_geometry::isotropic::{self, detect_isotropic};
use crate::sep_geometry::{
    add_ppt_cone, ascend_from, Affine, basis_products, embed_product, product_local_optima, ConeProgram, SepWitness,
    SeparableDecomposition, SolveOptions, SolveStatus,
};
use nalgebra::{DMatrix, DVector};

use crate::tensor_core::{
    c64, eigh, CMat, log_derivative, partial_trace, relative_entropy_ops, von_neumann_entropy, CVec,
    HermitianOp, MultiState,
};

use super::{Bracket, Exactness, LowerCertificate, UpperCertificate};

/// Tuning for [`rel_ent_entanglement_with`].
#[derive(Clone, Debug)]
pub struct RelEntropyOptions {
    pub solve: SolveOptions,
    /// Weight of `I/d` mixed into σ while descending.
    pub support_shift: f64,
    pub max_iter: usize,
    /// Restarts of the product oracle per iteration.
    pub restarts: usize,
    /// Separable starting point; the maximally mixed state when absent.
    pub start: Option<SeparableDecomposition>,
}

impl RelEntropyOptions {
    pub fn new(tol: f64, seed: u64) -> Self {
        Self {
            solve: SolveOptions::new(tol, seed),
            support_shift: 1e-9,
            max_iter: 2000,
            restarts: 8,
            start: None,
        }
    }

    pub fn generic(mut self) -> Self {
        self.solve.use_symmetry = false;
        self
    }
}

/// `E_R(ρ)` as a bracket whose width targets `tol`.
pub fn rel_ent_entanglement(rho: &MultiState, tol: f64) -> Result<Bracket> {
    rel_ent_entanglement_with(rho, &RelEntropyOptions::new(tol, 0))
}

fn first_divided(x: f64, y: f64) -> f64 {
    if (x - y).abs() <= 1e-12 * x.max(y) {
        2.0 / (x + y)
    } else {
        (x.ln() - y.ln()) / (x - y)
    }
}

/// Second divided difference of `ln` (symmetric in its arguments).
fn second_divided(x: f64, y: f64, z: f64) -> f64 {
    let mut v = [x, y, z];
    v.sort_by(f64::total_cmp);
    let [x, y, z] = v;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.max(b);
    if close(x, z) {
        let m = (x + y + z) / 3.0;
        -1.0 / (2.0 * m * m)
    } else if close(x, y) {
        // ∂₁ of the first difference at (y, z)
        let m = 0.5 * (x + y);
        (1.0 / m - first_divided(m, z)) / (m - z)
    } else if close(y, z) {
        let m = 0.5 * (y + z);
        (first_divided(x, m) - 1.0 / m) / (x - m)
    } else {
        (first_divided(x, y) - first_divided(y, z)) / (x - z)
    }
}

/// Atoms lighter than this are moved out in one step.
const DROP_WEIGHT: f64 = 1e-10;
/// Iterations between certified stopping tests.
const CHECK_EVERY: usize = 25;
const POLISH_STEPS: usize = 8;
/// Mixing weights with `I/d` at which the lower bound is linearized.
const LINEARIZATION_SHIFTS: [f64; 4] = [0.0, 1e-7, 1e-6, 1e-5];
const KELLEY_ROUNDS: usize = 4;
/// Checks without 2% progress after which the descent stops.
const STALL_CHECKS: usize = 4;
const MAX_CUTS: usize = 60;

struct Atom {
    locals: Vec<CVec>,
    vector: CVec,
    weight: f64,
}

struct Descent<'a> {
    rho: &'a HermitianOp,
    neg_entropy: f64,
    shift: f64,
    dim: usize,
    atoms: Vec<Atom>,
}

impl Descent<'_> {
    fn sigma(&self) -> HermitianOp {
        let mut m = crate::tensor_core::CMat::zeros(self.dim, self.dim);
        for a in &self.atoms {
            m += (&a.vector * a.vector.adjoint()) * crate::tensor_core::c64(a.weight, 0.0);
        }
        HermitianOp::from_matrix_lossy(m)
    }

    fn shifted(&self, sigma: &HermitianOp) -> HermitianOp {
        sigma
            .scale(1.0 - self.shift)
            .add_scaled(&HermitianOp::identity(self.dim), self.shift / self.dim as f64)
    }

    /// `S(ρ‖σ_δ)` for the shifted `σ_δ`, which is always full rank.
    fn value(&self, sigma: &HermitianOp) -> f64 {
        let e = eigh(&self.shifted(sigma));
        let mut cross = 0.0;
        for (k, &lam) in e.values.iter().enumerate() {
            let v = e.vectors.column(k).into_owned();
            cross += self.rho.expectation(&v) * lam.max(f64::MIN_POSITIVE).log2();
        }
        self.neg_entropy - cross
    }

    fn gradient(&self, sigma: &HermitianOp) -> HermitianOp {
        let e = eigh(&self.shifted(sigma));
        log_derivative(&e, self.rho).scale(-(1.0 - self.shift) / std::f64::consts::LN_2)
    }

    /// Minimizes `γ ↦ f(σ + γ·dir)` on `[0, γ_max]`; the objective is convex
    /// in γ.
    fn line_search(&self, sigma: &HermitianOp, dir: &HermitianOp, gamma_max: f64) -> (f64, f64) {
        let phi = |g: f64| self.value(&sigma.add_scaled(dir, g));
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (0.0, gamma_max);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (phi(c), phi(d));
        for _ in 0..60 {
            if b - a <= 1e-12 * gamma_max.max(1e-12) {
                break;
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = phi(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = phi(d);
            }
        }
        // compare with the endpoints so a boundary optimum is not missed
        let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
        for g in [0.0, gamma_max] {
            let v = phi(g);
            if v < best.1 {
                best = (g, v);
            }
        }
        best
    }

    fn push_or_find(&mut self, locals: Vec<CVec>, vector: CVec) -> usize {
        if let Some(i) = self
            .atoms
            .iter()
            .position(|a| a.vector.dotc(&vector).norm() > 1.0 - 1e-12)
        {
            return i;
        }
        self.atoms.push(Atom {
            locals,
            vector,
            weight: 0.0,
        });
        self.atoms.len() - 1
    }

    /// Moves weight `γ` from atom `from` to atom `to`, or mixes towards
    /// `to` by `γ` when `from` is `None`, or away from `from` when `to` is
    /// `None`.
    fn apply(&mut self, to: Option<usize>, from: Option<usize>, gamma: f64) {
        match (to, from) {
            (Some(t), Some(f)) => {
                self.atoms[t].weight += gamma;
                self.atoms[f].weight -= gamma;
            }
            (Some(t), None) => {
                for a in &mut self.atoms {
                    a.weight *= 1.0 - gamma;
                }
                self.atoms[t].weight += gamma;
            }
            (None, Some(f)) => {
                for a in &mut self.atoms {
                    a.weight *= 1.0 + gamma;
                }
                self.atoms[f].weight -= gamma;
            }
            (None, None) => {}
        }
        self.atoms.retain(|a| a.weight > 1e-15);

        let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
        for a in &mut self.atoms {
            a.weight /= total;
        }
    }

    /// One step along `e_to − e_from` (or the FW/away directions) with
    /// exact line search. Returns the decrease.
    fn step(&mut self, sigma: &HermitianOp, f0: f64, to: Option<usize>, from: Option<usize>) -> f64 {
        let proj = |i: usize| HermitianOp::projector(&self.atoms[i].vector);
        let (dir, gamma_max) = match (to, from) {
            (Some(t), Some(f)) => (proj(t).sub(&proj(f)), self.atoms[f].weight),
            (Some(t), None) => (proj(t).sub(sigma), 1.0),
            (None, Some(f)) => {
                let w = self.atoms[f].weight;
                if w >= 1.0 {
                    return 0.0;
                }
                (sigma.sub(&proj(f)), w / (1.0 - w))
            }
            (None, None) => return 0.0,
        };
        if gamma_max <= 0.0 {
            return 0.0;
        }
        if gamma_max < DROP_WEIGHT {
            // drop step: the move is too small to resolve in the objective
            self.apply(to, from, gamma_max);
            return f64::MIN_POSITIVE;
        }
        let (gamma, value) = self.line_search(sigma, &dir, gamma_max);
        if gamma <= 0.0 || value >= f0 {
            return 0.0;
        }
        self.apply(to, from, gamma);
        f0 - value
    }

    /// Gradient and Hessian of the objective in the atom weights.
    fn weight_derivatives(&self, sigma: &HermitianOp) -> (DVector<f64>, DMatrix<f64>) {
        let e = eigh(&self.shifted(sigma));
        let d = self.dim;
        let m = self.atoms.len();
        let lam = &e.values;
        let vt = e.vectors.adjoint();
        let rt = &vt * self.rho.matrix() * &e.vectors;
        // atom coordinates in the eigenbasis, one row per atom
        let mut a = CMat::zeros(m, d);
        for (i, atom) in self.atoms.iter().enumerate() {
            a.set_row(i, &(&vt * &atom.vector).transpose());
        }
        let s = 1.0 - self.shift;
        let c = s / std::f64::consts::LN_2;

        let mut grad = DVector::zeros(m);
        for i in 0..m {
            let mut acc = 0.0;
            for k in 0..d {
                for l in 0..d {
                    acc += (first_divided(lam[k], lam[l]) * rt[(l, k)] * a[(i, k)] * a[(i, l)].conj()).re;
                }
            }
            grad[i] = -c * acc;
        }

        let mut hess = DMatrix::zeros(m, m);
        let abar = a.map(|z| z.conj());
        for l in 0..d {
            let ml = CMat::from_fn(d, d, |k, mm| rt[(mm, k)] * c64(second_divided(lam[k], lam[l], lam[mm]), 0.0));
            // x[i, j] = Σ_{k,m} a_ik M_l[k,m] ā_jm
            let x = &a * &ml * abar.transpose();
            for i in 0..m {
                for j in 0..m {
                    let t = abar[(i, l)] * a[(j, l)] * x[(i, j)] + abar[(j, l)] * a[(i, l)] * x[(j, i)];
                    hess[(i, j)] -= s * c * t.re;
                }
            }
        }
        (grad, hess)
    }

    /// Equality-constrained Newton steps on the weights of the active set.
    /// A step blocked by a weight reaching zero drops that atom and does
    /// not count towards `steps`. Returns the total decrease.
    fn polish(&mut self, sigma: &mut HermitianOp, value: &mut f64, steps: usize) -> f64 {
        let start = *value;
        let mut newton = 0;
        let mut guard = 0;
        while newton < steps && guard < steps + 4 * self.atoms.len() {
            guard += 1;
            let m = self.atoms.len();
            if m < 2 {
                break;
            }
            let (g, h) = self.weight_derivatives(sigma);
            let scale = h.diagonal().amax().max(1e-12);
            let mut kkt = DMatrix::zeros(m + 1, m + 1);
            kkt.view_mut((0, 0), (m, m)).copy_from(&h);
            for i in 0..m {
                kkt[(i, i)] += 1e-9 * scale;
                kkt[(i, m)] = 1.0;
                kkt[(m, i)] = 1.0;
            }
            let mut rhs = DVector::zeros(m + 1);
            rhs.rows_mut(0, m).copy_from(&(-&g));
            let Some(sol) = kkt.lu().solve(&rhs) else { break };
            let dir: Vec<f64> = sol.rows(0, m).iter().copied().collect();
            if g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() >= 0.0 {
                break;
            }
            // ratio test: the first weight to reach zero blocks the step
            let (blocking, t_block) = self
                .atoms
                .iter()
                .zip(&dir)
                .enumerate()
                .filter(|(_, (_, &dv))| dv < 0.0)
                .map(|(i, (a, &dv))| (i, -a.weight / dv))
                .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            let t_max = t_block.min(1.0);
            let mut delta = CMat::zeros(self.dim, self.dim);
            for (atom, &dv) in self.atoms.iter().zip(&dir) {
                delta += (&atom.vector * atom.vector.adjoint()) * c64(dv, 0.0);
            }
            let delta = HermitianOp::from_matrix_lossy(delta);
            let (t, v) = if t_max < DROP_WEIGHT {
                (t_max, self.value(&sigma.add_scaled(&delta, t_max)))
            } else {
                self.line_search(sigma, &delta, t_max)
            };
            let blocked = blocking != usize::MAX && t >= t_block * (1.0 - 1e-9);
            if !blocked && (t <= 0.0 || v >= *value) {
                break;
            }
            for (atom, &dv) in self.atoms.iter_mut().zip(&dir) {
                atom.weight = (atom.weight + t * dv).max(0.0);
            }
            if blocked {
                self.atoms[blocking].weight = 0.0;
            } else {
                newton += 1;
            }
            self.atoms.retain(|a| a.weight > 1e-15);
            let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
            self.atoms.iter_mut().for_each(|a| a.weight /= total);
            let before = *value;
            *sigma = self.sigma();
            *value = self.value(sigma);
            if !blocked && before - *value <= 1e-15 * value.abs().max(1.0) {
                break;
            }
        }
        start - *value
    }

    fn decomposition(&self, rho: &MultiState) -> Result<SeparableDecomposition> {
        SeparableDecomposition::from_cone(
            rho.profile().clone(),
            rho.parties().clone(),
            self.atoms.iter().map(|a| a.weight).collect(),
            self.atoms.iter().map(|a| a.locals.clone()).collect(),
        )
    }
}

pub fn rel_ent_entanglement_with(rho: &MultiState, opts: &RelEntropyOptions) -> Result<Bracket> {
    let start = Instant::now();
    let tol = opts.solve.tol;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    if rho.parties().count() < 2 {
        return Err(Error::InvalidSubsystems("at least two parties are required".into()));
    }
    if opts.solve.use_symmetry {
        if let Some((k, f)) = detect_isotropic(rho) {
            return isotropic_bracket(rho, k, f, start);
        }
    }

    let d = rho.dim();
    let profile = rho.profile();
    let parties = rho.parties();
    let shift = opts.support_shift;
    let mut fw = Descent {
        rho: rho.op(),
        neg_entropy: -von_neumann_entropy(rho),
        shift,
        dim: d,
        atoms: Vec::new(),
    };
    // maximally mixed start (uniform over the computational product basis)
    // unless a starting decomposition is supplied
    let initial = match &opts.start {
        Some(dec) => {
            if dec.profile() != profile || dec.parties() != parties {
                return Err(Error::InvalidArgument("starting point lives on a different space".into()));
            }
            dec.normalized()
        }
        None => {
            let basis = basis_products(profile, parties);
            let w = vec![1.0 / basis.len() as f64; basis.len()];
            SeparableDecomposition::new(profile.clone(), parties.clone(), w, basis)?
        }
    };
    for (locals, &weight) in initial.factors().iter().zip(initial.weights()) {
        let vector = embed_product(profile, parties, locals);
        fw.atoms.push(Atom {
            locals: locals.clone(),
            vector,
            weight,
        });
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut sigma = fw.sigma();
    let mut value = fw.value(&sigma);
    let mut best_lower: Option<(f64, LowerCertificate)> = None;
    let mut ppt_available = true;
    let mut bundle = Bundle::new(rho, opts.solve.solver_tol());
    // bracket widths (or objective values without a lower bound) at checks
    let mut widths: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    while iterations < opts.max_iter {
        iterations += 1;
        let grad = fw.gradient(&sigma);
        let scores: Vec<f64> = fw.atoms.iter().map(|a| grad.expectation(&a.vector)).collect();
        let at_sigma: f64 = fw.atoms.iter().zip(&scores).map(|(a, s)| a.weight * s).sum();

        let seed = opts.solve.seed.wrapping_add(iterations as u64);
        let neg = grad.scale(-1.0);
        let mut candidates = product_local_optima(&neg, profile, parties, opts.restarts, seed);
        // the oracle is a local method: also climb from the best active atom
        let lo = argmin(&scores);
        candidates.push(ascend_from(&neg, profile, parties, fw.atoms[lo].locals.clone()));
        let best = candidates
            .into_iter()
            .max_by(|a, b| a.value.total_cmp(&b.value).then(b.restart.cmp(&a.restart)))
            .expect("at least one candidate");
        let fw_gap = at_sigma + best.value;

        // certified stopping test, run periodically and whenever the
        // heuristic gap looks small
        if ppt_available && (fw_gap <= tol || iterations % CHECK_EVERY == 0) {
            match bundle.refine(&sigma, shift)? {
                Some(lb) => {
                    if best_lower.as_ref().is_none_or(|b| lb.0 > b.0) {
                        best_lower = Some(lb);
                    }
                }
                None => ppt_available = false,
            }
            let lower = best_lower.as_ref().map_or(0.0, |b| b.0);
            if value - lower <= tol {
                converged = true;
                break;
            }
            widths.push(value - lower);
            let n = widths.len();
            if n > STALL_CHECKS && widths[n - 1] > 0.98 * widths[n - 1 - STALL_CHECKS] {
                break;
            }
        } else if iterations % CHECK_EVERY == 0 {
            values.push(value);
            let n = values.len();
            if n > STALL_CHECKS && values[n - 1 - STALL_CHECKS] - values[n - 1] < 1e-3 * tol {
                break;
            }
        }
        if fw_gap <= 0.1 * tol {
            converged = true;
            break;
        }

        let away = argmax(&scores);
        let away_score = scores[away];
        let to = fw.push_or_find(best.locals, best.vector);

        // pairwise step first; fall back to plain FW and away steps
        let gain = fw.step(&sigma, value, Some(to), Some(away));
        if gain <= 0.0 {
            if fw_gap >= away_score - at_sigma {
                fw.step(&sigma, value, Some(to), None);
            } else {
                fw.step(&sigma, value, None, Some(away));
            }
        }
        fw.atoms.retain(|a| a.weight > 0.0);
        sigma = fw.sigma();
        value = fw.value(&sigma);

        // fully corrective: Newton on the weights of the active set
        fw.polish(&mut sigma, &mut value, POLISH_STEPS);
    }

    // upper: the better of the plain and the shifted iterate, both separable
    let dec = fw.decomposition(rho)?;
    let plain = relative_entropy_ops(rho.op(), &sigma);
    let (witness, upper_guess) = if plain <= value {
        (SepWitness::Decomposition(dec), plain)
    } else {
        let id = basis_products(profile, parties);
        let n = id.len() as f64;
        let mix = SeparableDecomposition::from_cone(
            profile.clone(),
            parties.clone(),
            vec![shift / n; id.len()],
            id,
        )?;
        (SepWitness::Decomposition(dec.scaled(1.0 - shift).combine(&mix)?), value)
    };
    let upper_certificate = UpperCertificate::RelEntropyState(witness);
    let upper = upper_certificate.evaluate(rho.op())?.unwrap_or(upper_guess);

    if ppt_available && !converged {
        match bundle.refine(&sigma, shift)? {
            Some(lb) if best_lower.as_ref().is_none_or(|b| lb.0 > b.0) => best_lower = Some(lb),
            _ => {}
        }
    }
    let (lower, lower_certificate) = match best_lower {
        Some(lb) => lb,
        None => coherent_information(rho)?,
    };
    let exactness = if crate::sep_geometry::ppt_is_exact(profile, parties) && upper - lower <= tol {
        Exactness::PptExact
    } else {
        Exactness::Bracket
    };
    Ok(Bracket::new(
        lower.min(upper),
        upper,
        lower_certificate,
        upper_certificate,
        exactness,
        iterations,
        start.elapsed(),
    )?
    .with_converged(converged))
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

/// Cutting-plane lower bound over PPT states. For full-rank `τ`,
/// convexity of `S(ρ‖·)` gives `S(ρ‖s) ≥ S(ρ‖τ) + ⟨∇(τ), s − τ⟩` for every
/// state `s`; the bound is the minimum over PPT `s` of the largest such cut.
struct Bundle<'a> {
    rho: &'a MultiState,
    /// `(offset, gradient)`: the cut is `offset + ⟨gradient, s⟩`.
    cuts: Vec<(f64, HermitianOp)>,
    tol: f64,
}

impl<'a> Bundle<'a> {
    fn new(rho: &'a MultiState, tol: f64) -> Self {
        Self {
            rho,
            cuts: Vec::new(),
            tol,
        }
    }

    /// Adds the cut at `τ` if `S(ρ‖τ)` is finite.
    fn add_cut(&mut self, tau: &HermitianOp) {
        let value = relative_entropy_ops(self.rho.op(), tau);
        if !value.is_finite() {
            return;
        }
        let grad = log_derivative(&eigh(tau), self.rho.op()).scale(-1.0 / std::f64::consts::LN_2);
        let offset = value - grad.inner(tau);
        self.cuts.push((offset, grad));
    }

    /// Keeps the cuts that are largest at `point`.
    fn prune(&mut self, point: &HermitianOp) {
        if self.cuts.len() <= MAX_CUTS {
            return;
        }
        let mut scored: Vec<(f64, (f64, HermitianOp))> = self
            .cuts
            .drain(..)
            .map(|c| (c.0 + c.1.inner(point), c))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        scored.truncate(MAX_CUTS);
        self.cuts = scored.into_iter().map(|x| x.1).collect();
    }

    /// Minimizes the cut model over PPT states. Returns the certified
    /// value with its certificate and the minimizer, or `None` when the
    /// program is too large or does not solve.
    fn solve(&self) -> Result<Option<(f64, LowerCertificate, HermitianOp)>> {
        let d = self.rho.dim();
        let one = HermitianOp::identity(1);
        let mut p = ConeProgram::new();
        let s = add_ppt_cone(&mut p, self.rho.profile(), self.rho.parties());
        let t = p.add_scalar();
        p.require_trace(s, 1.0);
        for (offset, grad) in &self.cuts {
            p.require_psd(
                Affine::new(1)
                    .scalar(t, &one)
                    .functional(s, &grad.scale(-1.0), &one)
                    .constant_identity(-offset),
            );
        }
        p.minimize(t, &one);
        let _ = d;
        match p.solve(self.tol) {
            Ok(sol) if sol.status == SolveStatus::Optimal => Ok(Some((
                sol.lower_value().max(0.0),
                LowerCertificate::CuttingPlanes {
                    cuts: self.cuts.len(),
                    primal: sol.objective,
                    dual: sol.dual_objective,
                },
                sol.hermitian(s).clone(),
            ))),
            Ok(_) | Err(Error::DimensionTooLarge { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Adds cuts around the iterate `sigma`, then runs a few Kelley rounds
    /// that cut at points moved towards the model minimizer.
    fn refine(&mut self, sigma: &HermitianOp, shift: f64) -> Result<Option<(f64, LowerCertificate)>> {
        let d = sigma.dim();
        let mix = |a: &HermitianOp, b: &HermitianOp, w: f64| a.scale(1.0 - w).add_scaled(b, w);
        let id = HermitianOp::identity(d).scale(1.0 / d as f64);
        for eta in LINEARIZATION_SHIFTS {
            self.add_cut(&mix(sigma, &id, eta.max(shift)));
        }
        let mut best: Option<(f64, LowerCertificate)> = None;
        for _ in 0..KELLEY_ROUNDS {
            let Some((value, cert, minimizer)) = self.solve()? else {
                return Ok(None);
            };
            if best.as_ref().is_none_or(|b| value > b.0) {
                best = Some((value, cert));
            }
            self.prune(&minimizer);
            for w in [1e-4, 1e-3, 1e-2, 1e-1] {
                let point = mix(sigma, &minimizer, w);
                self.add_cut(&mix(&point, &id, shift));
            }
        }
        Ok(best)
    }
}

/// `max(S(ρ_A), S(ρ_B)) − S(ρ)` for two parties, a lower bound on `E_R`.
fn coherent_information(rho: &MultiState) -> Result<(f64, LowerCertificate)> {
    let groups = rho.parties().groups();
    if groups.len() != 2 {
        return Ok((0.0, LowerCertificate::Trivial("relative entropy is nonnegative".into())));
    }
    let s_ab = von_neumann_entropy(rho);
    let mut best: f64 = 0.0;
    for g in groups {
        let mut keep = g.clone();
        keep.sort_unstable();
        let s = von_neumann_entropy(&partial_trace(rho, &keep)?);
        best = best.max(s - s_ab);
    }
    Ok((
        best.max(0.0),
        LowerCertificate::ClosedForm("coherent information".into()),
    ))
}

fn isotropic_bracket(rho: &MultiState, k: usize, f: f64, start: Instant) -> Result<Bracket> {
    let value = isotropic::rel_entropy(k, f);
    let witness = SepWitness::Isotropic {
        profile: rho.profile().clone(),
        parties: rho.parties().clone(),
        k,
        fidelity: isotropic::rel_entropy_minimizer_fidelity(k, f),
        scale: 1.0,
    };
    let cert = UpperCertificate::RelEntropyState(witness);
    let upper = cert.evaluate(rho.op())?.unwrap_or(value);
    Bracket::new(
        value.min(upper),
        upper,
        LowerCertificate::ClosedForm(format!("isotropic K={k}, F={f:.12}")),
        cert,
        Exactness::Exact,
        0,
        start.elapsed(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{random_product_pure, random_state};
    use crate::tensor_core::DimProfile;

    #[test]
    fn weight_derivatives_match_finite_differences() {
        let p = DimProfile::bipartite(2, 3).unwrap();
        let rho = random_state(&p, 3, 11).unwrap();
        let mut fw = Descent {
            rho: rho.op(),
            neg_entropy: -von_neumann_entropy(&rho),
            shift: 1e-3,
            dim: 6,
            atoms: Vec::new(),
        };
        for seed in 0..8 {
            let (st, locals) = random_product_pure(&p, seed);
            let _ = st;
            let vector = embed_product(&p, rho.parties(), &locals);
            fw.atoms.push(Atom { locals, vector, weight: 0.05 + 0.01 * seed as f64 });
        }
        let sigma = fw.sigma();
        let (g, h) = fw.weight_derivatives(&sigma);
        let eps = 1e-6;
        for i in 0..fw.atoms.len() {
            let pi = HermitianOp::projector(&fw.atoms[i].vector);
            let fd = (fw.value(&sigma.add_scaled(&pi, eps)) - fw.value(&sigma.add_scaled(&pi, -eps))) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "grad {i}: {fd} vs {}", g[i]);
            fw.atoms[i].weight += eps;
            let (gp, _) = fw.weight_derivatives(&fw.sigma());
            fw.atoms[i].weight -= 2.0 * eps;
            let (gm, _) = fw.weight_derivatives(&fw.sigma());
            fw.atoms[i].weight += eps;
            for j in 0..fw.atoms.len() {
                let fd = (gp[j] - gm[j]) / (2.0 * eps);
                assert!((fd - h[(j, i)]).abs() < 1e-4 * (1.0 + fd.abs()), "hess {j},{i}: {fd} vs {}", h[(j, i)]);
            }
        }
    }
}
