//! Inner approximation of the separable cone by finitely many product
//! atoms, grown by column generation: after each solve, the reduced cost
//! operator of every atom-cone variable is priced with the product-overlap
//! oracle and improving product vectors are added.

use std::sync::Arc;

use crate::error::Result;
use crate::tensor_core::{c64, eigh, CVec, DimProfile, HermitianOp, Parties};

use super::cone::{ConeProgram, ConeSolution, SolveStatus, Var};
use super::decomposition::SeparableDecomposition;
use super::product::{distinct_optima, embed_product, product_local_optima};

/// Product atoms together with their per-party factors.
#[derive(Clone, Debug)]
pub struct AtomPool {
    profile: DimProfile,
    parties: Parties,
    locals: Vec<Vec<CVec>>,
    vectors: Vec<CVec>,
}

impl AtomPool {
    pub fn new(profile: &DimProfile, parties: &Parties) -> Self {
        Self {
            profile: profile.clone(),
            parties: parties.clone(),
            locals: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// Pool whose cone contains the identity in its interior: every party
    /// uses `|j⟩`, `(|j⟩ ± |k⟩)/√2` and `(|j⟩ ± i|k⟩)/√2`.
    pub fn spanning(profile: &DimProfile, parties: &Parties) -> Self {
        let mut pool = Self::new(profile, parties);
        let dims = parties.local_dims(profile);
        let frames: Vec<Vec<CVec>> = dims.iter().map(|&d| symmetric_frame(d)).collect();
        let mut combos: Vec<Vec<CVec>> = vec![Vec::new()];
        for f in &frames {
            combos = combos
                .iter()
                .flat_map(|prefix| {
                    f.iter().map(move |v| {
                        let mut t = prefix.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect();
        }
        for c in combos {
            pool.push(c);
        }
        pool
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> Arc<Vec<CVec>> {
        Arc::new(self.vectors.clone())
    }

    /// Adds an atom unless it duplicates an existing one. Returns whether it
    /// was added.
    pub fn push(&mut self, locals: Vec<CVec>) -> bool {
        let v = embed_product(&self.profile, &self.parties, &locals);
        if self
            .vectors
            .iter()
            .any(|u| u.dotc(&v).norm() > 1.0 - 1e-10)
        {
            return false;
        }
        self.locals.push(locals);
        self.vectors.push(v);
        true
    }

    /// Adds the distinct product local optima of `h` that exceed
    /// `threshold`; returns how many were added.
    pub fn add_optima(&mut self, h: &HermitianOp, threshold: f64, limit: usize, restarts: usize, seed: u64) -> usize {
        let all = product_local_optima(h, &self.profile, &self.parties, restarts, seed);
        distinct_optima(all, threshold, limit)
            .into_iter()
            .filter(|o| self.push(o.locals.clone()))
            .count()
    }

    /// Adds product vectors lying in the range of a rank-deficient `rho`.
    /// Rank-deficient separable operators sit on a face of the cone where
    /// pricing is degenerate; these atoms carry their exact decompositions.
    pub fn add_range_products(&mut self, rho: &HermitianOp, restarts: usize, seed: u64) -> usize {
        let e = eigh(rho);
        let top = e.values.iter().copied().fold(0.0, f64::max);
        let range: Vec<usize> = (0..e.dim()).filter(|&i| e.values[i] > 1e-10 * top).collect();
        if range.len() == e.dim() {
            return 0;
        }
        let projector = range.iter().fold(HermitianOp::zeros(e.dim()), |acc, &i| {
            acc.add(&HermitianOp::projector(&e.vectors.column(i).into_owned()))
        });
        self.add_optima(&projector, 1.0 - 1e-9, 32, restarts, seed)
    }

    /// Keeps the atoms whose flag is set.
    pub fn retain(&mut self, keep: &[bool]) {
        let mut it = keep.iter();
        self.locals.retain(|_| *it.next().unwrap_or(&true));
        let mut it = keep.iter();
        self.vectors.retain(|_| *it.next().unwrap_or(&true));
    }

    /// Cone decomposition with the given atom weights (negative weights are
    /// clipped to zero, tiny ones dropped).
    pub fn decomposition(&self, weights: &[f64]) -> Result<SeparableDecomposition> {
        let max = weights.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..weights.len())
            .filter(|&j| weights[j] > 1e-14 * max.max(1e-300))
            .collect();
        SeparableDecomposition::from_cone(
            self.profile.clone(),
            self.parties.clone(),
            keep.iter().map(|&j| weights[j]).collect(),
            keep.iter().map(|&j| self.locals[j].clone()).collect(),
        )
    }
}

fn symmetric_frame(d: usize) -> Vec<CVec> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for j in 0..d {
        let mut e = CVec::zeros(d);
        e[j] = c64(1.0, 0.0);
        out.push(e);
    }
    for j in 0..d {
        for k in j + 1..d {
            for phase in [c64(s, 0.0), c64(-s, 0.0), c64(0.0, s), c64(0.0, -s)] {
                let mut v = CVec::zeros(d);
                v[j] = c64(s, 0.0);
                v[k] = phase;
                out.push(v);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct InnerConfig {
    pub tol: f64,
    pub max_rounds: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Atoms added per variable per round.
    pub per_round: usize,
    /// Drop atoms that carry no weight before pricing the next round. Only
    /// safe when the program stays strictly feasible without them.
    pub prune: bool,
}

impl InnerConfig {
    pub fn new(tol: f64, seed: u64) -> Self {
        Self {
            tol,
            max_rounds: 40,
            restarts: 16,
            seed,
            per_round: 6,
            prune: false,
        }
    }
}

pub struct InnerOutcome<T> {
    /// Whatever the program builder returned for the final round.
    pub extra: T,
    pub program: ConeProgram,
    pub solution: ConeSolution,
    pub vars: Vec<Var>,
    pub pools: Vec<AtomPool>,
    pub rounds: usize,
}

impl<T> InnerOutcome<T> {
    pub fn decomposition(&self, k: usize) -> Result<SeparableDecomposition> {
        self.pools[k].decomposition(self.solution.weights(self.vars[k]))
    }
}

/// Column generation over one atom-cone variable per pool. `build` adds the
/// rest of the program given the atom variables.
pub fn column_generation<T, B>(mut pools: Vec<AtomPool>, cfg: &InnerConfig, build: B) -> Result<InnerOutcome<T>>
where
    B: Fn(&mut ConeProgram, &[Var]) -> Result<T>,
{
    let mut rounds = 0;
    // a later round can stall where an earlier one solved; keep the last
    // optimal round as the answer in that case
    let mut last_optimal: Option<InnerOutcome<T>> = None;
    loop {
        let mut program = ConeProgram::new();
        let vars: Vec<Var> = pools
            .iter()
            .map(|pool| program.add_atoms(pool.profile.total(), pool.vectors()))
            .collect();
        let extra = build(&mut program, &vars)?;
        let solution = program.solve(cfg.tol)?;
        rounds += 1;
        let mut added = 0;
        let mut next = pools.clone();
        if solution.status != SolveStatus::Infeasible && rounds < cfg.max_rounds {
            let threshold = cfg.tol.max(1e-9) * (1.0 + solution.objective.abs());
            for (k, pool) in next.iter_mut().enumerate() {
                if cfg.prune {
                    let w = solution.weights(vars[k]);
                    let max = w.iter().copied().fold(0.0, f64::max);
                    let keep: Vec<bool> = w.iter().map(|&x| x > 1e-9 * max).collect();
                    if keep.iter().any(|k| !k) {
                        pool.retain(&keep);
                        added += 1;
                    }
                }
                let g = program.reduced_cost(&solution, vars[k]);
                let seed = cfg.seed.wrapping_add(1000 * rounds as u64 + k as u64);
                added += pool.add_optima(&g.scale(-1.0), threshold, cfg.per_round, cfg.restarts, seed);
            }
        }
        let outcome = InnerOutcome {
            extra,
            program,
            solution,
            vars,
            pools,
            rounds,
        };
        if added == 0 {
            if outcome.solution.status != SolveStatus::Optimal {
                if let Some(mut best) = last_optimal {
                    best.rounds = rounds;
                    return Ok(best);
                }
            }
            return Ok(outcome);
        }
        if outcome.solution.status == SolveStatus::Optimal {
            last_optimal = Some(outcome);
        }
        pools = next;
    }
}
