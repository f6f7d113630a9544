//! Finite-n distillation and formation rates next to the relative entropy
//! of entanglement per copy.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::hypotest::fsep_with;
use crate::measures::{
    global_robustness_with, power_within_limit, rel_ent_entanglement_with, Bracket, Exactness,
    LowerCertificate, RelEntropyOptions, UpperCertificate,
};
use crate::sep_geometry::{SepWitness, SeparableDecomposition, SolveOptions};
use crate::states::max_entangled;
use crate::tensor_core::{trace_norm, MultiState};

use super::{build_formation_map, mixing_from_robustness, verify_sepp, MeasurePrepareMap};

/// Largest number of copies in a reversibility run.
pub const MAX_DEMO_COPIES: usize = 2;

#[derive(Clone, Debug)]
pub struct ReversibilityOptions {
    pub solve: SolveOptions,
    /// A rate `m/n` counts as distillable when `1 − F_sep(ρ^{⊗n}, 2^m)`
    /// is at most this.
    pub max_error: f64,
}

impl Default for ReversibilityOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            max_error: 0.2,
        }
    }
}

/// One distillation target `K = 2^m`, rate `y = m/n`.
#[derive(Clone, Debug)]
pub struct DistillRow {
    pub y: f64,
    pub k: usize,
    pub fidelity: Bracket,
}

#[derive(Clone, Debug)]
pub struct ReversibilityReport {
    pub n: usize,
    pub distill_table: Vec<DistillRow>,
    /// `(1/n)·max m` with distillation error within `max_error`.
    pub distill_rate: Bracket,
    /// Distillation maps built from the optimal POVM are 0-preserving.
    pub distill_epsilon: f64,
    /// `K_n = 2^{⌈log₂(1 + R_G(ρ^{⊗n}))⌉}` from the robustness upper endpoint.
    pub form_k: usize,
    /// `(1/n)·log₂ K_n` from the lower and upper robustness endpoints.
    pub form_rate: Bracket,
    /// Separability-preservation constant of the formation map, at most
    /// `1/(K_n − 1)`; for `K_n = 1` the map discards its input and this is
    /// `R_G(ρ^{⊗n})`.
    pub form_epsilon: f64,
    /// `‖Λ(Φ(K_n)) − ρ^{⊗n}‖₁`.
    pub form_error: f64,
    pub formation_map: Option<MeasurePrepareMap>,
    /// `E_R(ρ^{⊗n})/n`.
    pub er_per_copy: Bracket,
    /// `form_rate − er_per_copy`, endpoint by endpoint.
    pub gap: Bracket,
}

fn plain_bracket(lower: f64, upper: f64, what: &str) -> Result<Bracket> {
    Bracket::new(
        lower,
        upper,
        LowerCertificate::Trivial(what.to_string()),
        UpperCertificate::Trivial(what.to_string()),
        Exactness::Bracket,
        0,
        Duration::ZERO,
    )
}

/// Smallest `m` with `2^m ≥ 1 + r`, treating values within `tie` of an
/// integer exponent as that integer.
fn exponent_for(r: f64, tie: f64) -> u32 {
    let x = (1.0 + r.max(0.0)).log2();
    (x - tie).ceil().max(0.0) as u32
}

fn decomposition_of(b: &Bracket) -> Option<SeparableDecomposition> {
    match &b.upper_certificate {
        UpperCertificate::RelEntropyState(SepWitness::Decomposition(d)) => Some(d.clone()),
        _ => None,
    }
}

/// Distillation fidelities, the formation map with `K_n` copies of the
/// maximally entangled resource, and the per-copy relative entropy for
/// `ρ^{⊗n}`, `n ≤ 2`.
pub fn reversibility_demo(rho: &MultiState, n: usize, opts: &ReversibilityOptions) -> Result<ReversibilityReport> {
    if n == 0 || n > MAX_DEMO_COPIES {
        return Err(Error::InvalidArgument(format!(
            "copies n = {n} must lie in 1..={MAX_DEMO_COPIES}"
        )));
    }
    if rho.parties().count() != 2 {
        return Err(Error::InvalidSubsystems("reversibility runs need a bipartite state".into()));
    }
    let solve = &opts.solve;
    let rho_n = power_within_limit(rho, n)?;
    let nf = n as f64;

    // distillation side
    let local_min = *rho.party_dims().iter().min().expect("two parties");
    let m_max = n * (local_min as f64).log2().ceil() as usize + 1;
    let mut distill_table = Vec::with_capacity(m_max + 1);
    let (mut best_lo, mut best_hi) = (0usize, 0usize);
    for m in 0..=m_max {
        let k = 1usize << m;
        let fidelity = fsep_with(&rho_n, k as f64, solve)?;
        if 1.0 - fidelity.lower <= opts.max_error {
            best_lo = m;
        }
        if 1.0 - fidelity.upper <= opts.max_error {
            best_hi = m;
        }
        distill_table.push(DistillRow {
            y: m as f64 / nf,
            k,
            fidelity,
        });
    }
    let distill_rate = plain_bracket(
        best_lo as f64 / nf,
        best_hi.max(best_lo) as f64 / nf,
        "largest distillable exponent per copy",
    )?;

    // formation side
    let robustness = global_robustness_with(&rho_n, solve)?;
    let m_lo = exponent_for(robustness.lower, solve.tol);
    let m_hi = exponent_for(robustness.upper, solve.tol);
    let form_k = 1usize << m_hi;
    let form_rate = plain_bracket(m_lo as f64 / nf, m_hi as f64 / nf, "formation exponent per copy")?;
    let (formation_map, form_epsilon, form_error) = if form_k == 1 {
        (None, robustness.upper.max(0.0), 0.0)
    } else {
        let mix = mixing_from_robustness(&rho_n, form_k, &robustness)?;
        let map = build_formation_map(&rho_n, form_k, &mix.pi, &mix.mixture)?;
        let eps = verify_sepp(&map, solve)?.epsilon;
        let out = map.apply(&max_entangled(form_k)?)?;
        let err = trace_norm(&out.op().sub(rho_n.op()));
        (Some(map), eps, err)
    };

    // relative entropy per copy, warm-started from the single-copy minimizer
    let er_opts = |start| RelEntropyOptions {
        solve: solve.clone(),
        start,
        ..RelEntropyOptions::new(solve.tol, solve.seed)
    };
    let er_total = if n == 1 {
        rel_ent_entanglement_with(&rho_n, &er_opts(None))?
    } else {
        let single = rel_ent_entanglement_with(rho, &er_opts(None).generic())?;
        let start = match decomposition_of(&single) {
            Some(d) => Some(d.tensor(&d)?),
            None => None,
        };
        rel_ent_entanglement_with(&rho_n, &er_opts(start))?
    };
    let er_per_copy = er_total.map_monotone(|v| v / nf);
    let gap = plain_bracket(
        form_rate.lower - er_per_copy.upper,
        form_rate.upper - er_per_copy.lower,
        "formation rate minus relative entropy per copy",
    )?;

    Ok(ReversibilityReport {
        n,
        distill_table,
        distill_rate,
        distill_epsilon: 0.0,
        form_k,
        form_rate,
        form_epsilon,
        form_error,
        formation_map,
        er_per_copy,
        gap,
    })
}
