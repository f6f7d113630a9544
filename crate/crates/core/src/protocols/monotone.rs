//! Bracket-level checks of `M(Λ(ρ)) ≤ log₂(1+ε) + M(ρ)` for the log global
//! robustness and the relative entropy of entanglement.

use crate::error::Result;
use crate::measures::{log_robustness_with, rel_ent_entanglement_with, Bracket, RelEntropyOptions};
use crate::sep_geometry::SolveOptions;
use crate::tensor_core::MultiState;

use super::Channel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Upper endpoint on the left is below the lower endpoint plus allowance
    /// on the right.
    Holds,
    /// Lower endpoint on the left exceeds the upper endpoint plus allowance.
    Violated,
    /// The brackets overlap the boundary.
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    pub measure: &'static str,
    pub input: Bracket,
    pub output: Bracket,
    pub epsilon: f64,
    /// `log₂(1 + ε)`.
    pub allowance: f64,
    pub slack: f64,
    /// `input.lower + allowance + slack − output.upper`; non-negative when
    /// the inequality is certified.
    pub margin: f64,
    pub verdict: Verdict,
}

fn judge(measure: &'static str, input: Bracket, output: Bracket, epsilon: f64, tol: f64) -> MonotonicityReport {
    let allowance = (1.0 + epsilon.max(0.0)).log2();
    let slack = 2.0 * tol;
    let margin = input.lower + allowance + slack - output.upper;
    let verdict = if margin >= 0.0 {
        Verdict::Holds
    } else if output.lower > input.upper + allowance + slack {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    MonotonicityReport {
        measure,
        input,
        output,
        epsilon,
        allowance,
        slack,
        margin,
        verdict,
    }
}

/// `LR_G(Λ(ρ)) ≤ log₂(1 + ε) + LR_G(ρ)` for an `ε`-preserving map.
pub fn check_lr_monotonicity(
    channel: &Channel,
    epsilon: f64,
    rho: &MultiState,
    opts: &SolveOptions,
) -> Result<MonotonicityReport> {
    let out = channel.apply(rho)?;
    let input = log_robustness_with(rho, opts)?;
    let output = log_robustness_with(&out, opts)?;
    Ok(judge("lrg", input, output, epsilon, opts.tol))
}

/// `E_R(Λ(ρ)) ≤ log₂(1 + ε) + E_R(ρ)` for an `ε`-preserving map.
pub fn check_er_monotonicity(
    channel: &Channel,
    epsilon: f64,
    rho: &MultiState,
    opts: &SolveOptions,
) -> Result<MonotonicityReport> {
    let out = channel.apply(rho)?;
    let ro = RelEntropyOptions {
        solve: opts.clone(),
        ..RelEntropyOptions::new(opts.tol, opts.seed)
    };
    let input = rel_ent_entanglement_with(rho, &ro)?;
    let output = rel_ent_entanglement_with(&out, &ro)?;
    Ok(judge("er", input, output, epsilon, opts.tol))
}
