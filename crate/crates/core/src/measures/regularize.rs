//! Finite-n traces `(1/n)·M(ρ^{⊗n})` of a measure, the computable shadow of
//! its regularization.

use crate::error::{Error, Result};
use crate::sep_geometry::{SepWitness, SolveOptions};
use crate::tensor_core::MultiState;

use super::{
    global_robustness_with, log_mixing_robustness_with, log_robustness_with,
    mixing_robustness_with, rel_ent_entanglement_with, smoothed_log_robustness_with, Bracket,
    RelEntropyOptions, UpperCertificate,
};

/// Largest total dimension of a tensor power the n-copy computations accept.
pub const MAX_POWER_DIM: usize = 128;

/// `ρ^{⊗n}`, rejected before it is formed when its dimension exceeds
/// [`MAX_POWER_DIM`].
pub fn power_within_limit(rho: &MultiState, n: usize) -> Result<MultiState> {
    if n == 0 {
        return Err(Error::InvalidArgument("copy count must be >= 1".into()));
    }
    let size = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(rho.dim()));
    match size {
        Some(size) if size <= MAX_POWER_DIM => rho.tensor_power(n),
        _ => Err(Error::DimensionTooLarge {
            what: "tensor power dimension",
            size: size.unwrap_or(usize::MAX),
            limit: MAX_POWER_DIM,
        }),
    }
}

/// Measure to regularize.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasureKind {
    RelEntropy,
    GlobalRobustness,
    LogRobustness,
    SmoothedLogRobustness { eps: f64 },
    MixingRobustness,
    LogMixingRobustness,
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::RelEntropy => "er",
            MeasureKind::GlobalRobustness => "rg",
            MeasureKind::LogRobustness => "lrg",
            MeasureKind::SmoothedLogRobustness { .. } => "lrg-smoothed",
            MeasureKind::MixingRobustness => "r",
            MeasureKind::LogMixingRobustness => "lr",
        }
    }

    /// Evaluates the measure on one state.
    pub fn evaluate(&self, rho: &MultiState, opts: &SolveOptions) -> Result<Bracket> {
        match *self {
            MeasureKind::RelEntropy => rel_ent_entanglement_with(rho, &rel_options(opts, None)),
            MeasureKind::GlobalRobustness => global_robustness_with(rho, opts),
            MeasureKind::LogRobustness => log_robustness_with(rho, opts),
            MeasureKind::SmoothedLogRobustness { eps } => smoothed_log_robustness_with(rho, eps, opts),
            MeasureKind::MixingRobustness => mixing_robustness_with(rho, opts),
            MeasureKind::LogMixingRobustness => log_mixing_robustness_with(rho, opts),
        }
    }
}

fn rel_options(opts: &SolveOptions, start: Option<crate::SeparableDecomposition>) -> RelEntropyOptions {
    RelEntropyOptions {
        solve: opts.clone(),
        start,
        ..RelEntropyOptions::new(opts.tol, opts.seed)
    }
}

/// One row of a [`RegularizationTrace`].
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub n: usize,
    /// Bracket on `M(ρ^{⊗n})`; its certificates refer to `ρ^{⊗n}`.
    pub total: Bracket,
    /// `total` divided by `n`.
    pub per_copy: Bracket,
}

#[derive(Clone, Debug)]
pub struct RegularizationTrace {
    pub kind: MeasureKind,
    pub entries: Vec<TraceEntry>,
}

impl RegularizationTrace {
    pub fn per_copy(&self) -> impl Iterator<Item = &Bracket> {
        self.entries.iter().map(|e| &e.per_copy)
    }
}

pub fn regularized_estimate(kind: MeasureKind, rho: &MultiState, n_max: usize) -> Result<RegularizationTrace> {
    regularized_estimate_with(kind, rho, n_max, &SolveOptions::default())
}

/// `(1/n)·M(ρ^{⊗n})` for `n = 1..=n_max`. Every power is size-checked
/// before any computation starts. The relative-entropy descent for `n > 1`
/// starts from the tensor product of the previous and the single-copy
/// minimizers.
pub fn regularized_estimate_with(
    kind: MeasureKind,
    rho: &MultiState,
    n_max: usize,
    opts: &SolveOptions,
) -> Result<RegularizationTrace> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    power_within_limit(rho, n_max)?;

    let mut entries = Vec::with_capacity(n_max);
    let mut single = None;
    let mut previous = None;
    for n in 1..=n_max {
        let rho_n = rho.tensor_power(n)?;
        let total = match kind {
            MeasureKind::RelEntropy => {
                let start = match (&previous, &single) {
                    (Some(p), Some(s)) => Some(crate::SeparableDecomposition::tensor(p, s)?),
                    _ => None,
                };
                let b = rel_ent_entanglement_with(&rho_n, &rel_options(opts, start))?;
                let dec = match &b.upper_certificate {
                    UpperCertificate::RelEntropyState(SepWitness::Decomposition(d)) => Some(d.clone()),
                    _ => None,
                };
                if n == 1 {
                    single = dec.clone();
                }
                previous = dec;
                b
            }
            _ => kind.evaluate(&rho_n, opts)?,
        };
        let per_copy = total.map_monotone(|v| v / n as f64);
        entries.push(TraceEntry { n, total, per_copy });
    }
    Ok(RegularizationTrace { kind, entries })
}
