//! Entanglement measures as certified brackets.

mod bracket;
mod regularize;
mod rel_entropy;
mod robustness;

pub use bracket::{Bracket, Exactness, LowerCertificate, UpperCertificate, BRACKET_SLACK};
pub use rel_entropy::{rel_ent_entanglement, rel_ent_entanglement_with, RelEntropyOptions};
pub use robustness::{
    global_robustness, global_robustness_with, log_mixing_robustness_with, log_robustness,
    log_robustness_with, mixing_robustness, mixing_robustness_with, smoothed_log_robustness,
    smoothed_log_robustness_with,
};
pub use regularize::{
    power_within_limit, regularized_estimate, regularized_estimate_with, MeasureKind,
    RegularizationTrace, TraceEntry, MAX_POWER_DIM,
};
