use std::time::Duration;

use crate::error::{Error, Result};
use crate::sep_geometry::{SepWitness, SolveStatus};
use crate::tensor_core::{positive_part_trace, relative_entropy_ops, trace_norm, HermitianOp};

/// Slack allowed between the endpoints of a valid bracket.
pub const BRACKET_SLACK: f64 = 1e-7;

/// How the endpoints were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    /// Closed form after an exact symmetry reduction.
    Exact,
    /// PPT relaxation with a matching inner certificate on a profile where
    /// PPT coincides with separability.
    PptExact,
    /// Relaxation lower bound and inner upper bound; the true value lies
    /// between them.
    Bracket,
}

/// Evidence behind the lower endpoint.
#[derive(Clone, Debug)]
pub enum LowerCertificate {
    /// Optimal value of the PPT relaxation (smaller of primal and dual
    /// objectives).
    Relaxation {
        status: SolveStatus,
        primal: f64,
        dual: f64,
        iterations: usize,
    },
    /// Linearization of a convex objective over the PPT set.
    LinearizedRelaxation { value_at_point: f64, linear_min: f64 },
    /// Minimum over PPT states of the maximum of linear cuts of a convex
    /// objective.
    CuttingPlanes { cuts: usize, primal: f64, dual: f64 },
    ClosedForm(String),
    Trivial(String),
}

impl LowerCertificate {
    pub fn summary(&self) -> String {
        match self {
            LowerCertificate::Relaxation {
                status,
                primal,
                dual,
                iterations,
            } => format!(
                "ppt relaxation {status:?}: primal {primal:.10}, dual {dual:.10}, {iterations} iterations"
            ),
            LowerCertificate::LinearizedRelaxation {
                value_at_point,
                linear_min,
            } => format!(
                "ppt linearization: value {value_at_point:.10} + directional minimum {linear_min:.10}"
            ),
            LowerCertificate::CuttingPlanes { cuts, primal, dual } => format!(
                "ppt cutting-plane model with {cuts} cuts: primal {primal:.10}, dual {dual:.10}"
            ),
            LowerCertificate::ClosedForm(s) => format!("closed form: {s}"),
            LowerCertificate::Trivial(s) => format!("trivial: {s}"),
        }
    }
}

/// Feasible point behind the upper endpoint. [`UpperCertificate::evaluate`]
/// recomputes the objective at that point from scratch.
#[derive(Clone, Debug)]
pub enum UpperCertificate {
    /// `X` separable with `X ⪰ ρ`; value `tr X − 1`.
    RobustnessCone(SepWitness),
    /// Separable `σ`; value `S(ρ‖σ)`.
    RelEntropyState(SepWitness),
    /// Separable cone elements with `mixture = ρ + mixer`; value `tr mixer`.
    MixingPair {
        mixer: SepWitness,
        mixture: SepWitness,
    },
    /// Perturbed `ρ̃` within the trace-norm ball and separable `X ⪰ ρ̃`;
    /// value `log₂ tr X`.
    Smoothed {
        perturbed: HermitianOp,
        radius: f64,
        cone: SepWitness,
    },
    /// Separable cone element `σ`; value `tr(ρ − σ)₊ + cost·tr σ`.
    HingeCone { sigma: SepWitness, cost: f64 },
    /// Separable state `ω`; value `tr(ρ − c·ω)₊`.
    HingeState { omega: SepWitness, factor: f64 },
    /// Separable state `π`; value `‖ρ − π‖₁`.
    TraceDistance(SepWitness),
    /// `log₂(1 + v)` of the inner certificate's value `v`.
    LogOnePlus(Box<UpperCertificate>),
    /// A value with no separable object behind it (e.g. `σ = 0`).
    Trivial(String),
}

impl UpperCertificate {
    /// Objective value of the certificate for input operator `rho`.
    /// Feasibility violations beyond `1e-8` are reported as errors.
    pub fn evaluate(&self, rho: &HermitianOp) -> Result<Option<f64>> {
        let check = |w: &SepWitness| -> Result<HermitianOp> {
            if !w.is_valid() {
                return Err(Error::Certificate(format!("invalid witness: {}", w.summary())));
            }
            w.operator()
        };
        Ok(Some(match self {
            UpperCertificate::RobustnessCone(w) => {
                let x = check(w)?;
                let slack = x.sub(rho).min_eigenvalue();
                if slack < -1e-8 {
                    return Err(Error::Certificate(format!("X − ρ has eigenvalue {slack:.3e}")));
                }
                x.trace() - 1.0
            }
            UpperCertificate::RelEntropyState(w) => {
                let s = check(w)?;
                relative_entropy_ops(rho, &s.scale(1.0 / s.trace()))
            }
            UpperCertificate::MixingPair { mixer, mixture } => {
                let s1 = check(mixer)?;
                let s2 = check(mixture)?;
                let dev = s2.sub(rho).sub(&s1).frobenius_norm();
                if dev > 1e-8 {
                    return Err(Error::Certificate(format!(
                        "mixture differs from ρ + mixer by {dev:.3e}"
                    )));
                }
                s1.trace()
            }
            UpperCertificate::Smoothed {
                perturbed,
                radius,
                cone,
            } => {
                let x = check(cone)?;
                let dist = trace_norm(&rho.sub(perturbed));
                if dist > radius + 1e-8 || perturbed.min_eigenvalue() < -1e-8 {
                    return Err(Error::Certificate(format!(
                        "perturbed state at distance {dist:.3e} from the input"
                    )));
                }
                let slack = x.sub(perturbed).min_eigenvalue();
                if slack < -1e-8 {
                    return Err(Error::Certificate(format!("X − ρ̃ has eigenvalue {slack:.3e}")));
                }
                (x.trace() / perturbed.trace()).max(1.0).log2()
            }
            UpperCertificate::HingeCone { sigma, cost } => {
                let s = check(sigma)?;
                positive_part_trace(&rho.sub(&s)) + cost * s.trace()
            }
            UpperCertificate::HingeState { omega, factor } => {
                let w = check(omega)?;
                positive_part_trace(&rho.add_scaled(&w, -factor / w.trace()))
            }
            UpperCertificate::TraceDistance(w) => {
                let p = check(w)?;
                trace_norm(&rho.sub(&p.scale(1.0 / p.trace())))
            }
            UpperCertificate::LogOnePlus(inner) => match inner.evaluate(rho)? {
                Some(v) => (1.0 + v.max(0.0)).log2(),
                None => return Ok(None),
            },
            UpperCertificate::Trivial(_) => return Ok(None),
        }))
    }

    pub fn summary(&self) -> String {
        match self {
            UpperCertificate::RobustnessCone(w) => format!("robustness cone element: {}", w.summary()),
            UpperCertificate::RelEntropyState(w) => format!("separable state: {}", w.summary()),
            UpperCertificate::MixingPair { mixer, mixture } => {
                format!("mixer: {}; mixture: {}", mixer.summary(), mixture.summary())
            }
            UpperCertificate::Smoothed { radius, cone, .. } => {
                format!("perturbed state within {radius}; cone element: {}", cone.summary())
            }
            UpperCertificate::HingeCone { sigma, cost } => {
                format!("cone element at cost {cost:.9}: {}", sigma.summary())
            }
            UpperCertificate::HingeState { omega, factor } => {
                format!("separable state at factor {factor:.9}: {}", omega.summary())
            }
            UpperCertificate::TraceDistance(w) => format!("separable state: {}", w.summary()),
            UpperCertificate::LogOnePlus(inner) => format!("log2(1 + value) of {}", inner.summary()),
            UpperCertificate::Trivial(s) => format!("trivial: {s}"),
        }
    }
}

/// Certified interval around an optimization over separable states.
#[derive(Clone, Debug)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub lower_certificate: LowerCertificate,
    pub upper_certificate: UpperCertificate,
    pub exactness: Exactness,
    pub iterations: usize,
    pub runtime: Duration,
    /// False when an iterative method stopped at its iteration limit; the
    /// endpoints remain valid bounds.
    pub converged: bool,
}

impl Bracket {
    /// Validates `lower ≤ upper + BRACKET_SLACK`. A lower endpoint that
    /// exceeds the upper one by less than the slack is clamped down.
    pub fn new(
        lower: f64,
        upper: f64,
        lower_certificate: LowerCertificate,
        upper_certificate: UpperCertificate,
        exactness: Exactness,
        iterations: usize,
        runtime: Duration,
    ) -> Result<Self> {
        if !(lower <= upper + BRACKET_SLACK) {
            return Err(Error::InconsistentBracket { lower, upper });
        }
        Ok(Self {
            lower: lower.min(upper),
            upper,
            lower_certificate,
            upper_certificate,
            exactness,
            iterations,
            runtime,
            converged: true,
        })
    }

    pub fn with_converged(mut self, converged: bool) -> Self {
        self.converged = converged;
        self
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        value >= self.lower - tol && value <= self.upper + tol
    }

    /// Applies a non-decreasing transform to both endpoints.
    pub fn map_monotone(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            lower: f(self.lower),
            upper: f(self.upper),
            ..self.clone()
        }
    }
}
