//! Worked scenarios built on the engine: the expanding single-photon bubble,
//! the three-vertex polarization-entangled pair, the CHSH combination of four
//! pair runs, and a near/far contingent-absorber layout.

mod bubble;
mod chsh;
mod epr;
mod maudlin;

pub use bubble::{bubble_candidates, bubble_echoes, run_bubble, BubbleReport, DetectorSpec};
pub use chsh::{
    chsh_s, lhv_chsh_exhaustive, lhv_chsh_sampled, lhv_correlation, ChshReport, ChshSettings,
    CorrelationEstimate, LocalHiddenVariableModel,
};
pub use epr::{
    analytic_correlation, correlation_curve, epr_joint_strengths, run_epr, CurvePoint,
    EntangledPairState, EprReport, JointOutcome, Polarization, JOINT_OUTCOME_LABELS,
};
pub use maudlin::{run_maudlin, AuditStep, MaudlinReport, MaudlinSetup};

use crate::engine::EngineError;
use crate::stats::StatsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("detector `{0}` sits on the source (r = 0)")]
    DetectorAtSource(String),
    #[error("detector `{id}` has invalid weight {weight}")]
    InvalidWeight { id: String, weight: f64 },
    #[error("angle {0} rad is outside [0, pi)")]
    InvalidAngle(f64),
    #[error("duplicate detector id `{0}`")]
    DuplicateId(String),
    #[error("need at least one detector")]
    NoDetectors,
    #[error("near absorber `{near}` is not at a strictly smaller interval than `{far}`")]
    MisorderedIntervals { near: String, far: String },
    #[error("near echo strength {0} is outside [0, 1]")]
    InvalidStrength(f64),
}

pub(crate) fn check_angle(theta: f64) -> Result<f64, ScenarioError> {
    if (0.0..std::f64::consts::PI).contains(&theta) {
        Ok(theta)
    } else {
        Err(ScenarioError::InvalidAngle(theta))
    }
}
