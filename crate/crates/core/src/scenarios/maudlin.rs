//! Contingent-absorber layout: a slow offer meets a near absorber first, and
//! a far absorber is only in place if the near one does not take the
//! quantum. The near echo is weighed before the far echo is admitted.

use std::cmp::Ordering;

use super::ScenarioError;
use crate::engine::{Quantum, SelectionMode, SelectionPlan, Transaction, TrialRecord};
use crate::rng::{run_trials, TrialStreams};
use crate::spacetime::{forward_interval, Interval, SpacetimeEvent};
use crate::stats::{chi_square, GofReport, DEFAULT_ALPHA};

#[derive(Debug, Clone, PartialEq)]
pub struct MaudlinSetup {
    pub emitter: SpacetimeEvent,
    pub near: SpacetimeEvent,
    pub far: SpacetimeEvent,
    /// Probability the near absorber takes the quantum. The far echo covers
    /// the remainder.
    pub near_strength: f64,
    pub quantum: Quantum,
}

impl MaudlinSetup {
    /// Emitter at the origin, a particle of speed 1/2 reaching the near
    /// absorber at x = 1 and the contingent far absorber at x = -3.
    pub fn slow_particle() -> Self {
        Self {
            emitter: SpacetimeEvent::new("emitter", [0.0; 3], 0.0),
            near: SpacetimeEvent::new("near", [1.0, 0.0, 0.0], 2.0),
            far: SpacetimeEvent::new("far", [-3.0, 0.0, 0.0], 6.0),
            near_strength: 0.5,
            quantum: Quantum::new(1.0, 0.5),
        }
    }
}

/// One echo weighed during a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditStep {
    pub absorber_id: String,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaudlinReport {
    pub records: Vec<TrialRecord>,
    /// Echoes weighed per trial, in order.
    pub audit: Vec<Vec<AuditStep>>,
    pub near_count: u64,
    pub far_count: u64,
    pub none_count: u64,
    pub expected: [f64; 2],
    pub gof: Option<GofReport>,
}

impl MaudlinReport {
    /// Every trial weighed its echoes in strictly ascending interval order.
    pub fn audit_ascending(&self) -> bool {
        self.audit.iter().all(|steps| {
            steps
                .windows(2)
                .all(|w| w[0].interval.hierarchy_cmp(&w[1].interval) == Ordering::Less)
        })
    }

    pub fn far_consulted(&self) -> u64 {
        self.audit.iter().filter(|s| s.len() > 1).count() as u64
    }

    pub fn frequencies(&self) -> [f64; 2] {
        let n = self.records.len() as f64;
        [self.near_count as f64 / n, self.far_count as f64 / n]
    }
}

pub fn run_maudlin(
    setup: &MaudlinSetup,
    trials: u64,
    streams: TrialStreams,
    threads: usize,
) -> Result<MaudlinReport, ScenarioError> {
    let s = setup.near_strength;
    if !(0.0..=1.0).contains(&s) {
        return Err(ScenarioError::InvalidStrength(s));
    }
    let near_iv = forward_interval(&setup.emitter, &setup.near).map_err(crate::engine::EngineError::from)?;
    let far_iv = forward_interval(&setup.emitter, &setup.far).map_err(crate::engine::EngineError::from)?;
    if near_iv.hierarchy_cmp(&far_iv) != Ordering::Less {
        return Err(ScenarioError::MisorderedIntervals {
            near: setup.near.id.clone(),
            far: setup.far.id.clone(),
        });
    }
    let expected = [s, 1.0 - s];
    let plan = SelectionPlan::from_strengths(&expected, SelectionMode::Absolute)?;
    let steps = [
        AuditStep {
            absorber_id: setup.near.id.clone(),
            interval: near_iv,
        },
        AuditStep {
            absorber_id: setup.far.id.clone(),
            interval: far_iv,
        },
    ];
    let absorbers = [&setup.near, &setup.far];

    let per_trial = run_trials(trials, threads, |t| {
        let mut consulted = Vec::with_capacity(2);
        let chosen = plan.choose_audited(&mut streams.stream(t), &mut consulted);
        let record = match chosen {
            Some(k) => TrialRecord::Completed(Transaction::two_vertex(
                t,
                &setup.emitter,
                absorbers[k],
                setup.quantum,
                &absorbers[k].id,
            )),
            None => TrialRecord::NoTransaction { trial_index: t },
        };
        let audit: Vec<AuditStep> = consulted.iter().map(|&i| steps[i].clone()).collect();
        (record, chosen, audit)
    });

    let mut counts = [0u64; 3];
    let mut records = Vec::with_capacity(per_trial.len());
    let mut audit = Vec::with_capacity(per_trial.len());
    for (r, chosen, a) in per_trial {
        counts[chosen.unwrap_or(2)] += 1;
        records.push(r);
        audit.push(a);
    }
    let gof = if trials == 0 {
        None
    } else {
        chi_square(&counts[..2], &expected, DEFAULT_ALPHA).ok()
    };
    Ok(MaudlinReport {
        records,
        audit,
        near_count: counts[0],
        far_count: counts[1],
        none_count: counts[2],
        expected,
        gof,
    })
}
