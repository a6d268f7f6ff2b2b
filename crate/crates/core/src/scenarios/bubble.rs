use std::collections::HashSet;

use num_complex::Complex64;

use super::ScenarioError;
use crate::engine::{
    born_frequencies, BornTally, Candidate, Echo, Quantum, SelectionMode, TransactionPlan, TrialRecord,
};
use crate::rng::TrialStreams;
use crate::spacetime::SpacetimeEvent;
use crate::stats::{chi_square, GofReport, StatsError, DEFAULT_ALPHA};

/// A detector around a point source.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub id: String,
    pub position: [f64; 3],
    /// Solid-angle weight of the detector's aperture.
    pub weight: f64,
    /// Polarimeter orientation, radians in `[0, pi)`. Unused by the bubble.
    pub polarimeter_angle: f64,
}

impl DetectorSpec {
    pub fn new(id: impl Into<String>, position: [f64; 3], weight: f64) -> Self {
        Self {
            id: id.into(),
            position,
            weight,
            polarimeter_angle: 0.0,
        }
    }
}

/// One candidate per detector. The offer reaches detector `d` at
/// `t = t_source + r` with amplitude `sqrt(weight) / r`.
pub fn bubble_candidates(
    source: &SpacetimeEvent,
    detectors: &[DetectorSpec],
) -> Result<Vec<Candidate>, ScenarioError> {
    let mut seen = HashSet::new();
    detectors
        .iter()
        .map(|d| {
            if !seen.insert(d.id.as_str()) {
                return Err(ScenarioError::DuplicateId(d.id.clone()));
            }
            if !(d.weight.is_finite() && d.weight >= 0.0) {
                return Err(ScenarioError::InvalidWeight {
                    id: d.id.clone(),
                    weight: d.weight,
                });
            }
            let probe = SpacetimeEvent::new(d.id.clone(), d.position, source.time);
            let r = source.spatial_distance(&probe);
            if r <= 0.0 || !r.is_finite() {
                return Err(ScenarioError::DetectorAtSource(d.id.clone()));
            }
            let event = SpacetimeEvent::new(d.id.clone(), d.position, source.time + r);
            Ok(Candidate::new(event, Complex64::new(d.weight.sqrt() / r, 0.0)))
        })
        .collect()
}

/// Echoes `weight / r^2` in hierarchy order; renormalized to unit sum in
/// normalized mode.
pub fn bubble_echoes(
    source: &SpacetimeEvent,
    detectors: &[DetectorSpec],
    mode: SelectionMode,
) -> Result<Vec<Echo>, ScenarioError> {
    let candidates = bubble_candidates(source, detectors)?;
    let plan = TransactionPlan::new(source.clone(), &candidates, Quantum::photon(1.0), mode)?;
    let mut echoes = plan.echoes().to_vec();
    if mode == SelectionMode::Normalized {
        let total: f64 = echoes.iter().map(|e| e.strength).sum();
        if total > 0.0 {
            for e in &mut echoes {
                e.strength /= total;
            }
        }
    }
    Ok(echoes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BubbleReport {
    pub records: Vec<TrialRecord>,
    /// Counts in detector input order, plus the none bin.
    pub tally: BornTally,
    /// Born probabilities in the same layout as `tally.frequencies()`.
    pub expected: Vec<f64>,
    /// `None` when there is nothing to test (single bin or no trials).
    pub gof: Option<GofReport>,
}

impl BubbleReport {
    /// Every trial produced exactly one two-vertex transaction.
    pub fn one_detection_per_trial(&self) -> bool {
        self.records.iter().enumerate().all(|(i, r)| {
            r.trial_index() == i as u64
                && matches!(r, TrialRecord::Completed(t) if t.vertices.len() == 2)
        })
    }
}

pub fn run_bubble(
    source: &SpacetimeEvent,
    detectors: &[DetectorSpec],
    mode: SelectionMode,
    trials: u64,
    streams: TrialStreams,
    threads: usize,
) -> Result<BubbleReport, ScenarioError> {
    if detectors.is_empty() {
        return Err(ScenarioError::NoDetectors);
    }
    let candidates = bubble_candidates(source, detectors)?;
    let plan = TransactionPlan::new(source.clone(), &candidates, Quantum::photon(1.0), mode)?;
    let records = plan.run(streams, trials, threads);

    let ids: Vec<String> = detectors.iter().map(|d| d.id.clone()).collect();
    let mut expected: Vec<f64> = ids
        .iter()
        .map(|id| {
            let k = plan.echoes().iter().position(|e| e.absorber_id == *id).unwrap();
            plan.selection().marginals()[k]
        })
        .collect();
    let none = (1.0 - expected.iter().sum::<f64>()).max(0.0);
    expected.push(none);

    let tally = if records.is_empty() {
        BornTally {
            absorber_ids: ids,
            counts: vec![0; detectors.len()],
            none: 0,
        }
    } else {
        born_frequencies(&records, &ids)?
    };
    let gof = if trials == 0 {
        None
    } else {
        let mut observed = tally.counts.clone();
        observed.push(tally.none);
        let probs = renormalize(&expected);
        match chi_square(&observed, &probs, DEFAULT_ALPHA) {
            Ok(r) => Some(r),
            Err(StatsError::TooFewBins) => None,
            Err(e) => return Err(e.into()),
        }
    };
    Ok(BubbleReport {
        records,
        tally,
        expected,
        gof,
    })
}

// absorbs rounding so the probabilities pass the unit-sum check
fn renormalize(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::within_sigma;

    fn origin() -> SpacetimeEvent {
        SpacetimeEvent::new("source", [0.0; 3], 0.0)
    }

    #[test]
    fn inverse_square_echoes() {
        let d = [
            DetectorSpec::new("far", [-2.0, 0.0, 0.0], 1.0),
            DetectorSpec::new("near", [0.0, 1.0, 0.0], 1.0),
        ];
        let e = bubble_echoes(&origin(), &d, SelectionMode::Normalized).unwrap();
        // 1 : 1/4 normalized
        assert_eq!(e[0].absorber_id, "near");
        assert!((e[0].strength - 0.8).abs() < 1e-15);
        assert!((e[1].strength - 0.2).abs() < 1e-15);
        let raw = bubble_echoes(&origin(), &d, SelectionMode::Absolute);
        // 1 + 1/4 > 1
        assert!(raw.is_err());
    }

    #[test]
    fn single_and_symmetric_detectors() {
        let one = [DetectorSpec::new("only", [0.0, 0.0, 3.0], 0.2)];
        let e = bubble_echoes(&origin(), &one, SelectionMode::Normalized).unwrap();
        assert_eq!(e[0].strength, 1.0);

        let ring: Vec<_> = (0..6)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 3.0;
                DetectorSpec::new(format!("d{i}"), [2.0 * a.cos(), 2.0 * a.sin(), 0.0], 1.0)
            })
            .collect();
        let e = bubble_echoes(&origin(), &ring, SelectionMode::Normalized).unwrap();
        for x in e {
            assert!((x.strength - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_layouts() {
        let at_source = [DetectorSpec::new("bad", [0.0; 3], 1.0)];
        assert_eq!(
            bubble_echoes(&origin(), &at_source, SelectionMode::Normalized),
            Err(ScenarioError::DetectorAtSource("bad".into()))
        );
        let dup = [
            DetectorSpec::new("a", [1.0, 0.0, 0.0], 1.0),
            DetectorSpec::new("a", [2.0, 0.0, 0.0], 1.0),
        ];
        assert_eq!(
            bubble_echoes(&origin(), &dup, SelectionMode::Normalized),
            Err(ScenarioError::DuplicateId("a".into()))
        );
        let neg = [DetectorSpec::new("a", [1.0, 0.0, 0.0], -1.0)];
        assert!(matches!(
            bubble_echoes(&origin(), &neg, SelectionMode::Normalized),
            Err(ScenarioError::InvalidWeight { .. })
        ));
        assert_eq!(
            run_bubble(&origin(), &[], SelectionMode::Normalized, 10, TrialStreams::new(0), 1),
            Err(ScenarioError::NoDetectors)
        );
    }

    #[test]
    fn one_detector_gets_everything() {
        let one = [DetectorSpec::new("only", [0.0, 0.0, 3.0], 0.2)];
        let r = run_bubble(&origin(), &one, SelectionMode::Normalized, 1000, TrialStreams::new(3), 0).unwrap();
        assert_eq!(r.tally.counts, [1000]);
        assert!(r.one_detection_per_trial());
        assert!(r.gof.is_none());
    }

    #[test]
    fn six_equal_detectors_uniform() {
        let ring: Vec<_> = (0..6)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 3.0;
                DetectorSpec::new(format!("d{i}"), [a.cos(), a.sin(), 0.0], 1.0)
            })
            .collect();
        let n = 100_000;
        let r = run_bubble(&origin(), &ring, SelectionMode::Normalized, n, TrialStreams::new(17), 0).unwrap();
        assert!(r.one_detection_per_trial());
        for f in &r.tally.frequencies()[..6] {
            assert!(within_sigma(*f, 1.0 / 6.0, n, 3.0));
        }
        assert!(r.gof.as_ref().unwrap().pass);
    }

    #[test]
    fn absolute_mode_has_none_bin() {
        // 0.25 + 0.0625 of the mass lands on detectors
        let d = [
            DetectorSpec::new("a", [2.0, 0.0, 0.0], 1.0),
            DetectorSpec::new("b", [0.0, 4.0, 0.0], 1.0),
        ];
        let n = 50_000;
        let r = run_bubble(&origin(), &d, SelectionMode::Absolute, n, TrialStreams::new(2), 0).unwrap();
        assert!((r.expected[2] - 0.6875).abs() < 1e-15);
        assert!(within_sigma(r.tally.frequencies()[2], 0.6875, n, 3.0));
        assert!(!r.one_detection_per_trial());
        assert!(r.gof.unwrap().pass);
    }
}
