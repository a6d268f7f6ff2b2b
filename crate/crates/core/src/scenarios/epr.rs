//! Polarization-entangled photon pair measured by two linear polarimeters.
//!
//! The pair is emitted in `(|HH> + |VV>)/sqrt(2)`. A completed transaction
//! has three vertices (source, left detector, right detector) and is chosen
//! in a single stochastic step among the four joint outcomes, each weighted
//! by `|<outcome|pair>|^2`.

use std::fmt;

use num_complex::Complex64;

use super::{check_angle, ScenarioError};
use crate::engine::{Quantum, SelectionMode, SelectionPlan, Transaction, TrialRecord};
use crate::rng::{run_trials, TrialStreams};
use crate::spacetime::SpacetimeEvent;
use crate::stats::{binomial_sigma, chi_square, GofReport, DEFAULT_ALPHA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    /// Unit vector of this outcome for a polarimeter at `angle` (lab basis
    /// `H = (1, 0)`, `V = (0, 1)`).
    pub fn analyzer_vector(self, angle: f64) -> [f64; 2] {
        let (s, c) = angle.sin_cos();
        match self {
            Polarization::H => [c, s],
            Polarization::V => [-s, c],
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

/// Joint outcomes in the fixed order used for counts and echoes.
pub const JOINT_OUTCOME_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const JOINT_OUTCOMES: [(Polarization, Polarization); 4] = [
    (Polarization::H, Polarization::H),
    (Polarization::H, Polarization::V),
    (Polarization::V, Polarization::H),
    (Polarization::V, Polarization::V),
];

/// Two-photon polarization state over the lab basis `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangledPairState {
    amplitudes: [Complex64; 4],
}

impl EntangledPairState {
    /// `(|HH> + |VV>) / sqrt(2)`.
    pub fn phi_plus() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Self {
            amplitudes: [a, z, z, a],
        }
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The state with the two photons swapped.
    pub fn exchanged(&self) -> Self {
        let [hh, hv, vh, vv] = self.amplitudes;
        Self {
            amplitudes: [hh, vh, hv, vv],
        }
    }

    /// `<left(theta_l) right(theta_r)|pair>`.
    pub fn project(&self, left: (Polarization, f64), right: (Polarization, f64)) -> Complex64 {
        let u = left.0.analyzer_vector(left.1);
        let v = right.0.analyzer_vector(right.1);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                acc += self.amplitudes[2 * i + j] * (ui * vj);
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOutcome {
    pub left: Polarization,
    pub right: Polarization,
    pub amplitude: Complex64,
    pub strength: f64,
}

impl JointOutcome {
    pub fn label(&self) -> String {
        format!("{}{}", self.left, self.right)
    }

    pub fn is_opposite(&self) -> bool {
        self.left != self.right
    }
}

/// Joint outcome strengths for polarimeters at `theta_left`, `theta_right`,
/// in the order HH, HV, VH, VV.
pub fn epr_joint_strengths(theta_left: f64, theta_right: f64) -> Result<[JointOutcome; 4], ScenarioError> {
    check_angle(theta_left)?;
    check_angle(theta_right)?;
    let state = EntangledPairState::phi_plus();
    Ok(JOINT_OUTCOMES.map(|(l, r)| {
        let amplitude = state.project((l, theta_left), (r, theta_right));
        JointOutcome {
            left: l,
            right: r,
            amplitude,
            strength: amplitude.norm_sqr(),
        }
    }))
}

/// `P(same) - P(opposite)` from the joint strengths.
pub fn analytic_correlation(theta_left: f64, theta_right: f64) -> Result<f64, ScenarioError> {
    let j = epr_joint_strengths(theta_left, theta_right)?;
    Ok(j.iter()
        .map(|o| if o.is_opposite() { -o.strength } else { o.strength })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EprReport {
    pub theta_left: f64,
    pub theta_right: f64,
    pub records: Vec<TrialRecord>,
    /// HH, HV, VH, VV.
    pub counts: [u64; 4],
    pub strengths: [f64; 4],
    pub gof: Option<GofReport>,
}

impl EprReport {
    pub fn trials(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn opposite_fraction(&self) -> f64 {
        (self.counts[1] + self.counts[2]) as f64 / self.trials() as f64
    }

    pub fn expected_opposite_fraction(&self) -> f64 {
        self.strengths[1] + self.strengths[2]
    }

    /// Estimated `P(same) - P(opposite)`.
    pub fn correlation(&self) -> f64 {
        1.0 - 2.0 * self.opposite_fraction()
    }

    pub fn correlation_sigma(&self) -> f64 {
        let e = self.correlation();
        ((1.0 - e * e).max(0.0) / self.trials() as f64).sqrt()
    }
}

fn pair_vertices() -> (SpacetimeEvent, SpacetimeEvent, SpacetimeEvent) {
    (
        SpacetimeEvent::new("source", [0.0; 3], 0.0),
        SpacetimeEvent::new("left", [-1.0, 0.0, 0.0], 1.0),
        SpacetimeEvent::new("right", [1.0, 0.0, 0.0], 1.0),
    )
}

/// Simulates `trials` pair emissions. Each trial forms exactly one
/// three-vertex transaction.
pub fn run_epr(
    theta_left: f64,
    theta_right: f64,
    trials: u64,
    streams: TrialStreams,
    threads: usize,
) -> Result<EprReport, ScenarioError> {
    let joint = epr_joint_strengths(theta_left, theta_right)?;
    let strengths = joint.map(|o| o.strength);
    // all four joint echoes share one interval, so hierarchy order is the fixed label order
    let plan = SelectionPlan::from_strengths(&strengths, SelectionMode::Normalized)?;
    let (source, left, right) = pair_vertices();
    let records = run_trials(trials, threads, |t| {
        let mut rng = streams.stream(t);
        match plan.choose(&mut rng) {
            Some(k) => TrialRecord::Completed(Transaction::multi_vertex(
                t,
                &source,
                &[
                    (left.clone(), joint[k].left.to_string()),
                    (right.clone(), joint[k].right.to_string()),
                ],
                Quantum::photon(1.0),
            )),
            None => TrialRecord::NoTransaction { trial_index: t },
        }
    });
    let mut counts = [0u64; 4];
    for r in &records {
        if let Some(tx) = r.transaction() {
            let label = tx.outcome();
            let k = JOINT_OUTCOME_LABELS.iter().position(|l| *l == label).unwrap();
            counts[k] += 1;
        }
    }
    let gof = if trials == 0 {
        None
    } else {
        let total: f64 = strengths.iter().sum();
        let probs: Vec<f64> = strengths.iter().map(|s| s / total).collect();
        chi_square(&counts, &probs, DEFAULT_ALPHA).ok()
    };
    Ok(EprReport {
        theta_left,
        theta_right,
        records,
        counts,
        strengths,
        gof,
    })
}

/// One row of a correlation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub delta: f64,
    pub expected_opposite: f64,
    pub opposite: f64,
    pub sigma: f64,
    pub expected_correlation: f64,
    pub correlation: f64,
}

/// Opposite-outcome fraction over a grid of relative angles, with the right
/// polarimeter fixed at 0. Each grid point draws from its own stream family.
pub fn correlation_curve(
    deltas: &[f64],
    trials: u64,
    streams: TrialStreams,
    threads: usize,
) -> Result<Vec<CurvePoint>, ScenarioError> {
    deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let r = run_epr(delta, 0.0, trials, streams.derive(i as u64), threads)?;
            let expected = r.expected_opposite_fraction();
            Ok(CurvePoint {
                delta,
                expected_opposite: expected,
                opposite: r.opposite_fraction(),
                sigma: binomial_sigma(expected, trials),
                expected_correlation: 1.0 - 2.0 * expected,
                correlation: r.correlation(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn strengths(l: f64, r: f64) -> [f64; 4] {
        epr_joint_strengths(l, r).unwrap().map(|o| o.strength)
    }

    #[test]
    fn aligned_polarimeters_always_agree() {
        let s = strengths(0.0, 0.0);
        assert!((s[0] - 0.5).abs() < 1e-15 && (s[3] - 0.5).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn crossed_polarimeters_always_disagree() {
        let s = strengths(FRAC_PI_2, 0.0);
        assert!(s[0] < 1e-30 && s[3] < 1e-30);
        assert!((s[1] - 0.5).abs() < 1e-15 && (s[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn forty_five_degrees_is_uniform() {
        let s = strengths(FRAC_PI_4, 0.0);
        for x in s {
            assert!((x - 0.25).abs() < 1e-15);
        }
        let opposite = s[1] + s[2];
        assert!((opposite - (1.0 - FRAC_PI_4.cos().powi(2))).abs() < 1e-15);
    }

    #[test]
    fn angle_range_enforced() {
        assert_eq!(epr_joint_strengths(PI, 0.0), Err(ScenarioError::InvalidAngle(PI)));
        assert!(epr_joint_strengths(0.0, -0.1).is_err());
    }

    #[test]
    fn state_invariants() {
        let s = EntangledPairState::phi_plus();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.exchanged(), s);
    }

    #[test]
    fn zero_delta_never_opposite() {
        let r = run_epr(0.7, 0.7, 100_000, TrialStreams::new(1), 0).unwrap();
        assert_eq!(r.counts[1] + r.counts[2], 0);
        assert_eq!(r.trials(), 100_000);
        assert!(r.records.iter().all(|t| t.transaction().unwrap().vertices.len() == 3));
        assert!(r.gof.unwrap().pass);
    }

    #[test]
    fn opposite_fraction_at_22_5_degrees() {
        let delta = 22.5f64.to_radians();
        let n = 100_000;
        let r = run_epr(delta, 0.0, n, TrialStreams::new(8), 0).unwrap();
        let expected = delta.sin().powi(2);
        assert!((expected - 0.1464).abs() < 1e-4);
        assert!((r.opposite_fraction() - expected).abs() < 3.0 * binomial_sigma(expected, n));
    }

    #[test]
    fn ledger_balances_for_three_vertices() {
        let r = run_epr(0.3, 1.1, 500, TrialStreams::new(4), 1).unwrap();
        for rec in &r.records {
            let tx = rec.transaction().unwrap();
            let (e, p) = tx.ledger_balance();
            assert_eq!(e, 0.0);
            assert_eq!(p, [0.0; 3]);
            assert_eq!(tx.transferred_energy, 2.0);
        }
    }

    proptest! {
        #[test]
        fn normalized(l in 0.0..PI, r in 0.0..PI) {
            let s = strengths(l, r);
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn depends_only_on_relative_angle(l in 0.0..1.5f64, r in 0.0..1.5f64, rot in 0.0..1.5f64) {
            let a = strengths(l, r);
            let b = strengths(l + rot, r + rot);
            for k in 0..4 {
                prop_assert!((a[k] - b[k]).abs() < 1e-12);
            }
            let d = l - r;
            prop_assert!((a[0] - 0.5 * d.cos().powi(2)).abs() < 1e-12);
            prop_assert!((a[1] - 0.5 * d.sin().powi(2)).abs() < 1e-12);
        }

        #[test]
        fn exchange_swaps_mixed_outcomes(l in 0.0..PI, r in 0.0..PI) {
            let a = strengths(l, r);
            let b = strengths(r, l);
            prop_assert!((a[0] - b[0]).abs() < 1e-12);
            prop_assert!((a[3] - b[3]).abs() < 1e-12);
            prop_assert!((a[1] - b[2]).abs() < 1e-12);
            prop_assert!((a[2] - b[1]).abs() < 1e-12);
        }
    }
}
