//! CHSH combination of four pair runs, and a local-hidden-variable baseline.

use super::epr::{analytic_correlation, run_epr, EprReport, Polarization};
use super::{check_angle, ScenarioError};
use crate::rng::{fold_trials, TrialStreams, UniformSource};

/// Analyzer settings `a, a'` (left) and `b, b'` (right), radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    /// 0, 45, 22.5 and 67.5 degrees.
    pub fn standard() -> Self {
        Self {
            a: 0.0,
            a_prime: 45f64.to_radians(),
            b: 22.5f64.to_radians(),
            b_prime: 67.5f64.to_radians(),
        }
    }

    /// Setting pairs in the order `(a,b), (a,b'), (a',b), (a',b')`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        for t in [self.a, self.a_prime, self.b, self.b_prime] {
            check_angle(t)?;
        }
        Ok(())
    }
}

/// `|E(a,b) - E(a,b') + E(a',b) + E(a',b')|`.
fn combine(e: [f64; 4]) -> f64 {
    (e[0] - e[1] + e[2] + e[3]).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub theta_left: f64,
    pub theta_right: f64,
    pub estimate: f64,
    pub sigma: f64,
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshReport {
    pub settings: ChshSettings,
    pub correlations: [CorrelationEstimate; 4],
    pub runs: Vec<EprReport>,
    pub s: f64,
    pub s_sigma: f64,
    pub s_analytic: f64,
}

/// Monte Carlo and analytic CHSH `S`. Setting pair `i` uses stream family
/// `streams.derive(i)`.
pub fn chsh_s(
    settings: ChshSettings,
    trials_per_setting: u64,
    streams: TrialStreams,
    threads: usize,
) -> Result<ChshReport, ScenarioError> {
    settings.validate()?;
    let mut runs = Vec::with_capacity(4);
    let mut correlations = Vec::with_capacity(4);
    for (i, (l, r)) in settings.pairs().into_iter().enumerate() {
        let run = run_epr(l, r, trials_per_setting, streams.derive(i as u64), threads)?;
        correlations.push(CorrelationEstimate {
            theta_left: l,
            theta_right: r,
            estimate: run.correlation(),
            sigma: run.correlation_sigma(),
            analytic: analytic_correlation(l, r)?,
        });
        runs.push(run);
    }
    let correlations: [CorrelationEstimate; 4] = correlations.try_into().unwrap();
    let s = combine(correlations.map(|c| c.estimate));
    let s_analytic = combine(correlations.map(|c| c.analytic));
    let s_sigma = correlations.iter().map(|c| c.sigma * c.sigma).sum::<f64>().sqrt();
    Ok(ChshReport {
        settings,
        correlations,
        runs,
        s,
        s_sigma,
        s_analytic,
    })
}

/// Deterministic local model: both photons carry a shared polarization
/// angle `lambda`, and each analyzer reports H when its axis is within 45
/// degrees of `lambda`. Averaged over uniform `lambda` the correlation falls
/// linearly, `E = 1 - 4|delta|/pi`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LocalHiddenVariableModel;

impl LocalHiddenVariableModel {
    pub fn outcome(&self, analyzer: f64, lambda: f64) -> Polarization {
        if (2.0 * (analyzer - lambda)).cos() >= 0.0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }

    /// +1 when both sides agree, -1 otherwise.
    pub fn product(&self, left: f64, right: f64, lambda: f64) -> f64 {
        if self.outcome(left, lambda) == self.outcome(right, lambda) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn chsh_term(&self, settings: &ChshSettings, lambda: f64) -> f64 {
        let e = settings.pairs().map(|(l, r)| self.product(l, r, lambda));
        e[0] - e[1] + e[2] + e[3]
    }
}

/// Local-model correlation averaged over an evenly spaced `lambda` grid.
pub fn lhv_correlation(left: f64, right: f64, grid: usize) -> f64 {
    let model = LocalHiddenVariableModel;
    let step = std::f64::consts::PI / grid as f64;
    (0..grid)
        .map(|i| model.product(left, right, (i as f64 + 0.5) * step))
        .sum::<f64>()
        / grid as f64
}

/// Local-model `S` averaged over an evenly spaced `lambda` grid.
pub fn lhv_chsh_exhaustive(settings: &ChshSettings, grid: usize) -> f64 {
    let model = LocalHiddenVariableModel;
    let step = std::f64::consts::PI / grid as f64;
    let sum: f64 = (0..grid)
        .map(|i| model.chsh_term(settings, (i as f64 + 0.5) * step))
        .sum();
    (sum / grid as f64).abs()
}

/// Local-model `S` with `lambda` drawn per trial. All four settings see the
/// same `lambda` in a trial, so every trial contributes a term of +-2.
pub fn lhv_chsh_sampled(settings: &ChshSettings, trials: u64, streams: TrialStreams, threads: usize) -> f64 {
    let model = LocalHiddenVariableModel;
    let sum = fold_trials(
        trials,
        threads,
        0i64,
        |acc, t| {
            let lambda = streams.stream(t).next_uniform() * std::f64::consts::PI;
            *acc += model.chsh_term(settings, lambda) as i64;
        },
        |a, b| a + b,
    );
    (sum as f64 / trials as f64).abs()
}
