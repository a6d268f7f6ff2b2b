//! The transaction lifecycle: offers go out, absorbers answer with echoes,
//! the emitter weighs the echoes in hierarchy order and at most one
//! handshake completes.
//!
//! Selection walks the echoes nearest-first. Echo `i` is accepted with
//! probability `s_i / R_i`, where `R_i` is the echo mass not yet ruled out:
//! the remaining suffix sum in [`SelectionMode::Normalized`] or one minus the
//! rejected prefix in [`SelectionMode::Absolute`]. The product of rejections
//! telescopes, so echo `i` is chosen with probability `s_i / sum(s)` or `s_i`
//! regardless of where it sits in the hierarchy.

use std::io;

use num_complex::Complex64;

use crate::report::{csv_writer, fmt_real};
use crate::rng::{fold_trials, run_trials, TrialStreams, UniformSource};
use crate::spacetime::{hierarchy_indices, CausalityError, Interval, SpacetimeEvent};

/// Slack allowed on `sum(s) <= 1` in absolute mode.
pub const ABSOLUTE_MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMode {
    /// Echo strengths are renormalized; some transaction always forms when
    /// any echo is positive.
    #[default]
    Normalized,
    /// Strengths are absolute probabilities; with probability `1 - sum(s)`
    /// nothing forms.
    Absolute,
}

impl SelectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionMode::Normalized => "normalized",
            SelectionMode::Absolute => "absolute",
        }
    }
}

impl std::str::FromStr for SelectionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(SelectionMode::Normalized),
            "absolute" => Ok(SelectionMode::Absolute),
            other => Err(format!("unknown mode `{other}` (expected normalized|absolute)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error("echoes are not in hierarchy order at position {0}")]
    Unsorted(usize),
    #[error("echo strength {strength} of `{absorber}` is negative or not finite")]
    InvalidStrength { absorber: String, strength: f64 },
    #[error("absolute mode needs total echo strength <= 1, got {0}")]
    ExcessMass(f64),
    #[error("{candidates} candidates but {offers} offers")]
    LengthMismatch { candidates: usize, offers: usize },
    #[error("cannot tally an empty report")]
    EmptyReport,
    #[error("transaction chose `{0}`, which is not in the absorber set")]
    UnknownAbsorber(String),
}

/// An absorber's confirmation as seen by the emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct Echo {
    pub absorber_id: String,
    /// `psi psi*` at the emitter.
    pub strength: f64,
    pub interval_to_emitter: Interval,
    pub outcome_label: String,
}

/// Magnitude of the offer amplitude times the confirmation amplitude.
///
/// With the confirmation retracing the offer path, pass `offer.conj()` to get
/// `|psi|^2`.
pub fn echo_strength(offer_at_absorber: Complex64, confirmation: Complex64) -> f64 {
    (offer_at_absorber * confirmation).norm()
}

/// `psi psi*`.
pub fn conjugate_echo_strength(offer_at_absorber: Complex64) -> f64 {
    offer_at_absorber.norm_sqr()
}

/// Result of weighing one set of echoes.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Index into the hierarchy-ordered echo list.
    pub chosen: Option<usize>,
    /// Probability with which each echo is chosen by this rule.
    pub marginals: Vec<f64>,
    /// Indices of echoes weighed, in the order they were weighed.
    pub consulted: Vec<usize>,
}

/// Precomputed per-step acceptance probabilities for a fixed echo list.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPlan {
    conditionals: Vec<f64>,
    marginals: Vec<f64>,
}

impl SelectionPlan {
    pub fn new(echoes: &[Echo], mode: SelectionMode) -> Result<Self, EngineError> {
        for (i, w) in echoes.windows(2).enumerate() {
            if w[0].interval_to_emitter.hierarchy_cmp(&w[1].interval_to_emitter)
                == std::cmp::Ordering::Greater
            {
                return Err(EngineError::Unsorted(i + 1));
            }
        }
        let strengths: Vec<f64> = echoes.iter().map(|e| e.strength).collect();
        for e in echoes {
            if !(e.strength.is_finite() && e.strength >= 0.0) {
                return Err(EngineError::InvalidStrength {
                    absorber: e.absorber_id.clone(),
                    strength: e.strength,
                });
            }
        }
        Self::from_strengths(&strengths, mode)
    }

    /// Plan over bare strengths that are already in hierarchy order.
    pub fn from_strengths(strengths: &[f64], mode: SelectionMode) -> Result<Self, EngineError> {
        if let Some(&bad) = strengths.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(EngineError::InvalidStrength {
                absorber: String::new(),
                strength: bad,
            });
        }
        let n = strengths.len();
        let mut remaining = vec![0.0; n];
        match mode {
            SelectionMode::Normalized => {
                let mut acc = 0.0;
                for i in (0..n).rev() {
                    acc += strengths[i];
                    remaining[i] = acc;
                }
            }
            SelectionMode::Absolute => {
                let total: f64 = strengths.iter().sum();
                if total > 1.0 + ABSOLUTE_MASS_TOLERANCE {
                    return Err(EngineError::ExcessMass(total));
                }
                let mut rejected = 0.0;
                for i in 0..n {
                    remaining[i] = 1.0 - rejected;
                    rejected += strengths[i];
                }
            }
        }
        let conditionals: Vec<f64> = strengths
            .iter()
            .zip(&remaining)
            .map(|(&s, &r)| {
                if s <= 0.0 {
                    0.0
                } else if r <= s {
                    1.0
                } else {
                    s / r
                }
            })
            .collect();
        let mut survive = 1.0;
        let marginals = conditionals
            .iter()
            .map(|&p| {
                let m = survive * p;
                survive *= 1.0 - p;
                m
            })
            .collect();
        Ok(Self {
            conditionals,
            marginals,
        })
    }

    pub fn len(&self) -> usize {
        self.conditionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditionals.is_empty()
    }

    pub fn conditionals(&self) -> &[f64] {
        &self.conditionals
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn choose<R: UniformSource + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        self.walk(rng, |_| {})
    }

    pub fn choose_audited<R: UniformSource + ?Sized>(
        &self,
        rng: &mut R,
        consulted: &mut Vec<usize>,
    ) -> Option<usize> {
        self.walk(rng, |i| consulted.push(i))
    }

    fn walk<R: UniformSource + ?Sized>(&self, rng: &mut R, mut visit: impl FnMut(usize)) -> Option<usize> {
        for (i, &p) in self.conditionals.iter().enumerate() {
            visit(i);
            let accept = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.next_uniform() < p
            };
            if accept {
                return Some(i);
            }
        }
        None
    }
}

/// Weighs hierarchy-ordered echoes and picks zero or one of them.
pub fn hierarchical_select<R: UniformSource + ?Sized>(
    echoes: &[Echo],
    mode: SelectionMode,
    rng: &mut R,
) -> Result<SelectionOutcome, EngineError> {
    let plan = SelectionPlan::new(echoes, mode)?;
    let mut consulted = Vec::new();
    let chosen = plan.choose_audited(rng, &mut consulted);
    Ok(SelectionOutcome {
        chosen,
        marginals: plan.marginals,
        consulted,
    })
}

/// One quantum of energy and momentum magnitude, hbar = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantum {
    pub energy: f64,
    pub momentum: f64,
}

impl Quantum {
    pub fn new(angular_frequency: f64, wavenumber: f64) -> Self {
        Self {
            energy: angular_frequency,
            momentum: wavenumber,
        }
    }

    /// A photon with `|k| = w` (c = 1).
    pub fn photon(angular_frequency: f64) -> Self {
        Self::new(angular_frequency, angular_frequency)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub vertex_id: String,
    pub energy: f64,
    pub momentum: [f64; 3],
}

/// A completed handshake.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub trial_index: u64,
    /// Emitter first, then absorbers.
    pub vertices: Vec<SpacetimeEvent>,
    /// Conserved-quantity change at each vertex, parallel to `vertices`.
    pub ledger: Vec<LedgerEntry>,
    /// Energy delivered to the absorbers.
    pub transferred_energy: f64,
    /// Momentum magnitude carried along each leg.
    pub transferred_momentum: f64,
    /// Per-vertex tags, parallel to `vertices`.
    pub outcome_labels: Vec<String>,
}

fn unit_direction(from: &SpacetimeEvent, to: &SpacetimeEvent) -> [f64; 3] {
    let d = from.spatial_distance(to);
    if d == 0.0 {
        return [0.0; 3];
    }
    [
        (to.position[0] - from.position[0]) / d,
        (to.position[1] - from.position[1]) / d,
        (to.position[2] - from.position[2]) / d,
    ]
}

impl Transaction {
    /// Emitter hands one quantum to a single absorber.
    pub fn two_vertex(
        trial_index: u64,
        emitter: &SpacetimeEvent,
        absorber: &SpacetimeEvent,
        quantum: Quantum,
        outcome_label: &str,
    ) -> Self {
        Self::multi_vertex(
            trial_index,
            emitter,
            &[(absorber.clone(), outcome_label.to_string())],
            quantum,
        )
    }

    /// Emitter hands one quantum to each absorber; each leg carries momentum
    /// along the emitter-to-absorber direction and the emitter recoils with
    /// the opposite of their sum.
    pub fn multi_vertex(
        trial_index: u64,
        emitter: &SpacetimeEvent,
        absorbers: &[(SpacetimeEvent, String)],
        quantum: Quantum,
    ) -> Self {
        let mut ledger = Vec::with_capacity(absorbers.len() + 1);
        let mut recoil = [0.0; 3];
        let mut absorber_entries = Vec::with_capacity(absorbers.len());
        for (a, _) in absorbers {
            let dir = unit_direction(emitter, a);
            let p = dir.map(|c| c * quantum.momentum);
            for (r, c) in recoil.iter_mut().zip(p) {
                *r -= c;
            }
            absorber_entries.push(LedgerEntry {
                vertex_id: a.id.clone(),
                energy: quantum.energy,
                momentum: p,
            });
        }
        let n = absorbers.len() as f64;
        ledger.push(LedgerEntry {
            vertex_id: emitter.id.clone(),
            energy: -quantum.energy * n,
            momentum: recoil,
        });
        ledger.extend(absorber_entries);

        let mut vertices = vec![emitter.clone()];
        vertices.extend(absorbers.iter().map(|(a, _)| a.clone()));
        let mut outcome_labels = vec!["emit".to_string()];
        outcome_labels.extend(absorbers.iter().map(|(_, l)| l.clone()));
        Self {
            trial_index,
            vertices,
            ledger,
            transferred_energy: quantum.energy * n,
            transferred_momentum: quantum.momentum,
            outcome_labels,
        }
    }

    /// Absorber ids joined with `+`.
    pub fn chosen_absorber(&self) -> String {
        self.vertices[1..]
            .iter()
            .map(|v| v.id.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Absorber outcome labels concatenated (e.g. `HV`).
    pub fn outcome(&self) -> String {
        self.outcome_labels[1..].concat()
    }

    /// Sums of the energy and momentum entries over all vertices.
    pub fn ledger_balance(&self) -> (f64, [f64; 3]) {
        let mut p = [0.0; 3];
        let mut e = 0.0;
        for entry in &self.ledger {
            e += entry.energy;
            for (acc, c) in p.iter_mut().zip(entry.momentum) {
                *acc += c;
            }
        }
        (e, p)
    }

    pub fn ledger_balanced(&self, tol: f64) -> bool {
        let (e, p) = self.ledger_balance();
        e.abs() <= tol && p.iter().all(|c| c.abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialRecord {
    Completed(Transaction),
    NoTransaction { trial_index: u64 },
}

impl TrialRecord {
    pub fn trial_index(&self) -> u64 {
        match self {
            TrialRecord::Completed(t) => t.trial_index,
            TrialRecord::NoTransaction { trial_index } => *trial_index,
        }
    }

    pub fn transaction(&self) -> Option<&Transaction> {
        match self {
            TrialRecord::Completed(t) => Some(t),
            TrialRecord::NoTransaction { .. } => None,
        }
    }
}

/// A potential absorber and the offer amplitude that reaches it.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub event: SpacetimeEvent,
    pub offer: Complex64,
    pub outcome_label: String,
}

impl Candidate {
    pub fn new(event: SpacetimeEvent, offer: Complex64) -> Self {
        let outcome_label = event.id.clone();
        Self {
            event,
            offer,
            outcome_label,
        }
    }
}

/// Everything about a single-emitter run that does not change between
/// trials: hierarchy order, echoes and selection probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionPlan {
    emitter: SpacetimeEvent,
    ordered: Vec<Candidate>,
    echoes: Vec<Echo>,
    selection: SelectionPlan,
    quantum: Quantum,
}

impl TransactionPlan {
    pub fn new(
        emitter: SpacetimeEvent,
        candidates: &[Candidate],
        quantum: Quantum,
        mode: SelectionMode,
    ) -> Result<Self, EngineError> {
        let events: Vec<_> = candidates.iter().map(|c| c.event.clone()).collect();
        let order = hierarchy_indices(&emitter, &events)?;
        let ordered: Vec<Candidate> = order.iter().map(|(i, _)| candidates[*i].clone()).collect();
        let echoes: Vec<Echo> = order
            .iter()
            .map(|(i, iv)| Echo {
                absorber_id: candidates[*i].event.id.clone(),
                strength: conjugate_echo_strength(candidates[*i].offer),
                interval_to_emitter: *iv,
                outcome_label: candidates[*i].outcome_label.clone(),
            })
            .collect();
        let selection = SelectionPlan::new(&echoes, mode)?;
        Ok(Self {
            emitter,
            ordered,
            echoes,
            selection,
            quantum,
        })
    }

    pub fn emitter(&self) -> &SpacetimeEvent {
        &self.emitter
    }

    /// Candidates in hierarchy order.
    pub fn candidates(&self) -> &[Candidate] {
        &self.ordered
    }

    pub fn echoes(&self) -> &[Echo] {
        &self.echoes
    }

    pub fn selection(&self) -> &SelectionPlan {
        &self.selection
    }

    /// Index (in hierarchy order) of the absorber chosen in this trial.
    pub fn choose<R: UniformSource + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        self.selection.choose(rng)
    }

    pub fn complete(&self, trial_index: u64, chosen: Option<usize>) -> TrialRecord {
        match chosen {
            Some(i) => {
                let c = &self.ordered[i];
                TrialRecord::Completed(Transaction::two_vertex(
                    trial_index,
                    &self.emitter,
                    &c.event,
                    self.quantum,
                    &c.outcome_label,
                ))
            }
            None => TrialRecord::NoTransaction { trial_index },
        }
    }

    pub fn run_trial<R: UniformSource + ?Sized>(&self, trial_index: u64, rng: &mut R) -> TrialRecord {
        let chosen = self.choose(rng);
        self.complete(trial_index, chosen)
    }

    /// Full records for `trials` trials, ordered by trial index.
    pub fn run(&self, streams: TrialStreams, trials: u64, threads: usize) -> Vec<TrialRecord> {
        run_trials(trials, threads, |t| self.run_trial(t, &mut streams.stream(t)))
    }

    /// Choice counts in hierarchy order plus the no-transaction count,
    /// without materializing records.
    pub fn tally(&self, streams: TrialStreams, trials: u64, threads: usize) -> (Vec<u64>, u64) {
        let n = self.ordered.len();
        let counts = fold_trials(
            trials,
            threads,
            vec![0u64; n + 1],
            |acc, t| match self.choose(&mut streams.stream(t)) {
                Some(i) => acc[i] += 1,
                None => acc[n] += 1,
            },
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
        let none = counts[n];
        (counts[..n].to_vec(), none)
    }
}

/// One trial of the full lifecycle: echoes from every candidate, hierarchy
/// ordering, stochastic choice, completion.
pub fn run_transaction<R: UniformSource + ?Sized>(
    emitter: &SpacetimeEvent,
    absorbers: &[SpacetimeEvent],
    offers: &[Complex64],
    quantum: Quantum,
    mode: SelectionMode,
    trial_index: u64,
    rng: &mut R,
) -> Result<TrialRecord, EngineError> {
    if absorbers.len() != offers.len() {
        return Err(EngineError::LengthMismatch {
            candidates: absorbers.len(),
            offers: offers.len(),
        });
    }
    let candidates: Vec<_> = absorbers
        .iter()
        .zip(offers)
        .map(|(a, &o)| Candidate::new(a.clone(), o))
        .collect();
    let plan = TransactionPlan::new(emitter.clone(), &candidates, quantum, mode)?;
    Ok(plan.run_trial(trial_index, rng))
}

/// Per-absorber counts with a separate bin for trials where nothing formed.
#[derive(Debug, Clone, PartialEq)]
pub struct BornTally {
    pub absorber_ids: Vec<String>,
    pub counts: Vec<u64>,
    pub none: u64,
}

impl BornTally {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.none
    }

    /// Frequencies for each absorber followed by the `none` bin.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts
            .iter()
            .chain(std::iter::once(&self.none))
            .map(|&c| c as f64 / n)
            .collect()
    }

    pub fn frequency_of(&self, id: &str) -> Option<f64> {
        let i = self.absorber_ids.iter().position(|a| a == id)?;
        Some(self.counts[i] as f64 / self.total() as f64)
    }
}

/// Empirical frequency of each absorber over a set of trial records.
pub fn born_frequencies(records: &[TrialRecord], absorber_ids: &[String]) -> Result<BornTally, EngineError> {
    if records.is_empty() {
        return Err(EngineError::EmptyReport);
    }
    let mut counts = vec![0u64; absorber_ids.len()];
    let mut none = 0;
    for r in records {
        match r {
            TrialRecord::Completed(t) => {
                let id = t.chosen_absorber();
                let i = absorber_ids
                    .iter()
                    .position(|a| *a == id)
                    .ok_or(EngineError::UnknownAbsorber(id))?;
                counts[i] += 1;
            }
            TrialRecord::NoTransaction { .. } => none += 1,
        }
    }
    Ok(BornTally {
        absorber_ids: absorber_ids.to_vec(),
        counts,
        none,
    })
}

/// Writes `trial_index,chosen_absorber,outcome_label,energy,momentum` rows.
pub fn write_transaction_log<W: io::Write>(records: &[TrialRecord], out: W) -> io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["trial_index", "chosen_absorber", "outcome_label", "energy", "momentum"])?;
    for r in records {
        match r {
            TrialRecord::Completed(t) => w.write_record([
                t.trial_index.to_string(),
                t.chosen_absorber(),
                t.outcome(),
                fmt_real(t.transferred_energy),
                fmt_real(t.transferred_momentum),
            ])?,
            TrialRecord::NoTransaction { trial_index } => w.write_record([
                trial_index.to_string(),
                "none".to_string(),
                String::new(),
                fmt_real(0.0),
                fmt_real(0.0),
            ])?,
        }
    }
    w.flush()
}
