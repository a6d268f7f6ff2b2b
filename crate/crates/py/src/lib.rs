//! Python bindings for `tqm_core`.
//!
//! Angles are radians throughout. Random draws are addressed by `(seed,
//! trial)`, so results do not depend on the `threads` argument.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tqm_core::cli;
use tqm_core::config;
use tqm_core::engine::{self, Candidate, Quantum, SelectionMode, TrialRecord};
use tqm_core::rng::{fold_trials, TrialStreams};
use tqm_core::scenarios::{self, ChshSettings, DetectorSpec, MaudlinSetup};
use tqm_core::spacetime::{self, IntervalKind};
use tqm_core::stats;
use tqm_core::wavefield;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<SelectionMode> {
    mode.parse().map_err(value_err)
}

#[pyclass(name = "SpacetimeEvent", frozen, from_py_object)]
#[derive(Clone)]
struct PyEvent(spacetime::SpacetimeEvent);

#[pymethods]
impl PyEvent {
    #[new]
    #[pyo3(signature = (id, position, time))]
    fn new(id: String, position: [f64; 3], time: f64) -> Self {
        Self(spacetime::SpacetimeEvent::new(id, position, time))
    }

    #[getter]
    fn id(&self) -> &str {
        &self.0.id
    }

    #[getter]
    fn position(&self) -> [f64; 3] {
        self.0.position
    }

    #[getter]
    fn time(&self) -> f64 {
        self.0.time
    }

    /// Separation from this event to `other`.
    fn interval(&self, other: &PyEvent) -> PyInterval {
        PyInterval(spacetime::interval(&self.0, &other.0))
    }

    fn __repr__(&self) -> String {
        let [x, y, z] = self.0.position;
        format!("SpacetimeEvent({:?}, ({x}, {y}, {z}), {})", self.0.id, self.0.time)
    }
}

#[pyclass(name = "Interval", frozen)]
struct PyInterval(spacetime::Interval);

#[pymethods]
impl PyInterval {
    #[getter]
    fn squared(&self) -> f64 {
        self.0.squared
    }

    #[getter]
    fn time_separation(&self) -> f64 {
        self.0.time_separation
    }

    /// `"timelike"`, `"lightlike"` or `"spacelike"`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.0.kind {
            IntervalKind::Timelike => "timelike",
            IntervalKind::Lightlike => "lightlike",
            IntervalKind::Spacelike => "spacelike",
        }
    }

    fn __repr__(&self) -> String {
        format!("Interval(squared={}, kind={})", self.0.squared, self.kind())
    }
}

/// Absorbers sorted into the order their echoes are weighed.
#[pyfunction]
fn hierarchy_order(emitter: &PyEvent, absorbers: Vec<PyEvent>) -> PyResult<Vec<PyEvent>> {
    let events: Vec<_> = absorbers.into_iter().map(|e| e.0).collect();
    let sorted = spacetime::hierarchy_order(&emitter.0, &events).map_err(value_err)?;
    Ok(sorted.into_iter().map(PyEvent).collect())
}

#[pyfunction]
#[pyo3(signature = (offer, confirmation=None))]
fn echo_strength(offer: Complex64, confirmation: Option<Complex64>) -> f64 {
    match confirmation {
        Some(c) => engine::echo_strength(offer, c),
        None => engine::conjugate_echo_strength(offer),
    }
}

/// Hierarchical selection over strengths already in hierarchy order.
#[pyclass(name = "SelectionPlan", frozen)]
struct PySelectionPlan(engine::SelectionPlan);

#[pymethods]
impl PySelectionPlan {
    #[new]
    #[pyo3(signature = (strengths, mode="normalized"))]
    fn new(strengths: Vec<f64>, mode: &str) -> PyResult<Self> {
        engine::SelectionPlan::from_strengths(&strengths, parse_mode(mode)?)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn conditionals(&self) -> Vec<f64> {
        self.0.conditionals().to_vec()
    }

    #[getter]
    fn marginals(&self) -> Vec<f64> {
        self.0.marginals().to_vec()
    }

    /// Index chosen in trial `trial` of stream family `seed`, or None.
    fn choose(&self, seed: u64, trial: u64) -> Option<usize> {
        self.0.choose(&mut TrialStreams::new(seed).stream(trial))
    }

    /// Per-index counts over `trials` trials, with the no-choice count last.
    #[pyo3(signature = (seed, trials, threads=0))]
    fn tally(&self, py: Python<'_>, seed: u64, trials: u64, threads: usize) -> Vec<u64> {
        let n = self.0.len();
        let streams = TrialStreams::new(seed);
        py.detach(|| {
            fold_trials(
                trials,
                threads,
                vec![0u64; n + 1],
                |acc, t| acc[self.0.choose(&mut streams.stream(t)).unwrap_or(n)] += 1,
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
        })
    }
}

#[pyclass(name = "Transaction", frozen, get_all)]
struct PyTransaction {
    trial_index: u64,
    /// Absorber ids joined by `+`; `None` when no echo was accepted.
    chosen_absorber: Option<String>,
    outcome: Option<String>,
    energy: f64,
    momentum: f64,
    /// `(vertex_id, energy, momentum)` per vertex.
    ledger: Vec<(String, f64, [f64; 3])>,
}

impl From<&TrialRecord> for PyTransaction {
    fn from(r: &TrialRecord) -> Self {
        match r.transaction() {
            Some(t) => Self {
                trial_index: t.trial_index,
                chosen_absorber: Some(t.chosen_absorber()),
                outcome: Some(t.outcome()),
                energy: t.transferred_energy,
                momentum: t.transferred_momentum,
                ledger: t
                    .ledger
                    .iter()
                    .map(|e| (e.vertex_id.clone(), e.energy, e.momentum))
                    .collect(),
            },
            None => Self {
                trial_index: r.trial_index(),
                chosen_absorber: None,
                outcome: None,
                energy: 0.0,
                momentum: 0.0,
                ledger: Vec::new(),
            },
        }
    }
}

#[pymethods]
impl PyTransaction {
    /// Summed energy and momentum over the ledger.
    fn ledger_balance(&self) -> (f64, [f64; 3]) {
        self.ledger.iter().fold((0.0, [0.0; 3]), |(e, p), (_, de, dp)| {
            (e + de, [p[0] + dp[0], p[1] + dp[1], p[2] + dp[2]])
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Transaction(trial_index={}, chosen_absorber={:?})",
            self.trial_index, self.chosen_absorber
        )
    }
}

/// One emitter offering a quantum to a set of candidate absorbers.
#[pyclass(name = "TransactionPlan", frozen)]
struct PyTransactionPlan(engine::TransactionPlan);

#[pymethods]
impl PyTransactionPlan {
    /// `absorbers` is a list of `(event, offer)` pairs; the offer is the
    /// complex amplitude arriving at that absorber.
    #[new]
    #[pyo3(signature = (emitter, absorbers, angular_frequency=1.0, wavenumber=None, mode="normalized"))]
    fn new(
        emitter: PyEvent,
        absorbers: Vec<(PyEvent, Complex64)>,
        angular_frequency: f64,
        wavenumber: Option<f64>,
        mode: &str,
    ) -> PyResult<Self> {
        let candidates: Vec<_> = absorbers
            .into_iter()
            .map(|(e, offer)| Candidate::new(e.0, offer))
            .collect();
        let quantum = Quantum::new(angular_frequency, wavenumber.unwrap_or(angular_frequency));
        engine::TransactionPlan::new(emitter.0, &candidates, quantum, parse_mode(mode)?)
            .map(Self)
            .map_err(value_err)
    }

    /// Absorber ids in hierarchy order.
    #[getter]
    fn order(&self) -> Vec<String> {
        self.0.candidates().iter().map(|c| c.event.id.clone()).collect()
    }

    /// Echo strengths in hierarchy order.
    #[getter]
    fn strengths(&self) -> Vec<f64> {
        self.0.echoes().iter().map(|e| e.strength).collect()
    }

    #[getter]
    fn marginals(&self) -> Vec<f64> {
        self.0.selection().marginals().to_vec()
    }

    #[pyo3(signature = (seed, trials, threads=0))]
    fn run(&self, py: Python<'_>, seed: u64, trials: u64, threads: usize) -> Vec<PyTransaction> {
        let records = py.detach(|| self.0.run(TrialStreams::new(seed), trials, threads));
        records.iter().map(PyTransaction::from).collect()
    }

    /// Counts in hierarchy order, with the no-transaction count last.
    #[pyo3(signature = (seed, trials, threads=0))]
    fn tally(&self, py: Python<'_>, seed: u64, trials: u64, threads: usize) -> Vec<u64> {
        let (mut counts, none) = py.detach(|| self.0.tally(TrialStreams::new(seed), trials, threads));
        counts.push(none);
        counts
    }
}

/// Handshake field `(x, t, value)` on a grid of `(x, t)` points.
#[pyfunction]
fn handshake_field(
    emitter: &PyEvent,
    absorber: &PyEvent,
    amplitude: Complex64,
    wavenumber: f64,
    angular_frequency: f64,
    grid: Vec<(f64, f64)>,
) -> PyResult<Vec<(f64, f64, Complex64)>> {
    let samples = wavefield::handshake_field(
        &emitter.0,
        &absorber.0,
        amplitude,
        wavenumber,
        angular_frequency,
        &grid,
    )
    .map_err(value_err)?;
    Ok(samples.into_iter().map(|s| (s.x, s.t, s.value)).collect())
}

/// Net `(energy, momentum)` carried by the emitter's two modes.
#[pyfunction]
fn emission_cost(emitter: &PyEvent, absorber: &PyEvent, wavenumber: f64, angular_frequency: f64) -> PyResult<(f64, f64)> {
    let modes = wavefield::HandshakeModes::new(
        &emitter.0,
        &absorber.0,
        Complex64::new(1.0, 0.0),
        wavenumber,
        angular_frequency,
    )
    .map_err(value_err)?;
    Ok(wavefield::emission_cost(&[modes.emitter_retarded, modes.emitter_advanced]))
}

#[pyclass(name = "GofReport", frozen, get_all)]
struct PyGof {
    statistic: f64,
    degrees_of_freedom: usize,
    p_value: f64,
    alpha: f64,
    passed: bool,
}

impl From<stats::GofReport> for PyGof {
    fn from(g: stats::GofReport) -> Self {
        Self {
            statistic: g.statistic,
            degrees_of_freedom: g.degrees_of_freedom,
            p_value: g.p_value,
            alpha: g.alpha,
            passed: g.pass,
        }
    }
}

#[pymethods]
impl PyGof {
    fn __repr__(&self) -> String {
        format!(
            "GofReport(statistic={}, dof={}, p_value={}, passed={})",
            self.statistic, self.degrees_of_freedom, self.p_value, self.passed
        )
    }
}

#[pyfunction]
#[pyo3(signature = (observed, expected, alpha=stats::DEFAULT_ALPHA))]
fn chi_square(observed: Vec<u64>, expected: Vec<f64>, alpha: f64) -> PyResult<PyGof> {
    stats::chi_square(&observed, &expected, alpha)
        .map(PyGof::from)
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (a, b, alpha=stats::DEFAULT_ALPHA))]
fn chi_square_homogeneity(a: Vec<u64>, b: Vec<u64>, alpha: f64) -> PyResult<PyGof> {
    stats::chi_square_homogeneity(&a, &b, alpha)
        .map(PyGof::from)
        .map_err(value_err)
}

/// Least-squares fit of `y = c x^n` in log space: `(n, stderr(n), c)`.
#[pyfunction]
fn power_law_fit(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let f = stats::power_law_fit(&xs, &ys).map_err(value_err)?;
    Ok((f.exponent, f.exponent_stderr, f.prefactor))
}

#[pyclass(name = "BubbleResult", frozen, get_all)]
struct PyBubble {
    /// Detector ids in input order.
    ids: Vec<String>,
    /// Counts per detector, plus the no-detection count last.
    counts: Vec<u64>,
    expected: Vec<f64>,
    one_detection_per_trial: bool,
    gof: Option<Py<PyGof>>,
}

/// Point source at the origin and detectors given as `(id, position,
/// weight)`.
#[pyfunction]
#[pyo3(signature = (detectors, trials, seed=0, mode="normalized", threads=0))]
fn run_bubble(
    py: Python<'_>,
    detectors: Vec<(String, [f64; 3], f64)>,
    trials: u64,
    seed: u64,
    mode: &str,
    threads: usize,
) -> PyResult<PyBubble> {
    let specs: Vec<_> = detectors
        .into_iter()
        .map(|(id, pos, w)| DetectorSpec::new(id, pos, w))
        .collect();
    let source = spacetime::SpacetimeEvent::new("source", [0.0; 3], 0.0);
    let mode = parse_mode(mode)?;
    let r = py
        .detach(|| scenarios::run_bubble(&source, &specs, mode, trials, TrialStreams::new(seed), threads))
        .map_err(value_err)?;
    let mut counts = r.tally.counts.clone();
    counts.push(r.tally.none);
    Ok(PyBubble {
        ids: r.tally.absorber_ids.clone(),
        counts,
        expected: r.expected.clone(),
        one_detection_per_trial: r.one_detection_per_trial(),
        gof: r.gof.map(|g| Py::new(py, PyGof::from(g))).transpose()?,
    })
}

/// Joint strengths keyed `HH`, `HV`, `VH`, `VV`.
#[pyfunction]
fn epr_joint_strengths(theta_left: f64, theta_right: f64) -> PyResult<Vec<(String, f64)>> {
    let joint = scenarios::epr_joint_strengths(theta_left, theta_right).map_err(value_err)?;
    Ok(joint.iter().map(|o| (o.label(), o.strength)).collect())
}

#[pyclass(name = "EprResult", frozen, get_all)]
struct PyEpr {
    theta_left: f64,
    theta_right: f64,
    /// HH, HV, VH, VV.
    counts: [u64; 4],
    strengths: [f64; 4],
    opposite_fraction: f64,
    expected_opposite_fraction: f64,
    correlation: f64,
    correlation_sigma: f64,
}

#[pyfunction]
#[pyo3(signature = (theta_left, theta_right, trials, seed=0, threads=0))]
fn run_epr(
    py: Python<'_>,
    theta_left: f64,
    theta_right: f64,
    trials: u64,
    seed: u64,
    threads: usize,
) -> PyResult<PyEpr> {
    let r = py
        .detach(|| scenarios::run_epr(theta_left, theta_right, trials, TrialStreams::new(seed), threads))
        .map_err(value_err)?;
    Ok(PyEpr {
        theta_left,
        theta_right,
        counts: r.counts,
        strengths: r.strengths,
        opposite_fraction: r.opposite_fraction(),
        expected_opposite_fraction: r.expected_opposite_fraction(),
        correlation: r.correlation(),
        correlation_sigma: r.correlation_sigma(),
    })
}

fn chsh_settings(settings: Option<(f64, f64, f64, f64)>) -> ChshSettings {
    match settings {
        Some((a, a_prime, b, b_prime)) => ChshSettings {
            a,
            a_prime,
            b,
            b_prime,
        },
        None => ChshSettings::standard(),
    }
}

#[pyclass(name = "ChshResult", frozen, get_all)]
struct PyChsh {
    s: f64,
    s_sigma: f64,
    s_analytic: f64,
    /// `(estimate, sigma, analytic)` for `(a,b), (a,b'), (a',b), (a',b')`.
    correlations: Vec<(f64, f64, f64)>,
}

/// CHSH `S` for settings `(a, a', b, b')`; defaults to 0, 45, 22.5, 67.5
/// degrees.
#[pyfunction]
#[pyo3(signature = (trials, settings=None, seed=0, threads=0))]
fn chsh(
    py: Python<'_>,
    trials: u64,
    settings: Option<(f64, f64, f64, f64)>,
    seed: u64,
    threads: usize,
) -> PyResult<PyChsh> {
    let settings = chsh_settings(settings);
    let r = py
        .detach(|| scenarios::chsh_s(settings, trials, TrialStreams::new(seed), threads))
        .map_err(value_err)?;
    Ok(PyChsh {
        s: r.s,
        s_sigma: r.s_sigma,
        s_analytic: r.s_analytic,
        correlations: r
            .correlations
            .iter()
            .map(|c| (c.estimate, c.sigma, c.analytic))
            .collect(),
    })
}

/// Local-hidden-variable `S` averaged over an even grid of hidden angles.
#[pyfunction]
#[pyo3(signature = (settings=None, grid=7200))]
fn lhv_chsh(settings: Option<(f64, f64, f64, f64)>, grid: usize) -> f64 {
    scenarios::lhv_chsh_exhaustive(&chsh_settings(settings), grid.max(1))
}

#[pyclass(name = "MaudlinResult", frozen, get_all)]
struct PyMaudlin {
    near_count: u64,
    far_count: u64,
    none_count: u64,
    far_consulted: u64,
    audit_ascending: bool,
    expected: [f64; 2],
}

/// The slow-particle layout with a contingent far absorber.
#[pyfunction]
#[pyo3(signature = (trials, near_strength=0.5, seed=0, threads=0))]
fn run_maudlin(py: Python<'_>, trials: u64, near_strength: f64, seed: u64, threads: usize) -> PyResult<PyMaudlin> {
    let mut setup = MaudlinSetup::slow_particle();
    setup.near_strength = near_strength;
    let r = py
        .detach(|| scenarios::run_maudlin(&setup, trials, TrialStreams::new(seed), threads))
        .map_err(value_err)?;
    Ok(PyMaudlin {
        near_count: r.near_count,
        far_count: r.far_count,
        none_count: r.none_count,
        far_consulted: r.far_consulted(),
        audit_ascending: r.audit_ascending(),
        expected: r.expected,
    })
}

/// Parses a scenario file's text and returns its canonical form.
#[pyfunction]
fn validate_config(text: &str) -> PyResult<String> {
    config::parse_config(text)
        .map(|c| c.to_canonical_string())
        .map_err(value_err)
}

#[pyclass(name = "RunSummary", frozen, get_all)]
struct PyRunSummary {
    scenario: String,
    passed: bool,
    /// `(name, passed, detail)`.
    checks: Vec<(String, bool, String)>,
    files: Vec<PathBuf>,
    text: String,
}

/// Runs a scenario file's text the way `tqm run` does, writing artifacts to
/// `out_dir`.
#[pyfunction]
#[pyo3(signature = (text, out_dir, threads=0))]
fn run_config(py: Python<'_>, text: &str, out_dir: PathBuf, threads: usize) -> PyResult<PyRunSummary> {
    let c = config::parse_config(text).map_err(value_err)?;
    let s = py.detach(|| cli::run(&c, &out_dir, threads)).map_err(value_err)?;
    Ok(PyRunSummary {
        scenario: s.scenario.to_string(),
        passed: s.passed(),
        checks: s
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.pass, c.detail.clone()))
            .collect(),
        files: s.files,
        text: s.text,
    })
}

#[pymodule]
pub fn tqm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEvent>()?;
    m.add_class::<PyInterval>()?;
    m.add_class::<PySelectionPlan>()?;
    m.add_class::<PyTransaction>()?;
    m.add_class::<PyTransactionPlan>()?;
    m.add_class::<PyGof>()?;
    m.add_class::<PyBubble>()?;
    m.add_class::<PyEpr>()?;
    m.add_class::<PyChsh>()?;
    m.add_class::<PyMaudlin>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_function(wrap_pyfunction!(hierarchy_order, m)?)?;
    m.add_function(wrap_pyfunction!(echo_strength, m)?)?;
    m.add_function(wrap_pyfunction!(handshake_field, m)?)?;
    m.add_function(wrap_pyfunction!(emission_cost, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_homogeneity, m)?)?;
    m.add_function(wrap_pyfunction!(power_law_fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_bubble, m)?)?;
    m.add_function(wrap_pyfunction!(epr_joint_strengths, m)?)?;
    m.add_function(wrap_pyfunction!(run_epr, m)?)?;
    m.add_function(wrap_pyfunction!(chsh, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_chsh, m)?)?;
    m.add_function(wrap_pyfunction!(run_maudlin, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
