//! `tqm` command line: validate scenario files, run them, dump handshake
//! fields.
//!
//! A run writes its artifacts into the output directory once all trials are
//! done and reports a list of checks; the process exits 0 only when every
//! check passed.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::config::{parse_config, ConfigErrors, CurveSpec, FieldSpec, Scenario, ScenarioConfig};
use crate::engine::{write_transaction_log, SelectionMode, TrialRecord};
use crate::report::{csv_writer, fmt_real};
use crate::rng::TrialStreams;
use crate::scenarios::{
    chsh_s, correlation_curve, lhv_chsh_exhaustive, lhv_chsh_sampled, lhv_correlation, run_bubble,
    run_epr, run_maudlin, ChshSettings, DetectorSpec, MaudlinReport, ScenarioError,
};
use crate::spacetime::SpacetimeEvent;
use crate::stats::GofReport;
use crate::wavefield::{handshake_field, rect_grid, write_field_csv, FieldError, FieldSample};

/// Environment variable capping trial parallelism (0 = automatic).
pub const THREADS_ENV: &str = "TQM_THREADS";

/// Out-of-window field magnitudes must stay below this times the amplitude.
pub const FIELD_TOLERANCE: f64 = 1e-12;

/// Grid resolution of the local-model baseline reported next to CHSH runs.
const LHV_GRID: usize = 7200;

#[derive(Debug, Parser)]
#[command(name = "tqm", version, about = "Monte Carlo emitter-absorber transaction simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a scenario and write its artifacts.
    Run(RunArgs),
    /// Check a scenario file and print its canonical form.
    Validate {
        /// Scenario file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the handshake field of a handshake-field scenario as CSV.
    FieldDump {
        /// Scenario file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the file's trial count.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Directory for logs and the summary.
    #[arg(long, default_value = "tqm-out")]
    pub out: PathBuf,
    /// Echo weighting, `normalized` or `absolute`.
    #[arg(long)]
    pub mode: Option<SelectionMode>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads `TQM_THREADS`; unset or empty means automatic.
pub fn threads_from_env(value: Option<&str>) -> Result<usize, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(0),
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
    }
}

pub fn apply_overrides(
    mut config: ScenarioConfig,
    seed: Option<u64>,
    trials: Option<u64>,
    mode: Option<SelectionMode>,
) -> ScenarioConfig {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(m) = mode {
        config.mode = m;
    }
    config
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    fn gof(name: impl Into<String>, gof: &GofReport) -> Self {
        Self::new(
            name,
            gof.pass,
            format!(
                "chi2={} dof={} p={} alpha={}",
                gof.statistic, gof.degrees_of_freedom, gof.p_value, gof.alpha
            ),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenario: &'static str,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
    pub text: String,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
        self.files.push(path);
        Ok(())
    }
}

fn all_balanced(records: &[TrialRecord]) -> bool {
    records
        .iter()
        .filter_map(TrialRecord::transaction)
        .all(|t| t.ledger_balanced(1e-12))
}

/// Executes a validated scenario and writes artifacts under `out_dir`.
pub fn run(config: &ScenarioConfig, out_dir: &Path, threads: usize) -> Result<RunSummary, CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut art = Artifacts {
        dir: out_dir,
        files: Vec::new(),
    };
    let streams = TrialStreams::new(config.seed);
    let mut checks = Vec::new();
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", config.scenario.name());
    let _ = writeln!(text, "seed: {}", config.seed);
    let _ = writeln!(text, "trials: {}", config.trials);
    let _ = writeln!(text, "mode: {}", config.mode.as_str());

    match &config.scenario {
        Scenario::Bubble { source, detectors } => {
            run_bubble_scenario(config, source, detectors, streams, threads, &mut art, &mut checks, &mut text)?
        }
        Scenario::Epr {
            theta_left,
            theta_right,
            curve,
        } => {
            let r = run_epr(*theta_left, *theta_right, config.trials, streams, threads)?;
            art.write("transactions.csv", |b| write_transaction_log(&r.records, b))?;
            let _ = writeln!(text, "theta_left_rad: {}", r.theta_left);
            let _ = writeln!(text, "theta_right_rad: {}", r.theta_right);
            for (k, label) in crate::scenarios::JOINT_OUTCOME_LABELS.iter().enumerate() {
                let _ = writeln!(text, "count_{label}: {} expected_{label}: {}", r.counts[k], r.strengths[k]);
            }
            if r.trials() > 0 {
                let _ = writeln!(text, "opposite_fraction: {}", r.opposite_fraction());
            }
            let _ = writeln!(text, "expected_opposite_fraction: {}", r.expected_opposite_fraction());
            if let Some(g) = &r.gof {
                checks.push(Check::gof("epr_outcomes", g));
            }
            if r.theta_left == r.theta_right {
                let opposite = r.counts[1] + r.counts[2];
                checks.push(Check::new("aligned_no_opposite", opposite == 0, format!("opposite={opposite}")));
            }
            checks.push(Check::new("ledger_balanced", all_balanced(&r.records), ""));
            write_curve(config, curve, streams.derive(u64::MAX), threads, &mut art, &mut checks)?;
        }
        Scenario::Chsh { settings, curve } => {
            run_chsh_scenario(config, settings, curve, streams, threads, &mut art, &mut checks, &mut text)?
        }
        Scenario::Maudlin(setup) => {
            let r = run_maudlin(setup, config.trials, streams, threads)?;
            art.write("transactions.csv", |b| write_transaction_log(&r.records, b))?;
            art.write("audit.csv", |b| write_audit(&r, b))?;
            let _ = writeln!(text, "near_count: {}", r.near_count);
            let _ = writeln!(text, "far_count: {}", r.far_count);
            let _ = writeln!(text, "none_count: {}", r.none_count);
            let _ = writeln!(text, "far_consulted: {}", r.far_consulted());
            let _ = writeln!(text, "expected_near: {}", r.expected[0]);
            checks.push(Check::new("audit_ascending", r.audit_ascending(), ""));
            if let Some(g) = &r.gof {
                checks.push(Check::gof("near_far_frequencies", g));
            }
            checks.push(Check::new("ledger_balanced", all_balanced(&r.records), ""));
        }
        Scenario::HandshakeField(spec) => {
            let samples = field_samples(spec)?;
            art.write("field.csv", |b| write_field_csv(&samples, b))?;
            let (outside, inside) = field_errors(spec, &samples);
            let scale = spec.amplitude.abs();
            let _ = writeln!(text, "samples: {}", samples.len());
            let _ = writeln!(text, "max_out_of_window: {outside}");
            let _ = writeln!(text, "max_standing_wave_error: {inside}");
            checks.push(Check::new(
                "out_of_window_cancellation",
                outside <= FIELD_TOLERANCE * scale,
                format!("max |field| = {outside}"),
            ));
            checks.push(Check::new(
                "standing_wave_identity",
                inside <= FIELD_TOLERANCE * 2.0 * scale,
                format!("max error = {inside}"),
            ));
        }
    }

    for c in &checks {
        let _ = writeln!(
            text,
            "check {}: {}{}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
        );
    }
    let passed = checks.iter().all(|c| c.pass);
    let _ = writeln!(text, "result: {}", if passed { "PASS" } else { "FAIL" });
    art.write("summary.txt", |b| {
        b.extend_from_slice(text.as_bytes());
        Ok(())
    })?;
    Ok(RunSummary {
        scenario: config.scenario.name(),
        checks,
        files: art.files,
        text,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_bubble_scenario(
    config: &ScenarioConfig,
    source: &SpacetimeEvent,
    detectors: &[DetectorSpec],
    streams: TrialStreams,
    threads: usize,
    art: &mut Artifacts<'_>,
    checks: &mut Vec<Check>,
    text: &mut String,
) -> Result<(), CliError> {
    let r = run_bubble(source, detectors, config.mode, config.trials, streams, threads)?;
    art.write("transactions.csv", |b| write_transaction_log(&r.records, b))?;
    let freqs = if r.records.is_empty() {
        vec![0.0; r.expected.len()]
    } else {
        r.tally.frequencies()
    };
    for (i, id) in r.tally.absorber_ids.iter().enumerate() {
        let _ = writeln!(
            text,
            "detector {id}: count={} frequency={} expected={}",
            r.tally.counts[i], freqs[i], r.expected[i]
        );
    }
    let last = r.expected.len() - 1;
    let _ = writeln!(text, "none: count={} expected={}", r.tally.none, r.expected[last]);
    if let Some(g) = &r.gof {
        checks.push(Check::gof("born_frequencies", g));
    }
    if config.mode == SelectionMode::Normalized {
        checks.push(Check::new("one_detection_per_trial", r.one_detection_per_trial(), ""));
    }
    checks.push(Check::new("ledger_balanced", all_balanced(&r.records), ""));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_chsh_scenario(
    config: &ScenarioConfig,
    settings: &ChshSettings,
    curve: &CurveSpec,
    streams: TrialStreams,
    threads: usize,
    art: &mut Artifacts<'_>,
    checks: &mut Vec<Check>,
    text: &mut String,
) -> Result<(), CliError> {
    let r = chsh_s(*settings, config.trials, streams, threads)?;
    const NAMES: [&str; 4] = ["a_b", "a_bprime", "aprime_b", "aprime_bprime"];
    for (run, name) in r.runs.iter().zip(NAMES) {
        art.write(&format!("transactions_{name}.csv"), |b| write_transaction_log(&run.records, b))?;
        if let Some(g) = &run.gof {
            checks.push(Check::gof(format!("outcomes_{name}"), g));
        }
        checks.push(Check::new(format!("ledger_balanced_{name}"), all_balanced(&run.records), ""));
    }
    for (c, name) in r.correlations.iter().zip(NAMES) {
        let _ = writeln!(
            text,
            "E_{name}: estimate={} sigma={} analytic={}",
            c.estimate, c.sigma, c.analytic
        );
    }
    let lhv_grid = lhv_chsh_exhaustive(settings, LHV_GRID);
    let lhv_sampled = lhv_chsh_sampled(settings, config.trials.max(1), streams.derive(u64::MAX - 1), threads);
    let _ = writeln!(text, "S_estimate: {}", r.s);
    let _ = writeln!(text, "S_sigma: {}", r.s_sigma);
    let _ = writeln!(text, "S_analytic: {}", r.s_analytic);
    let _ = writeln!(text, "S_reference_2sqrt2: {}", 2.0 * std::f64::consts::SQRT_2);
    let _ = writeln!(text, "S_lhv_grid: {lhv_grid}");
    let _ = writeln!(text, "S_lhv_sampled: {lhv_sampled}");
    if config.trials > 0 {
        let ok = (r.s - r.s_analytic).abs() <= 5.0 * r.s_sigma + 1e-12;
        checks.push(Check::new("s_matches_analytic", ok, format!("|S - S_analytic| = {}", (r.s - r.s_analytic).abs())));
    }
    checks.push(Check::new("lhv_bound", lhv_grid <= 2.0 && lhv_sampled <= 2.0, ""));
    write_curve(config, curve, streams.derive(u64::MAX), threads, art, checks)
}

fn write_curve(
    config: &ScenarioConfig,
    curve: &CurveSpec,
    streams: TrialStreams,
    threads: usize,
    art: &mut Artifacts<'_>,
    checks: &mut Vec<Check>,
) -> Result<(), CliError> {
    let trials = curve.trials.unwrap_or(config.trials);
    if trials == 0 {
        return Ok(());
    }
    let deltas = curve.deltas();
    let points = correlation_curve(&deltas, trials, streams, threads)?;
    let outside = points
        .iter()
        .filter(|p| (p.opposite - p.expected_opposite).abs() > 3.0 * p.sigma)
        .count();
    art.write("correlation.csv", |b| {
        let mut w = csv_writer(b);
        w.write_record([
            "delta_deg",
            "delta_rad",
            "expected_opposite",
            "opposite",
            "sigma",
            "expected_correlation",
            "correlation",
            "lhv_correlation",
        ])?;
        for p in &points {
            w.write_record([
                fmt_real(p.delta.to_degrees()),
                fmt_real(p.delta),
                fmt_real(p.expected_opposite),
                fmt_real(p.opposite),
                fmt_real(p.sigma),
                fmt_real(p.expected_correlation),
                fmt_real(p.correlation),
                fmt_real(lhv_correlation(p.delta, 0.0, LHV_GRID)),
            ])?;
        }
        w.flush()
    })?;
    checks.push(Check::new(
        "correlation_curve_3sigma",
        outside == 0,
        format!("{outside} of {} points outside 3 sigma", points.len()),
    ));
    Ok(())
}

fn write_audit<W: io::Write>(r: &MaudlinReport, out: W) -> io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["trial_index", "step", "absorber_id", "squared_interval", "time_separation"])?;
    for (t, steps) in r.audit.iter().enumerate() {
        for (k, s) in steps.iter().enumerate() {
            w.write_record([
                t.to_string(),
                k.to_string(),
                s.absorber_id.clone(),
                fmt_real(s.interval.squared),
                fmt_real(s.interval.time_separation),
            ])?;
        }
    }
    w.flush()
}

fn field_samples(spec: &FieldSpec) -> Result<Vec<FieldSample>, FieldError> {
    let grid = rect_grid(spec.x_range, spec.x_points, spec.t_range, spec.t_points);
    handshake_field(
        &spec.emitter(),
        &spec.absorber(),
        Complex64::new(spec.amplitude, 0.0),
        spec.wavenumber,
        spec.angular_frequency,
        &grid,
    )
}

/// Largest out-of-window magnitude and largest deviation from
/// `2iA sin(kx - wt)` inside the open window.
pub fn field_errors(spec: &FieldSpec, samples: &[FieldSample]) -> (f64, f64) {
    let mut outside: f64 = 0.0;
    let mut inside: f64 = 0.0;
    for s in samples {
        if s.t < spec.emitter_t || s.t > spec.absorber_t {
            outside = outside.max(s.value.norm());
        } else if s.t > spec.emitter_t && s.t < spec.absorber_t {
            let phase = spec.wavenumber * s.x - spec.angular_frequency * s.t;
            let expect = Complex64::new(0.0, 2.0 * spec.amplitude * phase.sin());
            inside = inside.max((s.value - expect).norm());
        }
    }
    (outside, inside)
}

fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_config(&text)?)
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli, threads: usize, stdout: &mut dyn io::Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate { config } => {
            let c = load(&config)?;
            stdout
                .write_all(c.to_canonical_string().as_bytes())
                .map_err(io_err(Path::new("<stdout>")))?;
            Ok(0)
        }
        Command::FieldDump { config, out } => {
            let c = load(&config)?;
            let Scenario::HandshakeField(spec) = &c.scenario else {
                return Err(CliError::Usage(format!(
                    "field-dump needs a handshake-field scenario, got {}",
                    c.scenario.name()
                )));
            };
            let samples = field_samples(spec)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                    let path = dir.join("field.csv");
                    let file = fs::File::create(&path).map_err(io_err(&path))?;
                    write_field_csv(&samples, io::BufWriter::new(file)).map_err(io_err(&path))?;
                }
                None => write_field_csv(&samples, stdout).map_err(io_err(Path::new("<stdout>")))?,
            }
            Ok(0)
        }
        Command::Run(args) => {
            let c = apply_overrides(load(&args.config)?, args.seed, args.trials, args.mode);
            let summary = run(&c, &args.out, threads)?;
            stdout
                .write_all(summary.text.as_bytes())
                .map_err(io_err(Path::new("<stdout>")))?;
            Ok(if summary.passed() { 0 } else { 1 })
        }
    }
}
