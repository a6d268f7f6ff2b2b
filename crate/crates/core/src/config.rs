//! Scenario files.
//!
//! Line-oriented `key = value` text. Top-level keys come first; scenario
//! details live in `[section]` blocks, and `[detector]` may repeat.
//! `#` starts a comment. Angles take a `deg`, `°` or `rad` suffix; bare
//! numbers are degrees.
//!
//! ```text
//! scenario = bubble
//! seed = 7
//! trials = 100000
//! mode = normalized
//!
//! [detector]
//! id = right
//! position = 1, 0, 0
//! weight = 1
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use crate::engine::{Quantum, SelectionMode};
use crate::scenarios::{ChshSettings, DetectorSpec, MaudlinSetup};
use crate::spacetime::SpacetimeEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub trials: u64,
    pub mode: SelectionMode,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Bubble {
        source: SpacetimeEvent,
        detectors: Vec<DetectorSpec>,
    },
    Epr {
        theta_left: f64,
        theta_right: f64,
        curve: CurveSpec,
    },
    Chsh {
        settings: ChshSettings,
        curve: CurveSpec,
    },
    Maudlin(MaudlinSetup),
    HandshakeField(FieldSpec),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Bubble { .. } => "bubble",
            Scenario::Epr { .. } => "epr",
            Scenario::Chsh { .. } => "chsh",
            Scenario::Maudlin(_) => "maudlin",
            Scenario::HandshakeField(_) => "handshake-field",
        }
    }
}

/// Relative-angle grid `0, step, 2 step, ... <= max` for correlation curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpec {
    pub step: f64,
    pub max: f64,
    /// Trials per grid point; `None` uses the run's trial count.
    pub trials: Option<u64>,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self {
            step: 10f64.to_radians(),
            max: 90f64.to_radians(),
            trials: None,
        }
    }
}

impl CurveSpec {
    pub fn deltas(&self) -> Vec<f64> {
        let n = (self.max / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub amplitude: f64,
    pub wavenumber: f64,
    pub angular_frequency: f64,
    pub emitter_x: f64,
    pub emitter_t: f64,
    pub absorber_x: f64,
    pub absorber_t: f64,
    pub x_range: (f64, f64),
    pub x_points: usize,
    pub t_range: (f64, f64),
    pub t_points: usize,
}

impl FieldSpec {
    pub fn emitter(&self) -> SpacetimeEvent {
        SpacetimeEvent::on_line("emitter", self.emitter_x, self.emitter_t)
    }

    pub fn absorber(&self) -> SpacetimeEvent {
        SpacetimeEvent::on_line("absorber", self.absorber_x, self.absorber_t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// All problems found in a file, in line order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Entry {
    value: String,
    line: usize,
}

struct Block {
    name: String,
    line: usize,
    entries: HashMap<String, Entry>,
    order: Vec<String>,
}

/// Typed access to one block, remembering which keys were read so the rest
/// can be reported as unknown.
struct Fields<'a> {
    block: &'a Block,
    used: HashSet<&'static str>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> Fields<'a> {
    fn new(block: &'a Block, errors: &'a mut Vec<ConfigError>) -> Self {
        Self {
            block,
            used: HashSet::new(),
            errors,
        }
    }

    fn err(&mut self, line: usize, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn raw(&mut self, key: &'static str) -> Option<(&'a str, usize)> {
        self.used.insert(key);
        self.block.entries.get(key).map(|e| (e.value.as_str(), e.line))
    }

    fn parse<T>(&mut self, key: &'static str, f: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (v, line) = self.raw(key)?;
        match f(v) {
            Ok(x) => Some(x),
            Err(m) => {
                self.err(line, format!("{key}: {m}"));
                None
            }
        }
    }

    fn required<T>(&mut self, key: &'static str, f: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if !self.block.entries.contains_key(key) {
            let line = self.block.line;
            let where_ = if self.block.name.is_empty() {
                String::new()
            } else {
                format!(" in [{}]", self.block.name)
            };
            self.err(line, format!("missing required key `{key}`{where_}"));
            self.used.insert(key);
            return None;
        }
        self.parse(key, f)
    }

    fn finish(self) {
        for key in &self.block.order {
            if !self.used.contains(key.as_str()) {
                let line = self.block.entries[key].line;
                let where_ = if self.block.name.is_empty() {
                    "at top level".to_string()
                } else {
                    format!("in [{}]", self.block.name)
                };
                self.errors.push(ConfigError {
                    line,
                    message: format!("unknown key `{key}` {where_}"),
                });
            }
        }
    }
}

fn real(v: &str) -> Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{v}` is not finite"))
    }
}

fn nonneg_int(v: &str) -> Result<u64, String> {
    let x: i128 = v.trim().parse().map_err(|_| format!("`{v}` is not an integer"))?;
    if x < 0 {
        return Err(format!("must be >= 0, got {x}"));
    }
    u64::try_from(x).map_err(|_| format!("{x} is too large"))
}

fn positive_count(v: &str) -> Result<usize, String> {
    match nonneg_int(v)? {
        0 => Err("must be >= 1".into()),
        n => usize::try_from(n).map_err(|_| format!("{n} is too large")),
    }
}

/// Angle in radians from `22.5deg`, `22.5°`, `0.39rad` or bare degrees.
pub fn parse_angle(v: &str) -> Result<f64, String> {
    let v = v.trim();
    let (num, to_rad) = if let Some(n) = v.strip_suffix("rad") {
        (n, false)
    } else if let Some(n) = v.strip_suffix("deg") {
        (n, true)
    } else if let Some(n) = v.strip_suffix('°') {
        (n, true)
    } else {
        (v, true)
    };
    let x = real(num)?;
    Ok(if to_rad { x.to_radians() } else { x })
}

fn polarimeter_angle(v: &str) -> Result<f64, String> {
    let a = parse_angle(v)?;
    if (0.0..std::f64::consts::PI).contains(&a) {
        Ok(a)
    } else {
        Err(format!("angle {a} rad is outside [0, 180) degrees"))
    }
}

fn positive_angle(v: &str) -> Result<f64, String> {
    let a = parse_angle(v)?;
    if a > 0.0 {
        Ok(a)
    } else {
        Err("must be > 0".into())
    }
}

fn probability(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("must be in [0, 1], got {x}"))
    }
}

fn nonneg_real(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be >= 0, got {x}"))
    }
}

/// `x` or `x, y, z`.
fn position(v: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x] => Ok([real(x)?, 0.0, 0.0]),
        [x, y, z] => Ok([real(x)?, real(y)?, real(z)?]),
        _ => Err(format!("`{v}` is not `x` or `x, y, z`")),
    }
}

fn range(v: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi] => {
            let (lo, hi) = (real(lo)?, real(hi)?);
            if lo <= hi {
                Ok((lo, hi))
            } else {
                Err(format!("lower bound {lo} exceeds upper bound {hi}"))
            }
        }
        _ => Err(format!("`{v}` is not `lo, hi`")),
    }
}

fn split_blocks(text: &str, errors: &mut Vec<ConfigError>) -> Vec<Block> {
    let mut blocks = vec![Block {
        name: String::new(),
        line: 1,
        entries: HashMap::new(),
        order: Vec::new(),
    }];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            blocks.push(Block {
                name: name.trim().to_string(),
                line,
                entries: HashMap::new(),
                order: Vec::new(),
            });
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            errors.push(ConfigError {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let key = k.trim().to_string();
        let block = blocks.last_mut().unwrap();
        if block.entries.contains_key(&key) {
            errors.push(ConfigError {
                line,
                message: format!("duplicate key `{key}`"),
            });
            continue;
        }
        block.order.push(key.clone());
        block.entries.insert(
            key,
            Entry {
                value: v.trim().to_string(),
                line,
            },
        );
    }
    blocks
}

fn source_event(block: Option<&Block>, errors: &mut Vec<ConfigError>) -> SpacetimeEvent {
    let Some(block) = block else {
        return SpacetimeEvent::new("source", [0.0; 3], 0.0);
    };
    let mut f = Fields::new(block, errors);
    let position = f.parse("position", position).unwrap_or([0.0; 3]);
    let time = f.parse("time", real).unwrap_or(0.0);
    f.finish();
    SpacetimeEvent::new("source", position, time)
}

fn curve_spec(block: Option<&Block>, errors: &mut Vec<ConfigError>) -> CurveSpec {
    let mut spec = CurveSpec::default();
    if let Some(block) = block {
        let mut f = Fields::new(block, errors);
        if let Some(s) = f.parse("step", positive_angle) {
            spec.step = s;
        }
        if let Some(m) = f.parse("max", polarimeter_angle) {
            spec.max = m;
        }
        spec.trials = f.parse("trials", nonneg_int);
        f.finish();
    }
    spec
}

/// Parses and validates a scenario file, collecting every error.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let blocks = split_blocks(text, &mut errors);
    let (top, sections) = blocks.split_first().unwrap();

    let mut f = Fields::new(top, &mut errors);
    let kind = f.required("scenario", |v| match v {
        "bubble" | "epr" | "chsh" | "maudlin" | "handshake-field" => Ok(v.to_string()),
        other => Err(format!(
            "unknown scenario `{other}` (expected bubble|epr|chsh|maudlin|handshake-field)"
        )),
    });
    let seed = f.parse("seed", nonneg_int).unwrap_or(0);
    let trials = f.parse("trials", nonneg_int).unwrap_or(100_000);
    let mode = f.parse("mode", |v| v.parse::<SelectionMode>()).unwrap_or_default();
    f.finish();

    let allowed: &[&str] = match kind.as_deref() {
        Some("bubble") => &["source", "detector"],
        Some("epr") => &["epr", "curve"],
        Some("chsh") => &["chsh", "curve"],
        Some("maudlin") => &["source", "maudlin"],
        Some("handshake-field") => &["field"],
        _ => &[],
    };
    let mut singles: HashMap<&str, &Block> = HashMap::new();
    for b in sections {
        if kind.is_some() && !allowed.contains(&b.name.as_str()) {
            errors.push(ConfigError {
                line: b.line,
                message: format!(
                    "section [{}] is not used by scenario {}",
                    b.name,
                    kind.as_deref().unwrap_or("")
                ),
            });
            continue;
        }
        if b.name != "detector" {
            if singles.contains_key(b.name.as_str()) {
                errors.push(ConfigError {
                    line: b.line,
                    message: format!("section [{}] appears more than once", b.name),
                });
                continue;
            }
            singles.insert(b.name.as_str(), b);
        }
    }
    let section_missing = |errors: &mut Vec<ConfigError>, name: &str| {
        errors.push(ConfigError {
            line: top.entries.get("scenario").map_or(1, |e| e.line),
            message: format!("missing section [{name}]"),
        });
    };

    let scenario = match kind.as_deref() {
        Some("bubble") => {
            let source = source_event(singles.get("source").copied(), &mut errors);
            let mut detectors = Vec::new();
            let mut ids = HashSet::new();
            for b in sections.iter().filter(|b| b.name == "detector") {
                let mut f = Fields::new(b, &mut errors);
                let id = f.required("id", |v| {
                    if v.is_empty() || v.contains(',') || v.contains('+') {
                        Err(format!("invalid id `{v}`"))
                    } else {
                        Ok(v.to_string())
                    }
                });
                let pos = f.required("position", position);
                let weight = f.parse("weight", nonneg_real).unwrap_or(1.0);
                let angle = f.parse("angle", polarimeter_angle).unwrap_or(0.0);
                if let Some(id) = &id {
                    if !ids.insert(id.clone()) {
                        let line = b.entries["id"].line;
                        f.err(line, format!("duplicate detector id `{id}`"));
                    }
                }
                if let Some(p) = pos {
                    if p == source.position {
                        let line = b.entries["position"].line;
                        f.err(line, "detector sits on the source (r = 0)".into());
                    }
                }
                f.finish();
                if let (Some(id), Some(position)) = (id, pos) {
                    detectors.push(DetectorSpec {
                        id,
                        position,
                        weight,
                        polarimeter_angle: angle,
                    });
                }
            }
            if detectors.is_empty() && !sections.iter().any(|b| b.name == "detector") {
                section_missing(&mut errors, "detector");
            }
            Some(Scenario::Bubble { source, detectors })
        }
        Some("epr") => {
            let curve = curve_spec(singles.get("curve").copied(), &mut errors);
            match singles.get("epr") {
                Some(b) => {
                    let mut f = Fields::new(b, &mut errors);
                    let l = f.required("theta_left", polarimeter_angle);
                    let r = f.required("theta_right", polarimeter_angle);
                    f.finish();
                    Some(Scenario::Epr {
                        theta_left: l.unwrap_or(0.0),
                        theta_right: r.unwrap_or(0.0),
                        curve,
                    })
                }
                None => {
                    section_missing(&mut errors, "epr");
                    None
                }
            }
        }
        Some("chsh") => {
            let curve = curve_spec(singles.get("curve").copied(), &mut errors);
            let mut settings = ChshSettings::standard();
            if let Some(b) = singles.get("chsh") {
                let mut f = Fields::new(b, &mut errors);
                for (key, slot) in [
                    ("a", &mut settings.a),
                    ("a_prime", &mut settings.a_prime),
                    ("b", &mut settings.b),
                    ("b_prime", &mut settings.b_prime),
                ] {
                    if let Some(v) = f.parse(key, polarimeter_angle) {
                        *slot = v;
                    }
                }
                f.finish();
            }
            Some(Scenario::Chsh { settings, curve })
        }
        Some("maudlin") => {
            let emitter = source_event(singles.get("source").copied(), &mut errors);
            let mut setup = MaudlinSetup::slow_particle();
            setup.emitter = SpacetimeEvent::new("emitter", emitter.position, emitter.time);
            if let Some(b) = singles.get("maudlin") {
                let mut f = Fields::new(b, &mut errors);
                if let Some(s) = f.parse("near_strength", probability) {
                    setup.near_strength = s;
                }
                if let Some(p) = f.parse("near_position", position) {
                    setup.near.position = p;
                }
                if let Some(t) = f.parse("near_time", real) {
                    setup.near.time = t;
                }
                if let Some(p) = f.parse("far_position", position) {
                    setup.far.position = p;
                }
                if let Some(t) = f.parse("far_time", real) {
                    setup.far.time = t;
                }
                let w = f.parse("angular_frequency", nonneg_real).unwrap_or(setup.quantum.energy);
                let k = f.parse("wavenumber", real).unwrap_or(setup.quantum.momentum);
                setup.quantum = Quantum::new(w, k);
                f.finish();
            }
            Some(Scenario::Maudlin(setup))
        }
        Some("handshake-field") => match singles.get("field") {
            Some(b) => {
                let mut f = Fields::new(b, &mut errors);
                let spec = FieldSpec {
                    amplitude: f.parse("amplitude", real).unwrap_or(1.0),
                    wavenumber: f.parse("wavenumber", real).unwrap_or(1.0),
                    angular_frequency: f.parse("angular_frequency", nonneg_real).unwrap_or(1.0),
                    emitter_x: f.parse("emitter_x", real).unwrap_or(0.0),
                    emitter_t: f.parse("emitter_t", real).unwrap_or(0.0),
                    absorber_x: f.required("absorber_x", real).unwrap_or(0.0),
                    absorber_t: f.required("absorber_t", real).unwrap_or(0.0),
                    x_range: f.required("x_range", range).unwrap_or((0.0, 0.0)),
                    x_points: f.parse("x_points", positive_count).unwrap_or(101),
                    t_range: f.required("t_range", range).unwrap_or((0.0, 0.0)),
                    t_points: f.parse("t_points", positive_count).unwrap_or(101),
                };
                if spec.absorber_t <= spec.emitter_t {
                    let line = b.entries.get("absorber_t").map_or(b.line, |e| e.line);
                    f.err(line, "absorber_t must be later than emitter_t".into());
                }
                f.finish();
                Some(Scenario::HandshakeField(spec))
            }
            None => {
                section_missing(&mut errors, "field");
                None
            }
        },
        _ => None,
    };

    errors.sort_by_key(|e| e.line);
    match scenario {
        Some(scenario) if errors.is_empty() => Ok(ScenarioConfig {
            seed,
            trials,
            mode,
            scenario,
        }),
        _ => Err(ConfigErrors(errors)),
    }
}

fn fmt_position(p: [f64; 3]) -> String {
    format!("{:?}, {:?}, {:?}", p[0], p[1], p[2])
}

fn fmt_angle(a: f64) -> String {
    format!("{a:?}rad")
}

impl ScenarioConfig {
    /// Canonical text form; parsing it yields an equal config.
    pub fn to_canonical_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        let curve = |s: &mut String, c: &CurveSpec| {
            let _ = writeln!(s, "\n[curve]");
            let _ = writeln!(s, "step = {}", fmt_angle(c.step));
            let _ = writeln!(s, "max = {}", fmt_angle(c.max));
            if let Some(t) = c.trials {
                let _ = writeln!(s, "trials = {t}");
            }
        };
        match &self.scenario {
            Scenario::Bubble { source, detectors } => {
                let _ = writeln!(s, "\n[source]");
                let _ = writeln!(s, "position = {}", fmt_position(source.position));
                let _ = writeln!(s, "time = {:?}", source.time);
                for d in detectors {
                    let _ = writeln!(s, "\n[detector]");
                    let _ = writeln!(s, "id = {}", d.id);
                    let _ = writeln!(s, "position = {}", fmt_position(d.position));
                    let _ = writeln!(s, "weight = {:?}", d.weight);
                    let _ = writeln!(s, "angle = {}", fmt_angle(d.polarimeter_angle));
                }
            }
            Scenario::Epr {
                theta_left,
                theta_right,
                curve: c,
            } => {
                let _ = writeln!(s, "\n[epr]");
                let _ = writeln!(s, "theta_left = {}", fmt_angle(*theta_left));
                let _ = writeln!(s, "theta_right = {}", fmt_angle(*theta_right));
                curve(&mut s, c);
            }
            Scenario::Chsh { settings, curve: c } => {
                let _ = writeln!(s, "\n[chsh]");
                let _ = writeln!(s, "a = {}", fmt_angle(settings.a));
                let _ = writeln!(s, "a_prime = {}", fmt_angle(settings.a_prime));
                let _ = writeln!(s, "b = {}", fmt_angle(settings.b));
                let _ = writeln!(s, "b_prime = {}", fmt_angle(settings.b_prime));
                curve(&mut s, c);
            }
            Scenario::Maudlin(m) => {
                let _ = writeln!(s, "\n[source]");
                let _ = writeln!(s, "position = {}", fmt_position(m.emitter.position));
                let _ = writeln!(s, "time = {:?}", m.emitter.time);
                let _ = writeln!(s, "\n[maudlin]");
                let _ = writeln!(s, "near_strength = {:?}", m.near_strength);
                let _ = writeln!(s, "near_position = {}", fmt_position(m.near.position));
                let _ = writeln!(s, "near_time = {:?}", m.near.time);
                let _ = writeln!(s, "far_position = {}", fmt_position(m.far.position));
                let _ = writeln!(s, "far_time = {:?}", m.far.time);
                let _ = writeln!(s, "angular_frequency = {:?}", m.quantum.energy);
                let _ = writeln!(s, "wavenumber = {:?}", m.quantum.momentum);
            }
            Scenario::HandshakeField(f) => {
                let _ = writeln!(s, "\n[field]");
                let _ = writeln!(s, "amplitude = {:?}", f.amplitude);
                let _ = writeln!(s, "wavenumber = {:?}", f.wavenumber);
                let _ = writeln!(s, "angular_frequency = {:?}", f.angular_frequency);
                let _ = writeln!(s, "emitter_x = {:?}", f.emitter_x);
                let _ = writeln!(s, "emitter_t = {:?}", f.emitter_t);
                let _ = writeln!(s, "absorber_x = {:?}", f.absorber_x);
                let _ = writeln!(s, "absorber_t = {:?}", f.absorber_t);
                let _ = writeln!(s, "x_range = {:?}, {:?}", f.x_range.0, f.x_range.1);
                let _ = writeln!(s, "x_points = {}", f.x_points);
                let _ = writeln!(s, "t_range = {:?}, {:?}", f.t_range.0, f.t_range.1);
                let _ = writeln!(s, "t_points = {}", f.t_points);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUBBLE: &str = "\
scenario = bubble
seed = 7
trials = 1000

[detector]
id = right
position = 1, 0, 0

[detector]
id = left
position = -2, 0, 0
weight = 1
";

    fn errors(text: &str) -> Vec<ConfigError> {
        parse_config(text).unwrap_err().0
    }

    #[test]
    fn minimal_bubble_round_trips() {
        let c = parse_config(BUBBLE).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.trials, 1000);
        assert_eq!(c.mode, SelectionMode::Normalized);
        let Scenario::Bubble { detectors, source } = &c.scenario else {
            panic!("wrong scenario")
        };
        assert_eq!(source.position, [0.0; 3]);
        assert_eq!(detectors.len(), 2);
        assert_eq!(detectors[1].position, [-2.0, 0.0, 0.0]);
        let echo = c.to_canonical_string();
        let again = parse_config(&echo).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_canonical_string(), echo);
    }

    #[test]
    fn negative_trials_names_line() {
        let e = errors("scenario = bubble\ntrials = -1\n[detector]\nid = a\nposition = 1\n");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].line, 2);
        assert!(e[0].message.contains("trials"));
    }

    #[test]
    fn degrees_become_radians() {
        let c = parse_config("scenario = epr\n[epr]\ntheta_left = 22.5deg\ntheta_right = 0\n").unwrap();
        let Scenario::Epr { theta_left, .. } = c.scenario else { panic!() };
        assert!((theta_left - std::f64::consts::FRAC_PI_8).abs() < 1e-15);
        assert_eq!(theta_left, 22.5f64.to_radians());
        assert_eq!(parse_angle("22.5°").unwrap(), theta_left);
        assert_eq!(parse_angle("22.5").unwrap(), theta_left);
        assert_eq!(parse_angle("0.5rad").unwrap(), 0.5);
    }

    #[test]
    fn reports_every_problem_with_lines() {
        let text = "\
scenario = bubble
colour = blue
[detector]
id = a
position = 1, 0, 0
weight = -3
[detector]
id = a
position = 2, 0
[epr]
theta_left = 1
";
        let e = errors(text);
        let lines: Vec<usize> = e.iter().map(|x| x.line).collect();
        assert_eq!(lines, [2, 6, 8, 9, 10]);
        assert!(e[0].message.contains("unknown key `colour`"));
        assert!(e[2].message.contains("duplicate detector id"));
        assert!(e[4].message.contains("[epr]"));
    }

    #[test]
    fn structural_errors() {
        assert!(errors("seed = 1\n")[0].message.contains("missing required key `scenario`"));
        assert!(errors("scenario = teleport\n")[0].message.contains("unknown scenario"));
        assert!(errors("scenario = epr\n")[0].message.contains("missing section [epr]"));
        assert!(errors("scenario = bubble\n")[0].message.contains("missing section [detector]"));
        let e = errors("scenario = bubble\nseed = 1\nseed = 2\n[detector]\nid=a\nposition=1\n");
        assert_eq!(e[0].line, 3);
        let e = errors("scenario = epr\n[epr]\ntheta_left = 190deg\ntheta_right = 0\n");
        assert_eq!(e[0].line, 3);
        let e = errors("scenario = bubble\nmode = sometimes\n[detector]\nid=a\nposition=1\n");
        assert!(e[0].message.contains("normalized|absolute"));
        let e = errors("scenario = bubble\njunk line\n[detector]\nid=a\nposition=1\n");
        assert_eq!(e[0].line, 2);
        let e = errors("scenario = bubble\n[detector]\nid=a\nposition=0,0,0\n");
        assert!(e[0].message.contains("r = 0"));
    }

    #[test]
    fn other_scenarios_round_trip() {
        let texts = [
            "scenario = chsh\nseed = 3\n[chsh]\nb = 22.5deg\n[curve]\nstep = 5deg\ntrials = 10\n",
            "scenario = maudlin\nmode = absolute\n[maudlin]\nnear_strength = 0.25\nfar_time = 9 # later\n",
            "scenario = handshake-field\n[field]\nabsorber_x = 4\nabsorber_t = 4\nx_range = -1, 5\nt_range = -2, 6\nx_points = 7\n",
            "scenario = epr\n[epr]\ntheta_left = 10\ntheta_right = 170\n",
        ];
        for t in texts {
            let c = parse_config(t).unwrap_or_else(|e| panic!("{t}: {e}"));
            assert_eq!(parse_config(&c.to_canonical_string()).unwrap(), c);
        }
    }

    #[test]
    fn field_requires_later_absorber() {
        let e = errors("scenario = handshake-field\n[field]\nabsorber_x = 0\nabsorber_t = 0\nx_range = 0, 1\nt_range = 0, 1\n");
        assert_eq!(e[0].line, 4);
    }

    #[test]
    fn curve_grid() {
        let d = CurveSpec::default().deltas();
        assert_eq!(d.len(), 10);
        assert!((d[9] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
