//! Analytic plane waves of the one-dimensional emitter/absorber handshake.
//!
//! The emitter sends a retarded wave forward in time and an advanced wave
//! backward in time. The absorber answers with the same two waves of opposite
//! sign. Each wave lives on a time half-space anchored at its source vertex,
//! which is what makes the cancellation outside the handshake window exact.
//!
//! Units: c = 1, hbar = 1.

use std::io;

use num_complex::Complex64;

use crate::spacetime::{interval, IntervalKind, SpacetimeEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Character {
    /// `exp[i(kx - wt)]`, forward in time from the source.
    Retarded,
    /// `exp[-i(kx - wt)]`, backward in time from the source.
    Advanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSide {
    /// `t >= t_source`
    After,
    /// `t <= t_source`
    Before,
}

/// Half-space in time where a mode is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportMask {
    pub source_time: f64,
    pub side: TimeSide,
}

impl SupportMask {
    pub fn contains(&self, t: f64) -> bool {
        match self.side {
            TimeSide::After => t >= self.source_time,
            TimeSide::Before => t <= self.source_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveMode {
    pub amplitude: Complex64,
    pub wavenumber: f64,
    pub angular_frequency: f64,
    pub character: Character,
    pub sign: Sign,
    pub source_event: SpacetimeEvent,
}

impl PlaneWaveMode {
    pub fn new(
        amplitude: Complex64,
        wavenumber: f64,
        angular_frequency: f64,
        character: Character,
        sign: Sign,
        source_event: SpacetimeEvent,
    ) -> Result<Self, FieldError> {
        if !(angular_frequency >= 0.0 && angular_frequency.is_finite()) {
            return Err(FieldError::InvalidFrequency(angular_frequency));
        }
        if !wavenumber.is_finite() || !amplitude.re.is_finite() || !amplitude.im.is_finite() {
            return Err(FieldError::NonFinite);
        }
        Ok(Self {
            amplitude,
            wavenumber,
            angular_frequency,
            character,
            sign,
            source_event,
        })
    }

    pub fn support(&self) -> SupportMask {
        SupportMask {
            source_time: self.source_event.time,
            side: match self.character {
                Character::Retarded => TimeSide::After,
                Character::Advanced => TimeSide::Before,
            },
        }
    }

    /// Energy eigenvalue in units of hbar.
    pub fn energy(&self) -> f64 {
        match self.character {
            Character::Retarded => self.angular_frequency,
            Character::Advanced => -self.angular_frequency,
        }
    }

    /// Momentum eigenvalue in units of hbar.
    pub fn momentum(&self) -> f64 {
        match self.character {
            Character::Retarded => self.wavenumber,
            Character::Advanced => -self.wavenumber,
        }
    }

    pub fn evaluate(&self, x: f64, t: f64) -> Complex64 {
        if !self.support().contains(t) {
            return Complex64::new(0.0, 0.0);
        }
        let phase = self.wavenumber * x - self.angular_frequency * t;
        let carrier = match self.character {
            Character::Retarded => Complex64::from_polar(1.0, phase),
            Character::Advanced => Complex64::from_polar(1.0, -phase),
        };
        self.amplitude * carrier * self.sign.factor()
    }
}

/// `sign * A * exp[+-i(kx - wt)]` inside the mode's support, exactly zero
/// outside it.
pub fn evaluate_mode(mode: &PlaneWaveMode, x: f64, t: f64) -> Complex64 {
    mode.evaluate(x, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub t: f64,
    pub value: Complex64,
}

pub fn superpose(modes: &[PlaneWaveMode], grid: &[(f64, f64)]) -> Vec<FieldSample> {
    grid.iter()
        .map(|&(x, t)| FieldSample {
            x,
            t,
            value: modes
                .iter()
                .fold(Complex64::new(0.0, 0.0), |acc, m| acc + m.evaluate(x, t)),
        })
        .collect()
}

/// Rectangular `x` by `t` grid, row-major in `t`. Both counts must be >= 1.
pub fn rect_grid(x_range: (f64, f64), nx: usize, t_range: (f64, f64), nt: usize) -> Vec<(f64, f64)> {
    let axis = |(lo, hi): (f64, f64), n: usize| -> Vec<f64> {
        if n <= 1 {
            return vec![lo];
        }
        let step = (hi - lo) / (n - 1) as f64;
        (0..n).map(|i| lo + step * i as f64).collect()
    };
    let xs = axis(x_range, nx);
    let ts = axis(t_range, nt);
    ts.iter()
        .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("absorber at t={absorber} is not later than emitter at t={emitter}")]
    AbsorberNotLater { emitter: f64, absorber: f64 },
    #[error("emitter and absorber are not on a common light line (s^2 = {0})")]
    NotLightlike(f64),
    #[error("angular frequency must be finite and >= 0, got {0}")]
    InvalidFrequency(f64),
    #[error("non-finite wave parameter")]
    NonFinite,
    #[error("sample grid is empty")]
    EmptyGrid,
}

/// The four modes of a completed handshake, in the order F1, G1, F2, G2.
#[derive(Debug, Clone, PartialEq)]
pub struct HandshakeModes {
    pub emitter_retarded: PlaneWaveMode,
    pub emitter_advanced: PlaneWaveMode,
    pub absorber_retarded: PlaneWaveMode,
    pub absorber_advanced: PlaneWaveMode,
}

impl HandshakeModes {
    pub fn new(
        emitter: &SpacetimeEvent,
        absorber: &SpacetimeEvent,
        amplitude: Complex64,
        wavenumber: f64,
        angular_frequency: f64,
    ) -> Result<Self, FieldError> {
        if absorber.time <= emitter.time {
            return Err(FieldError::AbsorberNotLater {
                emitter: emitter.time,
                absorber: absorber.time,
            });
        }
        let iv = interval(emitter, absorber);
        if iv.kind != IntervalKind::Lightlike {
            return Err(FieldError::NotLightlike(iv.squared));
        }
        let mode = |character, sign, source: &SpacetimeEvent| {
            PlaneWaveMode::new(
                amplitude,
                wavenumber,
                angular_frequency,
                character,
                sign,
                source.clone(),
            )
        };
        Ok(Self {
            emitter_retarded: mode(Character::Retarded, Sign::Plus, emitter)?,
            emitter_advanced: mode(Character::Advanced, Sign::Plus, emitter)?,
            absorber_retarded: mode(Character::Retarded, Sign::Minus, absorber)?,
            absorber_advanced: mode(Character::Advanced, Sign::Minus, absorber)?,
        })
    }

    pub fn to_vec(&self) -> Vec<PlaneWaveMode> {
        vec![
            self.emitter_retarded.clone(),
            self.emitter_advanced.clone(),
            self.absorber_retarded.clone(),
            self.absorber_advanced.clone(),
        ]
    }

    pub fn emission_time(&self) -> f64 {
        self.emitter_retarded.source_event.time
    }

    pub fn absorption_time(&self) -> f64 {
        self.absorber_retarded.source_event.time
    }
}

/// Superposed field of a complete emitter/absorber handshake.
///
/// Between emission and absorption the result is `2iA sin(kx - wt)`; before
/// emission and after absorption it vanishes.
pub fn handshake_field(
    emitter: &SpacetimeEvent,
    absorber: &SpacetimeEvent,
    amplitude: Complex64,
    wavenumber: f64,
    angular_frequency: f64,
    grid: &[(f64, f64)],
) -> Result<Vec<FieldSample>, FieldError> {
    if grid.is_empty() {
        return Err(FieldError::EmptyGrid);
    }
    let modes = HandshakeModes::new(emitter, absorber, amplitude, wavenumber, angular_frequency)?;
    Ok(superpose(&modes.to_vec(), grid))
}

/// Summed (energy, momentum) eigenvalues of a set of modes, hbar = 1.
pub fn emission_cost(modes: &[PlaneWaveMode]) -> (f64, f64) {
    modes
        .iter()
        .fold((0.0, 0.0), |(e, p), m| (e + m.energy(), p + m.momentum()))
}

/// Conserved quantities moved by a completed handshake:
/// `(energy, momentum)` for the emitter and the absorber respectively.
pub fn handshake_transfer(wavenumber: f64, angular_frequency: f64) -> [(f64, f64); 2] {
    [
        (-angular_frequency, -wavenumber),
        (angular_frequency, wavenumber),
    ]
}

/// Writes `x,t,re,im,abs` rows with a header.
pub fn write_field_csv<W: io::Write>(samples: &[FieldSample], out: W) -> io::Result<()> {
    let mut w = crate::report::csv_writer(out);
    w.write_record(["x", "t", "re", "im", "abs"])?;
    for s in samples {
        w.write_record([
            crate::report::fmt_real(s.x),
            crate::report::fmt_real(s.t),
            crate::report::fmt_real(s.value.re),
            crate::report::fmt_real(s.value.im),
            crate::report::fmt_real(s.value.norm()),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_modes(t_emit: f64) -> HandshakeModes {
        let e = SpacetimeEvent::on_line("e", 0.0, t_emit);
        let a = SpacetimeEvent::on_line("a", 2.0, t_emit + 2.0);
        HandshakeModes::new(&e, &a, Complex64::new(1.0, 0.0), 1.0, 1.0).unwrap()
    }

    // independent oracle: Euler's formula spelled out
    fn cis(theta: f64) -> (f64, f64) {
        (theta.cos(), theta.sin())
    }

    #[test]
    fn emitter_retarded_at_origin_is_one() {
        let m = unit_modes(0.0);
        assert_eq!(m.emitter_retarded.evaluate(0.0, 0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn emitter_advanced_before_emission() {
        let m = unit_modes(0.0);
        let v = m.emitter_advanced.evaluate(0.0, -1.0);
        // exp[-i(kx - wt)] with kx - wt = 1
        let (re, im) = cis(-1.0);
        assert!((v.re - re).abs() < 1e-15);
        assert!((v.im - im).abs() < 1e-15);
        assert!((v.re - 0.5403).abs() < 1e-4 && (v.im + 0.8415).abs() < 1e-4);
    }

    #[test]
    fn outside_support_is_exactly_zero() {
        let m = unit_modes(0.0);
        assert_eq!(m.emitter_retarded.evaluate(3.0, -0.5), Complex64::new(0.0, 0.0));
        assert_eq!(m.emitter_advanced.evaluate(3.0, 0.5), Complex64::new(0.0, 0.0));
        assert_eq!(m.absorber_retarded.evaluate(0.0, 1.0), Complex64::new(0.0, 0.0));
        assert_eq!(m.absorber_advanced.evaluate(0.0, 2.5), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_negative_frequency() {
        let e = SpacetimeEvent::on_line("e", 0.0, 0.0);
        let r = PlaneWaveMode::new(Complex64::new(1.0, 0.0), 1.0, -1.0, Character::Retarded, Sign::Plus, e);
        assert_eq!(r.unwrap_err(), FieldError::InvalidFrequency(-1.0));
    }

    #[test]
    fn superpose_cancels_beyond_absorber() {
        let m = unit_modes(0.0);
        let retarded = [m.emitter_retarded.clone(), m.absorber_retarded.clone()];
        let grid = rect_grid((-3.0, 3.0), 31, (2.01, 9.0), 31);
        for s in superpose(&retarded, &grid) {
            assert!(s.value.norm() < 1e-12);
        }
        let advanced = [m.emitter_advanced.clone(), m.absorber_advanced.clone()];
        let grid = rect_grid((-3.0, 3.0), 31, (-9.0, -0.01), 31);
        for s in superpose(&advanced, &grid) {
            assert!(s.value.norm() < 1e-12);
        }
    }

    #[test]
    fn superpose_empty_modes_is_zero() {
        let grid = rect_grid((0.0, 1.0), 4, (0.0, 1.0), 4);
        assert!(superpose(&[], &grid).iter().all(|s| s.value == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn handshake_window_is_standing_wave() {
        let e = SpacetimeEvent::on_line("e", 0.0, 0.0);
        let a = SpacetimeEvent::on_line("a", 10.0, 10.0);
        // kx - wt = pi/2 at x = pi/2 + 1, t = 1
        let grid = [(FRAC_PI_2 + 1.0, 1.0), (2.0, 2.0), (0.0, -1.0)];
        let f = handshake_field(&e, &a, Complex64::new(1.0, 0.0), 1.0, 1.0, &grid).unwrap();
        assert!((f[0].value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        assert!(f[1].value.norm() < 1e-15);
        assert_eq!(f[2].value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn handshake_rejects_bad_geometry() {
        let e = SpacetimeEvent::on_line("e", 0.0, 1.0);
        let grid = [(0.0, 0.0)];
        let a = SpacetimeEvent::on_line("a", 0.0, 1.0);
        assert!(matches!(
            handshake_field(&e, &a, Complex64::new(1.0, 0.0), 1.0, 1.0, &grid),
            Err(FieldError::AbsorberNotLater { .. })
        ));
        let a = SpacetimeEvent::on_line("a", 0.5, 3.0);
        assert!(matches!(
            handshake_field(&e, &a, Complex64::new(1.0, 0.0), 1.0, 1.0, &grid),
            Err(FieldError::NotLightlike(_))
        ));
        let a = SpacetimeEvent::on_line("a", 2.0, 3.0);
        assert_eq!(
            handshake_field(&e, &a, Complex64::new(1.0, 0.0), 1.0, 1.0, &[]),
            Err(FieldError::EmptyGrid)
        );
    }

    #[test]
    fn emission_is_free() {
        let m = unit_modes(0.0);
        let pair = [m.emitter_retarded.clone(), m.emitter_advanced.clone()];
        assert_eq!(emission_cost(&pair), (0.0, 0.0));
        assert_eq!(emission_cost(&pair[..1]), (1.0, 1.0));
        assert_eq!(emission_cost(&pair[1..]), (-1.0, -1.0));
        let [emitter, absorber] = handshake_transfer(1.0, 1.0);
        assert_eq!(emitter, (-1.0, -1.0));
        assert_eq!(absorber, (1.0, 1.0));
    }

    #[test]
    fn field_csv_layout() {
        let samples = [FieldSample {
            x: 1.0,
            t: 0.5,
            value: Complex64::new(0.0, -2.0),
        }];
        let mut buf = Vec::new();
        write_field_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,t,re,im,abs"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, [1.0, 0.5, 0.0, -2.0, 2.0]);
        assert!(!text.contains('\r'));
    }

    proptest! {
        #[test]
        fn superposition_is_linear(
            a1 in -2.0..2.0f64, a2 in -2.0..2.0f64, k in -3.0..3.0f64, w in 0.0..3.0f64,
            xs in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..20),
        ) {
            let e = SpacetimeEvent::on_line("e", 0.0, 0.0);
            let b = SpacetimeEvent::on_line("b", 1.0, 1.0);
            let m1 = vec![
                PlaneWaveMode::new(Complex64::new(a1, 0.5), k, w, Character::Retarded, Sign::Plus, e.clone()).unwrap(),
                PlaneWaveMode::new(Complex64::new(a2, 0.0), k, w, Character::Advanced, Sign::Minus, b.clone()).unwrap(),
            ];
            let m2 = vec![
                PlaneWaveMode::new(Complex64::new(a2, -1.0), w, k.abs(), Character::Advanced, Sign::Plus, e).unwrap(),
            ];
            let all: Vec<_> = m1.iter().chain(m2.iter()).cloned().collect();
            let s_all = superpose(&all, &xs);
            let s1 = superpose(&m1, &xs);
            let s2 = superpose(&m2, &xs);
            for i in 0..xs.len() {
                let d = s_all[i].value - (s1[i].value + s2[i].value);
                prop_assert!(d.norm() < 1e-12);
            }
        }
    }
}
