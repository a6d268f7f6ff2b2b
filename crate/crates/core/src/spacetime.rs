//! Spacetime vertices, Minkowski intervals and the echo selection hierarchy.
//!
//! Units are c = 1 with signature (+, -, -, -), so the squared interval
//! between two events is `dt^2 - |dx|^2`.

use std::cmp::Ordering;
use std::fmt;

/// Absolute tolerance on `s^2` below which a separation counts as lightlike.
pub const LIGHTLIKE_TOLERANCE: f64 = 1e-9;

/// A vertex in spacetime: a locus of emission or absorption.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeEvent {
    pub id: String,
    pub position: [f64; 3],
    pub time: f64,
}

impl SpacetimeEvent {
    pub fn new(id: impl Into<String>, position: [f64; 3], time: f64) -> Self {
        Self {
            id: id.into(),
            position,
            time,
        }
    }

    /// An event on the one-dimensional string (y = z = 0).
    pub fn on_line(id: impl Into<String>, x: f64, time: f64) -> Self {
        Self::new(id, [x, 0.0, 0.0], time)
    }

    pub fn x(&self) -> f64 {
        self.position[0]
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.position.iter().all(|c| c.is_finite())
    }

    /// Euclidean distance between the spatial parts of two events.
    pub fn spatial_distance(&self, other: &SpacetimeEvent) -> f64 {
        self.position
            .iter()
            .zip(other.position.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for SpacetimeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.position;
        write!(f, "{}(x=[{x}, {y}, {z}], t={})", self.id, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntervalKind {
    Timelike,
    Lightlike,
    Spacelike,
}

/// Separation between two events.
///
/// `time_separation` is `|dt|`, so the value is symmetric in its arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub squared: f64,
    pub time_separation: f64,
    pub kind: IntervalKind,
}

impl Interval {
    /// Hierarchy key: smaller `s^2` first, then smaller `|dt|`.
    /// Light-like intervals within tolerance compare as exactly zero, so
    /// rounding noise cannot reorder them ahead of the time separation.
    pub fn hierarchy_cmp(&self, other: &Interval) -> Ordering {
        self.sort_key()
            .total_cmp(&other.sort_key())
            .then(self.time_separation.total_cmp(&other.time_separation))
    }

    fn sort_key(&self) -> f64 {
        if self.kind == IntervalKind::Lightlike {
            0.0
        } else {
            self.squared
        }
    }
}

pub fn interval(a: &SpacetimeEvent, b: &SpacetimeEvent) -> Interval {
    let dt = b.time - a.time;
    let dx2: f64 = a
        .position
        .iter()
        .zip(b.position.iter())
        .map(|(p, q)| (q - p) * (q - p))
        .sum();
    let squared = dt * dt - dx2;
    let kind = if squared.abs() <= LIGHTLIKE_TOLERANCE {
        IntervalKind::Lightlike
    } else if squared > 0.0 {
        IntervalKind::Timelike
    } else {
        IntervalKind::Spacelike
    };
    Interval {
        squared,
        time_separation: dt.abs(),
        kind,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CausalityError {
    #[error("vertex {vertex} lies outside the forward light cone of emitter {emitter}")]
    OutsideForwardLightCone { emitter: String, vertex: String },
    #[error("vertex {0} has non-finite coordinates")]
    NonFinite(String),
}

/// Checks that `absorber` is in or on the forward light cone of `emitter`
/// and returns the separation.
pub fn forward_interval(
    emitter: &SpacetimeEvent,
    absorber: &SpacetimeEvent,
) -> Result<Interval, CausalityError> {
    if !absorber.is_finite() {
        return Err(CausalityError::NonFinite(absorber.id.clone()));
    }
    let iv = interval(emitter, absorber);
    let later = absorber.time > emitter.time;
    if !later || iv.kind == IntervalKind::Spacelike {
        return Err(CausalityError::OutsideForwardLightCone {
            emitter: emitter.id.clone(),
            vertex: absorber.id.clone(),
        });
    }
    Ok(iv)
}

/// Returns the indices of `absorbers` in hierarchy order relative to `emitter`.
///
/// Sort keys are ascending `s^2`, then ascending `dt`, then ascending id.
/// Input position is not a key, so the result does not depend on the input
/// order.
pub fn hierarchy_indices(
    emitter: &SpacetimeEvent,
    absorbers: &[SpacetimeEvent],
) -> Result<Vec<(usize, Interval)>, CausalityError> {
    let mut keyed = absorbers
        .iter()
        .enumerate()
        .map(|(i, a)| forward_interval(emitter, a).map(|iv| (i, iv)))
        .collect::<Result<Vec<_>, _>>()?;
    keyed.sort_by(|(i, a), (j, b)| {
        a.hierarchy_cmp(b)
            .then_with(|| absorbers[*i].id.cmp(&absorbers[*j].id))
    });
    Ok(keyed)
}

/// Sorts absorbers into the order in which their echoes are weighed.
pub fn hierarchy_order(
    emitter: &SpacetimeEvent,
    absorbers: &[SpacetimeEvent],
) -> Result<Vec<SpacetimeEvent>, CausalityError> {
    Ok(hierarchy_indices(emitter, absorbers)?
        .into_iter()
        .map(|(i, _)| absorbers[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(id: &str, x: f64, t: f64) -> SpacetimeEvent {
        SpacetimeEvent::on_line(id, x, t)
    }

    #[test]
    fn interval_examples() {
        let o = ev("o", 0.0, 0.0);
        let iv = interval(&o, &ev("b", 3.0, 5.0));
        assert_eq!(iv.squared, 16.0);
        assert_eq!(iv.kind, IntervalKind::Timelike);

        let iv = interval(&o, &ev("b", 4.0, 4.0));
        assert_eq!(iv.squared, 0.0);
        assert_eq!(iv.kind, IntervalKind::Lightlike);

        let iv = interval(&o, &o);
        assert_eq!(iv.squared, 0.0);
        assert_eq!(iv.kind, IntervalKind::Lightlike);

        assert_eq!(interval(&o, &ev("s", 5.0, 1.0)).kind, IntervalKind::Spacelike);
    }

    #[test]
    fn sorts_by_squared_interval() {
        let o = ev("o", 0.0, 0.0);
        // s^2 = 9, 1, 4
        let abs = vec![ev("a", 0.0, 3.0), ev("b", 0.0, 1.0), ev("c", 0.0, 2.0)];
        let ids: Vec<_> = hierarchy_order(&o, &abs)
            .unwrap()
            .into_iter()
            .map(|e| e.id)
            .collect();
        assert_eq!(ids, ["b", "c", "a"]);
    }

    #[test]
    fn equal_interval_tie_broken_by_time() {
        let o = ev("o", 0.0, 0.0);
        // both lightlike, dt = 5 and dt = 2
        let far = ev("far", 5.0, 5.0);
        let near = ev("near", -2.0, 2.0);
        let inputs = [vec![far.clone(), near.clone()], vec![near.clone(), far.clone()]];
        for input in inputs {
            let out = hierarchy_order(&o, &input).unwrap();
            assert_eq!(out[0].id, "near");
            assert_eq!(out[1].id, "far");
        }
    }

    #[test]
    fn lightlike_rounding_noise_ignored() {
        let o = SpacetimeEvent::new("o", [0.0; 3], 0.0);
        let (a, r) = (0.7f64, 7.0f64);
        let far = SpacetimeEvent::new("far", [r * a.cos(), r * a.sin(), 0.0], r);
        let near = SpacetimeEvent::new("near", [1.0, 0.0, 0.0], 1.0);
        let iv = interval(&o, &far);
        assert_eq!(iv.kind, IntervalKind::Lightlike);
        assert!(iv.squared < 0.0);
        let out = hierarchy_order(&o, &[far, near]).unwrap();
        assert_eq!(out[0].id, "near");
    }

    #[test]
    fn exact_ties_fall_back_to_id() {
        let o = ev("o", 0.0, 0.0);
        let abs = vec![ev("z", 1.0, 2.0), ev("m", -1.0, 2.0), ev("a", 1.0, 2.0)];
        let ids: Vec<_> = hierarchy_order(&o, &abs)
            .unwrap()
            .into_iter()
            .map(|e| e.id)
            .collect();
        assert_eq!(ids, ["a", "m", "z"]);
    }

    #[test]
    fn singleton_unchanged() {
        let o = ev("o", 0.0, 0.0);
        let abs = vec![ev("only", 1.0, 3.0)];
        assert_eq!(hierarchy_order(&o, &abs).unwrap(), abs);
    }

    #[test]
    fn rejects_vertices_outside_forward_cone() {
        let o = ev("o", 0.0, 0.0);
        let err = hierarchy_order(&o, &[ev("ok", 0.0, 1.0), ev("past", 0.0, -1.0)]).unwrap_err();
        assert_eq!(
            err,
            CausalityError::OutsideForwardLightCone {
                emitter: "o".into(),
                vertex: "past".into()
            }
        );
        let err = hierarchy_order(&o, &[ev("spacelike", 3.0, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("spacelike"));
        // coincident event: dt = 0 is not later than emission
        assert!(hierarchy_order(&o, &[ev("same", 0.0, 0.0)]).is_err());
    }

    #[test]
    fn collinear_light_chain_stays_lightlike() {
        let a = ev("a", 0.0, 0.0);
        let b = ev("b", 1.5, 1.5);
        let c = ev("c", 4.0, 4.0);
        for (p, q) in [(&a, &b), (&b, &c), (&a, &c)] {
            assert_eq!(interval(p, q).kind, IntervalKind::Lightlike);
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn tie_break_exhaustive_over_input_orders() {
        let o = ev("o", 0.0, 0.0);
        // two at s^2 = 0 (dt 2, 5), two at s^2 = 16 (dt 5 each, ids differ)
        let abs = [
            ev("l5", 5.0, 5.0),
            ev("l2", 2.0, 2.0),
            ev("t5b", 3.0, 5.0),
            ev("t5a", -3.0, 5.0),
        ];
        for perm in permutations(abs.len()) {
            let input: Vec<_> = perm.iter().map(|&i| abs[i].clone()).collect();
            let ids: Vec<_> = hierarchy_order(&o, &input)
                .unwrap()
                .into_iter()
                .map(|e| e.id)
                .collect();
            assert_eq!(ids, ["l2", "l5", "t5a", "t5b"]);
        }
    }

    proptest! {
        #[test]
        fn interval_is_symmetric(
            ax in -10.0..10.0f64, at in -10.0..10.0f64,
            bx in -10.0..10.0f64, by in -10.0..10.0f64, bt in -10.0..10.0f64,
        ) {
            let a = ev("a", ax, at);
            let b = SpacetimeEvent::new("b", [bx, by, 0.0], bt);
            prop_assert_eq!(interval(&a, &b), interval(&b, &a));
        }

        #[test]
        fn hierarchy_is_permutation_invariant(
            pts in proptest::collection::vec((-5.0..5.0f64, 0.0..1.0f64), 1..8),
            seed in any::<u64>(),
        ) {
            let o = ev("o", 0.0, 0.0);
            // keep every point inside the forward cone: t >= |x| + small
            let abs: Vec<_> = pts
                .iter()
                .enumerate()
                .map(|(i, &(x, extra))| ev(&format!("d{i}"), x, x.abs() + 0.1 + extra))
                .collect();
            let mut shuffled = abs.clone();
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let a = hierarchy_order(&o, &abs).unwrap();
            let b = hierarchy_order(&o, &shuffled).unwrap();
            prop_assert_eq!(&a, &b);
            let mut ids: Vec<_> = a.iter().map(|e| e.id.clone()).collect();
            ids.sort();
            let mut expect: Vec<_> = abs.iter().map(|e| e.id.clone()).collect();
            expect.sort();
            prop_assert_eq!(ids, expect);
            for w in a.windows(2) {
                prop_assert!(interval(&o, &w[0]).hierarchy_cmp(&interval(&o, &w[1])) != Ordering::Greater);
            }
        }
    }
}
