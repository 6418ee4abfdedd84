//! Right-continuous trajectories with left limits, stored as event lists.

use std::iter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Site;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("time {t} lies beyond the path horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("reversal time must be positive, got {0}")]
    NonPositiveReversal(f64),
    #[error("malformed path: {0}")]
    Malformed(String),
}

/// A jump at `time` into the state with index `state`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event<T> {
    pub time: T,
    pub state: usize,
}

/// Which initial segment two paths must agree on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    /// Agreement on the closed interval [0, t].
    Through,
    /// Agreement on the half-open interval [0, t).
    Before,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path<T> {
    x0: Site,
    events: Vec<Event<T>>,
    zeta: T,
    horizon: T,
}

impl<T: Scalar> Path<T> {
    /// Validating constructor. `zeta` is infinite for paths that are not killed
    /// before the horizon.
    pub fn new(x0: usize, events: Vec<Event<T>>, zeta: T, horizon: T) -> Result<Self, PathError> {
        let bad = |msg: &str| Err(PathError::Malformed(msg.to_string()));
        if !(horizon > T::zero()) {
            return bad("horizon must be positive");
        }
        if !(zeta > T::zero()) {
            return bad("lifetime must be positive");
        }
        if zeta.is_finite() && zeta > horizon {
            return bad("lifetime exceeds horizon");
        }
        let mut prev_time = T::zero();
        let mut prev_state = x0;
        for e in &events {
            if !(e.time > prev_time) {
                return bad("jump times must be positive and strictly increasing");
            }
            if e.time >= zeta || e.time > horizon {
                return bad("jump after lifetime or horizon");
            }
            if e.state == prev_state {
                return bad("jump must change state");
            }
            prev_time = e.time;
            prev_state = e.state;
        }
        Ok(Self {
            x0: Site::State(x0),
            events,
            zeta,
            horizon,
        })
    }

    /// Path sitting at `x0` forever up to `horizon`.
    pub fn constant(x0: usize, horizon: T) -> Self {
        Self {
            x0: Site::State(x0),
            events: Vec::new(),
            zeta: T::infinity(),
            horizon,
        }
    }

    /// The path that starts in the cemetery.
    pub fn dead() -> Self {
        Self {
            x0: Site::Cemetery,
            events: Vec::new(),
            zeta: T::zero(),
            horizon: T::infinity(),
        }
    }

    pub fn x0(&self) -> Site {
        self.x0
    }

    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn zeta(&self) -> T {
        self.zeta
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn is_dead(&self) -> bool {
        self.x0 == Site::Cemetery
    }

    /// Errors unless 0 ≤ t ≤ horizon.
    pub fn check_time(&self, t: T) -> Result<(), PathError> {
        if t < T::zero() {
            Err(PathError::NegativeTime(t.as_f64()))
        } else if t > self.horizon {
            Err(PathError::BeyondHorizon {
                t: t.as_f64(),
                horizon: self.horizon.as_f64(),
            })
        } else {
            Ok(())
        }
    }

    fn state_after(&self, idx: usize) -> Site {
        if idx == 0 {
            self.x0
        } else {
            Site::State(self.events[idx - 1].state)
        }
    }

    /// X_t, the cemetery from ζ on.
    pub fn state_at(&self, t: T) -> Site {
        if t >= self.zeta {
            return Site::Cemetery;
        }
        self.state_after(self.events.partition_point(|e| e.time <= t))
    }

    /// X_{t-}, with X_{0-} = X_0.
    pub fn left_limit(&self, t: T) -> Site {
        if t <= T::zero() {
            return self.x0;
        }
        if t > self.zeta {
            return Site::Cemetery;
        }
        self.state_after(self.events.partition_point(|e| e.time < t))
    }

    /// (X_t, X_{t-}).
    pub fn evaluate(&self, t: T) -> Result<(Site, Site), PathError> {
        self.check_time(t)?;
        Ok((self.state_at(t), self.left_limit(t)))
    }

    /// θ_s ω: the path viewed from time `s` on.
    pub fn shift(&self, s: T) -> Result<Self, PathError> {
        self.check_time(s)?;
        if s >= self.zeta {
            return Ok(Self::dead());
        }
        let x0 = self.state_at(s);
        let start = self.events.partition_point(|e| e.time <= s);
        let events = self.events[start..]
            .iter()
            .map(|e| Event {
                time: e.time - s,
                state: e.state,
            })
            .collect();
        Ok(Self {
            x0,
            events,
            zeta: self.zeta - s,
            horizon: self.horizon - s,
        })
    }

    /// r_t ω: (r_t ω)(s) = ω((t-s)-) for s ≤ t and ω(0) afterwards; the dead path when t ≥ ζ.
    pub fn reverse(&self, t: T) -> Result<Self, PathError> {
        if !(t > T::zero()) {
            return Err(PathError::NonPositiveReversal(t.as_f64()));
        }
        self.check_time(t)?;
        if t >= self.zeta {
            return Ok(Self::dead());
        }
        let k = self.events.partition_point(|e| e.time < t);
        let x0 = self.state_after(k);
        let events = (0..k)
            .rev()
            .map(|i| {
                let state = self.state_after(i).state().expect("alive before lifetime");
                Event {
                    time: t - self.events[i].time,
                    state,
                }
            })
            .collect();
        Ok(Self {
            x0,
            events,
            zeta: T::infinity(),
            horizon: T::infinity(),
        })
    }

    /// The path as known strictly before `t`: later jumps are dropped, a
    /// killing at exactly `t` is dropped, and the horizon becomes `t`.
    /// Evaluating an additive functional on it at `t` yields its left limit.
    pub fn stopped_before(&self, t: T) -> Result<Self, PathError> {
        if !(t > T::zero()) {
            return Err(PathError::Malformed(
                "stopping time must be positive".into(),
            ));
        }
        self.check_time(t)?;
        if self.is_dead() {
            return Ok(self.clone());
        }
        let k = self.events.partition_point(|e| e.time < t);
        let zeta = if self.zeta < t {
            self.zeta
        } else {
            T::infinity()
        };
        Ok(Self {
            x0: self.x0,
            events: self.events[..k].to_vec(),
            zeta,
            horizon: t,
        })
    }

    /// Holding intervals `(start, end, state)` covering [0, t ∧ ζ).
    pub fn holding_intervals(&self, t: T) -> impl Iterator<Item = (T, T, usize)> + '_ {
        let end = t.min(self.zeta);
        let starts = iter::once((T::zero(), self.x0.state()))
            .chain(self.events.iter().map(|e| (e.time, Some(e.state))));
        let stops = self
            .events
            .iter()
            .map(|e| e.time)
            .chain(iter::once(T::infinity()));
        starts
            .zip(stops)
            .take_while(move |((s, _), _)| *s < end)
            .filter_map(move |((s, x), stop)| x.map(|x| (s, stop.min(end), x)))
    }

    /// Jumps `(time, from, to)` at times ≤ t, including the jump to the cemetery at ζ.
    pub fn jumps_until(&self, t: T) -> impl Iterator<Item = (T, Site, Site)> + '_ {
        let k = self.events.partition_point(|e| e.time <= t);
        let regular = (0..k).map(move |i| {
            (
                self.events[i].time,
                self.state_after(i),
                Site::State(self.events[i].state),
            )
        });
        let killing = (self.zeta <= t && !self.is_dead()).then(|| {
            (
                self.zeta,
                self.state_after(self.events.len()),
                Site::Cemetery,
            )
        });
        regular.chain(killing)
    }

    /// Initial state plus the jumps (killing included) within [0,t] or [0,t).
    fn skeleton(&self, t: T, kind: Equivalence) -> (Site, Vec<(T, Site)>) {
        let inside = |s: T| match kind {
            Equivalence::Through => s <= t,
            Equivalence::Before => s < t,
        };
        let mut jumps: Vec<(T, Site)> = self
            .events
            .iter()
            .filter(|e| inside(e.time))
            .map(|e| (e.time, Site::State(e.state)))
            .collect();
        if !self.is_dead() && inside(self.zeta) {
            jumps.push((self.zeta, Site::Cemetery));
        }
        (self.x0, jumps)
    }

    /// Whether the two paths agree on [0,t] (or [0,t)), jump times compared up to `tol`.
    pub fn equivalent(&self, other: &Self, t: T, kind: Equivalence, tol: T) -> bool {
        let (a0, a) = self.skeleton(t, kind);
        let (b0, b) = other.skeleton(t, kind);
        a0 == b0
            && a.len() == b.len()
            && a.iter()
                .zip(&b)
                .all(|(x, y)| x.1 == y.1 && (x.0 - y.0).abs() <= tol)
    }

    pub fn to_record(&self) -> PathRecord {
        let finite = |v: T| v.is_finite().then(|| v.as_f64());
        PathRecord {
            x0: self.x0.state(),
            zeta: finite(self.zeta),
            events: self
                .events
                .iter()
                .map(|e| (e.time.as_f64(), e.state))
                .collect(),
            horizon: finite(self.horizon),
        }
    }
}

/// Serialized form of a path. Absent `zeta`/`horizon` mean infinity; absent `x0` is the dead path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub x0: Option<usize>,
    pub zeta: Option<f64>,
    pub events: Vec<(f64, usize)>,
    pub horizon: Option<f64>,
}

impl PathRecord {
    pub fn to_path<T: Scalar>(&self) -> Result<Path<T>, PathError> {
        let Some(x0) = self.x0 else {
            return Ok(Path::dead());
        };
        let inf = |v: Option<f64>| v.map_or(T::infinity(), T::of);
        let events = self
            .events
            .iter()
            .map(|&(t, s)| Event {
                time: T::of(t),
                state: s,
            })
            .collect();
        Path::new(x0, events, inf(self.zeta), inf(self.horizon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> Path<f64> {
        Path::new(
            0,
            vec![Event {
                time: 0.5,
                state: 1,
            }],
            f64::INFINITY,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn evaluation_at_jump() {
        let w = star();
        assert_eq!(w.evaluate(0.5).unwrap(), (Site::State(1), Site::State(0)));
        assert_eq!(w.evaluate(0.0).unwrap(), (Site::State(0), Site::State(0)));
        assert!(w.evaluate(3.0).is_err());
    }

    #[test]
    fn killed_path_trap() {
        let w = Path::new(1, vec![], 1.0, 2.0).unwrap();
        assert_eq!(w.evaluate(1.0).unwrap(), (Site::Cemetery, Site::State(1)));
        assert_eq!(w.evaluate(1.5).unwrap(), (Site::Cemetery, Site::Cemetery));
        assert!(w.shift(1.0).unwrap().is_dead());
        assert!(w.reverse(1.0).unwrap().is_dead());
        let jumps: Vec<_> = w.jumps_until(2.0).collect();
        assert_eq!(jumps, vec![(1.0, Site::State(1), Site::Cemetery)]);
    }

    #[test]
    fn shift_and_reverse_examples() {
        let w = star();
        assert_eq!(w.shift(0.0).unwrap(), w);
        let s = w.shift(0.7).unwrap();
        assert_eq!(s.x0(), Site::State(1));
        assert!(s.events().is_empty());
        let r = w.reverse(1.0).unwrap();
        assert_eq!(r.x0(), Site::State(1));
        assert_eq!(
            r.events(),
            &[Event {
                time: 0.5,
                state: 0
            }]
        );
        let r = w.reverse(0.3).unwrap();
        assert_eq!(r.x0(), Site::State(0));
        assert!(r.events().is_empty());
        // a jump exactly at the reversal time is read through the left limit
        let r = w.reverse(0.5).unwrap();
        assert_eq!(r.x0(), Site::State(0));
        assert!(r.events().is_empty());
        assert!(w.reverse(0.0).is_err());
    }

    #[test]
    fn equivalence_kinds() {
        let a = Path::new(0, vec![], f64::INFINITY, 2.0).unwrap();
        let b = star();
        assert!(a.equivalent(&b, 0.5, Equivalence::Before, 0.0));
        assert!(!a.equivalent(&b, 0.5, Equivalence::Through, 0.0));
        let c = Path::constant(1, 2.0);
        assert!(!a.equivalent(&c, 0.5, Equivalence::Before, 0.0));
        assert!(b.equivalent(&b, 1.0, Equivalence::Through, 0.0));
    }

    #[test]
    fn construction_rejects_ties_and_self_jumps() {
        let tie = vec![
            Event {
                time: 0.5,
                state: 1,
            },
            Event {
                time: 0.5,
                state: 0,
            },
        ];
        assert!(Path::new(0, tie, f64::INFINITY, 1.0).is_err());
        assert!(Path::new(
            0,
            vec![Event {
                time: 0.5,
                state: 0
            }],
            f64::INFINITY,
            1.0
        )
        .is_err());
        assert!(Path::new(
            0,
            vec![Event {
                time: 1.5,
                state: 1
            }],
            1.0,
            2.0
        )
        .is_err());
    }

    #[test]
    fn holding_intervals_cover_until_lifetime() {
        let w = Path::new(
            0,
            vec![Event {
                time: 0.5,
                state: 1,
            }],
            1.5,
            3.0,
        )
        .unwrap();
        let iv: Vec<_> = w.holding_intervals(2.0).collect();
        assert_eq!(iv, vec![(0.0, 0.5, 0), (0.5, 1.5, 1)]);
        let iv: Vec<_> = w.holding_intervals(0.25).collect();
        assert_eq!(iv, vec![(0.0, 0.25, 0)]);
        assert_eq!(Path::<f64>::dead().holding_intervals(1.0).count(), 0);
    }

    #[test]
    fn stopped_before_drops_jump_at_time() {
        let w = Path::new(
            0,
            vec![Event {
                time: 0.5,
                state: 1,
            }],
            1.0,
            2.0,
        )
        .unwrap();
        let p = w.stopped_before(0.5).unwrap();
        assert!(p.events().is_empty());
        assert_eq!(p.state_at(0.5), Site::State(0));
        let p = w.stopped_before(1.0).unwrap();
        assert_eq!(p.zeta(), f64::INFINITY);
        assert_eq!(p.state_at(1.0), Site::State(1));
    }

    #[test]
    fn record_round_trip() {
        let w = Path::new(
            0,
            vec![Event {
                time: 0.5,
                state: 1,
            }],
            1.0,
            2.0,
        )
        .unwrap();
        assert_eq!(w.to_record().to_path::<f64>().unwrap(), w);
        let d: Path<f64> = Path::dead();
        assert_eq!(d.to_record().to_path::<f64>().unwrap(), d);
    }
}
