//! Randomness fields the walkers read.
//!
//! The derived sources hash `(seed, kind tag, lattice coordinates)` so a
//! value exists at every site without storing anything, identical no matter
//! who asks or in what order. The scripted sources replace the hash with an
//! explicit table and error on anything unlisted — they exist so tests can
//! pin down exact trajectories.

use std::cell::RefCell;
use std::collections::HashMap;

use super::{CoalescingSystem, SystemKind, WalkError};
use crate::rng::{self, tag};
use crate::scalar::Real;

/// Integer step read at a space-time lattice point.
pub trait IncrementSource {
    fn increment(&self, i: i64, j: i64) -> Result<i64, WalkError>;
}

/// The system's own keyed field (what [`super::simulate_discrete`] and
/// [`super::simulate_crossing`] read).
pub struct DerivedIncrements<'a> {
    pub system: &'a CoalescingSystem,
}

pub(super) fn derived_increment(sys: &CoalescingSystem, i: i64, j: i64) -> Result<i64, WalkError> {
    match sys.kind() {
        SystemKind::DiscreteParity => Ok(rng::coin(rng::field_u64(
            sys.seed(),
            tag::DISCRETE_COIN,
            i,
            j,
        ))),
        SystemKind::DiscreteCrossing => Ok(sys
            .law()
            .sample(rng::field_u64(sys.seed(), tag::CROSSING_STEP, i, j))),
        SystemKind::ContinuousTime => Err(WalkError::WrongKind),
    }
}

impl IncrementSource for DerivedIncrements<'_> {
    fn increment(&self, i: i64, j: i64) -> Result<i64, WalkError> {
        derived_increment(self.system, i, j)
    }
}

/// Hand-written increments for tests; any unlisted key is an error.
#[derive(Clone, Debug, Default)]
pub struct ScriptedIncrements {
    map: HashMap<(i64, i64), i64>,
}

impl ScriptedIncrements {
    pub fn new(entries: &[((i64, i64), i64)]) -> Self {
        ScriptedIncrements {
            map: entries.iter().copied().collect(),
        }
    }
}

impl IncrementSource for ScriptedIncrements {
    fn increment(&self, i: i64, j: i64) -> Result<i64, WalkError> {
        self.map
            .get(&(i, j))
            .copied()
            .ok_or(WalkError::MissingScriptedValue)
    }
}

/// Per-site event clock: sorted event times inside the window, plus a
/// direction coin per event.
pub trait ClockSource {
    fn events(&self, site: i64) -> Result<Vec<Real>, WalkError>;
    fn direction(&self, site: i64, event_idx: usize) -> Result<i64, WalkError>;
}

/// Rate-1 clocks derived from the system seed: per-site exponential gaps
/// accumulated from the window's start time, with one fair direction coin
/// per event. Cached per site after first use.
pub struct DerivedClocks<'a> {
    system: &'a CoalescingSystem,
    cache: RefCell<HashMap<i64, Vec<Real>>>,
}

impl<'a> DerivedClocks<'a> {
    pub fn new(system: &'a CoalescingSystem) -> Self {
        DerivedClocks {
            system,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl ClockSource for DerivedClocks<'_> {
    fn events(&self, site: i64) -> Result<Vec<Real>, WalkError> {
        if !self.system.window().contains_site(site) {
            return Err(WalkError::WindowEdge);
        }
        let mut cache = self.cache.borrow_mut();
        if let Some(v) = cache.get(&site) {
            return Ok(v.clone());
        }
        let (t0, t1) = self.system.window().t;
        let mut stream = rng::KeyStream::new(self.system.seed(), tag::CLOCK_STREAM, site);
        let mut t = t0;
        let mut events = Vec::new();
        loop {
            t += stream.next_exp();
            if t > t1 {
                break;
            }
            events.push(t);
        }
        cache.insert(site, events.clone());
        Ok(events)
    }

    fn direction(&self, site: i64, event_idx: usize) -> Result<i64, WalkError> {
        Ok(rng::coin(rng::field_u64(
            self.system.seed(),
            tag::CLOCK_DIR,
            site,
            event_idx as i64,
        )))
    }
}

/// Hand-written clocks for tests; unlisted sites or directions error.
#[derive(Clone, Debug, Default)]
pub struct ScriptedClocks {
    events: HashMap<i64, Vec<Real>>,
    directions: HashMap<(i64, usize), i64>,
}

impl ScriptedClocks {
    pub fn new(events: &[(i64, &[Real])], directions: &[((i64, usize), i64)]) -> Self {
        ScriptedClocks {
            events: events
                .iter()
                .map(|&(s, ts)| {
                    let mut v = ts.to_vec();
                    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    (s, v)
                })
                .collect(),
            directions: directions.iter().copied().collect(),
        }
    }
}

impl ClockSource for ScriptedClocks {
    fn events(&self, site: i64) -> Result<Vec<Real>, WalkError> {
        self.events
            .get(&site)
            .cloned()
            .ok_or(WalkError::MissingScriptedValue)
    }

    fn direction(&self, site: i64, event_idx: usize) -> Result<i64, WalkError> {
        self.directions
            .get(&(site, event_idx))
            .copied()
            .ok_or(WalkError::MissingScriptedValue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::{IncrementLaw, Window};

    fn sys(kind: SystemKind) -> CoalescingSystem {
        CoalescingSystem::new(
            kind,
            IncrementLaw::fair_pm1(),
            Window {
                x: (-20, 20),
                t: (0.0, 30.0),
            },
            0.1,
            424242,
        )
        .unwrap()
    }

    #[test]
    fn derived_field_is_stable_and_plus_minus_one() {
        let s = sys(SystemKind::DiscreteParity);
        let src = DerivedIncrements { system: &s };
        for i in -5..5 {
            for j in 0..5 {
                let a = src.increment(i, j).unwrap();
                assert_eq!(a, src.increment(i, j).unwrap());
                assert!(a == 1 || a == -1);
            }
        }
    }

    #[test]
    fn derived_clocks_are_increasing_and_cached() {
        let s = sys(SystemKind::ContinuousTime);
        let clocks = DerivedClocks::new(&s);
        let ev = clocks.events(3).unwrap();
        assert!(!ev.is_empty(), "rate-1 clock over 30 time units fires");
        for w in ev.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(*ev.first().unwrap() > 0.0 && *ev.last().unwrap() <= 30.0);
        assert_eq!(ev, clocks.events(3).unwrap());
        assert_ne!(ev, clocks.events(4).unwrap());
        let d = clocks.direction(3, 0).unwrap();
        assert!(d == 1 || d == -1);
        assert_eq!(clocks.events(999).unwrap_err(), WalkError::WindowEdge);
    }

    #[test]
    fn scripted_sources_error_on_missing_keys() {
        let coins = ScriptedIncrements::new(&[((0, 0), 1)]);
        assert_eq!(coins.increment(0, 0).unwrap(), 1);
        assert_eq!(
            coins.increment(1, 0).unwrap_err(),
            WalkError::MissingScriptedValue
        );
        let clocks = ScriptedClocks::new(&[(0, &[1.0, 0.5])], &[((0, 0), -1)]);
        assert_eq!(clocks.events(0).unwrap(), vec![0.5, 1.0]);
        assert_eq!(clocks.direction(0, 0).unwrap(), -1);
        assert_eq!(
            clocks.direction(0, 1).unwrap_err(),
            WalkError::MissingScriptedValue
        );
    }
}
