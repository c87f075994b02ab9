//! Lattice systems of coalescing walks.
//!
//! Three kinds share one mechanism: every site of the space-time lattice owns
//! a value of a keyed randomness field (a coin, a general integer increment,
//! or a Poisson clock with per-event direction coins), and a walker simply
//! reads the field wherever it stands. Two walkers that ever occupy the same
//! site at the same time therefore read identical randomness forever after —
//! coalescence is emergent, never an explicit merge — and their emitted knot
//! tails agree bit for bit.
//!
//! Paths are produced in lattice units (time = step index, space = site);
//! [`rescale`] applies the diffusive map `(x, t) -> (delta x, delta^2 t)`.
//! Walkers that reach the spatial window edge raise a hard error instead of
//! reflecting, so statistics are never silently biased; choose windows at
//! least `6 * sqrt(horizon)` beyond the span of the starts.

mod continuous;
mod discrete;
mod field;
mod law;

pub use continuous::{simulate_continuous, simulate_continuous_with};
pub use discrete::{
    simulate_crossing, simulate_crossing_with, simulate_discrete, simulate_discrete_with,
};
pub use field::{
    ClockSource, DerivedClocks, DerivedIncrements, IncrementSource, ScriptedClocks,
    ScriptedIncrements,
};
pub use law::IncrementLaw;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Path, PathFamily, Sentinel};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("operation requires a different system kind")]
    WrongKind,
    #[error("discrete-parity starts must have even site + step index")]
    ParityViolation,
    #[error("start lies outside the configured window")]
    StartOutsideWindow,
    #[error("horizon does not fit inside the window's time range")]
    HorizonOverflow,
    #[error("walker reached the spatial window edge (enlarge the window)")]
    WindowEdge,
    #[error("scripted randomness has no value for a visited key")]
    MissingScriptedValue,
    #[error("increment step values must be distinct")]
    DuplicateStep,
    #[error("increment probabilities must be positive and sum to one exactly")]
    BadProbabilities,
    #[error("increment law must have mean zero")]
    MeanNotZero,
    #[error("increment law must have positive variance")]
    ZeroVariance,
    #[error("discrete-parity systems use the fair +-1 law only")]
    NotFairCoin,
    #[error("scripted increment is invalid for this system kind")]
    BadIncrement,
    #[error("rescale factor must be positive and finite")]
    BadDelta,
    #[error("window bounds must be ordered and finite")]
    BadWindow,
    #[error("start coordinates must be finite and inside the horizon")]
    BadStart,
    #[error("probability is not exactly representable as a small rational")]
    InexactProbability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    DiscreteParity,
    ContinuousTime,
    DiscreteCrossing,
}

/// Simulation window in lattice units: inclusive site range `x`, real time
/// range `t` (step indices for the discrete kinds, clock time for the
/// continuous kind).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x: (i64, i64),
    pub t: (Real, Real),
}

impl Window {
    fn validate(&self) -> Result<(), WalkError> {
        if self.x.0 >= self.x.1 {
            return Err(WalkError::BadWindow);
        }
        if !(self.t.0 < self.t.1) || !self.t.0.is_finite() || !self.t.1.is_finite() {
            return Err(WalkError::BadWindow);
        }
        Ok(())
    }

    pub fn contains_site(&self, i: i64) -> bool {
        self.x.0 <= i && i <= self.x.1
    }
}

/// One lattice system: a kind, its increment law, the window the randomness
/// field covers, the diffusive rescale factor, and the field seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct CoalescingSystem {
    kind: SystemKind,
    law: IncrementLaw,
    window: Window,
    delta: Real,
    seed: u64,
}

impl CoalescingSystem {
    pub fn new(
        kind: SystemKind,
        law: IncrementLaw,
        window: Window,
        delta: Real,
        seed: u64,
    ) -> Result<Self, WalkError> {
        window.validate()?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(WalkError::BadDelta);
        }
        if kind == SystemKind::DiscreteParity && !law.is_fair_pm1() {
            return Err(WalkError::NotFairCoin);
        }
        Ok(CoalescingSystem {
            kind,
            law,
            window,
            delta,
            seed,
        })
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn delta(&self) -> Real {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same system with another seed (replica derivation).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s
    }

    /// The derived increment field at a lattice point, dispatching on kind.
    /// This is the exact field the simulators read, exposed so that counting
    /// estimators can evolve site classes against the same randomness.
    pub fn lattice_increment(&self, i: i64, j: i64) -> Result<i64, WalkError> {
        field::derived_increment(self, i, j)
    }
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    increments: Option<IncrementLaw>,
    window: Window,
    delta: Real,
    seed: u64,
}

impl TryFrom<SystemRepr> for CoalescingSystem {
    type Error = WalkError;
    fn try_from(r: SystemRepr) -> Result<Self, WalkError> {
        let law = r.increments.unwrap_or_else(IncrementLaw::fair_pm1);
        CoalescingSystem::new(r.kind, law, r.window, r.delta, r.seed)
    }
}

impl From<CoalescingSystem> for SystemRepr {
    fn from(s: CoalescingSystem) -> SystemRepr {
        SystemRepr {
            kind: s.kind,
            increments: Some(s.law),
            window: s.window,
            delta: s.delta,
            seed: s.seed,
        }
    }
}

/// Diffusive rescaling of a whole family: `(x, t) -> (delta x, delta^2 t)`.
pub fn rescale(family: &PathFamily, delta: Real) -> Result<PathFamily, GeometryError> {
    family.rescaled(delta)
}

/// The four constant extreme paths that compactify a family: `+inf` and
/// `-inf` trajectories starting at each of `t = -inf` and `t = +inf`. The two
/// starting at `-inf` are genuinely distinct paths from one compactified
/// start point. Counting functionals ignore these by construction.
pub fn boundary_paths() -> PathFamily {
    PathFamily::from_paths_exact(vec![
        Path::sentinel(Sentinel::PlusInf, Real::NEG_INFINITY).unwrap(),
        Path::sentinel(Sentinel::MinusInf, Real::NEG_INFINITY).unwrap(),
        Path::sentinel(Sentinel::PlusInf, Real::INFINITY).unwrap(),
        Path::sentinel(Sentinel::MinusInf, Real::INFINITY).unwrap(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compact_time, compact_x, path_dist};

    fn window() -> Window {
        Window {
            x: (-50, 50),
            t: (0.0, 50.0),
        }
    }

    #[test]
    fn boundary_family_shape() {
        let b = boundary_paths();
        assert_eq!(b.len(), 4);
        let from_minus = b
            .paths()
            .iter()
            .filter(|p| p.start_time() == Real::NEG_INFINITY)
            .count();
        assert_eq!(from_minus, 2);
        for p in b.paths() {
            assert!(p.is_sentinel());
            assert_eq!(path_dist(p, p, 1e-9).unwrap(), 0.0);
        }
    }

    #[test]
    fn sentinel_compactified_track_is_continuous() {
        // the +inf sentinel maps to x-image 1/(1+|t|): both coordinates move
        // at most (slope 1) x (step) between samples
        let mut prev: Option<(Real, Real)> = None;
        let mut t = -30.0;
        while t <= 30.0 {
            let img = (compact_x(Real::INFINITY, t), compact_time(t));
            if let Some(p) = prev {
                assert!((img.0 - p.0).abs() < 0.055 && (img.1 - p.1).abs() < 0.055);
            }
            prev = Some(img);
            t += 0.05;
        }
    }

    #[test]
    fn rescale_maps_knots_diffusively() {
        let p = Path::new(0.0, vec![(0.0, 0.0), (100.0, 3.0)]).unwrap();
        let fam = PathFamily::from_paths_exact(vec![p]);
        let r = rescale(&fam, 0.1).unwrap();
        let (t, x) = r.paths()[0].knots()[1];
        assert!((t - 1.0).abs() < 1e-12 && (x - 0.3).abs() < 1e-12);
        let r1 = rescale(&fam, 1.0).unwrap();
        assert_eq!(r1.paths()[0].knots(), fam.paths()[0].knots());
        // composition law
        let ab = rescale(&rescale(&fam, 0.5).unwrap(), 0.2).unwrap();
        let direct = rescale(&fam, 0.1).unwrap();
        for (p, q) in ab.paths().iter().zip(direct.paths()) {
            for (a, b) in p.knots().iter().zip(q.knots()) {
                assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parity_kind_requires_fair_coin() {
        let law = IncrementLaw::new(&[(-2, (1, 2)), (2, (1, 2))]).unwrap();
        assert_eq!(
            CoalescingSystem::new(SystemKind::DiscreteParity, law, window(), 0.1, 1).unwrap_err(),
            WalkError::NotFairCoin
        );
    }

    #[test]
    fn system_json_round_trip() {
        let sys = CoalescingSystem::new(
            SystemKind::DiscreteCrossing,
            IncrementLaw::new(&[(-2, (1, 4)), (0, (1, 2)), (2, (1, 4))]).unwrap(),
            window(),
            0.05,
            99,
        )
        .unwrap();
        let js = serde_json::to_string(&sys).unwrap();
        let back: CoalescingSystem = serde_json::from_str(&js).unwrap();
        assert_eq!(back.kind(), sys.kind());
        assert_eq!(back.law(), sys.law());
        assert_eq!(back.delta(), sys.delta());
        assert_eq!(back.seed(), sys.seed());

        // a kind with no law defaults to the fair coin
        let js = r#"{"kind":"discrete_parity","window":{"x":[-10,10],"t":[0.0,10.0]},"delta":0.1,"seed":7}"#;
        let sys: CoalescingSystem = serde_json::from_str(js).unwrap();
        assert!(sys.law().is_fair_pm1());
    }

    #[test]
    fn bad_windows_rejected() {
        let law = IncrementLaw::fair_pm1();
        let w = Window {
            x: (5, -5),
            t: (0.0, 1.0),
        };
        assert_eq!(
            CoalescingSystem::new(SystemKind::DiscreteParity, law.clone(), w, 0.1, 0).unwrap_err(),
            WalkError::BadWindow
        );
        let w = Window {
            x: (-5, 5),
            t: (1.0, 1.0),
        };
        assert_eq!(
            CoalescingSystem::new(SystemKind::DiscreteParity, law, w, 0.1, 0).unwrap_err(),
            WalkError::BadWindow
        );
    }
}
