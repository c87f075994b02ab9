//! Compactified space-time geometry of polygonal paths.
//!
//! Space-time `(x, t)` with `x, t` in the extended reals is squeezed into a
//! bounded box by
//!
//! ```text
//! compact_x(x, t) = tanh(x) / (1 + |t|)        compact_time(t) = tanh(t)
//! ```
//!
//! with `tanh(+-inf) = +-1`. Points at `t = +-inf` collapse to single points,
//! which is what lets families of unbounded paths behave like compact sets.
//! Distances:
//!
//! * [`plane_dist`]: sup-distance between two compactified points;
//! * [`path_dist`]: sup over time of the compactified gap between two paths
//!   (each extended backward by its start value), maxed with the gap of the
//!   compactified start times;
//! * [`hausdorff_dist`]: symmetric Hausdorff distance between families under
//!   [`path_dist`].
//!
//! Everything is generic over [`Scalar`] with `f64` defaults; `+-inf` values
//! are ordinary floats.

mod cylinder;
mod family;
mod metric;
mod path;

pub use cylinder::{SegmentQuery, StartRule};
pub use family::PathFamily;
pub use metric::{hausdorff_dist, path_dist, path_dist_within};
pub use path::{Path, Sentinel};

use crate::scalar::{Real, Scalar};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance for the sup computation in [`path_dist`].
pub const DEFAULT_METRIC_TOL: f64 = 1e-9;

/// Default tolerance under which two paths in a family are considered the
/// same path.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("path needs at least one knot unless it is a sentinel")]
    NoKnots,
    #[error("knot times must be finite, non-NaN, and strictly increasing")]
    BadKnotTimes,
    #[error("knot values must be finite")]
    BadKnotValues,
    #[error("start time may not be NaN or +inf for a non-sentinel path")]
    BadStart,
    #[error("a finite start time must equal the first knot time")]
    StartKnotMismatch,
    #[error("sentinel paths carry no knots")]
    SentinelWithKnots,
    #[error("coordinates may not be NaN")]
    NanInput,
    #[error("tolerance must be positive and finite")]
    BadTolerance,
}

/// A point of compactified space-time. `x` and `t` may be `+-inf`, never NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint<S = Real> {
    pub x: S,
    pub t: S,
}

impl<S: Scalar> SpaceTimePoint<S> {
    pub fn new(x: S, t: S) -> Result<Self, GeometryError> {
        if x.is_nan() || t.is_nan() {
            return Err(GeometryError::NanInput);
        }
        Ok(SpaceTimePoint { x, t })
    }
}

/// First compactification coordinate: `tanh(x) / (1 + |t|)`.
#[inline]
pub fn compact_x<S: Scalar>(x: S, t: S) -> S {
    debug_assert!(!x.is_nan() && !t.is_nan());
    x.tanh() / (S::one() + t.abs())
}

/// Second compactification coordinate: `tanh(t)`.
#[inline]
pub fn compact_time<S: Scalar>(t: S) -> S {
    debug_assert!(!t.is_nan());
    t.tanh()
}

/// Sup-distance between two compactified space-time points.
pub fn plane_dist<S: Scalar>(p: SpaceTimePoint<S>, q: SpaceTimePoint<S>) -> S {
    let dx = (compact_x(p.x, p.t) - compact_x(q.x, q.t)).abs();
    let dt = (compact_time(p.t) - compact_time(q.t)).abs();
    dx.max(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compact_x_closed_forms() {
        // tanh(1) at t = 0, and the same point pushed to |t| = 1.
        let tanh1 = 0.761_594_155_955_764_9_f64;
        assert_relative_eq!(compact_x(1.0, 0.0), tanh1, max_relative = 1e-15);
        assert_relative_eq!(compact_x(1.0, 1.0), tanh1 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(compact_x(1.0, -1.0), tanh1 / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn infinities_collapse() {
        // x = +-inf maps to +-1/(1+|t|); t = +-inf squeezes everything to 0.
        assert_eq!(compact_x(f64::INFINITY, 0.0), 1.0);
        assert_eq!(compact_x(f64::NEG_INFINITY, 0.0), -1.0);
        assert_eq!(compact_x(f64::INFINITY, 1.0), 0.5);
        assert_eq!(compact_x(3.0, f64::INFINITY), 0.0);
        assert_eq!(compact_x(f64::INFINITY, f64::INFINITY), 0.0);
        assert_eq!(compact_time(f64::INFINITY), 1.0);
        assert_eq!(compact_time(f64::NEG_INFINITY), -1.0);
    }

    #[test]
    fn all_points_at_plus_infinite_time_coincide() {
        let a = SpaceTimePoint::new(-5.0, f64::INFINITY).unwrap();
        let b = SpaceTimePoint::new(800.0, f64::INFINITY).unwrap();
        assert_eq!(plane_dist(a, b), 0.0);
    }

    #[test]
    fn plane_dist_is_a_metric_on_samples() {
        let pts: Vec<SpaceTimePoint> = [
            (0.0, 0.0),
            (1.0, -2.0),
            (-3.5, 4.0),
            (f64::INFINITY, 1.0),
            (2.0, f64::NEG_INFINITY),
        ]
        .iter()
        .map(|&(x, t)| SpaceTimePoint::new(x, t).unwrap())
        .collect();
        for a in &pts {
            assert_eq!(plane_dist(*a, *a), 0.0);
            for b in &pts {
                assert_eq!(plane_dist(*a, *b), plane_dist(*b, *a));
                for c in &pts {
                    assert!(plane_dist(*a, *c) <= plane_dist(*a, *b) + plane_dist(*b, *c) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn nan_rejected() {
        assert_eq!(SpaceTimePoint::new(f64::NAN, 0.0), Err(GeometryError::NanInput));
    }

    #[test]
    fn generic_over_f32() {
        let p = SpaceTimePoint::<f32> { x: 1.0, t: 0.0 };
        let q = SpaceTimePoint::<f32> { x: -1.0, t: 0.0 };
        assert!((plane_dist(p, q) - 2.0 * 0.761_594_2_f32).abs() < 1e-6);
    }
}
