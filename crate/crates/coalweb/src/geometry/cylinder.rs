//! Cylinder-style membership queries on paths.
//!
//! A query fixes a start-time rule and a finite list of gates `(time, open
//! interval)`; a path matches when its start time obeys the rule and its
//! value passes through every gate. These are the events that generate the
//! relevant sigma-algebra on path space, so they double as a test surface:
//! anything measurable is approximated by them.

use super::path::Path;
use super::{GeometryError, PathFamily};
use crate::scalar::{Real, Scalar};
use serde::{Deserialize, Serialize};

/// Constraint on the path's start time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule<S = Real> {
    /// Start strictly after the bound.
    After(S),
    /// Start at or after the bound.
    AtOrAfter(S),
    /// No constraint.
    Any,
}

/// Gates are `(time, (lo, hi))` with open intervals `lo < value < hi`;
/// `+-inf` endpoints make half-open or trivial gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentQuery<S = Real> {
    pub start: StartRule<S>,
    pub gates: Vec<(S, (S, S))>,
}

impl<S: Scalar> SegmentQuery<S> {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bound_ok = |b: &S| !b.is_nan();
        match &self.start {
            StartRule::After(b) | StartRule::AtOrAfter(b) if !bound_ok(b) => {
                return Err(GeometryError::NanInput)
            }
            _ => {}
        }
        for (t, (lo, hi)) in &self.gates {
            if t.is_nan() || lo.is_nan() || hi.is_nan() || !t.is_finite() {
                return Err(GeometryError::NanInput);
            }
            if !(lo < hi) {
                return Err(GeometryError::BadKnotValues);
            }
        }
        Ok(())
    }

    /// Whether `path` satisfies the start rule and passes through every gate.
    /// A gate before the path's start time fails (the path is undefined
    /// there); sentinels never sit inside a finite open interval.
    pub fn matches(&self, path: &Path<S>) -> Result<bool, GeometryError> {
        self.validate()?;
        let s0 = path.start_time();
        let start_ok = match self.start {
            StartRule::After(b) => s0 > b,
            StartRule::AtOrAfter(b) => s0 >= b,
            StartRule::Any => true,
        };
        if !start_ok {
            return Ok(false);
        }
        for &(t, (lo, hi)) in &self.gates {
            if t < s0 {
                return Ok(false);
            }
            let v = path.eval(t);
            if !(v > lo && v < hi) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl<S: Scalar> PathFamily<S> {
    /// Indices of member paths matching the query.
    pub fn matching_indices(&self, q: &SegmentQuery<S>) -> Result<Vec<usize>, GeometryError> {
        let mut out = Vec::new();
        for (i, p) in self.paths().iter().enumerate() {
            if q.matches(p)? {
                out.push(i);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(start: f64, knots: &[(f64, f64)]) -> Path {
        Path::new(start, knots.to_vec()).unwrap()
    }

    #[test]
    fn gates_are_open_intervals() {
        let f = p(0.0, &[(0.0, 0.0), (2.0, 2.0)]);
        let q = SegmentQuery {
            start: StartRule::Any,
            gates: vec![(1.0, (0.5, 1.5))],
        };
        assert!(q.matches(&f).unwrap());
        let boundary = SegmentQuery {
            start: StartRule::Any,
            gates: vec![(1.0, (1.0, 2.0))],
        };
        assert!(!boundary.matches(&f).unwrap(), "open endpoint must exclude");
    }

    #[test]
    fn strict_start_implies_weak_start() {
        let paths = [
            p(0.5, &[(0.5, 0.0), (2.0, 0.0)]),
            p(0.0, &[(0.0, 0.0), (2.0, 0.0)]),
            p(-1.0, &[(-1.0, 0.0), (2.0, 0.0)]),
        ];
        let gates = vec![(1.0, (-1.0, 1.0))];
        for f in &paths {
            let strict = SegmentQuery {
                start: StartRule::After(0.0),
                gates: gates.clone(),
            };
            let weak = SegmentQuery {
                start: StartRule::AtOrAfter(0.0),
                gates: gates.clone(),
            };
            if strict.matches(f).unwrap() {
                assert!(weak.matches(f).unwrap());
            }
        }
        // and the boundary case separates them
        let at = p(0.0, &[(0.0, 0.0), (2.0, 0.0)]);
        assert!(!SegmentQuery { start: StartRule::After(0.0), gates: gates.clone() }
            .matches(&at)
            .unwrap());
        assert!(SegmentQuery { start: StartRule::AtOrAfter(0.0), gates }
            .matches(&at)
            .unwrap());
    }

    #[test]
    fn gate_before_start_fails() {
        let f = p(1.0, &[(1.0, 0.0), (2.0, 0.0)]);
        let q = SegmentQuery {
            start: StartRule::Any,
            gates: vec![(0.5, (-10.0, 10.0))],
        };
        assert!(!q.matches(&f).unwrap());
    }

    #[test]
    fn family_filter_returns_indices() {
        let fam = PathFamily::from_paths_exact(vec![
            p(0.0, &[(0.0, 0.0), (2.0, 0.0)]),
            p(0.0, &[(0.0, 5.0), (2.0, 5.0)]),
        ]);
        let q = SegmentQuery {
            start: StartRule::Any,
            gates: vec![(1.0, (-1.0, 1.0))],
        };
        assert_eq!(fam.matching_indices(&q).unwrap(), vec![0]);
    }

    #[test]
    fn bad_gate_interval_rejected() {
        let q = SegmentQuery::<f64> {
            start: StartRule::Any,
            gates: vec![(0.0, (1.0, 1.0))],
        };
        assert_eq!(q.validate().unwrap_err(), GeometryError::BadKnotValues);
    }
}
