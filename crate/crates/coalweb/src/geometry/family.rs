//! Families of paths with duplicate suppression.

use super::metric::path_dist_within;
use super::path::Path;
use super::{GeometryError, DEFAULT_DEDUP_TOL};
use crate::scalar::{Real, Scalar};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashSet;

/// An ordered collection of distinct paths. Serializes as a JSON array.
///
/// Two constructors with different strength:
/// * [`PathFamily::from_paths_exact`] removes bit-identical duplicates only.
///   Samplers use it: coalesced walkers share knots bitwise, so identical
///   trajectories are identical representations and nothing weaker is needed.
/// * [`PathFamily::from_paths_dedup`] additionally merges paths closer than a
///   metric tolerance; meant for externally supplied families.
#[derive(Clone, Debug, PartialEq)]
pub struct PathFamily<S = Real> {
    paths: Vec<Path<S>>,
}

impl<S: Scalar> PathFamily<S> {
    /// Keep the first occurrence of each bit-identical path.
    pub fn from_paths_exact(paths: Vec<Path<S>>) -> Self {
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(paths.len());
        for p in paths {
            if seen.insert(p.bit_key()) {
                kept.push(p);
            }
        }
        PathFamily { paths: kept }
    }

    /// Exact dedup, then greedy merge of any path within `tol` of an earlier
    /// kept path under the path distance.
    pub fn from_paths_dedup(paths: Vec<Path<S>>, tol: S) -> Result<Self, GeometryError> {
        if !(tol >= S::zero()) || !tol.is_finite() {
            return Err(GeometryError::BadTolerance);
        }
        let exact = Self::from_paths_exact(paths);
        // The sup certification needs a strictly positive working tolerance;
        // use a slice of the dedup tolerance (or the default scale at 0).
        let eff = if tol > S::zero() {
            tol
        } else {
            S::from_f64(DEFAULT_DEDUP_TOL).unwrap()
        };
        let work_tol = eff * S::from_f64(0.25).unwrap();
        let mut kept: Vec<Path<S>> = Vec::with_capacity(exact.paths.len());
        'next: for p in exact.paths {
            for q in &kept {
                // Keep p only if certified farther than tol from every kept q:
                // d <= tol is possible whenever the certified lower bound
                // stays at or below tol.
                if path_dist_within(&p, q, work_tol, eff)?.is_some() {
                    continue 'next;
                }
            }
            kept.push(p);
        }
        Ok(PathFamily { paths: kept })
    }

    pub fn paths(&self) -> &[Path<S>] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Path<S>> {
        self.paths.iter()
    }

    /// Paths that are not sentinels; counting functionals operate on these.
    pub fn non_sentinel(&self) -> impl Iterator<Item = &Path<S>> {
        self.paths.iter().filter(|p| !p.is_sentinel())
    }

    pub fn into_paths(self) -> Vec<Path<S>> {
        self.paths
    }

    /// Diffusive rescaling of every member.
    pub fn rescaled(&self, delta: S) -> Result<Self, GeometryError> {
        let paths = self
            .paths
            .iter()
            .map(|p| p.rescaled(delta))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PathFamily { paths })
    }
}

impl<S: Scalar + Serialize> Serialize for PathFamily<S> {
    fn serialize<Sz: Serializer>(&self, s: Sz) -> Result<Sz::Ok, Sz::Error> {
        self.paths.serialize(s)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for PathFamily<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let paths = Vec::<Path<S>>::deserialize(d)?;
        Ok(PathFamily::from_paths_exact(paths))
    }
}
