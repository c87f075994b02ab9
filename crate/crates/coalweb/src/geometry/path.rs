//! Polygonal space-time paths.

use super::GeometryError;
use crate::scalar::{Real, Scalar};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Marks the two constant paths at spatial infinity. Ordinary paths are
/// `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sentinel {
    None,
    PlusInf,
    MinusInf,
}

/// A path `f: [start, +inf] -> extended reals`, stored as linear
/// interpolation through finitely many knots `(time, value)`.
///
/// Conventions:
/// * before the first knot the value is the first knot's value (this is the
///   backward "hatted" extension the metric uses, and it also covers
///   `start = -inf`);
/// * after the last knot the value stays at the last knot's value;
/// * a sentinel path has no knots and is identically `+inf` or `-inf`.
///
/// Knot times are finite and strictly increasing; knot values are finite; a
/// finite start time equals the first knot time. NaN never enters.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<S = Real> {
    start: S,
    knots: Vec<(S, S)>,
    sentinel: Sentinel,
}

impl<S: Scalar> Path<S> {
    pub fn new(start: S, knots: Vec<(S, S)>) -> Result<Self, GeometryError> {
        if start.is_nan() || start == S::infinity() {
            return Err(GeometryError::BadStart);
        }
        if knots.is_empty() {
            return Err(GeometryError::NoKnots);
        }
        for w in knots.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(GeometryError::BadKnotTimes);
            }
        }
        for &(t, v) in &knots {
            if !t.is_finite() {
                return Err(GeometryError::BadKnotTimes);
            }
            if !v.is_finite() {
                return Err(GeometryError::BadKnotValues);
            }
        }
        if start.is_finite() && knots[0].0 != start {
            return Err(GeometryError::StartKnotMismatch);
        }
        Ok(Path {
            start,
            knots,
            sentinel: Sentinel::None,
        })
    }

    /// Constant path at `+inf` or `-inf`, starting at `start` (any extended
    /// real, including `+-inf`).
    pub fn sentinel(kind: Sentinel, start: S) -> Result<Self, GeometryError> {
        if kind == Sentinel::None {
            return Err(GeometryError::SentinelWithKnots);
        }
        if start.is_nan() {
            return Err(GeometryError::BadStart);
        }
        Ok(Path {
            start,
            knots: Vec::new(),
            sentinel: kind,
        })
    }

    pub fn start_time(&self) -> S {
        self.start
    }

    pub fn knots(&self) -> &[(S, S)] {
        &self.knots
    }

    pub fn sentinel_kind(&self) -> Sentinel {
        self.sentinel
    }

    pub fn is_sentinel(&self) -> bool {
        self.sentinel != Sentinel::None
    }

    /// Value at `t`, using the constant extensions on both sides. Exact (no
    /// interpolation rounding) when `t` is a knot time.
    pub fn eval(&self, t: S) -> S {
        debug_assert!(!t.is_nan());
        match self.sentinel {
            Sentinel::PlusInf => return S::infinity(),
            Sentinel::MinusInf => return S::neg_infinity(),
            Sentinel::None => {}
        }
        let ks = &self.knots;
        let n = ks.len();
        let idx = ks.partition_point(|k| k.0 < t);
        if idx == n {
            return ks[n - 1].1;
        }
        let (tb, vb) = ks[idx];
        if tb == t || idx == 0 {
            return if tb == t { vb } else { ks[0].1 };
        }
        let (ta, va) = ks[idx - 1];
        va + (t - ta) * (vb - va) / (tb - ta)
    }

    /// Whether the path goes through `(x, s)` up to tolerance `tol`: defined
    /// at `s` (i.e. `s >= start`) and `|f(s) - x| <= tol`. Sentinels touch
    /// only their own infinity.
    pub fn touches(&self, x: S, s: S, tol: S) -> bool {
        debug_assert!(!x.is_nan() && !s.is_nan() && tol >= S::zero());
        if s < self.start {
            return false;
        }
        match self.sentinel {
            Sentinel::PlusInf => return x == S::infinity(),
            Sentinel::MinusInf => return x == S::neg_infinity(),
            Sentinel::None => {}
        }
        (self.eval(s) - x).abs() <= tol
    }

    /// Diffusive rescaling: `(x, t) -> (delta * x, delta^2 * t)`.
    pub fn rescaled(&self, delta: S) -> Result<Self, GeometryError> {
        if !(delta > S::zero()) || !delta.is_finite() {
            return Err(GeometryError::BadTolerance);
        }
        let d2 = delta * delta;
        Ok(Path {
            start: self.start * d2,
            knots: self.knots.iter().map(|&(t, v)| (t * d2, v * delta)).collect(),
            sentinel: self.sentinel,
        })
    }

    /// Bit-exact identity key: equal keys iff identical representation.
    pub(crate) fn bit_key(&self) -> (u8, u64, Vec<(u64, u64)>) {
        let kind = match self.sentinel {
            Sentinel::None => 0u8,
            Sentinel::PlusInf => 1,
            Sentinel::MinusInf => 2,
        };
        (
            kind,
            self.start.to_f64().unwrap().to_bits(),
            self.knots
                .iter()
                .map(|&(t, v)| (t.to_f64().unwrap().to_bits(), v.to_f64().unwrap().to_bits()))
                .collect(),
        )
    }
}

// --- JSON shape ------------------------------------------------------------
//
// {"start": 0.0 | "+inf" | "-inf", "knots": [[t, x], ...],
//  "sentinel": "none" | "+inf" | "-inf"}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtRepr<S> {
    Num(S),
    Tag(String),
}

#[derive(Serialize, Deserialize)]
struct PathRepr<S> {
    start: ExtRepr<S>,
    knots: Vec<(S, S)>,
    sentinel: String,
}

impl<S: Scalar + Serialize> Serialize for Path<S> {
    fn serialize<Sz: Serializer>(&self, s: Sz) -> Result<Sz::Ok, Sz::Error> {
        let start = if self.start == S::infinity() {
            ExtRepr::Tag("+inf".into())
        } else if self.start == S::neg_infinity() {
            ExtRepr::Tag("-inf".into())
        } else {
            ExtRepr::Num(self.start)
        };
        let sentinel = match self.sentinel {
            Sentinel::None => "none",
            Sentinel::PlusInf => "+inf",
            Sentinel::MinusInf => "-inf",
        };
        PathRepr {
            start,
            knots: self.knots.clone(),
            sentinel: sentinel.into(),
        }
        .serialize(s)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for Path<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PathRepr::<S>::deserialize(d)?;
        let start = match repr.start {
            ExtRepr::Num(x) => x,
            ExtRepr::Tag(t) if t == "+inf" => S::infinity(),
            ExtRepr::Tag(t) if t == "-inf" => S::neg_infinity(),
            ExtRepr::Tag(t) => return Err(D::Error::custom(format!("bad start tag {t:?}"))),
        };
        let built = match repr.sentinel.as_str() {
            "none" => Path::new(start, repr.knots),
            "+inf" if repr.knots.is_empty() => Path::sentinel(Sentinel::PlusInf, start),
            "-inf" if repr.knots.is_empty() => Path::sentinel(Sentinel::MinusInf, start),
            "+inf" | "-inf" => Err(GeometryError::SentinelWithKnots),
            other => return Err(D::Error::custom(format!("bad sentinel tag {other:?}"))),
        };
        built.map_err(|e| D::Error::custom(e.to_string()))
    }
}
