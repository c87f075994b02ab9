//! Counting functionals and excursion detectors over path families.
//!
//! The central quantity is `eta`: drop an interval `[a, b]` at time `t0`,
//! follow every path that passes through it, and count how many distinct
//! positions those paths occupy at time `t0 + t`. Coalescence makes this
//! count collapse; its distribution is the fingerprint the statistics module
//! compares against closed forms.
//!
//! Alongside the counts live set-valued views (`n_set`, the extreme entry
//! points, and the arrival sets seeded at those extremes) and three boolean
//! event detectors used by the verification suite: a three-band separation
//! event (`detect_O`) and two excursion events over nested rectangles
//! (`detect_A`, `detect_B`), with the guarantee that a `detect_B` hit always
//! implies a `detect_A` hit for the same query.
//!
//! All detectors are exact for the piecewise-linear paths produced by the
//! simulators: extrema are scanned at knots and window edges, and level
//! crossings are solved per segment, never sampled on a grid.

use crate::geometry::{Path, PathFamily};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CountingError {
    #[error("duration must be positive and finite")]
    BadDuration,
    #[error("inner band width must satisfy 0 < inner < outer/8")]
    BadBands,
    #[error("probe lag must lie in [0, duration/2)")]
    BadProbeLag,
    #[error("interval must be ordered and finite")]
    BadInterval,
    #[error("tolerance must be nonnegative and finite")]
    BadTolerance,
    #[error("rectangle sizes must be positive and finite")]
    BadRectangle,
}

/// Where and when to count: paths through `[a, b] x {t0}`, classified by
/// their positions at `t0 + t`. Positions closer than `match_tol` fall into
/// one class; zero means bit-exact equality, which is the right choice for
/// families whose coalescing paths share knots exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingQuery {
    pub t0: Real,
    pub t: Real,
    pub a: Real,
    pub b: Real,
    #[serde(default)]
    pub match_tol: Real,
}

impl CountingQuery {
    pub fn new(t0: Real, t: Real, a: Real, b: Real, match_tol: Real) -> Result<Self, CountingError> {
        let q = CountingQuery { t0, t, a, b, match_tol };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), CountingError> {
        if !(self.t > 0.0) || !self.t.is_finite() || !self.t0.is_finite() {
            return Err(CountingError::BadDuration);
        }
        if !(self.a <= self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(CountingError::BadInterval);
        }
        if !(self.match_tol >= 0.0) || !self.match_tol.is_finite() {
            return Err(CountingError::BadTolerance);
        }
        Ok(())
    }
}

/// Three-band separation probe: one path near `a - eps`, one near `a + eps`,
/// one in the middle, all alive shortly after `t0`, with the middle path
/// still separated from both outer ones at `t0 + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventOQuery {
    pub a: Real,
    pub t0: Real,
    pub t: Real,
    pub eps: Real,
    pub eps_prime: Real,
    pub delta: Real,
}

impl EventOQuery {
    pub fn new(
        a: Real,
        t0: Real,
        t: Real,
        eps: Real,
        eps_prime: Real,
        delta: Real,
    ) -> Result<Self, CountingError> {
        let q = EventOQuery { a, t0, t, eps, eps_prime, delta };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), CountingError> {
        if !(self.t > 0.0) || !self.t.is_finite() || !self.t0.is_finite() || !self.a.is_finite() {
            return Err(CountingError::BadDuration);
        }
        if !(self.eps_prime > 0.0) || !(self.eps_prime < self.eps / 8.0) || !self.eps.is_finite() {
            return Err(CountingError::BadBands);
        }
        if !(self.delta >= 0.0) || !(self.delta < self.t / 2.0) {
            return Err(CountingError::BadProbeLag);
        }
        Ok(())
    }
}

/// Excursion probe around `(x0, t0)`: the rectangle of full width `w` and
/// height `h` is `[x0 - w/2, x0 + w/2] x [t0, t0 + h]`. Detectors pair the
/// small rectangle (width `u/2`, height `t`) with the big one (width `u`,
/// height `2t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectEventQuery {
    pub x0: Real,
    pub t0: Real,
    pub u: Real,
    pub t: Real,
}

impl RectEventQuery {
    pub fn new(x0: Real, t0: Real, u: Real, t: Real) -> Result<Self, CountingError> {
        let q = RectEventQuery { x0, t0, u, t };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), CountingError> {
        if !self.x0.is_finite() || !self.t0.is_finite() {
            return Err(CountingError::BadRectangle);
        }
        if !(self.u > 0.0) || !self.u.is_finite() || !(self.t > 0.0) || !self.t.is_finite() {
            return Err(CountingError::BadRectangle);
        }
        Ok(())
    }
}

/// Positions at `t0` and `t0 + t` of every non-sentinel path through the
/// query interval. A path counts when it is already alive at `t0` and its
/// value there lies in the closed interval.
fn touching(family: &PathFamily, q: &CountingQuery) -> Vec<(Real, Real)> {
    let arrive = q.t0 + q.t;
    family
        .non_sentinel()
        .filter(|p| p.start_time() <= q.t0)
        .filter_map(|p| {
            let x = p.eval(q.t0);
            if q.a <= x && x <= q.b {
                Some((x, p.eval(arrive)))
            } else {
                None
            }
        })
        .collect()
}

/// Sorted class representatives: values are grouped greedily, a gap larger
/// than `tol` starting a new class; each class is represented by its
/// smallest member. `tol = 0` keeps exactly the distinct values.
fn class_reps(mut values: Vec<Real>, tol: Real) -> Vec<Real> {
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut reps: Vec<Real> = Vec::new();
    let mut prev: Option<Real> = None;
    for v in values {
        match prev {
            Some(p) if v - p <= tol => {}
            _ => reps.push(v),
        }
        prev = Some(v);
    }
    reps
}

/// Representative of the class `v` falls into, given sorted class reps
/// produced by [`class_reps`] from the same value list.
fn rep_of(reps: &[Real], v: Real) -> Real {
    // the class of v is the last representative at or below it
    match reps.partition_point(|&r| r <= v) {
        0 => reps[0],
        k => reps[k - 1],
    }
}

/// Number of distinct arrival positions at `t0 + t` among paths through
/// `[a, b] x {t0}`. Zero exactly when no path touches the interval.
pub fn eta(family: &PathFamily, q: &CountingQuery) -> usize {
    let arr: Vec<Real> = touching(family, q).into_iter().map(|(_, y)| y).collect();
    class_reps(arr, q.match_tol).len()
}

/// `eta` minus the one class a nonempty touching set always has.
pub fn eta_hat(family: &PathFamily, q: &CountingQuery) -> usize {
    eta(family, q).saturating_sub(1)
}

/// The sorted set of distinct arrival positions; its size is exactly
/// [`eta`].
pub fn n_set(family: &PathFamily, q: &CountingQuery) -> Vec<Real> {
    let arr: Vec<Real> = touching(family, q).into_iter().map(|(_, y)| y).collect();
    class_reps(arr, q.match_tol)
}

/// Leftmost and rightmost touched entry positions in `[a, b] x {t0}`;
/// `(+inf, -inf)` when nothing touches (so `l <= r` certifies nonempty).
pub fn l_r_endpoints(family: &PathFamily, q: &CountingQuery) -> (Real, Real) {
    let mut l = Real::INFINITY;
    let mut r = Real::NEG_INFINITY;
    for (x, _) in touching(family, q) {
        l = l.min(x);
        r = r.max(x);
    }
    (l, r)
}

/// Arrival classes of the paths entering at the leftmost touched point and
/// at the rightmost touched point. Both are subsets of [`n_set`]; they
/// single out the extreme coalescing bundles.
pub fn n_plus_minus(family: &PathFamily, q: &CountingQuery) -> (Vec<Real>, Vec<Real>) {
    let touches = touching(family, q);
    if touches.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let reps = class_reps(touches.iter().map(|&(_, y)| y).collect(), q.match_tol);
    let l = touches.iter().map(|&(x, _)| x).fold(Real::INFINITY, Real::min);
    let r = touches.iter().map(|&(x, _)| x).fold(Real::NEG_INFINITY, Real::max);
    let collect = |at: Real| -> Vec<Real> {
        let mut out: Vec<Real> = touches
            .iter()
            .filter(|&&(x, _)| x == at)
            .map(|&(_, y)| rep_of(&reps, y))
            .collect();
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup();
        out
    };
    (collect(l), collect(r))
}

/// True when three paths, all alive before `t0 + delta`, sit in the three
/// probe bands around `a - eps`, `a`, `a + eps` at `t0 + delta`, and the
/// middle path's arrival at `t0 + t` differs from both outer arrivals.
#[allow(non_snake_case)]
pub fn detect_O(family: &PathFamily, q: &EventOQuery) -> Result<bool, CountingError> {
    q.validate()?;
    let probe = q.t0 + q.delta;
    let arrive = q.t0 + q.t;
    let band = |v: Real, c: Real, h: Real| c - h < v && v < c + h;
    let mut left: Vec<Real> = Vec::new();
    let mut mid: Vec<Real> = Vec::new();
    let mut right: Vec<Real> = Vec::new();
    for p in family.non_sentinel() {
        if !(p.start_time() < probe) {
            continue;
        }
        let v = p.eval(probe);
        if band(v, q.a - q.eps, q.eps_prime) {
            left.push(p.eval(arrive));
        } else if band(v, q.a, q.eps - 2.0 * q.eps_prime) {
            mid.push(p.eval(arrive));
        } else if band(v, q.a + q.eps, q.eps_prime) {
            right.push(p.eval(arrive));
        }
    }
    Ok(mid.iter().any(|&m| {
        left.iter().any(|&x| x != m) && right.iter().any(|&x| x != m)
    }))
}

/// Linear pieces of `p` clamped to `[w0, w1]`, tail extension included,
/// as `(s0, v0, s1, v1)` with `s0 < s1`. Assumes `w0 >= p.start_time()`.
fn pieces(p: &Path, w0: Real, w1: Real, out: &mut Vec<(Real, Real, Real, Real)>) {
    out.clear();
    if !(w1 > w0) {
        return;
    }
    let ks = p.knots();
    for w in ks.windows(2) {
        let (s0, s1) = (w[0].0.max(w0), w[1].0.min(w1));
        if s1 > s0 {
            out.push((s0, p.eval(s0), s1, p.eval(s1)));
        }
    }
    let tail = ks.last().unwrap();
    if w1 > tail.0 {
        let s0 = tail.0.max(w0);
        out.push((s0, tail.1, w1, tail.1));
    }
}

/// First time in `[w0, w1]` at which `p` is within `half` of `x0`, solved
/// per linear piece; `None` when the band is never entered.
fn first_band_entry(p: &Path, w0: Real, w1: Real, x0: Real, half: Real) -> Option<Real> {
    if w1 < w0 {
        return None;
    }
    if (p.eval(w0) - x0).abs() <= half {
        return Some(w0);
    }
    let mut segs = Vec::new();
    pieces(p, w0, w1, &mut segs);
    for (s0, v0, s1, v1) in segs {
        let (d0, d1) = (v0 - x0, v1 - x0);
        if d0.abs() <= half {
            return Some(s0);
        }
        if d1.abs() <= half {
            // entered inside the piece: solve for the nearer band edge
            return Some(level_entry(s0, d0, s1, d1, half));
        }
        // fully through the band within one piece (entered and left again)
        if (d0 > half && d1 < -half) || (d0 < -half && d1 > half) {
            return Some(level_entry(s0, d0, s1, d1, half));
        }
    }
    None
}

/// Entry time into `[-half, half]` for the linear gap `d` moving `d0 -> d1`
/// over `[s0, s1]`, given that `|d0| > half` and the band is reached.
fn level_entry(s0: Real, d0: Real, s1: Real, d1: Real, half: Real) -> Real {
    let edge = if d0 > half { half } else { -half };
    s0 + (edge - d0) / (d1 - d0) * (s1 - s0)
}

/// True when some path touches the small rectangle (width `u/2`, height
/// `t`) and at a strictly later time reaches the left or right side of the
/// big rectangle (width `u`, height `2t`).
#[allow(non_snake_case)]
pub fn detect_A(family: &PathFamily, q: &RectEventQuery) -> bool {
    let (lo_t, small_end, big_end) = (q.t0, q.t0 + q.t, q.t0 + 2.0 * q.t);
    let mut segs = Vec::new();
    for p in family.non_sentinel() {
        let ws = lo_t.max(p.start_time());
        if ws > small_end {
            continue;
        }
        let Some(t_first) = first_band_entry(p, ws, small_end, q.x0, q.u / 4.0) else {
            continue;
        };
        // boundary levels of the big rectangle; the path sits strictly
        // inside them at t_first, so any hit is strictly later
        pieces(p, t_first, big_end, &mut segs);
        for &(_, v0, _, v1) in &segs {
            for lvl in [q.x0 - q.u / 2.0, q.x0 + q.u / 2.0] {
                if (v0 - lvl) * (v1 - lvl) <= 0.0 {
                    return true;
                }
            }
        }
    }
    false
}

/// True when some path touches the small rectangle at a time `t1` and
/// wanders at least `u` away from its `t1` position within `[t1, t1 + t]`.
/// Implies [`detect_A`] on the same query.
#[allow(non_snake_case)]
pub fn detect_B(family: &PathFamily, q: &RectEventQuery) -> bool {
    let (lo_t, small_end) = (q.t0, q.t0 + q.t);
    let quarter = q.u / 4.0;
    for p in family.non_sentinel() {
        let ws = lo_t.max(p.start_time());
        if ws > small_end {
            continue;
        }
        // candidate touch times: window ends, knots, knots shifted back by
        // the lookahead, and band entry/exit solutions. Between consecutive
        // candidates the local oscillation is a maximum of linear functions
        // of the touch time, so scanning candidates is exact.
        let mut cand: Vec<Real> = vec![ws, small_end];
        for &(kt, _) in p.knots() {
            if ws <= kt && kt <= small_end {
                cand.push(kt);
            }
            let back = kt - q.t;
            if ws <= back && back <= small_end {
                cand.push(back);
            }
        }
        let mut segs = Vec::new();
        pieces(p, ws, small_end, &mut segs);
        for (s0, v0, s1, v1) in segs {
            let (d0, d1) = (v0 - q.x0, v1 - q.x0);
            for edge in [quarter, -quarter] {
                if (d0 - edge) * (d1 - edge) < 0.0 {
                    cand.push(s0 + (edge - d0) / (d1 - d0) * (s1 - s0));
                }
            }
        }
        for &t1 in &cand {
            let v1 = p.eval(t1);
            if (v1 - q.x0).abs() > quarter {
                continue;
            }
            let hi = t1 + q.t;
            let mut mx = v1.max(p.eval(hi));
            let mut mn = v1.min(p.eval(hi));
            for &(kt, kx) in p.knots() {
                if t1 < kt && kt < hi {
                    mx = mx.max(kx);
                    mn = mn.min(kx);
                }
            }
            if mx - v1 >= q.u || v1 - mn >= q.u {
                return true;
            }
        }
    }
    false
}
