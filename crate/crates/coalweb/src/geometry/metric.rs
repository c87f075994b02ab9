//! Distances between paths and between families of paths.
//!
//! The path distance is
//!
//! ```text
//! d(f, g) = sup_t |compact_x(f^(t), t) - compact_x(g^(t), t)|
//!           max |compact_time(start_f) - compact_time(start_g)|
//! ```
//!
//! where `f^` extends a path backward in time by its first value. The sup is
//! computed exactly at the union of knot times (beyond the extreme knots both
//! paths are constant and the compactified gap only shrinks away from `t = 0`,
//! so the extreme breakpoints dominate the tails) and by certified
//! branch-and-bound inside each inter-knot cell. The return value `D`
//! satisfies `D <= d <= D + tol`.

use super::path::Path;
use super::{compact_time, compact_x, GeometryError, PathFamily};
use crate::scalar::Scalar;

/// Safety inflation on interior Lipschitz bounds, absorbing the rounding in
/// slope recovery from cell endpoints.
const LIP_SLACK: f64 = 1.0625;

/// Certified lower approximation of the path distance: the result `D`
/// satisfies `D <= d(p, q) <= D + tol`.
pub fn path_dist<S: Scalar>(p: &Path<S>, q: &Path<S>, tol: S) -> Result<S, GeometryError> {
    match path_dist_within(p, q, tol, S::infinity())? {
        Some(d) => Ok(d),
        None => unreachable!("no finite distance exceeds an infinite cutoff"),
    }
}

/// Like [`path_dist`], but gives up early: returns `None` once the certified
/// lower bound exceeds `cutoff` (so the true distance surely does too).
pub fn path_dist_within<S: Scalar>(
    p: &Path<S>,
    q: &Path<S>,
    tol: S,
    cutoff: S,
) -> Result<Option<S>, GeometryError> {
    if !(tol > S::zero()) || !tol.is_finite() {
        return Err(GeometryError::BadTolerance);
    }
    if p.bit_key() == q.bit_key() {
        return Ok(Some(S::zero()));
    }

    let start_gap = (compact_time(p.start_time()) - compact_time(q.start_time())).abs();
    let mut best = start_gap;
    if best > cutoff {
        return Ok(None);
    }

    // Breakpoints: all knot times of both paths plus 0 (kink of |t|).
    let mut ts: Vec<S> = Vec::with_capacity(p.knots().len() + q.knots().len() + 1);
    ts.extend(p.knots().iter().map(|k| k.0));
    ts.extend(q.knots().iter().map(|k| k.0));
    ts.push(S::zero());
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();

    let gap_at = |t: S| -> S { (compact_x(p.eval(t), t) - compact_x(q.eval(t), t)).abs() };

    // Values at breakpoints (covers both tails exactly).
    let mut fs: Vec<(S, S, S, S)> = Vec::with_capacity(ts.len());
    for &t in &ts {
        let (fp, fq) = (p.eval(t), q.eval(t));
        let g = (compact_x(fp, t) - compact_x(fq, t)).abs();
        if g > best {
            best = g;
            if best > cutoff {
                return Ok(None);
            }
        }
        fs.push((t, fp, fq, g));
    }

    // Interior refinement, worst cells first is unnecessary: a simple stack
    // with the global prune `cell bound <= best + tol` terminates because the
    // bound shrinks linearly with cell width.
    let half = S::from_f64(0.5).unwrap();
    let two = S::from_f64(2.0).unwrap();
    let slack = S::from_f64(LIP_SLACK).unwrap();
    // cell frame: (u, v, fu_p, fu_q, fv_p, fv_q, gu, gv)
    #[allow(clippy::type_complexity)]
    let mut stack: Vec<(S, S, S, S, S, S, S, S)> = Vec::new();
    for w in fs.windows(2) {
        let (u, fu_p, fu_q, gu) = w[0];
        let (v, fv_p, fv_q, gv) = w[1];
        stack.push((u, v, fu_p, fu_q, fv_p, fv_q, gu, gv));
    }

    while let Some((u, v, fu_p, fu_q, fv_p, fv_q, gu, gv)) = stack.pop() {
        // Identical linear pieces: the gap vanishes on the whole cell.
        if fu_p == fu_q && fv_p == fv_q {
            continue;
        }
        let w = v - u;
        let tmin = if u >= S::zero() {
            u
        } else if v <= S::zero() {
            -v
        } else {
            S::zero()
        };
        let denom = S::one() + tmin;
        // Largest sech^2 over a linear piece: taken at the value closest to 0.
        let peak_sech2 = |a: S, b: S| -> S {
            let closest = if (a < S::zero()) != (b < S::zero()) {
                S::zero()
            } else {
                a.abs().min(b.abs())
            };
            let th = closest.tanh();
            S::one() - th * th
        };
        // Guarded slopes: sentinel pieces are constant at +-infinity, where the
        // naive difference would be NaN.
        let dp = if fu_p == fv_p { S::zero() } else { (fv_p - fu_p) / w };
        let dq = if fu_q == fv_q { S::zero() } else { (fv_q - fu_q) / w };
        let (sp, sq, sd) = (dp.abs(), dq.abs(), (dp - dq).abs());
        let (s2p, s2q) = (peak_sech2(fu_p, fv_p), peak_sech2(fu_q, fv_q));
        // d/dt [tanh p - tanh q] three ways; sech^2 is sech2_lip-Lipschitz, and
        // Float::min ignores a NaN arm (0 * inf from a sentinel gap), so the
        // always-finite sum bound keeps the result meaningful.
        let sech2_lip = S::from_f64(0.7698003589195011).unwrap();
        let gap_lin = (fu_p - fu_q).abs().max((fv_p - fv_q).abs());
        let d_deriv = (sp * s2p + sq * s2q)
            .min(sp * sech2_lip * gap_lin + sd * s2q)
            .min(sq * sech2_lip * gap_lin + sd * s2p);
        // |tanh p - tanh q| over the cell, from its endpoint values.
        let du = (fu_p.tanh() - fu_q.tanh()).abs();
        let dv = (fv_p.tanh() - fv_q.tanh()).abs();
        let d_gap = two.min(gap_lin).min(du.max(dv) + d_deriv * w * half);
        let lip = (d_deriv / denom + d_gap / (denom * denom)) * slack;
        let bound = gu.max(gv) + lip * w * half;
        if bound <= best + tol {
            continue;
        }
        let tm = u + w * half;
        if !(tm > u && tm < v) {
            continue; // float exhaustion; bound is within rounding noise
        }
        let (fm_p, fm_q) = (p.eval(tm), q.eval(tm));
        let gm = gap_at(tm);
        if gm > best {
            best = gm;
            if best > cutoff {
                return Ok(None);
            }
        }
        stack.push((u, tm, fu_p, fu_q, fm_p, fm_q, gu, gm));
        stack.push((tm, v, fm_p, fm_q, fv_p, fv_q, gm, gv));
    }

    Ok(Some(best))
}

/// Symmetric Hausdorff distance between two families under the path
/// distance, certified like [`path_dist`]: the result `D` satisfies
/// `D <= d_H <= D + tol`. Empty-versus-nonempty is infinite; two empty
/// families are at distance zero.
pub fn hausdorff_dist<S: Scalar>(
    a: &PathFamily<S>,
    b: &PathFamily<S>,
    tol: S,
) -> Result<S, GeometryError> {
    let ab = directed(a, b, tol)?;
    let ba = directed(b, a, tol)?;
    Ok(ab.max(ba))
}

fn directed<S: Scalar>(
    from: &PathFamily<S>,
    to: &PathFamily<S>,
    tol: S,
) -> Result<S, GeometryError> {
    if from.is_empty() {
        return Ok(S::zero());
    }
    if to.is_empty() {
        return Ok(S::infinity());
    }
    let keys: std::collections::HashSet<_> = to.paths().iter().map(|p| p.bit_key()).collect();
    let mut worst = S::zero();
    for x in from.paths() {
        if keys.contains(&x.bit_key()) {
            continue; // inner inf is exactly 0
        }
        let mut inner = S::infinity();
        for y in to.paths() {
            // `None` means certified worse than the current minimum
            if let Some(d) = path_dist_within(x, y, tol, inner)? {
                if d < inner {
                    inner = d;
                }
            }
            if inner == S::zero() {
                break;
            }
        }
        if inner > worst {
            worst = inner;
        }
    }
    Ok(worst)
}
