//! Closed-form passage laws for a coalescing pair.

use super::BrownianError;
use crate::scalar::Scalar;

/// Probability that two independent standard Brownian motions started a
/// distance `d >= 0` apart have not met within time `t > 0`:
/// `erf(d / (2 sqrt t))`.
pub fn no_meet_prob<S: Scalar>(d: S, t: S) -> Result<S, BrownianError> {
    if !(d >= S::zero()) || !d.is_finite() {
        return Err(BrownianError::BadDistance);
    }
    if !(t > S::zero()) || !t.is_finite() {
        return Err(BrownianError::BadTime);
    }
    let two = S::from_f64(2.0).unwrap();
    Ok((d / (two * t.sqrt())).erf())
}

/// Distribution function of the pair meeting time at each requested horizon:
/// `F(t) = 1 - no_meet_prob(d, t)`.
pub fn meet_time_cdf<S: Scalar>(d: S, ts: &[S]) -> Result<Vec<S>, BrownianError> {
    ts.iter()
        .map(|&t| no_meet_prob(d, t).map(|s| S::one() - s))
        .collect()
}

/// Conditional probability that the gap of a coalescing pair, observed at
/// `d0 > 0` and `d1 > 0` at the two ends of a step of length `h`, crossed
/// zero inside the step: `exp(-d0 * d1 / h)`. The factor 2 from the gap's
/// diffusion constant is already absorbed. Zero at either end means a
/// certain hit.
pub fn bridge_hit_prob<S: Scalar>(d0: S, d1: S, h: S) -> Result<S, BrownianError> {
    if !(d0 >= S::zero() && d1 >= S::zero()) || !d0.is_finite() || !d1.is_finite() {
        return Err(BrownianError::BadDistance);
    }
    if !(h > S::zero()) || !h.is_finite() {
        return Err(BrownianError::BadTime);
    }
    Ok((-(d0 * d1) / h).exp())
}
