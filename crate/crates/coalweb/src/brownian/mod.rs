//! Coalescing Brownian families and their meeting laws.
//!
//! [`sample_skeleton`] draws finitely many coalescing Brownian motions from
//! given space-time starting points: walkers evolve independently on a time
//! grid, and a pair merges either when its gap changes sign across a step or
//! through a hidden-crossing Bernoulli with the exact conditional probability
//! `exp(-d0*d1/h)` (the gap of two independent unit-diffusion motions has
//! diffusion constant 2, which this formula already absorbs). Merging keeps
//! the lower-indexed walker, and the absorbed path shares the survivor's
//! knots bitwise from the meeting time on.
//!
//! [`passage`] has the closed forms: the non-meeting probability of a pair
//! started at distance `d` over a horizon `t` is `erf(d / (2 sqrt t))`.

mod passage;
mod skeleton;

pub use passage::{bridge_hit_prob, meet_time_cdf, no_meet_prob};
pub use skeleton::{
    sample_skeleton, skeleton_snapshots, CoalescenceRecord, SkeletonConfig, SkeletonSample,
    Snapshot,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BrownianError {
    #[error("need at least one starting point")]
    NoStarts,
    #[error("starting points must be finite")]
    BadStart,
    #[error("step must be positive and finite")]
    BadStep,
    #[error("horizon must exceed every start time")]
    BadHorizon,
    #[error("distance must be nonnegative and finite")]
    BadDistance,
    #[error("time must be positive and finite")]
    BadTime,
}
