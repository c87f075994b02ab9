//! Systems of coalescing one-dimensional paths and the machinery to check them.
//!
//! The crate has three layers:
//!
//! * a metric-space layer ([`geometry`], [`counting`]) for polygonal space-time
//!   paths under the compactified sup metric, generic over the scalar type;
//! * samplers ([`walks`], [`brownian`]) that draw coalescing random-walk and
//!   coalescing Brownian families from shared randomness fields, so that
//!   coalescence is emergent rather than imposed;
//! * Monte Carlo estimators ([`stats`]) that compare sampled counting
//!   functionals against closed-form targets and report pass/fail verdicts.
//!
//! All randomness is derived from explicit integer seeds through counter-based
//! key derivation ([`rng`]); every estimator is a deterministic function of
//! `(seed, config)` regardless of thread count.

// Negated float comparisons (`!(x <= y)`) are the deliberate idiom in the
// validators so that NaN fails closed; `partial_cmp` rewrites would bury that.
// Reference constants carry more digits than f64 keeps so the intended value
// is documented exactly.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod brownian;
pub mod counting;
pub mod geometry;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod walks;

pub use scalar::{Real, Scalar};

pub use geometry::{
    compact_time, compact_x, hausdorff_dist, path_dist, plane_dist, Path, PathFamily,
    SpaceTimePoint,
};
