//! Scalar abstraction for the metric-space layer.
//!
//! Pure geometry and closed-form probability work for any IEEE float; the
//! simulation and statistics layers pin [`Real`]. Extended reals are plain
//! floats: `tanh(+inf) = 1` and `tanh(-inf) = -1` hold natively, which is
//! exactly the compactification convention the metrics need.

use num_traits::{Float, FromPrimitive};

/// Concrete scalar used by samplers, estimators, and the CLI.
pub type Real = f64;

/// Floating-point scalar with the one special function the closed forms need.
pub trait Scalar: Float + FromPrimitive + core::fmt::Debug + Send + Sync + 'static {
    /// Gauss error function.
    fn erf(self) -> Self;
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        libm::erff(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_matches_known_values() {
        // erf(1/2) to 17 digits, from the reflection-principle quadrature.
        assert!((Scalar::erf(0.5f64) - 0.520_499_877_813_046_54).abs() < 1e-15);
        assert_eq!(Scalar::erf(0.0f64), 0.0);
        assert_eq!(Scalar::erf(f64::INFINITY), 1.0);
        assert!((Scalar::erf(0.5f32) - 0.520_499_9f32).abs() < 1e-6);
    }
}
