//! Empirical-distribution distances: Kolmogorov-Smirnov statistics, the
//! asymptotic tail probability, and finite-sample confidence bands.

use crate::scalar::Real;

/// Sup distance between the empirical CDF of `sorted` and the reference
/// `cdf`, scanning both sides of every jump.  The reference is assumed
/// continuous; a target with atoms would need its left limits as well.
pub fn ks_one_sample(sorted: &[Real], cdf: impl Fn(Real) -> Real) -> Real {
    let n = sorted.len();
    assert!(n > 0, "empty sample");
    let mut d: Real = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as Real / n as Real);
        d = d.max((i + 1) as Real / n as Real - f);
    }
    d
}

/// Sup distance between the empirical CDFs of two sorted samples.
pub fn ks_two_sample(a: &[Real], b: &[Real]) -> Real {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample");
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: Real = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as Real / a.len() as Real - j as Real / b.len() as Real).abs());
    }
    d
}

/// Tail probability of the scaled sup distance: the alternating series
/// `2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`, clamped to [0, 1].
pub fn kolmogorov_q(x: Real) -> Real {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum: Real = 0.0;
    let mut sign: Real = 1.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as Real * x * x).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a two-sample sup distance `d` with sample sizes
/// `n` and `m`, using the standard small-sample correction to the scaling.
pub fn ks_two_sample_p(d: Real, n: usize, m: usize) -> Real {
    let en = ((n * m) as Real / (n + m) as Real).sqrt();
    kolmogorov_q((en + 0.12 + 0.11 / en) * d)
}

/// Half width of the finite-sample confidence band for an empirical CDF of
/// `n` points at the given coverage level: `sqrt(ln(2/(1-level)) / (2n))`.
pub fn dkw_band(level: Real, n: usize) -> Real {
    assert!(n > 0 && level > 0.0 && level < 1.0);
    ((2.0 / (1.0 - level)).ln() / (2.0 * n as Real)).sqrt()
}
