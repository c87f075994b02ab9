//! Monte Carlo estimator harness: replicated runs of the lattice and
//! Brownian samplers, reduced to named pass/fail reports against closed-form
//! targets.
//!
//! Everything here is deterministic in `(seed, config)`: replicas draw their
//! seeds by index, run in parallel in index order, and are reduced with
//! pairwise summation, so the results are bitwise independent of thread
//! count. Each report carries a digest of the generating configuration so a
//! CSV row can be traced back to its inputs.

mod checks;
mod flow;
pub mod ks;

pub use checks::{
    check_donsker, check_monotonicity, check_order_invariance, check_rw_bound, est_B1,
    est_B1p_B2p, est_B2, est_T1, est_eta_mean, est_eta_tail, est_holder,
};
pub use flow::{
    brownian_max_osc, flow_eta_checkpoints, flow_eta_checkpoints_with, flow_finals,
    lattice_a_event, lattice_sites, pair_meeting_steps, skeleton_eta, walker_endpoint,
    walker_max_osc,
};

use crate::brownian::{BrownianError, SkeletonConfig};
use crate::scalar::Real;
use crate::walks::{CoalescingSystem, WalkError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {0} replicas")]
    TooFewReplicas(u32),
    #[error("declared window cannot hold the requested run")]
    WindowTooSmall,
    #[error("grid is degenerate: need distinct positive entries")]
    DegenerateGrid,
    #[error("permutation is not a bijection of walker indices")]
    BadPermutation,
    #[error("parameter out of range: {0}")]
    BadParameter(&'static str),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Brownian(#[from] BrownianError),
}

/// The system an estimator draws replicas from: a shared-coin lattice system
/// or a Brownian family on a sampling grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SystemSpec {
    Lattice(CoalescingSystem),
    Skeleton(SkeletonConfig),
}

impl SystemSpec {
    pub fn seed(&self) -> u64 {
        match self {
            SystemSpec::Lattice(sys) => sys.seed(),
            SystemSpec::Skeleton(cfg) => cfg.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Informational => "informational",
        })
    }
}

/// How an estimate is held against its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// pass iff |estimate - target| <= tolerance
    TwoSided,
    /// pass iff estimate <= target + tolerance
    Upper,
    /// pass iff estimate >= target - tolerance
    Lower,
}

/// One named estimate with its uncertainty, optional target, and verdict.
/// Reports without a target are informational by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: Real,
    pub std_error: Real,
    pub replicas: u32,
    pub target: Option<Real>,
    pub tolerance: Real,
    pub verdict: Verdict,
    pub seed: u64,
    pub config_digest: String,
}

impl EstimateReport {
    /// Build a report, deriving the verdict from the comparison rule.
    #[allow(clippy::too_many_arguments)]
    pub fn judged(
        name: impl Into<String>,
        estimate: Real,
        std_error: Real,
        replicas: u32,
        target: Option<Real>,
        tolerance: Real,
        cmp: Comparison,
        seed: u64,
        config_digest: String,
    ) -> Self {
        let verdict = match target {
            None => Verdict::Informational,
            Some(t) => {
                let ok = match cmp {
                    Comparison::TwoSided => (estimate - t).abs() <= tolerance,
                    Comparison::Upper => estimate <= t + tolerance,
                    Comparison::Lower => estimate >= t - tolerance,
                };
                if ok {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };
        EstimateReport {
            name: name.into(),
            estimate,
            std_error,
            replicas,
            target,
            tolerance,
            verdict,
            seed,
            config_digest,
        }
    }

    pub const CSV_HEADER: &'static str =
        "name,estimate,std_error,target,tolerance,verdict,replicas,seed,config_digest";

    pub fn csv_row(&self) -> String {
        let target = self.target.map(|t| format!("{t}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.name,
            self.estimate,
            self.std_error,
            target,
            self.tolerance,
            self.verdict,
            self.replicas,
            self.seed,
            self.config_digest
        )
    }
}

/// Rectangular scan of probe centres covering `[-l, l] x [-t_span, t_span]`
/// with boxes of width `u/2` and height `t`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanGrid {
    pub l: Real,
    pub t_span: Real,
    pub u: Real,
    pub t: Real,
}

impl ScanGrid {
    pub fn new(l: Real, t_span: Real, u: Real, t: Real) -> Result<Self, StatsError> {
        if !(l > 0.0) || !(t_span > 0.0) || !(u > 0.0) || !(t > 0.0) {
            return Err(StatsError::BadParameter("scan grid sizes must be positive"));
        }
        Ok(ScanGrid { l, t_span, u, t })
    }

    /// Box centres `(x0, t0)`; the boxes tile the scan region completely.
    pub fn centers(&self) -> Vec<(Real, Real)> {
        let nx = (2.0 * self.l / (self.u / 2.0)).ceil().max(1.0) as usize;
        let nt = (2.0 * self.t_span / self.t).ceil().max(1.0) as usize;
        let mut out = Vec::with_capacity(nx * nt);
        for m in 0..nt {
            let t0 = -self.t_span + m as Real * self.t;
            for k in 0..nx {
                out.push((-self.l + self.u / 4.0 + k as Real * self.u / 2.0, t0));
            }
        }
        out
    }
}

/// Sum with a fixed pairwise association order: deterministic for a given
/// slice, and accurate enough for long replica vectors.
pub fn pairwise_sum(xs: &[Real]) -> Real {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and its standard error (zero for a single observation).
pub fn mean_and_se(xs: &[Real]) -> (Real, Real) {
    let n = xs.len();
    assert!(n > 0, "empty sample");
    let mean = pairwise_sum(xs) / n as Real;
    if n < 2 {
        return (mean, 0.0);
    }
    let devs: Vec<Real> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&devs) / (n - 1) as Real;
    (mean, (var / n as Real).sqrt())
}

/// Median of an unsorted sample (mean of the middle pair for even sizes).
pub fn median(xs: &[Real]) -> Real {
    let mut v = xs.to_vec();
    assert!(!v.is_empty(), "empty sample");
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Weighted least-squares slope of `y = s * x` through the origin; returns
/// `(slope, std_error)`. Weights are inverse squared errors, with a floor to
/// keep exact points usable.
pub fn fit_through_origin(points: &[(Real, Real, Real)]) -> (Real, Real) {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y, se) in points {
        let w = 1.0 / se.max(1e-12).powi(2);
        sxx += w * x * x;
        sxy += w * x * y;
    }
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// Ordinary least-squares slope of `ln y` against `ln x`; returns
/// `(slope, std_error)`, the error from the residual variance (zero when
/// only two points are given).
pub fn fit_loglog(xs: &[Real], ys: &[Real]) -> (Real, Real) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let lx: Vec<Real> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<Real> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as Real;
    let mx = pairwise_sum(&lx) / n;
    let my = pairwise_sum(&ly) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..lx.len() {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    let slope = sxy / sxx;
    if lx.len() == 2 {
        return (slope, 0.0);
    }
    let mut rss = 0.0;
    for i in 0..lx.len() {
        let fit = my + slope * (lx[i] - mx);
        rss += (ly[i] - fit) * (ly[i] - fit);
    }
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

/// Hex SHA-256 of the canonical JSON encoding of a configuration value.
pub fn config_digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Run `f` once per replica index, in parallel, results in index order so
/// the outcome is independent of the worker count.
pub(crate) fn par_map<T: Send>(replicas: u32, f: impl Fn(u32) -> T + Send + Sync) -> Vec<T> {
    use rayon::prelude::*;
    (0..replicas).into_par_iter().map(f).collect()
}
