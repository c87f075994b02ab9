//! Coalescing Brownian family sampled on a time grid.
//!
//! Walkers are indexed by their position in the start list. Each walker's
//! free motion is driven by draws keyed on `(walker index, grid time)`, and
//! when two walkers meet the higher index is absorbed by the lower. Both
//! choices together give a strong structural property: a walker's realized
//! trajectory depends only on walkers with smaller indices, so the family
//! built from the first `k` starts is exactly the first `k` paths of the
//! family built from all of them. That makes prefix families genuinely
//! nested, path for path, under one seed.
//!
//! Within a step the pair gap is watched two ways: a sign change of the gap
//! across the step is a certain meeting, and an unchanged sign still hides a
//! crossing with probability `exp(-d0*d1/h)` (gap diffusion constant 2
//! absorbed), decided by a keyed Bernoulli draw. Detected meetings are placed
//! at the step midpoint. Simultaneous meetings in one step are resolved
//! pairwise in increasing index order; the order can matter only with
//! probability on the order of the step size, which is accepted.

use serde::{Deserialize, Serialize};

use super::{passage::bridge_hit_prob, BrownianError};
use crate::geometry::{Path, PathFamily, SpaceTimePoint};
use crate::rng::{self, tag};
use crate::scalar::Real;

/// Configuration for one coalescing family draw.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkeletonConfig {
    /// Ordered start points; the index in this list is the walker index.
    pub starts: Vec<SpaceTimePoint>,
    /// Grid pitch: consecutive sample times are at most this far apart.
    pub step: Real,
    /// Absolute end time of the simulation; must exceed every start time.
    pub horizon: Real,
    pub seed: u64,
}

/// One absorption event: `pair.1` (the higher index) stops being simulated at
/// `meet_time` and follows `survivor == pair.0` afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceRecord {
    pub pair: (usize, usize),
    pub meet_time: Real,
    pub survivor: usize,
}

/// A materialized draw: one polygonal path per walker (index-aligned with the
/// start list) plus the absorption log.
#[derive(Clone, Debug)]
pub struct SkeletonSample {
    pub paths: Vec<Path>,
    pub merges: Vec<CoalescenceRecord>,
}

impl SkeletonSample {
    /// All distinct trajectories (coalesced duplicates removed exactly).
    pub fn family(&self) -> PathFamily {
        PathFamily::from_paths_exact(self.paths.clone())
    }

    /// Distinct trajectories among the first `k` walkers. Because a walker
    /// never depends on higher indices, this equals the family a fresh run
    /// restricted to those starts would produce on the same grid.
    pub fn prefix_family(&self, k: usize) -> PathFamily {
        PathFamily::from_paths_exact(self.paths[..k.min(self.paths.len())].to_vec())
    }
}

/// Walker state at one requested time: `(class leader, position)`, or `None`
/// for walkers not yet started.
pub type Snapshot = Vec<Option<(usize, Real)>>;

pub fn sample_skeleton(cfg: &SkeletonConfig) -> Result<SkeletonSample, BrownianError> {
    let mut eng = Engine::new(cfg, &[], true)?;
    eng.run();
    Ok(SkeletonSample {
        paths: eng.materialize(),
        merges: eng.merges,
    })
}

/// Walker leaders and positions at each requested time, without building
/// paths. The requested times are inserted into the sampling grid, so the
/// state is read exactly at them. Times earlier than every start yield
/// all-`None` rows; times beyond the horizon are an error.
pub fn skeleton_snapshots(
    cfg: &SkeletonConfig,
    times: &[Real],
) -> Result<Vec<Snapshot>, BrownianError> {
    let mut eng = Engine::new(cfg, times, false)?;
    eng.run();
    let mut rows = Vec::with_capacity(times.len());
    for &s in times {
        rows.push(eng.snapshot_rows.get(&s.to_bits()).cloned().unwrap_or_else(|| {
            // requested time precedes every start: nobody is born
            vec![None; cfg.starts.len()]
        }));
    }
    Ok(rows)
}

struct Engine {
    seed: u64,
    grid: Vec<Real>,
    /// walkers born at grid index g, ascending
    births: Vec<Vec<usize>>,
    starts: Vec<SpaceTimePoint>,
    wants_snapshot: std::collections::HashSet<u64>,
    snapshot_rows: std::collections::HashMap<u64, Snapshot>,
    // live state
    pos: Vec<Real>,
    born: Vec<bool>,
    alive: Vec<bool>,
    leader: Vec<usize>,
    /// (time, value at that time, absorber) for each dead walker
    death: Vec<Option<(Real, Real, usize)>>,
    merges: Vec<CoalescenceRecord>,
    /// own polygonal history per walker while alive (materializing mode only)
    own: Option<Vec<Vec<(Real, Real)>>>,
}

impl Engine {
    fn new(cfg: &SkeletonConfig, marks: &[Real], materialize: bool) -> Result<Self, BrownianError> {
        if cfg.starts.is_empty() {
            return Err(BrownianError::NoStarts);
        }
        if !(cfg.step > 0.0) || !cfg.step.is_finite() {
            return Err(BrownianError::BadStep);
        }
        let mut t_max = Real::NEG_INFINITY;
        let mut t_min = Real::INFINITY;
        for p in &cfg.starts {
            if !p.x.is_finite() || !p.t.is_finite() {
                return Err(BrownianError::BadStart);
            }
            t_max = t_max.max(p.t);
            t_min = t_min.min(p.t);
        }
        if !(cfg.horizon > t_max) || !cfg.horizon.is_finite() {
            return Err(BrownianError::BadHorizon);
        }
        for &m in marks {
            if m.is_nan() || m > cfg.horizon {
                return Err(BrownianError::BadTime);
            }
        }

        // Anchors: every start time, every in-range mark, and the horizon.
        let mut anchors: Vec<Real> = cfg.starts.iter().map(|p| p.t).collect();
        anchors.extend(marks.iter().copied().filter(|&m| m >= t_min));
        anchors.push(cfg.horizon);
        anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        anchors.dedup();

        let mut grid = Vec::new();
        for w in anchors.windows(2) {
            let (a, b) = (w[0], w[1]);
            grid.push(a);
            let n = ((b - a) / cfg.step).ceil().max(1.0);
            if !n.is_finite() || n > 2e7 {
                return Err(BrownianError::BadStep);
            }
            let n = n as u64;
            for k in 1..n {
                let s = a + (b - a) * (k as Real) / (n as Real);
                // guard against rounding onto either anchor
                if s > a && s < b {
                    grid.push(s);
                }
            }
        }
        grid.push(cfg.horizon);

        let n_walk = cfg.starts.len();
        let mut births = vec![Vec::new(); grid.len()];
        for (i, p) in cfg.starts.iter().enumerate() {
            // start times are anchors, so exact lookup succeeds
            let g = grid.partition_point(|&t| t < p.t);
            debug_assert!(grid[g] == p.t);
            births[g].push(i);
        }

        let wants_snapshot = marks.iter().map(|m| m.to_bits()).collect();
        Ok(Engine {
            seed: cfg.seed,
            grid,
            births,
            starts: cfg.starts.clone(),
            wants_snapshot,
            snapshot_rows: std::collections::HashMap::new(),
            pos: vec![0.0; n_walk],
            born: vec![false; n_walk],
            alive: vec![false; n_walk],
            leader: (0..n_walk).collect(),
            death: vec![None; n_walk],
            merges: Vec::new(),
            own: if materialize {
                Some(vec![Vec::new(); n_walk])
            } else {
                None
            },
        })
    }

    fn find(&self, mut i: usize) -> usize {
        while self.leader[i] != i {
            i = self.leader[i];
        }
        i
    }

    fn absorb(&mut self, lo: usize, hi: usize, time: Real, value: Real) {
        debug_assert!(lo < hi && self.alive[lo] && self.alive[hi]);
        self.alive[hi] = false;
        self.leader[hi] = lo;
        self.death[hi] = Some((time, value, lo));
        self.merges.push(CoalescenceRecord {
            pair: (lo, hi),
            meet_time: time,
            survivor: lo,
        });
    }

    fn run(&mut self) {
        let n = self.starts.len();
        let mut prop = vec![0.0; n];
        for g in 0..self.grid.len() {
            let u = self.grid[g];

            // Births at this grid time, then exact-coincidence merges in
            // index order (coincident starts fuse on the spot).
            if !self.births[g].is_empty() {
                for &w in &self.births[g].clone() {
                    self.born[w] = true;
                    self.alive[w] = true;
                    self.pos[w] = self.starts[w].x;
                    if let Some(own) = self.own.as_mut() {
                        own[w].push((u, self.starts[w].x));
                    }
                }
                for i in 0..n {
                    if !(self.alive[i] && self.born[i]) {
                        continue;
                    }
                    for j in (i + 1)..n {
                        if self.alive[j] && self.born[j] && self.pos[i] == self.pos[j] {
                            self.absorb(i, j, u, self.pos[i]);
                        }
                    }
                }
            }

            if self.wants_snapshot.contains(&u.to_bits()) {
                let row: Snapshot = (0..n)
                    .map(|w| {
                        if self.born[w] {
                            let l = self.find(w);
                            Some((l, self.pos[l]))
                        } else {
                            None
                        }
                    })
                    .collect();
                self.snapshot_rows.insert(u.to_bits(), row);
            }

            if g + 1 == self.grid.len() {
                break;
            }
            let v = self.grid[g + 1];
            let dt = v - u;
            if dt <= 0.0 {
                continue;
            }
            let sdt = dt.sqrt();
            let ubits = u.to_bits() as i64;

            for (i, p) in prop.iter_mut().enumerate() {
                if self.alive[i] && self.born[i] {
                    *p = self.pos[i]
                        + sdt * rng::field_gauss(self.seed, tag::SKELETON_GAUSS, i as i64, ubits);
                }
            }

            // Pairwise meeting checks in index order. A sign change of the
            // gap is a certain meeting; an unchanged sign hides one with the
            // bridge probability (skipped when it is below ~4e-18).
            for i in 0..n {
                if !(self.alive[i] && self.born[i]) {
                    continue;
                }
                for j in (i + 1)..n {
                    if !(self.alive[j] && self.born[j]) {
                        continue;
                    }
                    let g0 = self.pos[i] - self.pos[j];
                    let g1 = prop[i] - prop[j];
                    let met = if g0 * g1 <= 0.0 {
                        true
                    } else {
                        let d0d1 = (g0 * g1).abs();
                        d0d1 <= 40.0 * dt
                            && rng::unit(rng::mix(
                                self.seed,
                                &[tag::SKELETON_BRIDGE, i as u64, j as u64, u.to_bits()],
                            )) < bridge_hit_prob(g0.abs(), g1.abs(), dt).unwrap()
                    };
                    if met {
                        let mid = 0.5 * (u + v);
                        let m = 0.5 * (self.pos[i] + prop[i]);
                        self.absorb(i, j, mid, m);
                    }
                }
            }

            for i in 0..n {
                if self.alive[i] && self.born[i] {
                    self.pos[i] = prop[i];
                    if let Some(own) = self.own.as_mut() {
                        own[i].push((v, prop[i]));
                    }
                }
            }
        }
    }

    /// Build final paths in index order: an absorbed walker keeps its own
    /// history, gains a knot at the meeting point on the survivor's segment,
    /// and then carries the survivor's later knots verbatim, so coalesced
    /// tails compare equal bit for bit.
    fn materialize(&mut self) -> Vec<Path> {
        let own = self.own.take().expect("materializing engine");
        let mut done: Vec<Vec<(Real, Real)>> = Vec::with_capacity(own.len());
        for (i, hist) in own.into_iter().enumerate() {
            let mut ks = hist;
            if let Some((t_d, val, into)) = self.death[i] {
                if ks.last().map(|k| k.0 < t_d).unwrap_or(false) {
                    ks.push((t_d, val));
                }
                let sv = &done[into];
                let cut = sv.partition_point(|k| k.0 <= t_d);
                ks.extend_from_slice(&sv[cut..]);
            }
            done.push(ks);
        }
        done.into_iter()
            .map(|ks| {
                let start = ks.first().expect("walker has a birth knot").0;
                Path::new(start, ks).expect("grid knots are valid")
            })
            .collect()
    }
}
