//! Continuous-time walkers driven by per-site event clocks.
//!
//! A walker dropped at `(site, s0)` sits still until the first event at its
//! site strictly after `s0`, then moves along a straight segment to the
//! neighbouring site chosen by that event's direction coin, timed to land
//! exactly on the first event at the destination strictly after departure.
//! That arrival event is consumed immediately as the next departure, so
//! after its first jump a walker is in perpetual motion. Walkers at a common
//! site consume the same events and therefore travel identical segments from
//! then on: coalescence is exact and sharing is bitwise.
//!
//! Events at or after the horizon never fire. A walker still sitting at the
//! horizon gets a final flat knot there; a segment in flight when the horizon
//! passes keeps its overshooting arrival knot.
//!
//! If a start time coincides exactly with an event at its site, both
//! readings are emitted as separate paths: one that consumes the event at
//! once, one that waits for the next.

use super::field::{ClockSource, DerivedClocks};
use super::{CoalescingSystem, SystemKind, WalkError};
use crate::geometry::{Path, PathFamily};
use crate::scalar::Real;

/// Runs walkers with clocks derived from the system seed.
pub fn simulate_continuous(
    sys: &CoalescingSystem,
    starts: &[(i64, Real)],
    horizon: Real,
) -> Result<PathFamily, WalkError> {
    if sys.kind() != SystemKind::ContinuousTime {
        return Err(WalkError::WrongKind);
    }
    let clocks = DerivedClocks::new(sys);
    run(sys, &clocks, starts, horizon)
}

/// Same construction over a caller-supplied clock source.
pub fn simulate_continuous_with(
    sys: &CoalescingSystem,
    clocks: &dyn ClockSource,
    starts: &[(i64, Real)],
    horizon: Real,
) -> Result<PathFamily, WalkError> {
    if sys.kind() != SystemKind::ContinuousTime {
        return Err(WalkError::WrongKind);
    }
    run(sys, clocks, starts, horizon)
}

fn run(
    sys: &CoalescingSystem,
    clocks: &dyn ClockSource,
    starts: &[(i64, Real)],
    horizon: Real,
) -> Result<PathFamily, WalkError> {
    let w = sys.window();
    if !horizon.is_finite() || horizon > w.t.1 || horizon < w.t.0 {
        return Err(WalkError::HorizonOverflow);
    }
    let mut paths = Vec::new();
    for &(site, s0) in starts {
        if !w.contains_site(site) {
            return Err(WalkError::StartOutsideWindow);
        }
        if !s0.is_finite() || s0 < w.t.0 || s0 > horizon {
            return Err(WalkError::BadStart);
        }
        let events = clocks.events(site)?;
        let next = events.partition_point(|&e| e <= s0);
        let coincides = next > 0 && events[next - 1] == s0 && s0 < horizon;
        if coincides {
            // the event firing exactly at s0: read once as "already consumed"
            let mut knots = vec![(s0, site as Real)];
            glide(sys, clocks, site, next - 1, s0, horizon, &mut knots)?;
            paths.push(Path::new(s0, knots).expect("event knots are valid"));
        }
        let mut knots = vec![(s0, site as Real)];
        if next < events.len() && events[next] < horizon {
            knots.push((events[next], site as Real));
            glide(sys, clocks, site, next, events[next], horizon, &mut knots)?;
        } else if horizon > s0 {
            knots.push((horizon, site as Real));
        }
        paths.push(Path::new(s0, knots).expect("event knots are valid"));
    }
    Ok(PathFamily::from_paths_exact(paths))
}

/// Perpetual motion from the event `idx` at `site`, firing at time `e`.
fn glide(
    sys: &CoalescingSystem,
    clocks: &dyn ClockSource,
    mut site: i64,
    mut idx: usize,
    mut e: Real,
    horizon: Real,
    knots: &mut Vec<(Real, Real)>,
) -> Result<(), WalkError> {
    loop {
        let d = clocks.direction(site, idx)?;
        if d.abs() != 1 {
            return Err(WalkError::BadIncrement);
        }
        let dest = site + d;
        if !sys.window().contains_site(dest) {
            return Err(WalkError::WindowEdge);
        }
        let dest_events = clocks.events(dest)?;
        let j = dest_events.partition_point(|&t| t <= e);
        if j == dest_events.len() {
            // next event at the destination lies outside the sampled window
            return Err(WalkError::WindowEdge);
        }
        let arrive = dest_events[j];
        knots.push((arrive, dest as Real));
        if arrive >= horizon {
            return Ok(());
        }
        site = dest;
        idx = j;
        e = arrive;
    }
}
