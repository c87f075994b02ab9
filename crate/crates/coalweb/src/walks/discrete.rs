//! Discrete-time walkers on the integer lattice.

use super::field::{DerivedIncrements, IncrementSource};
use super::{CoalescingSystem, SystemKind, WalkError};
use crate::geometry::{Path, PathFamily};
use crate::scalar::Real;

/// Unit-step walkers on the even sublattice: a walker at `(i, j)` moves to
/// `(i +- 1, j + 1)` by the coin at `(i, j)`. Starts must satisfy `i + j`
/// even. One path per start, knots in lattice units.
pub fn simulate_discrete(
    sys: &CoalescingSystem,
    starts: &[(i64, i64)],
    horizon: u32,
) -> Result<PathFamily, WalkError> {
    if sys.kind() != SystemKind::DiscreteParity {
        return Err(WalkError::WrongKind);
    }
    walk_lattice(sys, &DerivedIncrements { system: sys }, starts, horizon, true)
}

/// Same walk driven by a caller-supplied increment source (scripted tests).
pub fn simulate_discrete_with(
    sys: &CoalescingSystem,
    source: &dyn IncrementSource,
    starts: &[(i64, i64)],
    horizon: u32,
) -> Result<PathFamily, WalkError> {
    if sys.kind() != SystemKind::DiscreteParity {
        return Err(WalkError::WrongKind);
    }
    walk_lattice(sys, source, starts, horizon, true)
}

/// General zero-mean integer steps on the full lattice; interpolated
/// segments may cross, and walkers coalesce exactly when they land on a
/// common site at a common integer time.
pub fn simulate_crossing(
    sys: &CoalescingSystem,
    starts: &[(i64, i64)],
    horizon: u32,
) -> Result<PathFamily, WalkError> {
    if sys.kind() != SystemKind::DiscreteCrossing {
        return Err(WalkError::WrongKind);
    }
    walk_lattice(sys, &DerivedIncrements { system: sys }, starts, horizon, false)
}

pub fn simulate_crossing_with(
    sys: &CoalescingSystem,
    source: &dyn IncrementSource,
    starts: &[(i64, i64)],
    horizon: u32,
) -> Result<PathFamily, WalkError> {
    if sys.kind() != SystemKind::DiscreteCrossing {
        return Err(WalkError::WrongKind);
    }
    walk_lattice(sys, source, starts, horizon, false)
}

fn walk_lattice(
    sys: &CoalescingSystem,
    source: &dyn IncrementSource,
    starts: &[(i64, i64)],
    horizon: u32,
    parity: bool,
) -> Result<PathFamily, WalkError> {
    let w = sys.window();
    let mut paths = Vec::with_capacity(starts.len());
    for &(i0, j0) in starts {
        if parity && (i0 + j0).rem_euclid(2) != 0 {
            return Err(WalkError::ParityViolation);
        }
        if !w.contains_site(i0) || (j0 as Real) < w.t.0 || (j0 as Real) > w.t.1 {
            return Err(WalkError::StartOutsideWindow);
        }
        if (j0 as Real) + (horizon as Real) > w.t.1 {
            return Err(WalkError::HorizonOverflow);
        }
        let mut knots = Vec::with_capacity(horizon as usize + 1);
        let mut i = i0;
        for s in 0..horizon {
            let j = j0 + s as i64;
            knots.push((j as Real, i as Real));
            let d = source.increment(i, j)?;
            if parity && d.abs() != 1 {
                return Err(WalkError::BadIncrement);
            }
            i += d;
            if !w.contains_site(i) {
                return Err(WalkError::WindowEdge);
            }
        }
        knots.push(((j0 + horizon as i64) as Real, i as Real));
        paths.push(Path::new(j0 as Real, knots).expect("lattice knots are valid"));
    }
    Ok(PathFamily::from_paths_exact(paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::{IncrementLaw, ScriptedIncrements, Window};

    fn parity_sys(seed: u64) -> CoalescingSystem {
        CoalescingSystem::new(
            SystemKind::DiscreteParity,
            IncrementLaw::fair_pm1(),
            Window {
                x: (-200, 200),
                t: (0.0, 400.0),
            },
            0.1,
            seed,
        )
        .unwrap()
    }

    fn crossing_sys(law: IncrementLaw, seed: u64) -> CoalescingSystem {
        CoalescingSystem::new(
            SystemKind::DiscreteCrossing,
            law,
            Window {
                x: (-200, 200),
                t: (0.0, 400.0),
            },
            0.1,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn scripted_two_step_walk() {
        let sys = parity_sys(0);
        let coins = ScriptedIncrements::new(&[((0, 0), 1), ((1, 1), -1)]);
        let fam = simulate_discrete_with(&sys, &coins, &[(0, 0)], 2).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.paths()[0].knots(), &[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
    }

    #[test]
    fn shared_coin_forces_identical_futures() {
        let sys = parity_sys(0);
        let coins = ScriptedIncrements::new(&[((0, 0), 1), ((2, 0), -1), ((1, 1), 1)]);
        let fam = simulate_discrete_with(&sys, &coins, &[(0, 0), (2, 0)], 2).unwrap();
        let a = fam.paths()[0].knots();
        let b = fam.paths()[1].knots();
        assert_eq!(a[0], (0.0, 0.0));
        assert_eq!(b[0], (0.0, 2.0));
        // both at site 1 at step 1, identical afterwards (bitwise)
        assert_eq!(a[1..], b[1..]);
        assert_eq!(a[1], (1.0, 1.0));
    }

    #[test]
    fn parity_is_preserved_everywhere() {
        for seed in 0..6 {
            let sys = parity_sys(seed);
            let starts = [(0i64, 0i64), (4, 2), (-6, 0), (3, 1)];
            let fam = simulate_discrete(&sys, &starts, 24).unwrap();
            for p in fam.paths() {
                for &(t, x) in p.knots() {
                    let (i, j) = (x as i64, t as i64);
                    assert_eq!((i + j).rem_euclid(2), 0, "knot ({i},{j}) breaks parity");
                }
            }
        }
    }

    #[test]
    fn parity_violation_and_window_errors() {
        let sys = parity_sys(1);
        assert_eq!(
            simulate_discrete(&sys, &[(0, 1)], 4).unwrap_err(),
            WalkError::ParityViolation
        );
        assert_eq!(
            simulate_discrete(&sys, &[(500, 0)], 4).unwrap_err(),
            WalkError::StartOutsideWindow
        );
        assert_eq!(
            simulate_discrete(&sys, &[(0, 0)], 1000).unwrap_err(),
            WalkError::HorizonOverflow
        );
        let tight = CoalescingSystem::new(
            SystemKind::DiscreteParity,
            IncrementLaw::fair_pm1(),
            Window {
                x: (-2, 2),
                t: (0.0, 100.0),
            },
            0.1,
            3,
        )
        .unwrap();
        assert_eq!(
            simulate_discrete(&tight, &[(0, 0)], 50).unwrap_err(),
            WalkError::WindowEdge
        );
        // wrong kind dispatch
        assert_eq!(
            simulate_crossing(&sys, &[(0, 0)], 4).unwrap_err(),
            WalkError::WrongKind
        );
    }

    #[test]
    fn determinism_same_config_same_family() {
        let sys = parity_sys(77);
        let starts = [(0i64, 0i64), (10, 0), (-8, 2)];
        let a = simulate_discrete(&sys, &starts, 30).unwrap();
        let b = simulate_discrete(&sys, &starts, 30).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.paths().iter().zip(b.paths()) {
            assert_eq!(p.bit_key(), q.bit_key());
        }
        let c = simulate_discrete(&sys.with_seed(78), &starts, 30).unwrap();
        assert!(a.paths().iter().zip(c.paths()).any(|(p, q)| p.bit_key() != q.bit_key()));
    }

    #[test]
    fn plus_minus_two_law_stays_in_parity_class() {
        let law = IncrementLaw::new(&[(-2, (1, 2)), (2, (1, 2))]).unwrap();
        for seed in 0..4 {
            let sys = crossing_sys(law.clone(), seed);
            let fam = simulate_crossing(&sys, &[(0, 0), (1, 0)], 40).unwrap();
            let (p, q) = (&fam.paths()[0], &fam.paths()[1]);
            for s in 0..=40 {
                let t = s as Real;
                assert_ne!(p.eval(t), q.eval(t), "parity classes met at step {s}");
            }
        }
    }

    #[test]
    fn unit_crossing_law_crosses_between_sites_but_never_meets() {
        let law = IncrementLaw::fair_pm1();
        let mut crossed = false;
        for seed in 0..12 {
            let sys = crossing_sys(law.clone(), seed);
            let fam = simulate_crossing(&sys, &[(0, 0), (1, 0)], 60).unwrap();
            let (p, q) = (&fam.paths()[0], &fam.paths()[1]);
            let mut sign = (q.eval(0.0) - p.eval(0.0)).signum();
            for s in 0..=60 {
                let t = s as Real;
                assert_ne!(p.eval(t), q.eval(t), "odd and even walkers met at a site");
                let d = (q.eval(t) - p.eval(t)).signum();
                if d != sign {
                    crossed = true;
                    sign = d;
                }
            }
        }
        assert!(crossed, "interpolated unit walks at odd offset eventually cross");
    }

    #[test]
    fn marginal_moments_match_law_variance() {
        let law = IncrementLaw::new(&[(-2, (1, 6)), (0, (1, 2)), (1, (1, 3))]).unwrap();
        let v = law.variance();
        let var = *v.numer() as f64 / *v.denom() as f64;
        let n_steps = 64u32;
        let reps = 3000u64;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for r in 0..reps {
            let sys = crossing_sys(law.clone(), crate::rng::replica_seed(10, r));
            let fam = simulate_crossing(&sys, &[(0, 0)], n_steps).unwrap();
            let end = fam.paths()[0].eval(n_steps as Real);
            s1 += end;
            s2 += end * end;
        }
        let m = reps as f64;
        let want_var = n_steps as f64 * var;
        assert!((s1 / m).abs() < 5.0 * (want_var / m).sqrt());
        // relative CLT band for the second moment of a near-Gaussian sum
        assert!((s2 / m - want_var).abs() < 5.0 * want_var * (3.0f64 / m).sqrt());
    }
}
