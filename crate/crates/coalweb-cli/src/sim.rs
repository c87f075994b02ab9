//! `simulate`: draw one coalescing family from a config file and write it as
//! `family.json` + `knots.csv` (+ optional `family.svg`).

use crate::artifacts::{FamilyFile, Writer};
use crate::{svg, CliError, CliResult};
use coalweb::stats::{config_digest, SystemSpec};
use coalweb::walks::{self, SystemKind, WalkError};
use coalweb::PathFamily;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema: u32,
    pub system: SystemSpec,
    /// Walker starting points `(x, t)` — lattice systems only, in lattice
    /// units (sites and rows for the discrete kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<(f64, f64)>>,
    /// Number of rows (discrete) or time span (continuous) to evolve —
    /// lattice systems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Apply the diffusive rescaling `(x, t) -> (delta x, delta^2 t)` to the
    /// output family.
    #[serde(default)]
    pub rescale: bool,
}

/// Point every random stream in `spec` at `seed` (the `--seed` override).
pub fn reseed(spec: &mut SystemSpec, seed: u64) {
    match spec {
        SystemSpec::Lattice(sys) => *sys = sys.with_seed(seed),
        SystemSpec::Skeleton(cfg) => cfg.seed = seed,
    }
}

fn walk_err(e: WalkError) -> CliError {
    match e {
        WalkError::StartOutsideWindow | WalkError::HorizonOverflow | WalkError::WindowEdge => {
            CliError::Window(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

fn int_coord(v: f64, what: &str) -> CliResult<i64> {
    if v.fract() != 0.0 || v.abs() > i64::MAX as f64 {
        return Err(CliError::Config(format!(
            "{what} must be an integer lattice coordinate, got {v}"
        )));
    }
    Ok(v as i64)
}

fn draw(cfg: &SimulateConfig) -> CliResult<PathFamily> {
    match &cfg.system {
        SystemSpec::Skeleton(sk) => {
            if cfg.starts.is_some() || cfg.horizon.is_some() {
                return Err(CliError::Config(
                    "skeleton systems carry their own starts and horizon; \
                     remove the top-level `starts`/`horizon` fields"
                        .into(),
                ));
            }
            let sample = coalweb::brownian::sample_skeleton(sk)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(sample.family())
        }
        SystemSpec::Lattice(sys) => {
            let starts = cfg
                .starts
                .as_ref()
                .ok_or_else(|| CliError::Config("lattice simulation needs `starts`".into()))?;
            let horizon = cfg
                .horizon
                .ok_or_else(|| CliError::Config("lattice simulation needs `horizon`".into()))?;
            let fam = match sys.kind() {
                SystemKind::DiscreteParity | SystemKind::DiscreteCrossing => {
                    let mut pts = Vec::with_capacity(starts.len());
                    for &(x, t) in starts {
                        pts.push((int_coord(x, "start x")?, int_coord(t, "start t")?));
                    }
                    let h = int_coord(horizon, "horizon")?;
                    if h < 0 || h > u32::MAX as i64 {
                        return Err(CliError::Config(format!(
                            "horizon must fit in 0..=(2^32 - 1) rows, got {horizon}"
                        )));
                    }
                    let run = match sys.kind() {
                        SystemKind::DiscreteParity => walks::simulate_discrete,
                        _ => walks::simulate_crossing,
                    };
                    run(sys, &pts, h as u32).map_err(walk_err)?
                }
                SystemKind::ContinuousTime => {
                    let mut pts = Vec::with_capacity(starts.len());
                    for &(x, t) in starts {
                        pts.push((int_coord(x, "start x")?, t));
                    }
                    walks::simulate_continuous(sys, &pts, horizon).map_err(walk_err)?
                }
            };
            if cfg.rescale {
                walks::rescale(&fam, sys.delta()).map_err(|e| CliError::Config(e.to_string()))
            } else {
                Ok(fam)
            }
        }
    }
}

fn knots_csv(fam: &PathFamily) -> String {
    let mut s = String::from("schema,path,knot,t,x\n");
    for (pi, p) in fam.paths().iter().enumerate() {
        for (ki, &(t, x)) in p.knots().iter().enumerate() {
            let _ = writeln!(s, "1,{pi},{ki},{t},{x}");
        }
    }
    s
}

pub fn run(config: &Path, seed: Option<u64>, out: &Path, want_svg: bool) -> CliResult<u8> {
    let text = std::fs::read_to_string(config)?;
    let mut cfg: SimulateConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config: {e}")))?;
    if cfg.schema != 1 {
        return Err(CliError::Config(format!(
            "unsupported config schema {}, expected 1",
            cfg.schema
        )));
    }
    if let Some(s) = seed {
        reseed(&mut cfg.system, s);
    }
    let digest = config_digest(&cfg);
    let family = draw(&cfg)?;

    let mut writer = Writer::create(out)?;
    let json = serde_json::to_string(&FamilyFile {
        schema: 1,
        paths: family.clone(),
    })
    .map_err(|e| CliError::Config(format!("serialize: {e}")))?;
    writer.put("family.json", format!("{json}\n").as_bytes())?;
    writer.put("knots.csv", knots_csv(&family).as_bytes())?;
    if want_svg {
        writer.put("family.svg", svg::family_svg(&family).as_bytes())?;
    }
    writer.finish(&digest, Some(cfg.system.seed()))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use coalweb::walks::{CoalescingSystem, IncrementLaw, Window};

    fn lattice_cfg() -> SimulateConfig {
        let sys = CoalescingSystem::new(
            SystemKind::DiscreteParity,
            IncrementLaw::fair_pm1(),
            Window {
                x: (-40, 40),
                t: (0.0, 64.0),
            },
            1.0,
            5,
        )
        .unwrap();
        SimulateConfig {
            schema: 1,
            system: SystemSpec::Lattice(sys),
            starts: Some(vec![(0.0, 0.0), (2.0, 0.0)]),
            horizon: Some(16.0),
            rescale: false,
        }
    }

    #[test]
    fn draw_is_deterministic_for_a_fixed_config() {
        let cfg = lattice_cfg();
        assert_eq!(draw(&cfg).unwrap(), draw(&cfg).unwrap());
    }

    #[test]
    fn reseed_changes_the_draw_and_the_reported_seed() {
        let mut cfg = lattice_cfg();
        let before = draw(&cfg).unwrap();
        reseed(&mut cfg.system, 99);
        assert_eq!(cfg.system.seed(), 99);
        assert_ne!(draw(&cfg).unwrap(), before);
    }

    #[test]
    fn fractional_lattice_start_is_a_config_error() {
        let mut cfg = lattice_cfg();
        cfg.starts = Some(vec![(0.5, 0.0)]);
        match draw(&cfg) {
            Err(CliError::Config(msg)) => assert!(msg.contains("integer")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn start_outside_window_maps_to_a_window_error() {
        let mut cfg = lattice_cfg();
        cfg.starts = Some(vec![(100.0, 0.0)]);
        assert!(matches!(draw(&cfg), Err(CliError::Window(_))));
    }

    #[test]
    fn knots_csv_has_one_row_per_knot() {
        let fam = draw(&lattice_cfg()).unwrap();
        let csv = knots_csv(&fam);
        let knots: usize = fam.paths().iter().map(|p| p.knots().len()).sum();
        assert_eq!(csv.lines().count(), knots + 1);
        assert!(csv.starts_with("schema,path,knot,t,x\n"));
        assert!(csv.lines().nth(1).unwrap().starts_with("1,0,0,"));
    }
}
