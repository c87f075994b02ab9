//! `verify`: run a suite of statistical checks described by a config file and
//! write every resulting row to `report.csv`.
//!
//! Exit code 0 means every row with a target passed (informational rows never
//! gate); 1 means at least one targeted row failed.

use crate::artifacts::Writer;
use crate::sim::reseed;
use crate::{CliError, CliResult};
use coalweb::brownian::SkeletonConfig;
use coalweb::counting::CountingQuery;
use coalweb::stats::{
    self, config_digest, EstimateReport, ScanGrid, StatsError, SystemSpec, Verdict,
};
use coalweb::walks::CoalescingSystem;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::Path;

const DEFAULT_REPLICAS: u32 = 400;

/// Override for the target/tolerance of a single-row check: the row is
/// re-judged two-sided against this instead of its built-in target.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pin {
    pub target: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub schema: u32,
    /// Base seed for every check; the command line `--seed` wins over this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Replica count for checks that do not name their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u32>,
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSpec {
    #[serde(flatten)]
    pub kind: CheckKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin: Option<Pin>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CheckKind {
    EtaMean {
        system: SystemSpec,
        query: CountingQuery,
    },
    EtaTail {
        system: SystemSpec,
        query: CountingQuery,
        k: u32,
    },
    RwBound {
        system: SystemSpec,
        query: CountingQuery,
        k: u32,
    },
    Donsker {
        system: SystemSpec,
        times: Vec<f64>,
    },
    B1 {
        system: SystemSpec,
        grid: ScanGrid,
        eps: Vec<f64>,
    },
    B2 {
        system: SystemSpec,
        grid: ScanGrid,
        eps: Vec<f64>,
    },
    B1pB2p {
        system: SystemSpec,
        grid: ScanGrid,
        eps: Vec<f64>,
    },
    T1 {
        system: SystemSpec,
        grid: ScanGrid,
        ts: Vec<f64>,
    },
    Holder {
        system: SystemSpec,
        lags: Vec<f64>,
    },
    OrderInvariance {
        system: SystemSpec,
        perm: Vec<usize>,
        query: CountingQuery,
    },
    Monotonicity {
        system: SystemSpec,
        query: CountingQuery,
        stages: u32,
    },
}

impl CheckKind {
    fn system_mut(&mut self) -> &mut SystemSpec {
        match self {
            CheckKind::EtaMean { system, .. }
            | CheckKind::EtaTail { system, .. }
            | CheckKind::RwBound { system, .. }
            | CheckKind::Donsker { system, .. }
            | CheckKind::B1 { system, .. }
            | CheckKind::B2 { system, .. }
            | CheckKind::B1pB2p { system, .. }
            | CheckKind::T1 { system, .. }
            | CheckKind::Holder { system, .. }
            | CheckKind::OrderInvariance { system, .. }
            | CheckKind::Monotonicity { system, .. } => system,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            CheckKind::EtaMean { .. } => "eta_mean",
            CheckKind::EtaTail { .. } => "eta_tail",
            CheckKind::RwBound { .. } => "rw_bound",
            CheckKind::Donsker { .. } => "donsker",
            CheckKind::B1 { .. } => "b1",
            CheckKind::B2 { .. } => "b2",
            CheckKind::B1pB2p { .. } => "b1p_b2p",
            CheckKind::T1 { .. } => "t1",
            CheckKind::Holder { .. } => "holder",
            CheckKind::OrderInvariance { .. } => "order_invariance",
            CheckKind::Monotonicity { .. } => "monotonicity",
        }
    }
}

fn stat_err(e: StatsError) -> CliError {
    CliError::Config(e.to_string())
}

fn lattice<'a>(spec: &'a SystemSpec, check: &str) -> CliResult<&'a CoalescingSystem> {
    match spec {
        SystemSpec::Lattice(sys) => Ok(sys),
        SystemSpec::Skeleton(_) => Err(CliError::Config(format!(
            "check `{check}` needs a lattice system"
        ))),
    }
}

fn skeleton<'a>(spec: &'a SystemSpec, check: &str) -> CliResult<&'a SkeletonConfig> {
    match spec {
        SystemSpec::Skeleton(cfg) => Ok(cfg),
        SystemSpec::Lattice(_) => Err(CliError::Config(format!(
            "check `{check}` needs a skeleton system"
        ))),
    }
}

/// Reject malformed grids up front: the struct deserializes field-by-field,
/// so the constructor's validation has to be re-run.
fn checked_grid(g: &ScanGrid) -> CliResult<ScanGrid> {
    ScanGrid::new(g.l, g.t_span, g.u, g.t).map_err(stat_err)
}

fn effective_replicas(check: Option<u32>, cli: Option<u32>, suite: Option<u32>) -> u32 {
    check.or(cli).or(suite).unwrap_or(DEFAULT_REPLICAS)
}

fn apply_pin(mut rows: Vec<EstimateReport>, pin: &Pin, tag: &str) -> CliResult<Vec<EstimateReport>> {
    if rows.len() != 1 {
        return Err(CliError::Config(format!(
            "`pin` applies only to single-row checks; `{tag}` produced {}",
            rows.len()
        )));
    }
    let r = &mut rows[0];
    r.target = Some(pin.target);
    r.tolerance = pin.tolerance;
    r.verdict = if (r.estimate - pin.target).abs() <= pin.tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(rows)
}

fn run_one(c: &CheckSpec, replicas: u32) -> CliResult<Vec<EstimateReport>> {
    let rows = match &c.kind {
        CheckKind::EtaMean { system, query } => {
            vec![stats::est_eta_mean(system, query, replicas).map_err(stat_err)?]
        }
        CheckKind::EtaTail { system, query, k } => {
            vec![stats::est_eta_tail(system, query, *k, replicas).map_err(stat_err)?]
        }
        CheckKind::RwBound { system, query, k } => vec![stats::check_rw_bound(
            lattice(system, "rw_bound")?,
            query,
            *k,
            replicas,
        )
        .map_err(stat_err)?],
        CheckKind::Donsker { system, times } => {
            stats::check_donsker(lattice(system, "donsker")?, times, replicas).map_err(stat_err)?
        }
        CheckKind::B1 { system, grid, eps } => {
            stats::est_B1(system, &checked_grid(grid)?, eps, replicas).map_err(stat_err)?
        }
        CheckKind::B2 { system, grid, eps } => {
            stats::est_B2(system, &checked_grid(grid)?, eps, replicas).map_err(stat_err)?
        }
        CheckKind::B1pB2p { system, grid, eps } => stats::est_B1p_B2p(
            lattice(system, "b1p_b2p")?,
            &checked_grid(grid)?,
            eps,
            replicas,
        )
        .map_err(stat_err)?,
        CheckKind::T1 { system, grid, ts } => {
            stats::est_T1(lattice(system, "t1")?, &checked_grid(grid)?, ts, replicas)
                .map_err(stat_err)?
        }
        CheckKind::Holder { system, lags } => {
            vec![stats::est_holder(system, lags, replicas).map_err(stat_err)?]
        }
        CheckKind::OrderInvariance {
            system,
            perm,
            query,
        } => vec![stats::check_order_invariance(
            skeleton(system, "order_invariance")?,
            perm,
            query,
            replicas,
        )
        .map_err(stat_err)?],
        CheckKind::Monotonicity {
            system,
            query,
            stages,
        } => vec![
            stats::check_monotonicity(system, query, *stages, replicas).map_err(stat_err)?,
        ],
    };
    match &c.pin {
        None => Ok(rows),
        Some(pin) => apply_pin(rows, pin, c.kind.tag()),
    }
}

fn run_suite(suite: &SuiteConfig, cli_replicas: Option<u32>) -> CliResult<Vec<EstimateReport>> {
    let mut rows = Vec::new();
    for c in &suite.checks {
        let reps = effective_replicas(c.replicas, cli_replicas, suite.replicas);
        rows.extend(run_one(c, reps)?);
    }
    Ok(rows)
}

pub fn run(
    config: &Path,
    seed: Option<u64>,
    replicas: Option<u32>,
    workers: Option<usize>,
    out: &Path,
) -> CliResult<u8> {
    let text = std::fs::read_to_string(config)?;
    let mut suite: SuiteConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config: {e}")))?;
    if suite.schema != 1 {
        return Err(CliError::Config(format!(
            "unsupported config schema {}, expected 1",
            suite.schema
        )));
    }
    if suite.checks.is_empty() {
        return Err(CliError::Config("suite lists no checks".into()));
    }
    let seed = seed.or(suite.seed);
    if let Some(s) = seed {
        for c in &mut suite.checks {
            reseed(c.kind.system_mut(), s);
        }
    }

    let digest = config_digest(&json!({
        "suite": suite,
        "fallback_replicas": replicas.or(suite.replicas).unwrap_or(DEFAULT_REPLICAS),
    }));

    let rows = match workers {
        Some(0) => return Err(CliError::Config("workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("workers: {e}")))?
            .install(|| run_suite(&suite, replicas))?,
        None => run_suite(&suite, replicas)?,
    };

    let mut csv = format!("schema,{}\n", EstimateReport::CSV_HEADER);
    for r in &rows {
        csv.push_str("1,");
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let mut writer = Writer::create(out)?;
    writer.put("report.csv", csv.as_bytes())?;
    writer.finish(&digest, seed)?;

    let pass = rows.iter().filter(|r| r.verdict == Verdict::Pass).count();
    let fail = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let info = rows.len() - pass - fail;
    println!("verify: {pass} pass, {fail} fail, {info} informational");
    Ok(if fail > 0 { 1 } else { 0 })
}
