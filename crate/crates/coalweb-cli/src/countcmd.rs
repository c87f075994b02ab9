//! `count`: evaluate the segment-counting functionals over a stored family
//! for a batch of queries, one CSV row per query.

use crate::artifacts::{sha256_hex, FamilyFile, Writer};
use crate::{CliError, CliResult};
use coalweb::counting::{self, CountingQuery};
use coalweb::stats::config_digest;
use serde::Deserialize;
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueriesFile {
    schema: u32,
    queries: Vec<CountingQuery>,
}

pub const COUNT_CSV_HEADER: &str =
    "schema,query,t0,t,a,b,match_tol,eta,eta_hat,l,r,n,n_plus,n_minus";

fn opt_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn counts_csv(fam: &coalweb::PathFamily, queries: &[CountingQuery]) -> String {
    let mut s = format!("{COUNT_CSV_HEADER}\n");
    for (i, q) in queries.iter().enumerate() {
        let eta = counting::eta(fam, q);
        let eta_hat = counting::eta_hat(fam, q);
        let (l, r) = counting::l_r_endpoints(fam, q);
        let n = counting::n_set(fam, q).len();
        let (plus, minus) = counting::n_plus_minus(fam, q);
        let _ = writeln!(
            s,
            "1,{i},{},{},{},{},{},{eta},{eta_hat},{},{},{n},{},{}",
            q.t0,
            q.t,
            q.a,
            q.b,
            q.match_tol,
            opt_cell(l),
            opt_cell(r),
            plus.len(),
            minus.len()
        );
    }
    s
}

pub fn run(family: &Path, queries: &Path, out: &Path) -> CliResult<u8> {
    let fam_bytes = std::fs::read(family)?;
    let fam_file: FamilyFile = serde_json::from_slice(&fam_bytes)
        .map_err(|e| CliError::Config(format!("family: {e}")))?;
    if fam_file.schema != 1 {
        return Err(CliError::Config(format!(
            "unsupported family schema {}, expected 1",
            fam_file.schema
        )));
    }
    let q_bytes = std::fs::read(queries)?;
    let qf: QueriesFile = serde_json::from_slice(&q_bytes)
        .map_err(|e| CliError::Config(format!("queries: {e}")))?;
    if qf.schema != 1 {
        return Err(CliError::Config(format!(
            "unsupported queries schema {}, expected 1",
            qf.schema
        )));
    }
    if qf.queries.is_empty() {
        return Err(CliError::Config("queries file lists no queries".into()));
    }
    for (i, q) in qf.queries.iter().enumerate() {
        q.validate()
            .map_err(|e| CliError::Config(format!("query {i}: {e}")))?;
    }

    let digest = config_digest(&json!({
        "family_sha256": sha256_hex(&fam_bytes),
        "queries_sha256": sha256_hex(&q_bytes),
    }));
    let csv = counts_csv(&fam_file.paths, &qf.queries);
    let mut writer = Writer::create(out)?;
    writer.put("counts.csv", csv.as_bytes())?;
    writer.finish(&digest, None)?;
    Ok(0)
}
