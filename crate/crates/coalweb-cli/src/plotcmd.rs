//! `plot`: render a `report.csv` or `counts.csv` into `plot.svg`.
//!
//! Report rows are grouped into curves by their name: a trailing number (with
//! an optional letter prefix, as in `eta_tail_k2` or `b1_eps_0.8`) becomes the
//! x coordinate and the rest of the name the curve; names without one become
//! single-point curves. Curves over `_eps` parameters get a log x axis.

use crate::artifacts::{sha256_hex, Writer};
use crate::countcmd::COUNT_CSV_HEADER;
use crate::svg::{self, Series};
use crate::{CliError, CliResult};
use coalweb::stats::EstimateReport;
use std::path::Path;

fn split_trailing_number(name: &str) -> Option<(String, f64)> {
    let idx = name.rfind('_')?;
    let tail = &name[idx + 1..];
    let split = tail
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(tail.len());
    let (word, num) = tail.split_at(split);
    if num.is_empty() {
        return None;
    }
    let x: f64 = num.parse().ok()?;
    let group = if word.is_empty() {
        name[..idx].to_string()
    } else {
        format!("{}_{}", &name[..idx], word)
    };
    Some((group, x))
}

fn bad_row(i: usize, why: &str) -> CliError {
    CliError::Config(format!("csv row {i}: {why}"))
}

fn num(field: &str, i: usize, what: &str) -> CliResult<f64> {
    field
        .parse()
        .map_err(|_| bad_row(i, &format!("{what} `{field}` is not a number")))
}

/// Ordered group accumulator: curves appear in first-appearance order.
struct Groups {
    order: Vec<String>,
    points: Vec<Vec<(f64, f64, f64)>>,
}

impl Groups {
    fn new() -> Self {
        Groups {
            order: Vec::new(),
            points: Vec::new(),
        }
    }

    fn push(&mut self, group: String, x: Option<f64>, y: f64, se: f64) {
        let gi = match self.order.iter().position(|g| *g == group) {
            Some(gi) => gi,
            None => {
                self.order.push(group);
                self.points.push(Vec::new());
                self.order.len() - 1
            }
        };
        let x = x.unwrap_or(self.points[gi].len() as f64);
        self.points[gi].push((x, y, se));
    }

    fn into_series(self) -> Vec<Series> {
        self.order
            .into_iter()
            .zip(self.points)
            .map(|(name, mut pts)| {
                pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let log_x = name.contains("_eps") && pts.iter().all(|p| p.0 > 0.0);
                Series {
                    name,
                    log_x,
                    points: pts,
                }
            })
            .collect()
    }
}

fn verify_series(rows: &[&str]) -> CliResult<Vec<Series>> {
    let mut groups = Groups::new();
    for (i, row) in rows.iter().enumerate() {
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 10 {
            return Err(bad_row(i, &format!("expected 10 fields, got {}", f.len())));
        }
        if f[0] != "1" {
            return Err(bad_row(i, &format!("unsupported row schema `{}`", f[0])));
        }
        let est = num(f[2], i, "estimate")?;
        let se = num(f[3], i, "std_error")?;
        match split_trailing_number(f[1]) {
            Some((group, x)) => groups.push(group, Some(x), est, se),
            None => groups.push(f[1].to_string(), None, est, se),
        }
    }
    Ok(groups.into_series())
}

fn count_series(rows: &[&str]) -> CliResult<Vec<Series>> {
    let mut groups = Groups::new();
    for (i, row) in rows.iter().enumerate() {
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 14 {
            return Err(bad_row(i, &format!("expected 14 fields, got {}", f.len())));
        }
        if f[0] != "1" {
            return Err(bad_row(i, &format!("unsupported row schema `{}`", f[0])));
        }
        let qi = num(f[1], i, "query index")?;
        groups.push("eta".into(), Some(qi), num(f[7], i, "eta")?, 0.0);
        groups.push("eta_hat".into(), Some(qi), num(f[8], i, "eta_hat")?, 0.0);
    }
    Ok(groups.into_series())
}

pub fn parse_series(text: &str) -> CliResult<Vec<Series>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty csv".into()))?;
    let rows: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
    if rows.is_empty() {
        return Err(CliError::Config("csv has a header but no rows".into()));
    }
    let report_header = format!("schema,{}", EstimateReport::CSV_HEADER);
    if header == report_header {
        verify_series(&rows)
    } else if header == COUNT_CSV_HEADER {
        count_series(&rows)
    } else {
        Err(CliError::Config(format!(
            "unrecognized csv header `{header}`"
        )))
    }
}

pub fn run(input: &Path, out: &Path) -> CliResult<u8> {
    let bytes = std::fs::read(input)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config("input csv is not utf-8".into()))?;
    let series = parse_series(&text)?;
    let mut writer = Writer::create(out)?;
    writer.put("plot.svg", svg::chart_svg(&series).as_bytes())?;
    writer.finish(&sha256_hex(&bytes), None)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_numbers_split_into_group_and_coordinate() {
        assert_eq!(
            split_trailing_number("b1_eps_0.8"),
            Some(("b1_eps".into(), 0.8))
        );
        assert_eq!(
            split_trailing_number("eta_tail_k2"),
            Some(("eta_tail_k".into(), 2.0))
        );
        assert_eq!(
            split_trailing_number("donsker_ks_t1.5"),
            Some(("donsker_ks_t".into(), 1.5))
        );
        assert_eq!(split_trailing_number("b1_slope"), None);
        assert_eq!(split_trailing_number("eta_mean"), None);
        assert_eq!(split_trailing_number("monotonicity"), None);
    }

    #[test]
    fn report_rows_group_into_curves_with_log_eps_axes() {
        let csv = "schema,name,estimate,std_error,target,tolerance,verdict,replicas,seed,config_digest\n\
                   1,b1_eps_0.4,0.22,0.01,,0,informational,100,7,d\n\
                   1,b1_eps_0.1,0.06,0.01,,0,informational,100,7,d\n\
                   1,b1_slope,0.55,0.02,0.5642,0.11,pass,100,7,d\n";
        let series = parse_series(csv).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].name, "b1_eps");
        assert!(series[0].log_x);
        assert_eq!(series[0].points[0].0, 0.1); // sorted by x
        assert_eq!(series[1].name, "b1_slope");
        assert!(!series[1].log_x);
        assert_eq!(series[1].points, vec![(0.0, 0.55, 0.02)]);
    }

    #[test]
    fn count_rows_make_eta_and_eta_hat_curves() {
        let csv = format!(
            "{COUNT_CSV_HEADER}\n1,0,1,1,-0.5,0.5,0,1,1,0,0,1,1,0\n1,1,1,1,-0.5,1.5,0,2,2,0,1,2,1,1\n"
        );
        let series = parse_series(&csv).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].name, "eta");
        assert_eq!(series[0].points, vec![(0.0, 1.0, 0.0), (1.0, 2.0, 0.0)]);
        assert_eq!(series[1].name, "eta_hat");
    }

    #[test]
    fn unknown_or_empty_inputs_are_config_errors() {
        assert!(matches!(
            parse_series("nope,nope\n1,2\n"),
            Err(CliError::Config(_))
        ));
        let header_only = format!("schema,{}\n", EstimateReport::CSV_HEADER);
        assert!(matches!(
            parse_series(&header_only),
            Err(CliError::Config(_))
        ));
    }
}
