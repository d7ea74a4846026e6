//! CSV rendering and parsing of result tables.
//!
//! Floats are written in Rust's shortest round-trip form (`{:?}`), so parsing
//! a written table gives back the exact same values.

use std::path::Path;

use invreg_core::audit::FilterAudit;
use invreg_core::montecarlo::{
    EfficiencyRow, EfficiencyTable, ReplicationErrors, RiskRow, RiskTable,
};

use crate::CliError;

pub const RISK_HEADER: [&str; 7] = [
    "sigma", "R_or", "se_or", "R_pred", "se_pred", "R_LEP", "se_lep",
];
pub const PER_REP_HEADER: [&str; 5] = ["sigma", "rep", "err_or", "err_pred", "err_lep"];
pub const EFFICIENCY_HEADER: [&str; 3] = ["sigma", "eff_pred", "eff_lep"];
pub const SCORE_HEADER: [&str; 2] = ["alpha", "score"];
pub const AUDIT_HEADER: [&str; 7] = [
    "family",
    "pairs",
    "monotonicity",
    "c_prime",
    "c_double_prime",
    "range",
    "qualification",
];

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn render<const N: usize>(
    header: [&str; N],
    rows: Vec<[String; N]>,
    what: &str,
) -> Result<String, CliError> {
    if rows.is_empty() {
        return Err(CliError::Numeric(format!(
            "refusing to write an empty {what}"
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

pub fn render_risk_table(rows: &[RiskRow]) -> Result<String, CliError> {
    let rows = rows
        .iter()
        .map(|r| {
            [
                r.sigma, r.r_or, r.se_or, r.r_pred, r.se_pred, r.r_lep, r.se_lep,
            ]
            .map(num)
        })
        .collect();
    render(RISK_HEADER, rows, "risk table")
}

pub fn render_per_rep_errors(table: &RiskTable) -> Result<String, CliError> {
    let per_rep = table
        .per_rep_errors
        .as_ref()
        .ok_or_else(|| CliError::Numeric("risk table has no retained replication errors".into()))?;
    let mut rows = Vec::new();
    for (row, reps) in table.rows.iter().zip(per_rep) {
        for (i, e) in reps.iter().enumerate() {
            rows.push([
                num(row.sigma),
                i.to_string(),
                num(e.err_or),
                num(e.err_pred),
                num(e.err_lep),
            ]);
        }
    }
    render(PER_REP_HEADER, rows, "replication table")
}

pub fn render_efficiency_table(table: &EfficiencyTable) -> Result<String, CliError> {
    let rows = table
        .rows
        .iter()
        .map(|r| [r.sigma, r.eff_pred, r.eff_lep].map(num))
        .collect();
    render(EFFICIENCY_HEADER, rows, "efficiency table")
}

pub fn render_score_curve(points: &[(f64, f64)]) -> Result<String, CliError> {
    let rows = points.iter().map(|&(a, s)| [num(a), num(s)]).collect();
    render(SCORE_HEADER, rows, "score curve")
}

pub fn render_audit(audits: &[FilterAudit]) -> Result<String, CliError> {
    let rows = audits
        .iter()
        .map(|a| {
            [
                a.spec.name(),
                a.pairs.to_string(),
                a.monotonicity.to_string(),
                a.c_prime.to_string(),
                a.c_double_prime.to_string(),
                a.range.to_string(),
                a.qualification.to_string(),
            ]
        })
        .collect();
    render(AUDIT_HEADER, rows, "filter check")
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn read_rows<const N: usize>(path: &Path, header: [&str; N]) -> Result<Vec<[String; N]>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_rows(&text, header).map_err(|e| match e {
        CliError::Io(msg) => CliError::Io(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn parse_rows<const N: usize>(text: &str, header: [&str; N]) -> Result<Vec<[String; N]>, CliError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let found = reader
        .headers()
        .map_err(|e| CliError::Io(e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::Io(format!(
            "unexpected header `{}`, expected `{}`",
            found.as_slice(),
            header.join(",")
        )));
    }
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| CliError::Io(e.to_string()))?;
            Ok(std::array::from_fn(|i| record[i].to_string()))
        })
        .collect()
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.parse()
        .map_err(|_| CliError::Io(format!("not a number: `{s}`")))
}

fn parse_floats<const N: usize>(row: &[String; N]) -> Result<[f64; N], CliError> {
    let mut out = [0.0; N];
    for (o, s) in out.iter_mut().zip(row) {
        *o = parse_f64(s)?;
    }
    Ok(out)
}

pub fn parse_risk_table(text: &str) -> Result<Vec<RiskRow>, CliError> {
    parse_rows(text, RISK_HEADER)?
        .iter()
        .map(|row| {
            let [sigma, r_or, se_or, r_pred, se_pred, r_lep, se_lep] = parse_floats(row)?;
            Ok(RiskRow {
                sigma,
                r_or,
                se_or,
                r_pred,
                se_pred,
                r_lep,
                se_lep,
            })
        })
        .collect()
}

pub fn read_risk_table(path: &Path) -> Result<Vec<RiskRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_risk_table(&text)
}

/// Replication errors grouped by noise level, in file order.
pub type GroupedErrors = (Vec<f64>, Vec<Vec<ReplicationErrors>>);

pub fn parse_per_rep_errors(text: &str) -> Result<GroupedErrors, CliError> {
    group_errors(parse_rows(text, PER_REP_HEADER)?)
}

pub fn read_per_rep_errors(path: &Path) -> Result<GroupedErrors, CliError> {
    group_errors(read_rows(path, PER_REP_HEADER)?)
}

fn group_errors(rows: Vec<[String; 5]>) -> Result<GroupedErrors, CliError> {
    let mut sigmas: Vec<f64> = Vec::new();
    let mut groups: Vec<Vec<ReplicationErrors>> = Vec::new();
    for row in &rows {
        let sigma = parse_f64(&row[0])?;
        let [err_or, err_pred, err_lep] =
            parse_floats(&[row[2].clone(), row[3].clone(), row[4].clone()])?;
        let errors = ReplicationErrors {
            err_or,
            err_pred,
            err_lep,
        };
        match sigmas.last() {
            Some(&last) if last == sigma => groups.last_mut().expect("group exists").push(errors),
            _ => {
                if sigmas.contains(&sigma) {
                    return Err(CliError::Io(format!(
                        "rows for sigma = {sigma} are not contiguous"
                    )));
                }
                sigmas.push(sigma);
                groups.push(vec![errors]);
            }
        }
    }
    if sigmas.is_empty() {
        return Err(CliError::Io("no replication rows".into()));
    }
    Ok((sigmas, groups))
}

pub fn parse_efficiency_table(text: &str) -> Result<Vec<EfficiencyRow>, CliError> {
    parse_rows(text, EFFICIENCY_HEADER)?
        .iter()
        .map(|row| {
            let [sigma, eff_pred, eff_lep] = parse_floats(row)?;
            Ok(EfficiencyRow {
                sigma,
                eff_pred,
                eff_lep,
            })
        })
        .collect()
}

pub fn parse_score_curve(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    parse_rows(text, SCORE_HEADER)?
        .iter()
        .map(|row| {
            let [a, s] = parse_floats(row)?;
            Ok((a, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> RiskTable {
        let errs = |base: f64| {
            (0..3)
                .map(|i| ReplicationErrors {
                    err_or: base * (1.0 + i as f64 / 7.0),
                    err_pred: base * (1.1 + i as f64 / 3.0),
                    err_lep: base * 1e-17 + i as f64,
                })
                .collect::<Vec<_>>()
        };
        RiskTable::from_replications(&[2f64.powi(-15), 0.1], vec![errs(1e-7), errs(0.3)])
    }

    #[test]
    fn risk_header_is_fixed() {
        let text = render_risk_table(&sample_table().rows).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "sigma,R_or,se_or,R_pred,se_pred,R_LEP,se_lep"
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn risk_table_round_trip() {
        let table = sample_table();
        let text = render_risk_table(&table.rows).unwrap();
        assert_eq!(parse_risk_table(&text).unwrap(), table.rows);
        assert_eq!(
            render_risk_table(&parse_risk_table(&text).unwrap()).unwrap(),
            text
        );
    }

    #[test]
    fn per_rep_round_trip_reproduces_aggregates() {
        let table = sample_table();
        let text = render_per_rep_errors(&table).unwrap();
        let (sigmas, groups) = parse_per_rep_errors(&text).unwrap();
        assert_eq!(RiskTable::from_replications(&sigmas, groups), table);
    }

    #[test]
    fn shortest_round_trip_numbers() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(1e-300), "1e-300");
        assert_eq!(parse_f64(&num(2f64.powi(-21))).unwrap(), 2f64.powi(-21));
    }

    #[test]
    fn empty_tables_are_refused() {
        assert!(render_risk_table(&[]).is_err());
        assert!(render_score_curve(&[]).is_err());
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_risk_table("sigma,R_or\n0.1,0.2\n").is_err());
    }

    #[test]
    fn efficiency_and_score_round_trip() {
        let table = EfficiencyTable {
            rows: vec![EfficiencyRow {
                sigma: 0.1,
                eff_pred: 0.93,
                eff_lep: 0.71,
            }],
            risks: sample_table(),
        };
        let text = render_efficiency_table(&table).unwrap();
        assert_eq!(parse_efficiency_table(&text).unwrap(), table.rows);
        let curve = vec![(1e-6, -0.25), (1.2e-6, -0.2500001)];
        assert_eq!(
            parse_score_curve(&render_score_curve(&curve).unwrap()).unwrap(),
            curve
        );
    }
}
