//! Result-table parsing and summarizing.
//!
//! The sweep writes one raw CSV row per (grid point, trial, method) and a
//! companion summary of per-point medians. Columns are frozen:
//!
//! ```text
//! results.csv: n_atoms,snr_db,impairment,csi_error,trial,method,seed,
//!              config_hash,ber,sinr_db,se_bps_hz,ee_bits_per_joule
//! summary.csv: n_atoms,snr_db,impairment,csi_error,method,trials,
//!              median_ber,median_sinr_db,median_se_bps_hz,
//!              median_ee_bits_per_joule
//! ```
//!
//! `summarize` recomputes the summary from raw rows; the sweep asserts on
//! every run that the written summary matches a recomputation from its own
//! CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::MethodTag;

pub const RESULTS_HEADER: &str = "n_atoms,snr_db,impairment,csi_error,trial,method,seed,config_hash,ber,sinr_db,se_bps_hz,ee_bits_per_joule";
pub const SUMMARY_HEADER: &str = "n_atoms,snr_db,impairment,csi_error,method,trials,median_ber,median_sinr_db,median_se_bps_hz,median_ee_bits_per_joule";

/// One raw result row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n_atoms: usize,
    pub snr_db: f64,
    pub impairment: f64,
    pub csi_error: f64,
    pub trial: usize,
    pub method: MethodTag,
    pub seed: u64,
    pub config_hash: u64,
    pub ber: f64,
    pub sinr_db: f64,
    pub se_bps_hz: f64,
    pub ee_bits_per_joule: f64,
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:016x},{},{},{},{}",
            self.n_atoms,
            self.snr_db,
            self.impairment,
            self.csi_error,
            self.trial,
            self.method.name(),
            self.seed,
            self.config_hash,
            self.ber,
            self.sinr_db,
            self.se_bps_hz,
            self.ee_bits_per_joule
        )
    }
}

/// One summary row: medians over the trials of a grid point and method.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n_atoms: usize,
    pub snr_db: f64,
    pub impairment: f64,
    pub csi_error: f64,
    pub method: MethodTag,
    pub trials: usize,
    pub median_ber: f64,
    pub median_sinr_db: f64,
    pub median_se_bps_hz: f64,
    pub median_ee_bits_per_joule: f64,
}

impl SummaryRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n_atoms,
            self.snr_db,
            self.impairment,
            self.csi_error,
            self.method.name(),
            self.trials,
            self.median_ber,
            self.median_sinr_db,
            self.median_se_bps_hz,
            self.median_ee_bits_per_joule
        )
    }
}

fn row_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config { line, message: format!("results csv: {msg}") }
}

/// Strict parser for the raw results CSV.
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| row_err(1, "empty file"))?;
    if header != RESULTS_HEADER {
        return Err(row_err(1, format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(row_err(line_no, format!("expected 12 fields, got {}", fields.len())));
        }
        let num = |i: usize, what: &str| -> Result<f64> {
            let v: f64 = fields[i]
                .parse()
                .map_err(|_| row_err(line_no, format!("bad {what} `{}`", fields[i])))?;
            if !v.is_finite() {
                return Err(row_err(line_no, format!("non-finite {what}")));
            }
            Ok(v)
        };
        let int = |i: usize, what: &str| -> Result<u64> {
            fields[i].parse().map_err(|_| row_err(line_no, format!("bad {what} `{}`", fields[i])))
        };
        let method = MethodTag::from_name(fields[5])
            .ok_or_else(|| row_err(line_no, format!("unknown method `{}`", fields[5])))?;
        let config_hash = u64::from_str_radix(fields[7], 16)
            .map_err(|_| row_err(line_no, format!("bad config hash `{}`", fields[7])))?;
        rows.push(ResultRow {
            n_atoms: int(0, "atom count")? as usize,
            snr_db: num(1, "snr")?,
            impairment: num(2, "impairment")?,
            csi_error: num(3, "csi error")?,
            trial: int(4, "trial")? as usize,
            method,
            seed: int(6, "seed")?,
            config_hash,
            ber: num(8, "ber")?,
            sinr_db: num(9, "sinr")?,
            se_bps_hz: num(10, "se")?,
            ee_bits_per_joule: num(11, "ee")?,
        });
    }
    Ok(rows)
}

pub(crate) fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Groups rows by (grid point, method) and takes per-metric medians. Output
/// order is stable: by atoms, snr, impairment, csi error, then method name.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    #[derive(PartialEq, PartialOrd)]
    struct Key(usize, f64, f64, f64, &'static str);
    // Total order is fine here: the fields come from parsed finite floats.
    #[allow(clippy::derive_ord_xor_partial_ord)]
    impl Eq for Key {}
    #[allow(clippy::non_canonical_partial_ord_impl)]
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.partial_cmp(other).unwrap()
        }
    }

    let mut groups: BTreeMap<Key, Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(Key(row.n_atoms, row.snr_db, row.impairment, row.csi_error, row.method.name()))
            .or_default()
            .push(row);
    }
    groups
        .into_iter()
        .map(|(Key(n_atoms, snr_db, impairment, csi_error, method), members)| {
            let pick = |f: fn(&ResultRow) -> f64| {
                let mut v: Vec<f64> = members.iter().map(|r| f(r)).collect();
                median(&mut v)
            };
            SummaryRow {
                n_atoms,
                snr_db,
                impairment,
                csi_error,
                method: MethodTag::from_name(method).expect("tag round-trips"),
                trials: members.len(),
                median_ber: pick(|r| r.ber),
                median_sinr_db: pick(|r| r.sinr_db),
                median_se_bps_hz: pick(|r| r.se_bps_hz),
                median_ee_bits_per_joule: pick(|r| r.ee_bits_per_joule),
            }
        })
        .collect()
}

pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Whitespace-separated summary table with a commented header, one block
/// per method, ready for `gnuplot` `using` clauses.
pub fn gnuplot_layout(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# echosurf sweep summary");
    let _ = writeln!(
        out,
        "# n_atoms snr_db impairment csi_error trials median_ber median_sinr_db median_se_bps_hz median_ee_bits_per_joule"
    );
    let mut methods: Vec<&'static str> = rows.iter().map(|r| r.method.name()).collect();
    methods.dedup();
    methods.sort_unstable();
    methods.dedup();
    for method in methods {
        let _ = writeln!(out, "\n# method = {method}");
        for r in rows.iter().filter(|r| r.method.name() == method) {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {} {}",
                r.n_atoms,
                r.snr_db,
                r.impairment,
                r.csi_error,
                r.trials,
                r.median_ber,
                r.median_sinr_db,
                r.median_se_bps_hz,
                r.median_ee_bits_per_joule
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, trial: usize, method: MethodTag, ee: f64) -> ResultRow {
        ResultRow {
            n_atoms: n,
            snr_db: 20.0,
            impairment: 0.3,
            csi_error: 1.0,
            trial,
            method,
            seed: 7,
            config_hash: 0xabcd,
            ber: 0.01 * trial as f64,
            sinr_db: 10.0,
            se_bps_hz: 3.0,
            ee_bits_per_joule: ee,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(16, 0, MethodTag::Rc, 1e6), row(16, 1, MethodTag::ModelBased, 2e6)];
        let text = results_to_csv(&rows);
        let back = parse_results_csv(&text).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(parse_results_csv("").is_err());
        assert!(parse_results_csv("nope\n").is_err());
        let text = format!("{RESULTS_HEADER}\n1,2,3\n");
        assert!(parse_results_csv(&text).is_err());
        let text = format!("{RESULTS_HEADER}\n16,20,0.3,1,0,magic,7,00ff,0.1,10,3,1e6\n");
        assert!(parse_results_csv(&text).is_err());
        let text = format!("{RESULTS_HEADER}\n16,20,0.3,1,0,rc,7,00ff,NaN,10,3,1e6\n");
        assert!(parse_results_csv(&text).is_err());
    }

    #[test]
    fn medians_odd_and_even() {
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn summarize_groups_and_orders() {
        let rows = vec![
            row(64, 0, MethodTag::Rc, 4.0),
            row(16, 0, MethodTag::Rc, 1.0),
            row(16, 1, MethodTag::Rc, 3.0),
            row(16, 0, MethodTag::ModelBased, 2.0),
        ];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 3);
        assert_eq!(summary[0].n_atoms, 16);
        assert_eq!(summary[0].method, MethodTag::ModelBased);
        assert_eq!(summary[1].n_atoms, 16);
        assert_eq!(summary[1].method, MethodTag::Rc);
        assert_eq!(summary[1].trials, 2);
        assert_eq!(summary[1].median_ee_bits_per_joule, 2.0);
        assert_eq!(summary[2].n_atoms, 64);
    }

    #[test]
    fn gnuplot_layout_has_method_blocks() {
        let rows = vec![row(16, 0, MethodTag::Rc, 1.0), row(16, 0, MethodTag::ModelBased, 2.0)];
        let summary = summarize(&rows);
        let text = gnuplot_layout(&summary);
        assert!(text.contains("# method = rc"));
        assert!(text.contains("# method = model_based"));
    }
}
