//! CSV and JSON output formats.
//!
//! Numbers are written with 9 significant digits (`%.9g` style) so every
//! file is byte-reproducible. The sweep analysis always runs on a parsed
//! history table, which makes `report` on an exported `history.csv`
//! reproduce the sweep's own summary and heatmaps exactly.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::AppConfig;
use crate::evolution::TraceStep;
use crate::experiments::{aggregate_replicates, heatmap_matrix, summarize, FitnessTensor, Matrix, SeriesChoice};
use crate::{Error, Result};

pub const HISTORY_HEADER: &str = "fov_deg,replicate,generation,best_fitness,mean_fitness";
pub const SUMMARY_HEADER: &str =
    "fov_deg,final_best_mean,final_avg_mean,stabilization_gen_best,stabilization_gen_avg";
pub const TRAJECTORY_HEADER: &str = "step,x,y,heading,v_left,v_right,phi,collision";

/// Formats with 9 significant digits, trimming trailing zeros.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn history_csv(tensor: &FitnessTensor) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for (f, fov) in tensor.fov_values.iter().enumerate() {
        for r in 0..tensor.replicates {
            for g in 0..tensor.generations {
                let (best, mean) = tensor.get(f, r, g);
                let _ = writeln!(
                    out,
                    "{},{r},{g},{},{}",
                    format_number(*fov),
                    format_number(best),
                    format_number(mean)
                );
            }
        }
    }
    out
}

/// Parses a history table; rows may come in any order but every
/// `(fov, replicate, generation)` cell must appear exactly once.
pub fn parse_history_csv(text: &str) -> Result<FitnessTensor> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| Error::Csv { row: 1, message: e.to_string() })?,
        None => return Err(Error::Csv { row: 1, message: "empty file".into() }),
    };
    if header.iter().collect::<Vec<_>>().join(",") != HISTORY_HEADER {
        return Err(Error::Csv {
            row: 1,
            message: format!("expected header `{HISTORY_HEADER}`"),
        });
    }

    struct Cell {
        fov: f64,
        replicate: usize,
        generation: usize,
        best: f64,
        mean: f64,
    }
    let mut cells = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let bad = |message: String| Error::Csv { row, message };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", rec.len())));
        }
        let number = |k: usize| -> Result<f64> {
            rec[k]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("field {k} `{}` is not a number", &rec[k])))
        };
        let index = |k: usize| -> Result<usize> {
            rec[k]
                .trim()
                .parse::<usize>()
                .map_err(|_| bad(format!("field {k} `{}` is not a non-negative integer", &rec[k])))
        };
        let cell = Cell {
            fov: number(0)?,
            replicate: index(1)?,
            generation: index(2)?,
            best: number(3)?,
            mean: number(4)?,
        };
        if !(0.0..=180.0).contains(&cell.fov) {
            return Err(bad(format!("fov_deg {} outside [0, 180]", cell.fov)));
        }
        if !(0.0..=1.0).contains(&cell.best) || !(0.0..=1.0).contains(&cell.mean) {
            return Err(bad("fitness outside [0, 1]".into()));
        }
        cells.push((row, cell));
    }
    if cells.is_empty() {
        return Err(Error::Csv { row: 2, message: "no data rows".into() });
    }

    let mut fov_values: Vec<f64> = cells.iter().map(|(_, c)| c.fov).collect();
    fov_values.sort_by(f64::total_cmp);
    fov_values.dedup();
    let replicates = cells.iter().map(|(_, c)| c.replicate).max().unwrap_or(0) + 1;
    let generations = cells.iter().map(|(_, c)| c.generation).max().unwrap_or(0) + 1;

    let mut tensor = FitnessTensor::new(fov_values, replicates, generations);
    let mut seen = HashSet::new();
    for (row, c) in &cells {
        let f = tensor
            .fov_values
            .binary_search_by(|v| v.total_cmp(&c.fov))
            .expect("fov collected above");
        let at = tensor.index(f, c.replicate, c.generation);
        if !seen.insert(at) {
            return Err(Error::Csv {
                row: *row,
                message: format!(
                    "duplicate cell fov={} replicate={} generation={}",
                    c.fov, c.replicate, c.generation
                ),
            });
        }
        tensor.best[at] = c.best;
        tensor.mean[at] = c.mean;
    }
    if seen.len() != tensor.best.len() {
        for (f, fov) in tensor.fov_values.iter().enumerate() {
            for r in 0..replicates {
                for g in 0..generations {
                    if !seen.contains(&tensor.index(f, r, g)) {
                        return Err(Error::Incomplete(format!(
                            "missing cell fov={fov} replicate={r} generation={g}"
                        )));
                    }
                }
            }
        }
    }
    Ok(tensor)
}

pub fn summary_csv(tensor: &FitnessTensor) -> String {
    let rows = summarize(&aggregate_replicates(tensor));
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_number(row.fov_deg),
            format_number(row.final_best_mean),
            format_number(row.final_avg_mean),
            row.stabilization_gen_best,
            row.stabilization_gen_avg
        );
    }
    out
}

/// Header row of generation indices; first column is the FOV.
pub fn heatmap_csv(matrix: &Matrix, fov_values: &[f64]) -> String {
    let mut out = String::from("fov_deg");
    for g in 0..matrix.cols {
        let _ = write!(out, ",{g}");
    }
    out.push('\n');
    for (r, fov) in fov_values.iter().enumerate() {
        out.push_str(&format_number(*fov));
        for v in matrix.row(r) {
            out.push(',');
            out.push_str(&format_number(*v));
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(trace: &[TraceStep]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for s in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.step,
            format_number(s.pose.x),
            format_number(s.pose.y),
            format_number(s.pose.heading),
            format_number(s.v_left),
            format_number(s.v_right),
            format_number(s.phi),
            u8::from(s.collided)
        );
    }
    out
}

/// The three analysis files derived from a history table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisFiles {
    pub summary: String,
    pub heatmap_best: String,
    pub heatmap_avg: String,
}

impl AnalysisFiles {
    pub fn from_tensor(tensor: &FitnessTensor) -> Self {
        let aggregate = aggregate_replicates(tensor);
        Self {
            summary: summary_csv(tensor),
            heatmap_best: heatmap_csv(&heatmap_matrix(&aggregate, SeriesChoice::Best), &aggregate.fov_values),
            heatmap_avg: heatmap_csv(&heatmap_matrix(&aggregate, SeriesChoice::Average), &aggregate.fov_values),
        }
    }

    /// Parses `history` and analyses the parsed values.
    pub fn from_history_csv(history: &str) -> Result<Self> {
        Ok(Self::from_tensor(&parse_history_csv(history)?))
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("summary.csv"), &self.summary)?;
        std::fs::write(dir.join("heatmap_best.csv"), &self.heatmap_best)?;
        std::fs::write(dir.join("heatmap_avg.csv"), &self.heatmap_avg)?;
        Ok(())
    }
}

/// Provenance written next to every set of outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub base_seed: u64,
    pub jobs: usize,
    pub config: AppConfig,
    /// Seconds since the Unix epoch; the only non-reproducible field.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, base_seed: u64, jobs: usize, config: &AppConfig) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            artifact_version: crate::VERSION.to_string(),
            command: command.to_string(),
            base_seed,
            jobs,
            config: config.clone(),
            timestamp,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tensor_2x2x3() -> FitnessTensor {
        let mut t = FitnessTensor::new(vec![5.0, 45.0], 2, 3);
        for i in 0..t.best.len() {
            t.best[i] = 0.05 * i as f64 + 0.1;
            t.mean[i] = 0.03 * i as f64;
        }
        t
    }

    #[test]
    fn number_format_examples() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(45.0), "45");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(2.0 / 3.0), "0.666666667");
        assert_eq!(format_number(123.456789012), "123.456789");
        assert_eq!(format_number(-0.0790569415), "-0.0790569415");
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(9.9999999999), "10");
        assert_eq!(format_number(1234567891234.0), "1.23456789e12");
    }

    #[test]
    fn history_round_trip_preserves_cells() {
        let t = tensor_2x2x3();
        let text = history_csv(&t);
        assert_eq!(text.lines().next().unwrap(), HISTORY_HEADER);
        assert_eq!(text.lines().count(), 13);
        let back = parse_history_csv(&text).unwrap();
        assert_eq!(back.fov_values, t.fov_values);
        assert_eq!((back.replicates, back.generations), (2, 3));
        for (a, b) in back.best.iter().zip(&t.best) {
            assert!((a - b).abs() < 1e-9);
        }
        // Row order does not matter.
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        assert_eq!(parse_history_csv(&lines.join("\n")).unwrap(), back);
    }

    #[test]
    fn malformed_history_reports_row() {
        let good = history_csv(&tensor_2x2x3());
        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        lines[4] = "45,0,x,0.5,0.5".into();
        assert!(matches!(parse_history_csv(&lines.join("\n")), Err(Error::Csv { row: 5, .. })));

        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        lines[2] = "5,0,1,0.5".into();
        assert!(matches!(parse_history_csv(&lines.join("\n")), Err(Error::Csv { row: 3, .. })));

        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        lines.remove(7);
        assert!(matches!(parse_history_csv(&lines.join("\n")), Err(Error::Incomplete(_))));

        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        let dup = lines[3].clone();
        lines[4] = dup;
        assert!(matches!(parse_history_csv(&lines.join("\n")), Err(Error::Csv { row: 5, .. })));

        assert!(matches!(parse_history_csv(&format!("{HISTORY_HEADER}\n")), Err(Error::Csv { .. })));
        assert!(matches!(parse_history_csv(""), Err(Error::Csv { row: 1, .. })));
        assert!(matches!(parse_history_csv("a,b,c\n1,2,3\n"), Err(Error::Csv { row: 1, .. })));
        assert!(parse_history_csv(&good.replace(",0.1,", ",1.5,")).is_err());
    }

    #[test]
    fn analysis_files_shapes() {
        let t = tensor_2x2x3();
        let files = AnalysisFiles::from_tensor(&t);
        let summary: Vec<&str> = files.summary.lines().collect();
        assert_eq!(summary[0], SUMMARY_HEADER);
        assert_eq!(summary.len(), 3);
        let heat: Vec<&str> = files.heatmap_best.lines().collect();
        assert_eq!(heat[0], "fov_deg,0,1,2");
        assert_eq!(heat.len(), 3);
        assert!(heat[1].starts_with("5,") && heat[2].starts_with("45,"));
        assert_eq!(heat[1].split(',').count(), 4);
    }

    #[test]
    fn heatmap_cells_read_back_from_history() {
        // Recompute each cell from the raw history rows.
        let t = tensor_2x2x3();
        let history = history_csv(&t);
        let files = AnalysisFiles::from_history_csv(&history).unwrap();
        for (r, line) in files.heatmap_avg.lines().skip(1).enumerate() {
            let fields: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            for g in 0..3 {
                let vals: Vec<f64> = history
                    .lines()
                    .skip(1)
                    .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
                    .filter(|row| row[0] == fields[0] && row[2] == g as f64)
                    .map(|row| row[4])
                    .collect();
                assert_eq!(vals.len(), 2, "row {r}");
                let mean = vals.iter().sum::<f64>() / 2.0;
                assert!((fields[g + 1] - mean).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn trajectory_columns() {
        use crate::arena::Pose;
        let trace = vec![TraceStep {
            step: 0,
            pose: Pose::new(0.5, 0.25, 1.0),
            v_left: 0.08,
            v_right: -0.02,
            phi: 0.125,
            collided: false,
        }];
        assert_eq!(trajectory_csv(&trace), format!("{TRAJECTORY_HEADER}\n0,0.5,0.25,1,0.08,-0.02,0.125,0\n"));
    }

    proptest! {
        #[test]
        fn formatting_is_stable_under_reparse(x in -1e6f64..1e6) {
            let s = format_number(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(format_number(back), s.clone());
            prop_assert!((back - x).abs() <= 1e-8 * x.abs().max(1e-300) + 1e-300);
            let digits = s.trim_start_matches('-').split('e').next().unwrap()
                .chars().filter(|c| c.is_ascii_digit()).collect::<String>();
            prop_assert!(digits.trim_start_matches('0').len() <= 9);
        }
    }
}
