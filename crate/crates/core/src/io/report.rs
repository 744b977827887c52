use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::write_json;
use crate::error::{Error, Result};
use crate::pipeline::{AnalysisReport, DynamicCurve, MarginMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const REPORT_JSON: &str = "report.json";

/// Write a report into `dir`.
///
/// JSON writes `report.json`. CSV writes one file per overall margin and
/// feature (`overall_{margin}_{feature}.csv`), one per dynamic curve under
/// `curves/`, and the consistency tables. Returns the files written.
pub fn write_report(report: &AnalysisReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match format {
        ReportFormat::Json => {
            let path = dir.join(REPORT_JSON);
            write_json(&path, report)?;
            Ok(vec![path])
        }
        ReportFormat::Csv => write_csv_tables(report, dir),
    }
}

pub fn read_report_json(path: &Path) -> Result<AnalysisReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Column order: label, valid_cells, significant_cells, percentage.
pub fn write_margin_csv(path: &Path, map: &MarginMap) -> Result<()> {
    csv_file(
        path,
        &[map.margin.as_str(), "valid_cells", "significant_cells", "percentage"],
        map.labels.iter().zip(&map.counts).map(|(l, c)| {
            vec![
                l.clone(),
                c.valid_cells.to_string(),
                c.significant_cells.to_string(),
                opt(c.percentage),
            ]
        }),
    )
}

/// Column order: time_s (window start), mean_r, adjusted_p, significant.
pub fn write_curve_csv(path: &Path, curve: &DynamicCurve) -> Result<()> {
    csv_file(
        path,
        &["time_s", "mean_r", "adjusted_p", "significant"],
        (0..curve.mean_r.len()).map(|k| {
            vec![
                curve.start_times_s[k].to_string(),
                opt(curve.mean_r[k]),
                opt(curve.adjusted_p[k]),
                curve.significant[k].to_string(),
            ]
        }),
    )
}

/// File-name-safe form of a label.
fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn curve_file_name(curve: &DynamicCurve) -> String {
    format!(
        "{}__{}__{}__w{}_h{}.csv",
        slug(&curve.stimulus),
        slug(&curve.channel),
        slug(&curve.feature),
        curve.window.width_s,
        curve.window.hop_s
    )
}

fn write_csv_tables(report: &AnalysisReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(overall) = &report.overall {
        for summary in &overall.results {
            for map in &summary.margins {
                let path = dir.join(format!(
                    "overall_{}_{}.csv",
                    map.margin.as_str(),
                    slug(&summary.feature)
                ));
                write_margin_csv(&path, map)?;
                written.push(path);
            }
        }
    }
    if let Some(dynamic) = &report.dynamic {
        let curves_dir = dir.join("curves");
        fs::create_dir_all(&curves_dir).map_err(|e| Error::io(&curves_dir, e))?;
        for curve in &dynamic.curves {
            let path = curves_dir.join(curve_file_name(curve));
            write_curve_csv(&path, curve)?;
            written.push(path);
        }
    }
    if let Some(cons) = &report.consistency {
        let path = dir.join("consistency_scores.csv");
        csv_file(
            &path,
            &[
                "stimulus",
                "axis",
                "channel",
                "feature",
                "mean_r",
                "curves",
                "pairs_used",
            ],
            cons.scores.iter().map(|s| {
                vec![
                    s.stimulus.clone(),
                    axis_name(s.axis).to_string(),
                    s.channel.clone().unwrap_or_default(),
                    s.feature.clone().unwrap_or_default(),
                    opt(s.mean_r),
                    s.curves.to_string(),
                    s.pairs_used.to_string(),
                ]
            }),
        )?;
        written.push(path);
        let path = dir.join("categories.csv");
        csv_file(
            &path,
            &["valence", "n", "mean", "sd", "t", "p_value", "significant", "error"],
            cons.categories.iter().map(|c| {
                vec![
                    c.valence.as_str().to_string(),
                    c.scores.len().to_string(),
                    opt(c.mean),
                    opt(c.sd),
                    opt(c.t),
                    opt(c.p_value),
                    c.significant.to_string(),
                    c.error.clone().unwrap_or_default(),
                ]
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}

fn axis_name(axis: crate::pipeline::ConsistencyAxis) -> &'static str {
    match axis {
        crate::pipeline::ConsistencyAxis::AcrossFeatures => "across_features",
        crate::pipeline::ConsistencyAxis::AcrossChannels => "across_channels",
    }
}
