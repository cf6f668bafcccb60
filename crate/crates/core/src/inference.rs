//! Per-article predictions, per-(source, year) prevalence and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::OriginLabel;
use crate::{Error, Result};

const PROB_TOLERANCE: f64 = 1e-6;

/// How `mean_confidence` is defined; embedded in every report.
pub const CONFIDENCE_DEFINITION: &str =
    "mean over articles of the maximum softmax class probability, times 100";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub article_id: String,
    pub predicted: OriginLabel,
    /// Indexed by [`OriginLabel::index`].
    pub probabilities: [f64; 2],
    pub confidence: f64,
    pub source: String,
    pub year: i32,
}

impl Prediction {
    /// Argmax with an exact tie resolved to [`OriginLabel::HumanWritten`].
    pub fn from_probabilities(
        article_id: impl Into<String>,
        source: impl Into<String>,
        year: i32,
        probabilities: [f64; 2],
    ) -> Result<Self> {
        let [h, a] = probabilities;
        let valid = probabilities.iter().all(|p| (0.0..=1.0).contains(p)) && (h + a - 1.0).abs() <= PROB_TOLERANCE;
        if !valid {
            return Err(Error::InvalidInput(format!(
                "probabilities {probabilities:?} do not form a distribution"
            )));
        }
        let predicted = if a > h {
            OriginLabel::AiRewritten
        } else {
            OriginLabel::HumanWritten
        };
        Ok(Prediction {
            article_id: article_id.into(),
            predicted,
            probabilities,
            confidence: h.max(a),
            source: source.into(),
            year,
        })
    }
}

/// Percentages are stored at full precision; display rounds to one decimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub source: String,
    pub year: i32,
    pub n: u64,
    pub pct_human: f64,
    pub pct_ai: f64,
    pub mean_confidence: f64,
}

/// Groups by (source, year), sorted by that key.
pub fn aggregate_prevalence(predictions: &[Prediction]) -> Vec<PrevalenceRow> {
    #[derive(Default)]
    struct Acc {
        n: u64,
        ai: u64,
        conf: f64,
    }
    let mut groups: BTreeMap<(&str, i32), Acc> = BTreeMap::new();
    for p in predictions {
        let acc = groups.entry((p.source.as_str(), p.year)).or_default();
        acc.n += 1;
        acc.ai += u64::from(p.predicted == OriginLabel::AiRewritten);
        acc.conf += p.confidence;
    }
    groups
        .into_iter()
        .map(|((source, year), acc)| {
            let n = acc.n as f64;
            PrevalenceRow {
                source: source.to_string(),
                year,
                n: acc.n,
                pct_human: 100.0 * (acc.n - acc.ai) as f64 / n,
                pct_ai: 100.0 * acc.ai as f64 / n,
                mean_confidence: 100.0 * acc.conf / n,
            }
        })
        .collect()
}

/// Example-weighted mean of the rows' AI percentages.
pub fn overall_rate(rows: &[PrevalenceRow]) -> Result<f64> {
    let n: u64 = rows.iter().map(|r| r.n).sum();
    if n == 0 {
        return Err(Error::NoData("no prevalence rows".into()));
    }
    if rows.len() == 1 {
        return Ok(rows[0].pct_ai);
    }
    Ok(rows.iter().map(|r| r.pct_ai * r.n as f64).sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceReport {
    pub rows: Vec<PrevalenceRow>,
    pub overall_ai_rate: f64,
    pub generated_at: DateTime<Utc>,
    pub checkpoint_fingerprint: String,
    pub cleaning_fingerprint: String,
    pub confidence_definition: String,
}

impl PrevalenceReport {
    pub fn new(
        predictions: &[Prediction],
        checkpoint_fingerprint: impl Into<String>,
        cleaning_fingerprint: impl Into<String>,
        generated_at: DateTime<Utc>,
    ) -> Result<Self> {
        let rows = aggregate_prevalence(predictions);
        let overall_ai_rate = overall_rate(&rows)?;
        Ok(PrevalenceReport {
            rows,
            overall_ai_rate,
            generated_at,
            checkpoint_fingerprint: checkpoint_fingerprint.into(),
            cleaning_fingerprint: cleaning_fingerprint.into(),
            confidence_definition: CONFIDENCE_DEFINITION.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Json];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidInput(format!("unknown report format {other:?}"))),
        }
    }
}

pub const REPORT_COLUMNS: [&str; 5] = ["Source", "Year", "Human %", "AI %", "Mean Conf. %"];

fn display_cells(row: &PrevalenceRow) -> [String; 5] {
    [
        row.source.clone(),
        row.year.to_string(),
        format!("{:.1}", row.pct_human),
        format!("{:.1}", row.pct_ai),
        format!("{:.1}", row.mean_confidence),
    ]
}

pub fn render_to_string(report: &PrevalenceReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)?),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
            w.write_record(REPORT_COLUMNS).map_err(csv_err)?;
            for row in &report.rows {
                w.write_record(display_cells(row)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", REPORT_COLUMNS.join(" | "));
            let _ = writeln!(out, "|---|---:|---:|---:|---:|");
            for row in &report.rows {
                let _ = writeln!(out, "| {} |", display_cells(row).map(|c| c.replace('|', "\\|")).join(" | "));
            }
            Ok(out)
        }
    }
}

pub fn render_report(report: &PrevalenceReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_to_string(report, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
