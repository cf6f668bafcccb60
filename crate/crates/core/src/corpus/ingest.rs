use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{Article, OriginLabel};
use crate::fingerprint::sha256_hex;
use crate::{Error, Result};

/// Supported corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestFormat {
    /// One JSON object per line:
    /// `{id?, source, date, title?, body, origin?}`.
    #[default]
    JsonLines,
}

impl FromStr for IngestFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json_lines" | "jsonlines" => Ok(IngestFormat::JsonLines),
            other => Err(Error::Config(format!("unknown ingestion format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// Zero-based index of the record among the non-blank lines.
    pub index: usize,
    /// One-based line number in the file.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records_seen: usize,
    pub accepted: usize,
    pub errors: Vec<RecordError>,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub articles: Vec<Article>,
    pub report: IngestReport,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    source: Option<String>,
    date: Option<String>,
    title: Option<String>,
    body: Option<String>,
    origin: Option<String>,
}

/// Reads a corpus file. Malformed records end up in the report; only an
/// unreadable file is fatal.
pub fn ingest_articles(path: impl AsRef<Path>, format: IngestFormat) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(reader: R, format: IngestFormat) -> Result<Ingested> {
    match format {
        IngestFormat::JsonLines => ingest_json_lines(reader),
    }
}

fn ingest_json_lines<R: Read>(reader: R) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut used_ids = HashSet::new();
    let mut index = 0;

    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.report.records_seen += 1;
        match parse_record(&line, &mut used_ids) {
            Ok(article) => out.articles.push(article),
            Err(message) => out.report.errors.push(RecordError {
                index,
                line: lineno + 1,
                message,
            }),
        }
        index += 1;
    }
    out.report.accepted = out.articles.len();
    Ok(out)
}

fn parse_record(line: &str, used_ids: &mut HashSet<String>) -> std::result::Result<Article, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| format!("malformed json: {e}"))?;

    let source = non_empty(raw.source, "source")?;
    let date = non_empty(raw.date, "date")?;
    let body = non_empty(raw.body, "body")?;
    let published_at = parse_date(&date)?;
    let origin = raw
        .origin
        .map(|o| OriginLabel::from_str(&o).map_err(|e| e.to_string()))
        .transpose()?;

    let id = match raw.id {
        Some(id) if !id.trim().is_empty() => {
            if !used_ids.insert(id.clone()) {
                return Err(format!("duplicate id {id:?}"));
            }
            id
        }
        _ => {
            let base = derived_id(&source, &published_at, &body);
            let mut candidate = base.clone();
            let mut n = 2;
            while !used_ids.insert(candidate.clone()) {
                candidate = format!("{base}-{n}");
                n += 1;
            }
            candidate
        }
    };

    Ok(Article {
        id,
        source,
        published_at,
        title: raw.title.filter(|t| !t.trim().is_empty()),
        body,
        origin,
    })
}

fn non_empty(value: Option<String>, field: &str) -> std::result::Result<String, String> {
    match value {
        Some(v) if !v.trim().is_empty() => Ok(v),
        Some(_) => Err(format!("empty field `{field}`")),
        None => Err(format!("missing field `{field}`")),
    }
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.date_naive());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(dt.date());
    }
    Err(format!("unparseable date {s:?}"))
}

fn derived_id(source: &str, date: &NaiveDate, body: &str) -> String {
    let digest = sha256_hex(format!("{source}\u{0}{date}\u{0}{body}"));
    digest[..16].to_string()
}

/// Writes articles in the JSON-lines corpus format.
pub fn write_articles(path: impl AsRef<Path>, articles: &[Article]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for a in articles {
        serde_json::to_writer(&mut w, a)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
