//! CSV writers and readers for everything the pipeline emits.
//!
//! Floats are written in Rust's shortest round-trip form, so identical runs
//! produce identical bytes.

use std::io::{Read, Write};
use std::path::PathBuf;

use crate::catalog::{format_instant, ReleaseMetadata};
use crate::error::{Error, Result};
use crate::harness::{EvalReport, GroundTruth, SweepPoint, YearRecallTable};
use crate::interactions::Interaction;
use crate::metrics::RankedList;

fn csv_err(e: csv::Error) -> Error {
    Error::csv(PathBuf::new(), e)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row of a score file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub item_id: String,
    pub score: f64,
    pub rank: usize,
    pub raw_score: Option<f64>,
}

/// Writes `item_id,score,rank[,raw_score]` in ranking order, rank 1 first.
pub fn write_scores<W: Write>(w: W, ids: &[String], ranked: &RankedList, raw: Option<&[f64]>) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["item_id", "score", "rank"];
    if raw.is_some() {
        header.push("raw_score");
    }
    out.write_record(&header).map_err(csv_err)?;
    for (k, &a) in ranked.order().iter().enumerate() {
        let a = a as usize;
        let mut row = vec![ids[a].clone(), ranked.scores()[a].to_string(), (k + 1).to_string()];
        if let Some(raw) = raw {
            row.push(raw[a].to_string());
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io(PathBuf::new(), e))
}

/// Reads a score file written by [`write_scores`]. Columns are located by
/// header name.
pub fn read_scores<R: Read>(reader: R) -> Result<Vec<ScoreRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let (Some(id_col), Some(score_col)) = (col("item_id"), col("score")) else {
        return Err(Error::InvalidInput("score file needs item_id and score columns".into()));
    };
    let rank_col = col("rank");
    let raw_col = col("raw_score");
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let num = |c: usize, what: &str| -> Result<f64> {
            let s = rec.get(c).unwrap_or("").trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("line {line}: bad {what} '{s}'")))
        };
        let rank = match rank_col {
            Some(c) => {
                let s = rec.get(c).unwrap_or("").trim();
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("line {line}: bad rank '{s}'")))?
            }
            None => k + 1,
        };
        rows.push(ScoreRow {
            item_id: rec.get(id_col).unwrap_or("").trim().to_string(),
            score: num(score_col, "score")?,
            rank,
            raw_score: raw_col.map(|c| num(c, "raw_score")).transpose()?,
        });
    }
    Ok(rows)
}

pub fn write_sweep<W: Write>(w: W, points: &[SweepPoint]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["delta_p", "raw_imbalance", "rebalanced_imbalance", "relative_imbalance"])
        .map_err(csv_err)?;
    for p in points {
        out.write_record([
            p.delta_p.to_string(),
            p.raw_imbalance.to_string(),
            p.rebalanced_imbalance.to_string(),
            opt(p.relative_imbalance),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io(PathBuf::new(), e))
}

pub fn write_year_recall<W: Write>(w: W, table: &YearRecallTable) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["year", "recall_raw", "recall_rebalanced"])
        .map_err(csv_err)?;
    for r in &table.rows {
        out.write_record([r.year.to_string(), r.recall_raw.to_string(), opt(r.recall_rebalanced)])
            .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io(PathBuf::new(), e))
}

/// Flat twin of a set of reports: one row per (algorithm, rebalance, metric).
/// Metrics that could not be computed have an empty value and a note.
pub fn write_report_rows<W: Write>(w: W, reports: &[EvalReport]) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "dataset",
        "truth",
        "algorithm",
        "method",
        "rebalance",
        "top_fraction",
        "groups",
        "metric",
        "value",
        "note",
    ])
    .map_err(csv_err)?;
    for r in reports {
        for (name, v) in r.metrics.entries() {
            let note = match v {
                crate::harness::MetricValue::NotApplicable(why) => why.clone(),
                crate::harness::MetricValue::Value(_) => String::new(),
            };
            out.write_record([
                r.dataset.clone(),
                r.truth_label.clone(),
                r.algorithm.to_string(),
                r.method_name(),
                r.rebalance_label(),
                r.top_fraction.to_string(),
                r.groups.to_string(),
                name.to_string(),
                opt(v.value()),
                note,
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::io(PathBuf::new(), e))
}

/// Writes `user,item,rating,timestamp` with a header.
pub fn write_interactions<W: Write>(w: W, interactions: &[Interaction]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["user", "item", "rating", "timestamp"])
        .map_err(csv_err)?;
    for i in interactions {
        out.write_record([
            i.user.clone(),
            i.item.clone(),
            i.rating.to_string(),
            i.timestamp.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io(PathBuf::new(), e))
}

/// Writes `item,release_date` sorted by item id.
pub fn write_metadata<W: Write>(w: W, metadata: &ReleaseMetadata) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["item", "release_date"]).map_err(csv_err)?;
    let mut rows: Vec<_> = metadata.iter().collect();
    rows.sort();
    for (id, &t) in rows {
        out.write_record([id.clone(), format_instant(t)]).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io(PathBuf::new(), e))
}

/// Writes `item_id[,award_year]`; the year column appears only if any item
/// has one.
pub fn write_truth<W: Write>(w: W, truth: &GroundTruth) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_writer(w);
    let years = truth.has_award_years();
    if years {
        out.write_record(["item_id", "award_year"]).map_err(csv_err)?;
    } else {
        out.write_record(["item_id"]).map_err(csv_err)?;
    }
    for t in &truth.items {
        if years {
            let y = t.award_year.map(|y| y.to_string()).unwrap_or_default();
            out.write_record([t.id.clone(), y]).map_err(csv_err)?;
        } else {
            out.write_record([t.id.clone()]).map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::io(PathBuf::new(), e))
}
