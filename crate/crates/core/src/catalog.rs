//! Item release instants and the time order used for windows and groups.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RatingGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReleaseSource {
    Metadata,
    ProxyFirstRating,
}

/// Item id to release instant (seconds since epoch).
pub type ReleaseMetadata = HashMap<String, i64>;

/// Release instants for every item of one graph, indexed by the graph's dense
/// item ids, plus the total order `(release, item_id)`.
#[derive(Debug, Clone)]
pub struct ItemCatalog {
    ids: Vec<String>,
    release: Vec<i64>,
    source: Vec<ReleaseSource>,
    order: Vec<u32>,
    position: Vec<u32>,
}

impl ItemCatalog {
    pub fn new(ids: Vec<String>, release: Vec<i64>, source: Vec<ReleaseSource>) -> Result<Self> {
        if ids.len() != release.len() || ids.len() != source.len() {
            return Err(Error::InvalidInput("catalog columns differ in length".into()));
        }
        let mut order: Vec<u32> = (0..ids.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            release[a].cmp(&release[b]).then_with(|| ids[a].cmp(&ids[b]))
        });
        let mut position = vec![0u32; ids.len()];
        for (p, &a) in order.iter().enumerate() {
            position[a as usize] = p as u32;
        }
        Ok(Self {
            ids,
            release,
            source,
            order,
            position,
        })
    }

    /// Catalog with every release taken from metadata.
    pub fn from_releases(ids: Vec<String>, release: Vec<i64>) -> Result<Self> {
        let source = vec![ReleaseSource::Metadata; ids.len()];
        Self::new(ids, release, source)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn release(&self, item: usize) -> i64 {
        self.release[item]
    }

    pub fn source(&self, item: usize) -> ReleaseSource {
        self.source[item]
    }

    /// Item indices from oldest to newest.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Rank of `item` in [`order`](Self::order).
    pub fn position(&self, item: usize) -> usize {
        self.position[item] as usize
    }

    pub fn metadata_count(&self) -> usize {
        self.source.iter().filter(|s| **s == ReleaseSource::Metadata).count()
    }

    /// Carries release instants and their provenance over to another graph
    /// (e.g. a time snapshot) whose items are a subset of this catalog's.
    pub fn reindex(&self, graph: &RatingGraph) -> Result<ItemCatalog> {
        let lookup: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
        let mut release = Vec::with_capacity(graph.item_count());
        let mut source = Vec::with_capacity(graph.item_count());
        for id in graph.item_ids() {
            let k = *lookup
                .get(id.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("item '{id}' is not in the catalog")))?;
            release.push(self.release[k]);
            source.push(self.source[k]);
        }
        ItemCatalog::new(graph.item_ids().to_vec(), release, source)
    }

    /// Checks that this catalog describes exactly the items of `graph`.
    pub fn check_matches(&self, graph: &RatingGraph) -> Result<()> {
        if self.ids.as_slice() != graph.item_ids() {
            return Err(Error::InvalidInput("catalog does not match the graph's items".into()));
        }
        Ok(())
    }
}

/// Metadata dates where available, otherwise the item's first rating time.
pub fn resolve_release_dates(graph: &RatingGraph, metadata: Option<&ReleaseMetadata>) -> ItemCatalog {
    let n = graph.item_count();
    let mut release = Vec::with_capacity(n);
    let mut source = Vec::with_capacity(n);
    for (a, id) in graph.item_ids().iter().enumerate() {
        match metadata.and_then(|m| m.get(id)) {
            Some(&t) => {
                release.push(t);
                source.push(ReleaseSource::Metadata);
            }
            None => {
                release.push(graph.first_rating_time(a).expect("graph items have at least one edge"));
                source.push(ReleaseSource::ProxyFirstRating);
            }
        }
    }
    ItemCatalog::new(graph.item_ids().to_vec(), release, source).expect("columns built with equal length")
}

/// Parses an ISO-8601 date (`1999-01-01`, midnight UTC) or date-time
/// (`1999-01-01T12:00:00Z`, `1999-01-01 12:00:00`).
pub fn parse_instant(s: &str) -> Result<i64> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    Err(Error::InvalidInput(format!("unparsable date '{s}'")))
}

/// Formats an instant as an RFC 3339 UTC date-time.
pub fn format_instant(t: i64) -> String {
    DateTime::from_timestamp(t, 0)
        .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| t.to_string())
}

/// Calendar year (UTC) of an instant.
pub fn year_of(t: i64) -> i32 {
    use chrono::Datelike;
    DateTime::from_timestamp(t, 0).map(|d| d.year()).unwrap_or(1970)
}

pub fn load_metadata(path: &Path) -> Result<ReleaseMetadata> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_metadata(file).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Reads `item,release_date` rows; a first row whose date does not parse is
/// taken as the header.
pub fn read_metadata<R: Read>(reader: R) -> Result<ReleaseMetadata> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = ReleaseMetadata::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(std::path::PathBuf::new(), e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        let (Some(item), Some(date)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::InvalidInput(format!("line {line}: expected item,release_date")));
        };
        match parse_instant(date) {
            Ok(t) => {
                out.insert(item.trim().to_string(), t);
            }
            Err(_) if k == 0 => continue,
            Err(e) => return Err(Error::InvalidInput(format!("line {line}: {e}"))),
        }
    }
    Ok(out)
}
