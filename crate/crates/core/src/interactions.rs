//! Rating records: CSV ingestion, duplicate merging and min-degree cleaning.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One user's rating of one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub rating: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

impl Interaction {
    pub fn new(user: impl Into<String>, item: impl Into<String>, rating: f64, timestamp: i64) -> Self {
        Self {
            user: user.into(),
            item: item.into(),
            rating,
            timestamp,
        }
    }
}

/// Column reference by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl Column {
    /// Parses `"3"` as a position and anything else as a header name.
    pub fn parse(s: &str) -> Column {
        match s.trim().parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.trim().to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeaderMode {
    /// Treat the first row as a header when its rating or timestamp field is
    /// not numeric. Forced to `Present` when any column is referenced by name.
    #[default]
    Auto,
    Present,
    Absent,
}

/// Closed rating interval; rows outside it are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl Default for RatingScale {
    fn default() -> Self {
        Self { min: 1.0, max: 5.0 }
    }
}

impl RatingScale {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.min && r <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub user: Column,
    pub item: Column,
    pub rating: Column,
    pub timestamp: Column,
    pub header: HeaderMode,
    pub delimiter: u8,
    pub scale: RatingScale,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            user: Column::Index(0),
            item: Column::Index(1),
            rating: Column::Index(2),
            timestamp: Column::Index(3),
            header: HeaderMode::Auto,
            delimiter: b',',
            scale: RatingScale::default(),
        }
    }
}

impl CsvSchema {
    /// Builds a schema from a comma-separated list of four column references
    /// in `user,item,rating,timestamp` order, e.g. `"userId,movieId,rating,ts"`
    /// or `"0,1,2,3"`.
    pub fn with_columns(mut self, spec: &str) -> Result<Self> {
        let cols: Vec<Column> = spec.split(',').map(Column::parse).collect();
        let [user, item, rating, timestamp]: [Column; 4] = cols.try_into().map_err(|_| {
            Error::InvalidParameter(format!(
                "column spec must name exactly 4 columns (user,item,rating,timestamp), got '{spec}'"
            ))
        })?;
        self.user = user;
        self.item = item;
        self.rating = rating;
        self.timestamp = timestamp;
        Ok(self)
    }

    fn uses_names(&self) -> bool {
        [&self.user, &self.item, &self.rating, &self.timestamp]
            .iter()
            .any(|c| matches!(c, Column::Name(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    pub interactions: Vec<Interaction>,
    pub rejects: Vec<RejectedRow>,
}

impl LoadOutcome {
    /// Path of the sidecar file holding rejected rows for `input`.
    pub fn rejects_path(input: &Path) -> PathBuf {
        let mut s = input.as_os_str().to_owned();
        s.push(".rejects");
        PathBuf::from(s)
    }

    /// Writes one `line<TAB>reason<TAB>raw` row per rejected record.
    pub fn write_rejects<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "line\treason\traw")?;
        for r in &self.rejects {
            writeln!(w, "{}\t{}\t{}", r.line, r.reason, r.raw)?;
        }
        Ok(())
    }
}

pub fn load_interactions(path: &Path, schema: &CsvSchema) -> Result<LoadOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_interactions(file, schema).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}

struct Resolved {
    user: usize,
    item: usize,
    rating: usize,
    timestamp: usize,
}

fn resolve_columns(schema: &CsvSchema, header: Option<&csv::StringRecord>) -> Result<Resolved> {
    let find = |c: &Column| -> Result<usize> {
        match c {
            Column::Index(i) => Ok(*i),
            Column::Name(n) => header
                .and_then(|h| h.iter().position(|f| f.trim() == n))
                .ok_or_else(|| Error::InvalidInput(format!("column '{n}' not found in header"))),
        }
    };
    Ok(Resolved {
        user: find(&schema.user)?,
        item: find(&schema.item)?,
        rating: find(&schema.rating)?,
        timestamp: find(&schema.timestamp)?,
    })
}

/// Parses interactions from any CSV source. Malformed rows are collected in
/// [`LoadOutcome::rejects`] rather than failing the whole load.
pub fn read_interactions<R: Read>(reader: R, schema: &CsvSchema) -> Result<LoadOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(schema.delimiter)
        .from_reader(reader);

    let mut out = LoadOutcome::default();
    let mut cols: Option<Resolved> = None;
    let mut first = true;
    let mut record = csv::StringRecord::new();

    loop {
        let line_hint = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(Error::csv(PathBuf::new(), e));
                }
                let line = e.position().map(|p| p.line()).unwrap_or(line_hint);
                out.rejects.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                    raw: String::new(),
                });
                continue;
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(line_hint);

        if first {
            first = false;
            let header = match schema.header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Auto => schema.uses_names() || looks_like_header(&record, schema),
            };
            if header {
                cols = Some(resolve_columns(schema, Some(&record))?);
                continue;
            }
            cols = Some(resolve_columns(schema, None)?);
        }
        let c = cols.as_ref().expect("columns resolved on first record");
        match parse_row(&record, c, schema) {
            Ok(i) => out.interactions.push(i),
            Err(reason) => out.rejects.push(RejectedRow {
                line,
                reason,
                raw: record.iter().collect::<Vec<_>>().join(","),
            }),
        }
    }
    Ok(out)
}

fn looks_like_header(record: &csv::StringRecord, schema: &CsvSchema) -> bool {
    let field = |c: &Column| match c {
        Column::Index(i) => record.get(*i).map(str::trim),
        Column::Name(_) => None,
    };
    let rating_bad = field(&schema.rating).is_some_and(|s| s.parse::<f64>().is_err());
    let ts_bad = field(&schema.timestamp).is_some_and(|s| s.parse::<i64>().is_err());
    rating_bad || ts_bad
}

fn parse_row(record: &csv::StringRecord, c: &Resolved, schema: &CsvSchema) -> std::result::Result<Interaction, String> {
    let get = |i: usize, name: &str| {
        record
            .get(i)
            .map(str::trim)
            .ok_or_else(|| format!("missing {name} column (index {i})"))
    };
    let user = get(c.user, "user")?;
    let item = get(c.item, "item")?;
    if user.is_empty() || item.is_empty() {
        return Err("empty user or item id".into());
    }
    let rating_s = get(c.rating, "rating")?;
    let rating: f64 = rating_s
        .parse()
        .map_err(|_| format!("unparsable rating '{rating_s}'"))?;
    if !rating.is_finite() || !schema.scale.contains(rating) {
        return Err(format!(
            "rating {rating} outside scale [{}, {}]",
            schema.scale.min, schema.scale.max
        ));
    }
    let ts_s = get(c.timestamp, "timestamp")?;
    let timestamp: i64 = ts_s.parse().map_err(|_| format!("unparsable timestamp '{ts_s}'"))?;
    if timestamp < 0 {
        return Err(format!("negative timestamp {timestamp}"));
    }
    Ok(Interaction::new(user, item, rating, timestamp))
}

/// Collapses repeated (user, item) pairs into one interaction with the mean
/// rating and the earliest timestamp. Output keeps first-occurrence order.
pub fn merge_duplicates(interactions: Vec<Interaction>) -> Vec<Interaction> {
    struct Acc {
        first: Interaction,
        sum: f64,
        count: u32,
        earliest: i64,
    }
    let mut groups: IndexMap<(String, String), Acc> = IndexMap::with_capacity(interactions.len());
    for it in interactions {
        let key = (it.user.clone(), it.item.clone());
        match groups.get_mut(&key) {
            Some(acc) => {
                acc.sum += it.rating;
                acc.count += 1;
                acc.earliest = acc.earliest.min(it.timestamp);
            }
            None => {
                groups.insert(
                    key,
                    Acc {
                        sum: it.rating,
                        count: 1,
                        earliest: it.timestamp,
                        first: it,
                    },
                );
            }
        }
    }
    groups
        .into_values()
        .map(|acc| {
            let mut it = acc.first;
            if acc.count > 1 {
                it.rating = acc.sum / f64::from(acc.count);
                it.timestamp = acc.earliest;
            }
            it
        })
        .collect()
}

/// Keeps the maximal subset in which every user has at least `min_user`
/// interactions and every item at least `min_item`, peeling until nothing
/// changes.
pub fn filter_min_degree(interactions: Vec<Interaction>, min_user: usize, min_item: usize) -> Vec<Interaction> {
    let mut current = interactions;
    loop {
        let before = current.len();
        current = filter_once(current, min_user, min_item);
        if current.len() == before {
            return current;
        }
    }
}

/// One simultaneous pass of the degree criterion, without cascading.
pub fn filter_min_degree_single_pass(
    interactions: Vec<Interaction>,
    min_user: usize,
    min_item: usize,
) -> Vec<Interaction> {
    filter_once(interactions, min_user, min_item)
}

fn filter_once(interactions: Vec<Interaction>, min_user: usize, min_item: usize) -> Vec<Interaction> {
    if min_user == 0 && min_item == 0 {
        return interactions;
    }
    let mut users: HashMap<&str, usize> = HashMap::new();
    let mut items: HashMap<&str, usize> = HashMap::new();
    for it in &interactions {
        *users.entry(&it.user).or_default() += 1;
        *items.entry(&it.item).or_default() += 1;
    }
    let keep: Vec<bool> = interactions
        .iter()
        .map(|it| users[it.user.as_str()] >= min_user && items[it.item.as_str()] >= min_item)
        .collect();
    interactions
        .into_iter()
        .zip(keep)
        .filter_map(|(it, k)| k.then_some(it))
        .collect()
}
