use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::catalog::ItemCatalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthItem {
    pub id: String,
    pub award_year: Option<i32>,
}

/// Externally curated list of high-quality items (award winners, curated tops).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub label: String,
    pub items: Vec<TruthItem>,
}

/// Ground truth mapped onto one catalog's dense item indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedTruth {
    pub items: HashSet<u32>,
    /// Truth entries absent from the catalog.
    pub dropped: usize,
}

impl GroundTruth {
    /// Deduplicates by id; the first occurrence wins.
    pub fn new(label: impl Into<String>, items: Vec<TruthItem>) -> Self {
        let mut seen = HashSet::new();
        let items = items.into_iter().filter(|t| seen.insert(t.id.clone())).collect();
        Self {
            label: label.into(),
            items,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn has_award_years(&self) -> bool {
        self.items.iter().any(|t| t.award_year.is_some())
    }

    pub fn award_years(&self) -> BTreeSet<i32> {
        self.items.iter().filter_map(|t| t.award_year).collect()
    }

    /// Truth restricted to items of `catalog`; errors if nothing is left.
    pub fn resolve(&self, catalog: &ItemCatalog) -> Result<ResolvedTruth> {
        let r = self.resolve_where(catalog, |_| true);
        if r.items.is_empty() {
            return Err(Error::InvalidInput(format!(
                "ground truth '{}' has no items in the catalog",
                self.label
            )));
        }
        if r.dropped > 0 {
            log::warn!(
                "{} ground-truth items are not in the catalog and were dropped",
                r.dropped
            );
        }
        Ok(r)
    }

    /// Like [`resolve`](Self::resolve) over entries matching `keep`, without
    /// the non-empty check.
    pub fn resolve_where(&self, catalog: &ItemCatalog, keep: impl Fn(&TruthItem) -> bool) -> ResolvedTruth {
        let index: std::collections::HashMap<&str, u32> = catalog
            .ids()
            .iter()
            .enumerate()
            .map(|(k, s)| (s.as_str(), k as u32))
            .collect();
        let mut items = HashSet::new();
        let mut dropped = 0;
        for t in self.items.iter().filter(|t| keep(t)) {
            match index.get(t.id.as_str()) {
                Some(&a) => {
                    items.insert(a);
                }
                None => dropped += 1,
            }
        }
        ResolvedTruth { items, dropped }
    }
}

pub fn load_ground_truth(path: &Path, label: &str) -> Result<GroundTruth> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ground_truth(file, label).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Reads `item_id[,award_year]` rows. A first row with a non-numeric year, or
/// whose first field is `item`/`item_id`, is taken as a header.
pub fn read_ground_truth<R: Read>(reader: R, label: &str) -> Result<GroundTruth> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut items = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(std::path::PathBuf::new(), e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        let id = rec.get(0).map(str::trim).unwrap_or("");
        let year = rec.get(1).map(str::trim).filter(|s| !s.is_empty());
        if k == 0 && (matches!(id, "item" | "item_id") || year.is_some_and(|y| y.parse::<i32>().is_err())) {
            continue;
        }
        if id.is_empty() {
            return Err(Error::InvalidInput(format!("line {line}: empty item id")));
        }
        let award_year = match year {
            Some(y) => Some(
                y.parse::<i32>()
                    .map_err(|_| Error::InvalidInput(format!("line {line}: bad award year '{y}'")))?,
            ),
            None => None,
        };
        items.push(TruthItem {
            id: id.to_string(),
            award_year,
        });
    }
    Ok(GroundTruth::new(label, items))
}
