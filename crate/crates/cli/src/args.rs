//! Option groups shared by several subcommands, and the data loading they
//! drive.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use tbrank::catalog::{load_metadata, parse_instant, resolve_release_dates, ReleaseMetadata};
use tbrank::interactions::{
    filter_min_degree, filter_min_degree_single_pass, load_interactions, merge_duplicates, CsvSchema, HeaderMode,
    Interaction, LoadOutcome, RatingScale,
};
use tbrank::ranking::{Algorithm, ConvergenceConfig, Ranker, DEFAULT_DAMPING};
use tbrank::{build_graph, ItemCatalog, RatingGraph, WeightingMode};

use crate::config::input_path;
use crate::exit::{conflict, usage};
use crate::output::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeaderArg {
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Interactions CSV.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Column names or 0-based positions, in the order user,item,rating,timestamp.
    #[arg(long, default_value = "user,item,rating,timestamp")]
    pub columns: String,
    #[arg(long, value_enum, default_value_t = HeaderArg::Auto)]
    pub header: HeaderArg,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Lowest valid rating; rows outside the scale are rejected.
    #[arg(long, default_value_t = 1.0)]
    pub min_rating: f64,
    #[arg(long, default_value_t = 5.0)]
    pub max_rating: f64,
    /// Drop users with fewer interactions (after merging duplicates).
    #[arg(long, default_value_t = 0)]
    pub min_user_degree: usize,
    #[arg(long, default_value_t = 0)]
    pub min_item_degree: usize,
    /// Apply the degree thresholds once instead of until nothing changes.
    #[arg(long)]
    pub single_pass_filter: bool,
    /// Release dates (`item,release_date`); items without one use their
    /// first rating time.
    #[arg(long, value_name = "FILE")]
    pub metadata: Option<PathBuf>,
}

impl DataArgs {
    fn schema(&self) -> Result<CsvSchema> {
        if !self.delimiter.is_ascii() {
            return Err(usage(format!(
                "delimiter must be a single ASCII character, got '{}'",
                self.delimiter
            )));
        }
        if !(self.min_rating.is_finite() && self.max_rating.is_finite() && self.min_rating <= self.max_rating) {
            return Err(usage(format!(
                "rating scale [{}, {}] is not a valid range",
                self.min_rating, self.max_rating
            )));
        }
        let mut schema = CsvSchema::default().with_columns(&self.columns)?;
        schema.header = match self.header {
            HeaderArg::Auto => HeaderMode::Auto,
            HeaderArg::Present => HeaderMode::Present,
            HeaderArg::Absent => HeaderMode::Absent,
        };
        schema.delimiter = self.delimiter as u8;
        schema.scale = RatingScale {
            min: self.min_rating,
            max: self.max_rating,
        };
        Ok(schema)
    }

    /// Loads, merges and filters the interactions, and reads the metadata
    /// file if one was given. Both files are recorded as run inputs.
    pub fn load(&self, run: &mut Run) -> Result<Dataset> {
        let path = input_path(&self.input);
        let schema = self.schema()?;
        let outcome = load_interactions(&path, &schema)?;
        run.input(&path)?;
        if !outcome.rejects.is_empty() {
            log::warn!("{}: {} rows rejected", path.display(), outcome.rejects.len());
        }
        let loaded = outcome.interactions.len();
        let merged = merge_duplicates(outcome.interactions.clone());
        let interactions = if self.single_pass_filter {
            filter_min_degree_single_pass(merged, self.min_user_degree, self.min_item_degree)
        } else {
            filter_min_degree(merged, self.min_user_degree, self.min_item_degree)
        };
        log::info!(
            "{loaded} interactions loaded, {} after merging and filtering",
            interactions.len()
        );
        let metadata = match &self.metadata {
            Some(p) => {
                let p = input_path(p);
                let m = load_metadata(&p)?;
                run.input(&p)?;
                Some(m)
            }
            None => None,
        };
        Ok(Dataset {
            name: dataset_name(&self.input),
            interactions,
            rejects: LoadOutcome {
                interactions: Vec::new(),
                rejects: outcome.rejects,
            },
            metadata,
        })
    }
}

pub fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

pub struct Dataset {
    pub name: String,
    pub interactions: Vec<Interaction>,
    /// Rows the loader refused, for the `.rejects` sidecar.
    pub rejects: LoadOutcome,
    pub metadata: Option<ReleaseMetadata>,
}

impl Dataset {
    pub fn max_timestamp(&self) -> Option<i64> {
        self.interactions.iter().map(|i| i.timestamp).max()
    }

    pub fn graph(&self, weighting: WeightingMode) -> Result<(RatingGraph, ItemCatalog)> {
        if self.interactions.is_empty() {
            return Err(tbrank::Error::EmptyGraph).context("no interactions left after loading and filtering");
        }
        let graph = build_graph(&self.interactions, weighting)?;
        let catalog = resolve_release_dates(&graph, self.metadata.as_ref());
        Ok((graph, catalog))
    }

    /// Writes rejected rows next to `primary` (as `<primary>.rejects`) if
    /// there are any.
    pub fn write_rejects(&self, run: &mut Run, primary: &Path) -> Result<()> {
        if self.rejects.rejects.is_empty() {
            return Ok(());
        }
        let path = LoadOutcome::rejects_path(primary);
        run.output(&path, |w| Ok(self.rejects.write_rejects(w)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingArg {
    Rating,
    TimeDecay,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WeightArgs {
    /// Edge weights; defaults to what the algorithm needs (rating unless
    /// birank-t).
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingArg>,
    /// Time-decay base δ in (0,1) [default: 0.85].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Time-decay rate a, per year [default: 1].
    #[arg(long)]
    pub decay_rate: Option<f64>,
    /// Reference instant for time decay: epoch seconds or ISO-8601
    /// [default: latest timestamp in the data].
    #[arg(long)]
    pub now: Option<String>,
}

pub const DEFAULT_DELTA: f64 = 0.85;
pub const DEFAULT_DECAY_RATE: f64 = 1.0;

fn parse_now(s: &str) -> Result<i64> {
    if let Ok(t) = s.trim().parse::<i64>() {
        return Ok(t);
    }
    parse_instant(s).map_err(|_| usage(format!("--now: expected epoch seconds or an ISO-8601 date, got '{s}'")))
}

impl WeightArgs {
    /// Weighting for each algorithm. Explicit choices that contradict an
    /// algorithm's requirement, and decay parameters that no algorithm
    /// uses, are conflicts.
    pub fn resolve(&self, algorithms: &[Algorithm], data: &Dataset) -> Result<Vec<WeightingMode>> {
        let explicit = self.weighting;
        let mut uses_decay = false;
        let mut kinds = Vec::with_capacity(algorithms.len());
        for &algo in algorithms {
            let decay = match (algo.needs_time_decay(), explicit) {
                (Some(true), Some(WeightingArg::Rating)) => {
                    return Err(conflict(format!("{algo} needs --weighting time-decay")))
                }
                (Some(false), Some(WeightingArg::TimeDecay)) => {
                    return Err(conflict(format!("{algo} needs --weighting rating")))
                }
                (Some(need), _) => need,
                (None, w) => w == Some(WeightingArg::TimeDecay),
            };
            uses_decay |= decay;
            kinds.push(decay);
        }
        if !uses_decay {
            let stray: Vec<&str> = [
                (self.delta.is_some(), "--delta"),
                (self.decay_rate.is_some(), "--decay-rate"),
                (self.now.is_some(), "--now"),
            ]
            .into_iter()
            .filter_map(|(set, name)| set.then_some(name))
            .collect();
            if !stray.is_empty() {
                return Err(conflict(format!(
                    "{} only apply to time-decay weighting",
                    stray.join(", ")
                )));
            }
            return Ok(vec![WeightingMode::Rating; kinds.len()]);
        }
        let now = match &self.now {
            Some(s) => parse_now(s)?,
            None => data.max_timestamp().ok_or(tbrank::Error::EmptyGraph)?,
        };
        let mode = WeightingMode::time_decay(
            self.delta.unwrap_or(DEFAULT_DELTA),
            self.decay_rate.unwrap_or(DEFAULT_DECAY_RATE),
            now,
        )?;
        Ok(kinds
            .into_iter()
            .map(|d| if d { mode } else { WeightingMode::Rating })
            .collect())
    }
}

pub fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|e| e.to_string())
}

/// `all` or a comma-separated list of algorithm names.
pub fn parse_algorithms(s: &str) -> std::result::Result<AlgorithmList, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(AlgorithmList(Algorithm::ALL.to_vec()));
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let a = parse_algorithm(part)?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(AlgorithmList(out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AlgorithmList(pub Vec<Algorithm>);

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergenceArgs {
    /// Seed for the random initial scores.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Convergence threshold on the L2 change between sweeps.
    #[arg(long, default_value_t = 1e-8)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iterations: usize,
    /// BGRM damping λ in [0,1).
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,
}

impl ConvergenceArgs {
    pub fn ranker(&self, algorithm: Algorithm) -> Result<Ranker> {
        let convergence = ConvergenceConfig {
            threshold: self.threshold,
            max_iterations: self.max_iterations,
            seed: self.seed,
        };
        convergence.validate()?;
        if !(0.0..1.0).contains(&self.damping) {
            return Err(usage(format!("--damping must be in [0,1), got {}", self.damping)));
        }
        let mut ranker = Ranker::new(algorithm).with_convergence(convergence);
        ranker.damping = self.damping;
        Ok(ranker)
    }
}

/// `none` or an even window size Δp ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RebalanceArg(pub Option<usize>);

impl Serialize for RebalanceArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(w) => s.serialize_u64(w as u64),
            None => s.serialize_str("none"),
        }
    }
}

pub fn parse_rebalance(s: &str) -> std::result::Result<RebalanceArg, String> {
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(RebalanceArg(None));
    }
    let w: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("expected 'none' or an even window size, got '{s}'"))?;
    if w < 2 || !w.is_multiple_of(2) {
        return Err(format!("window size must be an even integer >= 2, got {w}"));
    }
    Ok(RebalanceArg(Some(w)))
}

/// Top-list fraction L in (0,1).
pub fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("expected a number, got '{s}'"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must be in (0,1), got {v}"))
    }
}
