use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use tbrank::catalog::year_of;
use tbrank::export;
use tbrank::harness::{
    evaluate_scores, generate_synthetic, load_ground_truth, ranked_list, recall_by_year, sweep_window_scores,
    EvalConfig, SynthConfig, YearRecallConfig,
};
use tbrank::ranking::Algorithm;
use tbrank::{ImbalanceConfig, RebalanceConfig, ScoreVector};

use crate::args::{
    dataset_name, parse_algorithm, parse_algorithms, parse_fraction, parse_rebalance, AlgorithmList, ConvergenceArgs,
    DataArgs, RebalanceArg, WeightArgs,
};
use crate::config::input_path;
use crate::exit::{conflict, usage};
use crate::output::Run;

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Cleaned interactions CSV.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn ingest(args: IngestArgs, mut run: Run) -> Result<()> {
    let data = args.data.load(&mut run)?;
    run.output(&args.out, |w| Ok(export::write_interactions(w, &data.interactions)?))?;
    data.write_rejects(&mut run, &args.out)?;
    let users: HashSet<&str> = data.interactions.iter().map(|i| i.user.as_str()).collect();
    let items: HashSet<&str> = data.interactions.iter().map(|i| i.item.as_str()).collect();
    eprintln!(
        "{} interactions, {} users, {} items, {} rows rejected",
        data.interactions.len(),
        users.len(),
        items.len(),
        data.rejects.rejects.len()
    );
    let params = json!({
        "data": args.data,
        "out": args.out,
        "interactions": data.interactions.len(),
        "users": users.len(),
        "items": items.len(),
        "rejected": data.rejects.rejects.len(),
    });
    run.finish(&args.out, params, None)?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// birank-r, birank-t, bihits, qrep or bgrm.
    #[arg(long, value_parser = parse_algorithm, default_value = "birank-r")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub convergence: ConvergenceArgs,
    #[arg(long, value_name = "FILE", default_value = "scores.csv")]
    pub out: PathBuf,
}

fn run_summary(raw: &ScoreVector) -> serde_json::Value {
    json!({
        "iterations": raw.iterations,
        "converged": raw.converged,
        "components": raw.components,
    })
}

fn warn_unconverged(algo: Algorithm, raw: &ScoreVector) {
    if !raw.converged {
        log::warn!("{algo} stopped after {} iterations without converging", raw.iterations);
    }
}

pub fn rank(args: RankArgs, mut run: Run) -> Result<()> {
    let data = args.data.load(&mut run)?;
    let weighting = args.weights.resolve(&[args.algo], &data)?[0];
    let (graph, catalog) = data.graph(weighting)?;
    let ranker = args.convergence.ranker(args.algo)?;
    let raw = ranker.rank(&graph)?;
    warn_unconverged(args.algo, &raw);
    let (list, _) = ranked_list(&catalog, &raw, None)?;
    run.output(&args.out, |w| Ok(export::write_scores(w, catalog.ids(), &list, None)?))?;
    data.write_rejects(&mut run, &args.out)?;
    let params = json!({
        "data": args.data,
        "algorithm": args.algo,
        "weighting": weighting,
        "convergence": args.convergence,
        "out": args.out,
        "result": run_summary(&raw),
    });
    run.finish(&args.out, params, Some(args.convergence.seed))?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RebalanceArgs {
    /// Score file written by `rank`.
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    /// Interactions the scores were computed from; supplies first-rating
    /// dates for items without metadata.
    #[command(flatten)]
    pub data: DataArgs,
    /// Window size Δp (even).
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// Score given to items whose window has zero spread.
    #[arg(long, default_value_t = 0.0)]
    pub fallback: f64,
    #[arg(long, value_name = "FILE", default_value = "rebalanced.csv")]
    pub out: PathBuf,
}

pub fn rebalance(args: RebalanceArgs, mut run: Run) -> Result<()> {
    let cfg = RebalanceConfig {
        window: args.window,
        fallback: args.fallback,
    };
    cfg.validate()?;
    let scores_path = input_path(&args.scores);
    let rows = export::read_scores(File::open(&scores_path).with_context(|| scores_path.display().to_string())?)
        .with_context(|| format!("reading {}", scores_path.display()))?;
    run.input(&scores_path)?;
    let data = args.data.load(&mut run)?;
    let (graph, catalog) = data.graph(tbrank::WeightingMode::Rating)?;

    let mut items = vec![f64::NAN; graph.item_count()];
    for row in &rows {
        let a = graph.item_index(&row.item_id).ok_or_else(|| {
            tbrank::Error::InvalidInput(format!(
                "scored item '{}' does not occur in the interactions",
                row.item_id
            ))
        })? as usize;
        if !items[a].is_nan() {
            return Err(tbrank::Error::InvalidInput(format!("item '{}' is scored twice", row.item_id)).into());
        }
        items[a] = row.score;
    }
    if let Some(a) = items.iter().position(|s| s.is_nan()) {
        return Err(tbrank::Error::InvalidInput(format!("item '{}' has no score", catalog.ids()[a])).into());
    }
    let raw = ScoreVector {
        items,
        users: Vec::new(),
        iterations: 0,
        converged: true,
        components: graph.component_count(),
    };
    let (list, _) = ranked_list(&catalog, &raw, Some(&cfg))?;
    run.output(&args.out, |w| {
        Ok(export::write_scores(w, catalog.ids(), &list, Some(&raw.items))?)
    })?;
    let params = json!({
        "scores": args.scores,
        "data": args.data,
        "window": cfg.window,
        "fallback": cfg.fallback,
        "items": catalog.len(),
        "items_with_metadata": catalog.metadata_count(),
        "out": args.out,
    });
    run.finish(&args.out, params, None)?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ListArgs {
    /// Top-list fraction L.
    #[arg(long = "L", value_name = "FRACTION", value_parser = parse_fraction, default_value = "0.01")]
    pub top_fraction: f64,
    /// Number of release-time groups for the imbalance metric.
    #[arg(long, default_value_t = 40)]
    pub groups: usize,
}

impl ListArgs {
    fn imbalance(&self) -> Result<ImbalanceConfig> {
        if self.groups == 0 {
            return Err(usage("--groups must be at least 1"));
        }
        Ok(ImbalanceConfig {
            top_fraction: self.top_fraction,
            groups: self.groups,
        })
    }
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// `all` or a comma-separated list of algorithms.
    #[arg(long, value_parser = parse_algorithms, default_value = "birank-r")]
    pub algo: AlgorithmList,
    #[command(flatten)]
    pub convergence: ConvergenceArgs,
    /// Ground-truth CSV (`item_id[,award_year]`).
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
    /// Label for the ground truth in reports [default: file name].
    #[arg(long)]
    pub truth_label: Option<String>,
    /// Window size Δp for the rebalanced runs, or `none`.
    #[arg(long, value_parser = parse_rebalance, default_value = "100")]
    pub rebalance: RebalanceArg,
    #[command(flatten)]
    pub list: ListArgs,
    /// NDCG cut-off [default: top-list size].
    #[arg(long)]
    pub ndcg_depth: Option<usize>,
    /// Recall per award year on time snapshots (single algorithm only).
    #[arg(long, value_name = "FILE")]
    pub per_year: Option<PathBuf>,
    /// JSON report; a flat CSV twin is written beside it.
    #[arg(long, value_name = "FILE", default_value = "report.json")]
    pub out: PathBuf,
}

pub fn eval(args: EvalArgs, mut run: Run) -> Result<()> {
    let algorithms = &args.algo.0;
    if args.per_year.is_some() && algorithms.len() != 1 {
        return Err(conflict("--per-year needs exactly one algorithm"));
    }
    let csv_out = args.out.with_extension("csv");
    if csv_out == args.out {
        return Err(usage(
            "--out must not have a .csv extension; the CSV twin takes that name",
        ));
    }
    if args.ndcg_depth == Some(0) {
        return Err(usage("--ndcg-depth must be at least 1"));
    }
    let imbalance = args.list.imbalance()?;
    let rb = args.rebalance.0.map(RebalanceConfig::with_window);
    if let Some(cfg) = &rb {
        cfg.validate()?;
    }
    let data = args.data.load(&mut run)?;
    let truth_path = input_path(&args.truth);
    let label = args.truth_label.clone().unwrap_or_else(|| dataset_name(&args.truth));
    let truth = load_ground_truth(&truth_path, &label)?;
    run.input(&truth_path)?;
    let weightings = args.weights.resolve(algorithms, &data)?;

    let mut reports = Vec::new();
    let mut runs = Vec::new();
    let mut per_year = None;
    for (&algo, &weighting) in algorithms.iter().zip(&weightings) {
        let (graph, catalog) = data.graph(weighting)?;
        let ranker = args.convergence.ranker(algo)?;
        let raw = ranker.rank(&graph)?;
        warn_unconverged(algo, &raw);
        let mut cfg = EvalConfig::new(data.name.clone(), ranker);
        cfg.imbalance = imbalance;
        cfg.ndcg_depth = args.ndcg_depth;
        let mut raw_report = evaluate_scores(&graph, &catalog, &truth, &cfg, &raw)?;
        if args.per_year.is_some() {
            let table = recall_by_year(
                &graph,
                &catalog,
                &truth,
                &YearRecallConfig {
                    ranker,
                    rebalance: rb,
                    top_fraction: imbalance.top_fraction,
                    min_user: args.data.min_user_degree,
                    min_item: args.data.min_item_degree,
                },
            )?;
            for s in &table.skipped {
                log::warn!("award year {} skipped: {}", s.year, s.reason);
            }
            raw_report.per_year_recall = Some(table.clone());
            per_year = Some(table);
        }
        reports.push(raw_report);
        if rb.is_some() {
            cfg.rebalance = rb;
            reports.push(evaluate_scores(&graph, &catalog, &truth, &cfg, &raw)?);
        }
        runs.push(json!({ "algorithm": algo, "weighting": weighting, "result": run_summary(&raw) }));
    }

    run.output(&args.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &reports)?;
        writeln!(w)?;
        Ok(())
    })?;
    run.output(&csv_out, |w| Ok(export::write_report_rows(w, &reports)?))?;
    if let (Some(path), Some(table)) = (&args.per_year, &per_year) {
        run.output(path, |w| Ok(export::write_year_recall(w, table)?))?;
    }
    data.write_rejects(&mut run, &args.out)?;
    for r in &reports {
        let cells: Vec<String> = r
            .metrics
            .entries()
            .iter()
            .map(|(name, v)| match v.value() {
                Some(x) => format!("{name}={x:.4}"),
                None => format!("{name}=n/a"),
            })
            .collect();
        eprintln!("{:<10} {}", r.method_name(), cells.join(" "));
    }
    let params = json!({
        "data": args.data,
        "algorithms": args.algo,
        "convergence": args.convergence,
        "truth": args.truth,
        "truth_label": label,
        "rebalance": rb,
        "top_fraction": imbalance.top_fraction,
        "groups": imbalance.groups,
        "ndcg_depth": args.ndcg_depth,
        "per_year": args.per_year,
        "out": args.out,
        "runs": runs,
    });
    run.finish(&args.out, params, Some(args.convergence.seed))?;
    Ok(())
}

pub const DEFAULT_WINDOWS: &str = "2,10,20,50,100,200,500,1000,2000";

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_parser = parse_algorithm, default_value = "birank-r")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub convergence: ConvergenceArgs,
    /// Comma-separated window sizes Δp.
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_WINDOWS)]
    pub windows: Vec<usize>,
    #[command(flatten)]
    pub list: ListArgs,
    #[arg(long, value_name = "FILE", default_value = "sweep.csv")]
    pub out: PathBuf,
}

pub fn sweep(args: SweepArgs, mut run: Run) -> Result<()> {
    if args.windows.is_empty() {
        return Err(usage("--windows needs at least one window size"));
    }
    let imbalance = args.list.imbalance()?;
    let data = args.data.load(&mut run)?;
    let weighting = args.weights.resolve(&[args.algo], &data)?[0];
    let (graph, catalog) = data.graph(weighting)?;
    let ranker = args.convergence.ranker(args.algo)?;
    for &w in &args.windows {
        RebalanceConfig::with_window(w).validate()?;
    }
    let raw = ranker.rank(&graph)?;
    warn_unconverged(args.algo, &raw);
    let points = sweep_window_scores(&catalog, &raw, &args.windows, &imbalance)?;
    run.output(&args.out, |w| Ok(export::write_sweep(w, &points)?))?;
    data.write_rejects(&mut run, &args.out)?;
    let params = json!({
        "data": args.data,
        "algorithm": args.algo,
        "weighting": weighting,
        "convergence": args.convergence,
        "windows": args.windows,
        "top_fraction": imbalance.top_fraction,
        "groups": imbalance.groups,
        "out": args.out,
        "result": run_summary(&raw),
    });
    run.finish(&args.out, params, Some(args.convergence.seed))?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    /// Directory for ratings.csv, metadata.csv and truth.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4000)]
    pub items: usize,
    #[arg(long, default_value_t = 20000)]
    pub users: usize,
    /// Mean number of ratings per user.
    #[arg(long, default_value_t = 10.0)]
    pub edges_per_user: f64,
    /// Preferential attachment strength β.
    #[arg(long, default_value_t = 2.0)]
    pub popularity_bias: f64,
    /// Exponent g of the user arrival density t^g.
    #[arg(long, default_value_t = 0.0)]
    pub user_growth: f64,
    #[arg(long, default_value_t = 20.0)]
    pub horizon_years: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rating_noise: f64,
    /// Share of items planted as ground truth.
    #[arg(long, default_value_t = 0.01)]
    pub truth_fraction: f64,
    /// Leave new releases to preferential attachment alone.
    #[arg(long)]
    pub no_release_seed: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn synth(args: SynthArgs, mut run: Run) -> Result<()> {
    let cfg = SynthConfig {
        items: args.items,
        users: args.users,
        edges_per_user: args.edges_per_user,
        popularity_bias: args.popularity_bias,
        user_growth: args.user_growth,
        horizon_years: args.horizon_years,
        rating_noise: args.rating_noise,
        truth_fraction: args.truth_fraction,
        release_seed: !args.no_release_seed,
        seed: args.seed,
        ..SynthConfig::default()
    };
    let data = generate_synthetic(&cfg)?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let dir = &args.out_dir;
    run.output(&dir.join("ratings.csv"), |w| {
        Ok(export::write_interactions(w, &data.interactions)?)
    })?;
    run.output(&dir.join("metadata.csv"), |w| {
        Ok(export::write_metadata(w, &data.metadata)?)
    })?;
    run.output(&dir.join("truth.csv"), |w| Ok(export::write_truth(w, &data.truth)?))?;
    eprintln!(
        "{} interactions, {} items, {} truth items in {}",
        data.interactions.len(),
        data.items.len(),
        data.truth.len(),
        dir.display()
    );
    let params = json!({ "out_dir": args.out_dir, "config": cfg });
    run.finish(&dir.join("synth"), params, Some(cfg.seed))?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct TopArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_parser = parse_algorithm, default_value = "birank-r")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub convergence: ConvergenceArgs,
    /// Window size Δp to rebalance with, or `none`.
    #[arg(long, value_parser = parse_rebalance, default_value = "none")]
    pub rebalance: RebalanceArg,
    /// Number of items to list.
    #[arg(short, long, default_value_t = 20)]
    pub k: usize,
    /// Also write the list as CSV (with a manifest beside it).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn top(args: TopArgs, mut run: Run) -> Result<()> {
    let rb = args.rebalance.0.map(RebalanceConfig::with_window);
    let data = args.data.load(&mut run)?;
    let weighting = args.weights.resolve(&[args.algo], &data)?[0];
    let (graph, catalog) = data.graph(weighting)?;
    let ranker = args.convergence.ranker(args.algo)?;
    let raw = ranker.rank(&graph)?;
    warn_unconverged(args.algo, &raw);
    let (list, _) = ranked_list(&catalog, &raw, rb.as_ref())?;
    let shown = &list.order()[..args.k.min(list.len())];

    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{:>5}  {:<24} {:>6}  {:>12}", "rank", "item", "year", "score")?;
    for (k, &a) in shown.iter().enumerate() {
        let a = a as usize;
        writeln!(
            stdout,
            "{:>5}  {:<24} {:>6}  {:>12.6}",
            k + 1,
            catalog.ids()[a],
            year_of(catalog.release(a)),
            list.scores()[a]
        )?;
    }
    stdout.flush()?;

    if let Some(out) = &args.out {
        run.output(out, |w| write_top(w, &catalog, &list, shown))?;
    }
    let params = json!({
        "data": args.data,
        "algorithm": args.algo,
        "weighting": weighting,
        "convergence": args.convergence,
        "rebalance": rb,
        "k": args.k,
        "out": args.out,
        "result": run_summary(&raw),
    });
    match &args.out {
        Some(out) => {
            run.finish(out, params, Some(args.convergence.seed))?;
        }
        None => run.finish_to_stderr(params, Some(args.convergence.seed))?,
    }
    Ok(())
}

fn write_top(
    w: &mut impl Write,
    catalog: &tbrank::ItemCatalog,
    list: &tbrank::RankedList,
    shown: &[u32],
) -> Result<()> {
    writeln!(w, "rank,item_id,release_year,score")?;
    for (k, &a) in shown.iter().enumerate() {
        let a = a as usize;
        let id = &catalog.ids()[a];
        let id = if id.contains([',', '"', '\n']) {
            format!("\"{}\"", id.replace('"', "\"\""))
        } else {
            id.clone()
        };
        writeln!(
            w,
            "{},{},{},{}",
            k + 1,
            id,
            year_of(catalog.release(a)),
            list.scores()[a]
        )?;
    }
    Ok(())
}
