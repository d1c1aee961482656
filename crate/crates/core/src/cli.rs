//! The `mlclust` command line.
//!
//! Settings resolve as command-line flags, then a `key=value` config file
//! (`--config` or `MLCLUST_CONFIG`), then built-in defaults. Exit codes: 0 on
//! success, 2 on usage or input errors, 3 when the GA hit its generation
//! limit without stalling or converging, 4 on numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ga::{evolve_with_pool, FitnessPool, GaConfig, TerminationReason};
use crate::io;
use crate::mst::{build_forest, export_dot, EdgeWeights};
use crate::oracle::{brute_force_max, simulated_annealing, AnnealingSchedule, MAX_BRUTE_FORCE_N};
use crate::panel::ReturnPanel;
use crate::preprocess::{aggregate_bars, run_pipeline, PipelineConfig, PriceMatrix};
use crate::synth::{generate_noh, PlantedCluster, PlantedSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MAX_GENERATIONS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable naming a config file.
pub const CONFIG_ENV: &str = "MLCLUST_CONFIG";

/// Three-minute bars.
pub const DEFAULT_BAR_MS: i64 = 180_000;

#[derive(Debug, Parser)]
#[command(name = "mlclust", version, about = "Maximum-likelihood clustering of correlation matrices")]
struct Cli {
    /// Config file of key=value lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted-cluster return panel.
    Synth(SynthArgs),
    /// Cluster a correlation matrix (or a panel) with the genetic algorithm.
    Cluster(ClusterArgs),
    /// Time the GA over a directory of correlation matrices.
    Benchmark(BenchmarkArgs),
    /// Turn ticks or bar prices into cleaned correlation matrices.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    /// Cluster layout such as `4x10` or `2x5,1x10` (count x size).
    #[arg(long)]
    clusters: String,
    /// Coupling of every cluster to its factor.
    #[arg(long)]
    g: f64,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args, Default)]
struct GaFlags {
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long)]
    pc: Option<f64>,
    #[arg(long)]
    pm: Option<f64>,
    #[arg(long)]
    pkb: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    stall: Option<usize>,
    #[arg(long)]
    elite: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct PipelineFlags {
    /// EWMA forgetting factor.
    #[arg(long)]
    lambda: Option<f64>,
    /// Bar width in milliseconds for tick input.
    #[arg(long)]
    bar_ms: Option<i64>,
    #[arg(long)]
    no_rmt: bool,
    #[arg(long)]
    no_market_mode: bool,
    /// Observations absorbed before the first matrix is written.
    #[arg(long)]
    warmup: Option<usize>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Correlation CSV, or a panel / bar-price CSV with `--panel` / `--pipeline`.
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as an assets-by-observations return panel.
    #[arg(long, conflicts_with = "pipeline")]
    panel: bool,
    /// Treat the input as a bar-price CSV and cluster the last cleaned matrix.
    #[arg(long)]
    pipeline: bool,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    ga: GaFlags,
    #[command(flatten)]
    pre: PipelineFlags,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Directory of correlation CSVs.
    #[arg(long)]
    corpus: PathBuf,
    /// GA runs per matrix.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Report CSV path.
    #[arg(long, default_value = "benchmark.csv")]
    report: PathBuf,
    #[command(flatten)]
    ga: GaFlags,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Tick CSV (asset_id,timestamp_ms,midprice).
    #[arg(long, conflicts_with = "bars", required_unless_present = "bars")]
    ticks: Option<PathBuf>,
    /// Bar-price CSV (assets by bars, empty cells missing).
    #[arg(long)]
    bars: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    pre: PipelineFlags,
}

/// Parsed `key=value` config file.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "pop", "gens", "pc", "pm", "pkb", "tol", "stall", "elite", "seed", "workers", "lambda", "bar-ms", "rmt",
    "market-mode", "weights", "warmup",
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: i + 1,
                column: 1,
                message: format!("expected key=value, found {line:?}"),
            })?;
            let key = key.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse {
                    row: i + 1,
                    column: 1,
                    message: format!("unknown key {key:?}"),
                });
            }
            values.insert(key, value.trim().to_owned());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("config key {key}: cannot parse {raw:?}"))),
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T> {
    Ok(match flag {
        Some(v) => v,
        None => file.get(key)?.unwrap_or(default),
    })
}

fn ga_config(flags: &GaFlags, file: &ConfigFile) -> Result<GaConfig> {
    let d = GaConfig::default();
    let cfg = GaConfig {
        population_size: pick(flags.pop, file, "pop", d.population_size)?,
        max_generations: pick(flags.gens, file, "gens", d.max_generations)?,
        p_crossover: pick(flags.pc, file, "pc", d.p_crossover)?,
        p_mutation: pick(flags.pm, file, "pm", d.p_mutation)?,
        p_knowledge_crossover: pick(flags.pkb, file, "pkb", d.p_knowledge_crossover)?,
        error_tolerance: pick(flags.tol, file, "tol", d.error_tolerance)?,
        stall_generations: pick(flags.stall, file, "stall", d.stall_generations)?,
        elite_size: pick(flags.elite, file, "elite", d.elite_size)?,
        seed: pick(flags.seed, file, "seed", d.seed)?,
        workers: pick(flags.workers, file, "workers", d.workers)?,
        ..d
    };
    cfg.validate()?;
    Ok(cfg)
}

fn pipeline_config(flags: &PipelineFlags, file: &ConfigFile) -> Result<(PipelineConfig, i64)> {
    let d = PipelineConfig::default();
    let lambda = pick(flags.lambda, file, "lambda", d.lambda)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!("lambda {lambda} must lie in (0, 1)")));
    }
    let rmt = if flags.no_rmt { false } else { file.get("rmt")?.unwrap_or(d.rmt) };
    let remove_market_mode = if flags.no_market_mode {
        false
    } else {
        file.get("market-mode")?.unwrap_or(d.remove_market_mode)
    };
    let warmup = match flags.warmup {
        Some(w) => Some(w),
        None => file.get("warmup")?,
    };
    let bar_ms = pick(flags.bar_ms, file, "bar-ms", DEFAULT_BAR_MS)?;
    if bar_ms <= 0 {
        return Err(Error::invalid("bar width must be positive"));
    }
    Ok((
        PipelineConfig {
            lambda,
            rmt,
            remove_market_mode,
            warmup,
            ..d
        },
        bar_ms,
    ))
}

/// Parses `4x10` or `2x5,1x10` into `(count, size)` pairs.
pub fn parse_cluster_layout(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|part| {
            let (count, size) = part
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| Error::invalid(format!("cluster spec {part:?} is not COUNTxSIZE")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("cluster spec {part:?} is not COUNTxSIZE")))
            };
            Ok((parse(count)?, parse(size)?))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Everything needed to reproduce a command's outputs.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    version: &'static str,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    timings_ms: BTreeMap<String, f64>,
    termination_reason: Option<String>,
    outputs: Vec<FileDigest>,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            seed,
            inputs: Vec::new(),
            timings_ms: BTreeMap::new(),
            termination_reason: None,
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(digest(path)?);
        Ok(())
    }

    fn time(&mut self, stage: &str, start: Instant) {
        self.timings_ms
            .insert(stage.to_owned(), start.elapsed().as_secs_f64() * 1e3);
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path)?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("config serializes")
}

fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    let layout = parse_cluster_layout(&args.clusters)?;
    let clusters: Vec<PlantedCluster> = layout
        .iter()
        .flat_map(|&(count, size)| std::iter::repeat_n(PlantedCluster { size, coupling: args.g }, count))
        .collect();
    let spec = PlantedSpec {
        n: args.n,
        d: args.d,
        clusters,
        seed: args.seed,
    };
    spec.validate()?;
    fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new("synth", json(&spec), Some(args.seed));
    let start = Instant::now();
    let (panel, truth) = generate_noh(&spec)?;
    manifest.time("generate", start);

    let names = io::default_names(spec.n);
    let panel_path = args.out.join("panel.csv");
    let truth_path = args.out.join("truth.csv");
    let corr_path = args.out.join("correlation.csv");
    io::write_panel(create(&panel_path)?, &names, &panel)?;
    io::write_labels(create(&truth_path)?, &names, &truth)?;
    io::write_correlation(create(&corr_path)?, &names, &panel.correlation())?;
    for p in [&panel_path, &truth_path, &corr_path] {
        manifest.output(p)?;
    }
    manifest.write(&args.out)?;
    println!(
        "wrote {} assets x {} observations, {} planted clusters, to {}",
        spec.n,
        spec.d,
        truth.num_clusters(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn renormalized(panel: &ReturnPanel) -> Result<ReturnPanel> {
    ReturnPanel::normalized(panel.rows().map(<[f64]>::to_vec).collect())
}

fn cmd_cluster(args: &ClusterArgs, file: &ConfigFile) -> Result<i32> {
    let cfg = ga_config(&args.ga, file)?;
    let weights: EdgeWeights = match &args.weights {
        Some(w) => w.parse()?,
        None => file.get("weights")?.unwrap_or_default(),
    };
    let (pre, bar_ms) = pipeline_config(&args.pre, file)?;
    let config = serde_json::json!({
        "ga": json(&cfg),
        "weights": json(&weights),
        "pipeline": if args.pipeline { json(&pre) } else { serde_json::Value::Null },
        "bar_ms": bar_ms,
    });
    fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new("cluster", config, Some(cfg.seed));
    manifest.input(&args.input)?;

    let start = Instant::now();
    let (names, c) = if args.pipeline {
        let prices = io::read_bars(open(&args.input)?)?;
        let out = run_pipeline(&prices, &pre)?;
        let last = out
            .matrices
            .last()
            .cloned()
            .ok_or_else(|| Error::invalid("pipeline produced no matrix; input is shorter than the warm-up"))?;
        (out.assets, last)
    } else if args.panel {
        let (names, panel) = io::read_panel(open(&args.input)?)?;
        (names, renormalized(&panel)?.correlation())
    } else {
        io::read_correlation(open(&args.input)?)?
    };
    manifest.time("load", start);

    let start = Instant::now();
    let pool = FitnessPool::new(cfg.workers)?;
    let result = evolve_with_pool(&c, &cfg, &pool)?;
    manifest.time("ga", start);
    manifest.termination_reason = Some(result.termination_reason.as_str().to_owned());

    let start = Instant::now();
    let forest = build_forest(&result.best_partition, &c, weights)?;
    let dot = export_dot(&forest, &names)?;
    manifest.time("mst", start);

    let labels_path = args.out.join("labels.csv");
    let history_path = args.out.join("history.csv");
    let dot_path = args.out.join("forest.dot");
    let json_path = args.out.join("forest.json");
    io::write_labels(create(&labels_path)?, &names, &result.best_partition)?;
    io::write_history(create(&history_path)?, &result.fitness_history)?;
    fs::write(&dot_path, dot)?;
    fs::write(&json_path, forest.to_json() + "\n")?;
    for p in [&labels_path, &history_path, &dot_path, &json_path] {
        manifest.output(p)?;
    }
    manifest.write(&args.out)?;

    println!(
        "L = {:.6} with {} clusters after {} generations ({})",
        result.best_fitness,
        result.best_partition.num_clusters(),
        result.generations_run,
        result.termination_reason.as_str()
    );
    Ok(match result.termination_reason {
        TerminationReason::MaxGenerations => EXIT_MAX_GENERATIONS,
        TerminationReason::Stalled | TerminationReason::Converged => EXIT_OK,
    })
}

struct BenchRow {
    name: String,
    n: usize,
    median: f64,
    min: f64,
    max: f64,
    ga: f64,
    oracle: Option<f64>,
    sa: f64,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) / 2.0
    } else {
        xs[m]
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(io::fmt_f64).unwrap_or_default()
}

fn cmd_benchmark(args: &BenchmarkArgs, file: &ConfigFile) -> Result<i32> {
    let cfg = ga_config(&args.ga, file)?;
    if args.runs == 0 {
        return Err(Error::invalid("--runs must be at least 1"));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(&args.corpus)
        .map_err(|e| Error::invalid(format!("cannot read corpus {}: {e}", args.corpus.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!("corpus {} has no .csv files", args.corpus.display())));
    }

    let pool = FitnessPool::new(cfg.workers)?;
    let mut manifest = RunManifest::new("benchmark", json(&cfg), Some(cfg.seed));
    let mut rows = Vec::new();
    for path in &paths {
        manifest.input(path)?;
        let (_, c) = io::read_correlation(open(path)?).map_err(|e| match e {
            Error::Parse { row, column, message } => Error::Parse {
                row,
                column,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        let mut times = Vec::with_capacity(args.runs);
        let mut ga = f64::NEG_INFINITY;
        for run in 0..args.runs {
            let run_cfg = cfg.clone().with_seed(cfg.seed.wrapping_add(run as u64));
            let start = Instant::now();
            let r = evolve_with_pool(&c, &run_cfg, &pool)?;
            times.push(start.elapsed().as_secs_f64());
            ga = ga.max(r.best_fitness);
        }
        let oracle = if c.n() <= MAX_BRUTE_FORCE_N {
            Some(brute_force_max(&c)?.best_fitness)
        } else {
            None
        };
        let sa = simulated_annealing(&c, &AnnealingSchedule::default(), cfg.seed)?.best_fitness;
        let (min, max) = times.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
        rows.push(BenchRow {
            name: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            n: c.n(),
            median: median(&mut times),
            min,
            max,
            ga,
            oracle,
            sa,
        });
    }

    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(&args.report)?);
    let header = [
        "matrix", "n", "median_s", "min_s", "max_s", "ga_fitness", "oracle_fitness", "sa_fitness", "ga_sa_gap",
    ];
    let csv_err = |e: csv::Error| Error::invalid(format!("writing report: {e}"));
    out.write_record(header).map_err(csv_err)?;
    for r in &rows {
        out.write_record([
            r.name.clone(),
            r.n.to_string(),
            io::fmt_f64(r.median),
            io::fmt_f64(r.min),
            io::fmt_f64(r.max),
            io::fmt_f64(r.ga),
            opt(r.oracle),
            io::fmt_f64(r.sa),
            io::fmt_f64(r.ga - r.sa),
        ])
        .map_err(csv_err)?;
    }
    let mut medians: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let overall_median = median(&mut medians);
    let overall_min = rows.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
    let overall_max = rows.iter().map(|r| r.max).fold(0.0, f64::max);
    out.write_record([
        "summary".to_owned(),
        String::new(),
        io::fmt_f64(overall_median),
        io::fmt_f64(overall_min),
        io::fmt_f64(overall_max),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ])
    .map_err(csv_err)?;
    out.flush()?;
    drop(out);
    manifest.output(&args.report)?;
    let dir = args.report.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    manifest.write(dir)?;

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "{:<24} {:>4} {:>9} {:>9} {:>9} {:>12} {:>12} {:>10}", "matrix", "n", "median_s", "min_s", "max_s", "ga", "oracle", "ga-sa")?;
    for r in &rows {
        writeln!(
            w,
            "{:<24} {:>4} {:>9.4} {:>9.4} {:>9.4} {:>12.6} {:>12} {:>10.2e}",
            r.name,
            r.n,
            r.median,
            r.min,
            r.max,
            r.ga,
            r.oracle.map(|o| format!("{o:.6}")).unwrap_or_else(|| "-".into()),
            r.ga - r.sa
        )?;
    }
    writeln!(
        w,
        "{} matrices: median {overall_median:.4}s, min {overall_min:.4}s, max {overall_max:.4}s",
        rows.len()
    )?;
    Ok(EXIT_OK)
}

fn cmd_pipeline(args: &PipelineArgs, file: &ConfigFile) -> Result<i32> {
    let (pre, bar_ms) = pipeline_config(&args.pre, file)?;
    fs::create_dir_all(&args.out)?;
    let config = serde_json::json!({ "pipeline": json(&pre), "bar_ms": bar_ms });
    let mut manifest = RunManifest::new("pipeline", config, None);

    let start = Instant::now();
    let prices: PriceMatrix = if let Some(path) = &args.ticks {
        manifest.input(path)?;
        let ticks = io::read_ticks(open(path)?)?;
        let bars = aggregate_bars(&ticks, bar_ms)?;
        let bars_path = args.out.join("bars.csv");
        io::write_bars(create(&bars_path)?, &bars)?;
        manifest.output(&bars_path)?;
        bars
    } else {
        let path = args.bars.as_ref().expect("clap requires ticks or bars");
        manifest.input(path)?;
        io::read_bars(open(path)?)?
    };
    manifest.time("bars", start);

    let start = Instant::now();
    let out = run_pipeline(&prices, &pre)?;
    manifest.time("pipeline", start);

    let index_path = args.out.join("windows.csv");
    let mut index = String::from("window,bar_end_ms,file\n");
    // Return t spans bars t and t + 1; the first matrix follows the warm-up.
    let first_bar = out.returns + 1 - out.matrices.len();
    for (k, c) in out.matrices.iter().enumerate() {
        let name = format!("corr_{:06}.csv", k + 1);
        let path = args.out.join(&name);
        io::write_correlation(create(&path)?, &out.assets, c)?;
        manifest.output(&path)?;
        index.push_str(&format!("{},{},{}\n", k + 1, prices.bar_ends[first_bar + k], name));
    }
    fs::write(&index_path, index)?;
    manifest.output(&index_path)?;
    manifest.write(&args.out)?;
    println!(
        "{} bars, {} returns, {} correlation matrices written to {}",
        out.bars,
        out.returns,
        out.matrices.len(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let config_path = cli.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let result = config_path
        .map(|p| ConfigFile::load(&p))
        .unwrap_or_else(|| Ok(ConfigFile::default()))
        .and_then(|file| match &cli.command {
            Command::Synth(a) => cmd_synth(a),
            Command::Cluster(a) => cmd_cluster(a, &file),
            Command::Benchmark(a) => cmd_benchmark(a, &file),
            Command::Pipeline(a) => cmd_pipeline(a, &file),
        });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mlclust: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_layout_parses() {
        assert_eq!(parse_cluster_layout("4x10").unwrap(), vec![(4, 10)]);
        assert_eq!(parse_cluster_layout("2x5, 1X10").unwrap(), vec![(2, 5), (1, 10)]);
        assert!(parse_cluster_layout("4").is_err());
        assert!(parse_cluster_layout("ax3").is_err());
    }

    #[test]
    fn config_file_precedence() {
        let file = ConfigFile::parse("# tuned\npop = 200\ngens=50\nseed=9\n").unwrap();
        let flags = GaFlags {
            gens: Some(10),
            ..GaFlags::default()
        };
        let cfg = ga_config(&flags, &file).unwrap();
        assert_eq!(cfg.population_size, 200);
        assert_eq!(cfg.max_generations, 10);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.p_crossover, 0.9);
    }

    #[test]
    fn config_file_errors_name_the_line() {
        match ConfigFile::parse("pop=10\nbogus=1\n").unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("{other}"),
        }
        assert!(ConfigFile::parse("pop 10").is_err());
        let file = ConfigFile::parse("pop=many").unwrap();
        assert!(ga_config(&GaFlags::default(), &file).is_err());
    }

    #[test]
    fn pipeline_flags_override_file() {
        let file = ConfigFile::parse("lambda=0.9\nrmt=true\nbar-ms=60000\n").unwrap();
        let flags = PipelineFlags {
            no_rmt: true,
            ..PipelineFlags::default()
        };
        let (cfg, bar_ms) = pipeline_config(&flags, &file).unwrap();
        assert_eq!(cfg.lambda, 0.9);
        assert!(!cfg.rmt);
        assert!(cfg.remove_market_mode);
        assert_eq!(bar_ms, 60_000);
        let (cfg, bar_ms) = pipeline_config(&PipelineFlags::default(), &ConfigFile::default()).unwrap();
        assert_eq!(cfg.lambda, 0.98);
        assert_eq!(bar_ms, DEFAULT_BAR_MS);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["mlclust", "cluster"]), EXIT_USAGE);
        assert_eq!(run(["mlclust", "frobnicate"]), EXIT_USAGE);
    }
}
