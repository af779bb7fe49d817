//! `memsnn` command-line front end.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use memsnn::datasets::{load_dataset, stratified_split};
use memsnn::experiment::{
    pivot, preset, read_result_rows, run_sweep, run_trial, summarize, write_results, DatasetStore, GroupKey,
    ResultFormat, ResultRow, SweepGrid, TrialRecord, TrialSpec, PRESETS,
};
use memsnn::faults::{rank_important_columns, FaultKind, PositionPolicy};
use memsnn::network::{GMode, Granularity, StuckAt};

#[derive(Parser)]
#[command(name = "memsnn", version, about = "Memristive SNN fault-injection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial
    Run(RunArgs),
    /// Run a grid of trials
    Sweep(SweepArgs),
    /// Aggregate a results file
    Summarize(SummarizeArgs),
    /// Print the column importance ranking of a dataset
    RankFeatures(RankArgs),
    /// Check a trial or grid config file without running it
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Directory holding breast_cancer.csv and wine.csv
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Results file (.csv or .json); relative paths resolve under MEMSNN_OUT_DIR
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write the effective config as JSON to this path
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    None,
    Neuron,
    Sa0Random,
    Sa1Random,
    Sa0Important,
    Sa1Important,
}

/// Flags layered over the config file, before any `--set`.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, value_enum)]
    g_mode: Option<GModeArg>,
    #[arg(long, value_enum)]
    granularity: Option<GranularityArg>,
    #[arg(long, allow_negative_numbers = true)]
    v_ltp: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    v_ltd: Option<f64>,
    #[arg(long, value_enum)]
    fault: Option<FaultArg>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    intensity: Option<f64>,
    /// Any trial field by dotted path, e.g. network.tau_theta=1e6
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GModeArg {
    Static,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    PerSynapse,
    PerNeuron,
}

#[derive(Args)]
struct RunArgs {
    /// Trial spec JSON
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid JSON; with --preset only its `base` trial is used
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    list_presets: bool,
    /// Restrict to these datasets (repeatable)
    #[arg(long = "dataset")]
    datasets: Vec<String>,
    /// Seeds as a list (0,1,2) or range (0..5)
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads; 0 uses every core
    #[arg(short, long, env = "MEMSNN_JOBS", default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    overrides: BaseOverrides,
    #[command(flatten)]
    common: Common,
}

/// Overrides applied to the grid's base trial.
#[derive(Args)]
struct BaseOverrides {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    intensity: Option<f64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Results file written by run or sweep
    input: PathBuf,
    /// Comma-separated grouping columns
    #[arg(long, default_value = "dataset,g_mode,v,fault_kind,fault_type,position_policy,ratio")]
    group_by: String,
    /// Print a table with these row keys (needs --cols)
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    cols: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RankArgs {
    dataset: String,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Rank on the training split of this seed, as a trial would
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
}

#[derive(Args)]
struct ValidateArgs {
    path: PathBuf,
    /// Treat the file as a sweep grid
    #[arg(long)]
    grid: bool,
}

/// Errors in user input rather than in the run itself.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::RankFeatures(a) => cmd_rank(a),
        Command::ValidateConfig(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_config<T: serde::Serialize + serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    config::load(path).or_else(|e| usage(format!("{e:#}")))
}

fn apply_overrides(mut spec: TrialSpec, o: &Overrides) -> anyhow::Result<TrialSpec> {
    if let Some(d) = &o.dataset {
        spec.dataset = d.clone();
    }
    if let Some(g) = o.g_mode {
        spec.g_mode = match g {
            GModeArg::Static => GMode::Static,
            GModeArg::Random => GMode::Random,
        };
    }
    if let Some(g) = o.granularity {
        spec.granularity = match g {
            GranularityArg::PerSynapse => Granularity::PerSynapse,
            GranularityArg::PerNeuron => Granularity::PerNeuron,
        };
    }
    if let Some(v) = o.v_ltp {
        spec.plasticity.v_ltp = v;
    }
    if let Some(v) = o.v_ltd {
        spec.plasticity.v_ltd = v;
    }
    if let Some(f) = o.fault {
        let (kind, stuck, policy) = match f {
            FaultArg::None => (FaultKind::None, None, None),
            FaultArg::Neuron => (FaultKind::Neuron, None, None),
            FaultArg::Sa0Random => (FaultKind::Synapse, Some(StuckAt::Sa0), Some(PositionPolicy::Random)),
            FaultArg::Sa1Random => (FaultKind::Synapse, Some(StuckAt::Sa1), Some(PositionPolicy::Random)),
            FaultArg::Sa0Important => (FaultKind::Synapse, Some(StuckAt::Sa0), Some(PositionPolicy::Important)),
            FaultArg::Sa1Important => (FaultKind::Synapse, Some(StuckAt::Sa1), Some(PositionPolicy::Important)),
        };
        spec.fault.kind = kind;
        spec.fault.synapse_type = stuck;
        spec.fault.position_policy = policy;
        if kind == FaultKind::None {
            spec.fault.ratio = 0.0;
        }
    }
    if let Some(r) = o.ratio {
        spec.fault.ratio = r;
    }
    if let Some(e) = o.epochs {
        spec.epochs = e;
    }
    if let Some(s) = o.seed {
        spec.seed = s;
    }
    if let Some(t) = o.test_fraction {
        spec.test_fraction = t;
    }
    if let Some(i) = o.intensity {
        spec.intensity = i;
    }
    let spec = config::apply_sets(&spec, &o.sets).or_else(|e| usage(format!("{e:#}")))?;
    if let Err(e) = spec.validate() {
        return usage(e.to_string());
    }
    Ok(spec)
}

fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os("MEMSNN_OUT_DIR") {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn echo_config<T: serde::Serialize>(value: &T, common: &Common) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(p) = &common.config_out {
        let p = resolve_output(p);
        std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn save(records: &[TrialRecord], common: &Common) -> anyhow::Result<()> {
    let Some(out) = &common.output else {
        return Ok(());
    };
    let out = resolve_output(out);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let format = match common.format {
        Some(Format::Csv) => ResultFormat::Csv,
        Some(Format::Json) => ResultFormat::Json,
        None => ResultFormat::from_path(&out),
    };
    write_results(records, &out, format)?;
    eprintln!("wrote {} record(s) to {}", records.len(), out.display());
    Ok(())
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let base = match &a.config {
        Some(p) => load_config(p)?,
        None => TrialSpec::default(),
    };
    let spec = apply_overrides(base, &a.overrides)?;
    echo_config(&spec, &a.common)?;
    let ds = load_dataset(&spec.dataset, &a.common.data_dir)?;
    let record = run_trial(&spec, &ds)?;
    let per_class: Vec<String> = record
        .per_class_accuracy
        .iter()
        .map(|a| a.map_or("-".into(), |a| format!("{a:.3}")))
        .collect();
    eprintln!(
        "accuracy {:.4} on {} test samples (per class: {}) in {:.1}s",
        record.accuracy,
        record.n_test,
        per_class.join(" "),
        record.wall_s
    );
    if let Some(e) = &record.evaluation_error {
        eprintln!("warning: {e}");
    }
    save(std::slice::from_ref(&record), &a.common)
}

fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    let parsed = if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse()?;
        let hi: u64 = hi.trim().parse()?;
        (lo..hi).collect()
    } else {
        s.split(',').map(|x| x.trim().parse()).collect::<Result<Vec<u64>, _>>()?
    };
    Ok(parsed)
}

fn cmd_sweep(a: SweepArgs) -> anyhow::Result<()> {
    if a.list_presets {
        for (name, about) in PRESETS {
            println!("{name:<16} {about}");
        }
        return Ok(());
    }
    let mut grid = match &a.config {
        Some(p) => load_config::<SweepGrid>(p)?,
        None if a.preset.is_some() => SweepGrid::default(),
        None => return usage("sweep needs --config or --preset"),
    };
    let seeds = match &a.seeds {
        Some(s) => parse_seeds(s).or_else(|e| usage(format!("bad --seeds {s:?}: {e}")))?,
        None => grid.seeds.clone(),
    };
    if let Some(name) = &a.preset {
        grid = preset(name, &a.datasets, &seeds, grid.base).or_else(|e| usage(e.to_string()))?;
    } else {
        if !a.datasets.is_empty() {
            grid.datasets = a.datasets.clone();
        }
        grid.seeds = seeds;
    }
    let o = &a.overrides;
    let overrides = Overrides {
        epochs: o.epochs,
        test_fraction: o.test_fraction,
        intensity: o.intensity,
        sets: o.sets.clone(),
        ..Default::default()
    };
    grid.base = apply_overrides(grid.base, &overrides)?;
    let n_cells = grid.cells().or_else(|e| usage(e.to_string()))?.len();
    echo_config(&grid, &a.common)?;
    eprintln!("running {n_cells} trial(s)");

    let mut store = DatasetStore::new(&a.common.data_dir);
    let records = run_sweep(&grid, &mut store, a.jobs)?;
    let rows: Vec<ResultRow> = records.iter().map(ResultRow::from).collect();
    let keys = [
        GroupKey::Dataset,
        GroupKey::GMode,
        GroupKey::FaultKind,
        GroupKey::FaultType,
        GroupKey::PositionPolicy,
    ];
    eprint!("{}", pivot(&rows, &keys, &[GroupKey::V]));
    save(&records, &a.common)
}

fn parse_keys(s: &str) -> anyhow::Result<Vec<GroupKey>> {
    s.split(',')
        .filter(|k| !k.trim().is_empty())
        .map(|k| k.trim().parse::<GroupKey>().or_else(|e| usage(e.to_string())))
        .collect()
}

fn cmd_summarize(a: SummarizeArgs) -> anyhow::Result<()> {
    let rows = read_result_rows(&a.input)?;
    match (&a.rows, &a.cols) {
        (Some(r), Some(c)) => {
            let table = pivot(&rows, &parse_keys(r)?, &parse_keys(c)?);
            if a.json {
                println!("{}", serde_json::to_string_pretty(&table)?);
            } else {
                print!("{table}");
            }
        }
        (None, None) => {
            let keys = parse_keys(&a.group_by)?;
            let summary = summarize(&rows, &keys);
            if a.json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                let mut w = csv::Writer::from_writer(std::io::stdout());
                let mut header: Vec<&str> = keys.iter().map(|k| k.name()).collect();
                header.extend(["n", "mean", "std"]);
                w.write_record(&header)?;
                for s in summary {
                    let mut rec = s.key.clone();
                    rec.extend([s.n.to_string(), format!("{:.6}", s.mean), format!("{:.6}", s.std)]);
                    w.write_record(&rec)?;
                }
                w.flush()?;
            }
        }
        _ => return usage("--rows and --cols go together"),
    }
    Ok(())
}

fn cmd_rank(a: RankArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&a.dataset, &a.data_dir)?;
    let features = match a.seed {
        Some(seed) => stratified_split(&ds, a.test_fraction, seed)?.0.features,
        None => ds.features.clone(),
    };
    let order = rank_important_columns(&features);
    let n = features.len().max(1) as f64;
    println!("rank,column,name,mean");
    for (rank, &c) in order.iter().enumerate() {
        let mean = features.iter().map(|row| row[c]).sum::<f64>() / n;
        println!("{rank},{c},{},{mean:.6}", ds.column_names[c]);
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> anyhow::Result<()> {
    if a.grid {
        let grid: SweepGrid = load_config(&a.path)?;
        grid.base.validate().or_else(|e| usage(e.to_string()))?;
        let n = grid.cells().or_else(|e| usage(e.to_string()))?.len();
        println!("ok: grid with {n} trial(s)");
    } else {
        let spec: TrialSpec = load_config(&a.path)?;
        spec.validate().or_else(|e| usage(e.to_string()))?;
        println!("ok: trial on {}", spec.dataset);
    }
    Ok(())
}
