//! Command-line front end: `reduce`, `experiment` and `synth`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 algorithm error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pif::dataset::CsvTable;
use pif::harness::{self, ExperimentSpec, NormalizeScope, ReportFormat};
use pif::{normalize, run_reducer, stratified_reduce, DistanceKind, ErrorKind, LabelColumn, ReduceOptions, Reducer, Threads};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] pif::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Algorithm => 3,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pif", version, about = "Training-set reduction for k-NN classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reduce a CSV dataset and write the surviving rows.
    Reduce(ReduceArgs),
    /// Run a repeated-holdout experiment and write report files.
    Experiment(ExperimentArgs),
    /// Generate a two-Gaussian synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[arg(long)]
    input: PathBuf,
    /// pif, cnn, drop3, icf or mss.
    #[arg(long)]
    algo: String,
    /// Neighbors for editing (pif, drop3, icf).
    #[arg(long, default_value_t = pif::reduction::DEFAULT_K)]
    k: usize,
    /// Minimum group size filtered by pif.
    #[arg(long, default_value_t = pif::reduction::DEFAULT_M)]
    m: usize,
    #[arg(long, default_value = "euclidean")]
    metric: DistanceKind,
    /// Reduce class-balanced subsets of this size independently.
    #[arg(long)]
    stratify_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Worker threads: a number or `auto`.
    #[arg(long, default_value = "auto")]
    threads: Threads,
    /// Label column by name or zero-based index (default: last).
    #[arg(long)]
    label_column: Option<String>,
    /// Use raw feature values instead of min-max normalized ones.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON experiment spec; a relative dataset path is resolved against the
    /// spec's directory.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    spec: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated: none (plain k-NN), pif, cnn, drop3, icf, mss.
    #[arg(long, value_delimiter = ',', default_value = "none,pif,cnn,drop3,icf,mss")]
    algos: Vec<String>,
    #[arg(long, default_value_t = 20)]
    repetitions: usize,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// k for evaluation and for editing inside the algorithms.
    #[arg(long, default_value_t = pif::reduction::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = pif::reduction::DEFAULT_M)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stratify_size: Option<usize>,
    /// global or train-only.
    #[arg(long, default_value = "train-only")]
    normalize_scope: String,
    #[arg(long)]
    stratified_split: bool,
    #[arg(long, default_value = "euclidean")]
    metric: DistanceKind,
    #[arg(long)]
    threads: Option<Threads>,
    /// Record wall-clock times in the reports.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    separation: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command. Diagnostics go to
/// `err`; normal output to `out`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Reduce(a) => cmd_reduce(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn label_column(s: &Option<String>) -> LabelColumn {
    s.as_deref().map(|s| s.parse().expect("infallible")).unwrap_or_default()
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Lib(pif::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_reduce(a: ReduceArgs, out: &mut dyn Write) -> CliResult<()> {
    let reducer = Reducer::from_name(&a.algo, a.k, a.m)?;
    if reducer == Reducer::None {
        return Err(CliError::Usage("reduce needs an algorithm other than none".into()));
    }
    let table = CsvTable::read_path(&a.input)?;
    let ds = table.to_dataset::<f64>(&label_column(&a.label_column))?;
    let ds = if a.no_normalize { ds } else { normalize(&ds)? };
    let opts = ReduceOptions {
        kind: a.metric,
        seed: a.seed,
        threads: a.threads,
    };
    let start = Instant::now();
    let result = match a.stratify_size {
        Some(size) => stratified_reduce(&ds, &reducer, &opts, size, a.seed)?,
        None => run_reducer(&ds, &reducer, &opts)?,
    };
    let wall = start.elapsed();

    // Ids are record positions; `retained` is ascending, i.e. file order.
    let file = std::fs::File::create(&a.output).map_err(|e| io_error(&a.output, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(&table.header).map_err(pif::Error::from)?;
    for &id in &result.retained {
        w.write_record(&table.records[id]).map_err(pif::Error::from)?;
    }
    w.flush().map_err(|e| io_error(&a.output, e))?;

    writeln!(out, "storage_pct={} wall_ms={:.3}", result.storage_pct, wall.as_secs_f64() * 1e3)
        .map_err(|e| io_error(Path::new("<stdout>"), e))?;
    Ok(())
}

fn experiment_spec(a: &ExperimentArgs) -> CliResult<ExperimentSpec> {
    if let Some(path) = &a.spec {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        // A malformed spec is a usage problem, not a data problem.
        let mut spec = ExperimentSpec::from_json(&text, path.parent())
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        spec.record_timing |= a.timing;
        return Ok(spec);
    }
    let input = a.input.clone().expect("clap enforces --spec or --input");
    let algorithms = a
        .algos
        .iter()
        .map(|name| Reducer::from_name(name.trim(), a.k, a.m))
        .collect::<pif::Result<Vec<_>>>()?;
    let normalize_scope: NormalizeScope = a.normalize_scope.parse()?;
    Ok(ExperimentSpec {
        label_column: a.label_column.clone(),
        repetitions: a.repetitions,
        train_fraction: a.train_fraction,
        k_eval: a.k,
        seed: a.seed,
        stratify: a.stratify_size,
        normalize_scope,
        stratified_split: a.stratified_split,
        metric: a.metric,
        threads: match a.threads {
            None | Some(Threads::Auto) => None,
            Some(Threads::Fixed(n)) => Some(n),
        },
        record_timing: a.timing,
        ..ExperimentSpec::new(input, algorithms)
    })
}

fn cmd_experiment(a: ExperimentArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = experiment_spec(&a)?;
    spec.validate()?;
    let report = harness::run_experiment(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| io_error(&a.out_dir, e))?;
    let mut written = harness::emit_report(&report, ReportFormat::Json, &a.out_dir.join("report.json"))?;
    written.extend(harness::emit_report(&report, ReportFormat::Csv, &a.out_dir.join("report.csv"))?);

    let stdout = |e| io_error(Path::new("<stdout>"), e);
    write!(out, "{}", harness::format_summary(&report)).map_err(stdout)?;
    for path in written {
        writeln!(out, "wrote {}", path.display()).map_err(stdout)?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let ds = harness::generate_synthetic::<f64>(a.n, a.d, a.separation, a.noise, a.seed)?;
    match &a.output {
        Some(path) => pif::dataset::save_csv(&ds, path)?,
        None => pif::dataset::write_csv(&ds, out)?,
    }
    Ok(())
}
