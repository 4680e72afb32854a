//! `iq`: build agent records from value streams, aggregate record files,
//! query quantiles and run the accuracy benchmarks.

mod bench;
mod input;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use iq_core::codec::{read_records, write_atomic, CodecError};
use iq_core::{
    encode_record, record_quantiles, AgentConfig, AgentSketch, GridSpacing, Payload, ProbabilityGrid, RecordEnvelope,
    Scheme, ServerAggregator, ServerConfig, ValueTransform,
};

const DEFAULT_REPORT: &str = "0,0.05,0.1,0.25,0.5,0.75,0.9,0.95,0.99,0.999,1";

#[derive(Parser)]
#[command(name = "iq", version, about = "Fixed-size mergeable quantile summaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a value stream (one number per line, optionally `key value`)
    /// into one agent record per key.
    Agent(AgentArgs),
    /// Merge a record file into one server record.
    Aggregate(AggregateArgs),
    /// Print quantile estimates read from a record file.
    Query(QueryArgs),
    /// Run a benchmark and write CSV tables plus JSON metadata.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Uniform,
    Logit,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Linear,
    Logit,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Linear => Scheme::Linear,
            SchemeArg::Logit => Scheme::Logit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Identity,
    Log10,
}

impl From<TransformArg> for ValueTransform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Identity => ValueTransform::Identity,
            TransformArg::Log10 => ValueTransform::Log10,
        }
    }
}

/// Grid and report options shared by `agent` and `aggregate`.
#[derive(Args)]
struct SketchArgs {
    #[arg(long, value_enum, default_value = "logit")]
    grid: GridArg,
    /// Levels in the quantile buffer, ends included.
    #[arg(long, default_value_t = 100)]
    grid_size: usize,
    #[arg(long, value_enum, default_value = "logit")]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "identity")]
    transform: TransformArg,
    /// Comma-separated levels to ship; added to the grid if missing.
    #[arg(long, default_value = DEFAULT_REPORT)]
    report_levels: String,
    /// Outermost interior levels of a logit grid, as `low,high`.
    #[arg(long, default_value = "0.001,0.999")]
    bounds: String,
    /// Largest stream shipped as raw values (default: number of report levels).
    #[arg(long)]
    record_capacity: Option<usize>,
}

#[derive(Args)]
struct AgentArgs {
    #[command(flatten)]
    sketch: SketchArgs,
    /// Raw-value buffer capacity.
    #[arg(long, default_value_t = 100)]
    buffer: usize,
    /// Input values (default: stdin).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output records (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    sketch: SketchArgs,
    /// Records merged per flush.
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    record: PathBuf,
    /// Comma-separated probability levels.
    #[arg(long, default_value = "0.5")]
    p: String,
    /// Interpolation scheme (default: the one recorded in the file, else logit).
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Value transform (default: the one recorded in the file, else identity).
    #[arg(long, value_enum)]
    transform: Option<TransformArg>,
}

/// Exit status 1: bad input or configuration.
/// Exit status 2: a result failed its own consistency checks.
#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl From<iq_core::Error> for Failure {
    fn from(e: iq_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn parse_list(text: &str, what: &str) -> Outcome<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::Input(format!("{what}: cannot parse `{s}`"))))
        .collect()
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Linear => "linear",
        Scheme::Logit => "logit",
    }
}

fn transform_name(t: ValueTransform) -> &'static str {
    match t {
        ValueTransform::Identity => "identity",
        ValueTransform::Log10 => "log10",
    }
}

struct Layout {
    grid: ProbabilityGrid,
    report: ProbabilityGrid,
    scheme: Scheme,
    transform: ValueTransform,
    record_capacity: usize,
}

impl SketchArgs {
    fn layout(&self) -> Outcome<Layout> {
        if self.grid_size < 3 {
            return Err(Failure::Input("--grid-size must be at least 3".into()));
        }
        let interior = self.grid_size - 2;
        let base = match self.grid {
            GridArg::Uniform => {
                let step = 1.0 / (self.grid_size - 1) as f64;
                ProbabilityGrid::new(GridSpacing::Uniform, interior, step, 1.0 - step)?
            }
            GridArg::Logit => {
                let b = parse_list(&self.bounds, "--bounds")?;
                let [lo, hi] = b[..] else {
                    return Err(Failure::Input("--bounds takes two values, `low,high`".into()));
                };
                ProbabilityGrid::new(GridSpacing::Logit, interior, lo, hi)?
            }
        };
        let report = ProbabilityGrid::explicit(parse_list(&self.report_levels, "--report-levels")?)?;
        let grid = base.union(report.levels())?;
        Ok(Layout {
            record_capacity: self.record_capacity.unwrap_or(report.len()),
            grid,
            report,
            scheme: self.scheme.into(),
            transform: self.transform.into(),
        })
    }
}

fn open_input(path: Option<&Path>) -> Outcome<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufReader::new(File::open(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Outcome<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn envelope_lines(records: &[RecordEnvelope]) -> Outcome<String> {
    let mut text = String::new();
    for r in records {
        text.push_str(&encode_record(r).map_err(|e| Failure::Internal(format!("emitted record: {e}")))?);
        text.push('\n');
    }
    Ok(text)
}

fn run_agent(args: AgentArgs) -> Outcome<()> {
    let layout = args.sketch.layout()?;
    let config = AgentConfig::new(layout.grid.clone(), args.buffer)
        .scheme(layout.scheme)
        .transform(layout.transform)
        .report(layout.report.clone())
        .record_capacity(layout.record_capacity);
    let streams = input::read_values(open_input(args.input.as_deref())?)?;
    let mut records = Vec::new();
    for (key, values) in streams {
        let mut sketch = AgentSketch::new(config.clone())?;
        for &v in &values {
            sketch.observe(v).map_err(|e| Failure::Input(format!("stream {}: {e}", key.as_deref().unwrap_or("-"))))?;
        }
        let record = sketch.emit_record();
        if record.total_count != values.len() as u64 {
            return Err(Failure::Internal(format!(
                "agent record counts {} values but {} were read",
                record.total_count,
                values.len()
            )));
        }
        info!("stream {}: {} values, raw record: {}", key.as_deref().unwrap_or("-"), values.len(), record.is_raw());
        let mut env = RecordEnvelope::new(record)
            .with_meta("scheme", scheme_name(layout.scheme))
            .with_meta("transform", transform_name(layout.transform));
        if let Some(k) = key {
            env = env.with_meta("stream", k);
        }
        records.push(env);
    }
    if records.is_empty() {
        return Err(Failure::Input("no values in the input".into()));
    }
    write_output(args.out.as_deref(), &envelope_lines(&records)?)
}

fn run_aggregate(args: AggregateArgs) -> Outcome<()> {
    let layout = args.sketch.layout()?;
    let config = ServerConfig::new(layout.grid.clone(), args.batch)
        .scheme(layout.scheme)
        .transform(layout.transform)
        .report(layout.report.clone())
        .record_capacity(layout.record_capacity);
    let inputs = read_records(open_input(args.input.as_deref())?)?;
    if inputs.is_empty() {
        return Err(Failure::Input("no records in the input".into()));
    }
    let mut server = ServerAggregator::new(config)?;
    let (mut total, mut agents) = (0u64, 0u64);
    let first_stream = inputs[0].metadata.get("stream").cloned();
    let same_stream = inputs.iter().all(|e| e.metadata.get("stream") == first_stream.as_ref());
    for (i, env) in inputs.into_iter().enumerate() {
        total += env.record.total_count;
        agents += match env.record.kind {
            iq_core::RecordKind::Agent => 1,
            iq_core::RecordKind::Server => env.record.agent_count,
        };
        server.absorb(env.record).map_err(|e| Failure::Input(format!("record {}: {e}", i + 1)))?;
    }
    let out = server.emit_record().map_err(|e| Failure::Internal(e.to_string()))?;
    if out.total_count != total || out.agent_count != agents || out.validate().is_err() {
        return Err(Failure::Internal(format!(
            "aggregate counts {} values from {} agents, inputs held {total} from {agents}",
            out.total_count, out.agent_count
        )));
    }
    info!("aggregated {total} values from {agents} agents");
    let mut env = RecordEnvelope::new(out)
        .with_meta("scheme", scheme_name(layout.scheme))
        .with_meta("transform", transform_name(layout.transform));
    if let (true, Some(k)) = (same_stream, first_stream) {
        env = env.with_meta("stream", k);
    }
    write_output(args.out.as_deref(), &envelope_lines(&[env])?)
}

fn run_query(args: QueryArgs) -> Outcome<()> {
    let levels = parse_list(&args.p, "--p")?;
    let mut text = String::new();
    File::open(&args.record)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.record.display())))?
        .read_to_string(&mut text)?;
    let records = read_records(text.as_bytes())?;
    if records.is_empty() {
        return Err(Failure::Input("no records in the file".into()));
    }
    let many = records.len() > 1;
    let mut out = String::new();
    for (i, env) in records.iter().enumerate() {
        let scheme = match (args.scheme, env.metadata.get("scheme").map(String::as_str)) {
            (Some(s), _) => s.into(),
            (None, Some("linear")) => Scheme::Linear,
            _ => Scheme::Logit,
        };
        let transform = match (args.transform, env.metadata.get("transform").map(String::as_str)) {
            (Some(t), _) => t.into(),
            (None, Some("log10")) => ValueTransform::Log10,
            _ => ValueTransform::Identity,
        };
        let q = record_quantiles(&env.record, &levels, scheme, transform)?;
        let label = env.metadata.get("stream").cloned().unwrap_or_else(|| (i + 1).to_string());
        for (p, v) in levels.iter().zip(q) {
            if many {
                out.push_str(&format!("{label}\t"));
            }
            out.push_str(&format!("{p}\t{v}\n"));
        }
        if let Payload::Raw(_) = env.record.payload {
            info!("record {label} is raw; quantiles are exact");
        }
    }
    write_output(None, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = std::panic::catch_unwind(|| match cli.command {
        Command::Agent(a) => run_agent(a),
        Command::Aggregate(a) => run_aggregate(a),
        Command::Query(q) => run_query(q),
        Command::Bench(b) => bench::run(b),
    });
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Input(msg))) => {
            eprintln!("iq: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("iq: internal error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
