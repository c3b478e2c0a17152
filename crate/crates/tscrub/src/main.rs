use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use tscrub::external::{external_method, parse_spec};
use tscrub::frames::render_frames;
use tscrub::io::{read_csv, read_result, result_to_json, write_cleaned_csv, write_table};
use tscrub::merge::merge_csv;
use tscrub_core::impute::MethodRegistry;
use tscrub_core::pipeline::parse_date_format;
use tscrub_core::report::generate_report;
use tscrub_core::windows::{split_windows, IntervalSpec};
use tscrub_core::{clean, CleanConfig, MethodId};

#[derive(Parser)]
#[command(name = "tscrub", version, about = "Clean univariate time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean one series and write the result as JSON.
    Clean(Box<CleanArgs>),
    /// Render the report of a cleaning result.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Split a cleaning result into windows and write one SVG frame each.
    Windows {
        #[arg(long)]
        result: PathBuf,
        /// A point count such as `500` or a span such as `1 month`.
        #[arg(long)]
        interval: IntervalSpec,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Outer-join every CSV in a folder on its first column.
    Merge {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        formats: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "tscrub-data")]
        data_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(clap::Args)]
struct CleanArgs {
    #[arg(long)]
    input: PathBuf,
    /// Format orders such as `ymdHMS`, several separated by commas.
    #[arg(long)]
    date_format: String,
    #[arg(long)]
    time: Option<String>,
    #[arg(long)]
    value: Option<String>,
    /// Methods to compare, e.g. `na_locf,na_kalman`.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Extra method as `id=command`; the command reads and writes one
    /// value per line.
    #[arg(long = "external-method")]
    external: Vec<String>,
    #[arg(long)]
    no_replace_outliers: bool,
    /// Skip outlier detection altogether.
    #[arg(long)]
    skip_outliers: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sim_fraction: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    export_csv: Option<PathBuf>,
}

fn run_clean(args: CleanArgs) -> anyhow::Result<()> {
    let table = read_csv(&args.input).with_context(|| format!("ingest: {}", args.input.display()))?;
    let mut registry = MethodRegistry::with_defaults();
    let mut extra = Vec::new();
    for spec in &args.external {
        let Some((id, cmd)) = parse_spec(spec) else {
            bail!("external method must look like id=command, got '{spec}'");
        };
        registry
            .register(external_method(id.as_str(), cmd))
            .context("external method")?;
        extra.push(MethodId::new(id));
    }
    let mut cfg = CleanConfig::new(args.date_format);
    cfg.time = args.time;
    cfg.value = args.value;
    if !args.methods.is_empty() {
        cfg.benchmark.methods = args.methods.iter().map(|m| MethodId::new(m.trim())).collect();
    }
    for id in extra {
        if !cfg.benchmark.methods.contains(&id) {
            cfg.benchmark.methods.push(id);
        }
    }
    for m in &cfg.benchmark.methods {
        registry.resolve(m).context("impute")?;
    }
    if let Some(seed) = args.seed {
        cfg.benchmark.seed = seed;
    }
    if let Some(f) = args.sim_fraction {
        cfg.benchmark.sim_fraction = f;
    }
    if let Some(r) = args.reps {
        cfg.benchmark.repetitions = r;
    }
    if let Some(a) = args.alpha {
        cfg.anomaly.alpha = a;
    }
    cfg.anomaly.period = args.period;
    cfg.anomaly.replace = !args.no_replace_outliers;
    cfg.anomaly.detect = !args.skip_outliers;

    let result = clean(&table, &cfg, &registry)?;
    std::fs::write(&args.out, result_to_json(&result)).with_context(|| format!("{}", args.out.display()))?;
    if let Some(path) = args.export_csv {
        let file = std::fs::File::create(&path).with_context(|| format!("{}", path.display()))?;
        write_cleaned_csv(&result, std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Clean(args) => run_clean(*args),
        Command::Report { result, format } => {
            let result = read_result(&result)?;
            match format {
                ReportFormat::Text => print!("{}", generate_report(&result)),
                ReportFormat::Json => println!("{}", result_to_json(&result)),
            }
            Ok(())
        }
        Command::Windows {
            result,
            interval,
            out_dir,
        } => {
            let result = read_result(&result)?;
            let ws = split_windows(&result, interval)?;
            let index = render_frames(&ws, &result, &out_dir)?;
            println!("{} frames written to {}", index.len(), out_dir.display());
            Ok(())
        }
        Command::Merge { dir, formats, out } => {
            let orders = parse_date_format(&formats.join(","))?;
            let merged = merge_csv(&dir, &orders)?;
            for w in &merged.warnings {
                eprintln!("warning: {w}");
            }
            let file = std::fs::File::create(&out).with_context(|| format!("{}", out.display()))?;
            write_table(&merged.table, std::io::BufWriter::new(file))?;
            Ok(())
        }
        Command::Serve { port, data_dir } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(tscrub::service::serve(port, &data_dir))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    tscrub::configure_threads();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
