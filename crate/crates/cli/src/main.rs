use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use timbre_align::align::{Gain, Metric, MetricConfig, TripletConfig};
use timbre_align::dataset::{
    load_corpus, load_corpus_with, parse_rating_matrix, Manifest, Orientation,
};
use timbre_align::distances::{DistanceKind, BALL_EPS};
use timbre_align::evaluate::{
    evaluate, sources_from_export_dir, AudioFeature, AudioFeatureSource, EvalPlan,
    RepresentationSource,
};
use timbre_align::exec::with_threads;
use timbre_align::features::FeatureCache;
use timbre_align::lengths::LengthStrategy;
use timbre_align::report::render_svg;
use timbre_align::style::GramNorm;
use timbre_align::summary::{summarize, table_header};
use timbre_align::Execution;

/// Exit status: 0 clean, 1 completed with warnings, 2 input error.
const EXIT_WARNINGS: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "timbre-align",
    version,
    about = "Score audio representations against human timbre dissimilarity ratings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate representations on a corpus of dataset manifests.
    Eval(EvalArgs),
    /// Per-dataset sample count, pitch, length and loudness.
    Summarize(SummarizeArgs),
    /// Render an SVG bar chart from a report.
    Plot(PlotArgs),
    /// Turn a square rating matrix into a dataset manifest.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of dataset manifests (*.json).
    #[arg(long)]
    manifests: PathBuf,
    /// DSP features computed from the audio.
    #[arg(long, value_delimiter = ',')]
    features: Vec<AudioFeature>,
    /// Exported embedding directories (each with a manifest.json).
    #[arg(long, num_args = 1..)]
    embeddings: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "avg,dynamic")]
    length: Vec<LengthStrategy>,
    #[arg(long, value_delimiter = ',', default_value = "l2,cosine")]
    distances: Vec<DistanceKind>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "mae,kendall,spearman,ndcg,triplet"
    )]
    metrics: Vec<Metric>,
    /// Triplet rating margin, in [0, 1).
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    /// NDCG gain: linear or exponential.
    #[arg(long, default_value = "linear")]
    gain: Gain,
    /// Use raw inner products for Gram style embeddings.
    #[arg(long)]
    raw_gram: bool,
    #[arg(long, default_value_t = BALL_EPS)]
    ball_eps: f64,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, env = "TIMBRE_ALIGN_THREADS")]
    threads: Option<usize>,
    /// Persist computed features here across runs.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    manifests: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
    #[arg(long, env = "TIMBRE_ALIGN_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    name: String,
    /// Square matrix, whitespace or comma separated.
    #[arg(long)]
    matrix: PathBuf,
    /// Audio files in matrix order.
    #[arg(long, num_args = 1.., required = true)]
    audio: Vec<PathBuf>,
    /// Output manifest path.
    #[arg(long)]
    out: PathBuf,
    /// Matrix values are similarities rather than dissimilarities.
    #[arg(long)]
    similarity: bool,
    #[arg(long)]
    pitch: Option<String>,
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn report_warnings(warnings: &[String]) -> u8 {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if warnings.is_empty() {
        0
    } else {
        eprintln!("{} warning(s)", warnings.len());
        EXIT_WARNINGS
    }
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<u8> {
    if args.features.is_empty() && args.embeddings.is_empty() {
        bail!("nothing to evaluate: pass --features and/or --embeddings");
    }
    let plan = EvalPlan {
        strategies: args.length,
        distances: args.distances,
        metrics: args.metrics,
        metric_config: MetricConfig {
            triplet: TripletConfig {
                margin: args.margin,
            },
            gain: args.gain,
        },
        execution: Execution::default(),
        ball_eps: args.ball_eps,
    };
    plan.validate()?;

    let require_audio = !args.features.is_empty();
    let corpus = load_corpus_with(&args.manifests, require_audio)?;
    let mut cache = FeatureCache::default();
    if let Some(dir) = &args.cache_dir {
        cache = cache.with_disk(dir)?;
    }
    let cache = Arc::new(cache);

    let mut owned: Vec<Box<dyn RepresentationSource + Send>> = Vec::new();
    for feature in args.features {
        owned.push(Box::new(AudioFeatureSource::with_cache(
            feature,
            Arc::clone(&cache),
        )));
    }
    let norm = if args.raw_gram {
        GramNorm::Raw
    } else {
        GramNorm::Positions
    };
    for dir in &args.embeddings {
        owned.extend(sources_from_export_dir(dir, norm, Arc::clone(&cache))?);
    }
    let sources: Vec<&dyn RepresentationSource> = owned.iter().map(|s| s.as_ref() as _).collect();

    let report = with_threads(args.threads, || evaluate(&corpus, &sources, &plan))?;
    write_file(&args.out, &report.to_json_string())?;
    if let Some(csv) = &args.csv {
        write_file(csv, &report.to_csv())?;
    }
    if let Some(plot) = &args.plot {
        write_file(plot, &render_svg(&report.to_json_value())?)?;
    }
    Ok(report_warnings(&report.warnings))
}

fn cmd_summarize(args: SummarizeArgs) -> anyhow::Result<u8> {
    let corpus = load_corpus(&args.manifests)?;
    let rows = with_threads(args.threads, || summarize(&corpus, Execution::default()))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        println!("{}", table_header());
        for r in &rows {
            println!("{}", r.table_row());
        }
    }
    let warnings: Vec<String> = rows
        .iter()
        .flat_map(|r| r.warnings.iter().map(move |w| format!("{}: {w}", r.name)))
        .collect();
    Ok(report_warnings(&warnings))
}

fn cmd_plot(args: PlotArgs) -> anyhow::Result<u8> {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("cannot read {}", args.report.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not valid JSON", args.report.display()))?;
    write_file(&args.out, &render_svg(&value)?)?;
    Ok(0)
}

fn relative_to(path: &Path, base: &Path) -> String {
    let abs = |p: &Path| p.canonicalize().unwrap_or_else(|_| p.to_path_buf());
    let (p, b) = (abs(path), abs(base));
    p.strip_prefix(&b)
        .unwrap_or(&p)
        .to_string_lossy()
        .into_owned()
}

fn cmd_convert(args: ConvertArgs) -> anyhow::Result<u8> {
    let text = fs::read_to_string(&args.matrix)
        .with_context(|| format!("cannot read {}", args.matrix.display()))?;
    let orientation = if args.similarity {
        Orientation::Similarity
    } else {
        Orientation::Dissimilarity
    };
    let (n, ratings) = parse_rating_matrix(&text, orientation)
        .with_context(|| format!("in {}", args.matrix.display()))?;
    if n != args.audio.len() {
        bail!(
            "matrix is {n}x{n} but {} audio files were given",
            args.audio.len()
        );
    }
    let base = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let manifest = Manifest {
        name: args.name,
        audio: args.audio.iter().map(|a| relative_to(a, base)).collect(),
        ratings,
        pitch: args.pitch,
    };
    manifest.save(&args.out)?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Convert(a) => cmd_convert(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
