mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "trajlift",
    version,
    about = "Lift 2D pose sequences to 3D through trajectory bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a DCT or SVD trajectory basis file.
    Bases(BasesArgs),
    /// Coefficient spectrum and truncation error of a corpus.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic corpus of paired 2D/3D sequences.
    Synth(SynthArgs),
    /// Train a lifting network.
    Train(TrainArgs),
    /// Lift a 2D video with overlapping windows.
    Infer(InferArgs),
    /// Score predicted 3D poses against ground truth.
    Eval(EvalArgs),
    /// Render a CSV produced by the other commands as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Dct,
    Svd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    /// Mean per-joint Euclidean distance.
    Mean,
    /// Root mean square over all coordinates.
    Rms,
}

#[derive(Debug, Args)]
struct BasesArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    frames: usize,
    #[arg(long)]
    num_bases: usize,
    /// Directory of 3D pose files; required for SVD.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Trajectories sampled from the corpus for SVD.
    #[arg(long, default_value_t = trajlift::bases::DEFAULT_SVD_TRAJECTORIES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    basis: PathBuf,
    #[arg(long)]
    max_k: usize,
    #[arg(long, value_enum, default_value = "mean")]
    metric: Metric,
    /// Directory receiving coefficients.csv and truncation.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Length of every sequence.
    #[arg(long, default_value_t = 100)]
    frames: usize,
    /// 17 selects the Human3.6M layout; any other count gets anonymous joints.
    #[arg(long, default_value_t = 17)]
    joints: usize,
    #[arg(long, default_value_t = 8)]
    k_gen: usize,
    #[arg(long, default_value_t = 100.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 6)]
    latent_rank: usize,
    #[arg(long, default_value_t = 300.0)]
    rest_scale: f64,
    #[arg(long, default_value_t = 5000.0)]
    depth_offset: f64,
    #[arg(long, default_value_t = 1000.0)]
    focal: f64,
    #[command(flatten)]
    image: ImageArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Clone, Copy)]
struct ImageArgs {
    #[arg(long, default_value_t = 1000.0)]
    image_width: f64,
    #[arg(long, default_value_t = 1000.0)]
    image_height: f64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory of `<name>.2d.pose` / `<name>.3d.pose` pairs.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    frames: usize,
    #[arg(long)]
    num_bases: usize,
    /// `key=value` network and optimizer settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Basis file; a DCT basis is built when omitted.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Skeleton file; defaults to `<data>/skeleton.skel` when present.
    #[arg(long)]
    skeleton: Option<PathBuf>,
    /// Distance between the starts of consecutive training windows.
    #[arg(long, default_value_t = 5)]
    stride: usize,
    #[command(flatten)]
    image: ImageArgs,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss CSV; defaults to `<out>.loss.csv`.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[arg(long)]
    model: PathBuf,
    /// 2D pose file in pixel coordinates.
    #[arg(long)]
    video: PathBuf,
    #[arg(long, default_value_t = 5)]
    step: usize,
    #[arg(long)]
    no_flip: bool,
    #[arg(long)]
    skeleton: Option<PathBuf>,
    #[command(flatten)]
    image: ImageArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    skeleton: PathBuf,
    /// Per-frame error CSV; defaults to `<pred>.frames.csv`.
    #[arg(long)]
    per_frame: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Column used for the x axis; the first column by default.
    #[arg(long)]
    x: Option<String>,
    /// Columns drawn as lines; every other column by default.
    #[arg(long, value_delimiter = ',')]
    y: Vec<String>,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bases(a) => commands::bases(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Infer(a) => commands::infer(a),
        Command::Eval(a) => commands::eval(a),
        Command::Plot(a) => plot::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout with exit 0, usage errors exit 2
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
