use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use tbes::boundarycoding::ChainCodePrior;
use tbes::epsilonmodel::{contrast_features, default_grid, predict_epsilon, EpsilonModel};
use tbes::harness::{
    benchmark, colorspace_study, evaluate_dir, train_epsilon, BenchmarkConfig, EpsilonChoice,
    SuperpixelSource, DEFAULT_CELL_SIZE, STUDY_EPSILON,
};
use tbes::imagecore::load_image;
use tbes::metrics::Metric;
use tbes::netpbm::write_atomic;
use tbes::segmenter::{
    grid_superpixels, load_superpixels, tbes_segment_with, SegmenterConfig, DEFAULT_MAX_WINDOW,
};

#[derive(Parser)]
#[command(name = "tbes", version, about = "Texture and boundary coding-length image segmentation")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, env = "TBES_JOBS", global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image.
    Segment(SegmentArgs),
    /// Learn the ε regressor from images with ground truth.
    TrainEpsilon(TrainArgs),
    /// Score label maps against ground truth.
    Eval(EvalArgs),
    /// Rank color spaces by the coding length of ground-truth regions.
    ColorspaceStudy(StudyArgs),
    /// Segment and score a whole directory.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Pri,
    Voi,
    Gfm,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Pri => Metric::Pri,
            MetricArg::Voi => Metric::Voi,
            MetricArg::Gfm => Metric::Gfm,
        }
    }
}

#[derive(Args)]
struct SegmentOptions {
    /// Grid cell size used when no superpixel map is given.
    #[arg(long, default_value_t = DEFAULT_CELL_SIZE)]
    cell_size: usize,
    /// Largest texture window (odd).
    #[arg(long, default_value_t = DEFAULT_MAX_WINDOW)]
    wmax: usize,
    /// Chain-code prior, a JSON array of eight probabilities.
    #[arg(long)]
    prior: Option<PathBuf>,
}

impl SegmentOptions {
    fn config(&self, epsilon: f64) -> Result<SegmenterConfig<f64>, tbes::Error> {
        let prior = match &self.prior {
            Some(p) => ChainCodePrior::load(p)?,
            None => ChainCodePrior::bsd(),
        };
        Ok(SegmenterConfig {
            w_max: self.wmax,
            prior,
            ..SegmenterConfig::new(epsilon)
        })
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("distortion").required(true).args(["epsilon", "model"])))]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Trained ε model; ε is predicted from the image.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Superpixel label map (PGM).
    #[arg(long)]
    superpixels: Option<PathBuf>,
    /// Output label map (defaults to `<input stem>_seg.pgm`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output report (defaults to the label map path with a .json extension).
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    options: SegmentOptions,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    truths: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[arg(long)]
    out: PathBuf,
    /// Directory of superpixel maps named `<image stem>.pgm`.
    #[arg(long)]
    superpixels: Option<PathBuf>,
    /// Comma-separated ε values to sample (defaults to 25, 50, ..., 400).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[command(flatten)]
    options: SegmentOptions,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of label maps named `<image stem>.pgm`.
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    truths: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pri,voi,gfm")]
    metrics: Vec<MetricArg>,
    /// Boundary matching tolerance in pixels (defaults to 0.75% of the diagonal).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Also write the summary JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    truths: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = STUDY_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("distortion").required(true).args(["epsilon", "model"])))]
struct BenchmarkArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    truths: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory of superpixel maps named `<image stem>.pgm`.
    #[arg(long)]
    superpixels: Option<PathBuf>,
    /// Write label maps and reports here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    options: SegmentOptions,
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

fn with_extension(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn superpixel_source(dir: Option<&PathBuf>, cell: usize) -> SuperpixelSource {
    dir.cloned()
        .map_or(SuperpixelSource::Grid(cell), SuperpixelSource::Directory)
}

fn segment(args: SegmentArgs) -> CmdResult {
    let img = load_image::<f64>(&args.input)?;
    let epsilon = match (&args.model, args.epsilon) {
        (Some(path), _) => {
            let model = EpsilonModel::load(path)?;
            predict_epsilon(&model.regressor(), &contrast_features(&img))
        }
        (None, Some(e)) => e,
        (None, None) => unreachable!("clap enforces one of --epsilon and --model"),
    };
    let sp = match &args.superpixels {
        Some(path) => load_superpixels(path, img.width(), img.height())?,
        None => grid_superpixels(&img, args.options.cell_size)?,
    };
    let config = args.options.config(epsilon)?;
    let (labels, report) = tbes_segment_with(&img, &sp, &config)?;
    let out = args
        .out
        .unwrap_or_else(|| with_extension(&args.input, "_seg.pgm"));
    let report_path = args.report.unwrap_or_else(|| out.with_extension("json"));
    labels.save_pgm(&out)?;
    write_atomic(&report_path, report.to_json().as_bytes())?;
    println!(
        "{}: {} regions after {} merges, {:.1} bits (epsilon {epsilon})",
        out.display(),
        report.regions,
        report.merges,
        report.bits_total
    );
    Ok(())
}

fn train(args: TrainArgs) -> CmdResult {
    let metric = Metric::from(args.metric);
    let grid = args.grid.unwrap_or_else(default_grid);
    let sp = superpixel_source(args.superpixels.as_ref(), args.options.cell_size);
    let config = args.options.config(100.0)?;
    let outcome = train_epsilon(&args.images, &args.truths, metric, &sp, &grid, &config)?;
    for id in &outcome.skipped {
        eprintln!("warning: no ground truth for {id}, skipped");
    }
    for id in &outcome.rejected {
        eprintln!("warning: discrepancy curve of {id} is not convex, excluded");
    }
    write_atomic(&args.out, outcome.model.to_json().as_bytes())?;
    println!(
        "trained on {} images ({} excluded, {} without ground truth); theta = {:?}",
        outcome.used.len(),
        outcome.rejected.len(),
        outcome.skipped.len(),
        outcome.model.theta
    );
    Ok(())
}

fn eval(args: EvalArgs) -> CmdResult {
    let metrics: Vec<Metric> = args.metrics.iter().map(|&m| m.into()).collect();
    let summary = evaluate_dir(&args.test, &args.truths, &metrics, args.tolerance)?;
    for (id, why) in &summary.skipped {
        eprintln!("warning: {id} skipped: {why}");
    }
    if summary.images.is_empty() {
        return Err("no label maps with ground truth to evaluate".into());
    }
    let json = summary.to_json();
    if let Some(path) = &args.json {
        write_atomic(path, json.as_bytes())?;
    }
    print!("{}", summary.table());
    println!("{json}");
    Ok(())
}

fn study(args: StudyArgs) -> CmdResult {
    let result = colorspace_study(&args.images, &args.truths, args.window, args.epsilon)?;
    let json = result.to_json();
    if let Some(path) = &args.json {
        write_atomic(path, json.as_bytes())?;
    }
    println!("epsilon {} window {} dimension {}", result.epsilon, result.window, result.dim);
    print!("{}", result.table());
    Ok(())
}

fn bench(args: BenchmarkArgs) -> CmdResult {
    let epsilon = match (&args.model, args.epsilon) {
        (Some(path), _) => EpsilonChoice::Model(EpsilonModel::load(path)?),
        (None, Some(e)) => EpsilonChoice::Fixed(e),
        (None, None) => unreachable!("clap enforces one of --epsilon and --model"),
    };
    let config = BenchmarkConfig {
        superpixels: superpixel_source(args.superpixels.as_ref(), args.options.cell_size),
        epsilon,
        segmenter: args.options.config(100.0)?,
        tolerance: args.tolerance,
        out_dir: args.out.clone(),
    };
    let summary = benchmark(&args.images, &args.truths, &config)?;
    for (id, why) in &summary.skipped {
        eprintln!("warning: {id} skipped: {why}");
    }
    if summary.images.is_empty() {
        return Err("no images with ground truth to benchmark".into());
    }
    if let Some(path) = &args.json {
        write_atomic(path, summary.to_json().as_bytes())?;
    }
    print!("{}", summary.table());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Segment(a) => segment(a),
        Command::TrainEpsilon(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::ColorspaceStudy(a) => study(a),
        Command::Benchmark(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
