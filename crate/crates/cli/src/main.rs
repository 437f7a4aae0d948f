use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use treealign_cli::dataset::load_dataset;
use treealign_cli::experiment::{bench_pairs, knn_experiment, median, EvalKind, ExperimentConfig};
use treealign_cli::fmt::format_significant;
use treealign_core::barycenter::{f_beta, kmeans, KmeansOptions};
use treealign_core::io::{read_points_file, tree_to_text};
use treealign_core::sampling::{sample_tree_metric, RootMode, SamplerConfig};
use treealign_core::{
    depth_align, flow_align, sliced_gw,
    tree_sliced_discrepancy, zero_pad, BaseDiscrepancy, SearchStrategy, SliceSpec,
    WeightedPointSet,
};

const VALUE_DIGITS: usize = 12;

#[derive(Parser)]
#[command(
    name = "treealign",
    about = "Tree-metric alignment discrepancies between point-cloud measures",
    version
)]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a tree metric over a point set and print it.
    SampleTree(SampleTreeArgs),
    /// Compute a discrepancy between two measures.
    Dist {
        #[command(subcommand)]
        kind: DistCommand,
    },
    /// k-nearest-neighbor classification or regression over a dataset.
    Knn(KnnArgs),
    /// Cluster a dataset of measures around flow barycenters.
    Kmeans(KmeansArgs),
    /// Time discrepancy evaluations over sampled measure pairs.
    Bench(BenchArgs),
    /// Emit per-pair discrepancy values across slice counts as CSV.
    EmitFigureData(EmitFigureDataArgs),
}

#[derive(Args, Clone)]
struct SamplerArgs {
    /// Clusters per level of the tree sampler.
    #[arg(long, default_value_t = 4)]
    kappa: usize,
    /// Deepest tree level.
    #[arg(long, default_value_t = 6)]
    depth: u32,
    /// Root placement: `mean` or `fixed:<c1,c2,...>`.
    #[arg(long, default_value = "mean")]
    root: String,
}

impl SamplerArgs {
    fn config(&self, seed: u64) -> Result<SamplerConfig, CliError> {
        let mode = parse_root_mode(&self.root)?;
        Ok(SamplerConfig::new(self.kappa, self.depth, seed)
            .map_err(input_err)?
            .with_root_mode(mode))
    }
}

fn parse_root_mode(spec: &str) -> Result<RootMode, CliError> {
    if spec == "mean" {
        return Ok(RootMode::MeanOfSupports);
    }
    if let Some(coords) = spec.strip_prefix("fixed:") {
        let point: Result<Vec<f64>, _> = coords.split(',').map(str::parse).collect();
        return match point {
            Ok(p) if !p.is_empty() => Ok(RootMode::FixedPoint(p)),
            _ => Err(CliError::Input(format!(
                "bad fixed root coordinates {coords:?}"
            ))),
        };
    }
    Err(CliError::Input(format!(
        "root must be `mean` or `fixed:<coords>`, got {spec:?}"
    )))
}

#[derive(Args)]
struct SampleTreeArgs {
    /// Point-set file, one point per row.
    #[arg(long)]
    points: PathBuf,
    /// Rows lead with a weight column.
    #[arg(long)]
    weighted: bool,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Write the tree here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `point_index node_id` bindings.
    #[arg(long)]
    bind_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Brute,
    Incremental,
}

impl From<StrategyArg> for SearchStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Brute => SearchStrategy::BruteForce,
            StrategyArg::Incremental => SearchStrategy::Incremental,
        }
    }
}

#[derive(Args)]
struct DistArgs {
    /// First measure file.
    #[arg(long)]
    a: PathBuf,
    /// Second measure file.
    #[arg(long)]
    b: PathBuf,
    /// Measure rows lead with a weight column.
    #[arg(long)]
    weighted: bool,
    /// Trust the sampled roots instead of searching root pairs.
    #[arg(long)]
    aligned_root: bool,
    /// Root-search strategy for flowalign.
    #[arg(long, value_enum, default_value = "incremental")]
    strategy: StrategyArg,
    /// Slice count for sliced variants.
    #[arg(long, default_value_t = 10)]
    slices: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Also write the printed value to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DistCommand {
    /// Flow alignment on per-measure sampled trees.
    Flowalign(DistArgs),
    /// Depth alignment on per-measure sampled trees.
    Depthalign(DistArgs),
    /// Tree-sliced flow alignment.
    Tsfa(DistArgs),
    /// Tree-sliced depth alignment.
    Tsda(DistArgs),
    /// Sliced baseline on zero-padded uniform measures.
    Sgw(DistArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiscArg {
    Tsfa,
    Tsda,
    Sgw,
    FaBrute,
    FaIncremental,
}

#[derive(Args)]
struct KnnArgs {
    /// Manifest file or directory containing `manifest.json`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "tsfa")]
    disc: DiscArg,
    #[arg(long, default_value_t = 10)]
    slices: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Comma-separated neighbor counts.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    k: Vec<usize>,
    /// Training fraction.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Report CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KmeansArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 10)]
    slices: usize,
    /// Maximum barycenter support count.
    #[arg(long, default_value_t = 100)]
    supports: usize,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Assignment CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "tsfa")]
    disc: DiscArg,
    #[arg(long, default_value_t = 10)]
    slices: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Number of measure pairs to time.
    #[arg(long)]
    pairs: usize,
    /// Per-pair values CSV (deterministic).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-pair wall-time CSV (not reproducible by nature).
    #[arg(long)]
    timings: Option<PathBuf>,
}

#[derive(Args)]
struct EmitFigureDataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "tsfa")]
    disc: DiscArg,
    /// Comma-separated slice counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
    slice_counts: Vec<usize>,
    #[arg(long)]
    pairs: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

fn input_err(e: treealign_core::Error) -> CliError {
    CliError::Input(e.to_string())
}

fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: building thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SampleTree(args) => sample_tree_cmd(cli.seed, args),
        Command::Dist { kind } => dist_cmd(cli.seed, kind),
        Command::Knn(args) => knn_cmd(cli.seed, args),
        Command::Kmeans(args) => kmeans_cmd(cli.seed, args),
        Command::Bench(args) => bench_cmd(cli.seed, args),
        Command::EmitFigureData(args) => emit_figure_data_cmd(cli.seed, args),
    }
}

fn sample_tree_cmd(seed: u64, args: SampleTreeArgs) -> Result<(), CliError> {
    let points = read_points_file(&args.points, args.weighted).map_err(input_err)?;
    let cfg = args.sampler.config(seed)?;
    let embedding = sample_tree_metric(points.points(), &cfg).map_err(input_err)?;
    let text = tree_to_text(embedding.tree());
    match &args.out {
        Some(path) => write_output(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &args.bind_out {
        let mut bind = String::new();
        for (i, node) in embedding.node_of_point().iter().enumerate() {
            bind.push_str(&format!("{i} {node}\n"));
        }
        write_output(path, &bind)?;
    }
    Ok(())
}

fn load_measure(path: &Path, weighted: bool) -> Result<WeightedPointSet, CliError> {
    read_points_file(path, weighted).map_err(input_err)
}

fn dist_cmd(seed: u64, kind: DistCommand) -> Result<(), CliError> {
    let (args, value) = match &kind {
        DistCommand::Flowalign(args) | DistCommand::Depthalign(args) => {
            let a = load_measure(&args.a, args.weighted)?;
            let b = load_measure(&args.b, args.weighted)?;
            let cfg = args.sampler.config(seed)?;
            let spec = SliceSpec::new(1, BaseDiscrepancy::FlowAligned, cfg.clone())
                .map_err(input_err)?;
            let value = if args.aligned_root {
                // one slice of the tree-sliced variant is exactly the
                // aligned-root value on freshly sampled trees
                let base = match kind {
                    DistCommand::Flowalign(_) => BaseDiscrepancy::FlowAligned,
                    _ => BaseDiscrepancy::DepthAligned,
                };
                tree_sliced_discrepancy(&a, &b, &SliceSpec { base, ..spec })
                    .map_err(input_err)?
            } else {
                let embed = |m: &WeightedPointSet| {
                    let mut c = cfg.clone();
                    c.seed = treealign_core::util::derive_seed(cfg.seed, "slice", 0);
                    let e = treealign_core::sampling::sample_aligned_root_trees(
                        std::slice::from_ref(&m.points().to_vec()),
                        &c,
                    )
                    .map_err(input_err)?
                    .pop()
                    .expect("one embedding");
                    let measure = e.measure(m.weights()).map_err(input_err)?;
                    Ok::<_, CliError>((e, measure))
                };
                let (ea, ma) = embed(&a)?;
                let (eb, mb) = embed(&b)?;
                match kind {
                    DistCommand::Flowalign(_) => {
                        flow_align(&ma, ea.tree(), &mb, eb.tree(), args.strategy.into())
                            .map_err(input_err)?
                            .value
                    }
                    _ => depth_align(&ma, ea.tree(), &mb, eb.tree())
                        .map_err(input_err)?
                        .value,
                }
            };
            (args, value)
        }
        DistCommand::Tsfa(args) | DistCommand::Tsda(args) => {
            let a = load_measure(&args.a, args.weighted)?;
            let b = load_measure(&args.b, args.weighted)?;
            let base = match kind {
                DistCommand::Tsfa(_) => BaseDiscrepancy::FlowAligned,
                _ => BaseDiscrepancy::DepthAligned,
            };
            let spec = SliceSpec::new(args.slices, base, args.sampler.config(seed)?)
                .map_err(input_err)?;
            let value = tree_sliced_discrepancy(&a, &b, &spec).map_err(input_err)?;
            (args, value)
        }
        DistCommand::Sgw(args) => {
            let a = load_measure(&args.a, args.weighted)?;
            let b = load_measure(&args.b, args.weighted)?;
            let n = a.len().max(b.len());
            let pa = zero_pad(a.points(), n).map_err(input_err)?;
            let pb = zero_pad(b.points(), n).map_err(input_err)?;
            let value =
                sliced_gw(pa.points(), pb.points(), args.slices, seed).map_err(input_err)?;
            (args, value)
        }
    };
    let line = format_significant(value, VALUE_DIGITS);
    println!("{line}");
    if let Some(path) = &args.out {
        write_output(path, &format!("{line}\n"))?;
    }
    Ok(())
}

fn eval_kind(disc: DiscArg, slices: usize, sampler: &SamplerArgs, seed: u64) -> Result<EvalKind, CliError> {
    let cfg = sampler.config(seed)?;
    let spec = SliceSpec::new(slices, BaseDiscrepancy::FlowAligned, cfg.clone()).map_err(input_err)?;
    Ok(match disc {
        DiscArg::Tsfa => EvalKind::Tsfa(spec),
        DiscArg::Tsda => EvalKind::Tsda(spec),
        DiscArg::Sgw => EvalKind::Sgw {
            n_slices: slices,
            seed,
        },
        DiscArg::FaBrute => EvalKind::FlowSearch {
            strategy: SearchStrategy::BruteForce,
            sampler: cfg,
        },
        DiscArg::FaIncremental => EvalKind::FlowSearch {
            strategy: SearchStrategy::Incremental,
            sampler: cfg,
        },
    })
}

fn knn_cmd(seed: u64, args: KnnArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data).map_err(input_err)?;
    let cfg = ExperimentConfig {
        eval: eval_kind(args.disc, args.slices, &args.sampler, seed)?,
        knn_k: args.k.clone(),
        split: args.split,
        repeats: args.repeats,
        seed,
    };
    let report = knn_experiment(&ds, &cfg).map_err(input_err)?;
    let mut csv = String::from("k,mean,std,metric\n");
    for m in &report.per_k {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            m.k,
            format_significant(m.mean, VALUE_DIGITS),
            format_significant(m.std, VALUE_DIGITS),
            report.task.metric_name()
        ));
    }
    print!("{csv}");
    println!("wall_seconds={:.3}", report.wall_seconds);
    if let Some(path) = &args.out {
        write_output(path, &csv)?;
    }
    Ok(())
}

fn kmeans_cmd(seed: u64, args: KmeansArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data).map_err(input_err)?;
    let spec = SliceSpec::new(
        args.slices,
        BaseDiscrepancy::FlowAligned,
        args.sampler.config(seed)?,
    )
    .map_err(input_err)?;
    let opts = KmeansOptions {
        k_clusters: args.clusters,
        k_supports: args.supports,
        max_iter: args.max_iter,
        seed,
    };
    let result = kmeans(&ds.measures, &spec, &opts).map_err(input_err)?;
    let mut csv = String::from("measure_id,cluster\n");
    for (i, &c) in result.assignment.iter().enumerate() {
        csv.push_str(&format!("{i},{c}\n"));
    }
    let summary = match &ds.labels {
        Some(labels) => {
            let score = f_beta(&result.assignment, labels).map_err(input_err)?;
            format!(
                "# inertia={} f_beta={}\n",
                format_significant(result.inertia, VALUE_DIGITS),
                format_significant(score, VALUE_DIGITS)
            )
        }
        None => format!(
            "# inertia={}\n",
            format_significant(result.inertia, VALUE_DIGITS)
        ),
    };
    csv.push_str(&summary);
    write_output(&args.out, &csv)?;
    print!("{summary}");
    Ok(())
}

fn bench_cmd(seed: u64, args: BenchArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data).map_err(input_err)?;
    let eval = eval_kind(args.disc, args.slices, &args.sampler, seed)?;
    let rows = bench_pairs(&ds, &eval, args.pairs, seed).map_err(input_err)?;
    let mut csv = String::from("pair,a,b,value\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.pair_index,
            r.a,
            r.b,
            format_significant(r.value, VALUE_DIGITS)
        ));
    }
    write_output(&args.out, &csv)?;
    let times: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    println!(
        "pairs={} median_seconds={:.6} mean_seconds={:.6}",
        rows.len(),
        median(times.clone()),
        mean
    );
    if let Some(path) = &args.timings {
        let mut timing_csv = String::from("pair,a,b,seconds\n");
        for r in &rows {
            timing_csv.push_str(&format!("{},{},{},{:.9}\n", r.pair_index, r.a, r.b, r.seconds));
        }
        write_output(path, &timing_csv)?;
    }
    Ok(())
}

fn emit_figure_data_cmd(seed: u64, args: EmitFigureDataArgs) -> Result<(), CliError> {
    if args.slice_counts.is_empty() || args.slice_counts.contains(&0) {
        return Err(CliError::Input("slice counts must be positive".into()));
    }
    let ds = load_dataset(&args.data).map_err(input_err)?;
    let mut csv = String::from("slices,pair,a,b,value\n");
    for &slices in &args.slice_counts {
        let eval = eval_kind(args.disc, slices, &args.sampler, seed)?;
        let rows = bench_pairs(&ds, &eval, args.pairs, seed).map_err(input_err)?;
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                slices,
                r.pair_index,
                r.a,
                r.b,
                format_significant(r.value, VALUE_DIGITS)
            ));
        }
    }
    write_output(&args.out, &csv)?;
    let _ = std::io::stdout().flush();
    Ok(())
}
