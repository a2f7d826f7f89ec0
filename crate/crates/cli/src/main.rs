//! `snmod`: spatially-near community detection from the command line.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use snmod::io::{read_partition, write_geojson, write_partition};
use snmod::load::{load_graph_files, load_topology, CoordPolicy, LoadOptions, MissingPolicy};
use snmod::louvain::{EngineConfig, NodeOrder};
use snmod::metrics::{community_stats, ng_modularity, sn_modularity};
use snmod::sampler::{snowball_sample, SampleSpec};
use snmod::sweep::{
    append_sweep_rows, detect, improvements, run_sweep, write_improvements, Algorithm, Dataset,
    SweepSpec, DEFAULT_SIGMAS_KM,
};
use snmod::synthetic::{planted_geo_graph, PlantedSpec};
use snmod::{Aggregation, GeoGraph, GeoPoint, Metric, SnParams};

#[derive(Parser)]
#[command(name = "snmod", version, about = "Spatially-near community detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find communities and write a partition CSV.
    Detect(DetectArgs),
    /// Score an existing partition.
    Score(ScoreArgs),
    /// Run every algorithm over a grid of σ values.
    Sweep(SweepArgs),
    /// Write nodes and edges as GeoJSON, tagged with communities.
    ExportGeojson(ExportArgs),
    /// Snowball-sample a subgraph and write it as edge and coordinate files.
    Sample(SampleArgs),
    /// Write a planted-cluster graph as edge and coordinate files.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Edge list: `u<TAB>v[<TAB>w]` per line.
    #[arg(long)]
    edges: PathBuf,
    /// Coordinates: CSV `node,lat,lon` or TAB-separated check-ins.
    #[arg(long)]
    coords: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CoordPolicyArg::Mean)]
    coord_policy: CoordPolicyArg,
    #[arg(long, value_enum, default_value_t = MissingPolicyArg::Error)]
    missing: MissingPolicyArg,
}

#[derive(Args)]
struct ScoringArgs {
    /// Distance scale in km.
    #[arg(long, default_value_t = 1000.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = AggArg::Max)]
    agg: AggArg,
    #[arg(long, value_enum, default_value_t = MetricArg::Haversine)]
    metric: MetricArg,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// SNIC iteration cap.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Shuffle the node visiting order with this seed; ascending when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Partition CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Also write the SNIC per-iteration trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long)]
    partition: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Edge list of a dataset; pair each with --coords. Repeatable.
    #[arg(long)]
    edges: Vec<PathBuf>,
    #[arg(long)]
    coords: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = CoordPolicyArg::Mean)]
    coord_policy: CoordPolicyArg,
    #[arg(long, value_enum, default_value_t = MissingPolicyArg::Error)]
    missing: MissingPolicyArg,
    /// Generate planted-cluster graphs instead of reading files.
    #[arg(long)]
    synthetic: bool,
    /// Number of synthetic graphs.
    #[arg(long, default_value_t = 1)]
    graphs: usize,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Comma-separated σ values in km.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIGMAS_KM.to_vec())]
    sigmas: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![AlgoArg::Louvain, AlgoArg::LouvainSn, AlgoArg::Snic])]
    algorithms: Vec<AlgoArg>,
    /// Comma-separated visiting-order seeds; ascending order when absent.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = AggArg::Max)]
    agg: AggArg,
    #[arg(long, value_enum, default_value_t = MetricArg::Haversine)]
    metric: MetricArg,
    /// Sweep CSV; rows are appended if it exists.
    #[arg(long)]
    out: PathBuf,
    /// Percent-improvement CSV.
    #[arg(long)]
    improvements: Option<PathBuf>,
    /// Directory for SNIC trace files.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Run cells one at a time, for clean timings.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct GeneratorArgs {
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long, default_value_t = 100)]
    cluster_size: usize,
    #[arg(long, default_value_t = 0.035)]
    p_in: f64,
    #[arg(long, default_value_t = 0.0004)]
    p_out: f64,
    #[arg(long, default_value_t = 500.0)]
    spacing_km: f64,
    #[arg(long, default_value_t = 100.0)]
    spread_km: f64,
    /// Seed of the first graph; graph k uses seed + k.
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
}

impl GeneratorArgs {
    fn spec(&self, k: usize) -> PlantedSpec {
        PlantedSpec {
            clusters: self.clusters,
            nodes_per_cluster: self.cluster_size,
            p_in: self.p_in,
            p_out: self.p_out,
            spacing_km: self.spacing_km,
            spread_km: self.spread_km,
            origin: PlantedSpec::default().origin,
            seed: self.graph_seed + k as u64,
        }
    }
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_edges: PathBuf,
    #[arg(long)]
    out_coords: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long)]
    out_edges: PathBuf,
    #[arg(long)]
    out_coords: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Louvain,
    LouvainSn,
    Snic,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Louvain => Algorithm::Louvain,
            AlgoArg::LouvainSn => Algorithm::LouvainSn,
            AlgoArg::Snic => Algorithm::Snic,
        }
    }
}

impl std::fmt::Display for AlgoArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(Algorithm::from(*self).name())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AggArg {
    Max,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Haversine,
    Planar,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoordPolicyArg {
    Mean,
    Last,
}

#[derive(Clone, Copy, ValueEnum)]
enum MissingPolicyArg {
    Error,
    Drop,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<snmod::Error> for Failure {
    fn from(e: snmod::Error) -> Self {
        match e {
            snmod::Error::InvalidSigma(_) | snmod::Error::Config(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Data(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

type CmdResult<T = ()> = Result<T, Failure>;

fn load_options(policy: CoordPolicyArg, missing: MissingPolicyArg) -> LoadOptions {
    LoadOptions {
        coord_policy: match policy {
            CoordPolicyArg::Mean => CoordPolicy::Mean,
            CoordPolicyArg::Last => CoordPolicy::Last,
        },
        missing_policy: match missing {
            MissingPolicyArg::Error => MissingPolicy::Error,
            MissingPolicyArg::Drop => MissingPolicy::Drop,
        },
    }
}

fn load_input(input: &InputArgs) -> CmdResult<GeoGraph> {
    let options = load_options(input.coord_policy, input.missing);
    match &input.coords {
        Some(coords) => Ok(load_graph_files(&input.edges, coords, options)?),
        None => Err(Failure::Usage("--coords is required".into())),
    }
}

fn params(sigma: f64, agg: AggArg, metric: MetricArg) -> CmdResult<SnParams> {
    Ok(SnParams::new(sigma)?
        .with_agg(match agg {
            AggArg::Max => Aggregation::Max,
            AggArg::Sum => Aggregation::Sum,
        })
        .with_metric(match metric {
            MetricArg::Haversine => Metric::Haversine,
            MetricArg::Planar => Metric::Planar,
        }))
}

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

fn open(path: &Path) -> CmdResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_failure(path, e))
}

fn cmd_detect(args: DetectArgs) -> CmdResult {
    let algorithm = Algorithm::from(args.algo);
    let params = params(args.scoring.sigma, args.scoring.agg, args.scoring.metric)?;
    let (g, has_coords) = match (&args.input.coords, algorithm) {
        (Some(_), _) => (load_input(&args.input)?, true),
        (None, Algorithm::Louvain) => (
            load_topology(
                open(&args.input.edges)?,
                &args.input.edges.display().to_string(),
            )?,
            false,
        ),
        (None, _) => {
            return Err(Failure::Usage(format!(
                "--coords is required for --algo {algorithm}"
            )))
        }
    };
    let engine = EngineConfig {
        node_order: args.seed.map_or(NodeOrder::Ascending, NodeOrder::Shuffled),
        ..Default::default()
    };
    let det = detect(&g, algorithm, params, args.max_iters, engine)?;
    let mut out = create(&args.out)?;
    write_partition(&mut out, &g, &det.partition)?;
    out.flush().map_err(|e| io_failure(&args.out, e))?;
    if let (Some(path), Some(trace)) = (&args.trace, &det.trace) {
        trace.write_csv(create(path)?)?;
    }
    let sn = if has_coords {
        format!("{:.6}", det.sn_modularity)
    } else {
        "NA".to_string()
    };
    println!(
        "algorithm={} n={} m={} communities={} ng_modularity={:.6} sn_modularity={} seconds={:.3}",
        algorithm,
        g.node_count(),
        g.edge_count(),
        det.partition.num_communities(),
        det.ng_modularity,
        sn,
        det.seconds
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> CmdResult {
    let params = params(args.scoring.sigma, args.scoring.agg, args.scoring.metric)?;
    let g = load_input(&args.input)?;
    let p = read_partition(open(&args.partition)?, &g)?;
    let stdout = std::io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    let two_m = g.two_m();
    let row = |w: &mut csv::Writer<_>, label: String, size: usize, ng: f64, sn: f64| {
        w.write_record([
            label,
            size.to_string(),
            format!("{ng:.6}"),
            format!("{sn:.6}"),
        ])
    };
    let csv_err = |e: csv::Error| Failure::Data(e.to_string());
    w.write_record(["community", "size", "ng_modularity", "sn_modularity"])
        .map_err(csv_err)?;
    for (c, members) in p.communities().iter().enumerate() {
        let stats = community_stats(&g, members, &params)?;
        row(
            &mut w,
            c.to_string(),
            members.len(),
            stats.ng_value(two_m),
            stats.sn_value(two_m),
        )
        .map_err(csv_err)?;
    }
    row(
        &mut w,
        "total".into(),
        g.node_count(),
        ng_modularity(&g, &p)?,
        sn_modularity(&g, &p, &params)?,
    )
    .map_err(csv_err)?;
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let datasets = if args.synthetic {
        if !args.edges.is_empty() {
            return Err(Failure::Usage(
                "--synthetic cannot be combined with --edges".into(),
            ));
        }
        (0..args.graphs)
            .map(|k| {
                let spec = args.generator.spec(k);
                Ok(Dataset {
                    name: format!("synthetic-{}", spec.seed),
                    graph: planted_geo_graph(&spec)?.graph,
                })
            })
            .collect::<CmdResult<Vec<_>>>()?
    } else {
        if args.edges.is_empty() || args.edges.len() != args.coords.len() {
            return Err(Failure::Usage(
                "give matching --edges/--coords pairs or --synthetic".into(),
            ));
        }
        let options = load_options(args.coord_policy, args.missing);
        args.edges
            .iter()
            .zip(&args.coords)
            .map(|(e, c)| {
                Ok(Dataset {
                    name: e
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| e.display().to_string()),
                    graph: load_graph_files(e, c, options)?,
                })
            })
            .collect::<CmdResult<Vec<_>>>()?
    };

    let spec = SweepSpec {
        sigmas: args.sigmas,
        algorithms: args.algorithms.into_iter().map(Algorithm::from).collect(),
        seeds: if args.seeds.is_empty() {
            vec![None]
        } else {
            args.seeds.into_iter().map(Some).collect()
        },
        max_iters: args.max_iters,
        agg: match args.agg {
            AggArg::Max => Aggregation::Max,
            AggArg::Sum => Aggregation::Sum,
        },
        metric: match args.metric {
            MetricArg::Haversine => Metric::Haversine,
            MetricArg::Planar => Metric::Planar,
        },
        parallel: !args.sequential,
    };
    let result = run_sweep(&datasets, &spec)?;
    append_sweep_rows(&args.out, &result.rows)?;
    if let Some(path) = &args.improvements {
        write_improvements(create(path)?, &improvements(&result.rows))?;
    }
    if let Some(dir) = &args.trace_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        for t in &result.traces {
            let seed = t.seed.map_or_else(|| "asc".to_string(), |s| s.to_string());
            let path = dir.join(format!(
                "trace_{}_sigma{}_seed{}.csv",
                t.dataset, t.sigma_km, seed
            ));
            t.trace.write_csv(create(&path)?)?;
        }
    }
    eprintln!(
        "wrote {} rows for {} datasets to {}",
        result.rows.len(),
        datasets.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_export(args: ExportArgs) -> CmdResult {
    let g = load_input(&args.input)?;
    let p = read_partition(open(&args.partition)?, &g)?;
    let mut out = create(&args.out)?;
    write_geojson(&mut out, &g, &p)?;
    out.flush().map_err(|e| io_failure(&args.out, e))?;
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> CmdResult {
    if args.size == 0 {
        return Err(Failure::Usage("--size must be positive".into()));
    }
    let g = load_input(&args.input)?;
    let sub = snowball_sample(
        &g,
        SampleSpec {
            target_size: args.size,
            seed: args.seed,
        },
    );
    write_graph(&sub, &args.out_edges, &args.out_coords)?;
    println!("n={} m={}", sub.node_count(), sub.edge_count());
    Ok(())
}

fn write_graph(g: &GeoGraph, edges_path: &Path, coords_path: &Path) -> CmdResult {
    let mut edges = create(edges_path)?;
    let mut write_edges = || -> std::io::Result<()> {
        for (u, v, w) in g.edges() {
            writeln!(edges, "{}\t{}\t{}", g.external_id(u), g.external_id(v), w)?;
        }
        edges.flush()
    };
    write_edges().map_err(|e| io_failure(edges_path, e))?;
    let mut coords = create(coords_path)?;
    let mut write_coords = || -> std::io::Result<()> {
        writeln!(coords, "node,lat,lon")?;
        for v in 0..g.node_count() {
            let GeoPoint { lat, lon } = g.location(v);
            writeln!(coords, "{},{lat},{lon}", g.external_id(v))?;
        }
        coords.flush()
    };
    write_coords().map_err(|e| io_failure(coords_path, e))
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let planted = planted_geo_graph(&args.generator.spec(0))?;
    write_graph(&planted.graph, &args.out_edges, &args.out_coords)?;
    println!(
        "n={} m={}",
        planted.graph.node_count(),
        planted.graph.edge_count()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Score(args) => cmd_score(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::ExportGeojson(args) => cmd_export(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Generate(args) => cmd_generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
