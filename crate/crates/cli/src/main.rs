use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use ssn_scan::config::FlatConfig;
use ssn_scan::hotspot::{
    compare_hotspots, gi_star, gi_star_counts, grid_counts, reduce_to_cells, GridSpec,
};
use ssn_scan::io::{
    file_sha256, load_network, read_cell_surface, write_cell_surface, write_network,
    write_overlap_csv, write_results, write_summary_csv, write_sweep_csv, write_variance_csv,
    Format, Provenance, ResultLayer,
};
use ssn_scan::null_model::{significance, NullEnsembleSpec, NullModel};
use ssn_scan::scan::{run_scan_suite, scan, ENGINE_VERSION};
use ssn_scan::sensitivity::{ladder, node_variance, summarize, sweep};
use ssn_scan::synth::{generate_synthetic, SyntheticSpec};
use ssn_scan::{
    Backend, Error, NeighborhoodSpec, PointIndex, Result, ScanOptions, SpatialSocialNetwork,
    SpecKind, StatKind,
};

/// Moving-window scans of spatial social networks.
#[derive(Debug, Parser)]
#[command(name = "ssnscan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-node EdgeScan, NDScan and triad values for one or more window specs.
    Scan(ScanArgs),
    /// Mean and spread of one statistic over a ladder of radii or k values.
    Sweep(SweepArgs),
    /// Per-spec summaries and per-node variance across window specs.
    Sensitivity(SensitivityArgs),
    /// Getis-Ord Gi* surface on a regular grid.
    Gistar(GistarArgs),
    /// Overlap of hot-spot cells between two Gi* surfaces.
    Compare(CompareArgs),
    /// Monte Carlo p-values against a rewired null ensemble.
    Significance(SignificanceArgs),
    /// Generate a synthetic network from a config file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Grid,
    Kdtree,
    Brute,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Grid => Backend::Grid,
            BackendArg::Kdtree => Backend::KdTree,
            BackendArg::Brute => Backend::BruteForce,
        }
    }
}

#[derive(Debug, Args)]
struct NetworkArgs {
    /// Node table: id,x,y[,label]
    #[arg(long)]
    nodes: PathBuf,
    /// Edge table: source,target
    #[arg(long)]
    edges: PathBuf,
    #[arg(long, value_enum, default_value = "grid")]
    backend: BackendArg,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// Window spec such as `kind=euclidean,r=1000`, `kind=manhattan,r=500` or
    /// `kind=knn,k=10`. Repeatable; defaults to the nine reference specs.
    #[arg(long = "spec")]
    specs: Vec<NeighborhoodSpec>,
    /// `all`, or a comma list of edgescan, ndscan, triads, transitivity.
    #[arg(long, default_value = "all")]
    stat: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "geojson")]
    format: Format,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long)]
    kind: SpecKind,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, default_value = "edgescan")]
    stat: StatKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// Flat config with one `spec = ...` line per window spec.
    #[arg(long)]
    specs_file: Option<PathBuf>,
    /// Statistic whose per-node variance is reported.
    #[arg(long, default_value = "ndscan")]
    stat: StatKind,
    #[arg(long)]
    out_summary: PathBuf,
    #[arg(long)]
    out_variance: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GiSource {
    /// Node count per grid cell.
    GridCounts,
    /// NDScan value per node, reduced to the maximum z per cell.
    Ndscan,
}

#[derive(Debug, Args)]
struct GistarArgs {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, default_value_t = 1000.0)]
    cell_size: f64,
    /// Gi* neighborhood radius in meters.
    #[arg(long, default_value_t = 1000.0)]
    radius: f64,
    #[arg(long, value_enum, default_value = "grid-counts")]
    source: GiSource,
    /// Window for the ndscan source.
    #[arg(long, default_value = "kind=euclidean,r=1000")]
    spec: NeighborhoodSpec,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SignificanceArgs {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, default_value = "uniform")]
    model: NullModel,
    #[arg(long, default_value_t = 999)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "kind=euclidean,r=1000")]
    spec: NeighborhoodSpec,
    #[arg(long, default_value = "ndscan")]
    stat: StatKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "geojson")]
    format: Format,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_nodes: PathBuf,
    #[arg(long)]
    out_edges: PathBuf,
}

fn entry(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

struct Loaded {
    net: SpatialSocialNetwork,
    index: PointIndex,
    provenance: Provenance,
}

fn load(args: &NetworkArgs, command: &str) -> Result<Loaded> {
    let start = Instant::now();
    let net = load_network(&args.nodes, &args.edges)?;
    info!(
        "loaded {} nodes, {} edges in {:.2?}",
        net.node_count(),
        net.edge_count(),
        start.elapsed()
    );
    let index = PointIndex::build(&net, args.backend.into());
    let provenance = vec![
        entry("command", command),
        entry("engine_version", ENGINE_VERSION),
        entry("nodes", file_name(&args.nodes)),
        entry("nodes_sha256", file_sha256(&args.nodes)?),
        entry("edges", file_name(&args.edges)),
        entry("edges_sha256", file_sha256(&args.edges)?),
        entry("network", net.fingerprint()),
    ];
    Ok(Loaded {
        net,
        index,
        provenance,
    })
}

fn parse_stats(text: &str) -> Result<Vec<StatKind>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(StatKind::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

fn join_specs(specs: &[NeighborhoodSpec]) -> String {
    specs
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn run_scan(args: &ScanArgs) -> Result<()> {
    let stats = parse_stats(&args.stat)?;
    let specs = if args.specs.is_empty() {
        NeighborhoodSpec::reference_set()
    } else {
        args.specs.clone()
    };
    let Loaded {
        net,
        index,
        mut provenance,
    } = load(&args.net, "scan")?;
    let options = ScanOptions {
        workers: args.net.workers,
        triads: stats.iter().any(|s| s.needs_triads()),
    };
    let start = Instant::now();
    let results = run_scan_suite(&net, &index, &specs, &options)?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    info!("scanned {} spec(s) in {:.2?}", specs.len(), start.elapsed());
    provenance.push(entry("specs", join_specs(&specs)));
    provenance.push(entry(
        "stat",
        stats.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
    ));
    let layers: Vec<ResultLayer> = results
        .iter()
        .map(|r| ResultLayer::from_scan(&net, r))
        .collect();
    write_results(&layers, &args.out, args.format, &provenance)
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let params = ladder(args.from, args.to, args.step)?;
    if args.kind == SpecKind::Knn && params.iter().any(|p| p.fract() != 0.0) {
        return Err(Error::InvalidSpec(
            "knn sweeps need whole-number k values".into(),
        ));
    }
    let Loaded {
        net,
        index,
        mut provenance,
    } = load(&args.net, "sweep")?;
    let curve = sweep(
        &net,
        &index,
        args.kind,
        &params,
        args.stat,
        args.net.workers,
    )?;
    provenance.push(entry("kind", args.kind));
    provenance.push(entry(
        "range",
        format!("{}..={} step {}", args.from, args.to, args.step),
    ));
    provenance.push(entry("stat", args.stat));
    write_sweep_csv(&args.out, &[curve], &provenance)
}

fn read_specs_file(path: &Path) -> Result<Vec<NeighborhoodSpec>> {
    let cfg = FlatConfig::read(path)?;
    cfg.check_keys(&["spec"])?;
    let specs = cfg
        .all("spec")
        .map(|e| {
            e.value
                .parse()
                .map_err(|err| Error::InvalidConfig(format!("line {}: {err}", e.line)))
        })
        .collect::<Result<Vec<NeighborhoodSpec>>>()?;
    if specs.is_empty() {
        return Err(Error::EmptySpecList);
    }
    Ok(specs)
}

fn run_sensitivity(args: &SensitivityArgs) -> Result<()> {
    let specs = match &args.specs_file {
        Some(path) => read_specs_file(path)?,
        None => NeighborhoodSpec::reference_set(),
    };
    let Loaded {
        net,
        index,
        mut provenance,
    } = load(&args.net, "sensitivity")?;
    let options = ScanOptions {
        workers: args.net.workers,
        triads: true,
    };
    let results = run_scan_suite(&net, &index, &specs, &options)?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    provenance.push(entry("specs", join_specs(&specs)));
    let summary = summarize(&results)?;
    write_summary_csv(&args.out_summary, &summary, &provenance)?;
    let variance = node_variance(&results, args.stat)?;
    provenance.push(entry("stat", args.stat));
    let names: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
    write_variance_csv(&args.out_variance, &net, &names, &variance, &provenance)
}

fn run_gistar(args: &GistarArgs) -> Result<()> {
    let Loaded {
        net,
        index,
        mut provenance,
    } = load(&args.net, "gistar")?;
    let grid = GridSpec::covering(&net.points(), args.cell_size)?;
    let surface = match args.source {
        GiSource::GridCounts => gi_star_counts(&grid_counts(&net, &grid)?, args.radius)?,
        GiSource::Ndscan => {
            let options = ScanOptions {
                workers: args.net.workers,
                triads: false,
            };
            let result = scan(&net, &index, &args.spec, &options)?;
            let points = gi_star(
                &net.points(),
                &result.column(StatKind::Density)?,
                args.radius,
            )?;
            provenance.push(entry("spec", args.spec));
            reduce_to_cells(&points, &grid)?
        }
    };
    provenance.push(entry(
        "source",
        match args.source {
            GiSource::GridCounts => "grid-counts",
            GiSource::Ndscan => "ndscan",
        },
    ));
    provenance.push(entry("cell_size", args.cell_size));
    provenance.push(entry("radius", args.radius));
    write_cell_surface(&args.out, &surface, &provenance)
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let a = read_cell_surface(&args.a)?;
    let b = read_cell_surface(&args.b)?;
    let report = compare_hotspots(&a, &b)?;
    let provenance = vec![
        entry("command", "compare"),
        entry("engine_version", ENGINE_VERSION),
        entry("a_sha256", file_sha256(&args.a)?),
        entry("b_sha256", file_sha256(&args.b)?),
    ];
    write_overlap_csv(&args.out, &report, &provenance)
}

fn run_significance(args: &SignificanceArgs) -> Result<()> {
    let Loaded {
        net,
        index,
        mut provenance,
    } = load(&args.net, "significance")?;
    let ensemble = NullEnsembleSpec {
        model: args.model,
        replicates: args.replicates,
        seed: args.seed,
    };
    let start = Instant::now();
    let report = significance(
        &net,
        &index,
        &args.spec,
        args.stat,
        &ensemble,
        args.net.workers,
    )?;
    info!("{} replicates in {:.2?}", args.replicates, start.elapsed());
    let options = ScanOptions {
        workers: args.net.workers,
        triads: true,
    };
    let result = scan(&net, &index, &args.spec, &options)?;
    provenance.push(entry("spec", args.spec));
    provenance.push(entry("stat", args.stat));
    provenance.push(entry("model", args.model));
    provenance.push(entry("replicates", args.replicates));
    provenance.push(entry("seed", args.seed));
    let layer = ResultLayer::from_scan(&net, &result).with_significance(&report);
    write_results(&[layer], &args.out, args.format, &provenance)
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec::read(&args.config)?;
    let net = generate_synthetic(&spec)?;
    info!(
        "generated {} nodes, {} edges",
        net.node_count(),
        net.edge_count()
    );
    write_network(&net, &args.out_nodes, &args.out_edges)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Scan(a) => run_scan(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Sensitivity(a) => run_sensitivity(a),
        Command::Gistar(a) => run_gistar(a),
        Command::Compare(a) => run_compare(a),
        Command::Significance(a) => run_significance(a),
        Command::Synth(a) => run_synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
