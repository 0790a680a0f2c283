use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use staymatch::eval::{
    correct_link_count, default_eps_values, eps_sweep, export_report, generate_scenario_with,
    run_pipeline, DwellSpec, PipelineParams, PipelineSummary, ScenarioParams,
};
use staymatch::fuzzy::{MatchResult, Matcher, MatcherSettings};
use staymatch::ingest::{
    parse_ground_truth, parse_road_network, parse_trajectory, read_edge_list, save_edge_list,
    save_trajectory, NetworkFormat, RoadNetwork, Trajectory, TrajectoryFormat,
};
use staymatch::staypoint::{
    dbscan, elbow_candidates, knn_distance_curve, reduce_trajectory, summarize_clusters,
    write_stay_points_csv, DbscanParams, MetricSpace,
};
use staymatch::{Error, ErrorClass, Result};

#[derive(Parser)]
#[command(
    name = "staymatch",
    version,
    about = "Stay-point trajectory reduction and fuzzy-logic map matching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sorted k-th nearest neighbor distances, for picking eps.
    KnnCurve(KnnArgs),
    /// Cluster labels, stay points and the reduced trajectory.
    Staypoints(StayArgs),
    /// Reduced trajectory only.
    Reduce(ReduceArgs),
    /// Map-match a trajectory.
    Match(MatchArgs),
    /// Score an edge sequence against a ground-truth route.
    Eval(EvalArgs),
    /// Raw versus reduced matching comparison, with report files.
    Pipeline(PipelineArgs),
    /// Write a seeded synthetic network, trajectory and truth route.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// `timestamp,lat,lon` trajectories and `edge_id,node_from,node_to,wkt` networks.
    Native,
    /// Tab-separated files in the Seattle ground-truth benchmark layout.
    Seattle,
}

impl InputFormat {
    fn trajectory(self) -> TrajectoryFormat {
        match self {
            InputFormat::Native => TrajectoryFormat::native(),
            InputFormat::Seattle => TrajectoryFormat::seattle_benchmark(),
        }
    }

    fn network(self) -> NetworkFormat {
        match self {
            InputFormat::Native => NetworkFormat::Native,
            InputFormat::Seattle => NetworkFormat::SeattleBenchmark,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// Euclidean over raw (lon, lat) degrees.
    DegreeEuclidean,
    /// Euclidean in meters on a local plane.
    MeterPlanar,
}

impl From<Metric> for MetricSpace {
    fn from(m: Metric) -> Self {
        match m {
            Metric::DegreeEuclidean => MetricSpace::DegreeEuclidean,
            Metric::MeterPlanar => MetricSpace::MeterPlanar,
        }
    }
}

#[derive(Args)]
struct FormatArg {
    /// Input file layout.
    #[arg(long, value_enum, default_value = "native")]
    format: InputFormat,
}

#[derive(Args)]
struct ClusterArgs {
    /// DBSCAN radius, in units of --metric (degrees by default).
    #[arg(long)]
    eps: f64,
    /// DBSCAN density threshold, counting the point itself.
    #[arg(long)]
    min_pts: usize,
    /// Distance used for clustering.
    #[arg(long, value_enum, default_value = "degree-euclidean")]
    metric: Metric,
}

impl ClusterArgs {
    fn params(&self) -> Result<DbscanParams> {
        DbscanParams::new(self.eps, self.min_pts, self.metric.into())
    }
}

#[derive(Args)]
struct KnnArgs {
    #[arg(long)]
    traj: PathBuf,
    /// Neighbor rank.
    #[arg(long)]
    k: usize,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Distance used for the curve.
    #[arg(long, value_enum, default_value = "degree-euclidean")]
    metric: Metric,
    /// Elbow candidates to print (repo default, not from the paper).
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Args)]
struct StayArgs {
    #[arg(long)]
    traj: PathBuf,
    #[command(flatten)]
    cluster: ClusterArgs,
    /// Directory for labels.csv, staypoints.csv and reduced.csv.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    traj: PathBuf,
    #[command(flatten)]
    cluster: ClusterArgs,
    /// Output trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Args)]
struct MatcherArgs {
    /// TOML file with [matcher] thresholds and an optional [fuzzy] rule base;
    /// omitted keys use repo defaults, not from the paper.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl MatcherArgs {
    fn settings(&self) -> Result<MatcherSettings> {
        match &self.config {
            Some(p) => MatcherSettings::load(p),
            None => Ok(MatcherSettings::default()),
        }
    }
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    traj: PathBuf,
    #[command(flatten)]
    matcher: MatcherArgs,
    /// Directory for matched.csv and edge_sequence.txt.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Args)]
struct EvalArgs {
    /// Matched edge ids, one per line.
    #[arg(long)]
    sequence: PathBuf,
    /// Ground-truth edge ids, one per line.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    cluster: ClusterArgs,
    #[command(flatten)]
    matcher: MatcherArgs,
    /// Timing repetitions; the median is reported (repo default, not from the paper).
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Comma-separated eps values for eps_sweep.csv [repo default: eps/2, eps, 2eps, 4eps, not from the paper].
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    /// Roads per direction (repo default, not from the paper).
    #[arg(long, default_value_t = 8)]
    road_count: usize,
    /// Block length in meters (repo default, not from the paper).
    #[arg(long, default_value_t = 200.0)]
    block_m: f64,
    /// Travel speed in m/s (repo default, not from the paper).
    #[arg(long, default_value_t = 20.0)]
    speed: f64,
    /// Jitter sigma while moving, meters (repo default, not from the paper).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Dwell as START_S:DURATION_S:SIGMA_M; repeatable.
    #[arg(long = "dwell", value_parser = parse_dwell)]
    dwells: Vec<DwellSpec>,
    /// Directory for network.csv, trajectory.csv and truth.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_dwell(s: &str) -> std::result::Result<DwellSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected START_S:DURATION_S:SIGMA_M".into());
    }
    let start = parts[0].parse().map_err(|e| format!("start: {e}"))?;
    let duration = parts[1].parse().map_err(|e| format!("duration: {e}"))?;
    let sigma = parts[2].parse().map_err(|e| format!("sigma: {e}"))?;
    Ok(DwellSpec::new(start, duration, sigma))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(path, e))
}

fn load_network(path: &Path, format: InputFormat) -> Result<RoadNetwork> {
    parse_road_network(path, format.network())
}

fn load_trajectory(path: &Path, format: InputFormat) -> Result<Trajectory> {
    parse_trajectory(path, &format.trajectory())
}

fn knn_curve(a: KnnArgs) -> Result<()> {
    if a.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let traj = load_trajectory(&a.traj, a.format.format)?;
    let curve = knn_distance_curve(&traj, a.k, a.metric.into())?;
    write_file(&a.out, |w| curve.write_csv(w))?;
    if curve.len() >= 3 {
        println!("rank,distance,score");
        for c in elbow_candidates(&curve, a.top)? {
            println!("{},{},{}", c.index + 1, c.distance, c.score);
        }
    }
    Ok(())
}

fn staypoints(a: StayArgs) -> Result<()> {
    let params = a.cluster.params()?;
    let traj = load_trajectory(&a.traj, a.format.format)?;
    let labels = dbscan(&traj, &params)?;
    let stays = summarize_clusters(&traj, &labels);
    let reduced = reduce_trajectory(&traj, &labels, &stays);
    create_dir(&a.out_dir)?;
    write_file(&a.out_dir.join("labels.csv"), |w| {
        labels.write_csv(&traj, w)
    })?;
    write_file(&a.out_dir.join("staypoints.csv"), |w| {
        write_stay_points_csv(&stays, w)
    })?;
    save_trajectory(&reduced.records, a.out_dir.join("reduced.csv"))?;
    println!("cluster_count={}", labels.cluster_count());
    println!("noise_count={}", labels.noise_count());
    println!("output_size={}", reduced.len());
    Ok(())
}

fn reduce(a: ReduceArgs) -> Result<()> {
    let params = a.cluster.params()?;
    let traj = load_trajectory(&a.traj, a.format.format)?;
    let labels = dbscan(&traj, &params)?;
    let stays = summarize_clusters(&traj, &labels);
    let reduced = reduce_trajectory(&traj, &labels, &stays);
    save_trajectory(&reduced.records, &a.out)?;
    println!("input_size={}", traj.len());
    println!("output_size={}", reduced.len());
    Ok(())
}

fn write_match(dir: &Path, prefix: &str, r: &MatchResult) -> Result<()> {
    write_file(&dir.join(format!("{prefix}matched.csv")), |w| {
        r.write_csv(w)
    })?;
    save_edge_list(
        &r.edge_sequence,
        dir.join(format!("{prefix}edge_sequence.txt")),
    )
}

fn match_cmd(a: MatchArgs) -> Result<()> {
    let settings = a.matcher.settings()?;
    let rules = settings.rule_base()?;
    let network = load_network(&a.network, a.format.format)?;
    let traj = load_trajectory(&a.traj, a.format.format)?;
    let result = Matcher::new(&network, &rules, settings.matcher)?.match_trajectory(&traj)?;
    create_dir(&a.out_dir)?;
    write_match(&a.out_dir, "", &result)?;
    let low = result.matched.iter().filter(|m| !m.confident).count();
    println!("points={}", result.total_points);
    println!("edges={}", result.edge_sequence.len());
    println!("low_confidence={low}");
    println!("wall_time_s={}", result.wall_time.as_secs_f64());
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let seq = read_edge_list(&a.sequence)?;
    let truth = read_edge_list(&a.truth)?;
    println!("correct_links={}", correct_link_count(&seq, &truth));
    println!("total_truth_links={}", truth.len());
    println!("matched_links={}", seq.len());
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let dbscan_params = a.cluster.params()?;
    if a.repetitions == 0 {
        return Err(Error::InvalidParameter(
            "repetitions must be at least 1".into(),
        ));
    }
    let sweep_eps = a
        .sweep
        .clone()
        .unwrap_or_else(|| default_eps_values(a.cluster.eps));
    if let Some(bad) = sweep_eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "sweep eps must be positive, got {bad}"
        )));
    }
    let settings = a.matcher.settings()?;
    let rules = settings.rule_base()?;
    let network = load_network(&a.network, a.format.format)?;
    let traj = load_trajectory(&a.traj, a.format.format)?;
    let truth = parse_ground_truth(&a.truth, &network)?;

    let params = PipelineParams {
        dbscan: dbscan_params,
        repetitions: a.repetitions,
    };
    let run = run_pipeline(&network, &traj, &truth, &params, &rules, &settings.matcher)?;
    let sweep = eps_sweep(&traj, &dbscan_params, &sweep_eps)?;
    let summary = PipelineSummary::from_run(&run);

    create_dir(&a.out_dir)?;
    export_report(&summary, &sweep, &a.out_dir)?;
    write_file(&a.out_dir.join("staypoints.csv"), |w| {
        write_stay_points_csv(&run.stay_points, w)
    })?;
    save_trajectory(
        run.reduced_trajectory.records(),
        a.out_dir.join("reduced.csv"),
    )?;
    write_match(&a.out_dir, "raw_", &run.raw)?;
    write_match(&a.out_dir, "reduced_", &run.reduced)?;

    let r = &run.report;
    println!("cluster_count={}", summary.cluster_count);
    println!("noise_count={}", summary.noise_count);
    println!(
        "correct_links raw={} reduced={} of {}",
        r.raw.correct_links, r.reduced.correct_links, r.raw.total_truth_links
    );
    println!("accuracy_delta={}", r.accuracy_delta);
    println!("volume_reduction_pct={:.2}", r.volume_reduction_pct);
    println!("time_reduction_pct={:.2}", r.time_reduction_pct);
    println!("speed_gain_pct={:.2}", r.speed_gain_pct);
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let params = ScenarioParams {
        seed: a.seed,
        road_count: a.road_count,
        block_m: a.block_m,
        speed_mps: a.speed,
        sigma_m: a.sigma,
        dwells: a.dwells,
        ..ScenarioParams::default()
    };
    let sc = generate_scenario_with(&params)?;
    sc.save(&a.out_dir)?;
    println!("edges={}", sc.network.len());
    println!("points={}", sc.trajectory.len());
    println!("route_edges={}", sc.truth.len());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::KnnCurve(a) => knn_curve(a),
        Command::Staypoints(a) => staypoints(a),
        Command::Reduce(a) => reduce(a),
        Command::Match(a) => match_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Input => 2,
                ErrorClass::Domain => 3,
            })
        }
    }
}
