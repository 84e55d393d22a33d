use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use splitplan::baselines::{self, Strategy};
use splitplan::hwmodel::evaluate_split;
use splitplan::initnum::{self, InitScheme};
use splitplan::search::{self, AccuracyOracle, Objective, SearchConfig, SurrogateOracle, TableOracle};
use splitplan::splitspace::{SearchSpace, ViewMode};
use splitplan::{CostReport, Exec, HardwareConfig, NetworkIR};

#[derive(Parser)]
#[command(name = "splitplan", version, about = "Plan split inference between sensors and an aggregator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cost of one split of a network.
    Profile(ProfileArgs),
    /// Comparison table of every reference split strategy.
    Split(SplitArgs),
    /// Evolutionary architecture search over a split-aware space.
    Search(SearchArgs),
    /// Initialization variances and Monte Carlo signal gains.
    InitCheck(InitArgs),
    /// Sub-networks sampled together in one training step.
    SamplePlan(PlanArgs),
    /// List the one-hot descriptors of a space.
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct HwArgs {
    /// Hardware config JSON; defaults to the reference system for the input.
    #[arg(long)]
    hw: Option<PathBuf>,
    #[arg(long)]
    comp_sen_ops_per_s: Option<f64>,
    #[arg(long)]
    comp_agg_ops_per_s: Option<f64>,
    /// Shared bus bandwidth in bits per second.
    #[arg(long)]
    bw_total_bps: Option<f64>,
    #[arg(long)]
    mem_sen_bytes: Option<u64>,
    #[arg(long)]
    num_sensors: Option<u64>,
    #[arg(long)]
    act_bits: Option<u32>,
    #[arg(long)]
    weight_bits: Option<u32>,
}

#[derive(Args)]
struct OutArgs {
    /// Directory receiving the output files; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    network: PathBuf,
    #[command(flatten)]
    hw: HwArgs,
    /// Layers before this index run on the sensor.
    #[arg(long, conflicts_with = "strategy", required_unless_present = "strategy")]
    split: Option<usize>,
    /// all-on-sen, all-on-agg, neurosurgeon or split-at-fusion.
    #[arg(long)]
    strategy: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SplitArgs {
    network: PathBuf,
    #[command(flatten)]
    hw: HwArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

#[derive(Args)]
struct SearchArgs {
    space: PathBuf,
    #[command(flatten)]
    hw: HwArgs,
    /// Accuracy table JSON: a list of {"descriptor", "accuracy"} records.
    #[arg(long, conflicts_with = "surrogate", required_unless_present = "surrogate")]
    oracle: Option<PathBuf>,
    /// Use the synthetic accuracy model instead of a table.
    #[arg(long)]
    surrogate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    population: usize,
    #[arg(long, default_value_t = 20)]
    generations: usize,
    #[arg(long, default_value_t = 0.1)]
    mutation_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    crossover_rate: f64,
    /// Survivors per generation; half the population when omitted.
    #[arg(long)]
    top_k: Option<usize>,
    /// Minimize latency subject to this accuracy.
    #[arg(long, conflicts_with = "latency_cap_ms")]
    accuracy_floor: Option<f64>,
    /// Maximize accuracy subject to this overall latency.
    #[arg(long)]
    latency_cap_ms: Option<f64>,
    /// Multiplies the sensor throughput after all other hardware settings.
    #[arg(long, default_value_t = 1.0)]
    comp_sen_scale: f64,
    #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
    exec: ExecArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct InitArgs {
    /// Comma-separated scheme names; all when omitted.
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<String>,
    /// Comma-separated `k:c_in:c_out` shapes.
    #[arg(long, value_delimiter = ',', default_values_t = ["1:256:8".to_string(), "3:256:8".to_string(), "3:64:64".to_string()])]
    shapes: Vec<String>,
    #[arg(long, default_value_t = 4)]
    spatial_px: u64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

#[derive(Args)]
struct PlanArgs {
    space: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Views for the multi mode; the space's own count when omitted, or 12
    /// for a single-view space.
    #[arg(long)]
    views: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct EnumerateArgs {
    space: PathBuf,
    #[arg(long, default_value_t = 1000)]
    max_count: usize,
    #[command(flatten)]
    out: OutArgs,
}

/// Failure reported as a JSON record on stderr.
struct Failure {
    kind: &'static str,
    file: Option<PathBuf>,
    message: String,
}

impl Failure {
    fn lib(file: Option<&Path>, e: splitplan::Error) -> Self {
        Failure { kind: e.kind(), file: file.map(Path::to_path_buf), message: e.to_string() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { kind: "usage", file: None, message: message.into() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure { kind: "io", file: Some(path.to_path_buf()), message: e.to_string() })
}

fn load<T>(path: &Path, parse: impl FnOnce(&str) -> splitplan::Result<T>) -> CliResult<T> {
    parse(&read(path)?).map_err(|e| Failure::lib(Some(path), e))
}

impl HwArgs {
    fn resolve(&self, default: HardwareConfig) -> CliResult<HardwareConfig> {
        let mut hw = match &self.hw {
            Some(path) => load(path, HardwareConfig::from_json)?,
            None => default,
        };
        if let Some(v) = self.comp_sen_ops_per_s {
            hw.comp_sen = v;
        }
        if let Some(v) = self.comp_agg_ops_per_s {
            hw.comp_agg = v;
        }
        if let Some(v) = self.bw_total_bps {
            hw.bw_total = v / 8.0;
        }
        if let Some(v) = self.mem_sen_bytes {
            hw.mem_sen = v;
        }
        if let Some(v) = self.num_sensors {
            hw.num_sensors = v;
        }
        if let Some(v) = self.act_bits {
            hw.act_bits = v;
        }
        if let Some(v) = self.weight_bits {
            hw.weight_bits = v;
        }
        hw.validate().map_err(|e| Failure::lib(self.hw.as_deref(), e))?;
        Ok(hw)
    }
}

impl OutArgs {
    /// Print `text` and, with `--out`, also store it as `name`.
    fn emit(&self, name: &str, text: &str) -> CliResult<()> {
        print!("{text}");
        self.store(name, text)
    }

    fn store(&self, name: &str, text: &str) -> CliResult<()> {
        let Some(dir) = &self.out else { return Ok(()) };
        let path = dir.join(name);
        let io = |e: std::io::Error| Failure { kind: "io", file: Some(path.clone()), message: e.to_string() };
        fs::create_dir_all(dir).map_err(io)?;
        fs::write(&path, text).map_err(io)
    }
}

fn network_hw(net: &NetworkIR, args: &HwArgs) -> CliResult<HardwareConfig> {
    let default = if net.fusion_index().is_some() { HardwareConfig::multi_view() } else { HardwareConfig::single_view() };
    args.resolve(default)
}

fn backbone_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "network".into(), |s| s.to_string_lossy().into_owned())
}

fn json_text<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn profile(args: ProfileArgs) -> CliResult<()> {
    let net = load(&args.network, NetworkIR::from_json)?;
    let hw = network_hw(&net, &args.hw)?;
    let lib = |e| Failure::lib(Some(&args.network), e);
    let (label, index, report): (String, usize, CostReport) = match (&args.strategy, args.split) {
        (Some(name), _) => {
            let strategy = Strategy::parse(name).ok_or_else(|| Failure::usage(format!("unknown strategy `{name}`")))?;
            let d = strategy.apply(&net, &hw).map_err(lib)?;
            (strategy.name().into(), d.index, d.report)
        }
        (None, Some(i)) => (format!("split-{i}"), i, evaluate_split(&net, i, &hw).map_err(lib)?),
        (None, None) => return Err(Failure::usage("pass --split or --strategy")),
    };
    let backbone = backbone_name(&args.network);
    let csv = format!("method,backbone,split_index,{}\n{label},{backbone},{index},{}\n", CostReport::CSV_HEADER, report.csv_row());
    args.out.emit("profile.csv", &csv)?;
    let record = json!({ "method": label, "backbone": backbone, "split_index": index, "report": report });
    args.out.store("profile.json", &json_text(&record))
}

fn split(args: SplitArgs) -> CliResult<()> {
    let net = load(&args.network, NetworkIR::from_json)?;
    let hw = network_hw(&net, &args.hw)?;
    let backbone = backbone_name(&args.network);
    let mut csv = format!("{}\n", baselines::TABLE_HEADER);
    let fused = net.fusion_index().is_some();
    for strategy in Strategy::ALL {
        if fused && strategy == Strategy::AllOnSensor {
            // the fusion layer needs every view and cannot run on one sensor
            continue;
        }
        match strategy.apply(&net, &hw) {
            Ok(d) => writeln!(csv, "{}", baselines::table_row(&backbone, &d)).expect("string write"),
            Err(splitplan::Error::NoFusionLayer | splitplan::Error::NoFeasible) => {}
            Err(e) => return Err(Failure::lib(Some(&args.network), e)),
        }
    }
    args.out.emit("split.csv", &csv)
}

fn search_cmd(args: SearchArgs) -> CliResult<()> {
    let space = load(&args.space, SearchSpace::from_json)?;
    let mut hw = args.hw.resolve(splitplan::fixtures::hardware_for(&space))?;
    hw.comp_sen *= args.comp_sen_scale;
    hw.validate().map_err(|e| Failure::lib(None, e))?;
    let oracle: Box<dyn AccuracyOracle> = match &args.oracle {
        Some(path) => Box::new(load(path, TableOracle::from_json)?),
        None => Box::new(SurrogateOracle::with_defaults(space.clone(), args.seed)),
    };
    let objective = match (args.accuracy_floor, args.latency_cap_ms) {
        (_, Some(cap)) => Objective::MaxAccuracy { latency_cap: cap / 1e3 },
        (floor, None) => Objective::MinLatency { accuracy_floor: floor.unwrap_or(0.0) },
    };
    let cfg = SearchConfig {
        population: args.population,
        generations: args.generations,
        mutation_rate: args.mutation_rate,
        crossover_rate: args.crossover_rate,
        top_k: args.top_k,
        seed: args.seed,
        objective,
        mem_sen: None,
    };
    let exec = match args.exec {
        ExecArg::Sequential => Exec::Sequential,
        ExecArg::Parallel => Exec::Parallel,
    };
    let result = search::run(&space, &hw, oracle.as_ref(), &cfg, exec).map_err(|e| Failure::lib(None, e))?;
    args.out.emit("log.csv", &result.log_csv())?;
    let best = &result.best;
    println!(
        "best {} latency {:.4} ms accuracy {:.4} sensor share {:.3} peak {} B",
        best.descriptor,
        best.report.overall * 1e3,
        best.accuracy,
        best.sensor_op_share(),
        best.report.peak_mem_sen
    );
    args.out.store("front.json", &format!("{}\n", result.front_json()))?;
    args.out.store("best.json", &json_text(best))
}

fn parse_shape(text: &str) -> CliResult<(u64, u64, u64)> {
    let parts: Vec<u64> = text.split(':').map(str::parse).collect::<Result<_, _>>().map_err(|_| bad_shape(text))?;
    match parts[..] {
        [k, c_in, c_out] if k > 0 && c_in > 0 && c_out > 0 => Ok((k, c_in, c_out)),
        _ => Err(bad_shape(text)),
    }
}

fn bad_shape(text: &str) -> Failure {
    Failure::usage(format!("shape `{text}` is not k:c_in:c_out with positive integers"))
}

fn init_check(args: InitArgs) -> CliResult<()> {
    let schemes = if args.schemes.is_empty() {
        InitScheme::ALL.to_vec()
    } else {
        args.schemes
            .iter()
            .map(|s| InitScheme::parse(s).ok_or_else(|| Failure::usage(format!("unknown scheme `{s}`"))))
            .collect::<CliResult<_>>()?
    };
    let shapes = args.shapes.iter().map(|s| parse_shape(s)).collect::<CliResult<Vec<_>>>()?;
    if args.trials == 0 || args.spatial_px == 0 {
        return Err(Failure::usage("--trials and --spatial-px must be positive"));
    }
    let rows = initnum::report(&schemes, &shapes, args.spatial_px, args.trials, args.seed, Exec::Parallel);
    let mut csv = format!("{}\n", initnum::REPORT_HEADER);
    for r in rows {
        writeln!(csv, "{}", r.csv_row()).expect("string write");
    }
    args.out.emit("init_check.csv", &csv)
}

fn sample_plan(args: PlanArgs) -> CliResult<()> {
    let space = load(&args.space, SearchSpace::from_json)?;
    let mode = match args.mode {
        ModeArg::Single => ViewMode::Single,
        ModeArg::Multi => ViewMode::Multi { views: args.views.unwrap_or(if space.view_mode.is_multi() { space.view_mode.views() } else { 12 }) },
    };
    let plan = space.sampling_plan(mode, args.seed).map_err(|e| Failure::lib(Some(&args.space), e))?;
    args.out.emit("plan.json", &json_text(&plan))
}

fn enumerate(args: EnumerateArgs) -> CliResult<()> {
    let space = load(&args.space, SearchSpace::from_json)?;
    let mut lines = String::new();
    for d in space.enumerate(args.max_count) {
        writeln!(lines, "{}", d.key()).expect("string write");
    }
    args.out.emit("descriptors.jsonl", &lines)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Profile(a) => profile(a),
        Command::Split(a) => split(a),
        Command::Search(a) => search_cmd(a),
        Command::InitCheck(a) => init_check(a),
        Command::SamplePlan(a) => sample_plan(a),
        Command::Enumerate(a) => enumerate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let record = json!({ "error": f.kind, "file": f.file, "message": f.message });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
