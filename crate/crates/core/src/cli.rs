//! Experiment configuration, parsing and CSV reporting.
//!
//! Flags may also be given in a flat `key=value` file passed with
//! `--config`; the keys are the long flag names and command-line flags win.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use crate::clock::Clock;
use crate::ep_router::{EpConfig, SetupTiming};
use crate::sim::{self, Replicated, RunConfig, SimError};
use crate::stats::Summary;
use crate::topology::{load_topology, Topology, TopologyError};
use crate::traffic::{HoldingModel, TrafficConfig, TrafficError};
use crate::wavelength::StrategyKind;

pub const CSV_HEADER: [&str; 13] = [
    "experiment", "topology", "W", "load", "holding", "strategy", "requests", "G", "C", "seed", "metric", "mean", "std",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    /// `--help` or `--version` was requested; carries the rendered text.
    #[error("{0}")]
    Help(String),
    #[error("{0}")]
    Usage(String),
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("cannot read config file {path}: {source}")]
    ConfigFile { path: PathBuf, source: std::io::Error },
    #[error("config file line {line}: expected key=value")]
    ConfigLine { line: usize },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot load topology {path}: {message}")]
    Topology { path: String, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// 1 for usage and configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Holding-time choice as written on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HoldingSpec {
    Exponential,
    Pareto { shape: f64, location: f64 },
    /// Pareto with this location and the shape that matches `mean_holding`.
    ParetoMatched { location: f64 },
}

impl FromStr for HoldingSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.parse::<f64>().map_err(|_| format!("bad number `{x}` in `{s}`"));
        match parts.as_slice() {
            ["exponential"] => Ok(HoldingSpec::Exponential),
            ["pareto", shape, location] => Ok(HoldingSpec::Pareto {
                shape: num(shape)?,
                location: num(location)?,
            }),
            ["pareto-matched", location] => Ok(HoldingSpec::ParetoMatched { location: num(location)? }),
            _ => Err(format!(
                "unknown holding `{s}` (exponential, pareto:SHAPE:LOCATION, pareto-matched:LOCATION)"
            )),
        }
    }
}

impl fmt::Display for HoldingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoldingSpec::Exponential => f.write_str("exponential"),
            HoldingSpec::Pareto { shape, location } => write!(f, "pareto:{shape}:{location}"),
            HoldingSpec::ParetoMatched { location } => write!(f, "pareto-matched:{location}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimingMode {
    Logical,
    Wall,
}

impl FromStr for TimingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logical" => Ok(TimingMode::Logical),
            "wall" => Ok(TimingMode::Wall),
            other => Err(format!("unknown timing `{other}` (logical, wall)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepSpec {
    Generations(Vec<u32>),
    Wavelengths(Vec<usize>),
    Load(Vec<f64>),
}

impl SweepSpec {
    fn parse(param: &str, values: &str) -> Result<Self, ConfigError> {
        let bad = |message: String| ConfigError::Invalid {
            field: "sweep",
            message,
        };
        let integers = || -> Result<Vec<u64>, ConfigError> {
            if let Some((lo, hi)) = values.split_once(':') {
                let lo: u64 = lo.parse().map_err(|_| bad(format!("bad range `{values}`")))?;
                let hi: u64 = hi.parse().map_err(|_| bad(format!("bad range `{values}`")))?;
                if lo > hi {
                    return Err(bad(format!("empty range `{values}`")));
                }
                Ok((lo..=hi).collect())
            } else {
                values
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad(format!("bad value `{v}`"))))
                    .collect()
            }
        };
        let spec = match param {
            "generations" => SweepSpec::Generations(integers()?.into_iter().map(|g| g as u32).collect()),
            "wavelengths" => SweepSpec::Wavelengths(integers()?.into_iter().map(|w| w as usize).collect()),
            "load" => SweepSpec::Load(
                values
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad(format!("bad load `{v}`"))))
                    .collect::<Result<_, _>>()?,
            ),
            other => return Err(bad(format!("unknown sweep parameter `{other}` (generations, wavelengths, load)"))),
        };
        let positive = match &spec {
            SweepSpec::Generations(v) => v.iter().all(|&g| g > 0),
            SweepSpec::Wavelengths(v) => v.iter().all(|&w| w > 0),
            SweepSpec::Load(v) => v.iter().all(|&l| l > 0.0),
        };
        if !positive {
            return Err(bad("sweep values must be positive".into()));
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareSpec {
    Strategies,
    Holding,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Single,
    Sweep(SweepSpec),
    Compare(CompareSpec),
}

/// Fully resolved experiment parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// `nsf14` or a path to a topology file.
    pub topology: String,
    pub wavelengths: usize,
    pub load_erlang: f64,
    pub mean_holding: f64,
    pub holding: HoldingSpec,
    pub strategy: StrategyKind,
    pub requests: u64,
    pub generations: u32,
    pub offspring: u32,
    pub hop_bound: usize,
    pub init_budget: u32,
    pub mutation_budget: u32,
    pub replications: u32,
    pub base_seed: u64,
    pub warmup_fraction: f64,
    pub timing: TimingMode,
    pub output: Option<PathBuf>,
    pub action: Action,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: "nsf14".into(),
            wavelengths: 8,
            load_erlang: 60.0,
            mean_holding: 10.0,
            holding: HoldingSpec::Exponential,
            strategy: StrategyKind::FirstFit,
            requests: 100_000,
            generations: 8,
            offspring: 15,
            hop_bound: 4,
            init_budget: 200,
            mutation_budget: 200,
            replications: 10,
            base_seed: 1,
            warmup_fraction: 0.05,
            timing: TimingMode::Logical,
            output: None,
            action: Action::Single,
        }
    }
}

impl ExperimentConfig {
    pub fn holding_model(&self) -> Result<HoldingModel, ConfigError> {
        let invalid = |e: TrafficError| ConfigError::Invalid {
            field: "holding",
            message: e.to_string(),
        };
        match self.holding {
            HoldingSpec::Exponential => HoldingModel::exponential(self.mean_holding).map_err(invalid),
            HoldingSpec::Pareto { shape, location } => HoldingModel::pareto(shape, location).map_err(invalid),
            HoldingSpec::ParetoMatched { location } => {
                HoldingModel::pareto_matched(self.mean_holding, location).map_err(invalid)
            }
        }
    }

    /// Arrival rate giving the configured Erlang load with the actual
    /// holding-time mean.
    pub fn arrival_rate(&self) -> Result<f64, ConfigError> {
        Ok(self.load_erlang / self.holding_model()?.mean())
    }

    /// Holding column text; matched Pareto is written with its solved shape.
    pub fn holding_label(&self) -> Result<String, ConfigError> {
        Ok(match self.holding_model()? {
            HoldingModel::Exponential { .. } => "exponential".to_string(),
            HoldingModel::Pareto { shape, location } => HoldingSpec::Pareto { shape, location }.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn need(ok: bool, field: &'static str, message: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    field,
                    message: message.to_string(),
                })
            }
        }
        need(self.wavelengths > 0, "wavelengths", "W must be at least 1")?;
        need(self.load_erlang > 0.0 && self.load_erlang.is_finite(), "load", "must be positive")?;
        need(self.mean_holding > 0.0 && self.mean_holding.is_finite(), "mean-holding", "must be positive")?;
        need(self.requests > 0, "requests", "must be at least 1")?;
        need(self.generations > 0, "generations", "G must be at least 1")?;
        need(self.offspring > 0, "offspring", "C must be at least 1")?;
        need(self.hop_bound > 0, "hop-bound", "must be at least 1")?;
        need(self.init_budget > 0, "init-budget", "must be at least 1")?;
        need(self.mutation_budget > 0, "mutation-budget", "must be at least 1")?;
        need(self.replications > 0, "replications", "must be at least 1")?;
        need(
            (0.0..1.0).contains(&self.warmup_fraction),
            "warmup",
            "must be in [0, 1)",
        )?;
        self.holding_model()?;
        Ok(())
    }

    pub fn load_topology(&self) -> Result<Topology, RunError> {
        if self.topology == "nsf14" {
            return Ok(Topology::nsf14());
        }
        let text = fs::read_to_string(&self.topology).map_err(|e| RunError::Topology {
            path: self.topology.clone(),
            message: e.to_string(),
        })?;
        load_topology(&text).map_err(|e: TopologyError| RunError::Topology {
            path: self.topology.clone(),
            message: e.to_string(),
        })
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let holding = self.holding_model()?;
        let traffic = TrafficConfig::for_load(self.load_erlang, holding, self.requests, self.base_seed).map_err(|e| {
            ConfigError::Invalid {
                field: "load",
                message: e.to_string(),
            }
        })?;
        let (timing, clock) = match self.timing {
            TimingMode::Logical => (SetupTiming::default(), Clock::default()),
            TimingMode::Wall => (SetupTiming::wall_clock_defaults(), Clock::Wall),
        };
        let ep = EpConfig {
            generations: self.generations,
            offspring: self.offspring,
            hop_bound: self.hop_bound,
            init_budget: self.init_budget,
            mutation_budget: self.mutation_budget,
            timing,
            seed: self.base_seed,
        };
        let mut cfg = RunConfig::new(traffic, ep, self.wavelengths, self.strategy);
        cfg.clock = clock;
        cfg.warmup_fraction = self.warmup_fraction;
        Ok(cfg)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wdm-ep",
    version,
    about = "Evolutionary-programming RWA simulator for WDM networks",
    args_override_self = true
)]
struct Args {
    /// Flat key=value file with defaults for any of the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    /// `nsf14` or a topology file path
    #[arg(long)]
    topology: Option<String>,
    /// Wavelengths per fiber (W)
    #[arg(long)]
    wavelengths: Option<usize>,
    /// Offered load in Erlang
    #[arg(long)]
    load: Option<f64>,
    #[arg(long)]
    mean_holding: Option<f64>,
    /// exponential | pareto:SHAPE:LOCATION | pareto-matched:LOCATION
    #[arg(long)]
    holding: Option<HoldingSpec>,
    /// first-fit | random | round-robin
    #[arg(long)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    requests: Option<u64>,
    /// Generations per request (G)
    #[arg(long)]
    generations: Option<u32>,
    /// Offspring per generation (C)
    #[arg(long)]
    offspring: Option<u32>,
    #[arg(long)]
    hop_bound: Option<usize>,
    /// Founder walks per hop bound before relaxing
    #[arg(long)]
    init_budget: Option<u32>,
    /// Mutation walks per hop bound before relaxing
    #[arg(long)]
    mutation_budget: Option<u32>,
    #[arg(long)]
    replications: Option<u32>,
    /// Base seed; replication i uses seed + i
    #[arg(long)]
    seed: Option<u64>,
    /// Leading fraction of requests excluded from statistics
    #[arg(long)]
    warmup: Option<f64>,
    /// logical (reproducible) | wall
    #[arg(long)]
    timing: Option<TimingMode>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
    /// Sweep one parameter: generations|wavelengths|load and a range `a:b` or list `a,b,c`
    #[arg(long, num_args = 2, value_names = ["PARAM", "VALUES"])]
    sweep: Option<Vec<String>>,
    /// Paired-seed comparison: strategies | holding
    #[arg(long)]
    compare: Option<String>,
}

fn config_file_tokens(path: &PathBuf) -> Result<Vec<String>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::ConfigFile {
        path: path.clone(),
        source,
    })?;
    let mut tokens = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::ConfigLine { line: i + 1 })?;
        let key = key.trim();
        if key == "config" {
            return Err(ConfigError::ConfigLine { line: i + 1 });
        }
        tokens.push(format!("--{key}"));
        tokens.extend(value.split_whitespace().map(str::to_string));
    }
    Ok(tokens)
}

/// Parses command-line arguments (including the program name) into an
/// experiment, merging an optional `--config` file underneath.
pub fn parse_config<I, S>(argv: I) -> Result<ExperimentConfig, ConfigError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let usage = |e: clap::Error| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ConfigError::Help(e.render().to_string()),
        _ => ConfigError::Usage(e.render().to_string()),
    };
    let first = Args::try_parse_from(&argv).map_err(usage)?;
    let args = match &first.config {
        Some(path) => {
            let mut merged = vec![argv.first().cloned().unwrap_or_else(|| "wdm-ep".into())];
            merged.extend(config_file_tokens(path)?);
            merged.extend(argv.iter().skip(1).cloned());
            Args::try_parse_from(&merged).map_err(usage)?
        }
        None => first,
    };

    let d = ExperimentConfig::default();
    let action = match (&args.sweep, &args.compare) {
        (Some(_), Some(_)) => return Err(ConfigError::Usage("--sweep and --compare are exclusive".into())),
        (Some(s), None) => Action::Sweep(SweepSpec::parse(&s[0], &s[1])?),
        (None, Some(c)) => Action::Compare(match c.as_str() {
            "strategies" => CompareSpec::Strategies,
            "holding" => CompareSpec::Holding,
            other => {
                return Err(ConfigError::Invalid {
                    field: "compare",
                    message: format!("unknown comparison `{other}` (strategies, holding)"),
                })
            }
        }),
        (None, None) => Action::Single,
    };
    let cfg = ExperimentConfig {
        topology: args.topology.unwrap_or(d.topology),
        wavelengths: args.wavelengths.unwrap_or(d.wavelengths),
        load_erlang: args.load.unwrap_or(d.load_erlang),
        mean_holding: args.mean_holding.unwrap_or(d.mean_holding),
        holding: args.holding.unwrap_or(d.holding),
        strategy: args.strategy.unwrap_or(d.strategy),
        requests: args.requests.unwrap_or(d.requests),
        generations: args.generations.unwrap_or(d.generations),
        offspring: args.offspring.unwrap_or(d.offspring),
        hop_bound: args.hop_bound.unwrap_or(d.hop_bound),
        init_budget: args.init_budget.unwrap_or(d.init_budget),
        mutation_budget: args.mutation_budget.unwrap_or(d.mutation_budget),
        replications: args.replications.unwrap_or(d.replications),
        base_seed: args.seed.unwrap_or(d.base_seed),
        warmup_fraction: args.warmup.unwrap_or(d.warmup_fraction),
        timing: args.timing.unwrap_or(d.timing),
        output: args.output,
        action,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// One replicated configuration point, ready to be written out.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub result: Replicated,
}

pub const METRICS: [&str; 3] = ["blocking_probability", "mean_execution_time_ms", "total_fitness_evaluations"];

impl PointResult {
    fn metric(&self, name: &str) -> Summary {
        match name {
            "blocking_probability" => self.result.blocking_probability,
            "mean_execution_time_ms" => self.result.mean_execution_time_ms,
            "total_fitness_evaluations" => self.result.total_fitness_evaluations,
            _ => unreachable!("unknown metric {name}"),
        }
    }
}

/// Writes the header and three metric rows per point.
pub fn write_csv<W: Write>(out: W, points: &[PointResult]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in points {
        let c = &p.config;
        let holding = c.holding_label()?;
        for metric in METRICS {
            let s = p.metric(metric);
            w.write_record([
                p.experiment.clone(),
                c.topology.clone(),
                c.wavelengths.to_string(),
                c.load_erlang.to_string(),
                holding.clone(),
                c.strategy.to_string(),
                c.requests.to_string(),
                c.generations.to_string(),
                c.offspring.to_string(),
                c.base_seed.to_string(),
                metric.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_point(topology: &Topology, experiment: &str, cfg: ExperimentConfig) -> Result<PointResult, RunError> {
    let run_cfg = cfg.run_config()?;
    let result = sim::replicate(topology, &run_cfg, cfg.replications, cfg.base_seed)?;
    Ok(PointResult {
        experiment: experiment.to_string(),
        config: cfg,
        result,
    })
}

/// Executes the configured experiment and returns its points.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<PointResult>, RunError> {
    cfg.validate()?;
    let topology = cfg.load_topology()?;
    match &cfg.action {
        Action::Single => Ok(vec![run_point(&topology, "single", cfg.clone())?]),
        Action::Sweep(spec) => sweep_points(&topology, cfg, spec),
        Action::Compare(CompareSpec::Strategies) => compare_strategies(&topology, cfg),
        Action::Compare(CompareSpec::Holding) => compare_holding(&topology, cfg),
    }
}

fn sweep_points(topology: &Topology, cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<Vec<PointResult>, RunError> {
    let variants: Vec<ExperimentConfig> = match spec {
        SweepSpec::Generations(gs) => gs
            .iter()
            .map(|&g| ExperimentConfig {
                generations: g,
                ..cfg.clone()
            })
            .collect(),
        SweepSpec::Wavelengths(ws) => ws
            .iter()
            .map(|&w| ExperimentConfig {
                wavelengths: w,
                ..cfg.clone()
            })
            .collect(),
        SweepSpec::Load(ls) => ls
            .iter()
            .map(|&l| ExperimentConfig {
                load_erlang: l,
                ..cfg.clone()
            })
            .collect(),
    };
    let name = match spec {
        SweepSpec::Generations(_) => "sweep-generations",
        SweepSpec::Wavelengths(_) => "sweep-wavelengths",
        SweepSpec::Load(_) => "sweep-load",
    };
    variants.into_iter().map(|v| run_point(topology, name, v)).collect()
}

/// All three wavelength strategies on the same seeds.
pub fn compare_strategies(topology: &Topology, cfg: &ExperimentConfig) -> Result<Vec<PointResult>, RunError> {
    StrategyKind::ALL
        .iter()
        .map(|&strategy| {
            run_point(
                topology,
                "compare-strategies",
                ExperimentConfig {
                    strategy,
                    ..cfg.clone()
                },
            )
        })
        .collect()
}

/// The configured holding model against an exponential of equal mean, at
/// equal arrival rate and seeds.
pub fn compare_holding(topology: &Topology, cfg: &ExperimentConfig) -> Result<Vec<PointResult>, RunError> {
    let mean = cfg.holding_model()?.mean();
    let exponential = ExperimentConfig {
        holding: HoldingSpec::Exponential,
        mean_holding: mean,
        ..cfg.clone()
    };
    let configured = ExperimentConfig {
        mean_holding: mean,
        ..cfg.clone()
    };
    Ok(vec![
        run_point(topology, "compare-holding", exponential)?,
        run_point(topology, "compare-holding", configured)?,
    ])
}

/// Runs the experiment and writes CSV to `--output` or `stdout`, with a
/// human-readable summary on `log`.
pub fn run_experiment(cfg: &ExperimentConfig, stdout: &mut dyn Write, log: &mut dyn Write) -> Result<(), RunError> {
    let points = execute(cfg)?;
    for p in &points {
        let r = &p.result;
        writeln!(
            log,
            "{} W={} load={} holding={} strategy={} G={}: blocking {:.6} (all requests {:.6}, warm-up {}) exec {:.4} ms",
            p.experiment,
            p.config.wavelengths,
            p.config.load_erlang,
            p.config.holding_label()?,
            p.config.strategy,
            p.config.generations,
            r.blocking_probability.mean,
            r.blocking_probability_all.mean,
            p.config.warmup_fraction,
            r.mean_execution_time_ms.mean,
        )?;
    }
    match &cfg.output {
        Some(path) => write_csv(fs::File::create(path)?, &points),
        None => write_csv(stdout, &points),
    }
}
