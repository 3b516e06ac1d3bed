//! Discrete-event loss simulation of lightpath arrivals and teardowns.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

use crate::clock::Clock;
use crate::ep_router::{EpConfig, EpRouter, RouteDecision, RouterError};
use crate::stats::Summary;
use crate::topology::Topology;
use crate::traffic::{generate_requests, LightpathRequest, TrafficConfig};
use crate::wavelength::{validate_constraints, AssignmentStrategy, StrategyKind, Violation, WavelengthDatabase};

pub const DEFAULT_WARMUP_FRACTION: f64 = 0.05;
pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 1000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Router(#[from] RouterError),
    #[error("wavelength constraints violated at t={time}: {}", summarize(.violations))]
    ConstraintBreach { time: f64, violations: Vec<Violation> },
    #[error("{active} lightpaths still active after the event queue drained")]
    Leak { active: usize },
    #[error("invalid run configuration: {0}")]
    Config(String),
}

fn summarize(violations: &[Violation]) -> String {
    let mut parts: Vec<String> = violations.iter().take(3).map(|v| v.to_string()).collect();
    if violations.len() > 3 {
        parts.push(format!("and {} more", violations.len() - 3));
    }
    parts.join("; ")
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    Teardown(u64),
    Arrival(LightpathRequest),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
}

impl SimEvent {
    fn key(&self) -> (f64, u8, u64) {
        match &self.kind {
            EventKind::Teardown(id) => (self.time, 0, *id),
            EventKind::Arrival(r) => (self.time, 1, r.id),
        }
    }
}

impl Eq for SimEvent {}

// Reversed so BinaryHeap pops the earliest event; teardowns precede arrivals
// at equal times, then lower request ids go first.
impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ka, ia) = self.key();
        let (tb, kb, ib) = other.key();
        ta.total_cmp(&tb).then(ka.cmp(&kb)).then(ia.cmp(&ib)).reverse()
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub traffic: TrafficConfig,
    pub ep: EpConfig,
    pub wavelengths: usize,
    pub strategy: StrategyKind,
    pub clock: Clock,
    /// Leading fraction of requests left out of the blocking and timing
    /// statistics.
    pub warmup_fraction: f64,
    /// Events between constraint checks.
    pub checkpoint_interval: u64,
}

impl RunConfig {
    pub fn new(traffic: TrafficConfig, ep: EpConfig, wavelengths: usize, strategy: StrategyKind) -> Self {
        RunConfig {
            traffic,
            ep,
            wavelengths,
            strategy,
            clock: Clock::default(),
            warmup_fraction: DEFAULT_WARMUP_FRACTION,
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
        }
    }

    /// Same configuration with every random stream reseeded from `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.traffic.seed = seed;
        self.ep.seed = seed;
        self
    }

    pub fn seed(&self) -> u64 {
        self.traffic.seed
    }

    fn validate(&self) -> Result<(), SimError> {
        self.ep.validate()?;
        if self.wavelengths == 0 {
            return Err(SimError::Config("wavelengths per link must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(SimError::Config("warm-up fraction must be in [0, 1)".into()));
        }
        if self.checkpoint_interval == 0 {
            return Err(SimError::Config("checkpoint interval must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    /// Requests after the warm-up window.
    pub offered: u64,
    pub accepted: u64,
    pub blocked: u64,
    pub blocking_probability: f64,
    /// Counts over every request, warm-up included.
    pub offered_all: u64,
    pub blocked_all: u64,
    pub blocking_probability_all: f64,
    /// Mean router time per measured request, in milliseconds.
    pub mean_execution_time_ms: f64,
    /// Mean router work units (expansions plus probes) per measured request.
    pub mean_work_units: f64,
    pub total_fitness_evaluations: u64,
    pub relaxations: u64,
    pub degenerate_mutations: u64,
    pub checkpoints: u64,
    /// Entry `g` is the fraction of measured requests that would have been
    /// blocked had the search stopped after generation `g` (0 = founder only).
    pub per_generation_blocking: Vec<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Callbacks for inspecting a run as it happens.
pub trait RunObserver {
    fn before_route(&mut self, _request: &LightpathRequest, _db: &WavelengthDatabase) {}
    fn after_route(&mut self, _request: &LightpathRequest, _decision: &RouteDecision, _db: &WavelengthDatabase) {}
    fn checkpoint(&mut self, _time: f64, _db: &WavelengthDatabase) {}
}

impl RunObserver for () {}

/// Runs one simulation to completion.
pub fn run(topology: &Topology, cfg: &RunConfig) -> Result<RunMetrics, SimError> {
    run_observed(topology, cfg, &mut ())
}

pub fn run_observed(
    topology: &Topology,
    cfg: &RunConfig,
    observer: &mut dyn RunObserver,
) -> Result<RunMetrics, SimError> {
    cfg.validate()?;
    let mut router = EpRouter::new(cfg.ep)?;
    let mut db = WavelengthDatabase::for_topology(topology, cfg.wavelengths);
    let mut strategy = AssignmentStrategy::new(cfg.strategy, cfg.seed());
    let warmup = (cfg.traffic.request_count as f64 * cfg.warmup_fraction).floor() as u64;
    let generations = cfg.ep.generations as usize;

    let mut m = RunMetrics::default();
    let mut exec_seconds = 0.0;
    let mut work_units = 0u64;
    // blocked_after[g]: measured requests still infeasible after generation g
    let mut blocked_after = vec![0u64; generations + 1];

    let mut arrivals = generate_requests(&cfg.traffic, topology);
    let mut queue = BinaryHeap::new();
    if let Some(r) = arrivals.next() {
        queue.push(SimEvent {
            time: r.arrival_time,
            kind: EventKind::Arrival(r),
        });
    }

    let mut processed = 0u64;
    let mut now = 0.0;
    while let Some(event) = queue.pop() {
        now = event.time;
        match event.kind {
            EventKind::Teardown(id) => {
                db.release(id).map_err(RouterError::from)?;
            }
            EventKind::Arrival(request) => {
                if let Some(next) = arrivals.next() {
                    queue.push(SimEvent {
                        time: next.arrival_time,
                        kind: EventKind::Arrival(next),
                    });
                }
                observer.before_route(&request, &db);
                let decision = router.route_request(topology, &request, &mut db, &mut strategy, &cfg.clock)?;
                observer.after_route(&request, &decision, &db);

                let accepted = decision.is_accepted();
                if accepted {
                    queue.push(SimEvent {
                        time: request.arrival_time + request.holding_time,
                        kind: EventKind::Teardown(request.id),
                    });
                }
                m.offered_all += 1;
                m.blocked_all += u64::from(!accepted);
                m.total_fitness_evaluations += decision.fitness_evaluations;
                m.relaxations += decision.relaxations as u64;
                m.degenerate_mutations += decision.degenerate_mutations as u64;
                if request.id >= warmup {
                    m.offered += 1;
                    if accepted {
                        m.accepted += 1;
                    } else {
                        m.blocked += 1;
                    }
                    exec_seconds += decision.elapsed;
                    work_units += decision.work.units();
                    let first = decision.first_feasible_generation.map_or(usize::MAX, |g| g as usize);
                    for (g, slot) in blocked_after.iter_mut().enumerate() {
                        *slot += u64::from(g < first);
                    }
                }
            }
        }
        processed += 1;
        if processed % cfg.checkpoint_interval == 0 {
            check(&db, topology, now)?;
            m.checkpoints += 1;
            observer.checkpoint(now, &db);
        }
    }

    check(&db, topology, now)?;
    m.checkpoints += 1;
    observer.checkpoint(now, &db);
    if !db.is_all_free() {
        return Err(SimError::Leak {
            active: db.active_count(),
        });
    }

    m.blocking_probability = ratio(m.blocked, m.offered);
    m.blocking_probability_all = ratio(m.blocked_all, m.offered_all);
    if m.offered > 0 {
        m.mean_execution_time_ms = exec_seconds * 1e3 / m.offered as f64;
        m.mean_work_units = work_units as f64 / m.offered as f64;
        m.per_generation_blocking = blocked_after.iter().map(|&b| ratio(b, m.offered)).collect();
    }
    Ok(m)
}

fn check(db: &WavelengthDatabase, topology: &Topology, time: f64) -> Result<(), SimError> {
    let violations = validate_constraints(db, topology);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SimError::ConstraintBreach { time, violations })
    }
}

/// Per-metric aggregate of independent replications.
#[derive(Clone, Debug, PartialEq)]
pub struct Replicated {
    pub seeds: Vec<u64>,
    pub runs: Vec<RunMetrics>,
    pub blocking_probability: Summary,
    pub blocking_probability_all: Summary,
    pub mean_execution_time_ms: Summary,
    pub mean_work_units: Summary,
    pub total_fitness_evaluations: Summary,
}

impl Replicated {
    fn from_runs(seeds: Vec<u64>, runs: Vec<RunMetrics>) -> Self {
        let col = |f: fn(&RunMetrics) -> f64| Summary::of(&runs.iter().map(f).collect::<Vec<_>>());
        Replicated {
            blocking_probability: col(|m| m.blocking_probability),
            blocking_probability_all: col(|m| m.blocking_probability_all),
            mean_execution_time_ms: col(|m| m.mean_execution_time_ms),
            mean_work_units: col(|m| m.mean_work_units),
            total_fitness_evaluations: col(|m| m.total_fitness_evaluations as f64),
            seeds,
            runs,
        }
    }
}

/// Runs `replications` independent copies seeded `base_seed + i`.
pub fn replicate(
    topology: &Topology,
    cfg: &RunConfig,
    replications: u32,
    base_seed: u64,
) -> Result<Replicated, SimError> {
    if replications == 0 {
        return Err(SimError::Config("replications must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..replications as u64).map(|i| base_seed.wrapping_add(i)).collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| run(topology, &cfg.with_seed(seed)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Replicated::from_runs(seeds, runs))
}

/// One replicated experiment per point, all sharing the same seeds.
pub fn sweep<T: Copy>(
    topology: &Topology,
    cfg: &RunConfig,
    points: &[T],
    apply: impl Fn(RunConfig, T) -> RunConfig,
    replications: u32,
    base_seed: u64,
) -> Result<Vec<(T, Replicated)>, SimError> {
    if points.is_empty() {
        return Err(SimError::Config("sweep needs at least one point".into()));
    }
    points
        .iter()
        .map(|&p| replicate(topology, &apply(*cfg, p), replications, base_seed).map(|r| (p, r)))
        .collect()
}

pub fn sweep_generations(
    topology: &Topology,
    cfg: &RunConfig,
    generations: &[u32],
    replications: u32,
    base_seed: u64,
) -> Result<Vec<(u32, Replicated)>, SimError> {
    sweep(
        topology,
        cfg,
        generations,
        |mut c, g| {
            c.ep.generations = g;
            c
        },
        replications,
        base_seed,
    )
}

pub fn sweep_wavelengths(
    topology: &Topology,
    cfg: &RunConfig,
    wavelengths: &[usize],
    replications: u32,
    base_seed: u64,
) -> Result<Vec<(usize, Replicated)>, SimError> {
    sweep(
        topology,
        cfg,
        wavelengths,
        |mut c, w| {
            c.wavelengths = w;
            c
        },
        replications,
        base_seed,
    )
}
