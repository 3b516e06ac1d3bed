//! Evolutionary-programming router.
//!
//! Each request is solved by a population of one: a randomly walked founder
//! path, then `G` generations in which the survivor spawns `C` offspring by
//! suffix-regenerating mutation and the fittest of parent plus offspring
//! survives. A chromosome's fitness is
//!
//! ```text
//! f = W / cost + W / hops + W / T
//! ```
//!
//! where `W` is 1 iff some wavelength is free on every link of the path and
//! `T` is the setup time spent constructing it.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clock::Clock;
use crate::rng::{seeded_rng, Stream};
use crate::topology::{LinkId, NodeId, Topology};
use crate::traffic::LightpathRequest;
use crate::wavelength::{
    choose_wavelength, peek_wavelength, selection_probes, ActiveLightpath, AssignmentStrategy,
    WavelengthDatabase, WavelengthError,
};

pub const DEFAULT_GENERATIONS: u32 = 8;
pub const DEFAULT_OFFSPRING: u32 = 15;
pub const DEFAULT_HOP_BOUND: usize = 4;
pub const DEFAULT_WALK_BUDGET: u32 = 200;
pub const DEFAULT_SECONDS_PER_EXPANSION: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum RouterError {
    #[error("no simple path from {0} to {1}")]
    Unroutable(NodeId, NodeId),
    #[error("source and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("reservation failed: {0}")]
    Reservation(#[from] WavelengthError),
    #[error("invalid router configuration: {0}")]
    Config(&'static str),
}

/// How setup time is measured and how the hop-bound thresholds are enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SetupTiming {
    /// Setup time is node expansions times a constant; thresholds are walk
    /// budgets. Fully reproducible.
    Logical { seconds_per_expansion: f64 },
    /// Setup time is measured wall time; thresholds are time limits.
    WallClock {
        init_threshold: Duration,
        mutation_threshold: Duration,
    },
}

impl SetupTiming {
    pub fn wall_clock_defaults() -> Self {
        SetupTiming::WallClock {
            init_threshold: Duration::from_millis(500),
            mutation_threshold: Duration::from_millis(1500),
        }
    }
}

impl Default for SetupTiming {
    fn default() -> Self {
        SetupTiming::Logical {
            seconds_per_expansion: DEFAULT_SECONDS_PER_EXPANSION,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpConfig {
    pub generations: u32,
    pub offspring: u32,
    pub hop_bound: usize,
    /// Walks per hop bound while building the founder.
    pub init_budget: u32,
    /// Walks per hop bound while regenerating a mutated suffix.
    pub mutation_budget: u32,
    pub timing: SetupTiming,
    pub seed: u64,
}

impl Default for EpConfig {
    fn default() -> Self {
        EpConfig {
            generations: DEFAULT_GENERATIONS,
            offspring: DEFAULT_OFFSPRING,
            hop_bound: DEFAULT_HOP_BOUND,
            init_budget: DEFAULT_WALK_BUDGET,
            mutation_budget: DEFAULT_WALK_BUDGET,
            timing: SetupTiming::default(),
            seed: 0,
        }
    }
}

impl EpConfig {
    pub fn validate(&self) -> Result<(), RouterError> {
        if self.generations == 0 {
            return Err(RouterError::Config("generations must be at least 1"));
        }
        if self.offspring == 0 {
            return Err(RouterError::Config("offspring count must be at least 1"));
        }
        if self.hop_bound == 0 {
            return Err(RouterError::Config("hop bound must be at least 1"));
        }
        if self.init_budget == 0 || self.mutation_budget == 0 {
            return Err(RouterError::Config("walk budgets must be at least 1"));
        }
        if let SetupTiming::Logical { seconds_per_expansion } = self.timing {
            if !(seconds_per_expansion > 0.0) {
                return Err(RouterError::Config("seconds per expansion must be positive"));
            }
        }
        Ok(())
    }

    /// Fitness evaluations spent on every request: founder plus `G * C`.
    pub fn evaluations_per_request(&self) -> u64 {
        1 + self.generations as u64 * self.offspring as u64
    }

    fn init_limit(&self) -> WalkLimit {
        match self.timing {
            SetupTiming::Logical { .. } => WalkLimit::Attempts(self.init_budget),
            SetupTiming::WallClock { init_threshold, .. } => WalkLimit::Time(init_threshold),
        }
    }

    fn mutation_limit(&self) -> WalkLimit {
        match self.timing {
            SetupTiming::Logical { .. } => WalkLimit::Attempts(self.mutation_budget),
            SetupTiming::WallClock {
                mutation_threshold, ..
            } => WalkLimit::Time(mutation_threshold),
        }
    }
}

/// Stop rule for a batch of random walks at one hop bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WalkLimit {
    Attempts(u32),
    Time(Duration),
    /// Keep walking until one succeeds; only used when a path is known to exist.
    Unlimited,
}

/// Counters of router work for one request.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Work {
    pub expansions: u64,
    pub probes: u64,
    pub evaluations: u64,
}

impl Work {
    pub fn units(&self) -> u64 {
        self.expansions + self.probes
    }
}

/// A candidate lightpath route, `genes[0] = S`, `genes[k-1] = D`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    pub cost_sum: f64,
    /// Node expansions attributed to building this chromosome.
    pub setup_effort: f64,
    /// `T_x` in seconds.
    pub setup_time: f64,
    /// Hop bound in force when the chromosome was built.
    pub hop_limit: usize,
    pub free_factor: u8,
    pub chosen_wavelength: Option<usize>,
    pub fitness: f64,
}

impl Chromosome {
    /// Builds an unevaluated chromosome from a node sequence.
    pub fn from_genes(
        topology: &Topology,
        genes: Vec<NodeId>,
        setup_effort: f64,
        setup_time: f64,
        hop_limit: usize,
    ) -> Result<Self, crate::topology::TopologyError> {
        let links = topology.path_links(&genes)?;
        let cost_sum = topology.path_cost(&genes)?;
        Ok(Chromosome {
            genes,
            links,
            cost_sum,
            setup_effort,
            setup_time,
            hop_limit,
            free_factor: 0,
            chosen_wavelength: None,
            fitness: 0.0,
        })
    }

    pub fn length(&self) -> usize {
        self.genes.len()
    }

    pub fn hop_count(&self) -> usize {
        self.genes.len() - 1
    }

    pub fn source(&self) -> NodeId {
        self.genes[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.genes.last().expect("chromosome has at least two genes")
    }

    pub fn is_loop_free(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.genes.len());
        self.genes.iter().all(|g| seen.insert(*g))
    }

    /// Loop-free, at least two genes, every consecutive pair adjacent.
    pub fn is_valid(&self, topology: &Topology) -> bool {
        self.genes.len() >= 2
            && self.is_loop_free()
            && self.genes.windows(2).all(|w| topology.link_between(w[0], w[1]).is_some())
    }
}

/// Outcome of one random-walk search.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSearch {
    pub path: Option<Vec<NodeId>>,
    pub expansions: u64,
    pub walks: u32,
}

/// Reusable buffers for random walks.
#[derive(Clone, Debug, Default)]
struct Walker {
    visited: Vec<bool>,
    candidates: Vec<NodeId>,
    path: Vec<NodeId>,
}

impl Walker {
    /// Repeated randomized forward walks extending `prefix` to `dest`. A walk
    /// never revisits a node (prefix included) and gives up when it dead-ends
    /// or would exceed `hop_bound` total hops.
    fn extend(
        &mut self,
        topology: &Topology,
        prefix: &[NodeId],
        dest: NodeId,
        hop_bound: usize,
        limit: WalkLimit,
        rng: &mut ChaCha8Rng,
    ) -> PathSearch {
        let n = topology.node_count();
        self.visited.clear();
        self.visited.resize(n, false);
        for &p in prefix {
            self.visited[p.0] = true;
        }
        let prefix_hops = prefix.len() - 1;
        let mut expansions = 0u64;
        let mut walks = 0u32;
        let started = matches!(limit, WalkLimit::Time(_)).then(Instant::now);
        if hop_bound <= prefix_hops {
            return PathSearch {
                path: None,
                expansions,
                walks,
            };
        }
        loop {
            let exhausted = match limit {
                WalkLimit::Attempts(max) => walks >= max,
                WalkLimit::Time(d) => walks > 0 && started.is_some_and(|t| t.elapsed() >= d),
                WalkLimit::Unlimited => false,
            };
            if exhausted {
                return PathSearch {
                    path: None,
                    expansions,
                    walks,
                };
            }
            walks += 1;
            self.path.clear();
            self.path.extend_from_slice(prefix);
            let mut at = *prefix.last().expect("non-empty prefix");
            let mut hops_left = hop_bound - prefix_hops;
            let reached = loop {
                expansions += 1;
                self.candidates.clear();
                if hops_left == 1 {
                    if topology.link_between(at, dest).is_some() {
                        self.candidates.push(dest);
                    }
                } else {
                    self.candidates.extend(
                        topology
                            .neighbors(at)
                            .iter()
                            .map(|&(m, _)| m)
                            .filter(|m| !self.visited[m.0]),
                    );
                }
                if self.candidates.is_empty() {
                    break false;
                }
                let next = self.candidates[rng.random_range(0..self.candidates.len())];
                self.path.push(next);
                if next == dest {
                    break true;
                }
                self.visited[next.0] = true;
                at = next;
                hops_left -= 1;
            };
            if reached {
                return PathSearch {
                    path: Some(self.path.clone()),
                    expansions,
                    walks,
                };
            }
            for &p in &self.path[prefix.len()..] {
                self.visited[p.0] = false;
            }
        }
    }
}

/// Random loop-free `source -> dest` path of at most `hop_bound` hops, or
/// `None` when the walk budget runs out.
pub fn random_path(
    topology: &Topology,
    source: NodeId,
    dest: NodeId,
    hop_bound: usize,
    budget: u32,
    rng: &mut ChaCha8Rng,
) -> PathSearch {
    Walker::default().extend(
        topology,
        &[source],
        dest,
        hop_bound,
        WalkLimit::Attempts(budget),
        rng,
    )
}

/// Unevaluated founder plus the number of hop-bound relaxations it needed.
#[derive(Clone, Debug, PartialEq)]
pub struct Founder {
    pub chromosome: Chromosome,
    pub relaxations: u32,
}

fn setup_time(timing: &SetupTiming, effort: f64, measured: Duration) -> f64 {
    match *timing {
        SetupTiming::Logical { seconds_per_expansion } => effort.max(1.0) * seconds_per_expansion,
        SetupTiming::WallClock { .. } => measured.as_secs_f64().max(1e-9),
    }
}

/// Builds the single founding chromosome, relaxing the hop bound by one
/// whenever a budget of walks fails, up to `N - 1` hops.
pub fn initialize(
    topology: &Topology,
    request: &LightpathRequest,
    cfg: &EpConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Founder, RouterError> {
    let mut walker = Walker::default();
    let mut work = Work::default();
    initialize_with(&mut walker, topology, request.source, request.destination, cfg, rng, &mut work)
}

fn initialize_with(
    walker: &mut Walker,
    topology: &Topology,
    source: NodeId,
    dest: NodeId,
    cfg: &EpConfig,
    rng: &mut ChaCha8Rng,
    work: &mut Work,
) -> Result<Founder, RouterError> {
    if source == dest {
        return Err(RouterError::SameEndpoints(source));
    }
    let max_bound = topology.node_count() - 1;
    let started = Instant::now();
    let mut bound = cfg.hop_bound.min(max_bound);
    let mut relaxations = 0;
    let mut effort = 0u64;
    loop {
        let limit = if bound >= max_bound {
            let no_block = vec![false; topology.node_count()];
            if !topology.reachable_avoiding(source, &no_block)[dest.0] {
                return Err(RouterError::Unroutable(source, dest));
            }
            WalkLimit::Unlimited
        } else {
            cfg.init_limit()
        };
        let search = walker.extend(topology, &[source], dest, bound, limit, rng);
        effort += search.expansions;
        work.expansions += search.expansions;
        if let Some(genes) = search.path {
            let effort = effort as f64;
            let t = setup_time(&cfg.timing, effort, started.elapsed());
            let chromosome = Chromosome::from_genes(topology, genes, effort.max(1.0), t, bound)
                .expect("walks follow topology links");
            return Ok(Founder {
                chromosome,
                relaxations,
            });
        }
        bound += 1;
        relaxations += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Offspring {
    pub chromosome: Chromosome,
    /// 1-based mutation site: genes before it were kept from the parent and
    /// the route was regenerated from it onwards.
    pub locus: usize,
    pub relaxations: u32,
    /// No suffix could be regenerated, so the offspring copies the parent.
    pub degenerate: bool,
}

/// Mutates `parent` by keeping a random prefix and regenerating the rest of
/// the route by random walk. `hop_bound` is the request's current bound.
pub fn mutate(
    parent: &Chromosome,
    topology: &Topology,
    cfg: &EpConfig,
    hop_bound: usize,
    rng: &mut ChaCha8Rng,
) -> Offspring {
    let mut walker = Walker::default();
    let mut work = Work::default();
    mutate_with(&mut walker, parent, topology, cfg, hop_bound, rng, &mut work)
}

fn mutate_with(
    walker: &mut Walker,
    parent: &Chromosome,
    topology: &Topology,
    cfg: &EpConfig,
    hop_bound: usize,
    rng: &mut ChaCha8Rng,
    work: &mut Work,
) -> Offspring {
    let k = parent.length();
    let dest = parent.destination();
    // A two-gene parent has no interior locus: regenerate from the source.
    let locus = if k <= 2 { 2 } else { rng.random_range(2..k) };
    let prefix = &parent.genes[..locus - 1];
    let kept_hops = locus - 2;
    let max_bound = topology.node_count() - 1;

    let degenerate = |relaxations| Offspring {
        chromosome: parent.clone(),
        locus,
        relaxations,
        degenerate: true,
    };

    let started = Instant::now();
    let mut bound = hop_bound.min(max_bound);
    let mut relaxations = 0;
    if bound <= kept_hops {
        relaxations += (kept_hops + 1 - bound) as u32;
        bound = kept_hops + 1;
    }
    let mut suffix_effort = 0u64;
    loop {
        let search = walker.extend(topology, prefix, dest, bound, cfg.mutation_limit(), rng);
        suffix_effort += search.expansions;
        work.expansions += search.expansions;
        if let Some(genes) = search.path {
            let share = parent.setup_effort * kept_hops as f64 / (k - 1) as f64;
            let effort = (share + suffix_effort as f64).max(1.0);
            let t = match cfg.timing {
                SetupTiming::Logical { .. } => setup_time(&cfg.timing, effort, Duration::ZERO),
                SetupTiming::WallClock { .. } => {
                    parent.setup_time * kept_hops as f64 / (k - 1) as f64
                        + started.elapsed().as_secs_f64().max(1e-9)
                }
            };
            let chromosome = Chromosome::from_genes(topology, genes, effort, t, bound)
                .expect("walks follow topology links");
            return Offspring {
                chromosome,
                locus,
                relaxations,
                degenerate: false,
            };
        }
        if bound >= max_bound {
            return degenerate(relaxations);
        }
        bound += 1;
        relaxations += 1;
    }
}

/// Fills in the free-wavelength factor, the tentative wavelength and the
/// fitness. Strategy state is only peeked, never advanced.
pub fn evaluate_fitness(
    x: &mut Chromosome,
    db: &WavelengthDatabase,
    strategy: &AssignmentStrategy,
    work: &mut Work,
) {
    let mut free = Vec::with_capacity(db.wavelengths());
    evaluate_with(x, db, strategy, work, &mut free);
}

fn evaluate_with(
    x: &mut Chromosome,
    db: &WavelengthDatabase,
    strategy: &AssignmentStrategy,
    work: &mut Work,
    free: &mut Vec<usize>,
) {
    db.free_wavelengths_into(&x.links, free);
    work.evaluations += 1;
    work.probes += (x.links.len() * db.wavelengths()) as u64;
    x.chosen_wavelength = peek_wavelength(db, strategy, free);
    work.probes += selection_probes(db, strategy, x.chosen_wavelength);
    x.free_factor = u8::from(x.chosen_wavelength.is_some());
    x.fitness = fitness_value(x.free_factor, x.cost_sum, x.hop_count(), x.setup_time);
}

/// `W/cost + W/hops + W/T`.
pub fn fitness_value(free_factor: u8, cost_sum: f64, hop_count: usize, setup_time: f64) -> f64 {
    if free_factor == 0 {
        return 0.0;
    }
    let w = free_factor as f64;
    w / cost_sum + w / hop_count as f64 + w / setup_time
}

/// Index of the fittest chromosome. Ties between feasible chromosomes go to
/// lower cost, then fewer hops; remaining ties (and an all-infeasible pool)
/// go to the earlier position, so the parent at index 0 survives them.
pub fn select(pool: &[Chromosome]) -> usize {
    assert!(!pool.is_empty(), "selection pool is empty");
    let mut best = 0;
    for (i, c) in pool.iter().enumerate().skip(1) {
        let b = &pool[best];
        let better = c.fitness > b.fitness
            || (c.fitness == b.fitness
                && c.fitness > 0.0
                && (c.cost_sum < b.cost_sum || (c.cost_sum == b.cost_sum && c.hop_count() < b.hop_count())));
        if better {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub enum RouteOutcome {
    Accepted { chromosome: Chromosome, wavelength: usize },
    Blocked { best: Chromosome },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteDecision {
    pub outcome: RouteOutcome,
    pub fitness_evaluations: u64,
    pub generations_run: u32,
    /// Execution time in seconds, as read from the injected clock.
    pub elapsed: f64,
    pub work: Work,
    pub relaxations: u32,
    pub degenerate_mutations: u32,
    /// First generation (0 = founder) whose survivor had a free wavelength.
    pub first_feasible_generation: Option<u32>,
}

impl RouteDecision {
    pub fn is_accepted(&self) -> bool {
        matches!(self.outcome, RouteOutcome::Accepted { .. })
    }

    pub fn chromosome(&self) -> &Chromosome {
        match &self.outcome {
            RouteOutcome::Accepted { chromosome, .. } => chromosome,
            RouteOutcome::Blocked { best } => best,
        }
    }
}

/// Hook receiving every chromosome the router builds, for auditing.
pub trait ChromosomeAudit {
    fn founder(&mut self, _founder: &Founder, _cfg: &EpConfig) {}
    fn offspring(&mut self, _parent: &Chromosome, _child: &Offspring, _cfg: &EpConfig) {}
}

struct NoAudit;
impl ChromosomeAudit for NoAudit {}

/// Per-run router state: the search RNG and scratch buffers.
#[derive(Clone, Debug)]
pub struct EpRouter {
    cfg: EpConfig,
    rng: ChaCha8Rng,
    walker: Walker,
    free: Vec<usize>,
}

impl EpRouter {
    pub fn new(cfg: EpConfig) -> Result<Self, RouterError> {
        cfg.validate()?;
        Ok(EpRouter {
            rng: seeded_rng(cfg.seed, Stream::Router),
            cfg,
            walker: Walker::default(),
            free: Vec::new(),
        })
    }

    pub fn config(&self) -> &EpConfig {
        &self.cfg
    }

    /// Searches a route for `request`; on success reserves the chosen
    /// wavelength in `db`. Blocking is an outcome, not an error.
    pub fn route_request(
        &mut self,
        topology: &Topology,
        request: &LightpathRequest,
        db: &mut WavelengthDatabase,
        strategy: &mut AssignmentStrategy,
        clock: &Clock,
    ) -> Result<RouteDecision, RouterError> {
        self.route_request_audited(topology, request, db, strategy, clock, &mut NoAudit)
    }

    pub fn route_request_audited(
        &mut self,
        topology: &Topology,
        request: &LightpathRequest,
        db: &mut WavelengthDatabase,
        strategy: &mut AssignmentStrategy,
        clock: &Clock,
        audit: &mut dyn ChromosomeAudit,
    ) -> Result<RouteDecision, RouterError> {
        let stopwatch = clock.start();
        let cfg = self.cfg;
        let mut work = Work::default();

        let founder = initialize_with(
            &mut self.walker,
            topology,
            request.source,
            request.destination,
            &cfg,
            &mut self.rng,
            &mut work,
        )?;
        audit.founder(&founder, &cfg);
        let mut relaxations = founder.relaxations;
        let request_bound = founder.chromosome.hop_limit;
        let mut parent = founder.chromosome;
        evaluate_with(&mut parent, db, strategy, &mut work, &mut self.free);
        let mut first_feasible = (parent.free_factor == 1).then_some(0);

        let mut degenerate_mutations = 0;
        let mut pool = Vec::with_capacity(cfg.offspring as usize + 1);
        for generation in 1..=cfg.generations {
            pool.clear();
            pool.push(parent.clone());
            for _ in 0..cfg.offspring {
                let child = mutate_with(
                    &mut self.walker,
                    &parent,
                    topology,
                    &cfg,
                    request_bound,
                    &mut self.rng,
                    &mut work,
                );
                audit.offspring(&parent, &child, &cfg);
                relaxations += child.relaxations;
                degenerate_mutations += u32::from(child.degenerate);
                let mut chromosome = child.chromosome;
                evaluate_with(&mut chromosome, db, strategy, &mut work, &mut self.free);
                pool.push(chromosome);
            }
            let best = select(&pool);
            parent = pool.swap_remove(best);
            if first_feasible.is_none() && parent.free_factor == 1 {
                first_feasible = Some(generation);
            }
        }

        let outcome = if parent.free_factor == 1 {
            db.free_wavelengths_into(&parent.links, &mut self.free);
            let wavelength = choose_wavelength(db, strategy, &self.free)
                .expect("survivor was evaluated with a free wavelength");
            debug_assert_eq!(Some(wavelength), parent.chosen_wavelength);
            db.reserve(ActiveLightpath {
                request_id: request.id,
                source: request.source,
                destination: request.destination,
                link_ids: parent.links.clone(),
                wavelength,
                teardown_time: request.arrival_time + request.holding_time,
            })?;
            RouteOutcome::Accepted {
                chromosome: parent,
                wavelength,
            }
        } else {
            RouteOutcome::Blocked { best: parent }
        };

        Ok(RouteDecision {
            outcome,
            fitness_evaluations: work.evaluations,
            generations_run: cfg.generations,
            elapsed: stopwatch.elapsed(work.units()),
            work,
            relaxations,
            degenerate_mutations,
            first_feasible_generation: first_feasible,
        })
    }
}
