//! Centralized wavelength occupancy database, wavelength assignment rules
//! and the lightpath constraint checker.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rng::{seeded_rng, Stream};
use crate::topology::{LinkId, NodeId, Topology};

pub const DEFAULT_WAVELENGTHS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum WavelengthError {
    #[error("wavelength {wavelength} already busy on {link} (request {request_id})")]
    Conflict {
        request_id: u64,
        link: LinkId,
        wavelength: usize,
    },
    #[error("wavelength {wavelength} out of range 0..{limit}")]
    OutOfRange { wavelength: usize, limit: usize },
    #[error("request {0} is already active")]
    DuplicateRequest(u64),
    #[error("request {0} is not active")]
    UnknownRequest(u64),
    #[error("lightpath for request {0} has no links")]
    EmptyPath(u64),
}

/// An established lightpath: one wavelength held on every link of its route.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveLightpath {
    pub request_id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    /// Route links in order from source to destination.
    pub link_ids: Vec<LinkId>,
    pub wavelength: usize,
    pub teardown_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    FirstFit,
    Random,
    RoundRobin,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::FirstFit, StrategyKind::Random, StrategyKind::RoundRobin];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::FirstFit => "first-fit",
            StrategyKind::Random => "random",
            StrategyKind::RoundRobin => "round-robin",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first-fit" => Ok(StrategyKind::FirstFit),
            "random" => Ok(StrategyKind::Random),
            "round-robin" => Ok(StrategyKind::RoundRobin),
            other => Err(format!("unknown strategy `{other}` (first-fit, random, round-robin)")),
        }
    }
}

/// Wavelength pick rule. `Random` owns its generator so its draws do not
/// depend on any other random stream in the run.
#[derive(Clone, Debug)]
pub enum AssignmentStrategy {
    FirstFit,
    Random(ChaCha8Rng),
    RoundRobin,
}

impl AssignmentStrategy {
    pub fn new(kind: StrategyKind, seed: u64) -> Self {
        match kind {
            StrategyKind::FirstFit => AssignmentStrategy::FirstFit,
            StrategyKind::Random => AssignmentStrategy::Random(seeded_rng(seed, Stream::Wavelength)),
            StrategyKind::RoundRobin => AssignmentStrategy::RoundRobin,
        }
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            AssignmentStrategy::FirstFit => StrategyKind::FirstFit,
            AssignmentStrategy::Random(_) => StrategyKind::Random,
            AssignmentStrategy::RoundRobin => StrategyKind::RoundRobin,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WavelengthDatabase {
    wavelengths: usize,
    link_count: usize,
    // link-major: occupancy[link * W + w]
    occupancy: Vec<bool>,
    rr_counter: usize,
    active: BTreeMap<u64, ActiveLightpath>,
}

impl WavelengthDatabase {
    pub fn new(link_count: usize, wavelengths: usize) -> Self {
        assert!(wavelengths >= 1, "at least one wavelength per link");
        WavelengthDatabase {
            wavelengths,
            link_count,
            occupancy: vec![false; link_count * wavelengths],
            rr_counter: 0,
            active: BTreeMap::new(),
        }
    }

    pub fn for_topology(topology: &Topology, wavelengths: usize) -> Self {
        Self::new(topology.link_count(), wavelengths)
    }

    pub fn wavelengths(&self) -> usize {
        self.wavelengths
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn rr_counter(&self) -> usize {
        self.rr_counter
    }

    pub fn set_rr_counter(&mut self, counter: usize) {
        assert!(counter < self.wavelengths);
        self.rr_counter = counter;
    }

    pub fn is_busy(&self, link: LinkId, wavelength: usize) -> bool {
        self.occupancy[link.0 * self.wavelengths + wavelength]
    }

    /// Occupancy row of one link, `true` = busy.
    pub fn link_occupancy(&self, link: LinkId) -> &[bool] {
        let w = self.wavelengths;
        &self.occupancy[link.0 * w..(link.0 + 1) * w]
    }

    pub fn active(&self) -> impl Iterator<Item = &ActiveLightpath> {
        self.active.values()
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn get(&self, request_id: u64) -> Option<&ActiveLightpath> {
        self.active.get(&request_id)
    }

    pub fn is_all_free(&self) -> bool {
        self.active.is_empty() && self.occupancy.iter().all(|&b| !b)
    }

    /// Wavelengths idle on every link of `links`, ascending.
    pub fn free_wavelengths_on_path(&self, links: &[LinkId]) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.wavelengths);
        self.free_wavelengths_into(links, &mut out);
        out
    }

    /// Buffer-reusing form of [`free_wavelengths_on_path`](Self::free_wavelengths_on_path).
    pub fn free_wavelengths_into(&self, links: &[LinkId], out: &mut Vec<usize>) {
        out.clear();
        let w = self.wavelengths;
        for wl in 0..w {
            if links.iter().all(|l| !self.occupancy[l.0 * w + wl]) {
                out.push(wl);
            }
        }
    }

    /// Marks the lightpath's wavelength busy on all its links.
    pub fn reserve(&mut self, lp: ActiveLightpath) -> Result<(), WavelengthError> {
        if lp.link_ids.is_empty() {
            return Err(WavelengthError::EmptyPath(lp.request_id));
        }
        if lp.wavelength >= self.wavelengths {
            return Err(WavelengthError::OutOfRange {
                wavelength: lp.wavelength,
                limit: self.wavelengths,
            });
        }
        if self.active.contains_key(&lp.request_id) {
            return Err(WavelengthError::DuplicateRequest(lp.request_id));
        }
        if let Some(&link) = lp.link_ids.iter().find(|&&l| self.is_busy(l, lp.wavelength)) {
            return Err(WavelengthError::Conflict {
                request_id: lp.request_id,
                link,
                wavelength: lp.wavelength,
            });
        }
        self.insert_unchecked(lp);
        Ok(())
    }

    /// Records a lightpath without any conflict checks. Meant for building
    /// deliberately broken states to exercise [`validate_constraints`].
    pub fn insert_unchecked(&mut self, lp: ActiveLightpath) {
        let w = self.wavelengths;
        for l in &lp.link_ids {
            if lp.wavelength < w {
                self.occupancy[l.0 * w + lp.wavelength] = true;
            }
        }
        self.active.insert(lp.request_id, lp);
    }

    /// Tears down a lightpath, clearing only its own wavelength.
    pub fn release(&mut self, request_id: u64) -> Result<ActiveLightpath, WavelengthError> {
        let lp = self
            .active
            .remove(&request_id)
            .ok_or(WavelengthError::UnknownRequest(request_id))?;
        let w = self.wavelengths;
        for l in &lp.link_ids {
            if lp.wavelength < w {
                self.occupancy[l.0 * w + lp.wavelength] = false;
            }
        }
        Ok(lp)
    }
}

/// Picks a wavelength from `free` and advances the strategy state.
pub fn choose_wavelength(
    db: &mut WavelengthDatabase,
    strategy: &mut AssignmentStrategy,
    free: &[usize],
) -> Option<usize> {
    if free.is_empty() {
        return None;
    }
    match strategy {
        AssignmentStrategy::FirstFit => free.iter().copied().min(),
        AssignmentStrategy::Random(rng) => Some(draw(rng, free)),
        AssignmentStrategy::RoundRobin => {
            let chosen = round_robin_pick(db.rr_counter, db.wavelengths, free);
            db.rr_counter = (chosen + 1) % db.wavelengths;
            Some(chosen)
        }
    }
}

/// The wavelength [`choose_wavelength`] would return, without touching any
/// strategy state.
pub fn peek_wavelength(
    db: &WavelengthDatabase,
    strategy: &AssignmentStrategy,
    free: &[usize],
) -> Option<usize> {
    if free.is_empty() {
        return None;
    }
    match strategy {
        AssignmentStrategy::FirstFit => free.iter().copied().min(),
        AssignmentStrategy::Random(rng) => Some(draw(&mut rng.clone(), free)),
        AssignmentStrategy::RoundRobin => Some(round_robin_pick(db.rr_counter, db.wavelengths, free)),
    }
}

/// Occupancy-table probes a strategy spends picking `chosen` from `free`:
/// first-fit scans up from index 0, round-robin scans cyclically from the
/// counter plus one counter update, random enumerates every index and
/// draws once.
pub fn selection_probes(
    db: &WavelengthDatabase,
    strategy: &AssignmentStrategy,
    chosen: Option<usize>,
) -> u64 {
    let w = db.wavelengths;
    match (strategy, chosen) {
        (AssignmentStrategy::FirstFit, Some(c)) => c as u64 + 1,
        (AssignmentStrategy::RoundRobin, Some(c)) => ((c + w - db.rr_counter) % w) as u64 + 2,
        (AssignmentStrategy::Random(_), Some(_)) => w as u64 + 1,
        (_, None) => 0,
    }
}

fn draw(rng: &mut ChaCha8Rng, free: &[usize]) -> usize {
    if free.is_sorted() {
        free[rng.random_range(0..free.len())]
    } else {
        let mut sorted = free.to_vec();
        sorted.sort_unstable();
        sorted[rng.random_range(0..sorted.len())]
    }
}

fn round_robin_pick(counter: usize, wavelengths: usize, free: &[usize]) -> usize {
    free.iter()
        .copied()
        .min_by_key(|&f| (f + wavelengths - counter) % wavelengths)
        .expect("non-empty free set")
}

/// A broken wavelength constraint found by [`validate_constraints`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// The lightpath does not carry exactly one valid wavelength index.
    NotUnique { request_id: u64, wavelength: usize },
    /// The lightpath's wavelength is not held on one of its links.
    Discontinuous { request_id: u64, link: LinkId },
    /// Two active lightpaths share a wavelength on a link.
    Clash {
        link: LinkId,
        wavelength: usize,
        request_ids: Vec<u64>,
    },
    /// Per-node wavelength flow does not balance to +1 at the source,
    /// -1 at the destination and 0 elsewhere, or the route is not a
    /// simple path.
    FlowImbalance { request_id: u64, nodes: Vec<NodeId> },
    /// A wavelength is marked busy but no active lightpath holds it.
    Orphaned { link: LinkId, wavelength: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotUnique { request_id, wavelength } => {
                write!(f, "request {request_id}: wavelength {wavelength} is not a single valid index")
            }
            Violation::Discontinuous { request_id, link } => {
                write!(f, "request {request_id}: wavelength not held on {link}")
            }
            Violation::Clash {
                link,
                wavelength,
                request_ids,
            } => write!(f, "{link} wavelength {wavelength} shared by requests {request_ids:?}"),
            Violation::FlowImbalance { request_id, nodes } => {
                write!(f, "request {request_id}: wavelength flow unbalanced at nodes {nodes:?}")
            }
            Violation::Orphaned { link, wavelength } => {
                write!(f, "{link} wavelength {wavelength} busy without an owner")
            }
        }
    }
}

/// Checks the active lightpath set against the wavelength constraints.
/// An empty result means the state is consistent.
pub fn validate_constraints(db: &WavelengthDatabase, topology: &Topology) -> Vec<Violation> {
    let w = db.wavelengths;
    let mut violations = Vec::new();
    let mut holders: HashMap<(LinkId, usize), Vec<u64>> = HashMap::new();

    for lp in db.active.values() {
        if lp.wavelength >= w {
            violations.push(Violation::NotUnique {
                request_id: lp.request_id,
                wavelength: lp.wavelength,
            });
            continue;
        }
        for &l in &lp.link_ids {
            if l.0 >= db.link_count || !db.is_busy(l, lp.wavelength) {
                violations.push(Violation::Discontinuous {
                    request_id: lp.request_id,
                    link: l,
                });
            }
            holders.entry((l, lp.wavelength)).or_default().push(lp.request_id);
        }
        let unbalanced = flow_imbalance(lp, topology);
        if !unbalanced.is_empty() {
            violations.push(Violation::FlowImbalance {
                request_id: lp.request_id,
                nodes: unbalanced,
            });
        }
    }

    let mut clashes: Vec<_> = holders
        .iter()
        .filter(|(_, ids)| ids.len() > 1)
        .map(|(&(link, wavelength), ids)| Violation::Clash {
            link,
            wavelength,
            request_ids: ids.clone(),
        })
        .collect();
    clashes.sort_by_key(|v| match v {
        Violation::Clash { link, wavelength, .. } => (*link, *wavelength),
        _ => unreachable!(),
    });
    violations.extend(clashes);

    for link in 0..db.link_count {
        for wl in 0..w {
            if db.occupancy[link * w + wl] && !holders.contains_key(&(LinkId(link), wl)) {
                violations.push(Violation::Orphaned {
                    link: LinkId(link),
                    wavelength: wl,
                });
            }
        }
    }
    violations
}

/// Nodes where the lightpath's oriented link indicators do not sum to the
/// required +1 / -1 / 0, plus any node visited twice. Links are oriented by
/// walking from the source; a link not incident to the walk position keeps
/// its stored orientation.
fn flow_imbalance(lp: &ActiveLightpath, topology: &Topology) -> Vec<NodeId> {
    let n = topology.node_count();
    let mut net = vec![0i64; n];
    let mut visits = vec![0u32; n];
    let mut at = lp.source;
    if at.0 < n {
        visits[at.0] += 1;
    }
    for &l in &lp.link_ids {
        if l.0 >= topology.link_count() {
            continue;
        }
        let link = topology.link(l);
        let (from, to) = match link.other(at) {
            Some(next) => (at, next),
            None => (link.endpoint_a, link.endpoint_b),
        };
        net[from.0] += 1;
        net[to.0] -= 1;
        visits[to.0] += 1;
        at = to;
    }
    (0..n)
        .filter(|&i| {
            let want = if i == lp.source.0 {
                1
            } else if i == lp.destination.0 {
                -1
            } else {
                0
            };
            net[i] != want || visits[i] > 1
        })
        .map(NodeId)
        .collect()
}
