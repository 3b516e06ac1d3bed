//! Network graph: nodes, bidirectional cost-weighted fiber links and the
//! built-in 14-node NSF topology.
//!
//! The text format is line oriented:
//!
//! ```text
//! # comment
//! nodes 3
//! link 0 1 1.0
//! link 1 2 2.5
//! ```

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Index of a node in its owning [`Topology`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Dense index of a link, `0..link_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// A bidirectional fiber between two distinct nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub endpoint_a: NodeId,
    pub endpoint_b: NodeId,
    pub cost: f64,
}

impl Link {
    /// The endpoint opposite to `n`, if `n` is an endpoint at all.
    pub fn other(&self, n: NodeId) -> Option<NodeId> {
        if n == self.endpoint_a {
            Some(self.endpoint_b)
        } else if n == self.endpoint_b {
            Some(self.endpoint_a)
        } else {
            None
        }
    }

    pub fn touches(&self, n: NodeId) -> bool {
        n == self.endpoint_a || n == self.endpoint_b
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("topology needs at least one node")]
    Empty,
    #[error("link {0}-{1} references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate link between {0} and {1}")]
    DuplicateLink(usize, usize),
    #[error("link {0}-{1} has non-positive cost {2}")]
    NonPositiveCost(usize, usize, f64),
    #[error("graph is disconnected: node {0} unreachable from node 0")]
    Disconnected(usize),
    #[error("nodes {0} and {1} are not adjacent")]
    NotAdjacent(NodeId, NodeId),
}

/// Immutable undirected network graph.
///
/// Adjacency lists are sorted by neighbor index, and every unordered node
/// pair carries at most one link.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    node_count: usize,
    links: Vec<Link>,
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
    // node_count x node_count lookup, row-major
    pair_index: Vec<Option<LinkId>>,
}

impl Topology {
    /// Builds and validates a topology from `(u, v, cost)` triples.
    pub fn new(node_count: usize, links: &[(usize, usize, f64)]) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::Empty);
        }
        let mut pair_index = vec![None; node_count * node_count];
        let mut adjacency = vec![Vec::new(); node_count];
        let mut stored = Vec::with_capacity(links.len());
        for &(u, v, cost) in links {
            if u >= node_count || v >= node_count {
                return Err(TopologyError::NodeOutOfRange(u, v, node_count));
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            // NaN fails this check too
            if !(cost > 0.0) || !cost.is_finite() {
                return Err(TopologyError::NonPositiveCost(u, v, cost));
            }
            if pair_index[u * node_count + v].is_some() {
                return Err(TopologyError::DuplicateLink(u.min(v), u.max(v)));
            }
            let id = LinkId(stored.len());
            pair_index[u * node_count + v] = Some(id);
            pair_index[v * node_count + u] = Some(id);
            adjacency[u].push((NodeId(v), id));
            adjacency[v].push((NodeId(u), id));
            stored.push(Link {
                endpoint_a: NodeId(u),
                endpoint_b: NodeId(v),
                cost,
            });
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        let topology = Topology {
            node_count,
            links: stored,
            adjacency,
            pair_index,
        };
        if let Some(unreached) = topology.first_unreachable() {
            return Err(TopologyError::Disconnected(unreached));
        }
        Ok(topology)
    }

    /// The 14-node, 21-link NSF network with unit link costs.
    pub fn nsf14() -> Self {
        let links: Vec<(usize, usize, f64)> = NSF14_LINKS.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Topology::new(14, &links).expect("built-in NSF topology is valid")
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    /// Adjacent nodes with the connecting link, in ascending neighbor order.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[n.0]
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adjacency[n.0].len()
    }

    pub fn link_between(&self, u: NodeId, v: NodeId) -> Option<LinkId> {
        if u.0 >= self.node_count || v.0 >= self.node_count {
            return None;
        }
        self.pair_index[u.0 * self.node_count + v.0]
    }

    /// Links traversed by a node sequence, in order.
    pub fn path_links(&self, nodes: &[NodeId]) -> Result<Vec<LinkId>, TopologyError> {
        nodes
            .windows(2)
            .map(|w| self.link_between(w[0], w[1]).ok_or(TopologyError::NotAdjacent(w[0], w[1])))
            .collect()
    }

    /// Sum of link costs along a node sequence.
    pub fn path_cost(&self, nodes: &[NodeId]) -> Result<f64, TopologyError> {
        nodes.windows(2).try_fold(0.0, |acc, w| {
            let id = self
                .link_between(w[0], w[1])
                .ok_or(TopologyError::NotAdjacent(w[0], w[1]))?;
            Ok(acc + self.links[id.0].cost)
        })
    }

    /// Nodes reachable from `start` without entering any node in `blocked`.
    pub fn reachable_avoiding(&self, start: NodeId, blocked: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::new();
        seen[start.0] = true;
        queue.push_back(start);
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &self.adjacency[n.0] {
                if !seen[m.0] && !blocked[m.0] {
                    seen[m.0] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    fn first_unreachable(&self) -> Option<usize> {
        let blocked = vec![false; self.node_count];
        let seen = self.reachable_avoiding(NodeId(0), &blocked);
        seen.iter().position(|&s| !s)
    }

    /// Serializes to the text format accepted by [`Topology::from_str`].
    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for link in &self.links {
            out.push_str(&format!(
                "link {} {} {}\n",
                link.endpoint_a.0, link.endpoint_b.0, link.cost
            ));
        }
        out
    }
}

/// Parses and validates a topology file.
pub fn load_topology(text: &str) -> Result<Topology, TopologyError> {
    text.parse()
}

impl FromStr for Topology {
    type Err = TopologyError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut node_count = None;
        let mut links = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| TopologyError::Parse {
                line: line_no,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["nodes", n] => {
                    if node_count.is_some() {
                        return Err(err("repeated `nodes` line"));
                    }
                    node_count = Some(n.parse::<usize>().map_err(|_| err("bad node count"))?);
                }
                ["link", u, v, cost] => {
                    if node_count.is_none() {
                        return Err(err("`link` before `nodes`"));
                    }
                    let u = u.parse::<usize>().map_err(|_| err("bad node id"))?;
                    let v = v.parse::<usize>().map_err(|_| err("bad node id"))?;
                    let cost = cost.parse::<f64>().map_err(|_| err("bad cost"))?;
                    links.push((u, v, cost));
                }
                _ => return Err(err("expected `nodes N` or `link U V COST`")),
            }
        }
        let n = node_count.ok_or(TopologyError::Parse {
            line: 0,
            message: "missing `nodes` line".into(),
        })?;
        Topology::new(n, &links)
    }
}

/// NSFNET T1 backbone adjacency, 0-based.
const NSF14_LINKS: [(usize, usize); 21] = [
    (0, 1),
    (0, 2),
    (0, 7),
    (1, 2),
    (1, 3),
    (2, 5),
    (3, 4),
    (3, 10),
    (4, 5),
    (4, 6),
    (5, 9),
    (5, 13),
    (6, 7),
    (7, 8),
    (8, 9),
    (8, 11),
    (8, 12),
    (10, 11),
    (10, 12),
    (11, 13),
    (12, 13),
];
