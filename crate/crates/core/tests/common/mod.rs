#![allow(dead_code)]

use wdm_ep::wavelength::WavelengthDatabase;
use wdm_ep::{LinkId, NodeId, Topology};

pub fn topology(n: usize, edges: &[(usize, usize)]) -> Topology {
    let links: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
    Topology::new(n, &links).expect("test topology is valid")
}

pub fn line(n: usize) -> Topology {
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    topology(n, &edges)
}

pub fn ring(n: usize) -> Topology {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    topology(n, &edges)
}

pub fn complete(n: usize) -> Topology {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v));
        }
    }
    topology(n, &edges)
}

pub fn star(leaves: usize) -> Topology {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    topology(leaves + 1, &edges)
}

/// 2 x 4 grid, nodes numbered row-major.
pub fn grid_2x4() -> Topology {
    topology(
        8,
        &[(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7), (0, 4), (1, 5), (2, 6), (3, 7)],
    )
}

pub fn mesh8() -> Topology {
    topology(
        8,
        &[
            (0, 1),
            (0, 2),
            (1, 3),
            (2, 3),
            (2, 4),
            (3, 5),
            (4, 5),
            (4, 6),
            (5, 7),
            (6, 7),
            (1, 6),
        ],
    )
}

/// Named topologies of at most eight nodes.
pub fn small_topologies() -> Vec<(&'static str, Topology)> {
    vec![
        ("line5", line(5)),
        ("ring6", ring(6)),
        ("star6", star(5)),
        ("k5", complete(5)),
        ("grid2x4", grid_2x4()),
        ("mesh8", mesh8()),
    ]
}

/// Every simple path from `s` to `d`.
pub fn simple_paths(topology: &Topology, s: NodeId, d: NodeId) -> Vec<Vec<NodeId>> {
    fn dfs(t: &Topology, d: NodeId, path: &mut Vec<NodeId>, seen: &mut [bool], out: &mut Vec<Vec<NodeId>>) {
        let here = *path.last().unwrap();
        if here == d {
            out.push(path.clone());
            return;
        }
        for &(next, _) in t.neighbors(here) {
            if !seen[next.0] {
                seen[next.0] = true;
                path.push(next);
                dfs(t, d, path, seen, out);
                path.pop();
                seen[next.0] = false;
            }
        }
    }
    let mut seen = vec![false; topology.node_count()];
    seen[s.0] = true;
    let mut out = Vec::new();
    dfs(topology, d, &mut vec![s], &mut seen, &mut out);
    out
}

/// Exhaustive check: does some simple path carry a wavelength free on all
/// of its links?
pub fn oracle_feasible(topology: &Topology, db: &WavelengthDatabase, s: NodeId, d: NodeId) -> bool {
    simple_paths(topology, s, d).iter().any(|p| {
        let links = topology.path_links(p).unwrap();
        !db.free_wavelengths_on_path(&links).is_empty()
    })
}

pub fn wavelength_free(db: &WavelengthDatabase, links: &[LinkId], wavelength: usize) -> bool {
    links.iter().all(|&l| !db.is_busy(l, wavelength))
}
