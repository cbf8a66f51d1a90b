//! Shortest-path computation over a node's topology view.
//!
//! Tie-breaking is deterministic everywhere: among equal-cost paths the
//! lexicographically smallest hop sequence wins, which realizes
//! "lowest next-hop id, then lowest intermediate id".

use crate::mobility::NodeId;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

/// Directed view graph over dense node indices. Successor lists stay sorted
/// so every traversal is deterministic.
#[derive(Clone, Debug, Default)]
pub struct ViewGraph {
    adj: Vec<Vec<NodeId>>,
}

impl ViewGraph {
    pub fn new() -> Self {
        ViewGraph::default()
    }

    fn slot(&mut self, n: NodeId) -> &mut Vec<NodeId> {
        if n >= self.adj.len() {
            self.adj.resize(n + 1, Vec::new());
        }
        &mut self.adj[n]
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId) {
        if from == to {
            return;
        }
        self.slot(to);
        let succ = self.slot(from);
        if let Err(pos) = succ.binary_search(&to) {
            succ.insert(pos, to);
        }
    }

    pub fn add_undirected(&mut self, a: NodeId, b: NodeId) {
        self.add_edge(a, b);
        self.add_edge(b, a);
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.adj.get(from).is_some_and(|s| s.binary_search(&to).is_ok())
    }

    pub fn successors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.get(n).into_iter().flatten().copied()
    }

    pub fn node_bound(&self) -> usize {
        self.adj.len()
    }

    /// Every directed edge, lexicographically ordered.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(from, succ)| succ.iter().map(move |&to| (from, to)))
    }

    pub fn remove_node(&mut self, n: NodeId) {
        if n < self.adj.len() {
            self.adj[n].clear();
        }
        for succ in &mut self.adj {
            if let Ok(pos) = succ.binary_search(&n) {
                succ.remove(pos);
            }
        }
    }

    pub fn remove_edge(&mut self, from: NodeId, to: NodeId) {
        if let Some(succ) = self.adj.get_mut(from) {
            if let Ok(pos) = succ.binary_search(&to) {
                succ.remove(pos);
            }
        }
    }

    /// Empty the graph, keeping successor-list capacity for reuse.
    pub fn clear(&mut self) {
        for succ in &mut self.adj {
            succ.clear();
        }
    }
}

#[derive(Clone, Debug)]
struct HeapEntry {
    cost: f64,
    path: Vec<NodeId>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed: BinaryHeap is a max-heap, we want the smallest (cost, path).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.path.cmp(&self.path))
    }
}

/// Shortest-path tree from `source`, hop metric, where every destination
/// gets the lexicographically smallest shortest path.
///
/// Works level by level: the lex order of shortest paths to a BFS level is
/// exactly the order of (parent's lex rank, own id), so ranks propagate
/// without materializing any path until extraction.
#[derive(Clone, Debug)]
pub struct PathTree {
    source: NodeId,
    parent: Vec<Option<NodeId>>,
    dist: Vec<u32>,
}

impl PathTree {
    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn reachable(&self, dest: NodeId) -> bool {
        dest == self.source || self.parent.get(dest).is_some_and(|p| p.is_some())
    }

    pub fn distance(&self, dest: NodeId) -> Option<usize> {
        self.reachable(dest).then(|| self.dist[dest] as usize)
    }

    /// Next hop from the source toward `dest`.
    pub fn next_hop(&self, dest: NodeId) -> Option<NodeId> {
        if dest == self.source || !self.reachable(dest) {
            return None;
        }
        let mut here = dest;
        while self.parent[here] != Some(self.source) {
            here = self.parent[here]?;
        }
        Some(here)
    }

    /// Full hop list source..=dest.
    pub fn path_to(&self, dest: NodeId) -> Option<Vec<NodeId>> {
        if !self.reachable(dest) || dest == self.source {
            return None;
        }
        let mut path = vec![dest];
        let mut here = dest;
        while let Some(p) = self.parent[here] {
            path.push(p);
            here = p;
        }
        path.reverse();
        Some(path)
    }

    pub fn destinations(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.parent.len()).filter(|&d| d != self.source && self.reachable(d))
    }
}

pub fn shortest_path_tree(graph: &ViewGraph, source: NodeId) -> PathTree {
    let n = graph.node_bound().max(source + 1);
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut dist: Vec<u32> = vec![u32::MAX; n];
    let mut rank: Vec<u32> = vec![u32::MAX; n];
    dist[source] = 0;
    rank[source] = 0;
    let mut frontier = vec![source];
    let mut d = 0u32;
    while !frontier.is_empty() {
        let mut next_level: Vec<(u32, NodeId, NodeId)> = Vec::new();
        for &u in &frontier {
            for v in graph.successors(u) {
                if dist[v] > d {
                    if dist[v] == u32::MAX {
                        next_level.push((rank[u], v, u));
                        dist[v] = d + 1;
                        parent[v] = Some(u);
                    } else if (rank[u], u) < (rank[parent[v].unwrap()], parent[v].unwrap()) {
                        // Better (more lex-min) parent for an already-seen
                        // node of this level.
                        for e in &mut next_level {
                            if e.1 == v {
                                *e = (rank[u], v, u);
                            }
                        }
                        parent[v] = Some(u);
                    }
                }
            }
        }
        next_level.sort_unstable();
        frontier.clear();
        for (i, &(_, v, p)) in next_level.iter().enumerate() {
            rank[v] = i as u32;
            parent[v] = Some(p);
            frontier.push(v);
        }
        d += 1;
    }
    PathTree { source, parent, dist }
}

/// Convenience wrapper returning materialized paths, used by tests and the
/// multipath seeding.
pub fn shortest_paths(graph: &ViewGraph, source: NodeId) -> BTreeMap<NodeId, Vec<NodeId>> {
    let tree = shortest_path_tree(graph, source);
    let mut out = BTreeMap::new();
    out.insert(source, vec![source]);
    for d in tree.destinations() {
        out.insert(d, tree.path_to(d).unwrap());
    }
    out
}

/// Weighted Dijkstra source -> dest over an explicit directed cost map.
/// Ties break on the lexicographically smallest path.
pub fn cheapest_path(
    graph: &ViewGraph,
    costs: &BTreeMap<(NodeId, NodeId), f64>,
    source: NodeId,
    dest: NodeId,
) -> Option<Vec<NodeId>> {
    let mut settled: BTreeSet<NodeId> = BTreeSet::new();
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry { cost: 0.0, path: vec![source] });
    while let Some(entry) = heap.pop() {
        let here = *entry.path.last().unwrap();
        if here == dest {
            return Some(entry.path);
        }
        if !settled.insert(here) {
            continue;
        }
        for next in graph.successors(here) {
            if settled.contains(&next) {
                continue;
            }
            let w = costs.get(&(here, next)).copied().unwrap_or(1.0);
            let mut path = entry.path.clone();
            path.push(next);
            heap.push(HeapEntry { cost: entry.cost + w, path });
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disjointness {
    NodeDisjoint,
    LinkDisjoint,
}

#[derive(Clone, Copy, Debug)]
pub struct MultipathCostConfig {
    /// Cost factor applied to edges incident to nodes already used.
    pub node_penalty_factor: f64,
    /// Cost factor applied to edges already used.
    pub edge_penalty_factor: f64,
    pub disjointness: Disjointness,
    /// Maximum number of paths to compute.
    pub k: usize,
}

impl Default for MultipathCostConfig {
    fn default() -> Self {
        MultipathCostConfig {
            node_penalty_factor: 3.0,
            edge_penalty_factor: 2.0,
            disjointness: Disjointness::NodeDisjoint,
            k: 2,
        }
    }
}

impl MultipathCostConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.node_penalty_factor < 1.0 || self.edge_penalty_factor < 1.0 {
            return Err("penalty factors must be >= 1".into());
        }
        if self.k == 0 {
            return Err("k must be >= 1".into());
        }
        Ok(())
    }
}

/// Iterative penalized Dijkstra: record the cheapest path, inflate the cost
/// of its edges (and, in node-disjoint mode, of all edges incident to its
/// intermediate nodes), repeat. Stops early when the graph yields no new
/// path: a repeated path means penalization cannot produce more diversity.
pub fn multipath_dijkstra(
    graph: &ViewGraph,
    source: NodeId,
    dest: NodeId,
    cfg: &MultipathCostConfig,
) -> Vec<Vec<NodeId>> {
    let mut costs: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut paths: Vec<Vec<NodeId>> = Vec::new();
    for _ in 0..cfg.k {
        let Some(path) = cheapest_path(graph, &costs, source, dest) else {
            break;
        };
        if paths.contains(&path) {
            break;
        }
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for key in [(a, b), (b, a)] {
                *costs.entry(key).or_insert(1.0) *= cfg.edge_penalty_factor;
            }
        }
        if cfg.disjointness == Disjointness::NodeDisjoint {
            for &v in &path[1..path.len() - 1] {
                let incident: Vec<(NodeId, NodeId)> =
                    graph.edges().filter(|&(a, b)| a == v || b == v).collect();
                for key in incident {
                    *costs.entry(key).or_insert(1.0) *= cfg.node_penalty_factor;
                }
            }
        }
        paths.push(path);
    }
    paths
}
