//! Multipath source routing on top of the OLSR topology view.
//!
//! Routes are computed at the source when data packets need them, carried in
//! the packet header, and checked hop by hop against each forwarder's link
//! state. Load balancing is plain round robin over the currently valid
//! paths.

use crate::graph::{multipath_dijkstra, MultipathCostConfig, ViewGraph};
use crate::mobility::NodeId;
use crate::olsr::OlsrState;
use crate::time::SimTime;
use std::collections::{BTreeMap, BTreeSet};

/// An explicit hop list from source to destination, inclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceRoute {
    pub hops: Vec<NodeId>,
    /// Index of the node currently holding the packet.
    pub cursor: usize,
}

impl SourceRoute {
    pub fn new(hops: Vec<NodeId>) -> Self {
        debug_assert!(hops.len() >= 2);
        debug_assert!(is_loop_free(&hops), "source route repeats a node: {hops:?}");
        SourceRoute { hops, cursor: 0 }
    }

    pub fn destination(&self) -> NodeId {
        *self.hops.last().unwrap()
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.hops.get(self.cursor + 1).copied()
    }

    pub fn at_destination(&self) -> bool {
        self.cursor + 1 == self.hops.len()
    }
}

pub fn is_loop_free(hops: &[NodeId]) -> bool {
    let set: BTreeSet<NodeId> = hops.iter().copied().collect();
    set.len() == hops.len()
}

#[derive(Clone, Debug, Default)]
pub struct PathSet {
    pub paths: Vec<Vec<NodeId>>,
    pub rr_index: usize,
    computed_at_version: Option<u64>,
}

#[derive(Debug, Default)]
pub struct MpolsrState {
    pub cfg: MultipathCostConfig,
    path_sets: BTreeMap<NodeId, PathSet>,
}

impl MpolsrState {
    pub fn new(cfg: MultipathCostConfig) -> Self {
        cfg.validate().expect("invalid multipath config");
        MpolsrState { cfg, path_sets: BTreeMap::new() }
    }

    /// Recompute the path set for `dest` if the topology view moved since
    /// the last computation. The round-robin position survives recomputes.
    pub fn refresh(&mut self, me: NodeId, dest: NodeId, olsr: &OlsrState, now: SimTime) {
        let version = olsr.view_version;
        let entry = self.path_sets.entry(dest).or_default();
        if entry.computed_at_version != Some(version) {
            let g = olsr.view_graph(me, now);
            entry.paths = multipath_dijkstra(&g, me, dest, &self.cfg);
            entry.computed_at_version = Some(version);
        }
    }

    pub fn path_set(&self, dest: NodeId) -> Option<&PathSet> {
        self.path_sets.get(&dest)
    }

    /// Paths currently usable. A path set refreshed at the current view
    /// version is in-view by construction, so validity reduces to the first
    /// hop being a live, unblacklisted symmetric neighbor; a stale set is
    /// additionally checked edge by edge against the current view.
    pub fn valid_paths<'a>(
        &'a self,
        me: NodeId,
        dest: NodeId,
        olsr: &OlsrState,
        now: SimTime,
    ) -> Vec<&'a Vec<NodeId>> {
        let Some(set) = self.path_sets.get(&dest) else {
            return Vec::new();
        };
        let current = set.computed_at_version == Some(olsr.view_version);
        let view = if current { None } else { Some(olsr.view_graph(me, now)) };
        set.paths
            .iter()
            .filter(|p| {
                olsr.is_usable_neighbor(p[1], now)
                    && view.as_ref().map_or(true, |v| path_in_view(p, v))
            })
            .collect()
    }

    /// Pick the next path round-robin among the valid ones and advance the
    /// pointer. Returns a fresh route for the packet.
    pub fn select_route(
        &mut self,
        me: NodeId,
        dest: NodeId,
        olsr: &OlsrState,
        now: SimTime,
    ) -> Option<SourceRoute> {
        self.refresh(me, dest, olsr, now);
        let valid: Vec<Vec<NodeId>> = self
            .valid_paths(me, dest, olsr, now)
            .into_iter()
            .cloned()
            .collect();
        let set = self.path_sets.get_mut(&dest)?;
        if valid.is_empty() {
            return None;
        }
        let path = valid[set.rr_index % valid.len()].clone();
        set.rr_index += 1;
        Some(SourceRoute::new(path))
    }
}

pub fn path_in_view(path: &[NodeId], view: &ViewGraph) -> bool {
    path.windows(2).all(|w| view.has_edge(w[0], w[1]))
}

/// Intermediate-node recovery: recompute the tail of the route from `here`
/// to the destination over this node's own view, never revisiting nodes the
/// packet already traversed (the spliced route must stay loop-free) and
/// never stepping onto a neighbor the link layer reported dead. Returns the
/// full replacement hop list (traversed prefix + new tail).
pub fn recover_route(
    here: NodeId,
    traversed: &[NodeId],
    dest: NodeId,
    olsr: &OlsrState,
    now: SimTime,
) -> Option<Vec<NodeId>> {
    debug_assert_eq!(traversed.last(), Some(&here));
    let mut g = olsr.view_graph(here, now);
    for &n in traversed.iter().filter(|&&n| n != here) {
        g.remove_node(n);
    }
    for &dead in olsr.lln_dead() {
        g.remove_edge(here, dead);
    }
    let costs = BTreeMap::new();
    let tail = crate::graph::cheapest_path(&g, &costs, here, dest)?;
    let mut hops = traversed.to_vec();
    hops.extend_from_slice(&tail[1..]);
    debug_assert!(is_loop_free(&hops));
    Some(hops)
}
