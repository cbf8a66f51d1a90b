//! Per-node OLSR state: link sensing, neighbor/two-hop tracking, MPR
//! selection, topology repository, duplicate suppression and the routing
//! table derived from all of it.
//!
//! Repository entries live until their validity time passes; a link-layer
//! notification never rewrites the repositories directly. It only blacklists
//! the neighbor for this node's own forwarding and route computation
//! (`lln_dead`), so HELLO/TC content keeps evolving on the hold-time clock
//! that the latency analysis is built on.

use crate::graph::{shortest_path_tree, PathTree, ViewGraph};
use crate::mobility::NodeId;
use crate::time::SimTime;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

/// Validity of duplicate-set entries.
const DUP_HOLD_TIME: SimTime = SimTime::from_secs(30);

#[derive(Clone, Copy, Debug)]
pub struct ProtocolConfig {
    pub hello_interval: SimTime,
    pub tc_interval: SimTime,
    pub neighb_hold_time: SimTime,
    pub top_hold_time: SimTime,
    pub max_jitter: SimTime,
    pub lln_enabled: bool,
    pub send_empty_tc: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            hello_interval: SimTime::from_secs(2),
            tc_interval: SimTime::from_secs(5),
            neighb_hold_time: SimTime::from_secs(6),
            top_hold_time: SimTime::from_secs(15),
            max_jitter: SimTime::from_micros(500_000),
            lln_enabled: true,
            send_empty_tc: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.neighb_hold_time <= self.hello_interval {
            return Err("neighb_hold_time must exceed hello_interval".into());
        }
        if self.top_hold_time <= self.tc_interval {
            return Err("top_hold_time must exceed tc_interval".into());
        }
        if self.max_jitter >= self.hello_interval {
            return Err("max_jitter must be below hello_interval".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LinkTuple {
    pub sym_until: SimTime,
    pub asym_until: SimTime,
    pub expires: SimTime,
}

#[derive(Clone, Copy, Debug)]
pub struct TopologyTuple {
    pub ansn: u16,
    pub expires: SimTime,
}

#[derive(Clone, Copy, Debug)]
struct DupTuple {
    expires: SimTime,
    forwarded: bool,
}

/// One neighbor entry in a HELLO.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HelloEntry {
    pub neighbor: NodeId,
    pub symmetric: bool,
    pub mpr: bool,
}

#[derive(Clone, Debug)]
pub struct HelloMsg {
    pub origin: NodeId,
    pub entries: Vec<HelloEntry>,
}

#[derive(Clone, Debug)]
pub struct TcMsg {
    pub originator: NodeId,
    pub seq: u16,
    pub ansn: u16,
    pub advertised: Vec<NodeId>,
    pub ttl: u8,
    pub hops: u8,
    /// Set on messages emitted straight from a failure detection.
    pub fast: bool,
}

/// RFC-style circular sequence comparison.
pub fn seq_newer(a: u16, b: u16) -> bool {
    (a > b && a - b <= u16::MAX / 2) || (b > a && b - a > u16::MAX / 2)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Changes {
    pub neighborhood: bool,
    pub topology: bool,
    pub selectors: bool,
}

impl Changes {
    pub fn any_view(&self) -> bool {
        self.neighborhood || self.topology
    }

    pub fn merge(&mut self, other: Changes) {
        self.neighborhood |= other.neighborhood;
        self.topology |= other.topology;
        self.selectors |= other.selectors;
    }
}

/// Expiry bookkeeping key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum TupleKey {
    Link(NodeId),
    TwoHop(NodeId, NodeId),
    Selector(NodeId),
    Topology(NodeId, NodeId),
    Dup(NodeId, u16),
}

#[derive(Debug)]
pub struct OlsrState {
    pub cfg: ProtocolConfig,
    links: BTreeMap<NodeId, LinkTuple>,
    /// (via one-hop neighbor, two-hop node) -> validity.
    two_hop: BTreeMap<(NodeId, NodeId), SimTime>,
    mprs: BTreeSet<NodeId>,
    /// Nodes that selected this node as MPR -> validity.
    selectors: BTreeMap<NodeId, SimTime>,
    /// (advertising last hop, destination) -> tuple.
    topology: BTreeMap<(NodeId, NodeId), TopologyTuple>,
    dups: BTreeMap<(NodeId, u16), DupTuple>,
    /// Lexicographic shortest-path tree over the current view.
    tree: Option<PathTree>,
    pub ansn: u16,
    msg_seq: u16,
    /// Neighbors confirmed unreachable by link-layer notification. Affects
    /// this node's forwarding and route computation only.
    lln_dead: BTreeSet<NodeId>,
    /// Links reported broken by out-of-band recovery messages, masked from
    /// the view until the deadline: the removal must outlive stale copies of
    /// pre-failure floods still in flight, or they re-poison the view the
    /// moment the repair lands. Keyed on the unordered pair.
    quarantine: BTreeMap<(NodeId, NodeId), SimTime>,
    /// Bumped whenever the topology view (hence routing) may have changed.
    pub view_version: u64,
    routes_dirty: bool,
    mprs_dirty: bool,
    deadlines: BinaryHeap<Reverse<(SimTime, TupleKey)>>,
    /// Earliest scheduled expiry sweep, if any.
    pub pending_sweep: Option<SimTime>,
    /// Reused between route recomputations.
    graph_scratch: ViewGraph,
}

impl OlsrState {
    pub fn new(cfg: ProtocolConfig) -> Self {
        cfg.validate().expect("invalid protocol config");
        OlsrState {
            cfg,
            links: BTreeMap::new(),
            two_hop: BTreeMap::new(),
            mprs: BTreeSet::new(),
            selectors: BTreeMap::new(),
            topology: BTreeMap::new(),
            dups: BTreeMap::new(),
            tree: None,
            ansn: 0,
            msg_seq: 0,
            lln_dead: BTreeSet::new(),
            quarantine: BTreeMap::new(),
            view_version: 0,
            routes_dirty: true,
            mprs_dirty: true,
            deadlines: BinaryHeap::new(),
            pending_sweep: None,
            graph_scratch: ViewGraph::new(),
        }
    }

    // ----- queries ------------------------------------------------------

    pub fn is_sym_neighbor(&self, n: NodeId, now: SimTime) -> bool {
        self.links
            .get(&n)
            .is_some_and(|l| l.expires >= now && l.sym_until >= now)
    }

    /// Symmetric and not blacklisted: usable as a forwarding next hop.
    pub fn is_usable_neighbor(&self, n: NodeId, now: SimTime) -> bool {
        self.is_sym_neighbor(n, now) && !self.lln_dead.contains(&n)
    }

    pub fn sym_neighbors(&self, now: SimTime) -> Vec<NodeId> {
        self.links
            .iter()
            .filter(|(_, l)| l.expires >= now && l.sym_until >= now)
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn mpr_set(&self) -> &BTreeSet<NodeId> {
        &self.mprs
    }

    pub fn selector_ids(&self, now: SimTime) -> Vec<NodeId> {
        self.selectors
            .iter()
            .filter(|(_, &exp)| exp >= now)
            .map(|(&n, _)| n)
            .collect()
    }

    /// True when `n` currently selects this node as MPR.
    pub fn is_selector(&self, n: NodeId, now: SimTime) -> bool {
        self.selectors.get(&n).is_some_and(|&exp| exp >= now)
    }

    pub fn lln_dead(&self) -> &BTreeSet<NodeId> {
        &self.lln_dead
    }

    pub fn topology_tuples(&self) -> &BTreeMap<(NodeId, NodeId), TopologyTuple> {
        &self.topology
    }

    pub fn link_tuple(&self, n: NodeId) -> Option<&LinkTuple> {
        self.links.get(&n)
    }

    pub fn two_hop_pairs(&self, now: SimTime) -> Vec<(NodeId, NodeId)> {
        self.two_hop
            .iter()
            .filter(|(_, &exp)| exp >= now)
            .map(|(&k, _)| k)
            .collect()
    }

    /// Next hop and hop count toward `dest`, if reachable.
    pub fn route_to(&self, dest: NodeId) -> Option<(NodeId, usize)> {
        let tree = self.tree.as_ref()?;
        Some((tree.next_hop(dest)?, tree.distance(dest)?))
    }

    /// The full computed path toward `dest` (starts at this node).
    pub fn path_to(&self, dest: NodeId) -> Option<Vec<NodeId>> {
        self.tree.as_ref()?.path_to(dest)
    }

    pub fn route_count(&self) -> usize {
        self.tree.as_ref().map_or(0, |t| t.destinations().count())
    }

    // ----- message construction ------------------------------------------

    pub fn build_hello(&self, me: NodeId, now: SimTime) -> HelloMsg {
        let entries = self
            .links
            .iter()
            .filter(|(_, l)| l.expires >= now)
            .map(|(&n, l)| HelloEntry {
                neighbor: n,
                symmetric: l.sym_until >= now,
                mpr: self.mprs.contains(&n),
            })
            .collect();
        HelloMsg { origin: me, entries }
    }

    /// TC content if one is due this period. Suppresses empty messages
    /// unless configured otherwise; `fast` messages carry even an empty set
    /// because the removal itself is the information.
    pub fn build_tc(&mut self, me: NodeId, now: SimTime, fast: bool) -> Option<TcMsg> {
        let advertised = self.selector_ids(now);
        if advertised.is_empty() && !self.cfg.send_empty_tc && !fast {
            return None;
        }
        let seq = self.msg_seq;
        self.msg_seq = self.msg_seq.wrapping_add(1);
        Some(TcMsg { originator: me, seq, ansn: self.ansn, advertised, ttl: 255, hops: 0, fast })
    }

    // ----- repository updates ---------------------------------------------

    fn note_deadline(&mut self, t: SimTime, key: TupleKey) {
        self.deadlines.push(Reverse((t, key)));
    }

    pub fn earliest_deadline(&self) -> Option<SimTime> {
        self.deadlines.peek().map(|Reverse((t, _))| *t)
    }

    /// Ingest a HELLO heard from `from`.
    pub fn apply_hello(&mut self, me: NodeId, from: NodeId, msg: &HelloMsg, now: SimTime) -> Changes {
        debug_assert_eq!(from, msg.origin);
        if from == me {
            return Changes::default();
        }
        let mut ch = Changes::default();
        let hold = self.cfg.neighb_hold_time;
        let was_sym = self.is_sym_neighbor(from, now);

        let me_entry = msg.entries.iter().find(|e| e.neighbor == me);
        let lives = now + hold;
        let tuple = self.links.entry(from).or_insert(LinkTuple {
            sym_until: SimTime::ZERO,
            asym_until: lives,
            expires: lives,
        });
        tuple.asym_until = lives;
        tuple.expires = lives;
        if me_entry.is_some() {
            // The sender hears us, so the link is symmetric; it also proves
            // our transmissions reach it again.
            tuple.sym_until = lives;
        }
        if me_entry.is_some() {
            self.lln_dead.remove(&from);
        }
        self.note_deadline(lives, TupleKey::Link(from));
        let is_sym = self.is_sym_neighbor(from, now);
        if was_sym != is_sym {
            ch.neighborhood = true;
        }

        if is_sym {
            for e in msg.entries.iter().filter(|e| e.symmetric && e.neighbor != me) {
                let prev = self.two_hop.insert((from, e.neighbor), lives);
                self.note_deadline(lives, TupleKey::TwoHop(from, e.neighbor));
                if prev.map_or(true, |p| p < now) {
                    ch.neighborhood = true;
                }
            }
            if me_entry.is_some_and(|e| e.mpr) {
                let prev = self.selectors.insert(from, lives);
                self.note_deadline(lives, TupleKey::Selector(from));
                if prev.map_or(true, |p| p < now) {
                    self.ansn = self.ansn.wrapping_add(1);
                    ch.selectors = true;
                }
            }
        }
        ch
    }

    /// Ingest a (non-duplicate) TC from a symmetric neighbor. Returns `None`
    /// when the message is stale by sequence number.
    pub fn apply_tc(&mut self, msg: &TcMsg, now: SimTime) -> Option<Changes> {
        let orig = msg.originator;
        let from_orig = (orig, 0)..=(orig, NodeId::MAX);
        let stale = self
            .topology
            .range(from_orig.clone())
            .any(|(_, t)| t.expires >= now && seq_newer(t.ansn, msg.ansn));
        if stale {
            return None;
        }
        let mut ch = Changes::default();
        let old: Vec<(NodeId, NodeId)> = self
            .topology
            .range(from_orig)
            .filter(|(_, t)| seq_newer(msg.ansn, t.ansn))
            .map(|(&k, _)| k)
            .collect();
        for k in old {
            self.topology.remove(&k);
            ch.topology = true;
        }
        let lives = now + self.cfg.top_hold_time;
        for &dest in &msg.advertised {
            if self.is_quarantined(dest, orig, now) {
                continue;
            }
            let prev = self.topology.insert((orig, dest), TopologyTuple { ansn: msg.ansn, expires: lives });
            self.note_deadline(lives, TupleKey::Topology(orig, dest));
            if prev.map_or(true, |p| p.expires < now) {
                ch.topology = true;
            }
        }
        Some(ch)
    }

    /// Duplicate-set check for a TC identified by (originator, seq).
    /// Returns (process_it, forward_it) given whether the relay condition
    /// holds (the sender picked this node as MPR).
    pub fn dup_check(
        &mut self,
        orig: NodeId,
        seq: u16,
        relay_allowed: bool,
        now: SimTime,
    ) -> (bool, bool) {
        let key = (orig, seq);
        match self.dups.get_mut(&key) {
            Some(d) if d.expires >= now => {
                let fwd = relay_allowed && !d.forwarded;
                if fwd {
                    d.forwarded = true;
                }
                (false, fwd)
            }
            _ => {
                self.dups.insert(key, DupTuple { expires: now + DUP_HOLD_TIME, forwarded: relay_allowed });
                self.note_deadline(now + DUP_HOLD_TIME, TupleKey::Dup(orig, seq));
                (true, relay_allowed)
            }
        }
    }

    fn is_quarantined(&self, a: NodeId, b: NodeId, now: SimTime) -> bool {
        self.quarantine
            .get(&(a.min(b), a.max(b)))
            .is_some_and(|&until| until >= now)
    }

    /// Drop the broken-link topology tuples in both orientations and mask
    /// the pair from the view for a topology-hold time (route error and data
    /// re-emission recovery both apply this). Without the mask, stale TCs
    /// emitted before the failure and still riding relay jitter would
    /// reinstate the edge right after the repair.
    pub fn remove_link_info(&mut self, a: NodeId, b: NodeId, now: SimTime) -> Changes {
        let mut ch = Changes::default();
        for key in [(a, b), (b, a)] {
            if self.topology.remove(&key).is_some() {
                ch.topology = true;
            }
        }
        if !self.is_quarantined(a, b, now) {
            ch.topology = true;
        }
        self.quarantine.insert((a.min(b), a.max(b)), now + self.cfg.top_hold_time);
        ch
    }

    /// Blacklist a neighbor after a failed transmission toward it. The
    /// repositories are untouched; detection feeds this node's own
    /// forwarding and route computation only. No-op for unknown neighbors.
    pub fn lln_notify(&mut self, lost: NodeId, now: SimTime) -> Changes {
        let mut ch = Changes::default();
        if !self.lln_dead.contains(&lost) && self.is_sym_neighbor(lost, now) {
            self.lln_dead.insert(lost);
            ch.neighborhood = true;
        }
        ch
    }

    /// Drop the selector entry for a lost neighbor so the next TC advertises
    /// the loss. Used by the fast-TC recovery scheme at the detector.
    pub fn purge_selector(&mut self, lost: NodeId, now: SimTime) -> bool {
        match self.selectors.remove(&lost) {
            Some(exp) if exp >= now => {
                self.ansn = self.ansn.wrapping_add(1);
                true
            }
            _ => false,
        }
    }

    /// Remove everything whose validity passed. Returns what changed plus
    /// the neighbors whose link tuples expired (failure-detection points).
    pub fn sweep_expired(&mut self, now: SimTime) -> (Changes, Vec<NodeId>) {
        let mut ch = Changes::default();
        let mut lost_links = Vec::new();
        while let Some(Reverse((t, _))) = self.deadlines.peek() {
            if *t >= now {
                break;
            }
            let Reverse((_, key)) = self.deadlines.pop().unwrap();
            match key {
                TupleKey::Link(n) => {
                    if self.links.get(&n).is_some_and(|l| l.expires < now) {
                        self.links.remove(&n);
                        self.lln_dead.remove(&n);
                        ch.neighborhood = true;
                        lost_links.push(n);
                        // Neighbor loss: two-hop coverage through it and its
                        // selector entry go with the link.
                        let gone: Vec<(NodeId, NodeId)> = self
                            .two_hop
                            .keys()
                            .filter(|&&(via, _)| via == n)
                            .copied()
                            .collect();
                        for k in gone {
                            self.two_hop.remove(&k);
                        }
                        if self.selectors.remove(&n).is_some() {
                            self.ansn = self.ansn.wrapping_add(1);
                            ch.selectors = true;
                        }
                    }
                }
                TupleKey::TwoHop(via, node) => {
                    if self.two_hop.get(&(via, node)).is_some_and(|&e| e < now) {
                        self.two_hop.remove(&(via, node));
                        ch.neighborhood = true;
                    }
                }
                TupleKey::Selector(n) => {
                    if self.selectors.get(&n).is_some_and(|&e| e < now) {
                        self.selectors.remove(&n);
                        self.ansn = self.ansn.wrapping_add(1);
                        ch.selectors = true;
                    }
                }
                TupleKey::Topology(lh, dest) => {
                    if self.topology.get(&(lh, dest)).is_some_and(|t| t.expires < now) {
                        self.topology.remove(&(lh, dest));
                        ch.topology = true;
                    }
                }
                TupleKey::Dup(orig, seq) => {
                    if self.dups.get(&(orig, seq)).is_some_and(|d| d.expires < now) {
                        self.dups.remove(&(orig, seq));
                    }
                }
            }
        }
        (ch, lost_links)
    }

    // ----- derived state ---------------------------------------------------

    /// Note that the topology view changed: path sets and route tables
    /// computed from it are stale.
    pub fn mark_view_changed(&mut self) {
        self.view_version += 1;
        self.routes_dirty = true;
    }

    pub fn mark_mprs_dirty(&mut self) {
        self.mprs_dirty = true;
    }

    /// Recompute the routing table if anything changed since last time.
    pub fn ensure_routes(&mut self, me: NodeId, now: SimTime) {
        if self.routes_dirty {
            self.recompute_routes(me, now);
            self.routes_dirty = false;
        }
    }

    /// Recompute the MPR set if the neighborhood changed since last time.
    /// The set is only observable through HELLO flags, so this runs at
    /// HELLO build time.
    pub fn ensure_mprs(&mut self, now: SimTime) {
        if self.mprs_dirty {
            self.recompute_mprs(now);
            self.mprs_dirty = false;
        }
    }

    /// Greedy MPR selection: cover every strict two-hop neighbor, preferring
    /// sole-cover neighbors, then the largest remaining coverage, ties to the
    /// lowest node id.
    pub fn recompute_mprs(&mut self, now: SimTime) -> bool {
        let candidates: Vec<NodeId> = self
            .sym_neighbors(now)
            .into_iter()
            .filter(|n| !self.lln_dead.contains(n))
            .collect();
        let cand_set: BTreeSet<NodeId> = candidates.iter().copied().collect();
        // Strict two-hop targets and who covers them.
        let mut cover: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for ((via, node), &exp) in &self.two_hop {
            if exp >= now && cand_set.contains(via) && !cand_set.contains(node) {
                cover.entry(*node).or_default().insert(*via);
            }
        }
        let mut uncovered: BTreeSet<NodeId> = cover.keys().copied().collect();
        let mut chosen: BTreeSet<NodeId> = BTreeSet::new();
        // Mandatory picks: only path to some two-hop node.
        for vias in cover.values() {
            if vias.len() == 1 {
                chosen.insert(*vias.first().unwrap());
            }
        }
        uncovered.retain(|t| !cover[t].iter().any(|v| chosen.contains(v)));
        while !uncovered.is_empty() {
            let mut best: Option<(usize, NodeId)> = None;
            for &c in &candidates {
                if chosen.contains(&c) {
                    continue;
                }
                let gain = uncovered.iter().filter(|t| cover[t].contains(&c)).count();
                if gain == 0 {
                    continue;
                }
                // Strictly greater gain wins; equal gain keeps the lower id,
                // which candidates already iterate in.
                if best.map_or(true, |(g, _)| gain > g) {
                    best = Some((gain, c));
                }
            }
            match best {
                Some((_, c)) => {
                    chosen.insert(c);
                    uncovered.retain(|t| !cover[t].contains(&c));
                }
                None => break, // remaining targets have no live cover
            }
        }
        let changed = chosen != self.mprs;
        self.mprs = chosen;
        changed
    }

    /// The directed graph this node believes in: its own symmetric links,
    /// two-hop edges, and advertised topology edges. Blacklisted links stay
    /// in the graph: hop-by-hop forwarding keeps driving into them (and
    /// keeps detecting the failure) until the repository entry ages out.
    pub fn view_graph(&self, me: NodeId, now: SimTime) -> ViewGraph {
        let mut g = ViewGraph::new();
        self.view_graph_into(me, now, &mut g);
        g
    }

    fn view_graph_into(&self, me: NodeId, now: SimTime, g: &mut ViewGraph) {
        g.clear();
        for n in self.sym_neighbors(now) {
            if !self.is_quarantined(me, n, now) {
                g.add_undirected(me, n);
            }
        }
        for ((via, node), &exp) in &self.two_hop {
            if exp >= now && !self.is_quarantined(*via, *node, now) {
                g.add_edge(*via, *node);
            }
        }
        for ((lh, dest), t) in &self.topology {
            if t.expires >= now && !self.is_quarantined(*dest, *lh, now) {
                g.add_edge(*lh, *dest);
            }
        }
    }

    /// Hop-count shortest paths over the current view.
    pub fn recompute_routes(&mut self, me: NodeId, now: SimTime) {
        let mut g = std::mem::take(&mut self.graph_scratch);
        self.view_graph_into(me, now, &mut g);
        self.tree = Some(shortest_path_tree(&g, me));
        self.graph_scratch = g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::shortest_paths;

    fn cfg() -> ProtocolConfig {
        ProtocolConfig::default()
    }

    fn hello(origin: NodeId, entries: &[(NodeId, bool, bool)]) -> HelloMsg {
        HelloMsg {
            origin,
            entries: entries
                .iter()
                .map(|&(neighbor, symmetric, mpr)| HelloEntry { neighbor, symmetric, mpr })
                .collect(),
        }
    }

    #[test]
    fn first_hello_creates_asymmetric_link() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        st.apply_hello(0, 1, &hello(1, &[]), now);
        assert!(!st.is_sym_neighbor(1, now));
        assert!(st.link_tuple(1).is_some());
    }

    #[test]
    fn hello_listing_receiver_makes_link_symmetric() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        st.apply_hello(0, 1, &hello(1, &[(0, false, false)]), now);
        assert!(st.is_sym_neighbor(1, now));
    }

    #[test]
    fn silent_neighbor_expires_after_hold_time() {
        let mut st = OlsrState::new(cfg());
        let t0 = SimTime::from_secs(1);
        st.apply_hello(0, 1, &hello(1, &[(0, true, false)]), t0);
        let expiry = t0 + cfg().neighb_hold_time;
        assert!(st.is_sym_neighbor(1, expiry));
        let after = expiry + SimTime::from_micros(1);
        assert!(!st.is_sym_neighbor(1, after));
        let (ch, lost) = st.sweep_expired(after);
        assert!(ch.neighborhood);
        assert_eq!(lost, vec![1]);
        assert!(st.link_tuple(1).is_none());
    }

    #[test]
    fn sweep_after_refresh_is_noop() {
        let mut st = OlsrState::new(cfg());
        let t0 = SimTime::from_secs(1);
        st.apply_hello(0, 1, &hello(1, &[(0, true, false)]), t0);
        let t1 = SimTime::from_secs(3);
        st.apply_hello(0, 1, &hello(1, &[(0, true, false)]), t1);
        // The first deadline passes but the tuple was refreshed.
        let (ch, lost) = st.sweep_expired(t0 + cfg().neighb_hold_time + SimTime::from_micros(1));
        assert_eq!(ch, Changes::default());
        assert!(lost.is_empty());
        assert!(st.is_sym_neighbor(1, t1));
    }

    #[test]
    fn two_hop_from_symmetric_entries_only_and_never_self() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        st.apply_hello(0, 1, &hello(1, &[(0, true, false), (2, true, false), (3, false, false)]), now);
        let pairs = st.two_hop_pairs(now);
        assert!(pairs.contains(&(1, 2)));
        assert!(!pairs.contains(&(1, 3)), "asymmetric entries do not create two-hop edges");
        assert!(!pairs.contains(&(1, 0)), "a node never appears as its own two-hop neighbor");
    }

    /// Builds the chain 0-1-2-3-4 as seen from node 2.
    fn chain_state_at_2() -> (OlsrState, SimTime) {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        st.apply_hello(2, 1, &hello(1, &[(2, true, false), (0, true, false)]), now);
        st.apply_hello(2, 3, &hello(3, &[(2, true, false), (4, true, false)]), now);
        (st, now)
    }

    #[test]
    fn mpr_selection_on_chain_picks_both_neighbors() {
        let (mut st, now) = chain_state_at_2();
        st.recompute_mprs(now);
        assert_eq!(st.mpr_set().iter().copied().collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn mpr_selection_without_two_hop_is_empty() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        st.apply_hello(0, 1, &hello(1, &[(0, true, false)]), now);
        st.recompute_mprs(now);
        assert!(st.mpr_set().is_empty());
    }

    #[test]
    fn mpr_coverage_invariant_on_random_neighborhoods() {
        // Brute-force oracle: every strict two-hop node must be covered by a
        // chosen MPR; verified against full subset enumeration when a cover
        // exists at all.
        let mut rng = crate::rng::RngSet::new(5);
        for round in 0..200 {
            let s = rng.stream(round, "mpr");
            let now = SimTime::from_secs(1);
            let mut st = OlsrState::new(cfg());
            let n_nbr = 1 + s.below(5) as usize;
            let n_two = s.below(6) as usize;
            let me = 0usize;
            for nbr in 1..=n_nbr {
                // Two-hop targets use ids >= 100 so sets never collide.
                let mut entries = vec![(me, true, false)];
                for t in 0..n_two {
                    if s.next_f64() < 0.5 {
                        entries.push((100 + t, true, false));
                    }
                }
                st.apply_hello(me, nbr, &hello(nbr, &entries), now);
            }
            st.recompute_mprs(now);
            let chosen = st.mpr_set().clone();
            let pairs = st.two_hop_pairs(now);
            let targets: BTreeSet<NodeId> = pairs.iter().map(|&(_, t)| t).collect();
            for t in targets {
                let covered = pairs.iter().any(|&(via, tt)| tt == t && chosen.contains(&via));
                assert!(covered, "round {round}: two-hop {t} uncovered by {chosen:?}");
            }
        }
    }

    #[test]
    fn tc_updates_topology_and_stale_seq_ignored() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        let tc = TcMsg { originator: 2, seq: 0, ansn: 5, advertised: vec![1, 3], ttl: 255, hops: 0, fast: false };
        let ch = st.apply_tc(&tc, now).unwrap();
        assert!(ch.topology);
        assert_eq!(st.topology_tuples().len(), 2);

        // Fresher message drops what is no longer advertised.
        let tc2 = TcMsg { originator: 2, seq: 1, ansn: 6, advertised: vec![1], ttl: 255, hops: 0, fast: false };
        st.apply_tc(&tc2, now + SimTime::from_secs(1)).unwrap();
        assert!(st.topology_tuples().get(&(2, 3)).is_none());
        assert!(st.topology_tuples().get(&(2, 1)).is_some());

        // Stale message is ignored entirely.
        let old = TcMsg { originator: 2, seq: 2, ansn: 5, advertised: vec![9], ttl: 255, hops: 0, fast: false };
        assert!(st.apply_tc(&old, now + SimTime::from_secs(2)).is_none());
        assert!(st.topology_tuples().get(&(2, 9)).is_none());
    }

    #[test]
    fn topology_tuple_expires_within_hold_time() {
        let mut st = OlsrState::new(cfg());
        let t0 = SimTime::from_secs(1);
        let tc = TcMsg { originator: 2, seq: 0, ansn: 1, advertised: vec![3], ttl: 255, hops: 0, fast: false };
        st.apply_tc(&tc, t0).unwrap();
        let after = t0 + cfg().top_hold_time + SimTime::from_micros(1);
        let (ch, _) = st.sweep_expired(after);
        assert!(ch.topology);
        assert!(st.topology_tuples().is_empty());
    }

    #[test]
    fn duplicate_tc_processed_once_forwarded_at_most_once() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        let (p1, f1) = st.dup_check(2, 7, true, now);
        assert!(p1 && f1);
        let (p2, f2) = st.dup_check(2, 7, true, now);
        assert!(!p2 && !f2);
        // A copy that was not forwardable at first reception may still be
        // relayed later when the relay condition appears.
        let (p3, f3) = st.dup_check(5, 9, false, now);
        assert!(p3 && !f3);
        let (p4, f4) = st.dup_check(5, 9, true, now);
        assert!(!p4 && f4);
        let (_, f5) = st.dup_check(5, 9, true, now);
        assert!(!f5);
    }

    #[test]
    fn routes_on_chain_view() {
        let (mut st, now) = chain_state_at_2();
        // Topology tuples for the rest of the chain as TCs would install them.
        st.apply_tc(&TcMsg { originator: 1, seq: 0, ansn: 1, advertised: vec![0, 2], ttl: 255, hops: 0, fast: false }, now);
        st.apply_tc(&TcMsg { originator: 3, seq: 0, ansn: 1, advertised: vec![2, 4], ttl: 255, hops: 0, fast: false }, now);
        st.recompute_routes(2, now);
        assert_eq!(st.route_to(0), Some((1, 2)));
        assert_eq!(st.route_to(4), Some((3, 2)));
        assert_eq!(st.route_to(9), None);
    }

    #[test]
    fn node_with_empty_topology_reaches_only_one_and_two_hop() {
        let (mut st, now) = chain_state_at_2();
        st.recompute_routes(2, now);
        assert_eq!(st.route_to(0), Some((1, 2)));
        assert_eq!(st.route_to(4), Some((3, 2)));
        assert_eq!(st.route_count(), 4);
    }

    #[test]
    fn routing_distances_match_exhaustive_oracle() {
        // Random views: compare against Floyd-Warshall on the same graph.
        let mut rng = crate::rng::RngSet::new(9);
        for round in 0..200 {
            let s = rng.stream(round, "routes");
            let n = 3 + s.below(10) as usize;
            let mut g = ViewGraph::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && s.next_f64() < 0.3 {
                        g.add_edge(a, b);
                    }
                }
            }
            let got = shortest_paths(&g, 0);
            let mut dist = vec![vec![usize::MAX / 2; n]; n];
            for a in 0..n {
                dist[a][a] = 0;
                for b in g.successors(a) {
                    dist[a][b] = 1;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        dist[i][j] = dist[i][j].min(dist[i][k] + dist[k][j]);
                    }
                }
            }
            for d in 1..n {
                let oracle = if dist[0][d] >= usize::MAX / 2 { None } else { Some(dist[0][d]) };
                let ours = got.get(&d).map(|p| p.len() - 1);
                assert_eq!(ours, oracle, "round {round} dest {d}");
            }
        }
    }

    #[test]
    fn lln_blacklist_affects_forwarding_not_hello_content() {
        let (mut st, now) = chain_state_at_2();
        st.recompute_mprs(now);
        let ch = st.lln_notify(3, now);
        assert!(ch.neighborhood);
        assert!(!st.is_usable_neighbor(3, now));
        assert!(st.is_sym_neighbor(3, now), "repository entry survives the notification");
        let msg = st.build_hello(2, now);
        assert!(msg.entries.iter().any(|e| e.neighbor == 3 && e.symmetric));
        // Second notification is a no-op.
        let ch2 = st.lln_notify(3, now);
        assert_eq!(ch2, Changes::default());
        // A fresh HELLO listing us clears the blacklist.
        st.apply_hello(2, 3, &hello(3, &[(2, true, false)]), now + SimTime::from_secs(1));
        assert!(st.is_usable_neighbor(3, now + SimTime::from_secs(1)));
    }

    #[test]
    fn lln_for_unknown_neighbor_is_noop() {
        let mut st = OlsrState::new(cfg());
        let ch = st.lln_notify(42, SimTime::from_secs(1));
        assert_eq!(ch, Changes::default());
        assert!(st.lln_dead().is_empty());
    }

    #[test]
    fn empty_tc_suppressed_unless_fast_or_configured() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        assert!(st.build_tc(0, now, false).is_none());
        let fast = st.build_tc(0, now, true).unwrap();
        assert!(fast.advertised.is_empty() && fast.fast);

        let mut cfg2 = cfg();
        cfg2.send_empty_tc = true;
        let mut st2 = OlsrState::new(cfg2);
        assert!(st2.build_tc(0, now, false).is_some());
    }

    #[test]
    fn ansn_never_decreases_and_bumps_on_selector_change() {
        let mut st = OlsrState::new(cfg());
        let now = SimTime::from_secs(1);
        let a0 = st.ansn;
        st.apply_hello(0, 1, &hello(1, &[(0, true, true)]), now);
        assert!(seq_newer(st.ansn, a0));
        let a1 = st.ansn;
        // Refresh without change: no bump.
        st.apply_hello(0, 1, &hello(1, &[(0, true, true)]), now + SimTime::from_secs(1));
        assert_eq!(st.ansn, a1);
        assert!(st.purge_selector(1, now + SimTime::from_secs(1)));
        assert!(seq_newer(st.ansn, a1));
        assert!(!st.purge_selector(1, now + SimTime::from_secs(1)));
    }

    #[test]
    fn seq_newer_handles_wraparound() {
        assert!(seq_newer(1, 0));
        assert!(seq_newer(0, u16::MAX));
        assert!(!seq_newer(u16::MAX, 0));
        assert!(!seq_newer(5, 5));
    }
}
