//! Abstract wireless medium: unit-disk connectivity over current node
//! positions, injected node/link failures, and per-frame loss.
//!
//! There is no MAC contention model: frames never collide, and every hop
//! costs a fixed `per_hop_delay`. Link-layer notification is realized by the
//! simulator treating a failed unicast as a synchronous outcome at the
//! sender.

use crate::mobility::{Mobility, NodeId};
use crate::time::SimTime;
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug)]
pub struct MediumConfig {
    /// Radio range in meters; links are symmetric.
    pub tx_range: f64,
    /// Fixed transmission + propagation abstraction per hop.
    pub per_hop_delay: SimTime,
    /// Independent loss probability per (frame, receiver).
    pub loss_probability: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig {
            tx_range: 60.0,
            per_hop_delay: SimTime::from_millis(2),
            loss_probability: 0.0,
        }
    }
}

impl MediumConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.tx_range <= 0.0 {
            return Err("tx_range must be > 0".into());
        }
        if self.per_hop_delay == SimTime::ZERO {
            return Err("per_hop_delay must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err("loss_probability must be in [0, 1]".into());
        }
        Ok(())
    }
}

fn norm(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

#[derive(Debug)]
pub struct Medium {
    pub cfg: MediumConfig,
    failed_nodes: BTreeSet<NodeId>,
    failed_links: BTreeSet<(NodeId, NodeId)>,
}

impl Medium {
    pub fn new(cfg: MediumConfig) -> Self {
        cfg.validate().expect("invalid medium config");
        Medium { cfg, failed_nodes: BTreeSet::new(), failed_links: BTreeSet::new() }
    }

    pub fn alive(&self, n: NodeId) -> bool {
        !self.failed_nodes.contains(&n)
    }

    /// Marks a node dead; idempotent. Cuts both of its directions at once.
    pub fn fail_node(&mut self, n: NodeId) {
        self.failed_nodes.insert(n);
    }

    /// Cuts a link in both directions; idempotent.
    pub fn fail_link(&mut self, a: NodeId, b: NodeId) {
        self.failed_links.insert(norm(a, b));
    }

    pub fn link_cut(&self, a: NodeId, b: NodeId) -> bool {
        self.failed_links.contains(&norm(a, b))
    }

    /// True when a frame from `a` can reach `b` right now: both alive, link
    /// not cut, and within range at current positions.
    pub fn link_up(&self, a: NodeId, b: NodeId, mob: &Mobility, t: SimTime) -> bool {
        if a == b || !self.alive(a) || !self.alive(b) || self.link_cut(a, b) {
            return false;
        }
        let pa = mob.position(a, t);
        let pb = mob.position(b, t);
        pa.dist2(pb) <= self.cfg.tx_range * self.cfg.tx_range
    }

    /// Alive nodes within range of `n`, excluding `n`. A failed node hears
    /// and reaches nothing.
    pub fn neighbors_in_range(&self, n: NodeId, mob: &Mobility, t: SimTime) -> Vec<NodeId> {
        if !self.alive(n) {
            return Vec::new();
        }
        (0..mob.node_count()).filter(|&m| self.link_up(n, m, mob, t)).collect()
    }

    /// True if a delivery scheduled earlier must still go through at time
    /// `t`: failures injected mid-flight suppress the delivery. Range is
    /// checked at transmission time only.
    pub fn delivery_allowed(&self, from: NodeId, to: NodeId) -> bool {
        self.alive(from) && self.alive(to) && !self.link_cut(from, to)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameMode {
    Broadcast,
    Unicast(NodeId),
}
