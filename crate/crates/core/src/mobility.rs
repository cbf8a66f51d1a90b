//! Node placement and movement: fixed layouts and random waypoint motion.

use crate::rng::RngSet;
use crate::time::SimTime;

pub type NodeId = usize;

/// Planar position in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn dist2(self, other: Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Position) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Random waypoint parameters.
#[derive(Clone, Copy, Debug)]
pub struct RwpConfig {
    pub area_w: f64,
    pub area_h: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Dwell time at each waypoint before the next leg starts.
    pub pause: SimTime,
}

impl RwpConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max) {
            return Err(format!(
                "rwp speeds must satisfy 0 < min <= max, got [{}, {}]",
                self.speed_min, self.speed_max
            ));
        }
        if self.area_w <= 0.0 || self.area_h <= 0.0 {
            return Err("rwp area must be positive".into());
        }
        Ok(())
    }
}

/// One straight movement leg.
#[derive(Clone, Copy, Debug)]
struct Leg {
    from: Position,
    to: Position,
    start: SimTime,
    arrive: SimTime,
}

impl Leg {
    fn pos_at(&self, t: SimTime) -> Position {
        if t >= self.arrive || self.arrive == self.start {
            return self.to;
        }
        let total = (self.arrive - self.start).micros() as f64;
        let done = (t.saturating_sub(self.start)).micros() as f64;
        let f = done / total;
        Position {
            x: self.from.x + (self.to.x - self.from.x) * f,
            y: self.from.y + (self.to.y - self.from.y) * f,
        }
    }
}

/// Position source for the medium: either a fixed layout or RWP legs.
#[derive(Debug)]
pub struct Mobility {
    inner: MobilityKind,
}

#[derive(Debug)]
enum MobilityKind {
    Fixed(Vec<Position>),
    Rwp { cfg: RwpConfig, legs: Vec<Leg> },
}

impl Mobility {
    pub fn fixed(positions: Vec<Position>) -> Self {
        Mobility { inner: MobilityKind::Fixed(positions) }
    }

    /// Draws initial positions and first legs. One leg per node; the
    /// simulator schedules an arrival event at each leg's end.
    pub fn rwp_init(cfg: RwpConfig, n_nodes: usize, rng: &mut RngSet) -> (Self, Vec<SimTime>) {
        cfg.validate().expect("invalid rwp config");
        let mut legs = Vec::with_capacity(n_nodes);
        let mut arrivals = Vec::with_capacity(n_nodes);
        for node in 0..n_nodes {
            let s = rng.stream(node, "rwp");
            let from = Position { x: s.uniform(0.0, cfg.area_w), y: s.uniform(0.0, cfg.area_h) };
            let leg = next_leg(&cfg, from, SimTime::ZERO, rng, node);
            arrivals.push(leg.arrive);
            legs.push(leg);
        }
        (Mobility { inner: MobilityKind::Rwp { cfg, legs } }, arrivals)
    }

    pub fn node_count(&self) -> usize {
        match &self.inner {
            MobilityKind::Fixed(p) => p.len(),
            MobilityKind::Rwp { legs, .. } => legs.len(),
        }
    }

    pub fn position(&self, node: NodeId, t: SimTime) -> Position {
        match &self.inner {
            MobilityKind::Fixed(p) => p[node],
            MobilityKind::Rwp { legs, .. } => legs[node].pos_at(t),
        }
    }

    /// Called when `node` reaches its waypoint; starts the next leg and
    /// returns its arrival time. No-op (returns None) for fixed layouts.
    pub fn on_arrival(&mut self, node: NodeId, now: SimTime, rng: &mut RngSet) -> Option<SimTime> {
        match &mut self.inner {
            MobilityKind::Fixed(_) => None,
            MobilityKind::Rwp { cfg, legs } => {
                let here = legs[node].to;
                let leg = next_leg(cfg, here, now + cfg.pause, rng, node);
                let arrive = leg.arrive;
                legs[node] = leg;
                Some(arrive)
            }
        }
    }
}

fn next_leg(cfg: &RwpConfig, from: Position, start: SimTime, rng: &mut RngSet, node: NodeId) -> Leg {
    let s = rng.stream(node, "rwp");
    let to = Position { x: s.uniform(0.0, cfg.area_w), y: s.uniform(0.0, cfg.area_h) };
    let speed = if cfg.speed_min == cfg.speed_max {
        cfg.speed_min
    } else {
        s.uniform(cfg.speed_min, cfg.speed_max)
    };
    let dist = from.dist(to);
    let travel = SimTime::from_secs_f64(dist / speed);
    Leg { from, to, start, arrive: start + travel }
}

/// Canonical dual-chain layout: two node-disjoint chains of `p` intermediates
/// each, joining one source (node 0) and one destination (node p+1). The
/// upper chain is 1..=p, the lower chain is p+2..=2p+1 with node p+2 adjacent
/// to the source. Nodes sit on a regular (2p+2)-gon with 50 m sides so that
/// only chain-consecutive nodes fall within a 60 m radio range.
pub fn dual_chain_layout(intermediates_per_path: usize) -> Vec<Position> {
    let p = intermediates_per_path;
    assert!(p >= 2, "dual chain needs at least 2 intermediates per path");
    let n = 2 * p + 2;
    let side = 50.0_f64;
    let radius = side / (2.0 * (std::f64::consts::PI / n as f64).sin());
    // 10 m margin keeps the 8-node ring inside a 150 m square.
    let center = radius + 10.0;

    // Ring slot order: source, upper chain, destination, lower chain reversed,
    // so ring adjacency equals chain adjacency.
    let mut ring: Vec<NodeId> = Vec::with_capacity(n);
    ring.push(0);
    ring.extend(1..=p); // upper intermediates
    ring.push(p + 1); // destination
    ring.extend((p + 2..=2 * p + 1).rev()); // lower intermediates, back toward source

    let mut pos = vec![Position { x: 0.0, y: 0.0 }; n];
    for (slot, &id) in ring.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * slot as f64 / n as f64;
        pos[id] = Position { x: center + radius * angle.cos(), y: center + radius * angle.sin() };
    }
    pos
}

/// The adjacency the dual chain must exhibit under a given range: exactly the
/// chain-consecutive pairs.
pub fn dual_chain_expected_links(p: usize) -> Vec<(NodeId, NodeId)> {
    let dest = p + 1;
    let mut links = Vec::new();
    links.push((0, 1));
    for i in 1..p {
        links.push((i, i + 1));
    }
    links.push((p, dest));
    links.push((0, p + 2));
    for i in p + 2..2 * p + 1 {
        links.push((i, i + 1));
    }
    links.push((2 * p + 1, dest));
    links
}

#[cfg(test)]
mod tests {
    use super::*;

    fn in_range(a: Position, b: Position, r: f64) -> bool {
        a.dist2(b) <= r * r
    }

    #[test]
    fn dual_chain_p3_has_figure_adjacency() {
        let pos = dual_chain_layout(3);
        assert_eq!(pos.len(), 8);
        let r = 60.0;
        let neighbors = |n: NodeId| -> Vec<NodeId> {
            (0..8).filter(|&m| m != n && in_range(pos[n], pos[m], r)).collect()
        };
        assert_eq!(neighbors(2), vec![1, 3]);
        assert_eq!(neighbors(0), vec![1, 5]);
        assert_eq!(neighbors(4), vec![3, 7]);
    }

    #[test]
    fn dual_chain_p3_fits_scenario_area() {
        for p in dual_chain_layout(3) {
            assert!(p.x > 0.0 && p.x < 150.0 && p.y > 0.0 && p.y < 150.0, "{p:?}");
        }
    }

    #[test]
    fn dual_chain_p9_has_twenty_nodes_and_chain_links_only() {
        let p = 9;
        let pos = dual_chain_layout(p);
        assert_eq!(pos.len(), 20);
        let r = 60.0;
        let expected: std::collections::BTreeSet<(usize, usize)> = dual_chain_expected_links(p)
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        let mut actual = std::collections::BTreeSet::new();
        for a in 0..20 {
            for b in a + 1..20 {
                if in_range(pos[a], pos[b], r) {
                    actual.insert((a, b));
                }
            }
        }
        assert_eq!(actual, expected);
    }

    #[test]
    fn rwp_fixed_speed_leg_has_exact_arrival() {
        let cfg = RwpConfig {
            area_w: 1000.0,
            area_h: 1000.0,
            speed_min: 1.0,
            speed_max: 1.0,
            pause: SimTime::ZERO,
        };
        let from = Position { x: 0.0, y: 0.0 };
        let mut rng = RngSet::new(1);
        let leg = next_leg(&cfg, from, SimTime::ZERO, &mut rng, 0);
        let dist = from.dist(leg.to);
        let expect = SimTime::from_secs_f64(dist / 1.0);
        assert_eq!(leg.arrive, expect);
    }

    #[test]
    fn rwp_positions_stay_in_area() {
        let cfg = RwpConfig {
            area_w: 1000.0,
            area_h: 1000.0,
            speed_min: 1.0,
            speed_max: 10.0,
            pause: SimTime::ZERO,
        };
        let mut rng = RngSet::new(7);
        let (mut mob, mut arrivals) = Mobility::rwp_init(cfg, 10, &mut rng);
        let mut t = SimTime::ZERO;
        while t < SimTime::from_secs(200) {
            for n in 0..10 {
                if arrivals[n] <= t {
                    if let Some(next) = mob.on_arrival(n, arrivals[n], &mut rng) {
                        arrivals[n] = next;
                    }
                }
                let p = mob.position(n, t);
                assert!(p.x >= 0.0 && p.x <= 1000.0 && p.y >= 0.0 && p.y <= 1000.0);
            }
            t += SimTime::from_millis(500);
        }
    }

    #[test]
    fn rwp_mean_speed_within_band() {
        // Distance is accumulated leg by leg (measured at the waypoints), so
        // the per-node mean speed over 200 s is an exact time-weighted mean
        // of the per-leg draws and must sit inside the configured band.
        let cfg = RwpConfig {
            area_w: 1000.0,
            area_h: 1000.0,
            speed_min: 1.0,
            speed_max: 10.0,
            pause: SimTime::ZERO,
        };
        let mut rng = RngSet::new(11);
        let (mut mob, arrivals) = Mobility::rwp_init(cfg, 50, &mut rng);
        let horizon = SimTime::from_secs(200);
        for n in 0..50 {
            let mut dist = 0.0;
            let mut prev_pos = mob.position(n, SimTime::ZERO);
            let mut t = arrivals[n];
            while t < horizon {
                let pos = mob.position(n, t);
                dist += prev_pos.dist(pos);
                prev_pos = pos;
                t = mob.on_arrival(n, t, &mut rng).unwrap();
            }
            // Close the final partial leg at the horizon.
            dist += prev_pos.dist(mob.position(n, horizon));
            let mean = dist / horizon.as_secs_f64();
            assert!(
                mean >= 1.0 - 1e-9 && mean <= 10.0 + 1e-9,
                "node {n} mean speed {mean} outside [1, 10]"
            );
        }
    }
}
