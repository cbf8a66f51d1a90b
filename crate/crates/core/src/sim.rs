//! One simulation run: owns the kernel, the medium, every node's protocol
//! state, the traffic sources and the metric accumulators, and dispatches
//! events single-threadedly. Separate runs share nothing.

use crate::graph::MultipathCostConfig;
use crate::kernel::{trace_line, Fired, Kernel};
use crate::medium::{Medium, MediumConfig};
use crate::metrics::{FailureWatch, Metrics};
use crate::mobility::{dual_chain_expected_links, dual_chain_layout, Mobility, NodeId, Position, RwpConfig};
use crate::mpolsr::{recover_route, MpolsrState, SourceRoute};
use crate::olsr::{Changes, HelloMsg, OlsrState, ProtocolConfig, TcMsg};
use crate::recovery::{DrEnvelope, RecoveryConfig, RecoveryState, RerrNotif, Scheme};
use crate::rng::RngSet;
use crate::time::SimTime;
use crate::traffic::{CbrFlow, DataPacket, DropReason, TrafficState, DATA_TTL};
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Olsr,
    MpOlsr,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Olsr => "olsr",
            Protocol::MpOlsr => "mpolsr",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s {
            "olsr" => Some(Protocol::Olsr),
            "mpolsr" => Some(Protocol::MpOlsr),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum FailureKind {
    Node(NodeId),
    Link(NodeId, NodeId),
}

#[derive(Clone, Copy, Debug)]
pub struct FailureSpec {
    pub at: SimTime,
    pub kind: FailureKind,
    /// The link whose recovery timeline is measured, when any.
    pub watch: Option<(NodeId, NodeId)>,
}

#[derive(Clone, Debug)]
pub enum TopologyConfig {
    Static(Vec<Position>),
    DualChain { intermediates_per_path: usize },
    Rwp { cfg: RwpConfig, nodes: usize },
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub protocol: Protocol,
    pub olsr: ProtocolConfig,
    pub medium: MediumConfig,
    pub multipath: MultipathCostConfig,
    pub recovery: RecoveryConfig,
    pub topology: TopologyConfig,
    pub flows: Vec<CbrFlow>,
    pub failures: Vec<FailureSpec>,
    pub duration: SimTime,
    pub seed: u64,
    pub collect_trace: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.olsr.validate()?;
        self.medium.validate()?;
        self.multipath.validate()?;
        if self.recovery.scheme == Scheme::Dr && self.protocol == Protocol::Olsr {
            return Err("data re-emission requires the multipath protocol".into());
        }
        Ok(())
    }
}

struct Node {
    olsr: OlsrState,
    mpolsr: MpolsrState,
    recovery: RecoveryState,
}

#[derive(Debug, Clone)]
enum Payload {
    Hello(Rc<HelloMsg>),
    Tc(Rc<TcMsg>),
    Data(Box<DataPacket>),
    Rerr(Box<RerrNotif>),
    Dr(Box<DrEnvelope>),
}

#[derive(Debug)]
enum Ev {
    HelloTimer(NodeId),
    TcTimer(NodeId),
    TcEmit(NodeId, Rc<TcMsg>),
    TcForward(NodeId, Rc<TcMsg>),
    Deliver { from: NodeId, to: NodeId, frame: Payload },
    Expire(NodeId),
    Fail(FailureKind),
    CbrEmit(usize),
    RwpArrive(NodeId),
}

pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: Vec<String>,
    pub events_fired: u64,
    pub in_flight_at_end: usize,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub layout: Vec<Position>,
}

pub struct Simulator {
    protocol: Protocol,
    recovery_cfg: RecoveryConfig,
    kernel: Kernel<Ev>,
    rng: RngSet,
    medium: Medium,
    mobility: Mobility,
    nodes: Vec<Node>,
    traffic: TrafficState,
    pub metrics: Metrics,
    trace: Vec<String>,
    collect_trace: bool,
    duration: SimTime,
    /// Destinations of flows per source, for recovery-time stamping.
    flow_dests_by_src: BTreeMap<NodeId, BTreeSet<NodeId>>,
    initial_layout: Vec<Position>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Simulator {
        cfg.validate().expect("invalid simulation config");
        let mut rng = RngSet::new(cfg.seed);

        let (mobility, rwp_arrivals) = match &cfg.topology {
            TopologyConfig::Static(pos) => (Mobility::fixed(pos.clone()), Vec::new()),
            TopologyConfig::DualChain { intermediates_per_path } => {
                let pos = dual_chain_layout(*intermediates_per_path);
                (Mobility::fixed(pos), Vec::new())
            }
            TopologyConfig::Rwp { cfg: rwp, nodes } => {
                let (m, arrivals) = Mobility::rwp_init(*rwp, *nodes, &mut rng);
                (m, arrivals)
            }
        };
        let n_nodes = mobility.node_count();
        let medium = Medium::new(cfg.medium);

        // A generated dual chain must exhibit exactly the chain adjacency
        // under the configured range, or the scenario is meaningless.
        if let TopologyConfig::DualChain { intermediates_per_path: p } = &cfg.topology {
            let expected: BTreeSet<(NodeId, NodeId)> = dual_chain_expected_links(*p)
                .into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            let mut actual = BTreeSet::new();
            for a in 0..n_nodes {
                for b in (a + 1)..n_nodes {
                    if medium.link_up(a, b, &mobility, SimTime::ZERO) {
                        actual.insert((a, b));
                    }
                }
            }
            assert_eq!(actual, expected, "dual-chain layout violates its adjacency contract");
        }

        let nodes = (0..n_nodes)
            .map(|_| Node {
                olsr: OlsrState::new(cfg.olsr),
                mpolsr: MpolsrState::new(cfg.multipath),
                recovery: RecoveryState::default(),
            })
            .collect();

        let mut flow_dests_by_src: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for f in &cfg.flows {
            flow_dests_by_src.entry(f.src).or_default().insert(f.dst);
        }

        let initial_layout: Vec<Position> =
            (0..n_nodes).map(|n| mobility.position(n, SimTime::ZERO)).collect();

        let mut sim = Simulator {
            protocol: cfg.protocol,
            recovery_cfg: cfg.recovery,
            kernel: Kernel::new(),
            rng,
            medium,
            mobility,
            nodes,
            traffic: TrafficState::new(cfg.flows.clone()),
            metrics: Metrics::default(),
            trace: Vec::new(),
            collect_trace: cfg.collect_trace,
            duration: cfg.duration,
            flow_dests_by_src,
            initial_layout,
        };

        for n in 0..n_nodes {
            let hello = sim.nodes[n].olsr.cfg.hello_interval.micros();
            let tc = sim.nodes[n].olsr.cfg.tc_interval.micros();
            let h_off = SimTime::from_micros(sim.rng.stream(n, "hello_offset").below(hello));
            let t_off = SimTime::from_micros(sim.rng.stream(n, "tc_offset").below(tc));
            sim.kernel.schedule(h_off, Ev::HelloTimer(n));
            sim.kernel.schedule(t_off, Ev::TcTimer(n));
        }
        for (n, at) in rwp_arrivals.into_iter().enumerate() {
            sim.kernel.schedule(at, Ev::RwpArrive(n));
        }
        for (i, f) in sim.traffic.flows.clone().into_iter().enumerate() {
            sim.kernel.schedule(f.start, Ev::CbrEmit(i));
        }
        for f in &cfg.failures {
            sim.kernel.schedule(f.at, Ev::Fail(f.kind));
            if let Some(link) = f.watch {
                sim.metrics.watches.push(FailureWatch {
                    link,
                    t_f: f.at,
                    t_d: None,
                    t_r: BTreeMap::new(),
                });
            }
        }
        sim
    }

    pub fn clock(&self) -> SimTime {
        self.kernel.clock()
    }

    pub fn duration(&self) -> SimTime {
        self.duration
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_olsr(&self, n: NodeId) -> &OlsrState {
        &self.nodes[n].olsr
    }

    pub fn node_olsr_mut(&mut self, n: NodeId) -> &mut OlsrState {
        &mut self.nodes[n].olsr
    }

    pub fn node_mpolsr(&self, n: NodeId) -> &MpolsrState {
        &self.nodes[n].mpolsr
    }

    pub fn node_alive(&self, n: NodeId) -> bool {
        self.medium.alive(n)
    }

    pub fn position(&self, n: NodeId) -> Position {
        self.mobility.position(n, self.kernel.clock())
    }

    pub fn links_now(&self) -> Vec<(NodeId, NodeId)> {
        let now = self.kernel.clock();
        let mut out = Vec::new();
        for a in 0..self.nodes.len() {
            for b in (a + 1)..self.nodes.len() {
                if self.medium.link_up(a, b, &self.mobility, now) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn trace_lines(&self) -> &[String] {
        &self.trace
    }

    /// Process every event up to `t_end` (inclusive), leaving the clock there.
    pub fn step_until(&mut self, t_end: SimTime) {
        while let Some(ev) = self.kernel.next_before(t_end) {
            if self.collect_trace {
                let (kind, node, detail) = describe(&ev.kind);
                self.trace.push(trace_line(ev.time, ev.seq, kind, node, &detail));
            }
            self.dispatch(ev);
        }
    }

    /// Run to the configured duration and fold up the results.
    pub fn run(mut self) -> RunOutput {
        let end = self.duration;
        self.step_until(end);
        RunOutput {
            events_fired: self.kernel.fired_count(),
            in_flight_at_end: self.traffic.in_flight_count(),
            generated: self.metrics.data_generated,
            delivered: self.metrics.data_delivered,
            dropped: self.metrics.data_dropped(),
            layout: self.initial_layout,
            metrics: self.metrics,
            trace: self.trace,
        }
    }

    // ----- event dispatch --------------------------------------------------

    fn dispatch(&mut self, ev: Fired<Ev>) {
        match ev.kind {
            Ev::HelloTimer(n) => self.on_hello_timer(n),
            Ev::TcTimer(n) => self.on_tc_timer(n),
            Ev::TcEmit(n, msg) => self.on_tc_emit(n, msg),
            Ev::TcForward(n, msg) => self.on_tc_emit(n, msg),
            Ev::Deliver { from, to, frame } => self.on_deliver(from, to, frame),
            Ev::Expire(n) => self.on_expire(n),
            Ev::Fail(kind) => self.on_fail(kind),
            Ev::CbrEmit(flow) => self.on_cbr_emit(flow),
            Ev::RwpArrive(n) => self.on_rwp_arrive(n),
        }
    }

    fn on_hello_timer(&mut self, n: NodeId) {
        if !self.medium.alive(n) {
            return;
        }
        let now = self.kernel.clock();
        self.nodes[n].olsr.ensure_mprs(now);
        let msg = Rc::new(self.nodes[n].olsr.build_hello(n, now));
        self.metrics.control_tx += 1;
        self.broadcast(n, Payload::Hello(msg));
        let next = now + self.nodes[n].olsr.cfg.hello_interval;
        self.kernel.schedule(next, Ev::HelloTimer(n));
    }

    fn on_tc_timer(&mut self, n: NodeId) {
        if !self.medium.alive(n) {
            return;
        }
        let now = self.kernel.clock();
        if let Some(msg) = self.nodes[n].olsr.build_tc(n, now, false) {
            let jitter = {
                let max = self.nodes[n].olsr.cfg.max_jitter;
                self.rng.stream(n, "tc_jitter").jitter(max)
            };
            self.kernel.schedule(now + jitter, Ev::TcEmit(n, Rc::new(msg)));
        }
        let next = now + self.nodes[n].olsr.cfg.tc_interval;
        self.kernel.schedule(next, Ev::TcTimer(n));
    }

    fn on_tc_emit(&mut self, n: NodeId, msg: Rc<TcMsg>) {
        if !self.medium.alive(n) {
            return;
        }
        self.metrics.control_tx += 1;
        self.broadcast(n, Payload::Tc(msg));
    }

    fn on_expire(&mut self, n: NodeId) {
        self.nodes[n].olsr.pending_sweep = None;
        if !self.medium.alive(n) {
            return;
        }
        let now = self.kernel.clock();
        let (ch, lost_links) = self.nodes[n].olsr.sweep_expired(now);
        // Without link-layer feedback, a link tuple aging out is the
        // failure-detection point.
        if !self.nodes[n].olsr.cfg.lln_enabled {
            for lost in lost_links {
                self.scheme_on_detect(n, (n, lost), None);
            }
        }
        self.post_change(n, ch);
    }

    fn on_fail(&mut self, kind: FailureKind) {
        match kind {
            FailureKind::Node(n) => self.medium.fail_node(n),
            FailureKind::Link(a, b) => self.medium.fail_link(a, b),
        }
    }

    fn on_rwp_arrive(&mut self, n: NodeId) {
        let now = self.kernel.clock();
        if let Some(next) = self.mobility.on_arrival(n, now, &mut self.rng) {
            self.kernel.schedule(next, Ev::RwpArrive(n));
        }
    }

    fn on_cbr_emit(&mut self, flow: usize) {
        let now = self.kernel.clock();
        let f = self.traffic.flows[flow];
        if now > f.stop {
            return;
        }
        if self.medium.alive(f.src) {
            let mut pkt = self.traffic.emit(flow, now);
            self.metrics.data_generated += 1;
            match self.protocol {
                Protocol::Olsr => self.forward_data_olsr(f.src, pkt),
                Protocol::MpOlsr => {
                    let route = {
                        let node = &mut self.nodes[f.src];
                        node.mpolsr.select_route(f.src, f.dst, &node.olsr, now)
                    };
                    match route {
                        Some(r) => {
                            pkt.route = Some(r);
                            self.forward_data_mp(f.src, pkt);
                        }
                        None => self.drop_packet(pkt, f.src, DropReason::NoRoute, None),
                    }
                }
            }
        }
        let next = now + f.interval;
        if next <= f.stop {
            self.kernel.schedule(next, Ev::CbrEmit(flow));
        }
    }

    fn on_deliver(&mut self, from: NodeId, to: NodeId, frame: Payload) {
        if !self.medium.delivery_allowed(from, to) {
            // Mid-flight failure. Broadcast frames vanish; a unicast looks
            // like a transmission failure to its (still alive) sender.
            match frame {
                Payload::Hello(_) | Payload::Tc(_) => {}
                unicast => {
                    if self.medium.alive(from) {
                        self.on_unicast_failed(from, to, unicast);
                    } else if let Payload::Data(pkt) = unicast {
                        // The holder died with the packet in flight.
                        self.drop_packet(*pkt, from, DropReason::TxFailure, None);
                    } else if let Payload::Dr(env) = unicast {
                        self.drop_packet(env.packet, from, DropReason::RecoveryFailed, None);
                    }
                }
            }
            return;
        }
        match frame {
            Payload::Hello(msg) => {
                let ch = self.nodes[to].olsr.apply_hello(to, from, &msg, self.kernel.clock());
                self.post_change(to, ch);
            }
            Payload::Tc(msg) => self.on_tc_received(to, from, msg),
            Payload::Data(mut pkt) => {
                pkt.traversed.push(to);
                self.on_data_at(to, *pkt);
            }
            Payload::Rerr(notif) => self.on_rerr_at(to, *notif),
            Payload::Dr(env) => self.on_dr_at(to, *env),
        }
    }

    fn on_tc_received(&mut self, me: NodeId, from: NodeId, msg: Rc<TcMsg>) {
        let now = self.kernel.clock();
        if msg.originator == me {
            return;
        }
        if !self.nodes[me].olsr.is_sym_neighbor(from, now) {
            return;
        }
        // Relay duty: the sender picked this node as MPR.
        let relay_allowed = self.nodes[me].olsr.is_selector(from, now) && msg.ttl > 1;
        let (process, forward) =
            self.nodes[me].olsr.dup_check(msg.originator, msg.seq, relay_allowed, now);
        if process {
            if let Some(ch) = self.nodes[me].olsr.apply_tc(&msg, now) {
                self.post_change(me, ch);
            }
        }
        if forward {
            let fwd = TcMsg { ttl: msg.ttl - 1, hops: msg.hops + 1, ..(*msg).clone() };
            let jitter = {
                let max = self.nodes[me].olsr.cfg.max_jitter;
                self.rng.stream(me, "tc_fwd_jitter").jitter(max)
            };
            self.kernel.schedule(now + jitter, Ev::TcForward(me, Rc::new(fwd)));
        }
    }

    // ----- data plane ------------------------------------------------------

    fn on_data_at(&mut self, me: NodeId, pkt: DataPacket) {
        let now = self.kernel.clock();
        if me == pkt.dst {
            self.metrics.record_delivery(pkt.emit_time, now);
            self.traffic.settle(pkt.id);
            return;
        }
        match self.protocol {
            Protocol::Olsr => self.forward_data_olsr(me, pkt),
            Protocol::MpOlsr => self.forward_data_mp(me, pkt),
        }
    }

    fn forward_data_olsr(&mut self, me: NodeId, mut pkt: DataPacket) {
        if pkt.ttl <= 1 {
            self.drop_packet(pkt, me, DropReason::TtlExpired, None);
            return;
        }
        pkt.ttl -= 1;
        let now = self.kernel.clock();
        self.nodes[me].olsr.ensure_routes(me, now);
        match self.nodes[me].olsr.route_to(pkt.dst) {
            Some((next, _)) => self.unicast_or_fail(me, next, Payload::Data(Box::new(pkt))),
            None => self.drop_packet(pkt, me, DropReason::NoRoute, None),
        }
    }

    fn forward_data_mp(&mut self, me: NodeId, pkt: DataPacket) {
        let now = self.kernel.clock();
        let route = pkt.route.as_ref().expect("source-routed packet without route");
        assert_eq!(route.hops[route.cursor], me, "malformed source route");
        let next = route.next_hop().expect("route already at destination");
        if self.nodes[me].olsr.is_usable_neighbor(next, now) {
            let mut fwd = pkt;
            fwd.route.as_mut().unwrap().cursor += 1;
            self.unicast_or_fail(me, next, Payload::Data(Box::new(fwd)));
        } else {
            // Reachability check failed before transmission.
            self.scheme_on_detect(me, (me, next), Some(&pkt));
            self.mp_route_recovery(me, next, pkt);
        }
    }

    /// Intermediate-node recovery: recompute the route tail from here,
    /// keeping the whole journey loop-free. Failing that, the packet is
    /// dropped unless data re-emission intercepts it.
    fn mp_route_recovery(&mut self, me: NodeId, dead_next: NodeId, mut pkt: DataPacket) {
        let now = self.kernel.clock();
        let recovered = recover_route(me, &pkt.traversed, pkt.dst, &self.nodes[me].olsr, now);
        match recovered {
            Some(hops) => {
                let cursor = pkt.traversed.len() - 1;
                pkt.route = Some(SourceRoute { hops, cursor });
                self.forward_data_mp(me, pkt);
            }
            None if self.recovery_cfg.scheme == Scheme::Dr => {
                self.dr_on_failure(me, dead_next, pkt);
            }
            None => self.drop_packet(pkt, me, DropReason::RecoveryFailed, Some((me, dead_next))),
        }
    }

    // ----- transmission ----------------------------------------------------

    fn broadcast(&mut self, sender: NodeId, frame: Payload) {
        let now = self.kernel.clock();
        let delay = self.medium.cfg.per_hop_delay;
        let loss = self.medium.cfg.loss_probability;
        for to in self.medium.neighbors_in_range(sender, &self.mobility, now) {
            if loss > 0.0 && self.rng.stream(sender, "frame_loss").next_f64() < loss {
                continue;
            }
            self.kernel.schedule(now + delay, Ev::Deliver { from: sender, to, frame: frame.clone() });
        }
    }

    /// Unicast with synchronous failure semantics: an unreachable receiver
    /// is reported back to the sender immediately, like a missing link-layer
    /// acknowledgment.
    fn unicast_or_fail(&mut self, sender: NodeId, to: NodeId, frame: Payload) {
        let now = self.kernel.clock();
        let delay = self.medium.cfg.per_hop_delay;
        let loss = self.medium.cfg.loss_probability;
        if !self.medium.link_up(sender, to, &self.mobility, now)
            || (loss > 0.0 && self.rng.stream(sender, "frame_loss").next_f64() < loss)
        {
            self.on_unicast_failed(sender, to, frame);
            return;
        }
        self.kernel.schedule(now + delay, Ev::Deliver { from: sender, to, frame });
    }

    /// Every failed unicast lands here: link-layer notification (when
    /// enabled), then per-payload handling.
    fn on_unicast_failed(&mut self, from: NodeId, to: NodeId, frame: Payload) {
        let now = self.kernel.clock();
        let lln = self.nodes[from].olsr.cfg.lln_enabled;
        if lln {
            let ch = self.nodes[from].olsr.lln_notify(to, now);
            self.post_change(from, ch);
        }
        match frame {
            Payload::Data(pkt) => {
                let pkt = *pkt;
                if !lln {
                    // No feedback from the link layer: the packet is simply
                    // gone; recovery waits for tuple expiry.
                    self.drop_packet(pkt, from, DropReason::TxFailure, Some((from, to)));
                    return;
                }
                self.scheme_on_detect(from, (from, to), Some(&pkt));
                match self.protocol {
                    Protocol::Olsr => {
                        self.drop_packet(pkt, from, DropReason::TxFailure, Some((from, to)))
                    }
                    Protocol::MpOlsr => self.mp_route_recovery(from, to, pkt),
                }
            }
            Payload::Rerr(_) => {
                // Notification lost; the source falls back to the slow path.
            }
            Payload::Dr(env) => {
                // Reverse hop also broken: the detour dies with the packet.
                self.drop_packet(env.packet, from, DropReason::RecoveryFailed, Some((from, to)));
            }
            Payload::Hello(_) | Payload::Tc(_) => {
                unreachable!("broadcast frames have no unicast failure path")
            }
        }
    }

    fn drop_packet(&mut self, pkt: DataPacket, at: NodeId, reason: DropReason, failed_link: Option<(NodeId, NodeId)>) {
        let now = self.kernel.clock();
        self.traffic.settle(pkt.id);
        self.metrics.record_drop(at, reason, now);
        if let Some((a, b)) = failed_link {
            self.metrics.note_drop_on_link(a, b, now);
        }
    }

    // ----- recovery schemes --------------------------------------------------

    /// Invoked at every failure-detection point (link-layer notification,
    /// reachability check, or tuple expiry when notifications are off).
    fn scheme_on_detect(&mut self, detector: NodeId, broken: (NodeId, NodeId), pkt: Option<&DataPacket>) {
        let now = self.kernel.clock();
        let gap = self.recovery_cfg.fast_tc_interval;
        match self.recovery_cfg.scheme {
            Scheme::None | Scheme::Dr => {}
            Scheme::Re => {
                // The traffic source is read off the failed data packet.
                let Some(pkt) = pkt else { return };
                let source = pkt.src;
                if detector == source {
                    let ch = self.nodes[detector].olsr.remove_link_info(broken.0, broken.1, now);
                    self.post_change(detector, ch);
                    return;
                }
                if !self.nodes[detector].recovery.allow_rerr(broken, source, now, gap) {
                    return;
                }
                let ch = self.nodes[detector].olsr.remove_link_info(broken.0, broken.1, now);
                self.post_change(detector, ch);
                let reverse = match self.protocol {
                    Protocol::MpOlsr => {
                        let mut hops = pkt.traversed.clone();
                        hops.reverse();
                        (hops.len() >= 2).then(|| SourceRoute::new(hops))
                    }
                    Protocol::Olsr => None,
                };
                let notif = RerrNotif { broken, detector, target: source, reverse };
                self.send_rerr(detector, notif);
            }
            Scheme::Ftc => {
                if !self.nodes[detector].recovery.allow_fast_tc(broken, now, gap) {
                    return;
                }
                let lost = if broken.0 == detector { broken.1 } else { broken.0 };
                self.nodes[detector].olsr.purge_selector(lost, now);
                let msg = self.nodes[detector]
                    .olsr
                    .build_tc(detector, now, true)
                    .expect("fast TC is never suppressed");
                // Emitted immediately: the origin jitter is deliberately
                // skipped; relays still jitter as usual.
                self.kernel.schedule(now, Ev::TcEmit(detector, Rc::new(msg)));
            }
        }
    }

    /// Forward a route-error notification one hop toward its target.
    fn send_rerr(&mut self, at: NodeId, notif: RerrNotif) {
        let next = match &notif.reverse {
            Some(route) => route.next_hop(),
            None => {
                let now = self.kernel.clock();
                self.nodes[at].olsr.ensure_routes(at, now);
                self.nodes[at].olsr.route_to(notif.target).map(|(n, _)| n)
            }
        };
        let Some(next) = next else {
            return; // no route back: notification silently dropped
        };
        let mut fwd = notif;
        if let Some(route) = &mut fwd.reverse {
            route.cursor += 1;
        }
        self.metrics.control_tx += 1;
        self.unicast_or_fail(at, next, Payload::Rerr(Box::new(fwd)));
    }

    fn on_rerr_at(&mut self, me: NodeId, notif: RerrNotif) {
        let now = self.kernel.clock();
        let ch = self.nodes[me].olsr.remove_link_info(notif.broken.0, notif.broken.1, now);
        self.post_change(me, ch);
        if me != notif.target {
            self.send_rerr(me, notif);
        }
    }

    /// Standard recovery found nothing: ship the packet back to its source
    /// along the reversed traversed prefix, carrying the broken-link record.
    fn dr_on_failure(&mut self, detector: NodeId, dead_next: NodeId, pkt: DataPacket) {
        let now = self.kernel.clock();
        // The packet is dropped from the detector's forwarding perspective
        // (it stamps the failure timeline) even though it survives in the
        // envelope and is not counted lost.
        self.metrics.note_drop_on_link(detector, dead_next, now);
        if pkt.traversed.len() < 2 {
            // The detector is the source; there is no reverse path to ride.
            self.drop_packet(pkt, detector, DropReason::RecoveryFailed, Some((detector, dead_next)));
            return;
        }
        let mut hops = pkt.traversed.clone();
        hops.reverse();
        let env = DrEnvelope {
            packet: pkt,
            broken: (detector, dead_next),
            reverse: SourceRoute::new(hops),
        };
        self.forward_dr(detector, env);
    }

    fn forward_dr(&mut self, at: NodeId, env: DrEnvelope) {
        let next = env.reverse.next_hop().expect("reverse route exhausted before source");
        let mut fwd = env;
        fwd.reverse.cursor += 1;
        // Data plane: deliberately not counted as control traffic.
        self.unicast_or_fail(at, next, Payload::Dr(Box::new(fwd)));
    }

    fn on_dr_at(&mut self, me: NodeId, env: DrEnvelope) {
        let now = self.kernel.clock();
        debug_assert_eq!(env.reverse.hops[env.reverse.cursor], me);
        if !env.reverse.at_destination() {
            self.forward_dr(me, env);
            return;
        }
        // At the original source: fold the failure into the topology view,
        // recompute, and send the packet out again on a fresh route. The
        // original emission timestamp survives so the delay shows the detour.
        let ch = self.nodes[me].olsr.remove_link_info(env.broken.0, env.broken.1, now);
        self.post_change(me, ch);
        let mut pkt = env.packet;
        pkt.route = None;
        pkt.traversed = vec![me];
        pkt.ttl = DATA_TTL;
        let route = {
            let node = &mut self.nodes[me];
            node.mpolsr.select_route(me, pkt.dst, &node.olsr, now)
        };
        match route {
            Some(r) => {
                pkt.route = Some(r);
                self.forward_data_mp(me, pkt);
            }
            None => self.drop_packet(pkt, me, DropReason::NoRoute, None),
        }
    }

    // ----- recomputation cascade ---------------------------------------------

    /// Apply the downstream effects of repository changes: MPR selection and
    /// route recomputation go stale (recomputed on first use), watched
    /// failures get their recovery stamp checked, expiries get scheduled.
    fn post_change(&mut self, n: NodeId, ch: Changes) {
        let now = self.kernel.clock();
        if ch.neighborhood {
            self.nodes[n].olsr.mark_mprs_dirty();
        }
        if ch.any_view() {
            self.nodes[n].olsr.mark_view_changed();
            self.check_recovery_stamp(n, now);
        }
        self.ensure_expiry_scheduled(n);
    }

    /// Stamp the recovery time for watched failures: the first moment this
    /// source's computed route(s) toward its flow destinations no longer
    /// traverse the watched link.
    fn check_recovery_stamp(&mut self, n: NodeId, now: SimTime) {
        if self.metrics.watches.is_empty() {
            return;
        }
        let Some(dests) = self.flow_dests_by_src.get(&n).cloned() else {
            return;
        };
        let mut current: Vec<Vec<NodeId>> = Vec::new();
        match self.protocol {
            Protocol::Olsr => {
                self.nodes[n].olsr.ensure_routes(n, now);
                for &d in &dests {
                    if let Some(p) = self.nodes[n].olsr.path_to(d) {
                        current.push(p);
                    }
                }
            }
            Protocol::MpOlsr => {
                for &d in &dests {
                    let node = &mut self.nodes[n];
                    node.mpolsr.refresh(n, d, &node.olsr, now);
                    if let Some(set) = node.mpolsr.path_set(d) {
                        current.extend(set.paths.iter().cloned());
                    }
                }
            }
        }
        for w in &mut self.metrics.watches {
            if now >= w.t_f && !w.t_r.contains_key(&n) {
                let uses = current
                    .iter()
                    .any(|p| p.windows(2).any(|e| w.matches_link(e[0], e[1])));
                if !uses {
                    w.t_r.insert(n, now);
                }
            }
        }
    }

    fn ensure_expiry_scheduled(&mut self, n: NodeId) {
        let Some(deadline) = self.nodes[n].olsr.earliest_deadline() else {
            return;
        };
        let now = self.kernel.clock();
        let at = (deadline + SimTime::from_micros(1)).max(now);
        let pending = self.nodes[n].olsr.pending_sweep;
        if pending.map_or(true, |p| at < p) {
            self.kernel.schedule(at, Ev::Expire(n));
            self.nodes[n].olsr.pending_sweep = Some(at);
        }
    }
}

fn describe(ev: &Ev) -> (&'static str, NodeId, String) {
    match ev {
        Ev::HelloTimer(n) => ("hello_timer", *n, String::new()),
        Ev::TcTimer(n) => ("tc_timer", *n, String::new()),
        Ev::TcEmit(n, m) => ("tc_emit", *n, format!("seq={} ansn={} adv={:?} fast={}", m.seq, m.ansn, m.advertised, m.fast)),
        Ev::TcForward(n, m) => ("tc_fwd", *n, format!("orig={} seq={} ansn={}", m.originator, m.seq, m.ansn)),
        Ev::Deliver { from, to, frame } => {
            let d = match frame {
                Payload::Hello(h) => format!("hello from={} n={}", from, h.entries.len()),
                Payload::Tc(t) => format!("tc from={} orig={} seq={} ansn={} adv={:?}", from, t.originator, t.seq, t.ansn, t.advertised),
                Payload::Data(p) => format!("data from={} id={} flow={}", from, p.id, p.flow),
                Payload::Rerr(r) => format!("rerr from={} link={}-{} target={}", from, r.broken.0, r.broken.1, r.target),
                Payload::Dr(e) => format!("dr from={} id={} broken={}-{}", from, e.packet.id, e.broken.0, e.broken.1),
            };
            ("deliver", *to, d)
        }
        Ev::Expire(n) => ("expire", *n, String::new()),
        Ev::Fail(FailureKind::Node(n)) => ("fail", *n, "node".into()),
        Ev::Fail(FailureKind::Link(a, b)) => ("fail", *a, format!("link={}-{}", a, b)),
        Ev::CbrEmit(f) => ("cbr", *f, format!("flow={}", f)),
        Ev::RwpArrive(n) => ("rwp_arrive", *n, String::new()),
    }
}
