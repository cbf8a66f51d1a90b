//! Browser bindings: run dual-chain failure scenarios, query the analytic
//! latency bounds, and step a mobile network for live rendering. Results
//! cross the boundary as JSON strings; the page does the drawing.

use olsrsim::scenario::{run_plan, RunPlan, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::{analytic_bounds, ProtocolConfig, Scheme, SimTime, Simulator};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Bounds {
    via_tc: (f64, f64),
    via_expiry: (f64, f64),
}

/// Latency intervals for the given timer settings, in seconds.
#[wasm_bindgen]
pub fn latency_bounds(hello_interval: f64, tc_interval: f64, neighb_hold: f64, max_jitter: f64) -> String {
    let cfg = ProtocolConfig {
        hello_interval: SimTime::from_secs_f64(hello_interval),
        tc_interval: SimTime::from_secs_f64(tc_interval),
        neighb_hold_time: SimTime::from_secs_f64(neighb_hold),
        max_jitter: SimTime::from_secs_f64(max_jitter),
        ..ProtocolConfig::default()
    };
    let (via_tc, via_expiry) = analytic_bounds(&cfg);
    serde_json::to_string(&Bounds { via_tc, via_expiry }).unwrap()
}

#[derive(Serialize)]
struct ChainRun {
    nodes: Vec<(f64, f64)>,
    chain_links: Vec<(usize, usize)>,
    failed_link: (usize, usize),
    source: usize,
    destination: usize,
    t_f: f64,
    t_d: Option<f64>,
    t_r: Option<f64>,
    latency: Option<f64>,
    loss_pct: Option<f64>,
    routing_load_pct: f64,
    avg_delay_s: Option<f64>,
    generated: u64,
    delivered: u64,
    dropped: u64,
}

/// One dual-chain failure run. `preset` 1 or 2; `n` is the failure depth
/// (preset 2 only); `t_f` <= 0 lets preset 1 draw its own failure time.
#[wasm_bindgen]
pub fn run_dual_chain(
    preset: u8,
    protocol: &str,
    recovery: &str,
    n: usize,
    t_f: f64,
    seed: u64,
) -> Result<String, JsError> {
    let mut spec = ScenarioSpec::preset(preset).map_err(|e| JsError::new(&e.to_string()))?;
    spec.protocol = Protocol::parse(protocol).ok_or_else(|| JsError::new("bad protocol"))?;
    spec.recovery.scheme = Scheme::parse(recovery).ok_or_else(|| JsError::new("bad recovery"))?;
    spec.seeds = vec![seed];
    if preset == 2 {
        spec.n = vec![n];
    }
    if t_f > 0.0 {
        spec.t_f = vec![t_f];
    }
    spec.validate().map_err(|e| JsError::new(&e.to_string()))?;
    let plan = spec.plans()[0];
    let cfg = spec.build(&plan);
    let watch = cfg.failures[0];
    let out = olsrsim::Simulator::new(cfg.clone()).run();
    let result = run_result_json(&spec, &plan, preset, watch.at.as_secs_f64(), &out);
    let _ = plan;
    Ok(result)
}

fn run_result_json(
    spec: &ScenarioSpec,
    plan: &RunPlan,
    preset: u8,
    t_f: f64,
    out: &olsrsim::RunOutput,
) -> String {
    let p = if preset == 1 { 3 } else { 9 };
    let dest = p + 1;
    let res = run_result_of(spec, plan);
    let watch = out.metrics.watches.first();
    let chain = ChainRun {
        nodes: out.layout.iter().map(|q| (q.x, q.y)).collect(),
        chain_links: olsrsim::mobility::dual_chain_expected_links(p),
        failed_link: watch.map(|w| w.link).unwrap_or((2, 3)),
        source: 0,
        destination: dest,
        t_f,
        t_d: watch.and_then(|w| w.t_d).map(|t| t.as_secs_f64()),
        t_r: watch.and_then(|w| w.t_r.get(&0).copied()).map(|t| t.as_secs_f64()),
        latency: watch.and_then(|w| w.latencies().first().map(|(_, d)| *d)),
        loss_pct: res.loss_pct,
        routing_load_pct: res.routing_load_pct,
        avg_delay_s: res.avg_delay_s,
        generated: out.generated,
        delivered: out.delivered,
        dropped: out.dropped,
    };
    serde_json::to_string(&chain).unwrap()
}

fn run_result_of(spec: &ScenarioSpec, plan: &RunPlan) -> olsrsim::RunResult {
    run_plan(spec, plan)
}

#[derive(Serialize)]
struct MobileFrame {
    t: f64,
    positions: Vec<(f64, f64)>,
    links: Vec<(usize, usize)>,
    generated: u64,
    delivered: u64,
    dropped: u64,
    control_tx: u64,
    loss_pct: f64,
    routing_load_pct: f64,
}

/// A live mobile-network session that the page steps frame by frame.
#[wasm_bindgen]
pub struct MobileSession {
    sim: Simulator,
}

#[wasm_bindgen]
impl MobileSession {
    /// 50 random-waypoint nodes at a fixed speed with ten CBR flows.
    #[wasm_bindgen(constructor)]
    pub fn new(protocol: &str, recovery: &str, speed: f64, seed: u64) -> Result<MobileSession, JsError> {
        let mut spec = ScenarioSpec::preset(3).map_err(|e| JsError::new(&e.to_string()))?;
        spec.protocol = Protocol::parse(protocol).ok_or_else(|| JsError::new("bad protocol"))?;
        spec.recovery.scheme = Scheme::parse(recovery).ok_or_else(|| JsError::new("bad recovery"))?;
        spec.seeds = vec![seed];
        spec.speeds = vec![speed];
        spec.validate().map_err(|e| JsError::new(&e.to_string()))?;
        let plan = spec.plans()[0];
        let sim = Simulator::new(spec.build(&plan));
        Ok(MobileSession { sim })
    }

    /// Advance simulated time by `dt` seconds and return the current frame.
    pub fn step(&mut self, dt: f64) -> String {
        let target = (self.sim.clock() + SimTime::from_secs_f64(dt)).min(self.sim.duration());
        self.sim.step_until(target);
        let n = self.sim.node_count();
        let frame = MobileFrame {
            t: self.sim.clock().as_secs_f64(),
            positions: (0..n)
                .map(|i| {
                    let p = self.sim.position(i);
                    (p.x, p.y)
                })
                .collect(),
            links: self.sim.links_now(),
            generated: self.sim.metrics.data_generated,
            delivered: self.sim.metrics.data_delivered,
            dropped: self.sim.metrics.data_dropped(),
            control_tx: self.sim.metrics.control_tx,
            loss_pct: self.sim.metrics.packet_loss_rate().0,
            routing_load_pct: self.sim.metrics.routing_load(),
        };
        serde_json::to_string(&frame).unwrap()
    }

    pub fn done(&self) -> bool {
        self.sim.clock() >= self.sim.duration()
    }
}
