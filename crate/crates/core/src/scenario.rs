//! Scenario presets, config-file parsing, multi-seed batch execution and
//! CSV output.
//!
//! Three presets cover the study setups:
//!
//! 1. 8-node dual chain, 50 s, one CBR flow 0 -> 4, link (2,3) fails once
//!    between 15 s and 19 s.
//! 2. 20-node dual chain, 100 s, same flow toward node 10; the upper-chain
//!    node n+1 fails so the node n hops from the source is the detector,
//!    with the failure time swept over 20..25 s.
//! 3. 50 mobile nodes (random waypoint, 1000 m square, 250 m range), 200 s,
//!    ten 10-packet/s CBR flows between random distinct pairs; link breaks
//!    come from mobility alone.

use crate::graph::{Disjointness, MultipathCostConfig};
use crate::medium::MediumConfig;
use crate::mobility::RwpConfig;
use crate::olsr::ProtocolConfig;
use crate::recovery::{RecoveryConfig, Scheme};
use crate::rng::RngStream;
use crate::sim::{FailureKind, FailureSpec, Protocol, RunOutput, SimConfig, Simulator, TopologyConfig};
use crate::time::SimTime;
use crate::traffic::CbrFlow;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;

#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: key '{}': {}", self.line, self.key, self.msg)
        } else {
            write!(f, "key '{}': {}", self.key, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError { line, key: key.to_string(), msg: msg.into() }
}

/// Everything one batch needs: preset plus overrides.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub preset: u8,
    pub protocol: Protocol,
    pub recovery: RecoveryConfig,
    pub seeds: Vec<u64>,
    /// Failure times; empty means the preset default (drawn per seed for
    /// preset 1, the 20..25 sweep for preset 2).
    pub t_f: Vec<f64>,
    /// Failure depths for preset 2; empty means 2..=8.
    pub n: Vec<usize>,
    /// Node speeds for preset 3; empty means {1, 4, 6, 8, 10}.
    pub speeds: Vec<f64>,
    pub duration: f64,
    pub olsr: ProtocolConfig,
    pub medium: MediumConfig,
    pub multipath: MultipathCostConfig,
    pub traffic_start: f64,
    pub packet_size: u32,
    pub trace: bool,
}

impl ScenarioSpec {
    pub fn preset(p: u8) -> Result<ScenarioSpec, ConfigError> {
        let mut spec = ScenarioSpec {
            preset: p,
            protocol: Protocol::Olsr,
            recovery: RecoveryConfig::default(),
            seeds: vec![1],
            t_f: Vec::new(),
            n: Vec::new(),
            speeds: Vec::new(),
            duration: 0.0,
            olsr: ProtocolConfig::default(),
            medium: MediumConfig::default(),
            multipath: MultipathCostConfig::default(),
            traffic_start: 0.0,
            packet_size: 512,
            trace: false,
        };
        match p {
            1 => {
                spec.duration = 50.0;
                spec.traffic_start = 10.0;
                spec.medium.tx_range = 60.0;
            }
            2 => {
                spec.duration = 100.0;
                // Later start than preset 1: the 10-hop chains need the
                // first TC wave to settle before traffic is meaningful.
                spec.traffic_start = 15.0;
                spec.medium.tx_range = 60.0;
            }
            3 => {
                spec.duration = 200.0;
                spec.traffic_start = 15.0;
                spec.medium.tx_range = 250.0;
            }
            _ => return Err(err(0, "preset", "preset must be 1, 2 or 3")),
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.recovery.scheme == Scheme::Dr && self.protocol == Protocol::Olsr {
            return Err(err(0, "recovery", "scheme dr is defined only for protocol mpolsr"));
        }
        if self.seeds.is_empty() {
            return Err(err(0, "seeds", "at least one seed required"));
        }
        self.olsr.validate().map_err(|m| err(0, "olsr", m))?;
        self.medium.validate().map_err(|m| err(0, "topology", m))?;
        self.multipath.validate().map_err(|m| err(0, "mpolsr", m))?;
        match self.preset {
            1 => {
                for &t in &self.t_f {
                    if !(15.0..=19.0).contains(&t) {
                        return Err(err(0, "tf", format!("preset 1 failure time must lie in [15, 19], got {t}")));
                    }
                }
                if !self.n.is_empty() {
                    return Err(err(0, "n", "failure depth applies to preset 2 only"));
                }
            }
            2 => {
                for &t in &self.t_f {
                    if !(20.0..=25.0).contains(&t) {
                        return Err(err(0, "tf", format!("preset 2 failure time must lie in [20, 25], got {t}")));
                    }
                }
                for &n in self.n_values().iter() {
                    if !(2..=8).contains(&n) {
                        return Err(err(0, "n", format!("failure depth must lie in 2..8, got {n}")));
                    }
                }
            }
            3 => {
                if !self.t_f.is_empty() {
                    return Err(err(0, "tf", "preset 3 has no injected failures"));
                }
                for &v in &self.speeds {
                    if v <= 0.0 {
                        return Err(err(0, "speed", "speeds must be positive"));
                    }
                }
            }
            _ => return Err(err(0, "preset", "preset must be 1, 2 or 3")),
        }
        Ok(())
    }

    fn n_values(&self) -> Vec<usize> {
        if self.preset != 2 {
            return vec![];
        }
        if self.n.is_empty() {
            (2..=8).collect()
        } else {
            self.n.clone()
        }
    }

    fn tf_values(&self) -> Vec<Option<f64>> {
        match self.preset {
            1 => {
                if self.t_f.is_empty() {
                    vec![None] // drawn per seed
                } else {
                    self.t_f.iter().copied().map(Some).collect()
                }
            }
            2 => {
                let ts = if self.t_f.is_empty() {
                    (20..=25).map(|t| t as f64).collect()
                } else {
                    self.t_f.clone()
                };
                ts.into_iter().map(Some).collect()
            }
            _ => vec![None],
        }
    }

    fn speed_values(&self) -> Vec<Option<f64>> {
        if self.preset != 3 {
            return vec![None];
        }
        let vs = if self.speeds.is_empty() {
            vec![1.0, 4.0, 6.0, 8.0, 10.0]
        } else {
            self.speeds.clone()
        };
        vs.into_iter().map(Some).collect()
    }

    /// All (seed, t_f, n, speed) combinations this spec runs.
    pub fn plans(&self) -> Vec<RunPlan> {
        let n_values: Vec<Option<usize>> = if self.preset == 2 {
            self.n_values().into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for &seed in &self.seeds {
            for tf in self.tf_values() {
                for &n in &n_values {
                    for speed in self.speed_values() {
                        out.push(RunPlan { seed, t_f: tf, n, speed });
                    }
                }
            }
        }
        out
    }

    /// Concrete per-run configuration.
    pub fn build(&self, plan: &RunPlan) -> SimConfig {
        let duration = SimTime::from_secs_f64(self.duration);
        let start = SimTime::from_secs_f64(self.traffic_start);
        let recovery = self.recovery;
        let (topology, flows, failures) = match self.preset {
            1 => {
                let t_f = plan.t_f.unwrap_or_else(|| {
                    let mut s = RngStream::derive(plan.seed, 0, "scenario_tf");
                    s.uniform(15.0, 19.0)
                });
                let flow = CbrFlow::from_bit_rate(0, 4, self.packet_size, 100_000.0, start, duration);
                let fail = FailureSpec {
                    at: SimTime::from_secs_f64(t_f),
                    kind: FailureKind::Link(2, 3),
                    watch: Some((2, 3)),
                };
                (TopologyConfig::DualChain { intermediates_per_path: 3 }, vec![flow], vec![fail])
            }
            2 => {
                let n = plan.n.expect("preset 2 plan carries a failure depth");
                let t_f = plan.t_f.expect("preset 2 plan carries a failure time");
                let flow = CbrFlow::from_bit_rate(0, 10, self.packet_size, 100_000.0, start, duration);
                let fail = FailureSpec {
                    at: SimTime::from_secs_f64(t_f),
                    kind: FailureKind::Node(n + 1),
                    watch: Some((n, n + 1)),
                };
                (TopologyConfig::DualChain { intermediates_per_path: 9 }, vec![flow], vec![fail])
            }
            3 => {
                let v = plan.speed.expect("preset 3 plan carries a speed");
                let rwp = RwpConfig {
                    area_w: 1000.0,
                    area_h: 1000.0,
                    speed_min: v,
                    speed_max: v,
                    pause: SimTime::ZERO,
                };
                let mut s = RngStream::derive(plan.seed, 0, "scenario_flows");
                let mut pairs: Vec<(usize, usize)> = Vec::new();
                while pairs.len() < 10 {
                    let src = s.below(50) as usize;
                    let dst = s.below(50) as usize;
                    if src != dst && !pairs.contains(&(src, dst)) {
                        pairs.push((src, dst));
                    }
                }
                let flows = pairs
                    .into_iter()
                    .map(|(src, dst)| {
                        CbrFlow::from_packet_rate(src, dst, self.packet_size, 10.0, start, duration)
                    })
                    .collect();
                (TopologyConfig::Rwp { cfg: rwp, nodes: 50 }, flows, vec![])
            }
            _ => unreachable!("validated preset"),
        };
        SimConfig {
            protocol: self.protocol,
            olsr: self.olsr,
            medium: self.medium,
            multipath: self.multipath,
            recovery,
            topology,
            flows,
            failures,
            duration,
            seed: plan.seed,
            collect_trace: self.trace,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunPlan {
    pub seed: u64,
    pub t_f: Option<f64>,
    pub n: Option<usize>,
    pub speed: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub scenario: u8,
    pub protocol: Protocol,
    pub scheme: Scheme,
    pub plan: RunPlan,
    pub latencies: Vec<f64>,
    pub loss_pct: Option<f64>,
    pub routing_load_pct: f64,
    pub avg_delay_s: Option<f64>,
    pub control_tx: u64,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub layout: String,
}

fn summarize(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Some((min, mean, max))
}

/// Run one plan to completion.
pub fn run_plan(spec: &ScenarioSpec, plan: &RunPlan) -> RunResult {
    let cfg = spec.build(plan);
    let out: RunOutput = Simulator::new(cfg).run();
    let (loss, loss_ok) = out.metrics.packet_loss_rate();
    let (delay, delay_ok) = out.metrics.avg_delay();
    let layout = out
        .layout
        .iter()
        .map(|p| format!("{:.1}:{:.1}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(";");
    RunResult {
        scenario: spec.preset,
        protocol: spec.protocol,
        scheme: spec.recovery.scheme,
        plan: *plan,
        latencies: out.metrics.all_latencies(),
        loss_pct: loss_ok.then_some(loss),
        routing_load_pct: out.metrics.routing_load(),
        avg_delay_s: delay_ok.then_some(delay),
        control_tx: out.metrics.control_tx,
        generated: out.generated,
        delivered: out.delivered,
        dropped: out.dropped,
        layout,
    }
}

/// Execute every run of the spec. Runs are independent simulations and
/// execute on a small thread pool; results come back in plan order.
pub fn run_batch(spec: &ScenarioSpec) -> Result<Vec<RunResult>, ConfigError> {
    spec.validate()?;
    let plans = spec.plans();
    let results: Mutex<Vec<Option<RunResult>>> = Mutex::new(vec![None; plans.len()]);
    let next: Mutex<usize> = Mutex::new(0);
    let workers = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1);
    let failed: Mutex<Option<RunPlan>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(plans.len()) {
            scope.spawn(|| loop {
                let idx = {
                    let mut n = next.lock().unwrap();
                    if *n >= plans.len() {
                        return;
                    }
                    let i = *n;
                    *n += 1;
                    i
                };
                let plan = plans[idx];
                match std::panic::catch_unwind(|| run_plan(spec, &plan)) {
                    Ok(res) => results.lock().unwrap()[idx] = Some(res),
                    Err(_) => {
                        *failed.lock().unwrap() = Some(plan);
                        return;
                    }
                }
            });
        }
    });
    if let Some(plan) = failed.into_inner().unwrap() {
        return Err(err(0, "run", format!("run failed for {plan:?}")));
    }
    Ok(results.into_inner().unwrap().into_iter().map(Option::unwrap).collect())
}

// ----- CSV output -----------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn runs_csv(results: &[RunResult]) -> String {
    let mut out = String::from(
        "scenario,protocol,recovery,seed,t_f,n,speed,latency_min,latency_mean,latency_max,loss_pct,routing_load_pct,avg_delay_s\n",
    );
    for r in results {
        let lat = summarize(&r.latencies);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.protocol.as_str(),
            r.scheme.as_str(),
            r.plan.seed,
            fmt_opt(r.plan.t_f),
            r.plan.n.map(|n| n.to_string()).unwrap_or_default(),
            fmt_opt(r.plan.speed),
            fmt_opt(lat.map(|l| l.0)),
            fmt_opt(lat.map(|l| l.1)),
            fmt_opt(lat.map(|l| l.2)),
            fmt_opt(r.loss_pct),
            format!("{:.6}", r.routing_load_pct),
            fmt_opt(r.avg_delay_s),
        ));
    }
    out
}

/// Grouped by the independent variables: (scenario, protocol, recovery,
/// n, speed); failure times and seeds aggregate out.
pub fn summary_csv(results: &[RunResult]) -> String {
    let mut groups: BTreeMap<(u8, &str, &str, Option<usize>, String), Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        let key = (
            r.scenario,
            r.protocol.as_str(),
            r.scheme.as_str(),
            r.plan.n,
            r.plan.speed.map(|v| format!("{v:.6}")).unwrap_or_default(),
        );
        groups.entry(key).or_default().push(r);
    }
    let mut out = String::from(
        "scenario,protocol,recovery,n,speed,runs,latency_min,latency_mean,latency_max,loss_min,loss_mean,loss_max,load_min,load_mean,load_max,delay_min,delay_mean,delay_max\n",
    );
    for ((scenario, protocol, scheme, n, speed), rs) in groups {
        let lats: Vec<f64> = rs.iter().flat_map(|r| r.latencies.iter().copied()).collect();
        let losses: Vec<f64> = rs.iter().filter_map(|r| r.loss_pct).collect();
        let loads: Vec<f64> = rs.iter().map(|r| r.routing_load_pct).collect();
        let delays: Vec<f64> = rs.iter().filter_map(|r| r.avg_delay_s).collect();
        let cell = |s: Option<(f64, f64, f64)>| {
            (
                fmt_opt(s.map(|x| x.0)),
                fmt_opt(s.map(|x| x.1)),
                fmt_opt(s.map(|x| x.2)),
            )
        };
        let (a1, a2, a3) = cell(summarize(&lats));
        let (b1, b2, b3) = cell(summarize(&losses));
        let (c1, c2, c3) = cell(summarize(&loads));
        let (d1, d2, d3) = cell(summarize(&delays));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            scenario,
            protocol,
            scheme,
            n.map(|v| v.to_string()).unwrap_or_default(),
            speed,
            rs.len(),
            a1, a2, a3, b1, b2, b3, c1, c2, c3, d1, d2, d3,
        ));
    }
    out
}

pub fn write_results(results: &[RunResult], dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut runs = fs::File::create(dir.join("runs.csv"))?;
    runs.write_all(runs_csv(results).as_bytes())?;
    let mut summary = fs::File::create(dir.join("summary.csv"))?;
    summary.write_all(summary_csv(results).as_bytes())?;
    Ok(())
}

// ----- config file ----------------------------------------------------------

/// Plain-text `key=value` config with `[section]` headers. Keys before any
/// header belong to the run section.
pub fn parse_config(text: &str) -> Result<ScenarioSpec, ConfigError> {
    // First pass: find the preset so defaults exist before overrides apply.
    let mut preset: u8 = 1;
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() == "preset" {
                preset = v
                    .trim()
                    .parse()
                    .map_err(|_| err(idx + 1, "preset", "expected 1, 2 or 3"))?;
            }
        }
    }
    let mut spec = ScenarioSpec::preset(preset).map_err(|mut e| {
        e.line = 0;
        e
    })?;

    let mut section = "run".to_string();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            match section.as_str() {
                "run" | "olsr" | "mpolsr" | "recovery" | "topology" | "traffic" => {}
                other => return Err(err(lineno, other, "unknown section")),
            }
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(err(lineno, line, "expected key=value"));
        };
        let key = k.trim();
        let val = v.trim();
        apply_key(&mut spec, &section, key, val, lineno)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn strip_comment(raw: &str) -> &str {
    let no_comment = raw.split('#').next().unwrap_or("");
    no_comment.trim()
}

fn parse_f64(val: &str, key: &str, line: usize) -> Result<f64, ConfigError> {
    val.parse().map_err(|_| err(line, key, format!("expected a number, got '{val}'")))
}

fn parse_bool(val: &str, key: &str, line: usize) -> Result<bool, ConfigError> {
    match val {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(err(line, key, format!("expected a boolean, got '{val}'"))),
    }
}

/// `a..b` inclusive ranges or comma lists.
fn parse_seeds(val: &str, key: &str, line: usize) -> Result<Vec<u64>, ConfigError> {
    if let Some((a, b)) = val.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| err(line, key, "bad range start"))?;
        let hi: u64 = b.trim().parse().map_err(|_| err(line, key, "bad range end"))?;
        if hi < lo {
            return Err(err(line, key, "range end below start"));
        }
        return Ok((lo..=hi).collect());
    }
    val.split(',')
        .map(|s| s.trim().parse().map_err(|_| err(line, key, format!("bad seed '{s}'"))))
        .collect()
}

fn parse_f64_list(val: &str, key: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    val.split(',').map(|s| parse_f64(s.trim(), key, line)).collect()
}

fn apply_key(
    spec: &mut ScenarioSpec,
    section: &str,
    key: &str,
    val: &str,
    line: usize,
) -> Result<(), ConfigError> {
    let secs = |v: &str| -> Result<SimTime, ConfigError> {
        let f = parse_f64(v, key, line)?;
        if f < 0.0 {
            return Err(err(line, key, "must be non-negative"));
        }
        Ok(SimTime::from_secs_f64(f))
    };
    match (section, key) {
        ("run", "preset") => {} // consumed by the first pass
        ("run", "protocol") => {
            spec.protocol = Protocol::parse(val)
                .ok_or_else(|| err(line, key, format!("unknown protocol '{val}'")))?;
        }
        ("run", "recovery") | ("recovery", "scheme") => {
            spec.recovery.scheme = Scheme::parse(val)
                .ok_or_else(|| err(line, key, format!("unknown recovery scheme '{val}'")))?;
        }
        ("run", "seeds") => spec.seeds = parse_seeds(val, key, line)?,
        ("run", "tf") => spec.t_f = parse_f64_list(val, key, line)?,
        ("run", "n") => {
            spec.n = val
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| err(line, key, format!("bad depth '{s}'"))))
                .collect::<Result<_, _>>()?;
        }
        ("run", "speed") => spec.speeds = parse_f64_list(val, key, line)?,
        ("run", "duration") => spec.duration = parse_f64(val, key, line)?,
        ("run", "trace") => spec.trace = parse_bool(val, key, line)?,
        ("olsr", "hello_interval") => spec.olsr.hello_interval = secs(val)?,
        ("olsr", "tc_interval") => spec.olsr.tc_interval = secs(val)?,
        ("olsr", "neighb_hold_time") => spec.olsr.neighb_hold_time = secs(val)?,
        ("olsr", "top_hold_time") => spec.olsr.top_hold_time = secs(val)?,
        ("olsr", "max_jitter") => spec.olsr.max_jitter = secs(val)?,
        ("olsr", "lln_enabled") => spec.olsr.lln_enabled = parse_bool(val, key, line)?,
        ("olsr", "send_empty_tc") => spec.olsr.send_empty_tc = parse_bool(val, key, line)?,
        ("mpolsr", "k") => {
            spec.multipath.k = val.parse().map_err(|_| err(line, key, "expected an integer"))?;
        }
        ("mpolsr", "disjointness_mode") => {
            spec.multipath.disjointness = match val {
                "node-disjoint" => Disjointness::NodeDisjoint,
                "link-disjoint" => Disjointness::LinkDisjoint,
                _ => return Err(err(line, key, format!("unknown mode '{val}'"))),
            };
        }
        ("mpolsr", "node_penalty_factor") => spec.multipath.node_penalty_factor = parse_f64(val, key, line)?,
        ("mpolsr", "edge_penalty_factor") => spec.multipath.edge_penalty_factor = parse_f64(val, key, line)?,
        ("recovery", "fast_tc_interval") => spec.recovery.fast_tc_interval = secs(val)?,
        ("topology", "tx_range") => spec.medium.tx_range = parse_f64(val, key, line)?,
        ("topology", "per_hop_delay") => spec.medium.per_hop_delay = secs(val)?,
        ("topology", "loss_probability") => spec.medium.loss_probability = parse_f64(val, key, line)?,
        ("traffic", "packet_size") => {
            spec.packet_size = val.parse().map_err(|_| err(line, key, "expected an integer"))?;
        }
        ("traffic", "start") => spec.traffic_start = parse_f64(val, key, line)?,
        (_, k) => return Err(err(line, k, format!("unknown key in section [{section}]"))),
    }
    Ok(())
}
