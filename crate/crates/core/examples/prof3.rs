use olsrsim::scenario::{RunPlan, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::{Scheme, Simulator};
use std::time::Instant;

fn main() {
    let mut spec = ScenarioSpec::preset(3).unwrap();
    spec.protocol = Protocol::parse("mpolsr").unwrap();
    spec.recovery.scheme = Scheme::parse("none").unwrap();
    let plan = RunPlan { seed: 1, t_f: None, n: None, speed: Some(6.0) };
    let cfg = spec.build(&plan);
    let t0 = Instant::now();
    let out = Simulator::new(cfg).run();
    println!("full 200s run: {:?}  events={} gen={} del={} drop={}", t0.elapsed(), out.events_fired, out.generated, out.delivered, out.dropped);
}
