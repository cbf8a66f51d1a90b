use olsrsim::scenario::{RunPlan, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::{Scheme, Simulator};

fn main() {
    let mut spec = ScenarioSpec::preset(3).unwrap();
    spec.protocol = Protocol::parse("mpolsr").unwrap();
    spec.recovery.scheme = Scheme::parse("none").unwrap();
    let plan = RunPlan { seed: 1, t_f: None, n: None, speed: Some(6.0) };
    let cfg = spec.build(&plan);
    let mut sim = Simulator::new(cfg);
    sim.step_until(olsrsim::SimTime::from_secs(30));
    println!("done");
}
