use olsrsim::scenario::{RunPlan, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::{Scheme, Simulator};

fn main() {
    let mut spec = ScenarioSpec::preset(2).unwrap();
    spec.protocol = Protocol::parse("olsr").unwrap();
    spec.recovery.scheme = Scheme::parse("re").unwrap();
    spec.trace = true;
    let plan = RunPlan { seed: 1, t_f: Some(20.0), n: Some(3), speed: None };
    let cfg = spec.build(&plan);
    let out = Simulator::new(cfg).run();
    // Follow one data packet that got stuck: find a ttl drop shortly after 20.05s,
    // then print every deliver line for a nearby packet id.
    // Packet ids: deliver lines carry id=; find ids seen >20 times.
    use std::collections::BTreeMap;
    let mut seen: BTreeMap<u64, Vec<String>> = BTreeMap::new();
    for l in out.trace.iter() {
        if l.contains("\tdeliver\t") && l.contains("data from=") {
            let id: u64 = l.split("id=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
            seen.entry(id).or_default().push(l.clone());
        }
    }
    for (id, lines) in &seen {
        if lines.len() > 12 {
            println!("packet {id}: {} hops", lines.len());
            for l in lines.iter().take(8) { println!("  {l}"); }
            break;
        }
    }
}
