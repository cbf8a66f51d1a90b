use olsrsim::scenario::{run_plan, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::Scheme;

fn main() {
    for proto in ["olsr", "mpolsr"] {
        for scheme in ["none", "re", "ftc", "dr"] {
            if proto == "olsr" && scheme == "dr" { continue; }
            let mut spec = ScenarioSpec::preset(1).unwrap();
            spec.protocol = Protocol::parse(proto).unwrap();
            spec.recovery.scheme = Scheme::parse(scheme).unwrap();
            spec.seeds = vec![1, 2, 3, 4, 5];
            let mut lats = vec![];
            let mut losses = vec![];
            for plan in spec.plans() {
                let r = run_plan(&spec, &plan);
                lats.extend(r.latencies.clone());
                losses.push(r.loss_pct.unwrap_or(-1.0));
            }
            println!("{proto:7} {scheme:5} lat={:?}", lats.iter().map(|x| (x*1000.0).round()/1000.0).collect::<Vec<_>>());
            println!("              loss={:?}", losses.iter().map(|x| (x*100.0).round()/100.0).collect::<Vec<_>>());
        }
    }
}
