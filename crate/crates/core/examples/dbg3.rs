use olsrsim::scenario::{RunPlan, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::{Scheme, Simulator};

fn main() {
    for scheme in ["none", "dr"] {
        let mut spec = ScenarioSpec::preset(3).unwrap();
        spec.protocol = Protocol::parse("mpolsr").unwrap();
        spec.recovery.scheme = Scheme::parse(scheme).unwrap();
        let mut agg: std::collections::BTreeMap<&str, u64> = Default::default();
        let mut gen = 0; let mut del = 0;
        for seed in 1..=3u64 {
            let plan = RunPlan { seed, t_f: None, n: None, speed: Some(8.0) };
            let out = Simulator::new(spec.build(&plan)).run();
            gen += out.generated; del += out.delivered;
            for (r, c) in &out.metrics.drops { *agg.entry(r.as_str()).or_insert(0) += c; }
        }
        println!("{scheme}: gen={gen} del={del} drops={agg:?}");
    }
}
