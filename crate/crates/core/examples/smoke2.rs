use olsrsim::scenario::{run_plan, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::Scheme;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    for proto in ["olsr", "mpolsr"] {
        for scheme in ["none", "re", "ftc", "dr"] {
            if proto == "olsr" && scheme == "dr" { continue; }
            let mut spec = ScenarioSpec::preset(2).unwrap();
            spec.protocol = Protocol::parse(proto).unwrap();
            spec.recovery.scheme = Scheme::parse(scheme).unwrap();
            spec.seeds = vec![1];
            // per n: mean latency over 6 tf, mean loss
            let mut per_n: Vec<(usize, f64, f64)> = vec![];
            for n in 2..=8usize {
                let mut lats = vec![]; let mut losses = vec![];
                for tf in 20..=25 {
                    let plan = olsrsim::scenario::RunPlan { seed: 1, t_f: Some(tf as f64), n: Some(n), speed: None };
                    let r = run_plan(&spec, &plan);
                    lats.extend(r.latencies.clone());
                    losses.push(r.loss_pct.unwrap_or(f64::NAN));
                }
                let ml = lats.iter().sum::<f64>() / lats.len().max(1) as f64;
                let mlo = losses.iter().sum::<f64>() / losses.len() as f64;
                per_n.push((n, (ml*1000.0).round()/1000.0, (mlo*100.0).round()/100.0));
            }
            println!("{proto:7} {scheme:5} (n, meanLat, meanLoss) = {per_n:?}");
        }
    }
    println!("elapsed: {:?}", t0.elapsed());
}
