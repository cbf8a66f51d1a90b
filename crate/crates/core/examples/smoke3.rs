use olsrsim::scenario::{run_batch, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::Scheme;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(6);
    let t0 = Instant::now();
    println!("scheme  speed  loss%  load%  delay_s  ncm  delivered");
    for scheme in ["none", "re", "ftc", "dr"] {
        let mut spec = ScenarioSpec::preset(3).unwrap();
        spec.protocol = Protocol::parse("mpolsr").unwrap();
        spec.recovery.scheme = Scheme::parse(scheme).unwrap();
        spec.seeds = (1..=seeds).collect();
        spec.speeds = vec![1.0, 4.0, 6.0, 8.0];
        let results = run_batch(&spec).unwrap();
        for speed in [1.0, 4.0, 6.0, 8.0] {
            let rs: Vec<_> = results.iter().filter(|r| r.plan.speed == Some(speed)).collect();
            let n = rs.len() as f64;
            let loss = rs.iter().filter_map(|r| r.loss_pct).sum::<f64>() / n;
            let load = rs.iter().map(|r| r.routing_load_pct).sum::<f64>() / n;
            let delay = rs.iter().filter_map(|r| r.avg_delay_s).sum::<f64>() / n;
            let ncm = rs.iter().map(|r| r.control_tx).sum::<u64>() / rs.len() as u64;
            let del = rs.iter().map(|r| r.delivered).sum::<u64>() / rs.len() as u64;
            println!("{scheme:5} {speed:6.1} {loss:6.2} {load:6.2} {delay:8.4} {ncm:6} {del:6}");
        }
    }
    println!("elapsed: {:?}", t0.elapsed());
}
