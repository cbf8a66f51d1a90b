//! `sim` command-line entry point: scenario presets, config files, batch
//! execution, CSV output.

use olsrsim::scenario::{parse_config, run_batch, write_results, ScenarioSpec};
use olsrsim::sim::Protocol;
use olsrsim::Scheme;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage: sim --preset {1|2|3} [--protocol {olsr|mpolsr}] [--recovery {none|re|ftc|dr}]
           [--seeds A..B | --seeds A,B,...] [--tf T]... [--n N]... [--speed V]...
           [--config FILE] [--out DIR] [--trace]

Runs one batch of simulations and writes runs.csv and summary.csv to the
output directory (default: results/).";

fn fail(msg: &str) -> ExitCode {
    eprintln!("sim: {msg}");
    eprintln!("{USAGE}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") {
        println!("{USAGE}");
        return ExitCode::SUCCESS;
    }

    let mut config_path: Option<PathBuf> = None;
    let mut preset: Option<u8> = None;
    let mut protocol: Option<Protocol> = None;
    let mut recovery: Option<Scheme> = None;
    let mut seeds: Option<String> = None;
    let mut tf: Vec<f64> = Vec::new();
    let mut n: Vec<usize> = Vec::new();
    let mut speed: Vec<f64> = Vec::new();
    let mut out_dir = PathBuf::from("results");
    let mut trace = false;

    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut value = |flag: &str| -> Result<String, String> {
            it.next().cloned().ok_or_else(|| format!("{flag} needs a value"))
        };
        let r = match arg.as_str() {
            "--preset" => value("--preset").and_then(|v| {
                v.parse().map(|p| preset = Some(p)).map_err(|_| "bad preset".into())
            }),
            "--protocol" => value("--protocol").and_then(|v| {
                Protocol::parse(&v).map(|p| protocol = Some(p)).ok_or(format!("unknown protocol '{v}'"))
            }),
            "--recovery" => value("--recovery").and_then(|v| {
                Scheme::parse(&v).map(|s| recovery = Some(s)).ok_or(format!("unknown recovery '{v}'"))
            }),
            "--seeds" => value("--seeds").map(|v| seeds = Some(v)),
            "--tf" => value("--tf").and_then(|v| {
                v.parse().map(|x| tf.push(x)).map_err(|_| format!("bad --tf '{v}'"))
            }),
            "--n" => value("--n").and_then(|v| {
                v.parse().map(|x| n.push(x)).map_err(|_| format!("bad --n '{v}'"))
            }),
            "--speed" => value("--speed").and_then(|v| {
                v.parse().map(|x| speed.push(x)).map_err(|_| format!("bad --speed '{v}'"))
            }),
            "--config" => value("--config").map(|v| config_path = Some(PathBuf::from(v))),
            "--out" => value("--out").map(|v| out_dir = PathBuf::from(v)),
            "--trace" => {
                trace = true;
                Ok(())
            }
            other => Err(format!("unknown argument '{other}'")),
        };
        if let Err(msg) = r {
            return fail(&msg);
        }
    }

    let mut spec: ScenarioSpec = match (&config_path, preset) {
        (Some(path), _) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return fail(&format!("cannot read {}: {e}", path.display())),
            };
            match parse_config(&text) {
                Ok(s) => s,
                Err(e) => return fail(&format!("{}: {e}", path.display())),
            }
        }
        (None, Some(p)) => match ScenarioSpec::preset(p) {
            Ok(s) => s,
            Err(e) => return fail(&e.to_string()),
        },
        (None, None) => return fail("either --preset or --config is required"),
    };

    if let Some(p) = protocol {
        spec.protocol = p;
    }
    if let Some(s) = recovery {
        spec.recovery.scheme = s;
    }
    if let Some(raw) = seeds {
        match parse_seed_list(&raw) {
            Ok(list) => spec.seeds = list,
            Err(msg) => return fail(&msg),
        }
    }
    if !tf.is_empty() {
        spec.t_f = tf;
    }
    if !n.is_empty() {
        spec.n = n;
    }
    if !speed.is_empty() {
        spec.speeds = speed;
    }
    spec.trace = spec.trace || trace;

    if let Err(e) = spec.validate() {
        return fail(&e.to_string());
    }

    let results = match run_batch(&spec) {
        Ok(r) => r,
        Err(e) => return fail(&e.to_string()),
    };
    if let Err(e) = write_results(&results, &out_dir) {
        return fail(&format!("cannot write results to {}: {e}", out_dir.display()));
    }

    // Trace output is per run; rerun the first plan alone when asked.
    if spec.trace {
        let plan = spec.plans()[0];
        let cfg = spec.build(&plan);
        let out = olsrsim::Simulator::new(cfg).run();
        let path = out_dir.join("trace.tsv");
        if let Err(e) = std::fs::write(&path, out.trace.join("\n") + "\n") {
            return fail(&format!("cannot write trace: {e}"));
        }
        println!("trace (first run) -> {}", path.display());
    }

    println!(
        "{} runs -> {}/runs.csv, {}/summary.csv",
        results.len(),
        out_dir.display(),
        out_dir.display()
    );
    ExitCode::SUCCESS
}

fn parse_seed_list(raw: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = raw.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| "bad --seeds range".to_string())?;
        let hi: u64 = b.trim().parse().map_err(|_| "bad --seeds range".to_string())?;
        if hi < lo {
            return Err("--seeds range end below start".into());
        }
        return Ok((lo..=hi).collect());
    }
    raw.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad seed '{s}'")))
        .collect()
}
