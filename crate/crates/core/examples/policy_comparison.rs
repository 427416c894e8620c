//! Satisfied fraction of the queue-driven policy versus the
//! average-quality baseline, no admission control, over a few seeds.
//!
//!     cargo run --release --example policy_comparison -- [gamma] [seeds] [arrivals]

use std::time::Instant;

use qoe_sim::{run, AdmissionMode, PolicyKind, ScenarioConfig, StopCondition};

fn main() -> qoe_sim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gamma: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(6.0);
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let arrivals: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);

    println!("gamma={gamma} arrivals={arrivals}");
    println!("seed  queue_driven  baseline  gap   overloaded_slots");
    let mut gaps = Vec::new();
    for seed in 1..=seeds {
        let base = ScenarioConfig {
            gamma,
            seed,
            admission: AdmissionMode::Off,
            stop: StopCondition::VideoArrivals(arrivals),
            ..ScenarioConfig::default()
        };
        let t = Instant::now();
        let ours = run(&base)?;
        let theirs = run(&ScenarioConfig {
            policy: PolicyKind::AvgQualityMax,
            ..base
        })?;
        let (a, b) = (ours.tally.satisfied_frac(), theirs.tally.satisfied_frac());
        gaps.push(a - b);
        println!(
            "{seed:>4}  {a:>12.3}  {b:>8.3}  {:+.3}  {} / {}  ({:.1}s)",
            a - b,
            ours.overloaded_slots,
            ours.slots,
            t.elapsed().as_secs_f64()
        );
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    println!("mean gap {mean:+.3}");
    Ok(())
}
