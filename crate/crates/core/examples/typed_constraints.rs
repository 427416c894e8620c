//! Users with known quality expectations: two types, per-type thresholds.
//!
//!     cargo run --release --example typed_constraints -- [gamma]

use qoe_sim::thresholdopt::TunerConfig;
use qoe_sim::{run, AdmissionMode, PolicyKind, ScenarioConfig, StopCondition};

fn main() -> qoe_sim::Result<()> {
    let gamma: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6.0);
    let base = ScenarioConfig {
        gamma,
        stop: StopCondition::VideoArrivals(2000),
        ..ScenarioConfig::case_two()
    };

    for (name, cfg) in [
        ("queue-driven", base.clone()),
        (
            "average-quality",
            ScenarioConfig {
                policy: PolicyKind::AvgQualityMax,
                ..base.clone()
            },
        ),
    ] {
        let r = run(&cfg)?;
        print!("{name:<16} satisfied {:.3}", r.tally.satisfied_frac());
        for (j, t) in r.type_tallies.iter().enumerate() {
            print!("  type {j}: {:.3} of {}", t.satisfied_frac(), t.users);
        }
        println!();
    }

    let tuned = ScenarioConfig {
        admission: AdmissionMode::AutoTune {
            tuner: TunerConfig::default(),
        },
        stop: StopCondition::ThresholdUpdates(60),
        ..base
    };
    let r = run(&tuned)?;
    println!("tuned thresholds {:?} after {} slots", r.final_thresholds, r.slots);
    for (j, t) in r.type_tallies.iter().enumerate() {
        println!("  type {j}: e = {:.3}, satisfied {:.3}", t.violated_frac(), t.satisfied_frac());
    }
    Ok(())
}
