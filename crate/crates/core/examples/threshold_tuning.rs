//! Online tuning of the admission threshold.
//!
//!     cargo run --release --example threshold_tuning -- [gamma] [updates]

use qoe_sim::thresholdopt::TunerConfig;
use qoe_sim::{run, AdmissionMode, ScenarioConfig, StopCondition};

fn main() -> qoe_sim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gamma: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(6.0);
    let updates: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(120);

    let cfg = ScenarioConfig {
        gamma,
        admission: AdmissionMode::AutoTune {
            tuner: TunerConfig::default(),
        },
        stop: StopCondition::ThresholdUpdates(updates),
        ..ScenarioConfig::default()
    };
    let result = run(&cfg)?;
    for ev in result.thresholds.iter().filter(|e| e.n <= 12 || e.n % 20 == 0) {
        println!("n={:>4}  theta={:>7.3}  y={:+}  m={:>3}  step={:.3}", ev.n, ev.theta, ev.y, ev.m, ev.step);
    }
    let t = result.tally;
    println!(
        "final theta {:.2}; satisfied {:.3}, admitted {:.3}, admitted-but-violated {:.3} over {} users",
        result.final_thresholds[0],
        t.satisfied_frac(),
        t.admitted_frac(),
        t.violated_frac(),
        t.users
    );
    Ok(())
}
