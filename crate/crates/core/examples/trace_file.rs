//! Driving a run from a per-video rate-quality trace file instead of the
//! synthetic law.
//!
//!     cargo run --release --example trace_file

use std::collections::BTreeMap;

use qoe_sim::engine::RqConfig;
use qoe_sim::ratequality::{RateQualityParams, TraceDb};
use qoe_sim::{run, ScenarioConfig, StopCondition};

fn main() -> qoe_sim::Result<()> {
    // three videos with different complexity and a scene cut every 50 slots
    let mut videos = BTreeMap::new();
    for (id, alpha, beta) in [(0u64, 9.0, 2.0), (1, 12.0, -20.0), (2, 15.0, -42.0)] {
        let seq = (0..200)
            .map(|k| RateQualityParams {
                alpha,
                beta: beta + if (k / 50) % 2 == 0 { 0.0 } else { -4.0 },
            })
            .collect();
        videos.insert(id, seq);
    }
    let db = TraceDb::from_sequences(videos)?;
    let dir = std::env::temp_dir().join("qoe-sim-trace-example");
    std::fs::create_dir_all(&dir).map_err(|e| qoe_sim::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join("rq.csv");
    db.write(&path)?;
    println!("wrote {}", path.display());

    let cfg = ScenarioConfig {
        rq: RqConfig::TraceFile { path },
        stop: StopCondition::VideoArrivals(300),
        ..ScenarioConfig::default()
    };
    let r = run(&cfg)?;
    println!(
        "{} users, satisfied {:.3}, mean delivered quality {:.1}",
        r.tally.users,
        r.tally.satisfied_frac(),
        r.records.iter().filter_map(|u| u.mean_quality()).sum::<f64>() / r.records.len() as f64
    );
    Ok(())
}
