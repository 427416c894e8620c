//! A seeded experiment sweep written to CSV.
//!
//!     cargo run --release --example gamma_sweep -- [out_dir]

use qoe_sim::experiment::{self, ExperimentSpec, ScenarioName};

fn main() -> qoe_sim::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into());
    let mut spec = ExperimentSpec::new(ScenarioName::Fig6b, vec![1, 2], out);
    spec.gammas = Some(vec![6.0, 9.0, 12.0]);
    spec.overrides = toml::from_str("stop = { until = \"video_arrivals\", count = 600 }").expect("valid toml");

    let files = experiment::run_experiment(&spec)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    let table = std::fs::read_to_string(spec.out.join("gamma_table.csv")).map_err(|e| qoe_sim::Error::Io {
        path: spec.out.join("gamma_table.csv"),
        source: e,
    })?;
    print!("{table}");
    Ok(())
}
