use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qoe_sim::experiment::{self, ExperimentSpec, ScenarioName};
use qoe_sim::oracle::{self, OracleConfig};
use qoe_sim::{PolicyKind, ScenarioConfig};

#[derive(Parser)]
#[command(name = "qoe-sim", version, about = "QoE-constrained video streaming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    gamma: Option<f64>,
    /// queue_driven_case_i, queue_driven_case_ii or avg_quality_max
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config (TOML) and write its report
    Run {
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run an experiment spec (TOML) or a named scenario
    Sweep {
        /// Spec file; mutually exclusive with --scenario
        spec: Option<PathBuf>,
        #[arg(long, conflicts_with = "spec")]
        scenario: Option<String>,
        /// Comma-separated seeds for --scenario
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a scenario config or experiment spec without running it
    Validate { file: PathBuf },
    /// Compare the slot solver with the brute-force grid oracle
    Oracle {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 6.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn apply(spec: &mut ExperimentSpec, o: &Overrides) {
    if let Some(g) = o.gamma {
        spec.overrides.insert("gamma".into(), toml::Value::Float(g));
    }
    if let Some(p) = o.policy {
        spec.overrides.insert("policy".into(), toml::Value::String(p.label().into()));
    }
    if let Some(s) = o.seed {
        spec.seeds = vec![s];
    }
    if let Some(out) = &o.out {
        spec.out = out.clone();
    }
}

fn sweep(mut spec: ExperimentSpec, o: &Overrides) -> qoe_sim::Result<()> {
    apply(&mut spec, o);
    let results = experiment::run_points(&spec)?;
    let files = experiment::emit_report(&results, &spec.out)?;
    for run in results.successes() {
        let p = &results.points[run.point];
        println!(
            "{:<12} {:<20} gamma={:<5} seed={:<4} satisfied={:.3} admitted={:.3} e={:.3}",
            p.variant,
            p.config.policy.label(),
            p.config.gamma,
            run.seed,
            run.tally.satisfied_frac(),
            run.tally.admitted_frac(),
            run.tally.violated_frac()
        );
    }
    for f in &files {
        println!("wrote {}", f.display());
    }
    if results.failures() > 0 {
        return Err(qoe_sim::Error::Usage(format!("{} run(s) failed; see manifest.json", results.failures())));
    }
    Ok(())
}

fn validate(file: &PathBuf) -> qoe_sim::Result<String> {
    let text = std::fs::read_to_string(file).map_err(|e| qoe_sim::Error::Io {
        path: file.clone(),
        source: e,
    })?;
    let table: toml::Table = toml::from_str(&text).map_err(|source| qoe_sim::Error::Toml {
        path: file.clone(),
        source,
    })?;
    if table.contains_key("scenario") {
        let spec = ExperimentSpec::load(file)?;
        spec.validate()?;
        Ok(format!("experiment spec ok: {} point(s) x {} seed(s)", spec.points()?.len(), spec.seeds.len()))
    } else {
        experiment::load_scenario(file)?;
        Ok("scenario config ok".into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, overrides } => (|| {
            let base = match &config {
                Some(path) => experiment::load_scenario(path)?,
                None => ScenarioConfig::default(),
            };
            let mut spec = ExperimentSpec::new(ScenarioName::Custom, vec![base.seed], "results");
            spec.overrides = toml::Table::try_from(&base).map_err(|e| qoe_sim::Error::Config(e.to_string()))?;
            sweep(spec, &overrides)
        })(),
        Command::Sweep {
            spec,
            scenario,
            seeds,
            overrides,
        } => (|| {
            let spec = match (spec, scenario) {
                (Some(path), _) => ExperimentSpec::load(&path)?,
                (None, Some(name)) => ExperimentSpec::new(name.parse()?, seeds, "results"),
                (None, None) => return Err(qoe_sim::Error::Usage("give a spec file or --scenario".into())),
            };
            sweep(spec, &overrides)
        })(),
        Command::Validate { file } => validate(&file).map(|msg| println!("{msg}")),
        Command::Oracle {
            instances,
            seed,
            gamma,
            tolerance,
        } => {
            let report = oracle::run_suite(seed, instances, gamma, &OracleConfig::default(), tolerance);
            println!(
                "compared {} instances, {} disagreement(s), worst relative gap {:.3e}",
                report.compared(),
                report.failures(),
                report.worst_gap()
            );
            if report.passed() {
                Ok(())
            } else {
                Err(qoe_sim::Error::Usage("solver disagrees with the oracle".into()))
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
