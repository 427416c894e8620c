//! Named experiment scenarios, seeded batch execution and CSV reports.
//!
//! An [`ExperimentSpec`] names a scenario, overrides any [`ScenarioConfig`]
//! field and lists seeds. [`run_experiment`] expands it into points, runs
//! every (point, seed) pair on the rayon pool and [`emit_report`] writes
//! `per_user.csv`, `aggregate.csv`, `summary.csv`, `thresholds.csv`, a
//! `gamma_table.csv` for channel sweeps and `manifest.json`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::PolicyKind;
use crate::engine::{self, AdmissionMode, RunResult, ScenarioConfig, StopCondition, Tally};
use crate::error::{Error, Result};
use crate::metrics::{self, ConstraintSet};
use crate::thresholdopt::{TunerConfig, UpdateEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioName {
    /// Case I at gamma 12, both policies, first 100 users: eCDF curves.
    #[serde(rename = "fig5")]
    Fig5,
    /// Case I at gamma 6, fixed thresholds 0..=80: e(theta) and g(theta).
    #[serde(rename = "fig4-sweep")]
    Fig4Sweep,
    /// Case I at gamma 6, auto-tuned threshold trajectory.
    #[serde(rename = "fig6a")]
    Fig6a,
    /// Case I, gamma 6..=16, tuned admission / no admission / baseline.
    #[serde(rename = "fig6b")]
    Fig6b,
    /// Case II at gamma 6, grid of fixed threshold pairs.
    #[serde(rename = "fig7-grid")]
    Fig7Grid,
    /// Case II at gamma 6, auto-tuned threshold vector trajectory.
    #[serde(rename = "fig8-sweep")]
    Fig8Sweep,
    /// Case II, gamma 6..=16, tuned admission / no admission / baseline.
    #[serde(rename = "fig9")]
    Fig9,
    /// The overrides are the whole configuration.
    #[serde(rename = "custom")]
    Custom,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 8] = [
        ScenarioName::Fig5,
        ScenarioName::Fig4Sweep,
        ScenarioName::Fig6a,
        ScenarioName::Fig6b,
        ScenarioName::Fig7Grid,
        ScenarioName::Fig8Sweep,
        ScenarioName::Fig9,
        ScenarioName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Fig5 => "fig5",
            ScenarioName::Fig4Sweep => "fig4-sweep",
            ScenarioName::Fig6a => "fig6a",
            ScenarioName::Fig6b => "fig6b",
            ScenarioName::Fig7Grid => "fig7-grid",
            ScenarioName::Fig8Sweep => "fig8-sweep",
            ScenarioName::Fig9 => "fig9",
            ScenarioName::Custom => "custom",
        }
    }

    fn base(self) -> ScenarioConfig {
        match self {
            ScenarioName::Fig7Grid | ScenarioName::Fig8Sweep | ScenarioName::Fig9 => ScenarioConfig::case_two(),
            _ => ScenarioConfig::default(),
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioName,
    /// Partial [`ScenarioConfig`] merged over the scenario's base.
    #[serde(default)]
    pub overrides: toml::Table,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Channel scalings for the gamma sweeps.
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
    /// Thresholds for the fixed-threshold sweeps.
    #[serde(default)]
    pub thetas: Option<Vec<f64>>,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioName, seeds: Vec<u64>, out: impl Into<PathBuf>) -> Self {
        Self {
            scenario,
            overrides: toml::Table::new(),
            seeds,
            out: out.into(),
            gammas: None,
            thetas: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|source| Error::Toml {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must not be empty"));
        }
        if self.gammas.as_ref().is_some_and(|g| g.is_empty()) {
            return Err(Error::config("gammas must not be empty"));
        }
        if self.thetas.as_ref().is_some_and(|t| t.is_empty()) {
            return Err(Error::config("thetas must not be empty"));
        }
        for p in self.points()? {
            p.config.validate()?;
        }
        Ok(())
    }

    /// Scenario base with the overrides applied.
    pub fn base_config(&self) -> Result<ScenarioConfig> {
        apply_overrides(&self.scenario.base(), &self.overrides)
    }

    /// Expands the scenario into its run points (seed not yet applied).
    pub fn points(&self) -> Result<Vec<RunPoint>> {
        let base = self.base_config()?;
        let gammas = self
            .gammas
            .clone()
            .unwrap_or_else(|| (6..=16).map(f64::from).collect());
        let thetas = self
            .thetas
            .clone()
            .unwrap_or_else(|| (0..=16).map(|k| 5.0 * k as f64).collect());
        let tuned = AdmissionMode::AutoTune {
            tuner: TunerConfig::default(),
        };
        let point = |variant: &str, cfg: ScenarioConfig| RunPoint {
            variant: variant.to_string(),
            config: cfg,
        };
        let points = match self.scenario {
            ScenarioName::Custom => vec![point("custom", base)],
            ScenarioName::Fig5 => {
                let cfg = ScenarioConfig {
                    gamma: 12.0,
                    admission: AdmissionMode::Off,
                    stop: StopCondition::VideoArrivals(100),
                    warmup: 0,
                    ..base
                };
                let cfg = apply_overrides(&cfg, &self.overrides)?;
                vec![
                    point("proposed", cfg.clone()),
                    point(
                        "baseline",
                        ScenarioConfig {
                            policy: PolicyKind::AvgQualityMax,
                            ..cfg
                        },
                    ),
                ]
            }
            ScenarioName::Fig4Sweep => {
                let cfg = apply_overrides(&ScenarioConfig { gamma: 6.0, ..base }, &self.overrides)?;
                thetas
                    .iter()
                    .map(|&theta| {
                        point(
                            "fixed",
                            ScenarioConfig {
                                admission: AdmissionMode::Fixed { theta },
                                ..cfg.clone()
                            },
                        )
                    })
                    .collect()
            }
            ScenarioName::Fig6a | ScenarioName::Fig8Sweep => {
                let cfg = ScenarioConfig {
                    gamma: 6.0,
                    admission: tuned,
                    stop: StopCondition::ThresholdUpdates(400),
                    ..base
                };
                vec![point("proposed_ac", apply_overrides(&cfg, &self.overrides)?)]
            }
            ScenarioName::Fig6b | ScenarioName::Fig9 => {
                let ours = base.policy;
                let mut out = Vec::new();
                for &gamma in &gammas {
                    let cfg = ScenarioConfig { gamma, ..base.clone() };
                    out.push(point(
                        "proposed_ac",
                        ScenarioConfig {
                            policy: ours,
                            admission: tuned.clone(),
                            ..cfg.clone()
                        },
                    ));
                    out.push(point(
                        "proposed",
                        ScenarioConfig {
                            policy: ours,
                            admission: AdmissionMode::Off,
                            ..cfg.clone()
                        },
                    ));
                    out.push(point(
                        "baseline",
                        ScenarioConfig {
                            policy: PolicyKind::AvgQualityMax,
                            admission: AdmissionMode::Off,
                            ..cfg
                        },
                    ));
                }
                out
            }
            ScenarioName::Fig7Grid => {
                let cfg = apply_overrides(&ScenarioConfig { gamma: 6.0, ..base }, &self.overrides)?;
                let mut out = Vec::new();
                for &t1 in &thetas {
                    for &t2 in &thetas {
                        out.push(point(
                            "fixed",
                            ScenarioConfig {
                                admission: AdmissionMode::FixedVector { thetas: vec![t1, t2] },
                                ..cfg.clone()
                            },
                        ));
                    }
                }
                out
            }
        };
        Ok(points)
    }
}

/// Serializes `base`, merges `overrides` table-by-table and parses back.
pub fn apply_overrides(base: &ScenarioConfig, overrides: &toml::Table) -> Result<ScenarioConfig> {
    if overrides.is_empty() {
        return Ok(base.clone());
    }
    let mut table =
        toml::Table::try_from(base).map_err(|e| Error::config(format!("cannot serialize config: {e}")))?;
    merge(&mut table, overrides);
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::config(format!("bad override: {e}")))
}

fn merge(into: &mut toml::Table, from: &toml::Table) {
    for (k, v) in from {
        match (into.get_mut(k), v) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) if !is_tagged(src) => merge(dst, src),
            _ => {
                into.insert(k.clone(), v.clone());
            }
        }
    }
}

// tagged enums are replaced wholesale so a variant switch drops stale fields
fn is_tagged(t: &toml::Table) -> bool {
    ["mode", "case", "source", "until"].iter().any(|k| t.contains_key(*k))
}

/// Reads a [`ScenarioConfig`] from TOML; missing fields take defaults.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: ScenarioConfig = toml::from_str(&text).map_err(|source| Error::Toml {
        path: path.to_path_buf(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPoint {
    /// `proposed_ac`, `proposed`, `baseline`, `fixed` or `custom`.
    pub variant: String,
    pub config: ScenarioConfig,
}

impl RunPoint {
    pub fn theta(&self) -> Vec<f64> {
        match &self.config.admission {
            AdmissionMode::Fixed { theta } => vec![*theta],
            AdmissionMode::FixedVector { thetas } => thetas.clone(),
            _ => Vec::new(),
        }
    }
}

/// One per-user output row.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRow {
    pub user_id: u64,
    pub user_type: Option<usize>,
    pub arrival: u64,
    pub sojourn: u64,
    pub admitted: bool,
    pub satisfied: bool,
    pub mean_quality: Option<f64>,
    pub in_stats: bool,
    /// `ecdf2` at each report level; `None` for blocked users.
    pub ecdf: Vec<Option<f64>>,
}

/// What is kept of a run for reporting; traces are reduced to eCDF values.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_id: usize,
    pub point: usize,
    pub seed: u64,
    pub users: Vec<UserRow>,
    pub tally: Tally,
    pub type_tallies: Vec<Tally>,
    pub thresholds: Vec<UpdateEvent>,
    pub final_thresholds: Vec<f64>,
    pub slots: u64,
    pub overloaded_slots: u64,
    pub truncated: bool,
}

impl RunSummary {
    pub fn from_result(run_id: usize, point: usize, seed: u64, constraints: &ConstraintSet, r: &RunResult) -> Self {
        let levels = constraints.report_levels();
        let users = r
            .records
            .iter()
            .map(|u| UserRow {
                user_id: u.id,
                user_type: u.user_type,
                arrival: u.arrival,
                sojourn: u.sojourn,
                admitted: u.admitted,
                satisfied: u.satisfied,
                mean_quality: u.mean_quality(),
                in_stats: r.counted.contains(&u.id),
                ecdf: levels
                    .iter()
                    .map(|&x| u.trace.as_ref().map(|t| metrics::ecdf2(t, x)))
                    .collect(),
            })
            .collect();
        Self {
            run_id,
            point,
            seed,
            users,
            tally: r.tally,
            type_tallies: r.type_tallies.clone(),
            thresholds: r.thresholds.clone(),
            final_thresholds: r.final_thresholds.clone(),
            slots: r.slots,
            overloaded_slots: r.overloaded_slots,
            truncated: r.truncated,
        }
    }
}

#[derive(Debug)]
pub struct ExperimentResults {
    pub spec: ExperimentSpec,
    pub points: Vec<RunPoint>,
    /// One entry per (point, seed), point-major; `Err` holds the message.
    pub runs: Vec<(usize, u64, std::result::Result<RunSummary, String>)>,
}

impl ExperimentResults {
    pub fn successes(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter_map(|r| r.2.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.2.is_err()).count()
    }
}

/// Runs every (point, seed) pair. Individual run failures are recorded,
/// not propagated.
pub fn run_points(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let points = spec.points()?;
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .enumerate()
        .map(|(run_id, &(p, seed))| {
            let cfg = ScenarioConfig {
                seed,
                ..points[p].config.clone()
            };
            let out = engine::run(&cfg)
                .map(|r| RunSummary::from_result(run_id, p, seed, &cfg.constraints, &r))
                .map_err(|e| e.to_string());
            (p, seed, out)
        })
        .collect();
    Ok(ExperimentResults {
        spec: spec.clone(),
        points,
        runs,
    })
}

/// Runs the experiment and writes its report; returns the written files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let results = run_points(spec)?;
    emit_report(&results, &spec.out)
}

/// Mean and standard error of the mean; stderr is 0 for a single value.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn thetas_field(p: &RunPoint) -> String {
    p.theta()
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn level_label(x: f64) -> String {
    format!("ecdf@{x}")
}

/// Writes the report files into `dir`.
pub fn emit_report(results: &ExperimentResults, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let levels = results
        .points
        .first()
        .map(|p| p.config.constraints.report_levels())
        .unwrap_or_default();
    let types = results.points.first().map_or(0, |p| p.config.constraints.type_count());

    let path = dir.join("per_user.csv");
    let mut w = writer(&path)?;
    let mut header: Vec<String> = [
        "run_id",
        "seed",
        "user_id",
        "type",
        "arrival_slot",
        "T_u",
        "admitted",
        "satisfied",
        "mean_quality",
        "in_stats",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(levels.iter().map(|&x| level_label(x)));
    w.write_record(&header).map_err(|e| Error::csv(&path, e))?;
    for run in results.successes() {
        for u in &run.users {
            let mut rec = vec![
                run.run_id.to_string(),
                run.seed.to_string(),
                u.user_id.to_string(),
                opt(u.user_type),
                u.arrival.to_string(),
                u.sojourn.to_string(),
                (u.admitted as u8).to_string(),
                (u.satisfied as u8).to_string(),
                opt(u.mean_quality),
                (u.in_stats as u8).to_string(),
            ];
            rec.extend(u.ecdf.iter().map(|e| opt(*e)));
            w.write_record(&rec).map_err(|e| Error::csv(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = dir.join("aggregate.csv");
    let mut w = writer(&path)?;
    let mut header: Vec<String> = [
        "run_id",
        "seed",
        "scenario",
        "variant",
        "policy",
        "gamma",
        "theta",
        "satisfied_frac",
        "admitted_frac",
        "e_frac",
        "n_users",
        "stderr",
        "slots",
        "overloaded_slots",
        "truncated",
        "final_theta",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for j in 0..types {
        header.push(format!("satisfied_frac_{j}"));
        header.push(format!("e_frac_{j}"));
        header.push(format!("n_users_{j}"));
    }
    w.write_record(&header).map_err(|e| Error::csv(&path, e))?;
    for run in results.successes() {
        let p = &results.points[run.point];
        let t = run.tally;
        let mut rec = vec![
            run.run_id.to_string(),
            run.seed.to_string(),
            results.spec.scenario.to_string(),
            p.variant.clone(),
            p.config.policy.label().to_string(),
            p.config.gamma.to_string(),
            thetas_field(p),
            t.satisfied_frac().to_string(),
            t.admitted_frac().to_string(),
            t.violated_frac().to_string(),
            t.users.to_string(),
            binomial_stderr(t.satisfied_frac(), t.users).to_string(),
            run.slots.to_string(),
            run.overloaded_slots.to_string(),
            (run.truncated as u8).to_string(),
            run.final_thresholds
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ];
        for tt in run.type_tallies.iter().take(types) {
            rec.push(tt.satisfied_frac().to_string());
            rec.push(tt.violated_frac().to_string());
            rec.push(tt.users.to_string());
        }
        w.write_record(&rec).map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    // cross-seed summary per point
    let mut by_point: BTreeMap<usize, Vec<&RunSummary>> = BTreeMap::new();
    for run in results.successes() {
        by_point.entry(run.point).or_default().push(run);
    }
    let path = dir.join("summary.csv");
    let mut w = writer(&path)?;
    let mut header: Vec<String> = [
        "point",
        "variant",
        "policy",
        "gamma",
        "theta",
        "runs",
        "satisfied_mean",
        "satisfied_stderr",
        "admitted_mean",
        "admitted_stderr",
        "e_mean",
        "e_stderr",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for j in 0..types {
        header.push(format!("e_{j}_mean"));
        header.push(format!("e_{j}_stderr"));
    }
    w.write_record(&header).map_err(|e| Error::csv(&path, e))?;
    for (&k, runs) in &by_point {
        let p = &results.points[k];
        let col = |f: &dyn Fn(&RunSummary) -> f64| mean_stderr(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
        let s = col(&|r| r.tally.satisfied_frac());
        let a = col(&|r| r.tally.admitted_frac());
        let e = col(&|r| r.tally.violated_frac());
        let mut rec = vec![
            k.to_string(),
            p.variant.clone(),
            p.config.policy.label().to_string(),
            p.config.gamma.to_string(),
            thetas_field(p),
            runs.len().to_string(),
            s.0.to_string(),
            s.1.to_string(),
            a.0.to_string(),
            a.1.to_string(),
            e.0.to_string(),
            e.1.to_string(),
        ];
        for j in 0..types {
            let ej = col(&|r| r.type_tallies[j].violated_frac());
            rec.push(ej.0.to_string());
            rec.push(ej.1.to_string());
        }
        w.write_record(&rec).map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    if matches!(results.spec.scenario, ScenarioName::Fig6b | ScenarioName::Fig9) {
        written.push(write_gamma_table(results, &by_point, dir)?);
    }

    let path = dir.join("thresholds.csv");
    let mut w = writer(&path)?;
    w.write_record(["run_id", "seed", "component", "n", "theta", "y", "m", "step"])
        .map_err(|e| Error::csv(&path, e))?;
    for run in results.successes() {
        for ev in &run.thresholds {
            w.write_record([
                run.run_id.to_string(),
                run.seed.to_string(),
                ev.component.to_string(),
                ev.n.to_string(),
                ev.theta.to_string(),
                ev.y.to_string(),
                ev.m.to_string(),
                ev.step.to_string(),
            ])
            .map_err(|e| Error::csv(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = dir.join("manifest.json");
    let manifest = Manifest {
        scenario: results.spec.scenario.to_string(),
        seeds: results.spec.seeds.clone(),
        points: results
            .points
            .iter()
            .map(|p| ManifestPoint {
                variant: p.variant.clone(),
                policy: p.config.policy.label().to_string(),
                gamma: p.config.gamma,
                theta: p.theta(),
            })
            .collect(),
        runs: results
            .runs
            .iter()
            .enumerate()
            .map(|(run_id, (point, seed, r))| ManifestRun {
                run_id,
                point: *point,
                seed: *seed,
                status: if r.is_ok() { "ok" } else { "failed" }.to_string(),
                error: r.as_ref().err().cloned(),
            })
            .collect(),
        files: written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::usage(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

fn write_gamma_table(
    results: &ExperimentResults,
    by_point: &BTreeMap<usize, Vec<&RunSummary>>,
    dir: &Path,
) -> Result<PathBuf> {
    let variants = ["proposed_ac", "proposed", "baseline"];
    let mut rows: BTreeMap<u64, BTreeMap<&str, (f64, f64)>> = BTreeMap::new();
    for (&k, runs) in by_point {
        let p = &results.points[k];
        let fr: Vec<f64> = runs.iter().map(|r| r.tally.satisfied_frac()).collect();
        let v = variants.iter().find(|v| **v == p.variant).copied().unwrap_or("other");
        rows.entry(p.config.gamma.to_bits()).or_default().insert(v, mean_stderr(&fr));
    }
    let path = dir.join("gamma_table.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["gamma".to_string()];
    for v in variants {
        header.push(format!("{v}_mean"));
        header.push(format!("{v}_stderr"));
    }
    w.write_record(&header).map_err(|e| Error::csv(&path, e))?;
    let mut ordered: Vec<_> = rows.iter().map(|(g, m)| (f64::from_bits(*g), m)).collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (gamma, m) in ordered {
        let mut rec = vec![gamma.to_string()];
        for v in variants {
            let (mean, se) = m.get(v).copied().unwrap_or((f64::NAN, f64::NAN));
            rec.push(mean.to_string());
            rec.push(se.to_string());
        }
        w.write_record(&rec).map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Serialize)]
struct Manifest {
    scenario: String,
    seeds: Vec<u64>,
    points: Vec<ManifestPoint>,
    runs: Vec<ManifestRun>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct ManifestPoint {
    variant: String,
    policy: String,
    gamma: f64,
    theta: Vec<f64>,
}

#[derive(Serialize)]
struct ManifestRun {
    run_id: usize,
    point: usize,
    seed: u64,
    status: String,
    error: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_seeds_rejected() {
        let spec = ExperimentSpec::new(ScenarioName::Fig5, vec![], "x");
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn gamma_sweep_has_three_variants_per_gamma() {
        let spec = ExperimentSpec::new(ScenarioName::Fig6b, vec![1], "x");
        let pts = spec.points().unwrap();
        assert_eq!(pts.len(), 33);
        let gammas: Vec<f64> = pts.iter().step_by(3).map(|p| p.config.gamma).collect();
        assert_eq!(gammas, (6..=16).map(f64::from).collect::<Vec<_>>());
        assert_eq!(pts[2].config.policy, PolicyKind::AvgQualityMax);
        let case_two = ExperimentSpec::new(ScenarioName::Fig9, vec![1], "x").points().unwrap();
        assert_eq!(case_two[0].config.policy, PolicyKind::QueueDrivenCaseII);
    }

    #[test]
    fn overrides_merge_nested_fields() {
        let mut spec = ExperimentSpec::new(ScenarioName::Custom, vec![1], "x");
        spec.overrides = toml::from_str(
            r#"
            gamma = 9.0
            policy = "avg_quality_max"
            admission = { mode = "fixed", theta = 40.0 }
            stop = { until = "slots", count = 500 }
            video = { mean_holding = 100.0 }
            "#,
        )
        .unwrap();
        let cfg = spec.base_config().unwrap();
        assert_eq!(cfg.gamma, 9.0);
        assert_eq!(cfg.policy, PolicyKind::AvgQualityMax);
        assert_eq!(cfg.admission, AdmissionMode::Fixed { theta: 40.0 });
        assert_eq!(cfg.stop, StopCondition::Slots(500));
        assert_eq!(cfg.video.mean_holding, 100.0);
        assert_eq!(cfg.video.floor, 40.0);
        spec.validate().unwrap();

        spec.overrides = toml::from_str("gamam = 3.0").unwrap();
        assert!(spec.base_config().is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for n in ScenarioName::ALL {
            assert_eq!(n.as_str().parse::<ScenarioName>().unwrap(), n);
        }
        assert!("fig10".parse::<ScenarioName>().is_err());
    }

    #[test]
    fn mean_stderr_basics() {
        assert_eq!(mean_stderr(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
