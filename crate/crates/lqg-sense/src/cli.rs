//! Experiment orchestration: sweeps over horizon / budget / team size,
//! running each selection method and its Monte Carlo evaluation, emitting a
//! CSV table and a JSON run manifest.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guarantees::{certificate, GammaCertificate};
use crate::model::{ModelDocument, Sensor, SensorSet, TimeVaryingSystem};
use crate::riccati::{backward_riccati, RiccatiSolution};
use crate::scenarios::{formation_scenario, uav_scenario, FormationConfig, UavConfig};
use crate::selection::{
    all_sensors_report, brute_force_select_capped, greedy_select, logdet_select,
    pseudo_random_select, SelectionReport,
};
use crate::sim::{simulate, simulate_policy, ControlLaw, MonteCarloReport, SimOptions};

pub const CSV_HEADER: &str =
    "scenario,sweep_param,sweep_value,method,k,T,n,analytic_cost,mc_mean,mc_stderr,runs,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Horizon,
    Budget,
    Agents,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::Horizon => write!(f, "horizon"),
            SweepParam::Budget => write!(f, "budget"),
            SweepParam::Agents => write!(f, "agents"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    Slqg,
    Optimal,
    Logdet,
    Random,
    AllSensors,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Slqg => write!(f, "slqg"),
            Method::Optimal => write!(f, "optimal"),
            Method::Logdet => write!(f, "logdet"),
            Method::Random => write!(f, "random"),
            Method::AllSensors => write!(f, "allSensors"),
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![
        Method::Slqg,
        Method::Optimal,
        Method::Logdet,
        Method::Random,
        Method::AllSensors,
    ]
}

fn default_runs() -> usize {
    100
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_agents() -> usize {
    4
}

fn default_landmarks() -> usize {
    10
}

fn default_horizon() -> usize {
    20
}

fn default_cap() -> u128 {
    crate::selection::DEFAULT_ENUMERATION_CAP
}

/// One experiment: scenario x sweep x methods. JSON-loadable; CLI flags
/// override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// "formation", "uav", or a path to a model JSON document.
    pub scenario: String,
    pub sweep: SweepParam,
    pub sweep_values: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_runs")]
    pub monte_carlo_runs: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Divide reported costs by the horizon.
    #[serde(default)]
    pub normalize_by_horizon: bool,
    #[serde(default = "default_agents")]
    pub n_agents: usize,
    #[serde(default)]
    pub heterogeneous: bool,
    #[serde(default = "default_landmarks")]
    pub num_landmarks: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Sensor budget when not sweeping it; defaults to 6 (formation) or
    /// 3 (uav).
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u128,
    /// Parallel cell limit; defaults to the rayon global pool.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep_values.is_empty() {
            return Err(Error::InvalidConfig("sweep_values must be nonempty".into()));
        }
        if self.sweep_values.contains(&0) {
            return Err(Error::InvalidConfig("sweep_values must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must be nonempty".into()));
        }
        if self.monte_carlo_runs == 0 {
            return Err(Error::InvalidConfig(
                "monte_carlo_runs must be positive".into(),
            ));
        }
        if self.sweep == SweepParam::Agents && self.scenario != "formation" {
            return Err(Error::InvalidConfig(
                "agents sweep requires the formation scenario".into(),
            ));
        }
        Ok(())
    }

    pub fn resolved_seed(&self) -> u64 {
        self.seed.unwrap_or_else(seed_from_env)
    }
}

/// `LQG_SENSE_SEED` fallback used whenever no explicit seed is given.
pub fn seed_from_env() -> u64 {
    std::env::var("LQG_SENSE_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

/// A scenario instance plus everything needed to run selections on it.
pub struct Instance {
    pub model: TimeVaryingSystem,
    pub ground_set: Vec<Sensor>,
    pub mandatory_tags: Vec<String>,
    pub ricc: RiccatiSolution,
}

impl Instance {
    pub fn build(
        model: TimeVaryingSystem,
        ground_set: Vec<Sensor>,
        mandatory_tags: Vec<String>,
    ) -> Result<Self> {
        let ricc = backward_riccati(&model)?;
        Ok(Self {
            model,
            ground_set,
            mandatory_tags,
            ricc,
        })
    }
}

/// Loads "formation"/"uav" (seeded) or a model JSON path. File-backed models
/// treat "gps"-tagged sensors as mandatory for the pseudo-random baseline.
pub fn load_instance(
    scenario: &str,
    n_agents: usize,
    heterogeneous: bool,
    num_landmarks: usize,
    horizon: usize,
    seed: u64,
) -> Result<Instance> {
    match scenario {
        "formation" => {
            let (model, ground, tags) = formation_scenario(&FormationConfig {
                n_agents,
                heterogeneous,
                horizon,
                seed,
                ..FormationConfig::default()
            })?;
            Instance::build(model, ground, tags)
        }
        "uav" => {
            let (model, ground, tags) = uav_scenario(&UavConfig {
                num_landmarks,
                horizon,
                seed,
            })?;
            Instance::build(model, ground, tags)
        }
        path => {
            let text = fs::read_to_string(path)?;
            let doc: ModelDocument = serde_json::from_str(&text)?;
            let (model, ground) = doc.into_parts()?;
            Instance::build(model, ground, vec!["gps".to_string()])
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub scenario: String,
    pub sweep_param: SweepParam,
    pub sweep_value: usize,
    pub method: Method,
    pub k: usize,
    pub horizon: usize,
    pub n: usize,
    pub analytic_cost: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub runs: usize,
    pub seed: u64,
}

impl CsvRow {
    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.sweep_param,
            self.sweep_value,
            self.method,
            self.k,
            self.horizon,
            self.n,
            self.analytic_cost,
            self.mc_mean,
            self.mc_stderr,
            self.runs,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub sweep_value: usize,
    pub method: Method,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub scenario_seed: u64,
    pub selection_seed: u64,
    pub mc_seed: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub resolved_seed: u64,
    pub cells: Vec<CellRecord>,
    pub versions: Versions,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub package: &'static str,
    pub version: &'static str,
}

pub struct RunOutcome {
    pub rows: Vec<CsvRow>,
    pub manifest: RunManifest,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

fn select_for_method(
    instance: &Instance,
    method: Method,
    k: usize,
    cap: u128,
    selection_seed: u64,
) -> Result<SelectionReport> {
    let Instance {
        model,
        ground_set,
        mandatory_tags,
        ricc,
    } = instance;
    match method {
        Method::Slqg => greedy_select(model, ricc, ground_set, k),
        Method::Optimal => brute_force_select_capped(model, ricc, ground_set, k, cap),
        Method::Logdet => logdet_select(model, ricc, ground_set, k),
        Method::Random => {
            pseudo_random_select(model, ricc, ground_set, k, mandatory_tags, selection_seed)
        }
        Method::AllSensors => all_sensors_report(model, ricc, ground_set),
    }
}

fn run_cells(cfg: &ExperimentConfig, seed: u64) -> Result<(Vec<CsvRow>, Vec<CellRecord>)> {
    // One scenario instance per sweep value; all methods on a sweep value
    // share the instance and the Monte Carlo seed, so comparisons are paired.
    struct Cell {
        sweep_index: usize,
        sweep_value: usize,
        method: Method,
    }
    let cells: Vec<Cell> = cfg
        .sweep_values
        .iter()
        .enumerate()
        .flat_map(|(sweep_index, &sweep_value)| {
            cfg.methods.iter().map(move |&method| Cell {
                sweep_index,
                sweep_value,
                method,
            })
        })
        .collect();

    let outcomes: Vec<(Option<CsvRow>, CellRecord)> = cells
        .par_iter()
        .map(|cell| -> Result<(Option<CsvRow>, CellRecord)> {
            let scenario_seed = seed.wrapping_add(cell.sweep_index as u64);
            let selection_seed = seed
                .wrapping_add(10_000)
                .wrapping_add(cell.sweep_index as u64);
            let mc_seed = seed
                .wrapping_add(20_000)
                .wrapping_add(cell.sweep_index as u64);

            let horizon = match cfg.sweep {
                SweepParam::Horizon => cell.sweep_value,
                _ => cfg.horizon,
            };
            let n_agents = match cfg.sweep {
                SweepParam::Agents => cell.sweep_value,
                _ => cfg.n_agents,
            };
            let instance = load_instance(
                &cfg.scenario,
                n_agents,
                cfg.heterogeneous,
                cfg.num_landmarks,
                horizon,
                scenario_seed,
            )?;
            let k = match cfg.sweep {
                SweepParam::Budget => cell.sweep_value,
                // Half again the smallest observable team: k = round(1.5 n).
                SweepParam::Agents => (1.5 * n_agents as f64).round() as usize,
                SweepParam::Horizon => cfg.budget.unwrap_or(match cfg.scenario.as_str() {
                    "uav" => 3,
                    _ => 6,
                }),
            };

            let record = |status: &str, reason: Option<String>| CellRecord {
                sweep_value: cell.sweep_value,
                method: cell.method,
                status: status.to_string(),
                reason,
                scenario_seed,
                selection_seed,
                mc_seed,
            };

            let report = match select_for_method(
                &instance,
                cell.method,
                k,
                cfg.enumeration_cap,
                selection_seed,
            ) {
                Ok(report) => report,
                Err(Error::EnumerationCapExceeded { combinations, cap }) => {
                    eprintln!(
                        "warning: skipping optimal at {} = {} ({} subsets > cap {})",
                        cfg.sweep, cell.sweep_value, combinations, cap
                    );
                    return Ok((
                        None,
                        record(
                            "skipped",
                            Some(format!("{combinations} subsets > cap {cap}")),
                        ),
                    ));
                }
                Err(other) => return Err(other),
            };

            let mc = simulate(
                &instance.model,
                &instance.ricc,
                &instance.ground_set,
                &report.chosen,
                cfg.monte_carlo_runs,
                mc_seed,
            )?;
            let scale = if cfg.normalize_by_horizon {
                1.0 / horizon as f64
            } else {
                1.0
            };
            let row = CsvRow {
                scenario: cfg.scenario.clone(),
                sweep_param: cfg.sweep,
                sweep_value: cell.sweep_value,
                method: cell.method,
                k: report.chosen.len(),
                horizon,
                n: instance.model.state_dim(),
                analytic_cost: report.g_cost * scale,
                mc_mean: mc.mean_cost * scale,
                mc_stderr: mc.std_error * scale,
                runs: mc.runs,
                seed: mc_seed,
            };
            Ok((Some(row), record("done", None)))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (row, record) in outcomes {
        if let Some(row) = row {
            rows.push(row);
        }
        records.push(record);
    }
    Ok((rows, records))
}

/// Runs the experiment and writes `results.csv` and `manifest.json` under the
/// configured output directory. Deterministic for a fixed seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let seed = cfg.resolved_seed();

    let (rows, cells) = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| run_cells(cfg, seed)),
        None => run_cells(cfg, seed),
    }?;

    fs::create_dir_all(&cfg.output)?;
    let csv_path = cfg.output.join("results.csv");
    let mut csv = String::with_capacity(rows.len() * 96 + CSV_HEADER.len() + 1);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_line());
        csv.push('\n');
    }
    let mut file = fs::File::create(&csv_path)?;
    file.write_all(csv.as_bytes())?;

    let manifest = RunManifest {
        config: cfg.clone(),
        resolved_seed: seed,
        cells,
        versions: Versions {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
    };
    let manifest_path = cfg.output.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    Ok(RunOutcome {
        rows,
        manifest,
        csv_path,
        manifest_path,
    })
}

/// Computes the guarantees certificate for one instance.
pub fn certify_instance(instance: &Instance) -> Result<GammaCertificate> {
    certificate(&instance.model, &instance.ricc, &instance.ground_set)
}

/// Writes the scenario's model document as JSON.
pub fn write_scenario(instance: &Instance, out: &Path) -> Result<()> {
    let doc = ModelDocument::from_parts(&instance.model, &instance.ground_set);
    fs::write(out, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// One-off Monte Carlo evaluation of a sensor set under a control law.
pub fn simulate_once(
    instance: &Instance,
    sensor_ids: &[usize],
    control: ControlLaw,
    runs: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    let s = SensorSet::new(sensor_ids.iter().copied());
    simulate_policy(
        &instance.model,
        &instance.ricc,
        &instance.ground_set,
        &s,
        &SimOptions::new(runs, seed).control(control),
    )
}
