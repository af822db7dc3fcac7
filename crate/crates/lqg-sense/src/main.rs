use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lqg_sense::cli::{
    certify_instance, load_instance, run_experiment, seed_from_env, simulate_once, write_scenario,
    ExperimentConfig, Method, SweepParam,
};
use lqg_sense::error::Error;
use lqg_sense::sim::ControlLaw;

#[derive(Parser)]
#[command(
    name = "lqg-sense",
    version,
    about = "Sensing-constrained LQG control experiments"
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write results.csv + manifest.json.
    Run(RunArgs),
    /// Compute the suboptimality certificate for one instance.
    Certify(CertifyArgs),
    /// Generate a scenario and write its model JSON.
    GenScenario(GenScenarioArgs),
    /// One-off Monte Carlo simulation of a sensor set.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Horizon,
    Budget,
    Agents,
}

impl From<SweepArg> for SweepParam {
    fn from(v: SweepArg) -> Self {
        match v {
            SweepArg::Horizon => SweepParam::Horizon,
            SweepArg::Budget => SweepParam::Budget,
            SweepArg::Agents => SweepParam::Agents,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Slqg,
    Optimal,
    Logdet,
    Random,
    #[value(name = "allSensors", alias = "all-sensors")]
    AllSensors,
}

impl From<MethodArg> for Method {
    fn from(v: MethodArg) -> Self {
        match v {
            MethodArg::Slqg => Method::Slqg,
            MethodArg::Optimal => Method::Optimal,
            MethodArg::Logdet => Method::Logdet,
            MethodArg::Random => Method::Random,
            MethodArg::AllSensors => Method::AllSensors,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Lqg,
    Zero,
    Perfect,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// "formation", "uav", or a model JSON path.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    sweep: Option<SweepArg>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    /// Comma-separated subset of slqg,optimal,logdet,random,allSensors.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for results.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report costs divided by the horizon.
    #[arg(long = "normalize-by-T")]
    normalize_by_horizon: bool,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    heterogeneous: bool,
    #[arg(long)]
    landmarks: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    /// Cap on brute-force enumeration size before "optimal" is skipped.
    #[arg(long)]
    cap: Option<u128>,
    /// Max parallel cells.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// "formation", "uav", or a model JSON path.
    #[arg(long, default_value = "formation")]
    scenario: String,
    #[arg(long, default_value_t = 4)]
    agents: usize,
    #[arg(long)]
    heterogeneous: bool,
    #[arg(long, default_value_t = 10)]
    landmarks: usize,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenScenarioArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the model JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Seed for generating a built-in scenario; defaults to --seed.
    #[arg(long)]
    scenario_seed: Option<u64>,
    /// Comma-separated sensor ids; "all" for the full ground set, "none" for
    /// the empty set.
    #[arg(long, default_value = "all")]
    sensors: String,
    #[arg(long, value_enum, default_value_t = PolicyArg::Lqg)]
    policy: PolicyArg,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_instance(args: &ScenarioArgs, seed: u64) -> Result<lqg_sense::cli::Instance, Error> {
    load_instance(
        &args.scenario,
        args.agents,
        args.heterogeneous,
        args.landmarks,
        args.horizon,
        seed,
    )
}

fn emit(text: String, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(args) => {
            let mut cfg: ExperimentConfig = match &args.config {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => {
                    let scenario = args.scenario.clone().ok_or_else(|| {
                        Error::InvalidConfig("--scenario or --config required".into())
                    })?;
                    let sweep = args
                        .sweep
                        .ok_or_else(|| Error::InvalidConfig("--sweep required".into()))?;
                    let values = args
                        .values
                        .clone()
                        .ok_or_else(|| Error::InvalidConfig("--values required".into()))?;
                    serde_json::from_value(serde_json::json!({
                        "scenario": scenario,
                        "sweep": SweepParam::from(sweep),
                        "sweep_values": values,
                    }))?
                }
            };
            if let Some(s) = args.scenario {
                cfg.scenario = s;
            }
            if let Some(s) = args.sweep {
                cfg.sweep = s.into();
            }
            if let Some(v) = args.values {
                cfg.sweep_values = v;
            }
            if let Some(m) = args.methods {
                cfg.methods = m.into_iter().map(Method::from).collect();
            }
            if let Some(r) = args.runs {
                cfg.monte_carlo_runs = r;
            }
            if let Some(s) = args.seed {
                cfg.seed = Some(s);
            }
            if let Some(o) = args.out {
                cfg.output = o;
            }
            if args.normalize_by_horizon {
                cfg.normalize_by_horizon = true;
            }
            if let Some(a) = args.agents {
                cfg.n_agents = a;
            }
            if args.heterogeneous {
                cfg.heterogeneous = true;
            }
            if let Some(l) = args.landmarks {
                cfg.num_landmarks = l;
            }
            if let Some(h) = args.horizon {
                cfg.horizon = h;
            }
            if let Some(b) = args.budget {
                cfg.budget = Some(b);
            }
            if let Some(c) = args.cap {
                cfg.enumeration_cap = c;
            }
            if let Some(j) = args.jobs {
                cfg.jobs = Some(j);
            }
            let outcome = run_experiment(&cfg)?;
            eprintln!(
                "wrote {} rows to {}",
                outcome.rows.len(),
                outcome.csv_path.display()
            );
            Ok(())
        }
        Command::Certify(args) => {
            let instance = build_instance(&args.scenario, args.seed.unwrap_or_else(seed_from_env))?;
            let cert = certify_instance(&instance)?;
            emit(serde_json::to_string_pretty(&cert)?, args.out.as_ref())
        }
        Command::GenScenario(args) => {
            let instance = build_instance(&args.scenario, args.seed.unwrap_or_else(seed_from_env))?;
            write_scenario(&instance, &args.out)?;
            eprintln!("wrote {}", args.out.display());
            Ok(())
        }
        Command::Simulate(args) => {
            let sim_seed = args.seed.unwrap_or_else(seed_from_env);
            let instance = build_instance(&args.scenario, args.scenario_seed.unwrap_or(sim_seed))?;
            let ids: Vec<usize> = match args.sensors.as_str() {
                "all" => instance.ground_set.iter().map(|s| s.id()).collect(),
                "none" => Vec::new(),
                list => list
                    .split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse()
                            .map_err(|_| Error::InvalidConfig(format!("bad sensor id: {tok}")))
                    })
                    .collect::<Result<_, _>>()?,
            };
            let control = match args.policy {
                PolicyArg::Lqg => ControlLaw::Estimated,
                PolicyArg::Zero => ControlLaw::Zero,
                PolicyArg::Perfect => ControlLaw::PerfectState,
            };
            let report = simulate_once(&instance, &ids, control, args.runs, sim_seed)?;
            emit(serde_json::to_string_pretty(&report)?, args.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let args = CliArgs::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
