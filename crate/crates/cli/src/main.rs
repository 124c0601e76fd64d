use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdid_core::detect::{run_two_stage, DetectorConfig};
use fdid_core::harness::{
    ieee118_suite, outage_suite, rts96_suite, run_experiment, run_timeline, scenario_rng,
    AttackParams, CaseContext, Fluctuation, ScenarioConfig, ScenarioMode, Suite,
};
use fdid_core::sced::{run_sced_with, ScedOptions};
use fdid_core::state_estimation::NoiseSigma;
use fdid_core::{attack, Error, Network, Result, Snapshot};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "fdid",
    version,
    about = "False data injection attack synthesis and detection on DC networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CaseArgs {
    /// MATPOWER case file.
    #[arg(long)]
    case: PathBuf,
    /// Branch ordinals to take out of service, comma separated.
    #[arg(long, value_delimiter = ',')]
    outage: Vec<usize>,
}

impl CaseArgs {
    fn context(&self) -> Result<CaseContext> {
        CaseContext::load(&self.case, &self.outage)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the PTDF matrix and critical load-bus sets.
    Ptdf {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Economic dispatch for a load vector.
    Sced {
        #[command(flatten)]
        case: CaseArgs,
        /// JSON array of per-bus MW, or an object keyed by bus id.
        #[arg(long)]
        loads: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the attack LP against the dispatched flows.
    Attack {
        #[command(flatten)]
        case: CaseArgs,
        /// Target branch ordinal.
        #[arg(long)]
        target: usize,
        /// Load shift factor as a fraction.
        #[arg(long)]
        ls: f64,
        /// l1 budget in radians.
        #[arg(long)]
        n1: f64,
        #[arg(long)]
        loads: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the two-stage detector on a snapshot.
    Detect {
        #[arg(long)]
        snapshot: PathBuf,
        /// Detector configuration overriding the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one scenario timeline and write it (including the snapshot).
    Simulate {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        ls: f64,
        #[arg(long, default_value_t = 5.0)]
        n1: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the bare snapshot here.
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
    },
    /// Run a scenario suite and write per-scenario reports and CSV summaries.
    RunExperiment {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the default scenario grids as suite JSON.
    GenScenarios {
        /// 160 attacks and 80 fluctuations on the 118-bus case.
        #[arg(long, conflicts_with = "paper_rts96")]
        paper_118: bool,
        /// 40 attacks and 40 fluctuations on an RTS-96 case (requires --case).
        #[arg(long)]
        paper_rts96: bool,
        #[arg(long)]
        case: Option<PathBuf>,
        /// Emit the 72-scenario single-outage grid for this branch instead.
        #[arg(long, requires = "paper_118")]
        outage: Option<usize>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_loads(net: &Network, path: Option<&Path>) -> Result<Vec<f64>> {
    let Some(path) = path else {
        return Ok(net.loads_mw());
    };
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    match value {
        serde_json::Value::Array(_) => {
            let loads: Vec<f64> = serde_json::from_value(value)?;
            if loads.len() != net.bus_count() {
                return Err(Error::Config(format!(
                    "{} loads given for {} buses",
                    loads.len(),
                    net.bus_count()
                )));
            }
            Ok(loads)
        }
        serde_json::Value::Object(_) => {
            let by_id: BTreeMap<String, f64> = serde_json::from_value(value)?;
            let mut loads = net.loads_mw();
            for (id, mw) in by_id {
                let bus = id
                    .parse::<u32>()
                    .ok()
                    .and_then(|id| net.bus_index(id))
                    .ok_or_else(|| Error::Config(format!("unknown bus id {id}")))?;
                loads[bus] = mw;
            }
            Ok(loads)
        }
        _ => Err(Error::Config("loads must be a JSON array or object".into())),
    }
}

#[derive(Serialize)]
struct PtdfOut<'a> {
    reference_bus: u32,
    branch_ordinals: Vec<usize>,
    bus_ids: Vec<u32>,
    /// Rows follow `branch_ordinals`, columns follow `bus_ids`.
    matrix: Vec<Vec<f64>>,
    /// Critical load-bus ids per branch.
    critical_sets: Vec<Vec<u32>>,
    out_of_service: &'a [usize],
}

#[derive(Serialize)]
struct ScedOut<'a> {
    generator_buses: Vec<u32>,
    branch_ordinals: Vec<usize>,
    dispatch: &'a fdid_core::Dispatch,
}

#[derive(Serialize)]
struct AttackOut<'a> {
    spec: &'a fdid_core::AttackSpec,
    result: &'a fdid_core::AttackResult,
    tampered_loads_count: usize,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ptdf { case, out } => {
            let ctx = case.context()?;
            let net = &ctx.net;
            let ids = |v: &[usize]| v.iter().map(|&b| net.buses[b].external_id).collect();
            write_json(
                &out,
                &PtdfOut {
                    reference_bus: net.buses[net.reference_bus].external_id,
                    branch_ordinals: net.branches.iter().map(|b| b.ordinal).collect(),
                    bus_ids: net.buses.iter().map(|b| b.external_id).collect(),
                    matrix: ctx.ptdf.matrix.to_rows(),
                    critical_sets: ctx.ptdf.critical_sets.iter().map(|s| ids(s)).collect(),
                    out_of_service: &net.out_of_service,
                },
            )
        }
        Command::Sced { case, loads, out } => {
            let ctx = case.context()?;
            let loads = read_loads(&ctx.net, loads.as_deref())?;
            let dispatch = run_sced_with(&ctx.net, &ctx.ptdf, &loads, ScedOptions::default())?;
            write_json(
                &out,
                &ScedOut {
                    generator_buses: ctx
                        .net
                        .generators
                        .iter()
                        .map(|g| ctx.net.buses[g.bus].external_id)
                        .collect(),
                    branch_ordinals: ctx.net.branches.iter().map(|b| b.ordinal).collect(),
                    dispatch: &dispatch,
                },
            )
        }
        Command::Attack {
            case,
            target,
            ls,
            n1,
            loads,
            out,
        } => {
            let ctx = case.context()?;
            let loads = read_loads(&ctx.net, loads.as_deref())?;
            let dispatch = run_sced_with(&ctx.net, &ctx.ptdf, &loads, ScedOptions::default())?;
            let spec = fdid_core::AttackSpec {
                target_branch: target,
                load_shift: ls,
                l1_limit: n1,
                base_flows: dispatch.scheduled_flows,
                base_loads: loads,
            };
            let result = attack::solve_attack(&ctx.net, &spec)?;
            write_json(
                &out,
                &AttackOut {
                    tampered_loads_count: result.tampered_count(&ctx.net, 1e-6),
                    spec: &spec,
                    result: &result,
                },
            )
        }
        Command::Detect {
            snapshot,
            config,
            out,
        } => {
            let snap: Snapshot = serde_json::from_str(&std::fs::read_to_string(snapshot)?)?;
            let cfg: DetectorConfig = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => DetectorConfig::default(),
            };
            write_json(&out, &run_two_stage(&snap, &cfg)?)
        }
        Command::Simulate {
            case,
            target,
            ls,
            n1,
            mu,
            sigma,
            seed,
            out,
            snapshot_out,
        } => {
            let ctx = case.context()?;
            let cfg = ScenarioConfig {
                id: "simulate".into(),
                group: "simulate".into(),
                case_path: Some(case.case.clone()),
                outages: case.outage.clone(),
                fluctuation: Fluctuation { mu, sigma },
                mode: match target {
                    Some(t) => ScenarioMode::Attack(AttackParams {
                        target_branch: t,
                        load_shift: ls,
                        l1_limit: n1,
                    }),
                    None => ScenarioMode::FluctuationOnly,
                },
                seed: Some(seed),
                noise_sigma: NoiseSigma::default(),
                detector: DetectorConfig::default(),
            };
            let timeline = run_timeline(&ctx, &cfg, &mut scenario_rng(seed, 0))?;
            if let Some(p) = snapshot_out {
                write_json(&p, &timeline.snapshot)?;
            }
            write_json(&out, &timeline)
        }
        Command::RunExperiment { suite, out } => {
            let suite = Suite::load(&suite)?;
            let report = run_experiment(&suite);
            report.write_dir(&out)?;
            let failures = report
                .scenarios
                .iter()
                .filter(|s| s.error.is_some())
                .count();
            eprintln!(
                "{} scenarios ({failures} failed); summary in {}",
                report.scenarios.len(),
                out.join("summary.csv").display()
            );
            Ok(())
        }
        Command::GenScenarios {
            paper_118,
            paper_rts96,
            case,
            outage,
            seed,
            out,
        } => {
            let suite = if paper_118 {
                let case = case.unwrap_or_else(|| PathBuf::from("data/case118.m"));
                match outage {
                    Some(o) => outage_suite(case, seed, o),
                    None => ieee118_suite(case, seed),
                }
            } else if paper_rts96 {
                let case = case.ok_or_else(|| {
                    Error::Config(
                        "--paper-rts96 needs --case pointing at an RTS-96 MATPOWER file".into(),
                    )
                })?;
                rts96_suite(case, seed)
            } else {
                return Err(Error::Config("choose --paper-118 or --paper-rts96".into()));
            };
            match out {
                Some(p) => write_json(&p, &suite),
                None => {
                    println!("{}", serde_json::to_string_pretty(&suite)?);
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
