//! Scenario generation, the two-interval timeline and batch experiments.
//!
//! Timeline of one scenario:
//!
//! 1. t = −ΔT: dispatch on d₋ gives g₋ and the trusted flows P₋.
//! 2. Loads drift to d₀ under fixed g₋; the reference bus absorbs the
//!    imbalance, giving physical flows P₀.
//! 3. Optionally an attack is solved on (P₀, d₀) and the measurements are
//!    tampered.
//! 4. State estimation yields P₀,M and d₀,M.
//! 5. Dispatch on d₀,M gives the scheduled flows P₊ and g₊.
//! 6. Ground truth at t = +ΔT is g₊ against the true loads d₀.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{apply_attack, solve_attack, AttackResult, AttackSpec};
use crate::case_io::{load_network, Network};
use crate::detect::{
    evaluate_stage2, run_two_stage, AlertLevel, DetectionReport, DetectorConfig, Snapshot,
};
use crate::error::{Error, Result};
use crate::powerflow::{compute_ptdf, Ptdf};
use crate::sced::{run_sced_with, Dispatch, ScedOptions};
use crate::state_estimation::{build_measurements, wls_estimate, NoiseSigma};

/// Standard-normal draws are clipped to ±this value.
pub const FLUCTUATION_CUTOFF: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Fluctuation {
    /// Mean as a fraction of the load.
    pub mu: f64,
    /// Standard deviation as a fraction of the load.
    pub sigma: f64,
}

impl Fluctuation {
    pub const CONSTANT: Fluctuation = Fluctuation {
        mu: 0.0,
        sigma: 0.0,
    };

    pub fn label(&self) -> String {
        if self.mu == 0.0 && self.sigma == 0.0 {
            "constant".into()
        } else {
            format!("N({}%,{}%)", pct(self.mu), pct(self.sigma))
        }
    }
}

fn pct(v: f64) -> String {
    let p = (v * 1000.0).round() / 10.0;
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    /// Branch ordinal.
    pub target_branch: usize,
    pub load_shift: f64,
    pub l1_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    FluctuationOnly,
    Attack(AttackParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub group: String,
    /// Falls back to the suite's case.
    #[serde(default)]
    pub case_path: Option<PathBuf>,
    /// Branch ordinals taken out of service.
    #[serde(default)]
    pub outages: Vec<usize>,
    #[serde(default)]
    pub fluctuation: Fluctuation,
    pub mode: ScenarioMode,
    /// Overrides the stream derived from the suite seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub noise_sigma: NoiseSigma,
    #[serde(default)]
    pub detector: DetectorConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.fluctuation;
        if !(f.sigma >= 0.0) || !f.mu.is_finite() {
            return Err(Error::Config(format!(
                "{}: sigma must be non-negative",
                self.id
            )));
        }
        if let ScenarioMode::Attack(a) = &self.mode {
            if !(0.0..=1.0).contains(&a.load_shift) || !(a.l1_limit >= 0.0) {
                return Err(Error::Config(format!(
                    "{}: load_shift must lie in [0, 1] and l1_limit must be non-negative",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn target(&self) -> Option<usize> {
        match self.mode {
            ScenarioMode::Attack(a) => Some(a.target_branch),
            ScenarioMode::FluctuationOnly => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub seed: u64,
    pub case_path: PathBuf,
    pub scenarios: Vec<ScenarioConfig>,
}

impl Suite {
    /// Reads a suite; relative case paths resolve against the suite file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut suite: Suite = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() && !p.exists() {
                *p = dir.join(&*p);
            }
        };
        resolve(&mut suite.case_path);
        for s in &mut suite.scenarios {
            if let Some(p) = s.case_path.as_mut() {
                resolve(p);
            }
        }
        Ok(suite)
    }

    fn case_for<'a>(&'a self, s: &'a ScenarioConfig) -> &'a Path {
        s.case_path.as_deref().unwrap_or(&self.case_path)
    }
}

/// Per-scenario generator: stream `index` of the suite seed.
pub fn scenario_rng(suite_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(suite_seed);
    rng.set_stream(index);
    rng
}

/// Δd_n = d_n·(clip(v_n, ±1.96)·σ + μ) for load buses, zero elsewhere.
pub fn gen_fluctuation_with<R: Rng + ?Sized>(
    loads: &[f64],
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    loads
        .iter()
        .map(|&d| {
            let z: f64 = rng.sample(StandardNormal);
            let v = z.clamp(-FLUCTUATION_CUTOFF, FLUCTUATION_CUTOFF) * sigma + mu;
            if d > 0.0 {
                d * v
            } else {
                0.0
            }
        })
        .collect()
}

pub fn gen_fluctuation(loads: &[f64], mu: f64, sigma: f64, seed: u64) -> Vec<f64> {
    gen_fluctuation_with(loads, mu, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Immutable per-configuration data shared by scenarios.
#[derive(Debug, Clone)]
pub struct CaseContext {
    pub net: Network,
    pub ptdf: Ptdf<f64>,
}

impl CaseContext {
    pub fn new(net: Network) -> Result<Self> {
        let ptdf = compute_ptdf(&net)?;
        Ok(Self { net, ptdf })
    }

    pub fn load(path: impl AsRef<Path>, outages: &[usize]) -> Result<Self> {
        Self::new(load_network(path, outages)?)
    }

    fn physical_flows(&self, gen_pu: &[f64], loads_mw: &[f64]) -> Vec<f64> {
        let base = self.net.base_mva;
        let inj: Vec<f64> = gen_pu
            .iter()
            .zip(loads_mw)
            .map(|(g, d)| g - d / base)
            .collect();
        self.ptdf.flows(&inj)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeSummary {
    pub weighted_residual_norm: f64,
    pub lnr_value: f64,
    pub lnr_index: usize,
    pub bad_data: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub snapshot: Snapshot<f64>,
    /// d₀, MW.
    pub true_loads: Vec<f64>,
    /// P₀, p.u.
    pub physical_flows: Vec<f64>,
    pub prev_dispatch: Dispatch<f64>,
    pub post_dispatch: Dispatch<f64>,
    /// Physical flows at t = +ΔT, p.u.
    pub ground_truth_flows: Vec<f64>,
    pub attack: Option<AttackResult<f64>>,
    pub estimation: SeSummary,
}

impl Timeline {
    /// |ground-truth flow| − limit on a branch, MW.
    pub fn overload_mw(&self, net: &Network, branch: usize) -> f64 {
        self.ground_truth_flows[branch].abs() * net.base_mva - net.branches[branch].limit_mw
    }
}

pub fn run_timeline(
    ctx: &CaseContext,
    cfg: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Timeline> {
    cfg.validate()?;
    let net = &ctx.net;
    let base = net.base_mva;
    let prev_loads = net.loads_mw();
    let prev_dispatch = run_sced_with(net, &ctx.ptdf, &prev_loads, ScedOptions::default())?;

    let delta = gen_fluctuation_with(&prev_loads, cfg.fluctuation.mu, cfg.fluctuation.sigma, rng);
    let true_loads: Vec<f64> = prev_loads
        .iter()
        .zip(&delta)
        .map(|(d, dd)| d + dd)
        .collect();
    let mut gen_now = prev_dispatch.injection_pu(net);
    let imbalance: f64 = true_loads.iter().sum::<f64>() / base - gen_now.iter().sum::<f64>();
    gen_now[net.reference_bus] += imbalance;
    let physical_flows = ctx.physical_flows(&gen_now, &true_loads);

    let loads_pu: Vec<f64> = true_loads.iter().map(|d| d / base).collect();
    let noise_seed = rng.next_u64();
    let clean = build_measurements(
        net,
        &physical_flows,
        &loads_pu,
        &gen_now,
        cfg.noise_sigma,
        noise_seed,
    )?;
    let (measurements, attack) = match cfg.mode {
        ScenarioMode::FluctuationOnly => (clean, None),
        ScenarioMode::Attack(a) => {
            let spec = AttackSpec {
                target_branch: a.target_branch,
                load_shift: a.load_shift,
                l1_limit: a.l1_limit,
                base_flows: physical_flows.clone(),
                base_loads: true_loads.clone(),
            };
            let result = solve_attack(net, &spec)?;
            (apply_attack(net, &clean, &result)?, Some(result))
        }
    };
    let se = wls_estimate(&measurements, net)?;
    let measured_flows = se.estimated_flows(net);
    let measured_loads = se.estimated_loads_mw(net, &measurements);

    let post_dispatch = run_sced_with(net, &ctx.ptdf, &measured_loads, ScedOptions::default())?;
    let ground_truth_flows = {
        let mut gen_post = post_dispatch.injection_pu(net);
        let imbalance: f64 = true_loads.iter().sum::<f64>() / base - gen_post.iter().sum::<f64>();
        gen_post[net.reference_bus] += imbalance;
        ctx.physical_flows(&gen_post, &true_loads)
    };

    let snapshot = Snapshot {
        branch_ordinals: net.branches.iter().map(|b| b.ordinal).collect(),
        prev_flows: prev_dispatch.scheduled_flows.clone(),
        prev_loads,
        measured_flows,
        measured_loads,
        sced_flows: post_dispatch.scheduled_flows.clone(),
        limits: net.limits_pu(),
        ptdf: ctx.ptdf.clone(),
    };
    Ok(Timeline {
        snapshot,
        true_loads,
        physical_flows,
        prev_dispatch,
        post_dispatch,
        ground_truth_flows,
        attack,
        estimation: SeSummary {
            weighted_residual_norm: se.weighted_residual_norm,
            lnr_value: se.lnr.value,
            lnr_index: se.lnr.index,
            bad_data: se.bad_data,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub ordinal: usize,
    /// Among suspects of a Stage-1 detection.
    pub identified: bool,
    /// ALC = Danger in a Stage-1 detection.
    pub danger_marked: bool,
    /// CAI rank and ALC computed without Stage-1 gating.
    pub cai_rank: usize,
    pub cai: f64,
    pub alc: AlertLevel,
    pub lp_objective_mw: f64,
    pub tampered_loads: usize,
    pub cyber_flow_mw: f64,
    pub ground_truth_flow_mw: f64,
    pub limit_mw: f64,
    pub overload_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub id: String,
    pub group: String,
    pub config: ScenarioConfig,
    pub error: Option<String>,
    pub smldi: Option<f64>,
    pub stage1_alert: Option<AlertLevel>,
    pub under_attack: bool,
    pub target: Option<TargetOutcome>,
    pub estimation: Option<SeSummary>,
    pub detection: Option<DetectionReport>,
}

impl ScenarioReport {
    pub fn is_attack(&self) -> bool {
        matches!(self.config.mode, ScenarioMode::Attack(_))
    }
}

pub fn run_scenario(
    ctx: &CaseContext,
    cfg: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Timeline, ScenarioReport)> {
    let timeline = run_timeline(ctx, cfg, rng)?;
    let report = run_two_stage(&timeline.snapshot, &cfg.detector)?;
    let target = match (&cfg.mode, &timeline.attack) {
        (ScenarioMode::Attack(a), Some(result)) => {
            let net = &ctx.net;
            let k = result.target;
            let ungated = evaluate_stage2(&timeline.snapshot, &cfg.detector);
            let base = net.base_mva;
            Some(TargetOutcome {
                ordinal: a.target_branch,
                identified: report.stage2.as_ref().is_some_and(|s| s.is_suspect(k)),
                danger_marked: report
                    .stage2
                    .as_ref()
                    .is_some_and(|s| s.branches[k].alc == AlertLevel::Danger),
                cai_rank: ungated.branches[k].cai_rank,
                cai: ungated.branches[k].cai,
                alc: ungated.branches[k].alc,
                lp_objective_mw: result.objective * base,
                tampered_loads: result.tampered_count(net, 1e-6),
                cyber_flow_mw: result.cyber_flows[k] * base,
                ground_truth_flow_mw: timeline.ground_truth_flows[k] * base,
                limit_mw: net.branches[k].limit_mw,
                overload_mw: timeline.overload_mw(net, k),
            })
        }
        _ => None,
    };
    let scenario = ScenarioReport {
        id: cfg.id.clone(),
        group: cfg.group.clone(),
        config: cfg.clone(),
        error: None,
        smldi: Some(report.smldi),
        stage1_alert: Some(report.stage1_alert),
        under_attack: report.under_attack,
        target,
        estimation: Some(timeline.estimation.clone()),
        detection: Some(report),
    };
    Ok((timeline, scenario))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub average: f64,
    /// Sample standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let average = v.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let std = if n > 1 {
            (v.iter().map(|x| (x - average).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            max: v[n - 1],
            min: v[0],
            median,
            average,
            std,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub scenarios: usize,
    pub failures: usize,
    /// SMLDI statistics in percent.
    pub smldi_percent: Option<Stats>,
    /// Stage-1 Warning or Danger (false alarms in fluctuation groups).
    pub detected: usize,
    pub identified: usize,
    pub danger_marked: usize,
    pub average_target_rank: Option<f64>,
    /// Target overload statistics in MW.
    pub overload_mw: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub suite: String,
    pub scenarios: Vec<ScenarioReport>,
    /// Declared groups in first-appearance order.
    pub groups: Vec<GroupSummary>,
}

impl ExperimentReport {
    pub fn group(&self, name: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.group == name)
    }

    pub fn attacks(&self) -> impl Iterator<Item = &ScenarioReport> {
        self.scenarios.iter().filter(|s| s.is_attack())
    }

    pub fn fluctuations(&self) -> impl Iterator<Item = &ScenarioReport> {
        self.scenarios.iter().filter(|s| !s.is_attack())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "group",
            "max",
            "min",
            "median",
            "average",
            "std",
            "detected",
            "identified",
            "danger_marked",
        ])?;
        for g in &self.groups {
            let fmt = |f: fn(&Stats) -> f64| {
                g.smldi_percent
                    .as_ref()
                    .map_or(String::new(), |s| format!("{:.2}", f(s)))
            };
            w.write_record([
                g.group.clone(),
                fmt(|s| s.max),
                fmt(|s| s.min),
                fmt(|s| s.median),
                fmt(|s| s.average),
                fmt(|s| s.std),
                g.detected.to_string(),
                g.identified.to_string(),
                g.danger_marked.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per scenario; overloads in MW, SMLDI in percent.
    pub fn write_scenario_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "id",
            "group",
            "smldi",
            "stage1_alert",
            "detected",
            "target",
            "identified",
            "danger_marked",
            "target_cai_rank",
            "overload_mw",
            "error",
        ])?;
        for s in &self.scenarios {
            let t = s.target.as_ref();
            w.write_record([
                s.id.clone(),
                s.group.clone(),
                s.smldi
                    .map_or(String::new(), |v| format!("{:.2}", 100.0 * v)),
                s.stage1_alert.map_or(String::new(), |a| format!("{a:?}")),
                s.under_attack.to_string(),
                t.map_or(String::new(), |t| t.ordinal.to_string()),
                t.map_or(String::new(), |t| t.identified.to_string()),
                t.map_or(String::new(), |t| t.danger_marked.to_string()),
                t.map_or(String::new(), |t| t.cai_rank.to_string()),
                t.map_or(String::new(), |t| format!("{:.3}", t.overload_mw)),
                s.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `summary.csv`, `scenarios.csv`, `report.json` and one JSON per scenario.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let per = dir.join("scenarios");
        std::fs::create_dir_all(&per)?;
        for s in &self.scenarios {
            let name: String =
                s.id.chars()
                    .map(|c| {
                        if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                            c
                        } else {
                            '_'
                        }
                    })
                    .collect();
            std::fs::write(
                per.join(format!("{name}.json")),
                serde_json::to_string_pretty(s)?,
            )?;
        }
        self.write_csv(dir.join("summary.csv"))?;
        self.write_scenario_csv(dir.join("scenarios.csv"))?;
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&self.groups)?,
        )?;
        Ok(())
    }
}

pub fn summarize(scenarios: &[ScenarioReport]) -> Vec<GroupSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_group: BTreeMap<&str, Vec<&ScenarioReport>> = BTreeMap::new();
    for s in scenarios {
        if !by_group.contains_key(s.group.as_str()) {
            order.push(&s.group);
        }
        by_group.entry(&s.group).or_default().push(s);
    }
    order
        .into_iter()
        .map(|name| {
            let members = &by_group[name];
            let smldi: Vec<f64> = members
                .iter()
                .filter_map(|s| s.smldi)
                .map(|v| 100.0 * v)
                .collect();
            let targets: Vec<&TargetOutcome> =
                members.iter().filter_map(|s| s.target.as_ref()).collect();
            let ranks: Vec<f64> = targets.iter().map(|t| t.cai_rank as f64).collect();
            let overloads: Vec<f64> = targets.iter().map(|t| t.overload_mw).collect();
            GroupSummary {
                group: name.to_string(),
                scenarios: members.len(),
                failures: members.iter().filter(|s| s.error.is_some()).count(),
                smldi_percent: Stats::of(&smldi),
                detected: members.iter().filter(|s| s.under_attack).count(),
                identified: targets.iter().filter(|t| t.identified).count(),
                danger_marked: targets.iter().filter(|t| t.danger_marked).count(),
                average_target_rank: (!ranks.is_empty())
                    .then(|| ranks.iter().sum::<f64>() / ranks.len() as f64),
                overload_mw: Stats::of(&overloads),
            }
        })
        .collect()
}

type ContextKey = (PathBuf, Vec<usize>);

fn context_key(suite: &Suite, s: &ScenarioConfig) -> ContextKey {
    let mut outages = s.outages.clone();
    outages.sort_unstable();
    (suite.case_for(s).to_path_buf(), outages)
}

/// Runs every scenario in parallel; failures are recorded per scenario.
pub fn run_experiment(suite: &Suite) -> ExperimentReport {
    let mut contexts: BTreeMap<ContextKey, std::result::Result<CaseContext, String>> =
        BTreeMap::new();
    for s in &suite.scenarios {
        let key = context_key(suite, s);
        contexts
            .entry(key)
            .or_insert_with_key(|key| CaseContext::load(&key.0, &key.1).map_err(|e| e.to_string()));
    }
    let scenarios: Vec<ScenarioReport> = suite
        .scenarios
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let mut rng = scenario_rng(
                cfg.seed.unwrap_or(suite.seed),
                if cfg.seed.is_some() { 0 } else { i as u64 },
            );
            let outcome = match &contexts[&context_key(suite, cfg)] {
                Ok(ctx) => run_scenario(ctx, cfg, &mut rng).map(|(_, r)| r),
                Err(e) => Err(Error::Config(e.clone())),
            };
            outcome.unwrap_or_else(|e| {
                log::warn!("scenario {} failed: {e}", cfg.id);
                ScenarioReport {
                    id: cfg.id.clone(),
                    group: cfg.group.clone(),
                    config: cfg.clone(),
                    error: Some(
                        Error::Scenario {
                            id: cfg.id.clone(),
                            source: Box::new(e),
                        }
                        .to_string(),
                    ),
                    smldi: None,
                    stage1_alert: None,
                    under_attack: false,
                    target: None,
                    estimation: None,
                    detection: None,
                }
            })
        })
        .collect();
    ExperimentReport {
        suite: suite.name.clone(),
        groups: summarize(&scenarios),
        scenarios,
    }
}

/// Fluctuation distributions of the fluctuation-only groups.
pub const FLUCTUATION_GRID: [Fluctuation; 4] = [
    Fluctuation {
        mu: 0.0,
        sigma: 0.03,
    },
    Fluctuation {
        mu: 0.0,
        sigma: 0.05,
    },
    Fluctuation {
        mu: -0.01,
        sigma: 0.03,
    },
    Fluctuation {
        mu: 0.01,
        sigma: 0.03,
    },
];

/// Attack-group label, e.g. `attack-118-constant`.
pub fn attack_group(target: usize, fluctuation: &Fluctuation) -> String {
    format!("attack-{target}-{}", fluctuation.label())
}

pub fn fluctuation_group(fluctuation: &Fluctuation) -> String {
    format!("fluctuation-{}", fluctuation.label())
}

/// Axes of a scenario grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub outages: Vec<usize>,
    pub targets: Vec<usize>,
    pub load_shifts: Vec<f64>,
    pub budgets: Vec<f64>,
    /// Fluctuation-only vectors per distribution.
    pub per_distribution: usize,
}

/// Grid of attacks × {constant, N(0,3%)} loads plus fluctuation-only
/// vectors for each of the four distributions.
pub fn grid_suite(name: &str, case_path: impl Into<PathBuf>, seed: u64, grid: &GridSpec) -> Suite {
    let GridSpec {
        outages,
        targets,
        load_shifts,
        budgets,
        per_distribution,
    } = grid;
    let mut scenarios = Vec::new();
    let tag = if outages.is_empty() {
        String::new()
    } else {
        format!(
            "out{}-",
            outages
                .iter()
                .map(|o| o.to_string())
                .collect::<Vec<_>>()
                .join("+")
        )
    };
    for f in &FLUCTUATION_GRID {
        for i in 0..*per_distribution {
            scenarios.push(ScenarioConfig {
                id: format!("{tag}{}-{:02}", fluctuation_group(f), i + 1),
                group: fluctuation_group(f),
                case_path: None,
                outages: outages.to_vec(),
                fluctuation: *f,
                mode: ScenarioMode::FluctuationOnly,
                seed: None,
                noise_sigma: NoiseSigma::default(),
                detector: DetectorConfig::default(),
            });
        }
    }
    for &target in targets {
        for f in [Fluctuation::CONSTANT, FLUCTUATION_GRID[0]] {
            for &ls in load_shifts {
                for &n1 in budgets {
                    scenarios.push(ScenarioConfig {
                        id: format!("{tag}{}-ls{}-n{}", attack_group(target, &f), pct(ls), n1),
                        group: attack_group(target, &f),
                        case_path: None,
                        outages: outages.to_vec(),
                        fluctuation: f,
                        mode: ScenarioMode::Attack(AttackParams {
                            target_branch: target,
                            load_shift: ls,
                            l1_limit: n1,
                        }),
                        seed: None,
                        noise_sigma: NoiseSigma::default(),
                        detector: DetectorConfig::default(),
                    });
                }
            }
        }
    }
    Suite {
        name: name.to_string(),
        seed,
        case_path: case_path.into(),
        scenarios,
    }
}

pub const TARGETS_118: [usize; 2] = [118, 111];
pub const LOAD_SHIFT_GRID: [f64; 4] = [0.05, 0.10, 0.15, 0.20];

/// 160 attacks (targets 118 and 111, L_S 5–20 %, N_1 1–10, constant and
/// N(0,3%) loads) and 80 fluctuation vectors.
pub fn ieee118_suite(case_path: impl Into<PathBuf>, seed: u64) -> Suite {
    let grid = GridSpec {
        outages: vec![],
        targets: TARGETS_118.to_vec(),
        load_shifts: LOAD_SHIFT_GRID.to_vec(),
        budgets: (1..=10).map(f64::from).collect(),
        per_distribution: 20,
    };
    grid_suite("ieee118", case_path, seed, &grid)
}

/// 32 attacks (N_1 ∈ {5, 10}) and 40 fluctuation vectors under one outage.
pub fn outage_suite(case_path: impl Into<PathBuf>, seed: u64, outage: usize) -> Suite {
    let grid = GridSpec {
        outages: vec![outage],
        targets: TARGETS_118.to_vec(),
        load_shifts: LOAD_SHIFT_GRID.to_vec(),
        budgets: vec![5.0, 10.0],
        per_distribution: 10,
    };
    grid_suite(&format!("ieee118-outage{outage}"), case_path, seed, &grid)
}

/// 40 attacks on branches 62 and 99 (L_S 10 %, N_1 1–10) and 40 fluctuation
/// vectors for a user-supplied RTS-96 case.
pub fn rts96_suite(case_path: impl Into<PathBuf>, seed: u64) -> Suite {
    let grid = GridSpec {
        outages: vec![],
        targets: vec![62, 99],
        load_shifts: vec![0.10],
        budgets: (1..=10).map(f64::from).collect(),
        per_distribution: 10,
    };
    grid_suite("rts96", case_path, seed, &grid)
}
