//! Two-stage detector: system-wide awareness from load-deviation consensus,
//! then per-branch identification from overload risk × weighted deviation.

use serde::{Deserialize, Serialize};

use crate::error::DetectError;
use crate::powerflow::Ptdf;
use crate::scalar::{sign, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlertLevel {
    Normal,
    Monitor,
    Warning,
    Danger,
}

impl AlertLevel {
    pub const ALL: [AlertLevel; 4] = [
        AlertLevel::Normal,
        AlertLevel::Monitor,
        AlertLevel::Warning,
        AlertLevel::Danger,
    ];

    /// Strict-inequality banding: `value > danger` is Danger, and so on.
    pub fn classify(value: f64, thresholds: &Thresholds) -> Self {
        if value > thresholds.danger {
            AlertLevel::Danger
        } else if value > thresholds.warning {
            AlertLevel::Warning
        } else if value > thresholds.monitor {
            AlertLevel::Monitor
        } else {
            AlertLevel::Normal
        }
    }

    fn rank(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub monitor: f64,
    pub warning: f64,
    pub danger: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Branches averaged into SMLDI.
    pub top_n: usize,
    /// Minimum NL_k for SMLDI eligibility.
    pub min_critical: usize,
    /// Relative load change treated as significant.
    pub dead_band: f64,
    pub dead_band_slack: f64,
    pub bori: Thresholds,
    pub emldi: Thresholds,
    pub smldi: Thresholds,
    /// Branches taken from the head of the CAI ranking as suspects.
    pub cai_top: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let load = Thresholds {
            monitor: 0.20,
            warning: 0.35,
            danger: 0.50,
        };
        Self {
            top_n: 10,
            min_critical: crate::powerflow::SMLDI_MIN_CRITICAL,
            dead_band: 0.05,
            dead_band_slack: 1e-9,
            bori: Thresholds {
                monitor: 1.05,
                warning: 1.10,
                danger: 1.15,
            },
            emldi: load,
            smldi: load,
            cai_top: 3,
        }
    }
}

/// Comprehensive alert level, rows = ALB and columns = ALE.
const COMBINED: [[AlertLevel; 4]; 4] = {
    use AlertLevel::*;
    [
        [Normal, Monitor, Monitor, Warning],
        [Monitor, Monitor, Warning, Warning],
        [Monitor, Warning, Warning, Danger],
        [Warning, Warning, Danger, Danger],
    ]
};

pub fn combine_alert(alb: AlertLevel, ale: AlertLevel) -> AlertLevel {
    COMBINED[alb.rank()][ale.rank()]
}

/// What the detector sees at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot<T> {
    /// Branch ordinals, aligned with every branch-indexed vector.
    pub branch_ordinals: Vec<usize>,
    /// P_{k−}, p.u.
    pub prev_flows: Vec<T>,
    /// d_{n−}, MW.
    pub prev_loads: Vec<T>,
    /// P_{k0,M}, p.u.
    pub measured_flows: Vec<T>,
    /// d_{n0,M}, MW.
    pub measured_loads: Vec<T>,
    /// P_{k+,SCED}, p.u.
    pub sced_flows: Vec<T>,
    /// Limit_k, p.u.
    pub limits: Vec<T>,
    pub ptdf: Ptdf<T>,
}

impl<T: Scalar> Snapshot<T> {
    pub fn branch_count(&self) -> usize {
        self.branch_ordinals.len()
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let k = self.branch_count();
        let n = self.ptdf.bus_count();
        let branch_vectors = [
            ("prev_flows", self.prev_flows.len()),
            ("measured_flows", self.measured_flows.len()),
            ("sced_flows", self.sced_flows.len()),
            ("limits", self.limits.len()),
            ("ptdf rows", self.ptdf.branch_count()),
            ("critical sets", self.ptdf.critical_sets.len()),
        ];
        for (name, len) in branch_vectors {
            if len != k {
                return Err(DetectError::Snapshot(format!(
                    "{name} has {len} entries for {k} branches"
                )));
            }
        }
        for (name, len) in [
            ("prev_loads", self.prev_loads.len()),
            ("measured_loads", self.measured_loads.len()),
        ] {
            if len != n {
                return Err(DetectError::Snapshot(format!(
                    "{name} has {len} entries for {n} buses"
                )));
            }
        }
        if let Some(k) = self.limits.iter().position(|l| *l <= T::zero()) {
            return Err(DetectError::Snapshot(format!(
                "branch {} has a non-positive limit",
                self.branch_ordinals[k]
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bori {
    pub bori1: f64,
    pub bori2: f64,
    pub bori: f64,
    pub alb: AlertLevel,
}

pub fn bori<T: Scalar>(k: usize, snap: &Snapshot<T>, cfg: &DetectorConfig) -> Bori {
    let prev = &snap.prev_flows[k];
    let s = sign(prev);
    let limit = snap.limits[k].clone();
    let hidden = prev.clone() - snap.measured_flows[k].clone();
    let b1 = s.clone() * (hidden.clone() + prev.clone()) / limit.clone();
    let b2 = s * (hidden + snap.sced_flows[k].clone()) / limit;
    let (bori1, bori2) = (b1.to_f64_lossy(), b2.to_f64_lossy());
    let bori = bori1.max(bori2);
    Bori {
        bori1,
        bori2,
        bori,
        alb: AlertLevel::classify(bori, &cfg.bori),
    }
}

/// Indicator of a significant load change at `bus`, before the PTDF sign.
fn load_direction<T: Scalar>(bus: usize, snap: &Snapshot<T>, cfg: &DetectorConfig) -> i8 {
    let prev = &snap.prev_loads[bus];
    if prev.is_zero() {
        return 0;
    }
    let rel = ((snap.measured_loads[bus].clone() - prev.clone()) / prev.clone()).to_f64_lossy();
    if rel >= cfg.dead_band - cfg.dead_band_slack {
        1
    } else if rel <= -cfg.dead_band + cfg.dead_band_slack {
        -1
    } else {
        0
    }
}

/// Indictr_{n,k} for every n ∈ NL(k), in NL(k) order.
pub fn indicators<T: Scalar>(k: usize, snap: &Snapshot<T>, cfg: &DetectorConfig) -> Vec<f64> {
    snap.ptdf.critical_sets[k]
        .iter()
        .map(|&n| {
            let ptdf_sign = sign(snap.ptdf.get(k, n)).to_f64_lossy();
            f64::from(load_direction(n, snap, cfg)) * ptdf_sign
        })
        .collect()
}

pub fn mldi<T: Scalar>(k: usize, snap: &Snapshot<T>, cfg: &DetectorConfig) -> f64 {
    let nl = snap.ptdf.critical_count(k);
    if nl == 0 {
        return 0.0;
    }
    let total: f64 = indicators(k, snap, cfg).iter().sum();
    sign(&snap.prev_flows[k]).to_f64_lossy() * total / nl as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emldi {
    pub emldi: f64,
    pub ale: AlertLevel,
}

pub fn emldi<T: Scalar>(k: usize, snap: &Snapshot<T>, cfg: &DetectorConfig) -> Emldi {
    let ind = indicators(k, snap, cfg);
    let influence: Vec<f64> = snap.ptdf.critical_sets[k]
        .iter()
        .map(|&n| {
            let change = snap.measured_loads[n].clone() - snap.prev_loads[n].clone();
            (change * snap.ptdf.get(k, n).clone()).abs().to_f64_lossy()
        })
        .collect();
    let denominator: f64 = influence.iter().sum();
    let value = if denominator > 0.0 {
        let weighted: f64 = influence.iter().zip(&ind).map(|(w, i)| w * i).sum();
        sign(&snap.prev_flows[k]).to_f64_lossy() * weighted / denominator
    } else {
        0.0
    };
    Emldi {
        emldi: value,
        ale: AlertLevel::classify(value, &cfg.emldi),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smldi {
    pub value: f64,
    pub alert: AlertLevel,
    /// Branch indices averaged, highest MLDI first.
    pub top_branches: Vec<usize>,
}

/// Mean of the `top_n` largest MLDI values among eligible branches; ties
/// go to the lower branch index.
pub fn smldi(mldi: &[f64], eligible: &[bool], cfg: &DetectorConfig) -> Result<Smldi, DetectError> {
    let mut candidates: Vec<usize> = (0..mldi.len()).filter(|&k| eligible[k]).collect();
    if candidates.is_empty() {
        return Err(DetectError::NoEligibleBranch(cfg.min_critical));
    }
    candidates.sort_by(|&a, &b| mldi[b].total_cmp(&mldi[a]).then(a.cmp(&b)));
    candidates.truncate(cfg.top_n.max(1));
    let value = candidates.iter().map(|&k| mldi[k]).sum::<f64>() / candidates.len() as f64;
    Ok(Smldi {
        value,
        alert: AlertLevel::classify(value, &cfg.smldi),
        top_branches: candidates,
    })
}

/// Indices sorted by descending CAI, lower index first on ties.
pub fn cai_ranking(cai: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cai.len()).collect();
    order.sort_by(|&a, &b| cai[b].total_cmp(&cai[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Branch {
    pub ordinal: usize,
    pub critical_loads: usize,
    pub eligible: bool,
    pub mldi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Branch {
    pub ordinal: usize,
    pub bori1: f64,
    pub bori2: f64,
    pub bori: f64,
    pub alb: AlertLevel,
    pub emldi: f64,
    pub ale: AlertLevel,
    pub alc: AlertLevel,
    pub cai: f64,
    /// 1-based.
    pub cai_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuspectReason {
    DangerMarked,
    TopCai,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suspect {
    pub ordinal: usize,
    pub index: usize,
    pub cai_rank: usize,
    pub reasons: Vec<SuspectReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2 {
    pub branches: Vec<Stage2Branch>,
    /// Ordered by CAI rank.
    pub suspects: Vec<Suspect>,
}

impl Stage2 {
    pub fn rank_of(&self, index: usize) -> usize {
        self.branches[index].cai_rank
    }

    pub fn is_suspect(&self, index: usize) -> bool {
        self.suspects.iter().any(|s| s.index == index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub branches: Vec<Stage1Branch>,
    pub smldi: f64,
    pub smldi_branches: Vec<usize>,
    pub stage1_alert: AlertLevel,
    pub under_attack: bool,
    /// Present only when Stage 1 raised Warning or Danger.
    pub stage2: Option<Stage2>,
}

impl DetectionReport {
    pub fn suspects(&self) -> &[Suspect] {
        self.stage2.as_ref().map_or(&[], |s| s.suspects.as_slice())
    }
}

/// Per-branch identification metrics, computed regardless of Stage 1.
pub fn evaluate_stage2<T: Scalar>(snap: &Snapshot<T>, cfg: &DetectorConfig) -> Stage2 {
    let k = snap.branch_count();
    let mut branches: Vec<Stage2Branch> = (0..k)
        .map(|kk| {
            let b = bori(kk, snap, cfg);
            let e = emldi(kk, snap, cfg);
            Stage2Branch {
                ordinal: snap.branch_ordinals[kk],
                bori1: b.bori1,
                bori2: b.bori2,
                bori: b.bori,
                alb: b.alb,
                emldi: e.emldi,
                ale: e.ale,
                alc: combine_alert(b.alb, e.ale),
                cai: e.emldi * b.bori,
                cai_rank: 0,
            }
        })
        .collect();
    let cai: Vec<f64> = branches.iter().map(|b| b.cai).collect();
    let order = cai_ranking(&cai);
    for (rank, &kk) in order.iter().enumerate() {
        branches[kk].cai_rank = rank + 1;
    }
    let mut suspects = Vec::new();
    for &kk in &order {
        let b = &branches[kk];
        let mut reasons = Vec::new();
        if b.alc == AlertLevel::Danger {
            reasons.push(SuspectReason::DangerMarked);
        }
        if b.cai_rank <= cfg.cai_top && b.cai > 0.0 {
            reasons.push(SuspectReason::TopCai);
        }
        if !reasons.is_empty() {
            suspects.push(Suspect {
                ordinal: b.ordinal,
                index: kk,
                cai_rank: b.cai_rank,
                reasons,
            });
        }
    }
    Stage2 { branches, suspects }
}

pub fn run_two_stage<T: Scalar>(
    snap: &Snapshot<T>,
    cfg: &DetectorConfig,
) -> Result<DetectionReport, DetectError> {
    snap.validate()?;
    let k = snap.branch_count();
    let branches: Vec<Stage1Branch> = (0..k)
        .map(|kk| Stage1Branch {
            ordinal: snap.branch_ordinals[kk],
            critical_loads: snap.ptdf.critical_count(kk),
            eligible: snap.ptdf.is_smldi_eligible(kk, cfg.min_critical),
            mldi: mldi(kk, snap, cfg),
        })
        .collect();
    let values: Vec<f64> = branches.iter().map(|b| b.mldi).collect();
    let eligible: Vec<bool> = branches.iter().map(|b| b.eligible).collect();
    let system = smldi(&values, &eligible, cfg)?;
    let under_attack = system.alert >= AlertLevel::Warning;
    let stage2 = under_attack.then(|| evaluate_stage2(snap, cfg));
    Ok(DetectionReport {
        branches,
        smldi: system.value,
        smldi_branches: system.top_branches,
        stage1_alert: system.alert,
        under_attack,
        stage2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    /// One branch, six critical load buses all with positive PTDF.
    fn snapshot(
        prev_flow: f64,
        measured_flow: f64,
        sced_flow: f64,
        load_scale: f64,
    ) -> Snapshot<f64> {
        let n = 6;
        let matrix = Matrix::from_rows(vec![vec![0.2; n]]).unwrap();
        Snapshot {
            branch_ordinals: vec![1],
            prev_flows: vec![prev_flow],
            prev_loads: vec![100.0; n],
            measured_flows: vec![measured_flow],
            measured_loads: vec![100.0 * load_scale; n],
            sced_flows: vec![sced_flow],
            limits: vec![1.0],
            ptdf: Ptdf {
                reference_bus: 0,
                matrix,
                critical_sets: vec![(0..n).collect()],
            },
        }
    }

    #[test]
    fn steady_state_below_limit_is_normal() {
        let cfg = DetectorConfig::default();
        let b = bori(0, &snapshot(0.9, 0.9, 0.9, 1.0), &cfg);
        assert!((b.bori1 - 0.9).abs() < 1e-12 && (b.bori2 - 0.9).abs() < 1e-12);
        assert_eq!(b.alb, AlertLevel::Normal);
    }

    #[test]
    fn hidden_flow_reduction_on_a_loaded_line_is_danger() {
        let cfg = DetectorConfig::default();
        let b = bori(0, &snapshot(1.0, 0.8, 1.0, 1.0), &cfg);
        assert!((b.bori1 - 1.2).abs() < 1e-12);
        assert_eq!(b.alb, AlertLevel::Danger);
    }

    #[test]
    fn zero_previous_flow_zeroes_everything() {
        let cfg = DetectorConfig::default();
        let snap = snapshot(0.0, 0.5, 0.5, 1.2);
        assert_eq!(bori(0, &snap, &cfg).bori, 0.0);
        assert_eq!(mldi(0, &snap, &cfg), 0.0);
    }

    #[test]
    fn uniform_rise_against_positive_flow_is_maximal() {
        let cfg = DetectorConfig::default();
        let snap = snapshot(0.5, 0.5, 0.5, 1.06);
        assert_eq!(mldi(0, &snap, &cfg), 1.0);
        assert_eq!(emldi(0, &snap, &cfg).emldi, 1.0);
    }

    #[test]
    fn dead_band_edges() {
        let cfg = DetectorConfig::default();
        assert_eq!(mldi(0, &snapshot(0.5, 0.5, 0.5, 1.0499), &cfg), 0.0);
        assert_eq!(mldi(0, &snapshot(0.5, 0.5, 0.5, 1.05), &cfg), 1.0);
        assert_eq!(mldi(0, &snapshot(0.5, 0.5, 0.5, 0.95), &cfg), -1.0);
    }

    #[test]
    fn no_load_change_gives_zero_emldi() {
        let cfg = DetectorConfig::default();
        let e = emldi(0, &snapshot(0.5, 0.5, 0.5, 1.0), &cfg);
        assert_eq!(e.emldi, 0.0);
        assert_eq!(e.ale, AlertLevel::Normal);
    }

    #[test]
    fn combined_alert_spot_values() {
        use AlertLevel::*;
        assert_eq!(combine_alert(Normal, Normal), Normal);
        assert_eq!(combine_alert(Warning, Danger), Danger);
        assert_eq!(combine_alert(Monitor, Monitor), Monitor);
        assert_eq!(combine_alert(Normal, Danger), Warning);
    }

    #[test]
    fn smldi_takes_the_top_eligible_values() {
        let cfg = DetectorConfig {
            top_n: 2,
            ..DetectorConfig::default()
        };
        let s = smldi(&[0.9, 0.1, 0.8, 0.7], &[false, true, true, true], &cfg).unwrap();
        assert_eq!(s.top_branches, vec![2, 3]);
        assert!((s.value - 0.75).abs() < 1e-12);
        assert_eq!(s.alert, AlertLevel::Danger);
        assert!(smldi(&[0.5], &[false], &cfg).is_err());
    }

    #[test]
    fn cai_ties_rank_lower_index_first() {
        assert_eq!(cai_ranking(&[0.5, 1.0, 0.5, -1.0]), vec![1, 0, 2, 3]);
    }

    #[test]
    fn quiet_snapshot_has_no_stage_two() {
        let cfg = DetectorConfig::default();
        let r = run_two_stage(&snapshot(0.5, 0.5, 0.5, 1.0), &cfg).unwrap();
        assert_eq!(r.stage1_alert, AlertLevel::Normal);
        assert!(!r.under_attack && r.stage2.is_none());
    }

    #[test]
    fn attacked_snapshot_names_the_branch() {
        let cfg = DetectorConfig::default();
        let r = run_two_stage(&snapshot(1.0, 0.8, 1.0, 1.08), &cfg).unwrap();
        assert!(r.under_attack);
        assert_eq!(r.suspects()[0].ordinal, 1);
        assert_eq!(
            r.suspects()[0].reasons,
            vec![SuspectReason::DangerMarked, SuspectReason::TopCai]
        );
    }
}
