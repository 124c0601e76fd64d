//! Worst-case false-data-injection attack on a target branch.
//!
//! Variables: attack vector c (rad, per bus), ℓ1 auxiliaries s (per bus),
//! flow deltas Δp (p.u., per branch) and malicious load deviations Δd̃
//! (p.u., per load bus). The LP maximizes sgn(P_l0)·Δp_l subject to
//!
//! * Δp_k = (c_to − c_from)/x_k for every branch,
//! * Δd̃_n = Σ_out Δp − Σ_in Δp at load buses, and 0 at every other bus,
//! * |Δd̃_n| ≤ L_S·d_n0,
//! * |c_n| ≤ s_n, Σ s_n ≤ N_1, c_ref = 0.
//!
//! Cyber flows are P_k0 − Δp_k and cyber loads d_n0 + Δd̃_n.

use serde::{Deserialize, Serialize};

use crate::case_io::Network;
use crate::error::{AttackError, Error};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::powerflow::nodal_injections;
use crate::scalar::{sign, Real, Scalar};
use crate::state_estimation::{wls_estimate, MeasurementKind, MeasurementSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec<T> {
    /// Branch ordinal (1-based row in the case file).
    pub target_branch: usize,
    /// L_S as a fraction.
    pub load_shift: T,
    /// N_1, radians.
    pub l1_limit: T,
    /// P_k0 per in-service branch, p.u.
    pub base_flows: Vec<T>,
    /// d_n0 per bus, MW.
    pub base_loads: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult<T> {
    /// Internal index of the target branch.
    pub target: usize,
    pub target_ordinal: usize,
    pub c: Vec<T>,
    pub s: Vec<T>,
    /// p.u.
    pub delta_p: Vec<T>,
    /// Δd̃ per bus, MW (zero at non-load buses).
    pub delta_d: Vec<T>,
    /// sgn(P_l0)·Δp_l, p.u.
    pub objective: T,
    /// d_n0 + Δd̃_n, MW.
    pub tampered_loads: Vec<T>,
    /// P_k0 − Δp_k, p.u.
    pub cyber_flows: Vec<T>,
    pub lp_iterations: usize,
}

impl<T: Scalar> AttackResult<T> {
    /// Load buses whose measurement changes by more than `tol_mw`.
    pub fn tampered_count(&self, net: &Network, tol_mw: f64) -> usize {
        net.load_buses()
            .into_iter()
            .filter(|&n| self.delta_d[n].abs().to_f64_lossy() > tol_mw)
            .count()
    }
}

/// Column layout of the attack LP.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackLayout {
    pub buses: usize,
    pub branches: usize,
    /// Load bus index per Δd̃ column.
    pub load_buses: Vec<usize>,
}

impl AttackLayout {
    pub fn c(&self, n: usize) -> usize {
        n
    }
    pub fn s(&self, n: usize) -> usize {
        self.buses + n
    }
    pub fn dp(&self, k: usize) -> usize {
        2 * self.buses + k
    }
    pub fn dd(&self, i: usize) -> usize {
        2 * self.buses + self.branches + i
    }
}

fn check_spec<T: Scalar>(net: &Network, spec: &AttackSpec<T>) -> Result<usize, AttackError> {
    let target = net.branch_index(spec.target_branch).ok_or_else(|| {
        AttackError::Spec(format!(
            "branch {} is not an in-service branch",
            spec.target_branch
        ))
    })?;
    if spec.load_shift < T::zero() || spec.load_shift > T::one() {
        return Err(AttackError::Spec(
            "load shift factor must lie in [0, 1]".into(),
        ));
    }
    if spec.l1_limit < T::zero() {
        return Err(AttackError::Spec("l1 budget must be non-negative".into()));
    }
    if spec.base_flows.len() != net.branch_count() || spec.base_loads.len() != net.bus_count() {
        return Err(AttackError::Spec(format!(
            "expected {} base flows and {} base loads",
            net.branch_count(),
            net.bus_count()
        )));
    }
    Ok(target)
}

pub fn build_attack_lp<T: Scalar>(
    net: &Network,
    spec: &AttackSpec<T>,
) -> Result<(LinearProgram<T>, AttackLayout), AttackError> {
    let target = check_spec(net, spec)?;
    let n = net.bus_count();
    let k = net.branch_count();
    let layout = AttackLayout {
        buses: n,
        branches: k,
        load_buses: net.load_buses(),
    };
    let base = T::from_f64_lossy(net.base_mva);
    let mut lp = LinearProgram::new(Sense::Maximize);
    for b in &net.buses {
        let fixed = (b.index == net.reference_bus).then(T::zero);
        lp.add_variable(format!("c{}", b.external_id), fixed.clone(), fixed);
    }
    for b in &net.buses {
        lp.add_variable(format!("s{}", b.external_id), Some(T::zero()), None);
    }
    for br in &net.branches {
        lp.add_variable(format!("dp{}", br.ordinal), None, None);
    }
    for &bus in &layout.load_buses {
        let bound = spec.load_shift.clone() * spec.base_loads[bus].clone() / base.clone();
        lp.add_variable(
            format!("dd{}", net.buses[bus].external_id),
            Some(-bound.clone()),
            Some(bound),
        );
    }
    lp.set_objective(layout.dp(target), sign(&spec.base_flows[target]));

    for (kk, br) in net.branches.iter().enumerate() {
        let y = T::one() / T::from_f64_lossy(br.reactance);
        lp.add_constraint(
            format!("flow delta {}", br.ordinal),
            [
                (layout.dp(kk), T::one()),
                (layout.c(br.from), y.clone()),
                (layout.c(br.to), -y),
            ],
            Relation::Eq,
            T::zero(),
        );
    }
    let mut divergence: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (kk, br) in net.branches.iter().enumerate() {
        divergence[br.from].push((layout.dp(kk), T::one()));
        divergence[br.to].push((layout.dp(kk), -T::one()));
    }
    let mut dd_col = vec![None; n];
    for (i, &bus) in layout.load_buses.iter().enumerate() {
        dd_col[bus] = Some(layout.dd(i));
    }
    for bus in 0..n {
        let id = net.buses[bus].external_id;
        match dd_col[bus] {
            Some(col) => {
                let terms = std::iter::once((col, T::one()))
                    .chain(divergence[bus].iter().map(|(j, a)| (*j, -a.clone())));
                lp.add_constraint(
                    format!("load deviation {id}"),
                    terms,
                    Relation::Eq,
                    T::zero(),
                );
            }
            None => {
                lp.add_constraint(
                    format!("zero injection change {id}"),
                    divergence[bus].iter().cloned(),
                    Relation::Eq,
                    T::zero(),
                );
            }
        }
    }
    for bus in 0..n {
        let id = net.buses[bus].external_id;
        lp.add_constraint(
            format!("abs+ {id}"),
            [(layout.c(bus), T::one()), (layout.s(bus), -T::one())],
            Relation::Le,
            T::zero(),
        );
        lp.add_constraint(
            format!("abs- {id}"),
            [(layout.c(bus), -T::one()), (layout.s(bus), -T::one())],
            Relation::Le,
            T::zero(),
        );
    }
    lp.add_constraint(
        "l1 budget",
        (0..n).map(|bus| (layout.s(bus), T::one())),
        Relation::Le,
        spec.l1_limit.clone(),
    );
    Ok((lp, layout))
}

/// Solves the attack LP. Δp, Δd̃ and s are rebuilt from the optimal c so the
/// defining equalities hold to rounding.
pub fn solve_attack<T: Scalar>(
    net: &Network,
    spec: &AttackSpec<T>,
) -> Result<AttackResult<T>, AttackError> {
    let (lp, layout) = build_attack_lp(net, spec)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(AttackError::Status(format!("{:?}", sol.status)));
    }
    let target = net
        .branch_index(spec.target_branch)
        .expect("checked by build");
    let c: Vec<T> = (0..net.bus_count())
        .map(|n| sol.values[layout.c(n)].clone())
        .collect();
    let s: Vec<T> = c.iter().map(|v| v.abs()).collect();
    let delta_p: Vec<T> = net
        .branches
        .iter()
        .map(|br| (c[br.to].clone() - c[br.from].clone()) / T::from_f64_lossy(br.reactance))
        .collect();
    let base = T::from_f64_lossy(net.base_mva);
    let divergence = nodal_injections(net, &delta_p);
    let delta_d: Vec<T> = net
        .buses
        .iter()
        .zip(divergence)
        .map(|(b, v)| {
            if b.is_load_bus {
                v * base.clone()
            } else {
                T::zero()
            }
        })
        .collect();
    let tampered_loads = spec
        .base_loads
        .iter()
        .zip(&delta_d)
        .map(|(d, dd)| d.clone() + dd.clone())
        .collect();
    let cyber_flows = spec
        .base_flows
        .iter()
        .zip(&delta_p)
        .map(|(p, dp)| p.clone() - dp.clone())
        .collect();
    let objective = sign(&spec.base_flows[target]) * delta_p[target].clone();
    Ok(AttackResult {
        target,
        target_ordinal: spec.target_branch,
        c,
        s,
        delta_p,
        delta_d,
        objective,
        tampered_loads,
        cyber_flows,
        lp_iterations: sol.iterations,
    })
}

/// Replaces flow and load-bus injection measurements with their cyber values.
pub fn apply_attack<T: Scalar>(
    net: &Network,
    clean: &MeasurementSet<T>,
    result: &AttackResult<T>,
) -> Result<MeasurementSet<T>, AttackError> {
    if result.delta_p.len() != net.branch_count() || result.delta_d.len() != net.bus_count() {
        return Err(AttackError::Mismatch(
            "attack sized for a different network".into(),
        ));
    }
    let base = T::from_f64_lossy(net.base_mva);
    let mut out = clean.clone();
    for m in &mut out.entries {
        match m.kind {
            MeasurementKind::BranchFlow(k) => {
                let dp = result
                    .delta_p
                    .get(k)
                    .ok_or_else(|| AttackError::Mismatch(format!("branch {k} out of range")))?;
                m.value = m.value.clone() - dp.clone();
            }
            MeasurementKind::BusInjection(n) => {
                let bus = net
                    .buses
                    .get(n)
                    .ok_or_else(|| AttackError::Mismatch(format!("bus {n} out of range")))?;
                if bus.is_load_bus {
                    m.value = m.value.clone() - result.delta_d[n].clone() / base.clone();
                }
            }
        }
    }
    Ok(out)
}

/// |J(tampered) − J(clean)| for the WLS objective.
pub fn check_unobservability<T: Real>(
    net: &Network,
    result: &AttackResult<T>,
    clean: &MeasurementSet<T>,
) -> Result<T, Error> {
    let tampered = apply_attack(net, clean, result)?;
    let j_clean = wls_estimate(clean, net)?.weighted_residual_norm;
    let j_tampered = wls_estimate(&tampered, net)?.weighted_residual_norm;
    Ok(num_traits::Float::abs(j_tampered - j_clean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{parse_matpower, validate_case};
    use crate::powerflow::solve_dc;

    fn triangle() -> Network {
        let raw = parse_matpower(include_str!("../../../data/case3_triangle.m")).unwrap();
        validate_case(&raw, &[]).unwrap()
    }

    fn spec(net: &Network, ls: f64, n1: f64) -> AttackSpec<f64> {
        let loads = net.loads_mw();
        let inj: Vec<f64> = vec![1.0, -0.6, -0.4];
        AttackSpec {
            target_branch: 1,
            load_shift: ls,
            l1_limit: n1,
            base_flows: solve_dc(net, &inj).unwrap().flows,
            base_loads: loads,
        }
    }

    #[test]
    fn zero_budget_means_no_attack() {
        let net = triangle();
        let r = solve_attack(&net, &spec(&net, 0.5, 0.0)).unwrap();
        assert_eq!(r.objective, 0.0);
        assert!(r.c.iter().chain(&r.delta_p).all(|v| *v == 0.0));
    }

    #[test]
    fn attack_reduces_the_target_flow_within_the_load_band() {
        let net = triangle();
        let r = solve_attack(&net, &spec(&net, 0.5, 10.0)).unwrap();
        assert!(r.objective > 0.0);
        assert!(
            (r.delta_d[1].abs() - 30.0).abs() < 1e-9 || (r.delta_d[2].abs() - 20.0).abs() < 1e-9
        );
        let total: f64 = r.delta_d.iter().sum();
        assert!(total.abs() < 1e-9);
    }

    #[test]
    fn unknown_target_is_a_spec_error() {
        let net = triangle();
        let mut s = spec(&net, 0.1, 1.0);
        s.target_branch = 9;
        assert!(matches!(solve_attack(&net, &s), Err(AttackError::Spec(_))));
    }
}
