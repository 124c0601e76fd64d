//! DC economic dispatch with PTDF branch limits.
//!
//! minimize Σ c_g p_g  s.t.  Σ p_g = Σ d,  p_min ≤ p_g ≤ p_max,
//! −Limit_k ≤ PTDF_k·(C_g p − d) ≤ Limit_k for every in-service branch.

use serde::{Deserialize, Serialize};

use crate::case_io::Network;
use crate::error::DispatchError;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::powerflow::{compute_ptdf, Ptdf};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispatch<T> {
    /// Per in-service generator, MW.
    pub gen_output: Vec<T>,
    /// P_{k+,SCED}, p.u.
    pub scheduled_flows: Vec<T>,
    /// $/h.
    pub total_cost: T,
}

impl<T: Scalar> Dispatch<T> {
    /// Generation per bus in p.u.
    pub fn injection_pu(&self, net: &Network) -> Vec<T> {
        let base = T::from_f64_lossy(net.base_mva);
        net.gen_by_bus(&self.gen_output)
            .into_iter()
            .map(|p| p / base.clone())
            .collect()
    }
}

/// Options for [`run_sced_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScedOptions {
    /// Whether branch limits enter the LP.
    pub enforce_limits: bool,
}

impl Default for ScedOptions {
    fn default() -> Self {
        Self {
            enforce_limits: true,
        }
    }
}

pub fn run_sced<T: Scalar>(net: &Network, loads_mw: &[T]) -> Result<Dispatch<T>, DispatchError> {
    let ptdf = compute_ptdf::<T>(net)?;
    run_sced_with(net, &ptdf, loads_mw, ScedOptions::default())
}

pub fn run_sced_with<T: Scalar>(
    net: &Network,
    ptdf: &Ptdf<T>,
    loads_mw: &[T],
    options: ScedOptions,
) -> Result<Dispatch<T>, DispatchError> {
    let n = net.bus_count();
    if loads_mw.len() != n {
        return Err(DispatchError::Numeric(
            crate::error::NumericError::Dimension(format!(
                "{} loads for {n} buses",
                loads_mw.len()
            )),
        ));
    }
    let demand_mw = loads_mw.iter().fold(T::zero(), |a, d| a + d.clone());
    let capacity_mw = net.capacity_mw();
    let demand_f = demand_mw.to_f64_lossy();
    if demand_f > capacity_mw + 1e-9 {
        return Err(DispatchError::InsufficientCapacity {
            demand_mw: demand_f,
            capacity_mw,
        });
    }

    let base = T::from_f64_lossy(net.base_mva);
    let loads_pu: Vec<T> = loads_mw.iter().map(|d| d.clone() / base.clone()).collect();

    let mut lp = LinearProgram::new(Sense::Minimize);
    for (g, gen) in net.generators.iter().enumerate() {
        let j = lp.add_variable(
            format!("gen{g}@bus{}", net.buses[gen.bus].external_id),
            Some(T::from_f64_lossy(gen.p_min_mw / net.base_mva)),
            Some(T::from_f64_lossy(gen.p_max_mw / net.base_mva)),
        );
        lp.set_objective(j, T::from_f64_lossy(gen.linear_cost * net.base_mva));
    }
    let total_pu = loads_pu.iter().fold(T::zero(), |a, d| a + d.clone());
    lp.add_constraint(
        "power balance",
        (0..net.generators.len()).map(|g| (g, T::one())),
        Relation::Eq,
        total_pu,
    );
    if options.enforce_limits {
        for (k, br) in net.branches.iter().enumerate() {
            let row = ptdf.matrix.row(k);
            let load_flow = crate::linalg::dot(row, &loads_pu);
            let limit = T::from_f64_lossy(br.limit_mw / net.base_mva);
            let terms: Vec<(usize, T)> = net
                .generators
                .iter()
                .enumerate()
                .map(|(g, gen)| (g, row[gen.bus].clone()))
                .filter(|(_, a)| !a.is_zero())
                .collect();
            lp.add_constraint(
                format!("branch {} forward limit", br.ordinal),
                terms.iter().cloned(),
                Relation::Le,
                limit.clone() + load_flow.clone(),
            );
            lp.add_constraint(
                format!("branch {} reverse limit", br.ordinal),
                terms,
                Relation::Ge,
                load_flow - limit,
            );
        }
    }

    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(DispatchError::Infeasible {
                binding: sol
                    .infeasible_rows
                    .iter()
                    .map(|&r| lp.constraints[r].name.clone())
                    .collect(),
            });
        }
        LpStatus::Unbounded => {
            return Err(DispatchError::Lp(crate::error::LpError::Breakdown(
                "dispatch LP reported unbounded".into(),
            )));
        }
    }

    let gen_output: Vec<T> = sol
        .values
        .iter()
        .map(|p| p.clone() * base.clone())
        .collect();
    let total_cost = net
        .generators
        .iter()
        .zip(&gen_output)
        .fold(T::zero(), |a, (g, p)| {
            a + T::from_f64_lossy(g.linear_cost) * p.clone()
        });
    let mut injection: Vec<T> = loads_pu.iter().map(|d| -d.clone()).collect();
    for (gen, p) in net.generators.iter().zip(&sol.values) {
        injection[gen.bus] = injection[gen.bus].clone() + p.clone();
    }
    Ok(Dispatch {
        gen_output,
        scheduled_flows: ptdf.flows(&injection),
        total_cost,
    })
}
