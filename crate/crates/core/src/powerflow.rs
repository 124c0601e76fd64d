//! DC (B-θ) power flow and power transfer distribution factors.

use serde::{Deserialize, Serialize};

use crate::case_io::Network;
use crate::error::NumericError;
use crate::linalg::{Lu, Matrix};
use crate::scalar::Scalar;

/// Relative PTDF magnitude at or above which a load bus is critical to a branch.
pub const CRITICAL_PTDF: f64 = 0.01;

/// Minimum number of critical load buses for a branch to enter SMLDI.
pub const SMLDI_MIN_CRITICAL: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcSolution<T> {
    /// Bus angles in radians, reference bus at zero.
    pub angles: Vec<T>,
    /// Branch flows in p.u., positive from `from` to `to`.
    pub flows: Vec<T>,
}

/// Factorized reduced susceptance matrix of a network.
#[derive(Debug, Clone)]
pub struct DcModel<T> {
    reference: usize,
    /// Bus index → row in the reduced system (`None` for the reference).
    reduced: Vec<Option<usize>>,
    ends: Vec<(usize, usize)>,
    reactance: Vec<T>,
    lu: Lu<T>,
}

impl<T: Scalar> DcModel<T> {
    pub fn new(net: &Network) -> Result<Self, NumericError> {
        let n = net.bus_count();
        let reference = net.reference_bus;
        let mut reduced = vec![None; n];
        let mut next = 0;
        for (i, slot) in reduced.iter_mut().enumerate() {
            if i != reference {
                *slot = Some(next);
                next += 1;
            }
        }
        let mut b = Matrix::<T>::zeros(n - 1, n - 1);
        let mut ends = Vec::with_capacity(net.branch_count());
        let mut reactance = Vec::with_capacity(net.branch_count());
        for br in &net.branches {
            let x = T::from_f64_lossy(br.reactance);
            let y = T::one() / x.clone();
            let (f, t) = (reduced[br.from], reduced[br.to]);
            if let Some(f) = f {
                b[(f, f)] = b[(f, f)].clone() + y.clone();
            }
            if let Some(t) = t {
                b[(t, t)] = b[(t, t)].clone() + y.clone();
            }
            if let (Some(f), Some(t)) = (f, t) {
                b[(f, t)] = b[(f, t)].clone() - y.clone();
                b[(t, f)] = b[(t, f)].clone() - y;
            }
            ends.push((br.from, br.to));
            reactance.push(x);
        }
        Ok(Self {
            reference,
            reduced,
            ends,
            reactance,
            lu: Lu::factor(b)?,
        })
    }

    pub fn bus_count(&self) -> usize {
        self.reduced.len()
    }

    /// Solves `B θ = p` with θ_ref = 0. The reference bus takes whatever
    /// injection balances the system, so `injections[ref]` is not read.
    pub fn solve(&self, injections: &[T]) -> Result<DcSolution<T>, NumericError> {
        if injections.len() != self.bus_count() {
            return Err(NumericError::Dimension(format!(
                "{} injections for {} buses",
                injections.len(),
                self.bus_count()
            )));
        }
        let rhs: Vec<T> = injections
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.reference)
            .map(|(_, p)| p.clone())
            .collect();
        let theta_red = self.lu.solve(&rhs)?;
        let angles: Vec<T> = self
            .reduced
            .iter()
            .map(|r| r.map_or_else(T::zero, |i| theta_red[i].clone()))
            .collect();
        let flows = self.flows_from_angles(&angles);
        Ok(DcSolution { angles, flows })
    }

    pub fn flows_from_angles(&self, angles: &[T]) -> Vec<T> {
        self.ends
            .iter()
            .zip(&self.reactance)
            .map(|(&(f, t), x)| (angles[f].clone() - angles[t].clone()) / x.clone())
            .collect()
    }
}

/// One-shot DC power flow.
pub fn solve_dc<T: Scalar>(net: &Network, injections: &[T]) -> Result<DcSolution<T>, NumericError> {
    DcModel::new(net)?.solve(injections)
}

/// Net injection leaving each bus for the given branch flows
/// (Σ flows out − Σ flows in).
pub fn nodal_injections<T: Scalar>(net: &Network, flows: &[T]) -> Vec<T> {
    let mut inj = vec![T::zero(); net.bus_count()];
    for (br, p) in net.branches.iter().zip(flows) {
        inj[br.from] = inj[br.from].clone() + p.clone();
        inj[br.to] = inj[br.to].clone() - p.clone();
    }
    inj
}

/// Branch × bus sensitivity matrix with the critical load-bus sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ptdf<T> {
    pub reference_bus: usize,
    /// `matrix[(k, n)]`: flow change on branch k per unit injected at n and
    /// withdrawn at the reference bus.
    pub matrix: Matrix<T>,
    /// NL(k): load buses with |PTDF| ≥ 1 % for branch k, ascending.
    pub critical_sets: Vec<Vec<usize>>,
}

impl<T: Scalar> Ptdf<T> {
    pub fn branch_count(&self) -> usize {
        self.matrix.rows()
    }

    pub fn bus_count(&self) -> usize {
        self.matrix.cols()
    }

    pub fn get(&self, branch: usize, bus: usize) -> &T {
        &self.matrix[(branch, bus)]
    }

    /// NL_k.
    pub fn critical_count(&self, branch: usize) -> usize {
        self.critical_sets[branch].len()
    }

    pub fn is_smldi_eligible(&self, branch: usize, min_critical: usize) -> bool {
        self.critical_count(branch) >= min_critical
    }

    /// Flows for an injection vector whose imbalance is taken at the reference bus.
    pub fn flows(&self, injections: &[T]) -> Vec<T> {
        self.matrix
            .mul_vec(injections)
            .expect("injection vector sized to the network")
    }
}

pub fn compute_ptdf<T: Scalar>(net: &Network) -> Result<Ptdf<T>, NumericError> {
    let model = DcModel::<T>::new(net)?;
    let x_inv = model.lu.inverse();
    let n = net.bus_count();
    let k = net.branch_count();
    let mut matrix = Matrix::zeros(k, n);
    let angle = |bus: usize, col: usize| -> T {
        match (model.reduced[bus], model.reduced[col]) {
            (Some(r), Some(c)) => x_inv[(r, c)].clone(),
            _ => T::zero(),
        }
    };
    for (kk, (&(f, t), x)) in model.ends.iter().zip(&model.reactance).enumerate() {
        for col in 0..n {
            matrix[(kk, col)] = (angle(f, col) - angle(t, col)) / x.clone();
        }
    }
    let threshold = T::from_f64_lossy(CRITICAL_PTDF);
    let load_buses = net.load_buses();
    let critical_sets = (0..k)
        .map(|kk| {
            load_buses
                .iter()
                .copied()
                .filter(|&bus| matrix[(kk, bus)].abs() >= threshold)
                .collect()
        })
        .collect();
    Ok(Ptdf {
        reference_bus: net.reference_bus,
        matrix,
        critical_sets,
    })
}
