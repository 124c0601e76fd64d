//! Linear (DC) weighted-least-squares state estimation, z = Hθ + e.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::case_io::Network;
use crate::error::EstimationError;
use crate::linalg::{Lu, Matrix};
use crate::scalar::Real;

/// Largest-normalized-residual threshold.
pub const LNR_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementKind {
    BranchFlow(usize),
    BusInjection(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement<T> {
    pub kind: MeasurementKind,
    /// p.u.
    pub value: T,
    /// 1/σ².
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet<T> {
    /// One flow per in-service branch, then one injection per bus.
    pub entries: Vec<Measurement<T>>,
    /// Metered generation per bus, p.u.; never touched by an attacker.
    pub generation: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSigma {
    /// p.u.
    pub flow: f64,
    /// p.u.
    pub injection: f64,
}

impl<T: Real> MeasurementSet<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense measurement Jacobian over all bus angles.
    pub fn jacobian(&self, net: &Network) -> Matrix<T> {
        let n = net.bus_count();
        let mut h = Matrix::zeros(self.entries.len(), n);
        for (row, m) in self.entries.iter().enumerate() {
            match m.kind {
                MeasurementKind::BranchFlow(k) => {
                    let br = &net.branches[k];
                    let y = T::one() / T::from_f64_lossy(br.reactance);
                    h[(row, br.from)] = h[(row, br.from)] + y;
                    h[(row, br.to)] = h[(row, br.to)] - y;
                }
                MeasurementKind::BusInjection(bus) => {
                    for br in &net.branches {
                        let y = T::one() / T::from_f64_lossy(br.reactance);
                        if br.from == bus {
                            h[(row, br.from)] = h[(row, br.from)] + y;
                            h[(row, br.to)] = h[(row, br.to)] - y;
                        } else if br.to == bus {
                            h[(row, br.to)] = h[(row, br.to)] + y;
                            h[(row, br.from)] = h[(row, br.from)] - y;
                        }
                    }
                }
            }
        }
        h
    }
}

pub fn build_measurements<T: Real>(
    net: &Network,
    flows: &[T],
    loads: &[T],
    generation: &[T],
    noise: NoiseSigma,
    seed: u64,
) -> Result<MeasurementSet<T>, EstimationError> {
    let (k, n) = (net.branch_count(), net.bus_count());
    if flows.len() != k || loads.len() != n || generation.len() != n {
        return Err(EstimationError::Input(format!(
            "expected {k} flows and {n} loads/generation values, got {}/{}/{}",
            flows.len(),
            loads.len(),
            generation.len()
        )));
    }
    if !(noise.flow >= 0.0 && noise.injection >= 0.0) {
        return Err(EstimationError::Input(
            "noise sigma must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |sigma: f64| -> (T, T) {
        if sigma == 0.0 {
            (T::zero(), T::one())
        } else {
            let e = Normal::new(0.0, sigma)
                .expect("finite sigma")
                .sample(&mut rng);
            (
                T::from_f64_lossy(e),
                T::from_f64_lossy(1.0 / (sigma * sigma)),
            )
        }
    };
    let mut entries = Vec::with_capacity(k + n);
    for (kk, p) in flows.iter().enumerate() {
        let (e, w) = draw(noise.flow);
        entries.push(Measurement {
            kind: MeasurementKind::BranchFlow(kk),
            value: *p + e,
            weight: w,
        });
    }
    for bus in 0..n {
        let (e, w) = draw(noise.injection);
        entries.push(Measurement {
            kind: MeasurementKind::BusInjection(bus),
            value: generation[bus] - loads[bus] + e,
            weight: w,
        });
    }
    Ok(MeasurementSet {
        entries,
        generation: generation.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargestResidual<T> {
    pub index: usize,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeResult<T> {
    /// Estimated angles, reference bus at zero.
    pub angles: Vec<T>,
    pub residuals: Vec<T>,
    /// J(θ̂) = Σ w r².
    pub weighted_residual_norm: T,
    pub lnr: LargestResidual<T>,
    pub bad_data: bool,
}

impl<T: Real> SeResult<T> {
    pub fn estimated_flows(&self, net: &Network) -> Vec<T> {
        net.branches
            .iter()
            .map(|br| (self.angles[br.from] - self.angles[br.to]) / T::from_f64_lossy(br.reactance))
            .collect()
    }

    /// Net injection per bus implied by the estimate, p.u.
    pub fn estimated_injections(&self, net: &Network) -> Vec<T> {
        crate::powerflow::nodal_injections(net, &self.estimated_flows(net))
    }

    /// Metered generation minus estimated injection, MW.
    pub fn estimated_loads_mw(&self, net: &Network, meas: &MeasurementSet<T>) -> Vec<T> {
        let base = T::from_f64_lossy(net.base_mva);
        self.estimated_injections(net)
            .into_iter()
            .zip(&meas.generation)
            .map(|(p, g)| (*g - p) * base)
            .collect()
    }
}

pub fn wls_estimate<T: Real>(
    meas: &MeasurementSet<T>,
    net: &Network,
) -> Result<SeResult<T>, EstimationError> {
    let n = net.bus_count();
    let reference = net.reference_bus;
    if meas.entries.iter().any(|m| !(m.weight > T::zero())) {
        return Err(EstimationError::Input("weights must be positive".into()));
    }
    let h_full = meas.jacobian(net);
    let cols: Vec<usize> = (0..n).filter(|&c| c != reference).collect();
    let r = cols.len();

    let mut gain = Matrix::<T>::zeros(r, r);
    let mut rhs = vec![T::zero(); r];
    for (i, meas_i) in meas.entries.iter().enumerate() {
        let row = h_full.row(i);
        let nz: Vec<usize> = (0..r).filter(|&a| !row[cols[a]].is_zero()).collect();
        for &a in &nz {
            let wa = meas_i.weight * row[cols[a]];
            rhs[a] = rhs[a] + wa * meas_i.value;
            for &b in &nz {
                gain[(a, b)] = gain[(a, b)] + wa * row[cols[b]];
            }
        }
    }
    let lu = Lu::factor(gain).map_err(|_| EstimationError::Unobservable)?;
    let theta_red = lu.solve(&rhs).map_err(|_| EstimationError::Unobservable)?;
    let mut angles = vec![T::zero(); n];
    for (a, &c) in cols.iter().enumerate() {
        angles[c] = theta_red[a];
    }

    let fitted = h_full.mul_vec(&angles).expect("jacobian sized to buses");
    let residuals: Vec<T> = meas
        .entries
        .iter()
        .zip(&fitted)
        .map(|(z, f)| z.value - *f)
        .collect();
    let weighted_residual_norm = meas
        .entries
        .iter()
        .zip(&residuals)
        .fold(T::zero(), |acc, (z, r)| acc + z.weight * *r * *r);

    // Ω_ii = 1/w_i − h_i G⁻¹ h_iᵀ.
    let g_inv = lu.inverse();
    let mut lnr = LargestResidual {
        index: 0,
        value: T::zero(),
    };
    let floor = T::from_f64_lossy(1e-10);
    for (i, (entry, residual)) in meas.entries.iter().zip(&residuals).enumerate() {
        let row = h_full.row(i);
        let nz: Vec<usize> = (0..r).filter(|&a| !row[cols[a]].is_zero()).collect();
        let mut quad = T::zero();
        for &a in &nz {
            for &b in &nz {
                quad = quad + row[cols[a]] * g_inv[(a, b)] * row[cols[b]];
            }
        }
        let omega = T::one() / entry.weight - quad;
        if omega <= floor {
            continue;
        }
        let normalized = num_traits::Float::abs(*residual) / omega.sqrt();
        if normalized > lnr.value {
            lnr = LargestResidual {
                index: i,
                value: normalized,
            };
        }
    }
    let bad_data = lnr.value > T::from_f64_lossy(LNR_THRESHOLD);
    Ok(SeResult {
        angles,
        residuals,
        weighted_residual_norm,
        lnr,
        bad_data,
    })
}
