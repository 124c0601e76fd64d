//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use fdid_core::case_io::{parse_matpower, validate_case, Network};
use fdid_core::lp::{LinearProgram, Relation, Sense};
use fdid_core::{AttackResult, AttackSpec};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn case118() -> Network {
    fdid_core::load_network(data_path("case118.m"), &[]).expect("bundled 118-bus case")
}

pub fn triangle() -> Network {
    let raw =
        parse_matpower(&std::fs::read_to_string(data_path("case3_triangle.m")).unwrap()).unwrap();
    validate_case(&raw, &[]).unwrap()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(p, col);
        b.swap(p, col);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (r, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
                b[col + 1 + r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// DC flows from the full susceptance matrix with the reference row and
/// column struck out, assembled without the library's model.
pub fn reference_dc_flows(net: &Network, injections: &[f64]) -> Vec<f64> {
    let n = net.bus_count();
    let r = net.reference_bus;
    let mut b = vec![vec![0.0; n]; n];
    for br in &net.branches {
        let y = 1.0 / br.reactance;
        b[br.from][br.from] += y;
        b[br.to][br.to] += y;
        b[br.from][br.to] -= y;
        b[br.to][br.from] -= y;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != r).collect();
    let a: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| b[i][j]).collect())
        .collect();
    let rhs: Vec<f64> = keep.iter().map(|&i| injections[i]).collect();
    let theta_red = solve_dense(a, rhs).expect("connected network");
    let mut theta = vec![0.0; n];
    for (k, &i) in keep.iter().enumerate() {
        theta[i] = theta_red[k];
    }
    net.branches
        .iter()
        .map(|br| (theta[br.from] - theta[br.to]) / br.reactance)
        .collect()
}

/// `a·x ≤ b` rows describing a polyhedron.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl Polyhedron {
    pub fn from_lp(lp: &LinearProgram<f64>) -> Self {
        let n = lp.variables.len();
        let mut rows = Vec::new();
        for c in &lp.constraints {
            match c.relation {
                Relation::Le => rows.push((c.coefficients.clone(), c.rhs)),
                Relation::Ge => rows.push((c.coefficients.iter().map(|a| -a).collect(), -c.rhs)),
                Relation::Eq => {
                    rows.push((c.coefficients.clone(), c.rhs));
                    rows.push((c.coefficients.iter().map(|a| -a).collect(), -c.rhs));
                }
            }
        }
        for (j, v) in lp.variables.iter().enumerate() {
            let mut e = vec![0.0; n];
            if let Some(u) = v.upper {
                e[j] = 1.0;
                rows.push((e.clone(), u));
            }
            if let Some(l) = v.lower {
                e[j] = -1.0;
                rows.push((e, -l));
            }
        }
        Self { rows }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.rows
            .iter()
            .all(|(a, b)| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() <= b + tol)
    }
}

fn combinations(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best objective over all vertices of a bounded polyhedron; `None` when
/// no vertex is feasible.
pub fn vertex_enumeration(
    poly: &Polyhedron,
    objective: &[f64],
    sense: Sense,
) -> Option<(f64, Vec<f64>)> {
    let n = objective.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    if n == 0 {
        return poly.contains(&[], 1e-9).then(|| (0.0, vec![]));
    }
    combinations(poly.rows.len(), n, |subset| {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| poly.rows[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| poly.rows[i].1).collect();
        if let Some(x) = solve_dense(a, b) {
            if poly.contains(&x, 1e-7) {
                let v: f64 = objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
                let better = match (&best, sense) {
                    (None, _) => true,
                    (Some((bv, _)), Sense::Maximize) => v > *bv,
                    (Some((bv, _)), Sense::Minimize) => v < *bv,
                };
                if better {
                    best = Some((v, x));
                }
            }
        }
    });
    best
}

pub const ATTACK_TOL: f64 = 1e-7;

/// Re-checks every attack constraint from the raw network data.
pub fn audit_attack(net: &Network, spec: &AttackSpec, r: &AttackResult) {
    let base = net.base_mva;
    assert_eq!(r.c[net.reference_bus], 0.0);
    for (k, br) in net.branches.iter().enumerate() {
        let expected = (r.c[br.to] - r.c[br.from]) / br.reactance;
        assert!(
            (r.delta_p[k] - expected).abs() < ATTACK_TOL,
            "flow delta on branch {}",
            br.ordinal
        );
        assert!((r.cyber_flows[k] - (spec.base_flows[k] - r.delta_p[k])).abs() < ATTACK_TOL);
    }
    let mut divergence = vec![0.0; net.bus_count()];
    for (k, br) in net.branches.iter().enumerate() {
        divergence[br.from] += r.delta_p[k];
        divergence[br.to] -= r.delta_p[k];
    }
    for bus in &net.buses {
        let n = bus.index;
        if bus.is_load_bus {
            assert!((r.delta_d[n] - divergence[n] * base).abs() < ATTACK_TOL * base);
            assert!(r.delta_d[n].abs() <= spec.load_shift * spec.base_loads[n] + ATTACK_TOL * base);
        } else {
            assert!(
                divergence[n].abs() < ATTACK_TOL,
                "non-load bus {} changed",
                bus.external_id
            );
            assert_eq!(r.delta_d[n], 0.0);
        }
        assert!(
            (r.tampered_loads[n] - (spec.base_loads[n] + r.delta_d[n])).abs() < ATTACK_TOL * base
        );
    }
    for (c, s) in r.c.iter().zip(&r.s) {
        assert!(c.abs() <= s + ATTACK_TOL);
    }
    assert!(r.s.iter().sum::<f64>() <= spec.l1_limit + ATTACK_TOL);
    let l = r.target;
    let expected = spec.base_flows[l].signum() * r.delta_p[l];
    assert!((r.objective - expected).abs() < ATTACK_TOL);
    assert!(r.objective >= -ATTACK_TOL);
    let true_total: f64 = spec.base_loads.iter().sum();
    let cyber_total: f64 = r.tampered_loads.iter().sum();
    assert!((true_total - cyber_total).abs() < 1e-6);
}

/// Objective of the triangle attack from the hand-reduced (c₂, c₃) polytope.
pub fn triangle_attack_oracle(net: &Network, spec: &AttackSpec) -> f64 {
    let x = |k: usize| net.branches[k].reactance;
    let base = net.base_mva;
    // Δp_k as a linear function of (c₂, c₃) with c₁ = 0.
    let dp = |k: usize| -> [f64; 2] {
        let br = &net.branches[k];
        let mut a = [0.0; 2];
        if br.to > 0 {
            a[br.to - 1] += 1.0 / x(k);
        }
        if br.from > 0 {
            a[br.from - 1] -= 1.0 / x(k);
        }
        a
    };
    let div = |n: usize| -> [f64; 2] {
        let mut a = [0.0; 2];
        for (k, br) in net.branches.iter().enumerate() {
            let d = dp(k);
            let s = if br.from == n {
                1.0
            } else if br.to == n {
                -1.0
            } else {
                0.0
            };
            a[0] += s * d[0];
            a[1] += s * d[1];
        }
        a
    };
    let mut rows = Vec::new();
    let z = div(0);
    rows.push((z.to_vec(), 0.0));
    rows.push((vec![-z[0], -z[1]], 0.0));
    for n in [1, 2] {
        let a = div(n);
        let cap = spec.load_shift * spec.base_loads[n] / base;
        rows.push((a.to_vec(), cap));
        rows.push((vec![-a[0], -a[1]], cap));
    }
    for (s2, s3) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        rows.push((vec![s2, s3], spec.l1_limit));
    }
    let l = net.branch_index(spec.target_branch).unwrap();
    let sign = spec.base_flows[l].signum();
    let obj: Vec<f64> = dp(l).iter().map(|v| v * sign).collect();
    vertex_enumeration(&Polyhedron { rows }, &obj, Sense::Maximize)
        .unwrap()
        .0
}
