#![allow(dead_code)]

use opfdp::linalg::{solve, Matrix};
use opfdp::lp::LinearProgram;
use opfdp::network::{Branch, Bus, BusKind, PowerNetwork};
use opfdp::opf::OpfInstance;
use opfdp::privacy::rng::{stream, unit_uniform};
use rand_chacha::ChaCha20Rng;

pub struct Gen(ChaCha20Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(stream(seed, 0))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * unit_uniform(&mut self.0)
    }

    /// Integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + ((unit_uniform(&mut self.0) * (hi - lo + 1) as f64) as usize).min(hi - lo)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        unit_uniform(&mut self.0) < p
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.int(0, i);
            v.swap(i, j);
        }
    }
}

/// Random connected multigraph: a random spanning tree plus extra edges,
/// parallel edges allowed.
pub fn random_connected_graph(g: &mut Gen, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    g.shuffle(&mut order);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = g.int(0, i - 1);
        edges.push((order[i], order[j]));
    }
    for _ in 0..extra {
        let a = g.int(0, n - 1);
        let mut b = g.int(0, n - 1);
        while b == a {
            b = g.int(0, n - 1);
        }
        edges.push((a, b));
    }
    g.shuffle(&mut edges);
    edges
}

/// Connectivity by breadth-first search, skipping edge `skip`.
pub fn connected_without(n: usize, edges: &[(usize, usize)], skip: Option<usize>) -> bool {
    let mut adj = vec![Vec::new(); n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        if Some(e) != skip {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Random tree OPF instance with `n` buses, generators first.
pub fn random_tree_instance(g: &mut Gen, n: usize) -> OpfInstance {
    let ng = g.int(1, (n - 1).min(4));
    let buses: Vec<Bus> = (0..n)
        .map(|i| Bus {
            label: i as u32 + 1,
            kind: if i < ng { BusKind::Generator } else { BusKind::Load },
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    g.shuffle(&mut order);
    let branches = (1..n)
        .map(|i| {
            let j = g.int(0, i - 1);
            let limit = g.uniform(40.0, 400.0);
            Branch {
                from: order[j],
                to: order[i],
                susceptance: g.uniform(1.0, 20.0),
                flow_min: -limit,
                flow_max: limit,
            }
        })
        .collect();
    let net = PowerNetwork::new(buses, branches, 100.0).expect("valid tree");
    let cost = (0..ng).map(|_| g.uniform(1.0, 50.0)).collect();
    let gmin = (0..ng).map(|_| g.uniform(0.0, 2.0)).collect();
    let gmax = (0..ng).map(|_| g.uniform(150.0, 600.0)).collect();
    OpfInstance::new(net, cost, gmin, gmax).expect("valid instance")
}

pub fn random_loads(g: &mut Gen, n_loads: usize) -> Vec<f64> {
    (0..n_loads).map(|_| g.uniform(1.0, 15.0)).collect()
}

/// Random bounded LP with a known feasible point.
pub fn random_bounded_lp(g: &mut Gen) -> LinearProgram {
    let n = g.int(1, 5);
    let m_eq = g.int(0, n.min(2));
    let m_rows = g.int(0, 8 - m_eq);
    let lower: Vec<f64> = (0..n).map(|_| g.uniform(-5.0, 0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + g.uniform(0.5, 6.0)).collect();
    let x0: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| g.uniform(*l, *u)).collect();
    let row = |g: &mut Gen| -> Vec<f64> {
        (0..n)
            .map(|_| if g.chance(0.2) { 0.0 } else { g.uniform(-3.0, 3.0) })
            .collect()
    };
    let a_rows: Vec<Vec<f64>> = loop {
        let rows: Vec<Vec<f64>> = (0..m_eq).map(|_| row(g)).collect();
        if m_eq == 0 || opfdp::linalg::rank(&Matrix::from_rows(&rows), 1e-9) == m_eq {
            break rows;
        }
    };
    let b: Vec<f64> = a_rows.iter().map(|r| r.iter().zip(&x0).map(|(a, x)| a * x).sum()).collect();
    let g_rows: Vec<Vec<f64>> = (0..m_rows).map(|_| row(g)).collect();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for r in &g_rows {
        let v: f64 = r.iter().zip(&x0).map(|(a, x)| a * x).sum();
        lo.push(if g.chance(0.3) { f64::NEG_INFINITY } else { v - g.uniform(0.0, 2.0) });
        hi.push(if g.chance(0.3) { f64::INFINITY } else { v + g.uniform(0.0, 2.0) });
    }
    let cost = (0..n).map(|_| g.uniform(-5.0, 5.0)).collect();
    let as_matrix = |rows: &[Vec<f64>]| {
        if rows.is_empty() {
            Matrix::zeros(0, n)
        } else {
            Matrix::from_rows(rows)
        }
    };
    LinearProgram::new(cost)
        .with_equalities(as_matrix(&a_rows), b)
        .with_rows(as_matrix(&g_rows), lo, hi)
        .with_bounds(lower, upper)
}

/// Minimum objective over all basic feasible solutions, by enumerating every
/// choice of `n` active constraints.
pub fn brute_force_optimum(lp: &LinearProgram) -> Option<f64> {
    let n = lp.cost.len();
    // Candidate hyperplanes a·x = v, equalities first.
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    let m_eq = lp.eq_matrix.rows();
    for i in 0..m_eq {
        planes.push((lp.eq_matrix.row(i).to_vec(), lp.eq_rhs[i]));
    }
    for i in 0..lp.ineq_matrix.rows() {
        for v in [lp.ineq_lower[i], lp.ineq_upper[i]] {
            if v.is_finite() {
                planes.push((lp.ineq_matrix.row(i).to_vec(), v));
            }
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.var_lower[j]));
        planes.push((e, lp.var_upper[j]));
    }
    let feasible = |x: &[f64]| {
        let tol = 1e-9;
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        (0..m_eq).all(|i| (dot(lp.eq_matrix.row(i)) - lp.eq_rhs[i]).abs() <= tol * 10.0)
            && (0..lp.ineq_matrix.rows()).all(|i| {
                let v = dot(lp.ineq_matrix.row(i));
                v >= lp.ineq_lower[i] - tol && v <= lp.ineq_upper[i] + tol
            })
            && (0..n).all(|j| x[j] >= lp.var_lower[j] - tol && x[j] <= lp.var_upper[j] + tol)
    };
    let mut best: Option<f64> = None;
    let free: Vec<usize> = (m_eq..planes.len()).collect();
    let k = n.checked_sub(m_eq)?;
    let mut pick = Vec::with_capacity(k);
    fn rec(
        free: &[usize],
        start: usize,
        k: usize,
        pick: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == k {
            visit(pick);
            return;
        }
        for i in start..free.len() {
            pick.push(free[i]);
            rec(free, i + 1, k, pick, visit);
            pick.pop();
        }
    }
    let mut visit = |chosen: &[usize]| {
        let rows: Vec<usize> = (0..m_eq).chain(chosen.iter().copied()).collect();
        let a = Matrix::from_rows(&rows.iter().map(|&r| planes[r].0.clone()).collect::<Vec<_>>());
        let b: Vec<f64> = rows.iter().map(|&r| planes[r].1).collect();
        if opfdp::linalg::rank(&a, 1e-10) < n {
            return;
        }
        if let Some(x) = solve(&a, &b) {
            if feasible(&x) {
                let obj: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
    };
    rec(&free, 0, k, &mut pick, &mut visit);
    best
}
