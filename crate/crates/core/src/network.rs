//! Power network graph: buses, branches, signed incidence matrix, bridge
//! classification and the generator/load bus-splitting normalization.
//!
//! Bus positions are zero-based throughout the library. Generator buses occupy
//! positions `0..n_gen` and load buses `n_gen..n`, so load `j` (zero-based
//! index into a load vector) lives on bus `n_gen + j`. Each bus also carries
//! the external label it had in the case file.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default susceptance (p.u.) of the surrogate branch created when a mixed
/// generator/load bus is split.
pub const DEFAULT_SURROGATE_SUSCEPTANCE: f64 = 1e4;

pub const DEFAULT_BASE_MVA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Generator,
    Load,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bus {
    /// External (case-file) label.
    pub label: u32,
    pub kind: BusKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    /// Zero-based bus positions. The stored direction defines the sign of the
    /// flow on this branch everywhere.
    pub from: usize,
    pub to: usize,
    /// Series susceptance, p.u.
    pub susceptance: f64,
    /// MW
    pub flow_min: f64,
    /// MW
    pub flow_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    base_mva: f64,
    n_gen: usize,
}

impl PowerNetwork {
    pub fn new(buses: Vec<Bus>, branches: Vec<Branch>, base_mva: f64) -> Result<Self> {
        if buses.len() < 2 {
            return Err(Error::InvalidNetwork("need at least two buses".into()));
        }
        if !(base_mva.is_finite() && base_mva > 0.0) {
            return Err(Error::InvalidNetwork(format!("base_mva must be positive, got {base_mva}")));
        }
        let n_gen = buses.iter().take_while(|b| b.kind == BusKind::Generator).count();
        if n_gen == 0 {
            return Err(Error::InvalidNetwork("no generator buses".into()));
        }
        if buses[n_gen..].iter().any(|b| b.kind == BusKind::Generator) {
            return Err(Error::InvalidNetwork(
                "generator buses must precede load buses".into(),
            ));
        }
        let mut labels = BTreeSet::new();
        for b in &buses {
            if !labels.insert(b.label) {
                return Err(Error::InvalidNetwork(format!("duplicate bus label {}", b.label)));
            }
        }
        for (e, br) in branches.iter().enumerate() {
            if br.from >= buses.len() || br.to >= buses.len() {
                return Err(Error::InvalidNetwork(format!("branch {} has an unknown endpoint", e + 1)));
            }
            if br.from == br.to {
                return Err(Error::InvalidNetwork(format!("branch {} is a self-loop", e + 1)));
            }
            if !(br.susceptance.is_finite() && br.susceptance > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "branch {} susceptance must be positive, got {}",
                    e + 1,
                    br.susceptance
                )));
            }
            if !(br.flow_max > br.flow_min) {
                return Err(Error::InvalidNetwork(format!(
                    "branch {} needs flow_max > flow_min ({} <= {})",
                    e + 1,
                    br.flow_max,
                    br.flow_min
                )));
            }
        }
        let edges: Vec<(usize, usize)> = branches.iter().map(|b| (b.from, b.to)).collect();
        if !is_connected(buses.len(), &edges) {
            return Err(Error::NotConnected);
        }
        Ok(PowerNetwork {
            buses,
            branches,
            base_mva,
            n_gen,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_generators(&self) -> usize {
        self.n_gen
    }

    pub fn n_loads(&self) -> usize {
        self.buses.len() - self.n_gen
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn position_of_label(&self, label: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.label == label)
    }

    /// Zero-based load index of the bus with this label, if it is a load bus.
    pub fn load_index_of_label(&self, label: u32) -> Option<usize> {
        self.position_of_label(label)
            .filter(|&p| p >= self.n_gen)
            .map(|p| p - self.n_gen)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.branches.iter().map(|b| (b.from, b.to)).collect()
    }

    /// Branch flow coefficients in MW per radian (`base_mva · b_e`).
    pub fn flow_coefficients(&self) -> Vec<f64> {
        self.branches
            .iter()
            .map(|b| b.susceptance * self.base_mva)
            .collect()
    }

    pub fn incidence(&self) -> Incidence {
        build_incidence(self)
    }

    /// `B Cᵀ` (E × N): maps angles to branch flows in MW.
    pub fn flow_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n_branches(), self.n_buses());
        for (e, (br, w)) in self.branches.iter().zip(self.flow_coefficients()).enumerate() {
            m[(e, br.from)] += w;
            m[(e, br.to)] -= w;
        }
        m
    }

    /// `C B Cᵀ` (N × N), the weighted Laplacian mapping angles to injections.
    pub fn laplacian(&self) -> Matrix {
        let n = self.n_buses();
        let mut m = Matrix::zeros(n, n);
        for (br, w) in self.branches.iter().zip(self.flow_coefficients()) {
            m[(br.from, br.from)] += w;
            m[(br.to, br.to)] += w;
            m[(br.from, br.to)] -= w;
            m[(br.to, br.from)] -= w;
        }
        m
    }

    pub fn is_tree(&self) -> bool {
        self.n_branches() + 1 == self.n_buses()
    }

    pub fn bridges(&self) -> BTreeSet<usize> {
        // connectivity is a constructor invariant
        find_bridges(self).expect("network is connected")
    }
}

/// Signed N × E incidence matrix with entries in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl Incidence {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, bus: usize, branch: usize) -> i8 {
        self.data[bus * self.cols + branch]
    }

    pub fn column(&self, branch: usize) -> Vec<i8> {
        (0..self.rows).map(|i| self.get(i, branch)).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = f64::from(self.get(i, j));
            }
        }
        m
    }
}

/// Column `e` has +1 at the branch's from-bus and −1 at its to-bus.
pub fn build_incidence(network: &PowerNetwork) -> Incidence {
    let (rows, cols) = (network.n_buses(), network.n_branches());
    let mut data = vec![0i8; rows * cols];
    for (e, br) in network.branches().iter().enumerate() {
        data[br.from * cols + e] = 1;
        data[br.to * cols + e] = -1;
    }
    Incidence { rows, cols, data }
}

/// Branch indices whose removal disconnects the network (the set E^I).
pub fn find_bridges(network: &PowerNetwork) -> Result<BTreeSet<usize>> {
    let flags = bridge_flags(network.n_buses(), &network.edges())?;
    Ok(flags
        .into_iter()
        .enumerate()
        .filter_map(|(e, b)| b.then_some(e))
        .collect())
}

pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let adj = adjacency(n, edges);
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &(w, _) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    adj
}

/// One iterative DFS low-link pass over an undirected multigraph. Parallel
/// edges are told apart by edge id, so a doubled line is never a bridge.
pub fn bridge_flags(n: usize, edges: &[(usize, usize)]) -> Result<Vec<bool>> {
    if !is_connected(n, edges) {
        return Err(Error::NotConnected);
    }
    let adj = adjacency(n, edges);
    let mut is_bridge = vec![false; edges.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    // (vertex, edge used to enter it, next adjacency slot)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    if n == 0 {
        return Ok(is_bridge);
    }
    disc[0] = 0;
    low[0] = 0;
    timer += 1;
    stack.push((0, usize::MAX, 0));
    while let Some(frame) = stack.last_mut() {
        let (v, parent_edge, slot) = *frame;
        if slot < adj[v].len() {
            frame.2 += 1;
            let (w, e) = adj[v][slot];
            if e == parent_edge {
                continue;
            }
            if disc[w] == usize::MAX {
                disc[w] = timer;
                low[w] = timer;
                timer += 1;
                stack.push((w, e, 0));
            } else {
                low[v] = low[v].min(disc[w]);
            }
        } else {
            stack.pop();
            if let Some(&(p, _, _)) = stack.last() {
                low[p] = low[p].min(low[v]);
                if low[v] > disc[p] {
                    is_bridge[parent_edge] = true;
                }
            }
        }
    }
    Ok(is_bridge)
}

/// Generator data carried through normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// $/MW
    pub cost: f64,
    /// MW
    pub min: f64,
    /// MW
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawBus {
    pub label: u32,
    pub generator: Option<GeneratorSpec>,
    /// MW; zero means no load.
    pub load: f64,
}

impl RawBus {
    pub fn is_mixed(&self) -> bool {
        self.generator.is_some() && self.load > 0.0
    }
}

/// A network as it appears in a case file: buses in any order, possibly with a
/// generator and a load on the same bus. Branch endpoints are positions in
/// `buses`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawNetwork {
    pub buses: Vec<RawBus>,
    pub branches: Vec<Branch>,
    pub base_mva: f64,
}

/// Result of [`split_mixed_buses`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedNetwork {
    pub network: PowerNetwork,
    /// One per generator bus, in bus order.
    pub generators: Vec<GeneratorSpec>,
    /// One per load bus, in bus order (MW).
    pub loads: Vec<f64>,
    /// For each normalized bus, the raw bus it came from.
    pub origin: Vec<usize>,
    pub split_count: usize,
}

/// Normalizes a raw network so that no bus is both generator and load.
///
/// Each mixed bus becomes a generator bus plus a new load bus joined by a
/// surrogate branch (generator → load) with susceptance
/// `surrogate_susceptance` and flow limits ±(max generation + load), which the
/// flow can never reach. All former neighbors reattach to the new load bus.
/// Generator buses are ordered first, then load buses, each group keeping the
/// raw order; split load buses take the position of their raw bus. A raw
/// network without mixed buses that is already ordered comes back unchanged.
pub fn split_mixed_buses(raw: &RawNetwork, surrogate_susceptance: f64) -> Result<NormalizedNetwork> {
    if !(surrogate_susceptance.is_finite() && surrogate_susceptance > 0.0) {
        return Err(Error::InvalidInput("surrogate susceptance must be positive".into()));
    }
    let edges: Vec<(usize, usize)> = raw.branches.iter().map(|b| (b.from, b.to)).collect();
    if edges.iter().any(|&(a, b)| a >= raw.buses.len() || b >= raw.buses.len()) {
        return Err(Error::InvalidNetwork("branch endpoint out of range".into()));
    }
    if !is_connected(raw.buses.len(), &edges) {
        return Err(Error::NotConnected);
    }
    let mut next_label = raw.buses.iter().map(|b| b.label).max().unwrap_or(0);

    let mut buses = Vec::new();
    let mut generators = Vec::new();
    let mut origin = Vec::new();
    // raw position -> (generator position, position that keeps the neighbors)
    let mut gen_pos = vec![None; raw.buses.len()];
    let mut attach_pos = vec![0usize; raw.buses.len()];

    for (i, rb) in raw.buses.iter().enumerate() {
        if let Some(g) = rb.generator {
            gen_pos[i] = Some(buses.len());
            attach_pos[i] = buses.len();
            buses.push(Bus {
                label: rb.label,
                kind: BusKind::Generator,
            });
            generators.push(g);
            origin.push(i);
        }
    }
    let mut loads = Vec::new();
    let mut split_count = 0;
    for (i, rb) in raw.buses.iter().enumerate() {
        if rb.generator.is_some() && !rb.is_mixed() {
            continue;
        }
        let label = if rb.is_mixed() {
            split_count += 1;
            next_label += 1;
            next_label
        } else {
            rb.label
        };
        attach_pos[i] = buses.len();
        buses.push(Bus {
            label,
            kind: BusKind::Load,
        });
        loads.push(rb.load);
        origin.push(i);
    }

    let mut branches: Vec<Branch> = raw
        .branches
        .iter()
        .map(|b| Branch {
            from: attach_pos[b.from],
            to: attach_pos[b.to],
            ..*b
        })
        .collect();
    for (i, rb) in raw.buses.iter().enumerate() {
        if rb.is_mixed() {
            let g = rb.generator.expect("mixed bus has a generator");
            let cap = g.max + rb.load;
            branches.push(Branch {
                from: gen_pos[i].expect("generator placed"),
                to: attach_pos[i],
                susceptance: surrogate_susceptance,
                flow_min: -cap,
                flow_max: cap,
            });
        }
    }
    let network = PowerNetwork::new(buses, branches, raw.base_mva)?;
    Ok(NormalizedNetwork {
        network,
        generators,
        loads,
        origin,
        split_count,
    })
}
