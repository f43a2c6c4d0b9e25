//! Built-in scenarios: a radial tree, the IEEE 9-bus topology and an N-bus ring.

use super::case::{BranchSpec, BusKindSpec, BusSpec, CaseFile, GeneratorEntry, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};

fn gen_bus(id: u32) -> BusSpec {
    BusSpec {
        id,
        kind: BusKindSpec::Generator,
        load_mw: None,
    }
}

fn load_bus(id: u32, mw: f64) -> BusSpec {
    BusSpec {
        id,
        kind: BusKindSpec::Load,
        load_mw: Some(mw),
    }
}

fn line(from: u32, to: u32, susceptance_pu: f64, limit: f64) -> BranchSpec {
    BranchSpec {
        from,
        to,
        susceptance_pu,
        flow_min_mw: -limit,
        flow_max_mw: limit,
    }
}

fn generator(bus: u32, cost: f64, min: f64, max: f64) -> GeneratorEntry {
    GeneratorEntry {
        bus,
        cost_per_mw: cost,
        min_mw: min,
        max_mw: max,
    }
}

/// Eight-bus tree with two generators. Branch 3–6 (limit 50 MW) is the only
/// binding line and splits the tree into a left part {1, 3, 4, 5} and a right
/// part {2, 6, 7, 8}, each with one unsaturated generator. Generator 1 is the
/// cheap one, so it exports through the bottleneck.
pub fn radial() -> CaseFile {
    let loads = [(3, 30.0), (4, 40.0), (5, 30.0), (6, 30.0), (7, 50.0), (8, 40.0)];
    let mut buses = vec![gen_bus(1), gen_bus(2)];
    buses.extend(loads.iter().map(|&(id, mw)| load_bus(id, mw)));
    let branches = vec![
        line(1, 3, 10.0, 500.0),
        line(3, 4, 10.0, 500.0),
        line(3, 5, 10.0, 500.0),
        line(3, 6, 10.0, 50.0),
        line(2, 6, 10.0, 500.0),
        line(6, 7, 10.0, 500.0),
        line(6, 8, 10.0, 500.0),
    ];
    CaseFile {
        schema_version: SCHEMA_VERSION,
        name: "radial".into(),
        base_mva: 100.0,
        buses,
        generators: vec![generator(1, 10.0, 0.0, 300.0), generator(2, 30.0, 0.0, 300.0)],
        branches,
        regions: Some(vec![vec![1, 3, 4, 5], vec![2, 6, 7, 8]]),
    }
}

/// The IEEE 9-bus topology with the usual branch reactances (susceptance
/// `1/x`) and linear costs.
///
/// Generator 1 is cheapest but capped at 100 MW, so it sits at its upper
/// limit, and line 8–9 is held at 60 MW. Generator 2 is then marginal, and
/// extra load on bus 9 has to be served partly by generator 3 through the
/// 4–9 path; generator 2 backs off to keep 8–9 at its limit.
/// Buses 4, 6 and 8 carry a token 1 MW because every load must be positive.
pub fn case9() -> CaseFile {
    let mut buses = vec![gen_bus(1), gen_bus(2), gen_bus(3)];
    buses.extend(
        [(4, 1.0), (5, 90.0), (6, 1.0), (7, 100.0), (8, 1.0), (9, 125.0)]
            .iter()
            .map(|&(id, mw)| load_bus(id, mw)),
    );
    let branches = vec![
        line(1, 4, 1.0 / 0.0576, 250.0),
        line(4, 5, 1.0 / 0.092, 250.0),
        line(5, 6, 1.0 / 0.17, 150.0),
        line(3, 6, 1.0 / 0.0586, 300.0),
        line(6, 7, 1.0 / 0.1008, 150.0),
        line(7, 8, 1.0 / 0.072, 250.0),
        line(8, 2, 1.0 / 0.0625, 250.0),
        line(8, 9, 1.0 / 0.161, 60.0),
        line(9, 4, 1.0 / 0.085, 250.0),
    ];
    CaseFile {
        schema_version: SCHEMA_VERSION,
        name: "case9".into(),
        base_mva: 100.0,
        buses,
        generators: vec![
            generator(1, 1.0, 10.0, 100.0),
            generator(2, 1.2, 10.0, 300.0),
            generator(3, 5.0, 10.0, 270.0),
        ],
        branches,
        regions: Some(vec![vec![1, 2, 4, 5, 6], vec![3, 7, 8, 9]]),
    }
}

pub const RING_LOAD_MW: f64 = 50.0;

/// `n`-bus ring `1–2–…–n–1` with unit susceptances, generators on buses 1 and
/// 2 and 50 MW on every other bus.
///
/// Generator 2 is cheaper. Shifting output from generator 1 to generator 2
/// pushes more flow along 2–3–4–5, and line 4–5 is given a limit equal to its
/// flow when generator 2 carries three quarters of the load. That makes it the
/// only binding line. (An even split would leave no flow on 4–5 when n = 6.)
/// Raising the load on bus 5 by ω must then be met with generator 1 rising by
/// `(n−3)ω` and generator 2 falling by `(n−4)ω` to keep line 4–5 at its limit.
pub fn ring(n: usize) -> Result<CaseFile> {
    if n < 6 {
        return Err(Error::InvalidInput(format!("ring needs at least 6 buses, got {n}")));
    }
    let total = (n - 2) as f64 * RING_LOAD_MW;
    let big = 10.0 * total;
    let mut buses = vec![gen_bus(1), gen_bus(2)];
    buses.extend((3..=n as u32).map(|id| load_bus(id, RING_LOAD_MW)));
    let mut branches: Vec<BranchSpec> = (1..=n as u32)
        .map(|k| line(k, k % n as u32 + 1, 1.0, big))
        .collect();

    let base_mva = 100.0;
    let mut injection = vec![-RING_LOAD_MW; n];
    injection[0] = 0.25 * total;
    injection[1] = 0.75 * total;
    let limit = ring_flow(n, base_mva, &injection, 3).abs();
    branches[3].flow_min_mw = -limit;
    branches[3].flow_max_mw = limit;

    let half = n / 2 + 1;
    let region_b: Vec<u32> = (2..=half as u32).collect();
    let mut region_a = vec![1];
    region_a.extend(half as u32 + 1..=n as u32);
    Ok(CaseFile {
        schema_version: SCHEMA_VERSION,
        name: format!("ring{n}"),
        base_mva,
        buses,
        generators: vec![generator(1, 2.0, 0.0, 2.0 * total), generator(2, 1.0, 0.0, 2.0 * total)],
        branches,
        regions: Some(vec![region_a, region_b]),
    })
}

/// DC flow (MW) on ring edge `k → k+1` (zero-based `k`) for bus injections in
/// MW, unit susceptances.
fn ring_flow(n: usize, base_mva: f64, injection: &[f64], edge: usize) -> f64 {
    // Reduced Laplacian with bus 1 as the angle reference.
    let mut lap = Matrix::zeros(n - 1, n - 1);
    for k in 0..n {
        let (a, b) = (k, (k + 1) % n);
        for (i, j, v) in [(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)] {
            if i > 0 && j > 0 {
                lap[(i - 1, j - 1)] += base_mva * v;
            }
        }
    }
    let theta_red = solve(&lap, &injection[1..]).expect("ring Laplacian is nonsingular");
    let theta = |i: usize| if i == 0 { 0.0 } else { theta_red[i - 1] };
    base_mva * (theta(edge) - theta((edge + 1) % n))
}

/// Fixture by name; `ring` reads `n`.
pub fn gen_fixture(name: &str, n: Option<usize>) -> Result<CaseFile> {
    match name {
        "radial" => Ok(radial()),
        "case9" => Ok(case9()),
        "ring" => ring(n.unwrap_or(10)),
        other => Err(Error::InvalidInput(format!(
            "unknown fixture {other:?} (expected radial, case9 or ring)"
        ))),
    }
}
