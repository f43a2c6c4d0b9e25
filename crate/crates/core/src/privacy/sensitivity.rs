use rayon::prelude::*;
use serde::Serialize;

use super::aggregate::{aggregate, RegionPartition};
use crate::error::{Error, Result};
use crate::monotonicity::SweepConfig;
use crate::network::PowerNetwork;
use crate::opf::{opf_operator, solve_opf, OpfInstance};

/// A query on the operating point `(s_g, s_l)`.
pub trait LoadQuery: Sync {
    fn evaluate(&self, network: &PowerNetwork, gen: &[f64], load: &[f64]) -> Result<Vec<f64>>;
}

/// Regional generation and load totals.
#[derive(Debug, Clone)]
pub struct AggregationQuery {
    pub partition: RegionPartition,
}

impl LoadQuery for AggregationQuery {
    fn evaluate(&self, network: &PowerNetwork, gen: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        Ok(aggregate(network, gen, load, &self.partition)?.values)
    }
}

/// The full operating point `[s_g; s_l]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OperatingPointQuery;

impl LoadQuery for OperatingPointQuery {
    fn evaluate(&self, _network: &PowerNetwork, gen: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        Ok(gen.iter().chain(load).copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityWitness {
    pub base: Vec<f64>,
    pub load_index: usize,
    pub omega: f64,
}

/// Largest L1 change of a query over the swept neighboring load pairs. Like
/// the monotonicity sweep, this is a lower bound on the true sensitivity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityEstimate {
    pub delta1: f64,
    pub pairs_evaluated: usize,
    pub witness: SensitivityWitness,
}

impl SensitivityEstimate {
    pub fn replay<Q: LoadQuery + ?Sized>(&self, instance: &OpfInstance, query: &Q) -> Result<f64> {
        let w = &self.witness;
        let mut bumped = w.base.clone();
        bumped[w.load_index] += w.omega;
        l1_change(instance, query, &w.base, &bumped)
    }
}

fn l1_change<Q: LoadQuery + ?Sized>(instance: &OpfInstance, query: &Q, a: &[f64], b: &[f64]) -> Result<f64> {
    let net = instance.network();
    let qa = query.evaluate(net, &opf_operator(instance, a)?, a)?;
    let qb = query.evaluate(net, &opf_operator(instance, b)?, b)?;
    Ok(qa.iter().zip(&qb).map(|(x, y)| (x - y).abs()).sum())
}

/// Sweeps neighboring pairs `(β, β + ω e_u)` with `ω ≤ sweep.delta` and
/// returns the largest `‖q(β + ω e_u) − q(β)‖₁`, where the query sees both the
/// OPF generation response and the load change.
pub fn estimate_l1_sensitivity<Q: LoadQuery + ?Sized>(
    instance: &OpfInstance,
    query: &Q,
    sweep: &SweepConfig,
) -> Result<SensitivityEstimate> {
    let net = instance.network();
    let nl = net.n_loads();
    sweep.validate(nl)?;
    let bases = sweep.all_base_loads()?;
    for b in &bases {
        instance.check_load(b)?;
    }
    let indices = sweep.load_indices(nl);
    let omegas = sweep.increments();

    let base_values: Vec<Option<Vec<f64>>> = bases
        .par_iter()
        .map(|b| match solve_opf(instance, b) {
            Ok(s) => query.evaluate(net, &s.gen, b).map(Some),
            Err(Error::OpfInfeasible) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for (bi, v) in base_values.iter().enumerate() {
        if v.is_some() {
            for &u in &indices {
                for &w in &omegas {
                    tasks.push((bi, u, w));
                }
            }
        }
    }
    let values: Vec<Option<f64>> = tasks
        .par_iter()
        .map(|&(bi, u, w)| {
            let mut load = bases[bi].clone();
            load[u] += w;
            let gen = match opf_operator(instance, &load) {
                Ok(g) => g,
                Err(Error::OpfInfeasible) => return Ok(None),
                Err(e) => return Err(e),
            };
            let q = query.evaluate(net, &gen, &load)?;
            let base = base_values[bi].as_ref().expect("feasible base");
            Ok(Some(q.iter().zip(base).map(|(x, y)| (x - y).abs()).sum()))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (t, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
    }
    let (t, delta1) = best.ok_or(Error::NoFeasiblePerturbation)?;
    let (bi, u, w) = tasks[t];
    Ok(SensitivityEstimate {
        delta1,
        pairs_evaluated: values.iter().filter(|v| v.is_some()).count(),
        witness: SensitivityWitness {
            base: bases[bi].clone(),
            load_index: u,
            omega: w,
        },
    })
}
