//! Monotone and (δ, ε)-monotone behaviour of the OPF operator.
//!
//! A system is monotone when raising any single load never lowers any
//! generator. It is (δ, ε)-monotone when raising a single load by at most δ
//! lowers generation in total by at most ε. The topological test (binding
//! branches are all bridges) certifies monotonicity; [`estimate_pair`]
//! measures ε by sweeping single-load increments and therefore only ever
//! yields a lower bound on the true value.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::opf::{is_smooth_point, opf_operator, solve_opf, OpfInstance};
use crate::privacy::rng::{stream, unit_uniform};

/// `Σᵢ min(0, after_i − before_i)`
pub fn negative_sum(after: &[f64], before: &[f64]) -> Result<f64> {
    if after.len() != before.len() {
        return Err(Error::DimensionMismatch {
            what: "generation vectors",
            expected: before.len(),
            got: after.len(),
        });
    }
    Ok(after.iter().zip(before).map(|(a, b)| (a - b).min(0.0)).sum())
}

/// Checks that every branch binding at a sampled smooth point is a bridge.
///
/// Trees return `true` without solving anything. Infeasible and nonsmooth
/// samples are skipped; if nothing usable remains the call fails.
pub fn topological_monotone_check(instance: &OpfInstance, samples: &[Vec<f64>]) -> Result<bool> {
    let net = instance.network();
    if net.is_tree() {
        return Ok(true);
    }
    let bridges = net.bridges();
    let mut usable = 0usize;
    let mut feasible = 0usize;
    for load in samples {
        let sol = match solve_opf(instance, load) {
            Ok(s) => s,
            Err(Error::OpfInfeasible) => continue,
            Err(e) => return Err(e),
        };
        feasible += 1;
        if !is_smooth_point(instance, load, None)? {
            continue;
        }
        usable += 1;
        if !sol.binding_branches.is_subset(&bridges) {
            return Ok(false);
        }
    }
    if feasible == 0 {
        return Err(Error::NoUsableSample("every sample load is infeasible".into()));
    }
    if usable == 0 {
        return Err(Error::NoUsableSample("every feasible sample is a nonsmooth point".into()));
    }
    Ok(true)
}

/// Latin-hypercube augmentation of the base-load set.
#[derive(Debug, Clone, PartialEq)]
pub struct LatinHypercube {
    pub count: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub seed: u64,
}

impl LatinHypercube {
    /// `count` points in the box `[lower, upper]`; each coordinate visits
    /// every one of the `count` equal strata exactly once.
    pub fn samples(&self) -> Result<Vec<Vec<f64>>> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::DimensionMismatch {
                what: "sampling box",
                expected: self.lower.len(),
                got: self.upper.len(),
            });
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(Error::InvalidInput("sampling box needs finite lower ≤ upper".into()));
        }
        let n = self.count;
        let mut rng = stream(self.seed, 0);
        let mut out = vec![vec![0.0; self.lower.len()]; n];
        for (d, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            let mut strata: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = (unit_uniform(&mut rng) * (i + 1) as f64) as usize;
                strata.swap(i, j.min(i));
            }
            for (point, s) in out.iter_mut().zip(strata) {
                let t = (s as f64 + unit_uniform(&mut rng)) / n as f64;
                point[d] = lo + t * (hi - lo);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base_loads: Vec<Vec<f64>>,
    /// MW, must be positive.
    pub delta: f64,
    /// Increments per load index.
    pub steps: usize,
    /// Zero-based load indices to perturb; `None` means every load.
    pub indices: Option<Vec<usize>>,
    pub augment: Option<LatinHypercube>,
}

pub const DEFAULT_STEPS: usize = 8;

/// Total decreases at or below this (MW) are solver round-off and reported as
/// ε = 0.
pub const EPSILON_FLOOR: f64 = 1e-9;

impl SweepConfig {
    pub fn new(base_loads: Vec<Vec<f64>>, delta: f64) -> Self {
        SweepConfig {
            base_loads,
            delta,
            steps: DEFAULT_STEPS,
            indices: None,
            augment: None,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_indices(mut self, indices: Vec<usize>) -> Self {
        self.indices = Some(indices);
        self
    }

    pub fn with_augmentation(mut self, lhs: LatinHypercube) -> Self {
        self.augment = Some(lhs);
        self
    }

    /// Increments `δ·2^{−(steps−1−k)}` for `k = 0..steps`; the last one is δ.
    pub fn increments(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|k| self.delta * 0.5_f64.powi((self.steps - 1 - k) as i32))
            .collect()
    }

    /// Base loads followed by the Latin-hypercube points, if any.
    pub fn all_base_loads(&self) -> Result<Vec<Vec<f64>>> {
        let mut out = self.base_loads.clone();
        if let Some(lhs) = &self.augment {
            out.extend(lhs.samples()?);
        }
        Ok(out)
    }

    pub(crate) fn validate(&self, n_loads: usize) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {}", self.delta)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be at least 1".into()));
        }
        if let Some(idx) = &self.indices {
            if idx.is_empty() {
                return Err(Error::InvalidInput("empty load index list".into()));
            }
            if let Some(&bad) = idx.iter().find(|&&u| u >= n_loads) {
                return Err(Error::InvalidInput(format!("load index {bad} out of range (N_L = {n_loads})")));
            }
        }
        if self.base_loads.is_empty() && self.augment.is_none() {
            return Err(Error::InvalidInput("sweep has no base loads".into()));
        }
        Ok(())
    }

    pub(crate) fn load_indices(&self, n_loads: usize) -> Vec<usize> {
        self.indices.clone().unwrap_or_else(|| (0..n_loads).collect())
    }
}

/// The evaluation that attains the reported ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub base: Vec<f64>,
    /// Zero-based load index.
    pub load_index: usize,
    /// MW
    pub omega: f64,
    /// `negative_sum(OPF(base + ω e_u), OPF(base))`, never positive.
    pub negative_sum: f64,
}

impl Witness {
    /// Re-evaluates the OPF operator at both ends and returns the negative sum.
    pub fn replay(&self, instance: &OpfInstance) -> Result<f64> {
        let before = opf_operator(instance, &self.base)?;
        let mut bumped = self.base.clone();
        bumped[self.load_index] += self.omega;
        let after = opf_operator(instance, &bumped)?;
        negative_sum(&after, &before)
    }
}

/// Result of a sweep. `epsilon` is the largest total generator decrease seen,
/// so it is a lower bound on the true ε for this δ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub delta: f64,
    pub epsilon: f64,
    pub ratio: f64,
    pub witness: Witness,
    pub points_evaluated: usize,
    /// Infeasible base loads or perturbations, not evaluated.
    pub points_skipped: usize,
    /// Binding branches at every feasible base load are bridges.
    pub topological_monotone: bool,
}

impl MonotonicityReport {
    pub const CAVEAT: &'static str =
        "epsilon is the worst case found by the sweep and is a lower bound on the true value";
}

/// Estimates the monotonicity pair (δ, ε) by perturbing one load at a time.
///
/// For every feasible base load β, every selected load index u and every
/// increment ω of the grid, evaluates
/// `ε(β, u, ω) = −negative_sum(OPF(β + ω e_u), OPF(β))` and keeps the
/// maximum. Ties go to the earliest (base, index, increment) tuple, so the
/// result does not depend on thread scheduling.
pub fn estimate_pair(instance: &OpfInstance, sweep: &SweepConfig) -> Result<MonotonicityReport> {
    let nl = instance.network().n_loads();
    sweep.validate(nl)?;
    let bases = sweep.all_base_loads()?;
    for b in &bases {
        instance.check_load(b)?;
    }
    let indices = sweep.load_indices(nl);
    let omegas = sweep.increments();
    let bridges = instance.network().bridges();

    let base_solutions: Vec<Option<crate::opf::OpfSolution>> = bases
        .par_iter()
        .map(|b| match solve_opf(instance, b) {
            Ok(s) => Ok(Some(s)),
            Err(Error::OpfInfeasible) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for (bi, sol) in base_solutions.iter().enumerate() {
        if sol.is_some() {
            for &u in &indices {
                for &w in &omegas {
                    tasks.push((bi, u, w));
                }
            }
        }
    }
    let skipped_bases = base_solutions.iter().filter(|s| s.is_none()).count();
    let topological_monotone = base_solutions
        .iter()
        .flatten()
        .all(|s| s.binding_branches.is_subset(&bridges));

    let values: Vec<Option<f64>> = tasks
        .par_iter()
        .map(|&(bi, u, w)| {
            let mut load = bases[bi].clone();
            load[u] += w;
            match opf_operator(instance, &load) {
                Ok(after) => {
                    let before = &base_solutions[bi].as_ref().expect("feasible base").gen;
                    negative_sum(&after, before).map(Some)
                }
                Err(Error::OpfInfeasible) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (t, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((t, v));
            }
        }
    }
    let evaluated = values.iter().filter(|v| v.is_some()).count();
    let skipped = skipped_bases * indices.len() * omegas.len() + (values.len() - evaluated);
    let (t, neg) = best.ok_or(Error::NoFeasiblePerturbation)?;
    let (bi, u, w) = tasks[t];
    let epsilon = if -neg <= EPSILON_FLOOR { 0.0 } else { -neg };
    Ok(MonotonicityReport {
        delta: sweep.delta,
        epsilon,
        ratio: epsilon / sweep.delta,
        witness: Witness {
            base: bases[bi].clone(),
            load_index: u,
            omega: w,
            negative_sum: neg,
        },
        points_evaluated: evaluated,
        points_skipped: skipped,
        topological_monotone,
    })
}
