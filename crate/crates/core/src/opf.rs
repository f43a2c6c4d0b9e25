//! DC optimal power flow.
//!
//! ```text
//! minimize    fᵀ s_g
//! subject to  θ_slack = 0
//!             C B Cᵀ θ = [s_g; −s_l]
//!             s_g_min ≤ s_g ≤ s_g_max
//!             p_min ≤ B Cᵀ θ ≤ p_max
//! ```
//!
//! The slack angle (bus position 0) is eliminated, so the LP decision vector
//! is `(s_g, θ_1..θ_{N−1})`. Power balance rows are equalities and branch
//! flows are two-sided row constraints.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Matrix};
use crate::lp::{self, KktResiduals, LinearProgram, LpStatus, Tolerances};
use crate::network::PowerNetwork;

/// A generator or branch counts as binding when within this many MW of a limit.
pub const DEFAULT_BIND_TOL: f64 = 1e-7;
/// Multipliers above this are counted as nonzero.
pub const DEFAULT_DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpfOptions {
    pub lp: Tolerances,
    pub bind_tol: f64,
    pub dual_tol: f64,
}

impl Default for OpfOptions {
    fn default() -> Self {
        OpfOptions {
            lp: Tolerances::default(),
            bind_tol: DEFAULT_BIND_TOL,
            dual_tol: DEFAULT_DUAL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpfInstance {
    network: PowerNetwork,
    cost: Vec<f64>,
    gen_min: Vec<f64>,
    gen_max: Vec<f64>,
    options: OpfOptions,
}

impl OpfInstance {
    pub fn new(network: PowerNetwork, cost: Vec<f64>, gen_min: Vec<f64>, gen_max: Vec<f64>) -> Result<Self> {
        let ng = network.n_generators();
        for (what, v) in [("cost", &cost), ("gen_min", &gen_min), ("gen_max", &gen_max)] {
            if v.len() != ng {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: ng,
                    got: v.len(),
                });
            }
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("generator costs must be finite".into()));
        }
        for i in 0..ng {
            if !(gen_min[i] >= 0.0 && gen_min[i].is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "generator {} minimum must be finite and nonnegative",
                    i + 1
                )));
            }
            if !(gen_max[i] > gen_min[i] && gen_max[i].is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "generator {} needs a finite max above its min",
                    i + 1
                )));
            }
        }
        Ok(OpfInstance {
            network,
            cost,
            gen_min,
            gen_max,
            options: OpfOptions::default(),
        })
    }

    pub fn with_options(mut self, options: OpfOptions) -> Self {
        self.options = options;
        self
    }

    pub fn network(&self) -> &PowerNetwork {
        &self.network
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn gen_min(&self) -> &[f64] {
        &self.gen_min
    }

    pub fn gen_max(&self) -> &[f64] {
        &self.gen_max
    }

    pub fn options(&self) -> &OpfOptions {
        &self.options
    }

    /// Same instance with the cost vector multiplied by `factor`.
    pub fn scaled_cost(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.cost.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn check_load(&self, load: &[f64]) -> Result<()> {
        let nl = self.network.n_loads();
        if load.len() != nl {
            return Err(Error::DimensionMismatch {
                what: "load vector",
                expected: nl,
                got: load.len(),
            });
        }
        if let Some((j, v)) = load.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "load {} must be finite and strictly positive, got {v}",
                j + 1
            )));
        }
        Ok(())
    }

    /// The LP encoding for a given load vector.
    pub fn linear_program(&self, load: &[f64]) -> Result<LinearProgram> {
        self.check_load(load)?;
        let net = &self.network;
        let (n, ng, ne) = (net.n_buses(), net.n_generators(), net.n_branches());
        let nv = ng + n - 1;

        let lap = net.laplacian();
        let mut a = Matrix::zeros(n, nv);
        let mut b = vec![0.0; n];
        for k in 0..n {
            for j in 1..n {
                a[(k, ng + j - 1)] = lap[(k, j)];
            }
            if k < ng {
                a[(k, k)] = -1.0;
            } else {
                b[k] = -load[k - ng];
            }
        }
        let flow = net.flow_matrix();
        let mut g = Matrix::zeros(ne, nv);
        for e in 0..ne {
            for j in 1..n {
                g[(e, ng + j - 1)] = flow[(e, j)];
            }
        }
        let (plo, phi): (Vec<f64>, Vec<f64>) = net.branches().iter().map(|br| (br.flow_min, br.flow_max)).unzip();

        let mut cost = self.cost.clone();
        cost.resize(nv, 0.0);
        let mut lo = self.gen_min.clone();
        lo.resize(nv, f64::NEG_INFINITY);
        let mut hi = self.gen_max.clone();
        hi.resize(nv, f64::INFINITY);

        Ok(LinearProgram::new(cost)
            .with_equalities(a, b)
            .with_rows(g, plo, phi)
            .with_bounds(lo, hi))
    }
}

/// Multipliers in the sign convention of the OPF KKT system:
/// `0 = Mᵀτ + C B (μ₊ − μ₋)`, `−f = −τ_G + λ₊ − λ₋`, where `M` stacks
/// `C B Cᵀ` over the slack-angle row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpfDuals {
    /// N + 1 entries: one per power-balance row, then the slack-angle row.
    pub tau: Vec<f64>,
    pub gen_upper: Vec<f64>,
    pub gen_lower: Vec<f64>,
    pub flow_upper: Vec<f64>,
    pub flow_lower: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpfSolution {
    /// MW
    pub gen: Vec<f64>,
    /// rad, slack bus first and fixed at 0.
    pub angles: Vec<f64>,
    /// MW, in stored branch orientation.
    pub flows: Vec<f64>,
    /// $
    pub objective: f64,
    pub duals: OpfDuals,
    /// Zero-based generator indices at a limit.
    pub binding_gens: BTreeSet<usize>,
    /// Zero-based branch indices at a limit.
    pub binding_branches: BTreeSet<usize>,
    #[serde(skip)]
    pub kkt: KktResiduals,
}

/// Evaluates the OPF operator at `load` and returns the full solution.
pub fn solve_opf(instance: &OpfInstance, load: &[f64]) -> Result<OpfSolution> {
    let prog = instance.linear_program(load)?;
    let sol = lp::solve(&prog, &instance.options.lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::OpfInfeasible),
        LpStatus::Unbounded => return Err(Error::OpfUnbounded),
    }
    let kkt = lp::kkt_residuals(&prog, &sol)?;
    let net = instance.network();
    let (n, ng) = (net.n_buses(), net.n_generators());

    let gen = sol.x[..ng].to_vec();
    let mut angles = vec![0.0];
    angles.extend_from_slice(&sol.x[ng..]);
    let flows = net.flow_matrix().mul_vec(&angles);

    let mut tau: Vec<f64> = sol.eq_duals.iter().map(|y| -y).collect();
    let flow_upper = sol.ineq_duals_upper.clone();
    let flow_lower = sol.ineq_duals_lower.clone();
    // Slack-angle multiplier from the θ_slack stationarity row.
    let lap = net.laplacian();
    let fm = net.flow_matrix();
    let mut slack_row: f64 = (0..n).map(|k| lap[(k, 0)] * tau[k]).sum();
    for e in 0..net.n_branches() {
        slack_row += fm[(e, 0)] * (flow_upper[e] - flow_lower[e]);
    }
    tau.push(-slack_row);

    let duals = OpfDuals {
        tau,
        gen_upper: sol.bound_duals_upper[..ng].to_vec(),
        gen_lower: sol.bound_duals_lower[..ng].to_vec(),
        flow_upper,
        flow_lower,
    };
    let mut out = OpfSolution {
        gen,
        angles,
        flows,
        objective: sol.objective,
        duals,
        binding_gens: BTreeSet::new(),
        binding_branches: BTreeSet::new(),
        kkt,
    };
    let (sg, sb) = binding_sets(instance, &out, instance.options.bind_tol);
    out.binding_gens = sg;
    out.binding_branches = sb;
    Ok(out)
}

/// The OPF operator: load vector to optimal generation.
pub fn opf_operator(instance: &OpfInstance, load: &[f64]) -> Result<Vec<f64>> {
    solve_opf(instance, load).map(|s| s.gen)
}

/// Generators and branches within `bind_tol` of either limit.
pub fn binding_sets(instance: &OpfInstance, sol: &OpfSolution, bind_tol: f64) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let near = |v: f64, lo: f64, hi: f64| (v - lo).abs() <= bind_tol || (v - hi).abs() <= bind_tol;
    let gens = (0..sol.gen.len())
        .filter(|&i| near(sol.gen[i], instance.gen_min[i], instance.gen_max[i]))
        .collect();
    let branches = instance
        .network
        .branches()
        .iter()
        .enumerate()
        .filter(|(e, br)| near(sol.flows[*e], br.flow_min, br.flow_max))
        .map(|(e, _)| e)
        .collect();
    (gens, branches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UniquenessDiagnostic {
    /// Nonzero multipliers over generator and branch limits.
    pub count: usize,
    /// `N_G − 1`
    pub required: usize,
    pub satisfied: bool,
}

/// Counts nonzero limit multipliers and compares against `N_G − 1`, the
/// multiplier count that guarantees a unique optimal dispatch.
pub fn uniqueness_diagnostic(sol: &OpfSolution, dual_tol: f64) -> UniquenessDiagnostic {
    let d = &sol.duals;
    let count = d
        .flow_upper
        .iter()
        .chain(&d.flow_lower)
        .chain(&d.gen_upper)
        .chain(&d.gen_lower)
        .filter(|v| v.abs() > dual_tol)
        .count();
    let required = sol.gen.len().saturating_sub(1);
    UniquenessDiagnostic {
        count,
        required,
        satisfied: count >= required,
    }
}

/// Max residual of the OPF stationarity conditions written in terms of
/// `τ, λ±, μ±` (independent of the LP-level residual check).
pub fn stationarity_residual(instance: &OpfInstance, sol: &OpfSolution) -> f64 {
    let net = instance.network();
    let (n, ng) = (net.n_buses(), net.n_generators());
    let d = &sol.duals;
    let lap = net.laplacian();
    let fm = net.flow_matrix();
    let mu: Vec<f64> = d.flow_upper.iter().zip(&d.flow_lower).map(|(u, l)| u - l).collect();
    let cb_mu = fm.tr_mul_vec(&mu);
    let mut worst = 0.0_f64;
    for j in 0..n {
        let mut r: f64 = (0..n).map(|k| lap[(k, j)] * d.tau[k]).sum();
        if j == 0 {
            r += d.tau[n];
        }
        r += cb_mu[j];
        worst = worst.max(r.abs());
    }
    for i in 0..ng {
        let r = -instance.cost[i] + d.tau[i] - d.gen_upper[i] + d.gen_lower[i];
        worst = worst.max(r.abs());
    }
    worst
}

/// Default central-difference step for a load vector.
pub fn default_step(load: &[f64]) -> f64 {
    1e-4 * norm_inf(load).max(1.0)
}

/// Central finite-difference Jacobian of the OPF operator with respect to the
/// loads, `N_G × N_L`.
///
/// Each column is only accepted when the binding generator and branch sets at
/// `load ± h·e_u` match those at `load`; otherwise the point is reported as
/// nonsmooth rather than differencing across a kink.
pub fn opf_derivative(instance: &OpfInstance, load: &[f64], step: Option<f64>) -> Result<Matrix> {
    let h = step.unwrap_or_else(|| default_step(load));
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {h}")));
    }
    let base = solve_opf(instance, load)?;
    let nl = load.len();
    let columns: Vec<Vec<f64>> = (0..nl)
        .into_par_iter()
        .map(|u| derivative_column(instance, load, &base, u, h))
        .collect::<Result<_>>()?;
    let ng = base.gen.len();
    let mut jac = Matrix::zeros(ng, nl);
    for (u, col) in columns.iter().enumerate() {
        for i in 0..ng {
            jac[(i, u)] = col[i];
        }
    }
    Ok(jac)
}

fn derivative_column(instance: &OpfInstance, load: &[f64], base: &OpfSolution, u: usize, h: f64) -> Result<Vec<f64>> {
    if load[u] - h <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "load {} is within one step of zero; use a smaller step",
            u + 1
        )));
    }
    let mut plus = load.to_vec();
    plus[u] += h;
    let mut minus = load.to_vec();
    minus[u] -= h;
    let sp = solve_opf(instance, &plus)?;
    let sm = solve_opf(instance, &minus)?;
    let same = |s: &OpfSolution| s.binding_gens == base.binding_gens && s.binding_branches == base.binding_branches;
    if !same(&sp) || !same(&sm) {
        return Err(Error::NonsmoothPoint { load_index: u });
    }
    Ok(sp.gen.iter().zip(&sm.gen).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// True when the binding sets are unchanged under `±h` on every load.
pub fn is_smooth_point(instance: &OpfInstance, load: &[f64], step: Option<f64>) -> Result<bool> {
    match opf_derivative(instance, load, step) {
        Ok(_) => Ok(true),
        Err(Error::NonsmoothPoint { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}
