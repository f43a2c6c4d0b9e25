use serde::Serialize;

use super::aggregate::{aggregate, AggregateVector, RegionPartition};
use super::laplace::Laplace;
use super::rng::{stream, ALGORITHM_ID};
use crate::error::{Error, Result};
use crate::monotonicity::MonotonicityReport;
use crate::opf::{solve_opf, OpfInstance};

/// How far a configured ε may sit below the sweep estimate before the release
/// is refused (MW). Covers solver round-off in a report that is exactly zero in
/// exact arithmetic.
pub const EPSILON_SLACK: f64 = 1e-6;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMechanism(format!("{name} must be positive, got {v}")))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMechanism(format!("epsilon must be nonnegative, got {epsilon}")))
    }
}

/// `2(Δ + ε)/ϱ`, the noise scale of the regional aggregation mechanism.
/// With ε = 0 this is `2Δ/ϱ`.
pub fn aggregation_scale(delta: f64, epsilon: f64, rho: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    check_positive("rho", rho)?;
    check_epsilon(epsilon)?;
    Ok(2.0 * (delta + epsilon) / rho)
}

/// `2·U·r·(Δ + ε)/ϱ` for a general query whose generation Jacobian entries are
/// bounded by `U` in magnitude, over `r` regions.
pub fn general_mechanism_scale(jacobian_bound: f64, regions: usize, delta: f64, epsilon: f64, rho: f64) -> Result<f64> {
    check_positive("jacobian bound", jacobian_bound)?;
    if regions == 0 {
        return Err(Error::InvalidMechanism("region count must be positive".into()));
    }
    check_positive("delta", delta)?;
    check_positive("rho", rho)?;
    check_epsilon(epsilon)?;
    Ok(2.0 * jacobian_bound * regions as f64 * (delta + epsilon) / rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MechanismMode {
    Aggregation,
    General { jacobian_bound: f64, regions: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanismConfig {
    pub delta: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub scale: f64,
    pub seed: u64,
    pub mode: MechanismMode,
}

impl MechanismConfig {
    pub fn aggregation(delta: f64, rho: f64, epsilon: f64, seed: u64) -> Result<Self> {
        Ok(MechanismConfig {
            delta,
            rho,
            epsilon,
            scale: aggregation_scale(delta, epsilon, rho)?,
            seed,
            mode: MechanismMode::Aggregation,
        })
    }

    pub fn general(jacobian_bound: f64, regions: usize, delta: f64, rho: f64, epsilon: f64, seed: u64) -> Result<Self> {
        Ok(MechanismConfig {
            delta,
            rho,
            epsilon,
            scale: general_mechanism_scale(jacobian_bound, regions, delta, epsilon, rho)?,
            seed,
            mode: MechanismMode::General {
                jacobian_bound,
                regions,
            },
        })
    }

    /// Replaces the noise scale. The result fails [`validate`](Self::validate)
    /// unless the new scale equals the formula value; it is still usable by the
    /// empirical tester, which is how under-noised controls are built.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn expected_scale(&self) -> Result<f64> {
        match self.mode {
            MechanismMode::Aggregation => aggregation_scale(self.delta, self.epsilon, self.rho),
            MechanismMode::General {
                jacobian_bound,
                regions,
            } => general_mechanism_scale(jacobian_bound, regions, self.delta, self.epsilon, self.rho),
        }
    }

    /// Positivity plus exact agreement of `scale` with its formula.
    pub fn validate(&self) -> Result<()> {
        let expected = self.expected_scale()?;
        if self.scale != expected {
            return Err(Error::InvalidMechanism(format!(
                "scale {} does not match the calibrated value {expected}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn noise(&self) -> Result<Laplace> {
        Laplace::new(self.scale)
    }
}

/// Adds independent Laplace noise to each coordinate; coordinate `k` draws from
/// stream `k` under `seed`.
pub fn add_noise(truth: &AggregateVector, scale: f64, seed: u64) -> Result<AggregateVector> {
    let lap = Laplace::new(scale)?;
    let values = truth
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v + lap.sample(&mut stream(seed, k as u64)))
        .collect();
    Ok(AggregateVector { values, noisy: true })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Release {
    pub truth: AggregateVector,
    pub noisy: AggregateVector,
    /// One flag per released value that came out negative.
    pub negative: Vec<bool>,
    pub config: MechanismConfig,
    pub algorithm: &'static str,
}

/// Solves the OPF at `load`, aggregates by region and adds calibrated noise.
///
/// `report` must cover the configured Δ, and the configured ε may not be
/// below the reported one. Negative released values are kept as they are and
/// flagged.
pub fn release_aggregates(
    instance: &OpfInstance,
    load: &[f64],
    partition: &RegionPartition,
    config: &MechanismConfig,
    report: &MonotonicityReport,
) -> Result<Release> {
    config.validate()?;
    if config.delta > report.delta {
        return Err(Error::InvalidMechanism(format!(
            "monotonicity report covers delta {} but the mechanism uses {}",
            report.delta, config.delta
        )));
    }
    if config.epsilon + EPSILON_SLACK < report.epsilon {
        return Err(Error::InvalidMechanism(format!(
            "epsilon {} is below the estimated {}",
            config.epsilon, report.epsilon
        )));
    }
    let sol = solve_opf(instance, load)?;
    let truth = aggregate(instance.network(), &sol.gen, load, partition)?;
    let noisy = add_noise(&truth, config.scale, config.seed)?;
    let negative = noisy.values.iter().map(|v| *v < 0.0).collect();
    Ok(Release {
        truth,
        noisy,
        negative,
        config: *config,
        algorithm: ALGORITHM_ID,
    })
}
