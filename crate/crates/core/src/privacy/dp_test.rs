//! Empirical check of the (Δ, ϱ) guarantee on a pair of neighboring loads.
//!
//! Both loads are pushed through the mechanism many times and every output
//! coordinate is histogrammed. The largest absolute log-ratio of bin counts is
//! compared with ϱ plus a statistical slack. A pass does not prove privacy;
//! a clear failure shows the noise is too small.

use rayon::prelude::*;
use serde::Serialize;

use super::aggregate::{aggregate, RegionPartition};
use super::mechanism::MechanismConfig;
use super::rng::stream;
use crate::error::{Error, Result};
use crate::opf::{opf_operator, OpfInstance};

pub const MIN_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpTestOptions {
    pub samples: usize,
    pub bins: usize,
    /// Bins where either dataset has fewer counts are ignored.
    pub min_count: u64,
    pub slack: f64,
}

impl Default for DpTestOptions {
    fn default() -> Self {
        DpTestOptions {
            samples: 1_000_000,
            bins: 64,
            min_count: 100,
            slack: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpTestReport {
    pub max_log_ratio: f64,
    /// `None` where no bin had enough mass in both histograms.
    pub per_coordinate: Vec<Option<f64>>,
    pub rho: f64,
    pub slack: f64,
    pub passed: bool,
    pub samples: usize,
    pub bins: usize,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((p * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1);
    sorted[idx]
}

/// Histograms `a` and `b` on `bins` equal-width bins spanning the pooled 0.5 to
/// 99.5 percentile range and returns the largest `|ln(p̂_a/p̂_b)|` over bins
/// where both counts reach `min_count`.
pub fn histogram_log_ratio(a: &[f64], b: &[f64], bins: usize, min_count: u64) -> Option<f64> {
    if a.is_empty() || b.is_empty() || bins == 0 {
        return None;
    }
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let lo = percentile(&pooled, 0.005);
    let hi = percentile(&pooled, 0.995);
    if !(hi > lo) {
        return None;
    }
    let width = (hi - lo) / bins as f64;
    let count = |xs: &[f64]| {
        let mut h = vec![0u64; bins];
        for &x in xs {
            if x >= lo && x <= hi {
                let k = (((x - lo) / width) as usize).min(bins - 1);
                h[k] += 1;
            }
        }
        h
    };
    let (ha, hb) = (count(a), count(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    ha.iter()
        .zip(&hb)
        .filter(|(ca, cb)| **ca >= min_count && **cb >= min_count)
        .map(|(ca, cb)| ((*ca as f64 / na) / (*cb as f64 / nb)).ln().abs())
        .reduce(f64::max)
}

/// Runs the mechanism `options.samples` times on each load and compares the
/// per-coordinate output histograms. Uses `config.scale` as given, so an
/// uncalibrated scale can serve as a control.
pub fn dp_ratio_test(
    instance: &OpfInstance,
    load_a: &[f64],
    load_b: &[f64],
    partition: &RegionPartition,
    config: &MechanismConfig,
    options: &DpTestOptions,
) -> Result<DpTestReport> {
    instance.check_load(load_a)?;
    instance.check_load(load_b)?;
    let diff: Vec<f64> = load_a.iter().zip(load_b).map(|(x, y)| (x - y).abs()).collect();
    let changed = diff.iter().filter(|d| **d > 0.0).count();
    let l1: f64 = diff.iter().sum();
    if changed > 1 {
        return Err(Error::NotNeighbors(format!("{changed} loads differ")));
    }
    if l1 > config.delta * (1.0 + 1e-12) {
        return Err(Error::NotNeighbors(format!("L1 distance {l1} exceeds delta {}", config.delta)));
    }
    if options.samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("at least {MIN_SAMPLES} samples are needed")));
    }
    if options.bins == 0 {
        return Err(Error::InvalidInput("bins must be positive".into()));
    }
    let lap = config.noise()?;
    let net = instance.network();
    let truth_a = aggregate(net, &opf_operator(instance, load_a)?, load_a, partition)?.values;
    let truth_b = aggregate(net, &opf_operator(instance, load_b)?, load_b, partition)?.values;

    let per_coordinate: Vec<Option<f64>> = (0..truth_a.len())
        .into_par_iter()
        .map(|k| {
            let draw = |center: f64, index: u64| -> Vec<f64> {
                let mut rng = stream(config.seed, index);
                (0..options.samples).map(|_| center + lap.sample(&mut rng)).collect()
            };
            let a = draw(truth_a[k], 2 * k as u64);
            let b = draw(truth_b[k], 2 * k as u64 + 1);
            histogram_log_ratio(&a, &b, options.bins, options.min_count)
        })
        .collect();
    let max_log_ratio = per_coordinate.iter().flatten().copied().fold(0.0, f64::max);
    Ok(DpTestReport {
        max_log_ratio,
        per_coordinate,
        rho: config.rho,
        slack: options.slack,
        passed: max_log_ratio <= config.rho + options.slack,
        samples: options.samples,
        bins: options.bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::laplace::Laplace;

    #[test]
    fn identical_samples_give_zero() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        assert_eq!(histogram_log_ratio(&xs, &xs, 16, 10), Some(0.0));
    }

    #[test]
    fn shifted_laplace_ratio_approaches_shift_over_scale() {
        let lap = Laplace::new(10.0).unwrap();
        let mut ra = stream(11, 0);
        let mut rb = stream(11, 1);
        let a: Vec<f64> = (0..1_000_000).map(|_| lap.sample(&mut ra)).collect();
        let b: Vec<f64> = (0..1_000_000).map(|_| 3.0 + lap.sample(&mut rb)).collect();
        let r = histogram_log_ratio(&a, &b, 64, 100).unwrap();
        // Exact ratio is 0.3 on every bin outside [0, 3]; sampling noise only adds.
        assert!(r > 0.28 && r <= 0.3 + DpTestOptions::default().slack, "log-ratio {r}");
    }
}
