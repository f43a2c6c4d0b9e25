//! Scenario runners that produce CSV for plotting.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::case::LoadedCase;
use crate::error::{Error, Result};
use crate::monotonicity::{estimate_pair, MonotonicityReport, SweepConfig};
use crate::network::BusKind;
use crate::opf::opf_operator;
use crate::privacy::mechanism::{release_aggregates, MechanismConfig, Release};
use crate::privacy::rng::{stream, ALGORITHM_ID};
use crate::privacy::{Laplace, RegionPartition};

/// Rounds to 12 significant digits and prints without exponent.
pub fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

impl LoadedCase {
    /// Load index for a case-file bus id. A split mixed bus resolves to its
    /// load half.
    pub fn load_index(&self, bus: u32) -> Result<usize> {
        let net = self.instance.network();
        net.buses()
            .iter()
            .enumerate()
            .position(|(pos, b)| b.kind == BusKind::Load && self.raw_labels[self.normalized.origin[pos]] == bus)
            .map(|pos| pos - net.n_generators())
            .ok_or_else(|| Error::InvalidInput(format!("bus {bus} carries no load")))
    }

    /// Load indices for a list of case-file bus ids.
    pub fn load_indices(&self, buses: &[u32]) -> Result<Vec<usize>> {
        buses.iter().map(|b| self.load_index(*b)).collect()
    }

    pub fn generator_labels(&self) -> Vec<u32> {
        let net = self.instance.network();
        net.buses()[..net.n_generators()].iter().map(|b| b.label).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub load_mw: f64,
    /// `None` when the OPF is infeasible at this load.
    pub gen: Option<Vec<f64>>,
}

/// Evaluates the OPF operator as the load on `bus` moves over `[from, to]` in
/// `steps` equally spaced points, other loads held at the case values.
pub fn run_sweep(case: &LoadedCase, bus: u32, from: f64, to: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::InvalidInput("a sweep needs at least 2 steps".into()));
    }
    if !(from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidInput("sweep range must be positive".into()));
    }
    let u = case.load_index(bus)?;
    (0..steps)
        .into_par_iter()
        .map(|k| {
            let value = from + (to - from) * k as f64 / (steps - 1) as f64;
            let mut load = case.load.clone();
            load[u] = value;
            match opf_operator(&case.instance, &load) {
                Ok(g) => Ok(SweepRow {
                    load_mw: value,
                    gen: Some(g),
                }),
                Err(Error::OpfInfeasible) => Ok(SweepRow {
                    load_mw: value,
                    gen: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

pub fn sweep_csv(case: &LoadedCase, rows: &[SweepRow]) -> String {
    let mut header = vec!["load_mw".to_string(), "status".to_string()];
    header.extend(case.generator_labels().iter().map(|l| format!("gen_{l}")));
    let mut out = csv_line(&header);
    let ng = header.len() - 2;
    for r in rows {
        let mut fields = vec![fmt12(r.load_mw)];
        match &r.gen {
            Some(g) => {
                fields.push("ok".into());
                fields.extend(g.iter().map(|v| fmt12(*v)));
            }
            None => {
                fields.push("infeasible".into());
                fields.extend(std::iter::repeat_n(String::new(), ng));
            }
        }
        out.push_str(&csv_line(&fields));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    Auto,
    Value(f64),
}

impl std::str::FromStr for EpsilonChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(EpsilonChoice::Auto);
        }
        s.parse::<f64>()
            .map(EpsilonChoice::Value)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

/// Stream ids for density samples start here, clear of the release streams.
const DENSITY_STREAM_BASE: u64 = 1 << 32;
pub const DENSITY_BINS: usize = 100;

#[derive(Debug, Clone)]
pub struct ReleaseOutput {
    pub release: Release,
    pub report: MonotonicityReport,
    pub epsilon_source: EpsilonChoice,
    /// Per coordinate: bin centers and empirical densities of the mechanism output.
    pub density: Vec<(Vec<f64>, Vec<f64>)>,
    pub csv: String,
}

impl ReleaseOutput {
    /// Largest empirical density over all coordinates.
    pub fn max_density(&self) -> f64 {
        self.density
            .iter()
            .flat_map(|(_, d)| d.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Releases the noisy regional aggregates of `case` at its base load.
///
/// The monotonicity sweep always runs (all loads, increments up to Δ), since
/// the release must be backed by a report. With [`EpsilonChoice::Auto`] its ε
/// is used directly. `samples` mechanism draws per coordinate feed the
/// density curves.
pub fn run_release(
    case: &LoadedCase,
    partition: &RegionPartition,
    delta: f64,
    rho: f64,
    epsilon: EpsilonChoice,
    seed: u64,
    samples: usize,
) -> Result<ReleaseOutput> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be positive".into()));
    }
    let report = estimate_pair(&case.instance, &SweepConfig::new(vec![case.load.clone()], delta))?;
    let eps = match epsilon {
        EpsilonChoice::Auto => report.epsilon,
        EpsilonChoice::Value(v) => v,
    };
    let config = MechanismConfig::aggregation(delta, rho, eps, seed)?;
    let release = release_aggregates(&case.instance, &case.load, partition, &config, &report)?;
    let lap = Laplace::new(config.scale)?;

    let density: Vec<(Vec<f64>, Vec<f64>)> = release
        .truth
        .values
        .par_iter()
        .enumerate()
        .map(|(k, &center)| {
            let lo = center - 6.0 * config.scale;
            let width = 12.0 * config.scale / DENSITY_BINS as f64;
            let mut counts = vec![0u64; DENSITY_BINS];
            let mut rng = stream(seed, DENSITY_STREAM_BASE + k as u64);
            for _ in 0..samples {
                let x = center + lap.sample(&mut rng);
                let b = ((x - lo) / width).floor();
                if b >= 0.0 && (b as usize) < DENSITY_BINS {
                    counts[b as usize] += 1;
                }
            }
            let xs = (0..DENSITY_BINS).map(|i| lo + (i as f64 + 0.5) * width).collect();
            let ds = counts.iter().map(|c| *c as f64 / (samples as f64 * width)).collect();
            (xs, ds)
        })
        .collect();

    let r = partition.regions();
    let coord = |k: usize| {
        if k < r {
            format!("gen_r{}", k + 1)
        } else {
            format!("load_r{}", k - r + 1)
        }
    };
    let mut csv = String::new();
    let source = match epsilon {
        EpsilonChoice::Auto => "auto",
        EpsilonChoice::Value(_) => "given",
    };
    for (key, value) in [
        ("case", case.name.clone()),
        ("delta", fmt12(delta)),
        ("rho", fmt12(rho)),
        ("epsilon", fmt12(eps)),
        ("epsilon_source", source.to_string()),
        ("epsilon_estimate", fmt12(report.epsilon)),
        ("scale", fmt12(config.scale)),
        ("seed", seed.to_string()),
        ("rng", ALGORITHM_ID.to_string()),
        ("samples", samples.to_string()),
    ] {
        let _ = writeln!(csv, "# {key}={value}");
    }
    let _ = writeln!(csv, "# note: {}", MonotonicityReport::CAVEAT);
    for (k, neg) in release.negative.iter().enumerate() {
        if *neg {
            let _ = writeln!(csv, "# warning: released {} is negative", coord(k));
        }
    }
    csv.push_str(&csv_line(&["kind", "dataset", "coordinate", "x", "value"].map(String::from)));
    let dataset = case.name.clone();
    for (k, v) in release.truth.values.iter().enumerate() {
        csv.push_str(&csv_line(&["truth".into(), dataset.clone(), coord(k), fmt12(*v), String::new()]));
    }
    for (k, v) in release.noisy.values.iter().enumerate() {
        csv.push_str(&csv_line(&["noisy".into(), dataset.clone(), coord(k), fmt12(*v), String::new()]));
    }
    for (k, (xs, ds)) in density.iter().enumerate() {
        for (x, d) in xs.iter().zip(ds) {
            csv.push_str(&csv_line(&["density".into(), dataset.clone(), coord(k), fmt12(*x), fmt12(*d)]));
        }
    }
    Ok(ReleaseOutput {
        release,
        report,
        epsilon_source: epsilon,
        density,
        csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(80.0), "80");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(-123456.7890123456), "-123456.789012");
    }

    #[test]
    fn epsilon_choice_parses() {
        assert_eq!("auto".parse::<EpsilonChoice>().unwrap(), EpsilonChoice::Auto);
        assert_eq!("40.2".parse::<EpsilonChoice>().unwrap(), EpsilonChoice::Value(40.2));
        assert!("x".parse::<EpsilonChoice>().is_err());
    }
}
