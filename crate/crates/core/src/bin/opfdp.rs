use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::warn;
use serde_json::json;

use opfdp::cli::fixtures::gen_fixture;
use opfdp::cli::{load_case, parse_regions, run_release, run_sweep, sweep_csv, EpsilonChoice, LoadedCase};
use opfdp::monotonicity::{estimate_pair, LatinHypercube, MonotonicityReport, SweepConfig, DEFAULT_STEPS};
use opfdp::opf::{solve_opf, uniqueness_diagnostic, DEFAULT_DUAL_TOL};
use opfdp::privacy::dp_test::{dp_ratio_test, DpTestOptions};
use opfdp::privacy::mechanism::MechanismConfig;
use opfdp::privacy::RegionPartition;
use opfdp::{Error, Result};

#[derive(Parser)]
#[command(name = "opfdp", version, about = "DC OPF, monotonicity estimates and private regional aggregates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the DC OPF at the case's loads and print the solution as JSON.
    Solve {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the branches whose removal disconnects the network.
    Bridges {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the load on one bus and write the optimal generation as CSV.
    Sweep {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        bus: u32,
        /// MW
        #[arg(long)]
        from: f64,
        /// MW
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the monotonicity pair (delta, epsilon) by single-load sweeps.
    Monotonicity {
        #[arg(long)]
        case: PathBuf,
        /// MW
        #[arg(long)]
        delta: f64,
        /// Comma-separated bus ids to perturb (default: every load bus).
        #[arg(long, value_delimiter = ',')]
        buses: Option<Vec<u32>>,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        /// Extra Latin-hypercube base loads within ±50% of the case loads.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Release noisy regional aggregates and density data as CSV.
    Release {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        rho: f64,
        /// A value in MW or "auto".
        #[arg(long, default_value = "auto")]
        epsilon: EpsilonChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mechanism draws per coordinate for the density curves.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Regions as "1,2,3;4,5" (default: regions from the case file).
        #[arg(long)]
        regions: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical DP check between the case loads and a neighbor.
    DpTest {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value = "0")]
        epsilon: f64,
        /// Override the calibrated noise scale (for under-noised controls).
        #[arg(long)]
        scale: Option<f64>,
        /// Bus whose load is raised by delta to form the neighbor.
        #[arg(long)]
        bump_bus: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        #[arg(long)]
        regions: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in case file.
    Fixture {
        /// radial, case9 or ring
        name: String,
        /// Bus count for the ring.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn partition_for(case: &LoadedCase, regions: Option<&str>) -> Result<RegionPartition> {
    match regions {
        Some(text) => case.partition_from_groups(&parse_regions(text)?),
        None => case
            .partition
            .clone()
            .ok_or_else(|| Error::InvalidInput("case has no regions; pass --regions".into())),
    }
}

fn report_json(case: &LoadedCase, report: &MonotonicityReport) -> serde_json::Value {
    let net = case.instance.network();
    let bus = net.buses()[net.n_generators() + report.witness.load_index].label;
    json!({
        "delta": report.delta,
        "epsilon": report.epsilon,
        "ratio": report.ratio,
        "lower_bound": true,
        "note": MonotonicityReport::CAVEAT,
        "witness": {
            "base_load": report.witness.base,
            "bus": bus,
            "omega": report.witness.omega,
            "negative_sum": report.witness.negative_sum,
        },
        "points_evaluated": report.points_evaluated,
        "points_skipped": report.points_skipped,
        "topological_monotone": report.topological_monotone,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { case, out } => {
            let case = load_case(&case)?;
            let sol = solve_opf(&case.instance, &case.load)?;
            let uniq = uniqueness_diagnostic(&sol, DEFAULT_DUAL_TOL);
            let net = case.instance.network();
            let value = json!({
                "case": case.name,
                "generator_buses": case.generator_labels(),
                "solution": sol,
                "binding_branch_ends": sol.binding_branches.iter().map(|&e| {
                    let b = &net.branches()[e];
                    [net.buses()[b.from].label, net.buses()[b.to].label]
                }).collect::<Vec<_>>(),
                "uniqueness": uniq,
            });
            emit(out.as_deref(), &to_json(&value))
        }
        Command::Bridges { case, out } => {
            let case = load_case(&case)?;
            let net = case.instance.network();
            let bridges: Vec<_> = net
                .bridges()
                .into_iter()
                .map(|e| {
                    let b = &net.branches()[e];
                    json!({"branch": e + 1, "from": net.buses()[b.from].label, "to": net.buses()[b.to].label})
                })
                .collect();
            let value = json!({"case": case.name, "is_tree": net.is_tree(), "bridges": bridges});
            emit(out.as_deref(), &to_json(&value))
        }
        Command::Sweep {
            case,
            bus,
            from,
            to,
            steps,
            out,
        } => {
            let case = load_case(&case)?;
            let rows = run_sweep(&case, bus, from, to, steps)?;
            emit(out.as_deref(), &sweep_csv(&case, &rows))
        }
        Command::Monotonicity {
            case,
            delta,
            buses,
            steps,
            samples,
            seed,
            out,
        } => {
            let case = load_case(&case)?;
            let mut sweep = SweepConfig::new(vec![case.load.clone()], delta).with_steps(steps);
            if let Some(b) = buses {
                sweep = sweep.with_indices(case.load_indices(&b)?);
            }
            if samples > 0 {
                sweep = sweep.with_augmentation(LatinHypercube {
                    count: samples,
                    lower: case.load.iter().map(|l| 0.5 * l).collect(),
                    upper: case.load.iter().map(|l| 1.5 * l).collect(),
                    seed,
                });
            }
            let report = estimate_pair(&case.instance, &sweep)?;
            warn!("{}", MonotonicityReport::CAVEAT);
            emit(out.as_deref(), &to_json(&report_json(&case, &report)))
        }
        Command::Release {
            case,
            delta,
            rho,
            epsilon,
            seed,
            samples,
            regions,
            out,
        } => {
            let case = load_case(&case)?;
            let partition = partition_for(&case, regions.as_deref())?;
            let output = run_release(&case, &partition, delta, rho, epsilon, seed, samples)?;
            if matches!(epsilon, EpsilonChoice::Auto) {
                warn!("{}", MonotonicityReport::CAVEAT);
            }
            emit(out.as_deref(), &output.csv)
        }
        Command::DpTest {
            case,
            delta,
            rho,
            epsilon,
            scale,
            bump_bus,
            seed,
            samples,
            bins,
            regions,
            out,
        } => {
            let case = load_case(&case)?;
            let partition = partition_for(&case, regions.as_deref())?;
            let mut config = MechanismConfig::aggregation(delta, rho, epsilon, seed)?;
            if let Some(b) = scale {
                config = config.with_scale(b);
            }
            let mut neighbor = case.load.clone();
            neighbor[case.load_index(bump_bus)?] += delta;
            let options = DpTestOptions {
                samples,
                bins,
                ..DpTestOptions::default()
            };
            let report = dp_ratio_test(&case.instance, &case.load, &neighbor, &partition, &config, &options)?;
            let value = json!({"case": case.name, "scale": config.scale, "seed": seed, "report": report});
            emit(out.as_deref(), &to_json(&value))
        }
        Command::Fixture { name, n, out } => {
            let case = gen_fixture(&name, n)?;
            emit(out.as_deref(), &case.to_json_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_infeasible() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
