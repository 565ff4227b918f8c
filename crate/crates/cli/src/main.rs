use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use auction_lab::demand::DemandOracle;
use auction_lab::harness::{
    run_experiment, trace_price_range, trace_runs, truth_test, write_trace_csv, ExperimentConfig, InstanceSource,
};
use auction_lab::instance::{generate_instance, GeneratorSpec, Instance};
use auction_lab::mechanism::ALPHA;
use auction_lab::oracle::brute_force_opt;
use auction_lab::price_tree::solve_parameters;
use auction_lab::rational;
use auction_lab::trace::check_lemma_branches;
use clap::{Parser, Subcommand};

/// Exit status when a run finishes but reports an invariant violation.
const VIOLATION: u8 = 1;

#[derive(Parser)]
#[command(name = "auction-lab", version, about = "Price-learning combinatorial auction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file from a generator spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the mechanism over many seeds; CSV per trial, JSON summary on stdout.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Per-trial CSV; written to stdout when omitted (summary then goes to stderr).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fail when the optimum cannot be computed.
        #[arg(long)]
        require_ratio: bool,
    },
    /// Print the mechanism parameters for a price range.
    Params {
        #[arg(long)]
        psi_min: String,
        #[arg(long)]
        psi_max: String,
    },
    /// Rebuild the analysis quantities over traced runs.
    Trace {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Price range of the traced runs; defaults to the optimum's supporting-price range.
        #[arg(long, requires = "psi_max")]
        psi_min: Option<String>,
        #[arg(long, requires = "psi_min")]
        psi_max: Option<String>,
        #[arg(long, default_value_t = 100)]
        min_seeds: usize,
        /// Per-iteration CSV; written to stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check that no random misreport improves any bidder's utility.
    Truthtest {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        seeds: usize,
        #[arg(long)]
        deviations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn summary(to_stdout: bool, value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json");
    if to_stdout {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
}

fn load(path: &PathBuf) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("reading instance {}", path.display()))
}

fn seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { spec, output } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let instance = generate_instance(&GeneratorSpec::from_json(&text)?)?;
            instance.save(&output)?;
            Ok(true)
        }
        Command::Run { instance, seed, trials, output, require_ratio } => {
            let mut config = ExperimentConfig::new(InstanceSource::File(instance), trials, seed);
            config.require_ratio = require_ratio;
            let report = run_experiment(&config)?;
            let mut out = sink(&output)?;
            report.write_csv(&mut out)?;
            out.flush()?;
            summary(output.is_some(), &serde_json::to_value(&report)?);
            Ok(report.violations.is_empty())
        }
        Command::Params { psi_min, psi_max } => {
            let params = solve_parameters(rational::parse(&psi_min)?, rational::parse(&psi_max)?, ALPHA)?;
            let value = serde_json::json!({
                "alpha": params.alpha,
                "beta": params.beta,
                "gamma": rational::format(&params.gamma),
                "t": params.bin_count(),
            });
            println!("{}", serde_json::to_string_pretty(&value)?);
            Ok(true)
        }
        Command::Trace { instance, seeds: count, seed, psi_min, psi_max, min_seeds, output } => {
            let instance = load(&instance)?;
            let opt = brute_force_opt(&instance.valuations, instance.m)?;
            let range = match (psi_min, psi_max) {
                (Some(lo), Some(hi)) => (rational::parse(&lo)?, rational::parse(&hi)?),
                _ => trace_price_range(&opt),
            };
            let seed_list = seeds(seed, count);
            let traces = trace_runs(&instance, &opt, range.clone(), &seed_list, &DemandOracle::default())?;
            let failures: Vec<String> = seed_list
                .iter()
                .zip(&traces)
                .filter_map(|(s, t)| t.check_invariants().err().map(|e| format!("seed {s}: {e}")))
                .collect();
            let mut out = sink(&output)?;
            write_trace_csv(&seed_list, &traces, &mut out)?;
            out.flush()?;
            let (alpha, beta) = traces.first().map_or((ALPHA, 1), |t| (t.alpha, t.beta));
            let branches = check_lemma_branches(&traces, &opt.welfare, alpha, beta, min_seeds);
            summary(
                output.is_some(),
                &serde_json::json!({
                    "opt": rational::format(&opt.welfare),
                    "psi_min": rational::format(&range.0),
                    "psi_max": rational::format(&range.1),
                    "beta": beta,
                    "invariant_failures": failures,
                    "branches": branches,
                }),
            );
            Ok(failures.is_empty())
        }
        Command::Truthtest { instance, seeds: count, deviations, seed } => {
            let instance = load(&instance)?;
            let report = truth_test(&instance, &seeds(seed, count), deviations, seed, &DemandOracle::default())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.violations.is_empty() && report.query_budget_violations.is_empty())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(VIOLATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
