//! `ghznet` - command-line toolkit for GHZ-network nonlocality analysis:
//! evaluate coincidence counts against the F ≤ 2 bound, simulate the trial
//! pipeline, tabulate noise thresholds, run state tomography, check the
//! fidelity witness and audit locality closures.
//!
//! Exit codes report operational success only; a non-violation is a valid
//! physics result and still exits 0.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ghznet_core::counts::{
    bootstrap_sigma_with, evaluate_counts, load_counts, ResampleModel,
};
use ghznet_core::inequality::{
    fidelity_threshold, thresholds, visibility_threshold_numeric, CLASSICAL_BOUND, QUANTUM_MAX,
};
use ghznet_core::observable::MeasurementLayout;
use ghznet_core::quantum::ghz_state;
use ghznet_core::spacetime::{audit, station_times, SpacetimeLayout};
use ghznet_core::tomography::{reconstruct, TomographyDataset};
use ghznet_core::trials::{run_trials, DetectorEfficiencies, TrialConfig};
use ghznet_core::witness::{witness_fidelity, WitnessTerm};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum ResampleModelArg {
    #[default]
    Multinomial,
    Poisson,
}

impl From<ResampleModelArg> for ResampleModel {
    fn from(arg: ResampleModelArg) -> Self {
        match arg {
            ResampleModelArg::Multinomial => ResampleModel::MultinomialFixedTotals,
            ResampleModelArg::Poisson => ResampleModel::PoissonTotals,
        }
    }
}

#[derive(Parser)]
#[command(name = "ghznet", version, about = "GHZ-network nonlocality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a coincidence-count CSV: F, bootstrap error, violation.
    Evaluate {
        /// Counts CSV (header: setting,ppp,...,mmm).
        #[arg(long)]
        counts: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Bootstrap resampling model.
        #[arg(long, value_enum, default_value_t)]
        model: ResampleModelArg,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Simulate the trial pipeline and write a counts CSV.
    Simulate {
        /// White-noise visibility of the four-photon resource.
        #[arg(long)]
        p: f64,
        #[arg(long)]
        pulses: u64,
        /// Detection efficiency applied to all four detectors.
        #[arg(long, default_value_t = 1.0)]
        efficiency: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output path for the counts CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional path for the key=value diagnostics report.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Closed-form visibility/fidelity thresholds with bisection checks.
    Thresholds {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Reconstruct a state from 27-setting tomography data.
    Tomo {
        /// Tomography CSV (settings are axis strings such as XYZ).
        #[arg(long)]
        data: PathBuf,
        /// Monte Carlo resamples for the fidelity error bar.
        #[arg(long, default_value_t = 100)]
        mc: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Audit locality closures for a station layout.
    Spacetime {
        /// Layout JSON (nodes, distances, delay_chains, uncertainty_mode).
        #[arg(long)]
        layout: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Fidelity witness from measured term values.
    Witness {
        /// CSV of term,value lines (PHHH, PVVV, XXX, XYY, YXY, YYX).
        #[arg(long)]
        expectations: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Evaluate {
            counts,
            resamples,
            seed,
            model,
            format,
        } => cmd_evaluate(&counts, resamples, seed, model.into(), format),
        Command::Simulate {
            p,
            pulses,
            efficiency,
            seed,
            out,
            diagnostics,
            format,
        } => cmd_simulate(p, pulses, efficiency, seed, &out, diagnostics.as_deref(), format),
        Command::Thresholds { n_max, format } => cmd_thresholds(n_max, format),
        Command::Tomo {
            data,
            mc,
            seed,
            format,
        } => cmd_tomo(&data, mc, seed, format),
        Command::Spacetime { layout, format } => cmd_spacetime(&layout, format),
        Command::Witness {
            expectations,
            format,
        } => cmd_witness(&expectations, format),
    }
}

fn cmd_evaluate(
    path: &Path,
    resamples: usize,
    seed: u64,
    model: ResampleModel,
    format: Format,
) -> Result<()> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let counts = load_counts(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))?;
    let report = evaluate_counts(&counts)?;
    let boot = bootstrap_sigma_with(&counts, resamples, seed, model)?;

    match format {
        Format::Json => {
            let doc = json!({
                "command": "evaluate",
                "version": VERSION,
                "seed": seed,
                "counts_path": path.display().to_string(),
                "n_events": boot.n_events,
                "resamples": boot.resamples,
                "resample_model": format!("{:?}", boot.model),
                "f_value": report.f_value,
                "sigma": boot.sigma,
                "sigma_violation": boot.sigma_violation,
                "i_bell": report.i_bell,
                "i_same": report.i_same,
                "c1_mean": report.c1_mean,
                "bell_terms": report.bell_terms,
                "same_terms": report.same_terms,
                "classical_bound": CLASSICAL_BOUND,
                "quantum_max": QUANTUM_MAX,
                "violates_classical_bound": report.violates_classical_bound(),
                "excluded_resamples": boot.excluded_resamples,
                "unstable": boot.unstable,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("F-score evaluation of {}", path.display());
            println!("  events: {}", boot.n_events);
            println!("  conditioned CHSH correlators:");
            for (label, value) in ["<A0B0>", "<A0B1>", "<A1B0>", "<A1B1>"]
                .iter()
                .zip(&report.bell_terms)
            {
                println!("    {label} | C1=+1 = {value:+.5}");
            }
            println!("  I_Bell = {:+.5}", report.i_bell);
            println!("  consistency correlators:");
            for (label, value) in ["<A0B2>", "<B2C0>"].iter().zip(&report.same_terms) {
                println!("    {label} = {value:+.5}");
            }
            println!("  I_Same = {:+.5}", report.i_same);
            println!("  <C1>   = {:+.5}", report.c1_mean);
            println!(
                "  F = {:.4} ± {:.4}  ({} resamples, seed {})",
                report.f_value, boot.sigma, boot.resamples, seed
            );
            if boot.unstable {
                println!(
                    "  warning: {} of {} resamples were undefined",
                    boot.excluded_resamples, boot.resamples
                );
            }
            println!(
                "  bipartite-GPT bound {CLASSICAL_BOUND}: {} ({:+.2}σ)",
                if report.violates_classical_bound() {
                    "VIOLATED"
                } else {
                    "not violated"
                },
                boot.sigma_violation
            );
            println!("  tripartite quantum maximum: 2√2 ≈ {QUANTUM_MAX:.4}");
        }
    }
    Ok(())
}

fn cmd_simulate(
    p: f64,
    pulses: u64,
    efficiency: f64,
    seed: u64,
    out: &Path,
    diagnostics_path: Option<&Path>,
    format: Format,
) -> Result<()> {
    let layout = MeasurementLayout::ghz_game(3)?;
    let mut config = TrialConfig::new(pulses, p, seed);
    config.efficiency = DetectorEfficiencies::uniform(efficiency);
    let (counts, diag) = run_trials(&config, &layout)?;

    let mut file =
        File::create(out).with_context(|| format!("creating {}", out.display()))?;
    file.write_all(counts.to_csv_string().as_bytes())?;

    if let Some(dpath) = diagnostics_path {
        let mut dfile =
            File::create(dpath).with_context(|| format!("creating {}", dpath.display()))?;
        dfile.write_all(diag.to_text().as_bytes())?;
    }

    match format {
        Format::Json => {
            let doc = json!({
                "command": "simulate",
                "version": VERSION,
                "seed": seed,
                "visibility": p,
                "efficiency": efficiency,
                "pulses": pulses,
                "out_path": out.display().to_string(),
                "accepted": diag.accepted,
                "acceptance_rate": diag.acceptance_rate,
                "bob_rejection_rate": diag.bob_rejection_rate,
                "empty_result": diag.empty_result,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!(
                "simulated {} pulses at visibility {} (seed {})",
                pulses, p, seed
            );
            println!("  accepted four-fold events: {}", diag.accepted);
            println!("  acceptance rate: {:.6}", diag.acceptance_rate);
            if diag.empty_result {
                println!("  warning: no pulse survived post-selection");
            }
            println!("  counts written to {}", out.display());
            if let Some(dpath) = diagnostics_path {
                println!("  diagnostics written to {}", dpath.display());
            }
        }
    }
    Ok(())
}

/// Bisection cross-checks are only run where the density-matrix
/// simulation stays small.
const MAX_NUMERIC_CHECK_PARTIES: usize = 8;

fn cmd_thresholds(n_max: usize, format: Format) -> Result<()> {
    if n_max < 3 {
        bail!("--n-max must be at least 3");
    }
    let mut rows = Vec::new();
    for n in 3..=n_max {
        let t = thresholds(n)?;
        let numeric = if n <= MAX_NUMERIC_CHECK_PARTIES {
            Some(visibility_threshold_numeric(n, 1e-8)?)
        } else {
            None
        };
        rows.push((t, numeric));
    }
    match format {
        Format::Json => {
            let doc = json!({
                "command": "thresholds",
                "version": VERSION,
                "seed": serde_json::Value::Null,
                "n_max": n_max,
                "rows": rows.iter().map(|(t, num)| json!({
                    "n_parties": t.n_parties,
                    "visibility_threshold": t.visibility_threshold,
                    "fidelity_threshold": t.fidelity_threshold,
                    "visibility_threshold_bisection": num,
                })).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("violation thresholds for the N-party game");
            println!("  N   p* (visibility)  f* (fidelity)   bisection check");
            for (t, num) in &rows {
                let (n, p, f) = (t.n_parties, t.visibility_threshold, t.fidelity_threshold);
                match num {
                    Some(v) => println!("  {n:<3} {p:<16.9} {f:<15.9} {v:.9}"),
                    None => println!("  {n:<3} {p:<16.9} {f:<15.9} (skipped)"),
                }
            }
        }
    }
    Ok(())
}

fn cmd_tomo(path: &Path, mc: usize, seed: u64, format: Format) -> Result<()> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let dataset = TomographyDataset::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))?;
    let target = ghz_state(3)?;
    let result = reconstruct(&dataset, &target, mc, seed)?;

    match format {
        Format::Json => {
            let rho = result.rho.density_matrix();
            let dim = rho.nrows();
            let matrix: Vec<Vec<[f64; 2]>> = (0..dim)
                .map(|r| (0..dim).map(|c| [rho[(r, c)].re, rho[(r, c)].im]).collect())
                .collect();
            let doc = json!({
                "command": "tomo",
                "version": VERSION,
                "seed": seed,
                "data_path": path.display().to_string(),
                "mc_samples": result.mc_samples,
                "fidelity": result.fidelity,
                "fidelity_sigma": result.fidelity_sigma,
                "raw_min_eigenvalue": result.raw_min_eigenvalue,
                "density_matrix": matrix,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("tomographic reconstruction of {}", path.display());
            println!(
                "  fidelity with the three-party GHZ target: {:.4} ± {:.4}",
                result.fidelity, result.fidelity_sigma
            );
            println!(
                "  raw (pre-projection) minimum eigenvalue: {:+.5}",
                result.raw_min_eigenvalue
            );
            println!("  Monte Carlo samples: {} (seed {seed})", result.mc_samples);
        }
    }
    Ok(())
}

fn cmd_spacetime(path: &Path, format: Format) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let layout = SpacetimeLayout::from_json_str(&text)?;
    let reports = audit(&layout)?;
    let times = station_times(&layout)?;
    let all_pass = reports.iter().all(|r| r.pass);

    match format {
        Format::Json => {
            let doc = json!({
                "command": "spacetime",
                "version": VERSION,
                "seed": serde_json::Value::Null,
                "layout_path": path.display().to_string(),
                "stations": times.iter().map(|(node, t)| json!({
                    "node": node,
                    "detection_total_ns": t.detection_total_ns,
                    "earliest_basis_choice_ns": t.earliest_basis_choice_ns,
                })).collect::<Vec<_>>(),
                "closures": reports.iter().map(|r| json!({
                    "detector": r.detector_node,
                    "chooser": r.chooser_node,
                    "margin_ns": r.margin_ns,
                    "uncertainty_ns": r.uncertainty_ns,
                    "pass": r.pass,
                })).collect::<Vec<_>>(),
                "all_pass": all_pass,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("locality-closure audit of {}", path.display());
            for (node, t) in &times {
                println!(
                    "  {node}: detection {:.1} ns, earliest basis choice {:.1} ns",
                    t.detection_total_ns, t.earliest_basis_choice_ns
                );
            }
            println!("  detector    chooser     margin (ns)   result");
            for r in &reports {
                println!(
                    "  {:<11} {:<11} {:>7.1} ± {:<4.1} {}",
                    r.detector_node,
                    r.chooser_node,
                    r.margin_ns,
                    r.uncertainty_ns,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            println!(
                "  overall: {}",
                if all_pass {
                    "all closures pass"
                } else {
                    "LOCALITY NOT CLOSED"
                }
            );
        }
    }
    Ok(())
}

fn cmd_witness(path: &Path, format: Format) -> Result<()> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut values = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (term, value) = trimmed
            .split_once(',')
            .with_context(|| format!("line {}: expected `term,value`", idx + 1))?;
        let term = WitnessTerm::parse(term.trim())?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad value", idx + 1))?;
        values.insert(term, value);
    }
    let fidelity = witness_fidelity(&values)?;
    let threshold = fidelity_threshold(3)?;

    match format {
        Format::Json => {
            let doc = json!({
                "command": "witness",
                "version": VERSION,
                "seed": serde_json::Value::Null,
                "expectations_path": path.display().to_string(),
                "fidelity": fidelity,
                "fidelity_threshold": threshold,
                "above_violation_threshold": fidelity >= threshold,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("witness fidelity: {fidelity:.4}");
            println!(
                "  violation threshold f* for three parties: {threshold:.4} -> {}",
                if fidelity >= threshold {
                    "above"
                } else {
                    "below"
                }
            );
        }
    }
    Ok(())
}
