//! Experiment driver: single runs behind an effective-config banner, and
//! sweeps that tabulate what a flag is worth across malicious fractions.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Subcommand, ValueEnum};
use fan_sim::{
    posterior, run as run_sim, to_csv, DetectorConfig, DetectorMode, SimConfig, SimReport,
};

#[derive(Clone, Copy, ValueEnum)]
pub enum DetectorArg {
    /// Flag clusters of early cells up to the tolerance
    Cluster,
    /// Flag only gaps inside the tuned spacing band
    Band,
}

#[derive(Subcommand)]
pub enum SimCmd {
    /// Run one experiment and print the report
    Run {
        #[arg(long, default_value_t = 2_000)]
        circuits: usize,
        /// Fraction of circuits built through a marking exit
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        /// Load the defense bundle into the client and middle relay
        #[arg(long)]
        defense: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DetectorArg::Cluster)]
        detector: DetectorArg,
        /// Write per-circuit records as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the attack with and without the defense over several fractions
    Sweep {
        /// Comma-separated malicious fractions
        #[arg(long, default_value = "0.01,0.05,0.1,0.2,0.5")]
        fractions: String,
        #[arg(long, default_value_t = 2_000)]
        circuits: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

pub fn run(cmd: SimCmd) -> anyhow::Result<()> {
    match cmd {
        SimCmd::Run { circuits, fraction, defense, seed, detector, csv } => {
            let cfg = SimConfig {
                circuits,
                malicious_fraction: fraction,
                defense,
                seed,
                detector: DetectorConfig {
                    mode: match detector {
                        DetectorArg::Cluster => DetectorMode::Cluster,
                        DetectorArg::Band => DetectorMode::Band,
                    },
                    ..DetectorConfig::default()
                },
                ..SimConfig::default()
            };
            banner(&cfg);
            let report = run_sim(&cfg);
            print_report(&cfg, &report);
            if let Some(path) = csv {
                fs::write(&path, to_csv(&report.records))
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("csv: {} ({} rows)", path.display(), report.records.len());
            }
            Ok(())
        }
        SimCmd::Sweep { fractions, circuits, seed } => sweep(&fractions, circuits, seed),
    }
}

/// Every knob that shaped the run, seed included, on one greppable line.
fn banner(cfg: &SimConfig) {
    println!(
        "config: circuits={} fraction={} defense={} seed={} hop_us={}..{} server_us={}..{} \
         think_us={}..{} rounds={} mark={}x{}us lead={}us cap={} detector={:?} \
         spacing_us={} tolerance_us={} min_cluster={}",
        cfg.circuits,
        cfg.malicious_fraction,
        cfg.defense,
        cfg.seed,
        cfg.hop_latency_us.0,
        cfg.hop_latency_us.1,
        cfg.server_delay_us.0,
        cfg.server_delay_us.1,
        cfg.client_think_us.0,
        cfg.client_think_us.1,
        cfg.data_rounds,
        cfg.dropmark_cells,
        cfg.dropmark_spacing_us,
        cfg.dropmark_lead_us,
        cfg.padding_cap,
        cfg.detector.mode,
        cfg.detector.spacing_us,
        cfg.detector.tolerance_us,
        cfg.detector.min_cluster,
    );
}

fn print_report(cfg: &SimConfig, report: &SimReport) {
    println!(
        "circuits: {} marked, {} benign",
        report.malicious, report.benign
    );
    println!(
        "flag rate: {:.4} on marked, {:.4} on benign",
        report.tpr, report.fpr
    );
    println!(
        "posterior that a flagged circuit is marked: {:.4} (prior {:.4})",
        posterior(cfg.malicious_fraction, report.tpr, report.fpr),
        cfg.malicious_fraction
    );
    println!(
        "padding: max {} cells, mean cover {:.1} ms, {} capped emissions",
        report.max_padding_cells, report.mean_cover_ms, report.padding_suppressed
    );
    println!(
        "hygiene: {} clean violations, {} leaked signals, {} native padding runs, {} plugin faults",
        report.clean_violations,
        report.signals_leaked,
        report.native_padding_runs,
        report.plugin_faults
    );
}

fn sweep(fractions: &str, circuits: usize, seed: u64) -> anyhow::Result<()> {
    let fractions: Vec<f64> = fractions
        .split(',')
        .map(|p| p.trim().parse().with_context(|| format!("bad fraction `{p}`")))
        .collect::<Result<_, _>>()?;
    println!("config: circuits={circuits} seed={seed} (per fraction, defense off then on)");
    println!(
        "{:>9} | {:>7} {:>7} {:>9} | {:>7} {:>7} {:>9}",
        "fraction", "tpr", "fpr", "posterior", "tpr", "fpr", "posterior"
    );
    for f in fractions {
        let base = SimConfig {
            circuits,
            malicious_fraction: f,
            seed,
            ..SimConfig::default()
        };
        let off = run_sim(&base);
        let on = run_sim(&SimConfig { defense: true, ..base });
        println!(
            "{:>9.3} | {:>7.4} {:>7.4} {:>9.4} | {:>7.4} {:>7.4} {:>9.4}",
            f,
            off.tpr,
            off.fpr,
            posterior(f, off.tpr, off.fpr),
            on.tpr,
            on.fpr,
            posterior(f, on.tpr, on.fpr),
        );
    }
    Ok(())
}
