//! Batch front-end: runs the verification suites, the moduli calculators and
//! the Hodge reports, emitting exact JSON or plain tables. Identical seeds
//! and sizes produce byte-identical output.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use supercalc_core::moduli::{projective_line_report, torus_moduli, BundleSpec};
use supercalc_core::suites::{hodge_summary, run_suite, SuiteConfig, VerificationReport};

#[derive(Parser)]
#[command(name = "supercalc", version, about = "exact super-geometry batch kernel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct OutputOpts {
    /// Write the report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named identity suite with seeded generators.
    Verify {
        /// Suite name; an unknown name lists the available suites.
        suite: String,
        /// Even dimension bound for chart sweeps.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Base dimension bound for symplectic/slice suites.
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Frequency cutoff for torus generators.
        #[arg(long = "K", default_value_t = 1)]
        cutoff: i32,
        /// Random cases per size.
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Generator seed; falls back to SUPERCALC_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Tangent-space reports for the moduli targets.
    Moduli {
        #[command(subcommand)]
        target: ModuliTarget,
    },
    /// Betti numbers and the BV/Hodge bridge summary on a flat torus.
    Hodge {
        #[arg(long)]
        m: usize,
        #[arg(long = "K", default_value_t = 1)]
        cutoff: i32,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Subcommand)]
enum ModuliTarget {
    /// Flat torus of dimension m.
    Torus {
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Projective line with the given normal-bundle degrees.
    P1 {
        /// Comma-separated line-bundle degrees, e.g. 1,1
        #[arg(long, value_delimiter = ',')]
        degrees: Vec<i64>,
        #[command(flatten)]
        output: OutputOpts,
    },
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("SUPERCALC_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn emit<T: Serialize>(value: &T, table: String, opts: &OutputOpts) -> Result<()> {
    let text = match opts.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s
        }
        Format::Table => table,
    };
    print!("{text}");
    if let Some(path) = &opts.out {
        let mut file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        file.write_all(text.as_bytes())?;
    }
    Ok(())
}

fn verify_table(report: &VerificationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("suite     : {}\n", report.suite));
    out.push_str(&format!("identity  : {}\n", report.identity));
    out.push_str(&format!("seed      : {}\n", report.seed));
    out.push_str(&format!("cases     : {}\n", report.cases));
    out.push_str(&format!("failures  : {}\n", report.failures.len()));
    for f in &report.failures {
        out.push_str(&format!("  case {:>4}: {}\n    witness: {}\n", f.case, f.description, f.witness));
    }
    out.push_str(if report.passed() { "status    : PASS\n" } else { "status    : FAIL\n" });
    out
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { suite, n, m, cutoff, cases, seed, output } => {
            let cfg = SuiteConfig { seed: resolve_seed(seed), n, m, cutoff, cases };
            let report = run_suite(&suite, &cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
            emit(&report, verify_table(&report), &output)?;
            if !report.passed() {
                std::process::exit(1);
            }
        }
        Command::Moduli { target } => match target {
            ModuliTarget::Torus { m, output } => {
                let report = torus_moduli(m).map_err(|e| anyhow::anyhow!("{e}"))?;
                let mut table = String::new();
                table.push_str(&format!("target    : {}\n", report.target));
                table.push_str(&format!("mclean    : {}\n", report.mclean));
                table.push_str(&format!("extended  : {}\n", report.extended));
                table.push_str(&format!("graded    : ({}|{})\n", report.even, report.odd));
                table.push_str(&format!("per degree: {:?}\n", report.per_degree));
                for p in &report.provenance {
                    table.push_str(&format!("  via {p}\n"));
                }
                emit(&report, table, &output)?;
            }
            ModuliTarget::P1 { degrees, output } => {
                if degrees.is_empty() {
                    bail!("--degrees needs at least one integer");
                }
                let report = projective_line_report(&BundleSpec::new(degrees).map_err(|e| anyhow::anyhow!("{e}"))?);
                let table = format!(
                    "target    : {}\ngraded    : ({}|{})\nper degree: {:?}\n",
                    report.target, report.even, report.odd, report.per_degree
                );
                emit(&report, table, &output)?;
            }
        },
        Command::Hodge { m, cutoff, output } => {
            let summary = hodge_summary(m, cutoff).map_err(|e| anyhow::anyhow!("{e}"))?;
            let table = format!(
                "torus     : m={} K={}\nbetti     : {:?}\ntotal     : {}\nker(d,*d*): {}\nharmonic  : constants={}\nbridge    : constant={} max-dev={}\n",
                summary.m,
                summary.cutoff,
                summary.betti,
                summary.total,
                summary.kernel_d_stard,
                summary.harmonic_is_constants,
                summary.bridge_constant,
                summary.bridge_max_dev
            );
            emit(&summary, table, &output)?;
        }
    }
    Ok(())
}
