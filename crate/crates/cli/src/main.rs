//! `gsmlab` — run scenario files against the laboratory, manage rainbow
//! tables for the weak ciphers, and compare run traces.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gsmlab_core::attacks::{KeystreamObservation, RainbowTable, TmtoParams};
use gsmlab_core::cipher::CipherSuite;
use gsmlab_core::report::{render_matrix, RunReport};
use gsmlab_core::runner::run_scenario;
use gsmlab_core::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "gsmlab",
    version,
    about = "Deterministic GSM air-interface security laboratory"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute scenario files: attach the fleet, run the attack list,
    /// write trace.log and report.txt per scenario
    Run(RunArgs),
    /// Rainbow-table operations against the weak ciphers
    Tmto {
        #[command(subcommand)]
        cmd: TmtoCmd,
    },
    /// Trace utilities
    Trace {
        #[command(subcommand)]
        cmd: TraceCmd,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Full per-run report with evidence lines
    Text,
    /// Attacks-by-variant success grid merged over all runs
    Matrix,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario files, executed in order (one world per file)
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,
    /// Override the seed of every scenario in this invocation
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $GSMLAB_OUT, then ./gsmlab-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum TmtoCmd {
    /// Build a chain table and write it to disk
    Build {
        /// Table file to create
        table: PathBuf,
        /// Cipher the table attacks: a51 or a52
        #[arg(long, default_value = "a51")]
        cipher: String,
        /// Size of the covered key space, in bits
        #[arg(long, default_value_t = 20)]
        keyspace_bits: u32,
        #[arg(long, default_value_t = 256)]
        chain_length: u32,
        #[arg(long, default_value_t = 8192)]
        chains: u32,
    },
    /// Look a key up from keystream observations (or verify a planted key)
    Lookup {
        /// Table file to search
        table: PathBuf,
        /// A known key (hex): derive its observation, search, and check
        /// the key is among the candidates
        #[arg(long, conflicts_with = "obs")]
        plant: Option<String>,
        /// Two keystream prefixes `frame0:frame1` (hex) observed from
        /// consecutive frames
        #[arg(long)]
        obs: Option<String>,
    },
}

#[derive(Subcommand)]
enum TraceCmd {
    /// Compare two trace files line by line (exit 0 iff identical)
    Diff { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Tmto { cmd } => cmd_tmto(cmd),
        Cmd::Trace { cmd: TraceCmd::Diff { a, b } } => cmd_trace_diff(&a, &b),
    }
}

fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("GSMLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gsmlab-out"))
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let out_root = output_dir(args.out);
    let mut reports: Vec<RunReport> = Vec::new();

    for path in &args.scenarios {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        let scenario = Scenario::parse(&text)
            .with_context(|| format!("parsing scenario {}", path.display()))?;

        let outcome = run_scenario(&scenario, args.seed);

        let dir = out_root.join(&scenario.name);
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let trace_text = outcome.trace.iter().map(|l| format!("{l}\n")).collect::<String>();
        fs::write(dir.join("trace.log"), trace_text)
            .with_context(|| format!("writing {}", dir.join("trace.log").display()))?;
        fs::write(dir.join("report.txt"), outcome.report.render_text())
            .with_context(|| format!("writing {}", dir.join("report.txt").display()))?;
        eprintln!(
            "wrote {}/trace.log and {}/report.txt",
            dir.display(),
            dir.display()
        );

        if args.format == Format::Text {
            print!("{}", outcome.report.render_text());
        }
        reports.push(outcome.report);
    }

    if args.format == Format::Matrix {
        let matrix = render_matrix(&reports);
        fs::write(out_root.join("matrix.txt"), &matrix)
            .with_context(|| format!("writing {}", out_root.join("matrix.txt").display()))?;
        print!("{matrix}");
    }

    Ok(ExitCode::SUCCESS)
}

fn parse_cipher(s: &str) -> Result<CipherSuite> {
    match s {
        "a51" | "A5_1" => Ok(CipherSuite::A51),
        "a52" | "A5_2" => Ok(CipherSuite::A52),
        _ => bail!("unsupported table cipher `{s}` (expected a51 or a52)"),
    }
}

fn cmd_tmto(cmd: TmtoCmd) -> Result<ExitCode> {
    match cmd {
        TmtoCmd::Build { table, cipher, keyspace_bits, chain_length, chains } => {
            let params = TmtoParams::new(parse_cipher(&cipher)?, keyspace_bits, chain_length, chains);
            let t = gsmlab_core::attacks::tmto_build(params).context("building table")?;
            t.save(&table).with_context(|| format!("writing {}", table.display()))?;
            println!(
                "built {} table: {} chains x {} steps over 2^{} keys, coverage {:.3}, {} rows",
                t.params.cipher_name(),
                chains,
                chain_length,
                keyspace_bits,
                t.coverage.unwrap_or(0.0),
                t.rows().len()
            );
            Ok(ExitCode::SUCCESS)
        }
        TmtoCmd::Lookup { table, plant, obs } => {
            let t = RainbowTable::load(&table)
                .with_context(|| format!("loading {}", table.display()))?;
            let observation = match (&plant, &obs) {
                (Some(hexkey), None) => {
                    let key = u32::from_str_radix(hexkey.trim_start_matches("0x"), 16)
                        .with_context(|| format!("parsing planted key `{hexkey}`"))?;
                    if u64::from(key) > u64::from(t.params.mask()) {
                        bail!(
                            "planted key {key:#x} exceeds the table's 2^{} key space",
                            t.params.keyspace_bits
                        );
                    }
                    KeystreamObservation::of_key(&t.params, key)
                }
                (None, Some(pair)) => {
                    let (f0, f1) = pair
                        .split_once(':')
                        .context("--obs expects `frame0hex:frame1hex`")?;
                    KeystreamObservation {
                        frame0_prefix: u32::from_str_radix(f0, 16)
                            .context("parsing frame-0 prefix")?,
                        frame1_prefix: u32::from_str_radix(f1, 16)
                            .context("parsing frame-1 prefix")?,
                    }
                }
                _ => bail!("exactly one of --plant or --obs is required"),
            };
            let candidates = t.lookup(&observation);
            let rendered: Vec<String> = candidates.iter().map(|c| format!("{c:#07x}")).collect();
            println!(
                "table={} cipher={} candidates={}",
                table.display(),
                t.params.cipher_name(),
                if rendered.is_empty() { "(none)".to_owned() } else { rendered.join(",") }
            );
            if let Some(hexkey) = plant {
                let key = u32::from_str_radix(hexkey.trim_start_matches("0x"), 16)?;
                println!("planted={key:#07x} recovered={}", candidates.contains(&key));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_trace_diff(a: &Path, b: &Path) -> Result<ExitCode> {
    let ta = fs::read_to_string(a).with_context(|| format!("reading {}", a.display()))?;
    let tb = fs::read_to_string(b).with_context(|| format!("reading {}", b.display()))?;
    let la: Vec<&str> = ta.lines().collect();
    let lb: Vec<&str> = tb.lines().collect();

    let mut differences = 0usize;
    for (i, (x, y)) in la.iter().zip(lb.iter()).enumerate() {
        if x != y {
            differences += 1;
            if differences <= 20 {
                println!("line {}:", i + 1);
                println!("  - {x}");
                println!("  + {y}");
            }
        }
    }
    if la.len() != lb.len() {
        let extra = la.len().abs_diff(lb.len());
        differences += extra;
        println!(
            "length mismatch: {} has {} lines, {} has {}",
            a.display(),
            la.len(),
            b.display(),
            lb.len()
        );
    }

    if differences == 0 {
        println!("identical ({} lines)", la.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{differences} differences");
        Ok(ExitCode::from(1))
    }
}
