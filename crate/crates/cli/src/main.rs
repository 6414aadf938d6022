use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use streamopt::datagen::{dump_stream, sample_batch};
use streamopt::harness::{
    metadata_path, read_csv, report_cost, run_experiment, write_csv, write_metadata, Environment, ExperimentConfig,
};
use streamopt::rng::{stream, Substream};

#[derive(Parser)]
#[command(name = "streamopt", version, about = "Replicated streaming optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method and write the error-curve CSV plus a `.meta` sidecar.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; defaults to `output.path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare rank-one update counts in a result CSV with the expected 2pN.
    ReportCost {
        #[arg(long = "in")]
        input: PathBuf,
        /// Inclusion probability; read from the `.meta` sidecar when omitted.
        #[arg(long)]
        p: Option<f64>,
    },
    /// Write the raw sample stream of one run as `x_1,...,x_d,y` lines.
    DumpStream {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        run: u64,
        /// Number of samples (default: `samples` from the config).
        #[arg(long)]
        samples: Option<u64>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_file(path).with_context(|| format!("reading config {}", path.display()))
}

fn run(config: &Path, out: Option<PathBuf>, threads: Option<usize>, seed: Option<u64>) -> Result<()> {
    let mut cfg = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let Some(out) = out.or_else(|| cfg.output.clone()) else {
        bail!("no output path: pass --out or set output.path");
    };
    let result = run_experiment(&cfg, threads)?;
    write_csv(&result.records, &out).with_context(|| format!("writing {}", out.display()))?;
    write_metadata(&cfg, &result, &out)?;
    eprintln!(
        "wrote {} rows to {} ({} failed runs)",
        result.records.len(),
        out.display(),
        result.failed.len()
    );
    for f in &result.failed {
        eprintln!("failed: {} run {} at t={}: {}", f.method, f.run_id, f.t, f.reason);
    }
    Ok(())
}

fn p_from_meta(csv: &Path) -> Result<f64> {
    let meta = metadata_path(csv);
    let text = std::fs::read_to_string(&meta).with_context(|| format!("reading {}", meta.display()))?;
    let value = text
        .lines()
        .find_map(|l| l.strip_prefix("p="))
        .with_context(|| format!("no p= line in {}", meta.display()))?;
    Ok(value.trim().parse()?)
}

fn dump(config: &Path, run: u64, samples: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(config)?;
    cfg.validate()?;
    let env = Environment::new(&cfg);
    let mut rng = stream(cfg.seed, run, Substream::Data);
    let n = samples.unwrap_or(cfg.total_samples);
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    let mut left = n;
    while left > 0 {
        let chunk = left.min(4096);
        dump_stream(&sample_batch(&env.model, &env.truth, chunk as usize, &mut rng), &mut sink)?;
        left -= chunk;
    }
    sink.flush()?;
    Ok(())
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => run(&config, out, threads, seed)?,
        Command::Validate { config } => {
            let cfg = load(&config)?;
            if let Err(e) = cfg.validate() {
                eprintln!("invalid: {e}");
                return Ok(ExitCode::FAILURE);
            }
            println!("ok: {} method(s), d={}, N={}", cfg.methods.len(), cfg.dim, cfg.total_samples);
        }
        Command::ReportCost { input, p } => {
            let p = match p {
                Some(p) => p,
                None => p_from_meta(&input)?,
            };
            let report = report_cost(&read_csv(&input)?, p);
            print!("{report}");
            if !report.all_pass() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::DumpStream {
            config,
            run,
            samples,
            out,
        } => dump(&config, run, samples, out)?,
    }
    Ok(ExitCode::SUCCESS)
}
