use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use ubrsim::network::DelayClass;
use ubrsim_cli::analysis::{self, Metric};
use ubrsim_cli::batch::{self, ResultRow};
use ubrsim_cli::oracle;
use ubrsim_cli::{CliError, Config, Result, Scale};

#[derive(Parser)]
#[command(
    name = "ubrsim",
    version,
    about = "WWW over TCP over UBR+ factorial experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassArg {
    Wan,
    Meo,
    Geo,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run the 24-cell factorial grid and write a results CSV.
    Run {
        #[arg(long, value_enum, default_value = "all", num_args = 1.., value_delimiter = ',')]
        delay_class: Vec<ClassArg>,
        /// Seeds, one replicate of the grid each. Overrides `seeds` in the config.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Preset to start from; overrides `scale` in the config.
        #[arg(long, value_enum)]
        scale: Option<Scale>,
        /// Results CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Allocation of variation and main-effect intervals from a results CSV.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        metric: Vec<Metric>,
        /// Only this delay class; every class in the file otherwise.
        #[arg(long, value_enum)]
        delay_class: Option<ClassArg>,
        /// Directory for the text and CSV reports.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the bundled published result matrices through `analyze`.
    Oracle {
        #[arg(long, short)]
        verbose: bool,
    },
}

fn classes(args: &[ClassArg]) -> Vec<DelayClass> {
    let mut v = Vec::new();
    for a in args {
        let add: &[DelayClass] = match a {
            ClassArg::Wan => &[DelayClass::Wan],
            ClassArg::Meo => &[DelayClass::Meo],
            ClassArg::Geo => &[DelayClass::Geo],
            ClassArg::All => &DelayClass::ALL,
        };
        for dc in add {
            if !v.contains(dc) {
                v.push(*dc);
            }
        }
    }
    v
}

#[allow(clippy::too_many_arguments)]
fn run(
    delay_class: &[ClassArg],
    seeds: Vec<u64>,
    config: Option<PathBuf>,
    scale: Option<Scale>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    quiet: bool,
) -> Result<bool> {
    let cfg = match &config {
        Some(path) => {
            let src = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Config::parse_with_scale(&src, scale).map_err(|source| CliError::Config {
                path: path.clone(),
                source,
            })?
        }
        None => Config::preset(scale.unwrap_or_default()),
    };
    let seeds = if seeds.is_empty() {
        cfg.seeds.clone()
    } else {
        seeds
    };
    let workers = workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }

    let jobs = batch::jobs(&classes(delay_class), &seeds);
    let started = Instant::now();
    let total = jobs.len();
    let mut done = 0;
    let rows = batch::execute(&cfg, &jobs, workers, |_, row: &ResultRow| {
        done += 1;
        if !quiet {
            let status = if row.is_ok() {
                format!(
                    "E={:.4} F={:.4}",
                    row.efficiency.unwrap_or(f64::NAN),
                    row.fairness.unwrap_or(f64::NAN)
                )
            } else {
                format!("FAILED: {}", row.error)
            };
            eprintln!(
                "[{done}/{total}] {} {} {} {} seed {}: {status}",
                row.delay_class, row.flavor, row.policy, row.buffer, row.seed
            );
        }
    });

    match &out {
        Some(path) => {
            let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            batch::write_results(io::BufWriter::new(f), &rows)?;
        }
        None => batch::write_results(io::stdout().lock(), &rows)?,
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if !quiet {
        eprintln!(
            "{} runs in {:.1} s, {failed} failed",
            rows.len(),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(failed == 0)
}

fn analyze(
    input: PathBuf,
    metrics: Vec<Metric>,
    class: Option<ClassArg>,
    out: Option<PathBuf>,
) -> Result<bool> {
    let f = fs::File::open(&input).map_err(|e| CliError::io(&input, e))?;
    let rows = batch::read_results(io::BufReader::new(f))?;
    let wanted = match class {
        Some(c) => classes(&[c]),
        None => analysis::classes_in(&rows)?,
    };
    if wanted.is_empty() {
        return Err(CliError::Usage(format!("{}: no results", input.display())));
    }
    let metrics = if metrics.is_empty() {
        Metric::ALL.to_vec()
    } else {
        metrics
    };
    let mut stdout = io::stdout().lock();
    for dc in wanted {
        for &m in &metrics {
            let model = analysis::analyze(&rows, dc, m)?;
            let text = analysis::text_report(&model, dc, m)?;
            writeln!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))?;
            if let Some(dir) = &out {
                for p in analysis::write_reports(dir, &model, dc, m)? {
                    eprintln!("wrote {}", p.display());
                }
            }
        }
    }
    Ok(true)
}

fn oracle(verbose: bool) -> Result<bool> {
    let checks = oracle::all_checks()?;
    let mut ok = true;
    for dc in DelayClass::ALL {
        for m in Metric::ALL {
            let mine: Vec<_> = checks
                .iter()
                .filter(|c| c.delay_class == dc && c.metric == m)
                .collect();
            let bad: Vec<_> = mine.iter().filter(|c| !c.passed()).collect();
            let status = if bad.is_empty() { "PASS" } else { "FAIL" };
            println!(
                "{status} {} {}: {}/{} values match",
                dc.label(),
                m.label(),
                mine.len() - bad.len(),
                mine.len()
            );
            for c in &mine {
                if verbose || !c.passed() {
                    println!(
                        "    {:<4} {:<40} published {:>9.4}  computed {:>9.4}",
                        if c.passed() { "ok" } else { "MISS" },
                        c.item,
                        c.expected,
                        c.actual
                    );
                }
            }
            ok &= bad.is_empty();
        }
    }
    let results = oracle::published_results()?;
    for dc in [DelayClass::Meo, DelayClass::Geo] {
        let model = analysis::analyze(&results, dc, Metric::Fairness)?;
        let (n, of) = oracle::enclosing_zero(&model)?;
        let status = if n == 8 { "PASS" } else { "FAIL" };
        println!(
            "{status} {} fairness: {n} of {of} intervals enclose 0 (published: 8)",
            dc.label()
        );
        ok &= n == 8;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            delay_class,
            seed,
            config,
            scale,
            out,
            workers,
            quiet,
        } => run(&delay_class, seed, config, scale, out, workers, quiet),
        Command::Analyze {
            input,
            metric,
            delay_class,
            out,
        } => analyze(input, metric, delay_class, out),
        Command::Oracle { verbose } => oracle(verbose),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
