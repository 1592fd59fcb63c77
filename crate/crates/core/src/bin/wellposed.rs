use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use wellposed::experiment::{self, ExperimentConfig, ExperimentKind, Profile, RunReport};
use wellposed::Error;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ERROR: u8 = 3;

/// Runs reproducible well-posedness experiments and the acceptance suite.
///
/// Exactly one of --config, --kind or --profile selects what to run. The exit
/// status is 0 when every assertion passes, 1 when any fails, 2 on usage
/// errors and 3 when a run aborts.
#[derive(Debug, Parser)]
#[command(name = "wellposed", version)]
#[command(group(ArgGroup::new("what").required(true).args(["config", "kind", "profile", "list"])))]
struct Cli {
    /// JSON experiment config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Run one experiment kind with its default parameters.
    #[arg(long, value_name = "KIND")]
    kind: Option<String>,

    /// Run the acceptance suite (quick or full).
    #[arg(long, value_name = "PROFILE")]
    profile: Option<Profile>,

    /// Output directory; without it a single report is printed to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,

    /// List experiment kinds.
    #[arg(long)]
    list: bool,
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("WELLPOSED_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("WELLPOSED_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("cannot configure thread pool: {e}")))
}

fn summarize(rep: &RunReport) {
    for a in &rep.assertions {
        let cmp = match a.comparison {
            experiment::Comparison::AtMost => "<=",
            experiment::Comparison::AtLeast => ">=",
        };
        let tag = if a.passed { "PASS" } else { "FAIL" };
        eprintln!("{tag} {}/{}: {:.3e} {cmp} {:.3e}", rep.kind.name(), a.name, a.measured, a.tolerance);
    }
}

fn run_single(cli: &Cli) -> Result<bool, Error> {
    let mut cfg = match (&cli.config, &cli.kind) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(kind)) => ExperimentConfig::new(ExperimentKind::parse(kind)?),
        (None, None) => unreachable!("clap enforces one selector"),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let rep = experiment::run(&cfg)?;
    summarize(&rep);
    match &cli.out {
        Some(dir) => {
            let path = rep.write_to(dir)?;
            eprintln!("report written to {}", path.display());
        }
        None => println!("{}", rep.to_json()?),
    }
    Ok(rep.passed)
}

fn run_suite(cli: &Cli, profile: Profile) -> Result<bool, Error> {
    let rep = experiment::suite(profile, cli.seed, cli.out.as_deref())?;
    for c in &rep.criteria {
        for r in &c.runs {
            summarize(r);
        }
        for a in &c.assertions {
            let tag = if a.passed { "PASS" } else { "FAIL" };
            eprintln!("{tag} criterion {}/{}: {:.1} <= {:.1}", c.criterion, a.name, a.measured, a.tolerance);
        }
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2} ({}) {:.1}s", c.criterion, c.title, c.wall_time_s);
    }
    if cli.out.is_none() {
        println!("{}", serde_json::to_string_pretty(&rep)?);
    }
    Ok(rep.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        for k in ExperimentKind::ALL {
            println!("{}", k.name());
        }
        return ExitCode::SUCCESS;
    }
    let outcome = configure_threads().and_then(|()| match cli.profile {
        Some(p) => run_suite(&cli, p),
        None => run_single(&cli),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
