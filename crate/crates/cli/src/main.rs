//! `dfrc-secrecy`: power sweeps, scenario listing and config validation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dfrc_secrecy::experiment::{
    builtin_config, expand_variants, run_sweep_to_path, summary_path, IrsMode, SweepSpec,
    BUILTIN_NAMES, DEFAULT_TRIALS,
};
use dfrc_secrecy::{Error, ScenarioConfig};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dfrc-secrecy",
    version,
    about = "Secrecy-rate optimization sweeps for IRS-assisted DFRC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo power sweep and write per-trial and summary CSVs.
    Run(RunArgs),
    /// Inspect the builtin scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenariosAction,
    },
    /// Check a scenario JSON file.
    Validate { path: PathBuf },
}

#[derive(Subcommand)]
enum ScenariosAction {
    /// Print the builtin scenario names.
    List,
    /// Print a builtin scenario as JSON.
    Show { name: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Builtin scenario names or JSON files, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "one-ed,two-ed")]
    scenario: Vec<String>,
    /// Power budgets, strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    powers: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Trial `t` uses seed `seed + t`.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Per-trial CSV; the summary goes to `<stem>.summary.csv` alongside.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Run only the IRS-disabled variants.
    #[arg(long, conflicts_with = "ablate_irs")]
    no_irs: bool,
    /// Run each scenario both with and without the IRS.
    #[arg(long)]
    ablate_irs: bool,
    /// Place every target behind the IRS.
    #[arg(long)]
    nlos: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Add the IRS legs to the user and eavesdropper channels.
    #[arg(long)]
    use_irs_comm_paths: bool,
    /// Override every radar SINR threshold.
    #[arg(long)]
    gamma: Option<f64>,
}

fn load_scenario(spec: &str) -> Result<(String, ScenarioConfig), Error> {
    if let Some(cfg) = builtin_config(spec) {
        return Ok((spec.to_string(), cfg));
    }
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "json") || path.exists() {
        let cfg = read_config(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        return Ok((name, cfg));
    }
    Err(Error::InvalidConfig(format!(
        "unknown scenario {spec:?}; builtins are {}",
        BUILTIN_NAMES.join(", ")
    )))
}

fn read_config(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::AllInfeasible { .. } => EXIT_ALL_INFEASIBLE,
        Error::Io(_) | Error::Csv(_) | Error::NonMonotone { .. } => EXIT_RUNTIME,
        _ => EXIT_CONFIG,
    }
}

fn build_spec(args: &RunArgs) -> Result<SweepSpec, Error> {
    let mut bases = Vec::new();
    for s in &args.scenario {
        let (name, mut cfg) = load_scenario(s)?;
        if args.use_irs_comm_paths {
            cfg.use_irs_comm_paths = true;
        }
        if let Some(g) = args.gamma {
            cfg.sinr_thresholds.iter_mut().for_each(|t| *t = g);
        }
        bases.push((name, cfg));
    }
    let irs = if args.no_irs {
        IrsMode::Disabled
    } else if args.ablate_irs {
        IrsMode::Both
    } else {
        IrsMode::Enabled
    };
    let mut spec = SweepSpec::new(expand_variants(&bases, args.nlos, irs));
    spec.powers = args.powers.clone();
    spec.n_trials = args.trials;
    spec.base_seed = args.seed;
    spec.workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    spec.validate()?;
    Ok(spec)
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let spec = build_spec(args)?;
    let res = run_sweep_to_path(&spec, &args.out)?;
    println!("scenario,power,n_feasible,n_trials,mean_secrecy_rate,std_error");
    for s in &res.summaries {
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
        println!(
            "{},{},{},{},{},{}",
            s.scenario,
            s.power,
            s.n_feasible,
            s.n_trials,
            fmt(s.mean_secrecy_rate),
            fmt(s.std_error)
        );
    }
    eprintln!(
        "wrote {} and {}",
        args.out.display(),
        summary_path(&args.out).display()
    );
    Ok(())
}

fn validate(path: &Path) -> Result<(), Error> {
    let cfg = read_config(path)?;
    println!(
        "{}: ok ({} targets, {} users, {} IRS elements)",
        path.display(),
        cfg.n_targets,
        cfg.n_users,
        cfg.n_irs
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Scenarios {
            action: ScenariosAction::List,
        } => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Scenarios {
            action: ScenariosAction::Show { name },
        } => match builtin_config(name) {
            Some(cfg) => cfg.to_json().map(|j| println!("{j}")),
            None => Err(Error::InvalidConfig(format!("unknown scenario {name:?}"))),
        },
        Command::Validate { path } => validate(path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
