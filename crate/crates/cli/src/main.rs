//! `dhomog`: run dislocation simulations, build flow-rule tables, solve the
//! macroscopic equation and compare the two scales.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Bad input: unknown keys, unparsable values, missing input files.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "dhomog", version, about = "Dislocation dynamics and its homogenized flow rule")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// key=value configuration file; a manifest from an earlier run works too.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one parameter (repeatable).
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE", value_parser = parse_set)]
    set: Vec<(String, String)>,
    /// Output directory (created if missing).
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
    /// Print the effective parameters and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args, Debug)]
struct RuleArgs {
    /// Use the closed-form obstacle-free flow rule f = ρτ/μ̄.
    #[arg(long, conflicts_with = "table")]
    case_a: bool,
    /// Flow-rule table CSV written by `sweep` (the `.meta` file sits next to it).
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one periodic cell of the dislocation chain.
    Simulate1d {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the flow rule f(ρ, τ) over a grid of densities and stresses.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Reduced grid: N ≤ 50, 50 stresses, T = 200.
        #[arg(long, group = "preset")]
        desk: bool,
        /// Full grid: N ≤ 200, Δτ = 9/200, T = 1000.
        #[arg(long, group = "preset")]
        full: bool,
        /// Obstacle-free table (A = 0) on the reduced grid.
        #[arg(long, group = "preset")]
        case_a: bool,
        /// Reuse the finished cells of the table in this directory.
        #[arg(long, value_name = "DIR")]
        resume: Option<PathBuf>,
        /// Replace cells with f ≤ f_tol by this value in the plot matrix.
        #[arg(long, value_name = "VALUE", allow_negative_numbers = true)]
        matrix_sentinel: Option<f64>,
    },
    /// Solve the macroscopic equation for the plastic strain.
    Macro {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Compare rescaled microscopic runs with the macroscopic solution.
    Converge {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Evolve dislocation curves in the plane by the level-set method.
    Simulate2d {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_set(s: &str) -> Result<(String, String), String> {
    config::split_pair(s)
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

fn rule_overrides(rule: &RuleArgs) -> Vec<(String, String)> {
    let mut v = Vec::new();
    if rule.case_a {
        v.push(("rule".into(), "case-a".into()));
    }
    if let Some(p) = &rule.table {
        v.push(("rule".into(), "table".into()));
        v.push(("table".into(), p.display().to_string()));
    }
    v
}

/// Defaults, then `preset`, then the config file, then flags, then `--set`.
fn build_config(
    defaults: &[(&str, &str)],
    preset: Option<&dyn Fn(&str, &mut RunConfig) -> anyhow::Result<()>>,
    common: &Common,
    flags: Vec<(String, String)>,
) -> anyhow::Result<RunConfig> {
    let file = match &common.config {
        Some(p) => config::read_pairs(p)?,
        None => Vec::new(),
    };
    let mut cfg = RunConfig::new(defaults);
    if let Some(apply_preset) = preset {
        let chosen = common
            .set
            .iter()
            .chain(&flags)
            .chain(&file)
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| cfg.raw("preset").to_string());
        apply_preset(&chosen, &mut cfg)?;
    }
    cfg.apply(file)?;
    cfg.apply(flags)?;
    cfg.apply(common.set.iter().cloned())?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (name, common, cfg) = match &cli.command {
        Command::Simulate1d { common } => ("simulate1d", common, build_config(commands::SIMULATE1D, None, common, vec![])?),
        Command::Sweep {
            common,
            desk,
            full,
            case_a,
            resume,
            matrix_sentinel,
        } => {
            let mut flags = Vec::new();
            for (on, preset) in [(*desk, "desk"), (*full, "full"), (*case_a, "case-a")] {
                if on {
                    flags.push(("preset".to_string(), preset.to_string()));
                }
            }
            if let Some(dir) = resume {
                flags.push(("resume".into(), dir.display().to_string()));
            }
            if let Some(s) = matrix_sentinel {
                flags.push(("matrix_sentinel".into(), s.to_string()));
            }
            let cfg = build_config(commands::SWEEP, Some(&commands::sweep_preset), common, flags)?;
            ("sweep", common, cfg)
        }
        Command::Macro { common, rule } => ("macro", common, build_config(commands::MACRO, None, common, rule_overrides(rule))?),
        Command::Converge { common, rule } => {
            ("converge", common, build_config(commands::CONVERGE, None, common, rule_overrides(rule))?)
        }
        Command::Simulate2d { common } => ("simulate2d", common, build_config(commands::SIMULATE2D, None, common, vec![])?),
    };
    if common.print_config {
        let mut out = std::io::stdout().lock();
        for (k, v) in cfg.pairs() {
            use std::io::Write;
            writeln!(out, "{k}={v}")?;
        }
        return Ok(());
    }
    std::fs::create_dir_all(&common.out)
        .map_err(|e| UsageError(format!("cannot create output directory {}: {e}", common.out.display())))?;
    let exec = commands::init_workers(&cfg)?;
    let ctx = commands::Context {
        cfg: &cfg,
        out: &common.out,
        exec,
    };
    match name {
        "simulate1d" => commands::simulate1d(&ctx),
        "sweep" => commands::sweep(&ctx),
        "macro" => commands::macro_solve(&ctx),
        "converge" => commands::converge(&ctx),
        _ => commands::simulate2d(&ctx),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use dhomog_core::error::Error as CoreError;
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            if e.is_numerical() {
                return EXIT_NUMERICAL;
            }
            if matches!(e, CoreError::InvalidParameter { .. } | CoreError::Parse(_)) {
                return EXIT_USAGE;
            }
        }
        if cause.downcast_ref::<commands::NumericalAbort>().is_some() {
            return EXIT_NUMERICAL;
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
