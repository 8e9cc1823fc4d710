//! `lrtnet`: run experiments, query the LRT oracle and check configs.
//!
//! Exit status: 0 success, 2 invalid configuration, 3 dataset failure,
//! 4 training divergence, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrtnet::config::{self, DatasetConfig, RunConfig, DATA_DIR_ENV};
use lrtnet::experiment::{self, RunOutcome};
use lrtnet::Error;

// println! panics when stdout is a closed pipe (`lrtnet presets | head`)
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "lrtnet", version, about = "Two-layer network classifiers trained towards the likelihood ratio test")]
struct Cli {
    /// Root directory holding `mnist/` and `cifar-10-batches-bin/`.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration. With --preset it only needs the overrides.
    #[arg(long)]
    config: PathBuf,

    /// Start from a named preset (see `lrtnet presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train, evaluate and write the run artifacts.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,

        /// Run every loss of the preset's group from the same initial network.
        #[arg(long)]
        compare: bool,

        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// Print the LRT error probabilities and the criterion bound of a
    /// synthetic config.
    Oracle {
        #[command(flatten)]
        cfg: ConfigArgs,

        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Check a config and list every violation.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// List the presets, or print one as JSON.
    Presets { name: Option<String> },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::InvalidParameter { .. } => 2,
            Error::Data(_) | Error::DimensionMismatch { .. } | Error::EmptyClass(_) => 3,
            Error::Diverged { .. } => 4,
            _ => 1,
        };
        let message = match e {
            Error::Config(v) => format!("invalid configuration:\n  {}", v.join("\n  ")),
            other => other.to_string(),
        };
        Failure { code, message }
    }
}

fn load(args: &ConfigArgs, preset: Option<&str>, data_dir: &Option<PathBuf>) -> Result<RunConfig, Failure> {
    let mut cfg = config::load_config(&args.config, preset).map_err(|e| match e {
        // an unreadable config file is a configuration problem
        Error::Io { .. } => Failure { code: 2, message: e.to_string() },
        other => other.into(),
    })?;
    if let Some(root) = data_dir {
        match &mut cfg.data {
            DatasetConfig::Mnist(m) if m.dir.is_none() => m.dir = Some(root.join("mnist")),
            DatasetConfig::Cifar(c) if c.dir.is_none() => c.dir = Some(root.join("cifar-10-batches-bin")),
            _ => {}
        }
    }
    Ok(cfg)
}

fn summary(name: &str, o: &RunOutcome) {
    let r = &o.report;
    say!(
        "{name}: err1 {:.4}  err2 {:.4}  avg {:.4}  J {:.6}  (n1 {}, n2 {})",
        r.err1, r.err2, r.avg, r.j_hat, r.n1, r.n2
    );
}

fn run_dir(out_dir: &Path, cfg: &ConfigArgs) -> PathBuf {
    let name = cfg.preset.clone().unwrap_or_else(|| {
        cfg.config
            .file_stem()
            .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
    });
    out_dir.join(name)
}

fn cmd_run(cli: &Cli, cfg: &ConfigArgs, compare: bool, out_dir: &Path) -> Result<(), Failure> {
    if compare {
        let preset = cfg.preset.as_deref().ok_or_else(|| Failure {
            code: 2,
            message: "--compare needs --preset".into(),
        })?;
        let group = config::compare_group(preset).ok_or_else(|| Failure {
            code: 2,
            message: format!("unknown preset `{preset}`"),
        })?;
        let configs = group
            .iter()
            .map(|&name| Ok((name.to_string(), load(cfg, Some(name), &cli.data_dir)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        let outcomes = experiment::run_compare(&configs, Some(out_dir))?;
        for (name, o) in &outcomes {
            summary(name, o);
        }
        if let Some(lrt) = outcomes.first().and_then(|(_, o)| o.lrt.as_ref()) {
            print_lrt(lrt);
        }
        say!("artifacts in {}", out_dir.display());
    } else {
        let config = load(cfg, cfg.preset.as_deref(), &cli.data_dir)?;
        let dir = run_dir(out_dir, cfg);
        let o = experiment::run(&config, Some(&dir))?;
        summary(&config.phi_name, &o);
        if let Some(lrt) = &o.lrt {
            print_lrt(lrt);
        }
        say!("artifacts in {}", dir.display());
    }
    Ok(())
}

fn print_lrt(lrt: &experiment::LrtReference) {
    let e = &lrt.errors;
    say!(
        "LRT: err1 {:.4}  err2 {:.4}  avg {:.4}  bound {:.6}",
        e.err1, e.err2, e.avg, lrt.criterion_upper_bound
    );
}

fn cmd_oracle(cli: &Cli, cfg: &ConfigArgs, json: bool) -> Result<(), Failure> {
    let config = load(cfg, cfg.preset.as_deref(), &cli.data_dir)?;
    if !matches!(config.data, DatasetConfig::Synthetic(_)) {
        return Err(Failure {
            code: 2,
            message: format!("oracle needs a synthetic config, got `{}`", config.data.experiment()),
        });
    }
    let lrt = experiment::lrt_reference(&config)?.ok_or_else(|| Failure {
        code: 2,
        message: "oracle quadrature needs scalar densities".into(),
    })?;
    if json {
        say!("{}", serde_json::to_string_pretty(&lrt).expect("serialisable"));
    } else {
        let e = &lrt.errors;
        say!("err1      {:.6}", e.err1);
        say!("err2      {:.6}", e.err2);
        say!("avg       {:.6}", e.avg);
        say!("bound     {:.6}", lrt.criterion_upper_bound);
        let b: Vec<String> = e.boundaries.iter().map(|x| format!("{x:.6}")).collect();
        say!("boundary  {}", b.join(" "));
    }
    Ok(())
}

fn cmd_validate(cli: &Cli, cfg: &ConfigArgs) -> Result<(), Failure> {
    let config = load(cfg, cfg.preset.as_deref(), &cli.data_dir)?;
    let v = config.validate();
    if v.is_empty() {
        say!("ok");
        Ok(())
    } else {
        Err(Error::Config(v).into())
    }
}

fn cmd_presets(name: Option<&str>) -> Result<(), Failure> {
    match name {
        None => {
            for p in config::PRESET_NAMES {
                say!("{p}");
            }
            Ok(())
        }
        Some(n) => {
            let c = config::preset(n).ok_or_else(|| Failure {
                code: 2,
                message: format!("unknown preset `{n}`, expected one of {:?}", config::PRESET_NAMES),
            })?;
            say!("{}", c.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Run { cfg, compare, out_dir } => cmd_run(&cli, cfg, *compare, out_dir),
        Command::Oracle { cfg, json } => cmd_oracle(&cli, cfg, *json),
        Command::Validate { cfg } => cmd_validate(&cli, cfg),
        Command::Presets { name } => cmd_presets(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
