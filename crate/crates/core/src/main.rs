//! Command-line front end for training, evaluating and comparing coexistence
//! controllers.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qasal::env::ActionMode;
use qasal::harness::{self, load_config, ExperimentConfig, Preset};

#[derive(Parser)]
#[command(name = "qasal", version, about = "NR-U/Wi-Fi coexistence with a constraint-aware Q-learning controller")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn enabled(self) -> bool {
        self == Switch::On
    }
}

#[derive(Args, Clone, Debug)]
struct RunArgs {
    /// Experiment configuration (TOML) or a run manifest to reproduce.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Preset supplying defaults when no configuration file is given.
    #[arg(long, value_enum, conflicts_with = "config")]
    preset: Option<Preset>,
    /// Training seed for `train` and `trace`, rollout seed for `evaluate` and `baseline`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Training episodes for `train`, rollout episodes for `evaluate` and `baseline`.
    #[arg(long, value_name = "N")]
    episodes: Option<u32>,
    /// MAC parameter the controller actuates.
    #[arg(long, value_enum)]
    action_mode: Option<ActionMode>,
    /// Collision-resolution LBT for the gNBs.
    #[arg(long, value_enum)]
    cr_lbt: Option<Switch>,
    /// Scaled and smoothed constraint signal.
    #[arg(long, value_enum)]
    scaling: Option<Switch>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Train,
    Rollout,
    Trace,
}

impl RunArgs {
    fn resolve(&self, role: Role) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::preset(self.preset.unwrap_or_default()),
        };
        if let Some(seed) = self.seed {
            match role {
                Role::Train | Role::Trace => cfg.seed = seed,
                Role::Rollout => cfg.eval.seed = seed,
            }
        }
        if let Some(n) = self.episodes {
            match role {
                Role::Train => cfg.learner.episodes = n,
                Role::Rollout => cfg.eval.episodes = n,
                Role::Trace => bail!("--episodes does not apply to trace; use --duration-us"),
            }
        }
        if let Some(mode) = self.action_mode {
            cfg.env.action_mode = mode;
        }
        if let Some(s) = self.cr_lbt {
            cfg.env.cr_lbt = s.enabled();
        }
        if let Some(s) = self.scaling {
            cfg.scaling = s.enabled();
        }
        if let Some(dir) = &self.out {
            cfg.out_dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write it with its step log and manifest.
    Train(RunArgs),
    /// Greedy rollout of a trained policy.
    Evaluate {
        /// Policy artifact written by `train`.
        #[arg(long, value_name = "PATH")]
        policy: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rollout with the static default MAC parameters.
    Baseline(RunArgs),
    /// Compare evaluation reports against the first one.
    Compare {
        /// Two or more report files.
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Also write comparison.toml and comparison.txt here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Export every transmission outcome of a static-parameter run.
    Trace {
        /// Simulated duration in microseconds.
        #[arg(long, default_value_t = 1_000_000)]
        duration_us: u64,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn print_report(report: &harness::EvalReport) {
    for (metric, value) in report.metric_rows() {
        println!("  {metric:<40} {value:.6}");
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.resolve(Role::Train)?;
            let out = harness::cmd_train(&cfg).context("training failed")?;
            println!("policy   {}", out.policy.display());
            println!("log      {} ({} rows)", out.log.display(), out.rows);
            println!("manifest {}", out.manifest.display());
        }
        Command::Evaluate { policy, run } => {
            let cfg = run.resolve(Role::Rollout)?;
            let out = harness::cmd_evaluate(&cfg, &policy).context("evaluation failed")?;
            println!("report   {}", out.report_path.display());
            print_report(&out.report);
        }
        Command::Baseline(args) => {
            let cfg = args.resolve(Role::Rollout)?;
            let out = harness::cmd_baseline(&cfg).context("baseline failed")?;
            println!("report   {}", out.report_path.display());
            print_report(&out.report);
        }
        Command::Compare { reports, out } => {
            let cmp = harness::cmd_compare(&reports, out.as_deref()).context("comparison failed")?;
            print!("{}", cmp.to_text());
        }
        Command::Trace { duration_us, run } => {
            let cfg = run.resolve(Role::Trace)?;
            let path = harness::cmd_trace(&cfg, duration_us).context("trace export failed")?;
            println!("trace    {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
