use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kaczmarz_pref::simulator::{LabelRule, SamplingMode};
use kpref_cli::{cmd_adaptive, cmd_decay_demo, cmd_noise_sweep, cmd_simulate, DecayOptions, RunOptions};

#[derive(Parser)]
#[command(name = "kpref", version, about = "Simulate Kaczmarz-family preference learners and write metrics, traces and charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method and write metrics.csv and trace.csv.
    Simulate(RunArgs),
    /// Rerun at each flip ratio and write noise.csv and fig_noise.svg.
    NoiseSweep(RunArgs),
    /// Compare row-norm and adaptive sampling; writes trace_adaptive.csv and fig_alignment.svg.
    Adaptive(RunArgs),
    /// Tabulate how fast normalized updates forget the starting vector.
    DecayDemo(DecayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,
    #[arg(long, value_name = "raw-dot|normalized-cos")]
    label_rule: Option<LabelRule>,
    #[arg(long, value_name = "row-norm|adaptive")]
    sampling: Option<SamplingMode>,
    #[arg(long)]
    no_cooldown: bool,
}

#[derive(Args)]
struct DecayArgs {
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, default_value_t = 60)]
    dimension: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl From<RunArgs> for RunOptions {
    fn from(a: RunArgs) -> Self {
        RunOptions {
            config: a.config,
            out: a.out,
            seed: a.seed,
            workers: a.workers.map(usize::from),
            label_rule: a.label_rule,
            sampling: a.sampling,
            no_cooldown: a.no_cooldown,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a.into()),
        Command::NoiseSweep(a) => cmd_noise_sweep(&a.into()),
        Command::Adaptive(a) => cmd_adaptive(&a.into()),
        Command::DecayDemo(a) => cmd_decay_demo(&DecayOptions {
            eta: a.eta,
            steps: a.steps,
            dimension: a.dimension,
            out: a.out,
        }),
    };
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kpref: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
