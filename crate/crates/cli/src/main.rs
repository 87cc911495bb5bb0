use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;

#[derive(Debug, Parser)]
#[command(name = "coos", version, about = "Impact evaluation, policy simulation, consensus analysis and behavior change on coos projects")]
struct Cli {
    /// Project file to read (or write, for `project new`).
    #[arg(long, global = true)]
    project: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create, load or validate a project file.
    #[command(subcommand)]
    Project(ProjectCmd),
    /// Logic-model sensitivity ranking and pulse trajectories.
    #[command(subcommand)]
    Impact(ImpactCmd),
    /// Multi-agent policy simulation.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Consensus proposals from preference profiles.
    #[command(subcommand)]
    Consensus(ConsensusCmd),
    /// Social value orientation scoring.
    #[command(subcommand)]
    Svo(SvoCmd),
    /// Cooperation-rate prediction and intervention ranking.
    #[command(subcommand)]
    Behavior(BehaviorCmd),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Mode {
    #[default]
    Range,
    Minmax,
}

#[derive(Debug, Subcommand)]
enum ProjectCmd {
    /// Write a new project to `--project`.
    New {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
        /// Seed from a shipped template.
        #[arg(long)]
        template: Option<String>,
        /// Replace an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Print the project in canonical form.
    Load,
    /// Check the project and report every problem found.
    Validate,
    /// List shipped templates.
    Templates,
}

#[derive(Debug, Subcommand)]
enum ImpactCmd {
    /// Inputs ordered by impact sensitivity.
    Rank {
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Impact per period under pulsed inputs.
    Trajectory {
        /// Settings file; the logic model's own settings when absent.
        #[arg(long)]
        settings: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum SimCmd {
    /// Raw value-node outputs per scenario.
    Evaluate,
    /// Scenarios on the social/environmental/economic simplex.
    Ternary {
        #[arg(long, value_enum, default_value_t)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Side-by-side comparison with the sensitivity block of one scenario.
    Compare {
        #[arg(long)]
        selected: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        mode: Mode,
    },
}

#[derive(Debug, Args)]
struct ProfileSource {
    /// Use the profiles collected in this session of the project.
    #[arg(long, conflicts_with = "profiles")]
    session: Option<String>,
    /// JSON array of preference profiles, analyzed against the project's choices.
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ConsensusCmd {
    /// Permissible, compromise and sublated proposals.
    Analyze {
        #[command(flatten)]
        source: ProfileSource,
    },
    /// Compare the fast analysis with exhaustive search.
    OracleCheck {
        #[command(flatten)]
        source: ProfileSource,
        /// Also check this many random instances.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
enum SvoCmd {
    /// Score `participant,item_id,position` rows.
    Score {
        #[arg(long)]
        responses: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Subject {
    /// Feature vector file; the project baseline when absent.
    #[arg(long, conflicts_with = "subject")]
    features: Option<PathBuf>,
    /// A subject registered in the project.
    #[arg(long)]
    subject: Option<String>,
}

#[derive(Debug, Subcommand)]
enum BehaviorCmd {
    /// Cooperation rate and feature sensitivities.
    Predict {
        #[command(flatten)]
        who: Subject,
    },
    /// Interventions ranked by predicted gain.
    Rank {
        #[command(flatten)]
        who: Subject,
        /// Intervention menu; the project's plans when absent.
        #[arg(long)]
        plans: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// TOML file with bind, data_dir, auth and the other server settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    auth: Option<AuthArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AuthArg {
    Token,
    Open,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
