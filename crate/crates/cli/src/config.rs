use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "nlgc", version, about = "Compile non-local games into single-prover protocols and test them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact classical value and quantum strategy value.
    Value { game: Option<String> },
    /// Acceptance rate of a prover on the compiled game.
    Run { game: Option<String> },
    /// Extract local provers from a deterministic classical prover.
    Extract { game: Option<String> },
    /// Distinguishing advantage of the adversary built from the extraction.
    Distinguish { game: Option<String> },
    /// Threshold repetition of the compiled game, honest vs best classical.
    Repeat { game: Option<String> },
    /// Fiat-Shamir two-message variant against the interactive baseline.
    Fs { game: Option<String> },
    /// Homomorphic-evaluation correctness suites.
    QheSelftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Value { .. } => "value",
            Command::Run { .. } => "run",
            Command::Extract { .. } => "extract",
            Command::Distinguish { .. } => "distinguish",
            Command::Repeat { .. } => "repeat",
            Command::Fs { .. } => "fs",
            Command::QheSelftest => "qhe-selftest",
        }
    }

    pub fn game(&self) -> Option<&str> {
        match self {
            Command::Value { game }
            | Command::Run { game }
            | Command::Extract { game }
            | Command::Distinguish { game }
            | Command::Repeat { game }
            | Command::Fs { game } => game.as_deref(),
            Command::QheSelftest => None,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Command::Value { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProverKind {
    Honest,
    Classical,
    Decrypting,
    Constant,
    Random,
    Reject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ideal,
    Leaky,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Sequential,
    Parallel,
}

#[derive(Args, Debug)]
pub struct Options {
    /// Built-in game name (chsh, ghz3, magic_square) or path to a game JSON file.
    #[arg(long = "game", id = "game_flag", global = true)]
    pub game: Option<String>,
    #[arg(long, global = true, default_value_t = 8)]
    pub lambda: u32,
    #[arg(long, global = true, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, global = true, default_value_t = 300)]
    pub t: usize,
    /// Repetition threshold; defaults to the midpoint of the classical and quantum values.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub trials: u64,
    /// Root seed; required by every stochastic command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Ideal)]
    pub mode: ModeArg,
    #[arg(long, global = true, default_value_t = 2)]
    pub rho: usize,
    #[arg(long, global = true, value_enum, default_value_t = ProverKind::Honest)]
    pub prover: ProverKind,
    #[arg(long, global = true, value_enum, default_value_t = Scheme::Sequential)]
    pub scheme: Scheme,
    /// Also write the report to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Cli {
    pub fn game_arg(&self) -> Option<&str> {
        self.command.game().or(self.opts.game.as_deref())
    }

    /// Configuration echoed into the report.
    pub fn echo(&self) -> Value {
        let o = &self.opts;
        json!({
            "game": self.game_arg(),
            "lambda": o.lambda,
            "epsilon": o.epsilon,
            "t": o.t,
            "theta": o.theta,
            "trials": o.trials,
            "seed": o.seed,
            "mode": format!("{:?}", o.mode).to_lowercase(),
            "rho": o.rho,
            "prover": format!("{:?}", o.prover).to_lowercase(),
            "scheme": format!("{:?}", o.scheme).to_lowercase(),
        })
    }
}
