mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Region decomposition, bounded verification and test generation for MML
/// models, plus incremental project formalization and benchmark scoring.
#[derive(Parser, Debug)]
#[command(name = "regionforge", version, about)]
pub struct Cli {
    /// Emit one JSON document on stdout instead of human-readable text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Exit 0 on refutations and validation errors instead of 1.
    #[arg(long, global = true)]
    pub findings_ok: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Model {
    /// MML source file.
    pub file: PathBuf,
    /// Project root used to resolve imports (defaults to the file's directory).
    #[arg(long)]
    pub root: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Search {
    /// Unroll depth for recursive functions.
    #[arg(long, env = "REGIONFORGE_DEPTH", default_value_t = 8)]
    pub depth: usize,
    /// Side condition restricting the explored inputs.
    #[arg(long)]
    pub assuming: Option<String>,
    /// Functions kept atomic during decomposition.
    #[arg(long)]
    pub basis: Vec<String>,
    /// Stop forking after this many paths; the result is then reported as unknown.
    #[arg(long, default_value_t = regionforge_core::decomp::DEFAULT_MAX_PATHS)]
    pub max_paths: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and typecheck a model.
    Admit {
        #[command(flatten)]
        model: Model,
    },
    /// Evaluate a function on literal arguments.
    Eval {
        #[command(flatten)]
        model: Model,
        function: String,
        /// Arguments as MML literals, e.g. `{ amount = 5; customer = Premium }`.
        args: Vec<String>,
    },
    /// Partition a function's inputs into behavioral regions.
    Decompose {
        #[command(flatten)]
        model: Model,
        function: String,
        #[command(flatten)]
        search: Search,
    },
    /// Prove or refute a boolean goal up to the unroll depth.
    Verify {
        #[command(flatten)]
        model: Model,
        goal: String,
        #[command(flatten)]
        search: Search,
    },
    /// Search for inputs making a boolean function true.
    Instance {
        #[command(flatten)]
        model: Model,
        function: String,
        #[command(flatten)]
        search: Search,
    },
    /// Generate one test per region.
    Testgen {
        #[command(flatten)]
        model: Model,
        function: String,
        #[command(flatten)]
        search: Search,
        /// Template file; defaults to the bundled Python template.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Write rendered tests here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan a project directory and print its models and import graph.
    Scan { root: PathBuf },
    /// Show the formalization plan for a project.
    Plan {
        root: PathBuf,
        /// Limit to this model (path relative to the root) and its dependencies.
        #[arg(long)]
        target: Option<String>,
    },
    /// Formalize a project and write its status file.
    Formalize {
        root: PathBuf,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, env = "REGIONFORGE_DEPTH", default_value_t = 8)]
        depth: usize,
    },
    /// Watch a project and keep it formalized.
    Serve {
        #[arg(long)]
        root: PathBuf,
        /// Poll the filesystem at this interval (ms) instead of native events.
        #[arg(long)]
        poll_interval: Option<u64>,
        #[arg(long, default_value_t = 200)]
        debounce_ms: u64,
        /// Unix socket for status and formalize requests.
        #[arg(long)]
        socket: Option<PathBuf>,
        #[arg(long, env = "REGIONFORGE_DEPTH", default_value_t = 8)]
        depth: usize,
    },
    /// Score benchmark assessments and aggregate them.
    Score {
        #[arg(long = "in")]
        input: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the CSV report here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    // Internal failures report one line and exit 3, never a backtrace.
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    let code = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| commands::run(&cli)));
    ExitCode::from(code.unwrap_or(commands::INTERNAL))
}
