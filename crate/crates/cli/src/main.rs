use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qbforge::gadgets::GadgetError;
use qbforge::oracle::OracleError;
use qbforge::reductions::ReductionError;

mod commands;

/// Gadgets, reductions and deciders for restricted forall-exists 3-SAT and
/// NAE-3-SAT.
///
/// Exit status: 0 success or YES, 1 NO (or a failed check), 2 usage or
/// parse error, 3 oracle budget exceeded.
#[derive(Parser, Debug)]
#[command(name = "qbforge", version)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Oracle budget in work units.
    #[arg(long, env = "QBFORGE_BUDGET", default_value_t = qbforge::oracle::Budget::DEFAULT_LIMIT, global = true)]
    budget: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Poly,
    Oracle,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Dialect {
    Qext,
    Qdimacs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    Sat,
    Nae,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an instance against a named class, or list the classes it is in.
    Validate {
        file: PathBuf,
        #[arg(long)]
        class: Option<String>,
    },
    /// Decide a forall-exists instance.
    Decide {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Run a reduction route and write the target instance.
    Reduce {
        file: PathBuf,
        #[arg(long)]
        route: String,
        /// Target file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Trace file; stderr when absent (text format only).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare the oracle verdicts of two instances.
    CheckEquiv { source: PathBuf, target: PathBuf },
    /// Gadget catalog operations.
    Gadget {
        #[command(subcommand)]
        action: GadgetAction,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'p', long, default_value_t = 1)]
        universals: usize,
        #[arg(short = 'q', long, default_value_t = 3)]
        existentials: usize,
        /// 0 lets the class choose.
        #[arg(short = 'm', long, default_value_t = 3)]
        clauses: usize,
        #[arg(long)]
        class: Option<String>,
        /// Semantics when no class is given.
        #[arg(long, value_enum, default_value_t = SemanticsArg::Nae)]
        semantics: SemanticsArg,
        #[arg(long, default_value_t = 1)]
        universal_appearances: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-write an instance in QEXT or QDIMACS form.
    Convert {
        file: PathBuf,
        #[arg(long, value_enum)]
        to: Dialect,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum GadgetAction {
    /// Check the extension contract of one gadget, or of all of them.
    Verify { name: String },
    /// Print a gadget as a QEXT instance.
    Show { name: String },
}

fn budget_exceeded(e: &anyhow::Error) -> bool {
    let hit = |o: &OracleError| matches!(o, OracleError::BudgetExceeded { .. });
    e.chain().any(|c| {
        c.downcast_ref::<OracleError>().is_some_and(hit)
            || matches!(c.downcast_ref::<ReductionError>(), Some(ReductionError::Oracle(o)) if hit(o))
            || matches!(c.downcast_ref::<GadgetError>(), Some(GadgetError::Oracle(o)) if hit(o))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.format == Format::Json;
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = if budget_exceeded(&e) { 3 } else { 2 };
            if json {
                let report = serde_json::json!({ "error": format!("{e:#}"), "exit_code": code });
                println!("{report}");
            }
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
