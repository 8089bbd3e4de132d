use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cqtl_cli::{emit_json, load_model, render_text, run_check, trace, CheckFlags, CliError, Engine};

#[derive(Parser)]
#[command(
    name = "cqtl",
    version,
    about = "Model checking for quantified temporal logic over counterpart models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Validate { model: PathBuf },
    /// Evaluate a formula with the fixpoint engine.
    Check(CheckArgs),
    /// Evaluate a formula by exploring configurations explicitly.
    Oracle(CheckArgs),
    /// Follow one element along a path of transitions.
    Trace {
        model: PathBuf,
        /// Starting element, as `element@world`.
        #[arg(long)]
        start: String,
        /// Comma-separated transition names.
        #[arg(long, value_delimiter = ',')]
        path: Vec<String>,
    },
}

#[derive(Args)]
struct CheckArgs {
    model: PathBuf,
    /// Context such as `x:node, X:Set(node)`.
    #[arg(short, long, default_value = "")]
    context: String,
    #[arg(short, long)]
    formula: String,
    /// Restrict output to one world.
    #[arg(long)]
    world: Option<String>,
    #[arg(long)]
    json: bool,
    /// Use the explicit configuration engine.
    #[arg(long)]
    oracle: bool,
    /// Run both engines; exit 3 if they disagree.
    #[arg(long)]
    compare: bool,
    /// Rewrite equalities into set membership before evaluating.
    #[arg(long)]
    expand_eq: bool,
    /// Exit 1 if some reported world has no satisfying assignment.
    #[arg(long)]
    require_sat: bool,
    #[arg(long, default_value_t = 16)]
    max_so_carrier: usize,
    /// Report elapsed time in the stats.
    #[arg(long)]
    timing: bool,
}

fn color() -> bool {
    match std::env::var("CQTL_COLOR").as_deref() {
        Ok("1") => true,
        Ok("0") => false,
        _ => std::io::IsTerminal::is_terminal(&std::io::stdout()),
    }
}

fn check(args: CheckArgs, engine: Engine) -> Result<u8, CliError> {
    let m = load_model(&args.model)?;
    let flags = CheckFlags {
        world: args.world,
        engine: if args.oracle { Engine::Oracle } else { engine },
        compare: args.compare,
        expand_eq: args.expand_eq,
        require_sat: args.require_sat,
        max_so_carrier: args.max_so_carrier,
        timing: args.timing,
    };
    let outcome = run_check(&m, &args.formula, &args.context, &flags)?;
    let mut out = std::io::stdout().lock();
    if args.json {
        let _ = out.write_all(&emit_json(&outcome.document));
    } else {
        let _ = out.write_all(render_text(&outcome.document, color()).as_bytes());
    }
    if outcome.agreement == Some(false) {
        eprintln!("engines disagree");
    }
    Ok(outcome.exit_code as u8)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Validate { model } => {
            let m = load_model(&model)?;
            println!("ok: {} worlds, {} transitions", m.worlds().len(), m.transitions().len());
            Ok(0)
        }
        Command::Check(args) => check(args, Engine::Fixpoint),
        Command::Oracle(args) => check(args, Engine::Oracle),
        Command::Trace { model, start, path } => {
            let m = load_model(&model)?;
            for line in trace(&m, &start, &path)? {
                println!("{line}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
