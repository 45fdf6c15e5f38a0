//! Command-line front end: one verb per invocation, results on stdout,
//! diagnostics on stderr. Exit status 0 on success, 1 on domain errors, 2
//! on usage errors.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "gridschema", version, about = "Grid automata and schemas: inspect, transform, compare, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Bindings {
    /// `NAME=VALUE`, `NAME@SLOT=VALUE`, or `NAME@SLOT.PARAM=VALUE`.
    #[arg(long = "bind", value_name = "ENTRY")]
    entries: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Weak,
    Structural,
}

#[derive(Subcommand)]
enum HomCommand {
    /// Flags of a morphism given as a morphism document.
    Check { domain: String, codomain: String, morphism: String },
    /// Every morphism meeting the constraints, as morphism documents.
    Find {
        domain: String,
        codomain: String,
        #[arg(long, value_enum, default_value = "weak")]
        level: Level,
        #[arg(long)]
        typed: bool,
        #[arg(long)]
        mono: bool,
        #[arg(long)]
        epi: bool,
        #[arg(long)]
        limit: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Report every well-formedness violation.
    Validate { file: String },
    /// The node-level grid, as JSON.
    Grid { file: String },
    /// The port-level connection grid, as JSON.
    Cgrid { file: String },
    /// Roles over all resolutions of set-valued entries, as JSON.
    Classify { file: String },
    /// The variable multiset, as JSON.
    Vars { file: String },
    /// The same schema with ports dropped.
    Basic { file: String },
    /// Bind variables to values.
    Concretize {
        file: String,
        #[command(flatten)]
        bind: Bindings,
    },
    /// Bind every variable and resolve to an automaton.
    Realize {
        file: String,
        #[command(flatten)]
        bind: Bindings,
    },
    /// Replace constants with variables.
    Abstract {
        file: String,
        /// `SLOT=VAR:RANGE` or `SLOT.PARAM=VAR:RANGE`.
        #[arg(long = "abstract", value_name = "ITEM")]
        items: Vec<String>,
    },
    /// Narrow ranges and set-valued entries.
    Determine {
        file: String,
        /// `ID=SET`: a variable and its new range, or a port or link and its
        /// remaining options.
        #[arg(long = "restrict", value_name = "ENTRY")]
        entries: Vec<String>,
    },
    /// How the second schema relates to the first, as JSON.
    Compare { first: String, second: String },
    /// Equivalence by realizations and by renaming, as JSON.
    Equiv {
        first: String,
        second: String,
        /// Only compare realizations whose nodes all lie within this kind.
        #[arg(long, value_name = "KINDPATH")]
        within: Option<String>,
    },
    /// The most abstract schema with the same frame.
    Maxabs { file: String },
    /// Close every open side with stub nodes.
    Close { file: String },
    /// Check or search for morphisms.
    Hom {
        #[command(subcommand)]
        command: HomCommand,
    },
    /// Subschema relations of the first schema in the second, as JSON.
    Sub { part: String, whole: String },
    /// Completeness of a subschema, as JSON.
    Complete { part: String, whole: String },
    /// The part of the domain mapped into a subschema of the codomain.
    Preimage { domain: String, codomain: String, morphism: String, part: String },
    /// Run a realized automaton and print what leaves it, one JSON record
    /// per line.
    Sim {
        file: String,
        #[command(flatten)]
        bind: Bindings,
        /// JSON object from node id to behavior; nodes left out buffer.
        #[arg(long, value_name = "FILE")]
        behaviors: Option<String>,
        /// `[TARGET[@CYCLE]=]WORD`, or `signal:LEVEL` in place of a word.
        #[arg(long = "input", value_name = "INPUT")]
        inputs: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        max_cycles: u64,
        /// Write the trace here as line-delimited JSON.
        #[arg(long, value_name = "FILE")]
        trace: Option<String>,
    },
    /// Graphviz rendering.
    Dot {
        file: String,
        /// Draw ports as separate circles.
        #[arg(long)]
        ports: bool,
    },
}

/// Why a command stopped.
#[derive(Debug)]
enum Failure {
    /// The input is well-formed but the operation does not apply.
    Domain(String),
    /// The invocation itself is wrong.
    Usage(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
