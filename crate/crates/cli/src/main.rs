use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netdefense_core::engine::{solve, Equilibrium, SolveError};
use netdefense_core::generate::{generate, GeneratorConfig};
use netdefense_core::io::{parse_equilibrium, parse_game, EquilibriumFile, GameFile, IoError};
use netdefense_core::oracle::{verify_equilibrium, VerificationReport, DEFAULT_EPSILON_QUADRATIC};

const EXIT_INPUT: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;
const EXIT_VERIFY: u8 = 4;
const EXIT_NUMERIC: u8 = 5;

#[derive(Parser)]
#[command(name = "netdefense", version, about = "Nash equilibria of attack and defense games on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a game file and print the equilibrium.
    Solve {
        game: PathBuf,
        /// Tolerance used by --verify.
        #[arg(long, default_value_t = DEFAULT_EPSILON_QUADRATIC)]
        tolerance: f64,
        /// Check the result with the independent verifier.
        #[arg(long)]
        verify: bool,
        /// Write the attack tree as a Graphviz digraph.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the equilibrium here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check that an equilibrium file is an equilibrium of a game file.
    Verify {
        game: PathBuf,
        equilibrium: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON_QUADRATIC)]
        tolerance: f64,
    },
    /// Print a random connected game instance.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edge_prob: f64,
        #[arg(long)]
        seed: u64,
        /// Assign valuations in random label order.
        #[arg(long)]
        no_sort_b: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::new(EXIT_INPUT, e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match &e {
            SolveError::Model(_) => EXIT_INPUT,
            SolveError::NotProper { .. }
            | SolveError::NoMixedSupport
            | SolveError::MultipleSupports(_)
            | SolveError::BracketFailure { .. } => EXIT_ASSUMPTION,
            SolveError::Graph(_)
            | SolveError::DomainError { .. }
            | SolveError::NormalizationFailure { .. }
            | SolveError::PathCollision { .. } => EXIT_NUMERIC,
        };
        Failure::new(code, e.to_string())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn print_report(report: &VerificationReport) {
    println!("is_epsilon_ne: {}", report.is_epsilon_ne);
    println!("epsilon_used: {:e}", report.epsilon_used);
    println!("attacker_gap: {:e}", report.attacker_gap);
    println!("support_gap: {:e}", report.support_gap);
    println!("max_defender_gap: {:e}", report.max_defender_gap());
    for (i, gap) in report.defender_gaps.iter().enumerate() {
        println!("  defender {}: {gap:e}", i + 1);
    }
    println!("normalization_gap: {:e}", report.normalization_gap);
    println!("best_response: {:?} -> {}", report.best_response.0, report.best_response.1);
}

fn cmd_solve(
    game_path: &Path,
    tolerance: f64,
    verify: bool,
    dot: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let game = parse_game(game_path)?;
    let eq = solve(&game)?;
    let document = EquilibriumFile::from(&eq).to_json();
    match output {
        Some(path) => write_file(path, &document)?,
        None => println!("{document}"),
    }
    if let Some(path) = dot {
        let tree = match &eq {
            Equilibrium::Pure(_) => eq.to_mixed().tree,
            Equilibrium::Mixed(m) => m.tree.clone(),
        };
        write_file(path, &tree.to_dot(game.valuations()))?;
    }
    if verify {
        let report = verify_equilibrium(&game, &eq.to_mixed(), tolerance)
            .map_err(|e| Failure::new(EXIT_NUMERIC, e.to_string()))?;
        if !report.is_epsilon_ne {
            print_report(&report);
            return Err(Failure::new(EXIT_VERIFY, format!("solution is not a {tolerance:e}-equilibrium")));
        }
    }
    Ok(())
}

fn cmd_verify(game_path: &Path, eq_path: &Path, tolerance: f64) -> Result<(), Failure> {
    let game = parse_game(game_path)?;
    let eq = parse_equilibrium(eq_path)?.to_equilibrium();
    let report = verify_equilibrium(&game, &eq, tolerance).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    print_report(&report);
    if report.is_epsilon_ne {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERIFY, format!("not a {tolerance:e}-equilibrium")))
    }
}

fn cmd_gen(config: GeneratorConfig) -> Result<(), Failure> {
    let game = generate(&config).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    println!("{}", GameFile::from_game(&game)?.to_json());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { game, tolerance, verify, dot, output } => {
            cmd_solve(&game, tolerance, verify, dot.as_deref(), output.as_deref())
        }
        Command::Verify { game, equilibrium, tolerance } => cmd_verify(&game, &equilibrium, tolerance),
        Command::Gen { nodes, edge_prob, seed, no_sort_b } => {
            cmd_gen(GeneratorConfig { nodes, edge_prob, seed, ascending_b: !no_sort_b })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
