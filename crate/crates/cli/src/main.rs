//! `elasteig`: eigenfrequencies of linear elasticity and Stokes with a
//! variable Young's modulus, by mixed finite elements and adaptive refinement.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elasteig_core::exec::{execution_for_threads, init_threads};
use serde_json::{json, Value};

use config::{load, Overrides};
use output::{envelope, OutDir};

#[derive(Parser)]
#[command(name = "elasteig", version, about = "Mixed finite element eigenvalue solver for elasticity and Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides `output.dir` of the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs every loop sequentially and reproducibly.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of the eigensolver start vector; overrides `eigen.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the eigenproblem on one mesh.
    Solve { config: PathBuf },
    /// Run a uniform or adaptive convergence study.
    Study { config: PathBuf },
    /// Run the built-in invariant checks.
    Verify {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<verify::Fault>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
    Verify(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) | CliError::Io(_) => 2,
            CliError::Verify(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
        }
    }
}

fn run_verify(cli: &Cli, fault: Option<verify::Fault>, cli_echo: &Value, exec: elasteig_core::Execution) -> Result<(), CliError> {
    let verifier = verify::Verifier {
        fault,
        seed: cli.seed.unwrap_or(elasteig_core::eigensolve::EigenOptions::default().seed),
        exec,
    };
    let results = verifier.run();
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {} ({:.2} s)", r.name, r.detail, r.seconds);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("verify: {} passed, {failed} failed", results.len() - failed);
    if let Some(dir) = &cli.out {
        let mut doc = envelope("verify", None, cli_echo);
        doc.insert("checks".into(), json!(results));
        doc.insert("status".into(), json!(if failed == 0 { "ok" } else { "failed" }));
        OutDir::create(dir)?.write_json("verify.json", &Value::Object(doc))?;
    }
    if failed > 0 {
        return Err(CliError::Verify(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    if let Some(t) = cli.threads {
        init_threads(t);
    }
    let exec = execution_for_threads(cli.threads);
    let overrides = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        threads: cli.threads,
    };
    let cli_echo = json!(overrides);
    match &cli.command {
        Command::Solve { config } => commands::solve(&load(config, &overrides)?, &cli_echo, exec),
        Command::Study { config } => commands::study(&load(config, &overrides)?, &cli_echo, exec),
        Command::Verify { inject_fault } => run_verify(cli, *inject_fault, &cli_echo, exec),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("elasteig: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
