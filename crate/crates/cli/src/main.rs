//! `latc`: check, run and verify latency bounds of placed programs.
//!
//! Exit codes: 0 success, 1 program or topology error, 2 bound violation
//! or inconclusive verification, 3 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use latc_core::fuzz::{fuzz, CaseOutcome, FuzzConfig};
use latc_core::runtime::{
    check_soundness_with, run_traced, SoundnessOptions, Strategy, Verdict, DEFAULT_CAP, DEFAULT_FUEL,
};
use latc_core::syntax::{parse, pretty, Program};
use latc_core::topology::{load_topology, LatencyMatrix};
use latc_core::typer::{typecheck_program, ProgramTypes};

const OK: u8 = 0;
const PROGRAM_ERROR: u8 = 1;
const UNSOUND: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "latc", version, about = "Static latency bounds for placed programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the checked type of every definition and of main.
    Check {
        program: PathBuf,
        /// Topology file; defaults to the program's `-- topology:` comment.
        #[arg(long)]
        topology: Option<PathBuf>,
    },
    /// Evaluate main and report its value and latency.
    Run {
        program: PathBuf,
        #[arg(long)]
        topology: Option<PathBuf>,
        /// `leftmost`, `seeded:<n>` or `enumerate` (worst case).
        #[arg(long, default_value = "leftmost", value_parser = parse_strategy)]
        strategy: Strategy,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Print one line per step: depth, instances, latency, redex.
        #[arg(long)]
        trace: bool,
    },
    /// Compare every reduction sequence against the static bound.
    Verify {
        program: PathBuf,
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long, hide = true, default_value_t = 0, allow_negative_numbers = true)]
        inject_bound_delta: i64,
    },
    /// Generate and verify random well-typed programs.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use this topology for every program instead of random ones.
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        /// Print one line per generated program.
        #[arg(long)]
        verbose: bool,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s {
        "leftmost" => Ok(Strategy::Leftmost),
        "enumerate" => Ok(Strategy::Enumerate { cap: DEFAULT_CAP }),
        _ => match s.strip_prefix("seeded:") {
            Some(n) => n
                .parse()
                .map(Strategy::Seeded)
                .map_err(|_| format!("bad seed `{n}`")),
            None => Err(format!("unknown strategy `{s}`; expected leftmost, seeded:<n> or enumerate")),
        },
    }
}

/// Ends a command early with an exit code; messages are already printed.
struct Exit(u8);

type CmdResult = Result<u8, Exit>;

fn read(path: &Path) -> Result<String, Exit> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        Exit(USAGE)
    })
}

/// The topology named on the command line, or by a `-- topology: <file>`
/// comment in the program, relative to the program's directory.
fn topology_path(program: &Path, src: &str, flag: Option<&Path>) -> Result<PathBuf, Exit> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    let named = src.lines().find_map(|l| {
        l.trim()
            .strip_prefix("--")
            .and_then(|rest| rest.trim().strip_prefix("topology:"))
            .map(|f| f.trim().to_string())
    });
    match named {
        Some(f) => Ok(program.parent().unwrap_or(Path::new(".")).join(f)),
        None => {
            eprintln!("error: no --topology given and {} names none", program.display());
            Err(Exit(USAGE))
        }
    }
}

fn load_topo(path: &Path) -> Result<LatencyMatrix, Exit> {
    let src = read(path)?;
    load_topology(&src).map_err(|e| {
        match e.line() {
            Some(line) => println!("ERROR {}:{line} [Topology] {e}", path.display()),
            None => println!("ERROR {} [Topology] {e}", path.display()),
        }
        Exit(PROGRAM_ERROR)
    })
}

struct Loaded {
    program: Program,
    topo: LatencyMatrix,
    types: ProgramTypes,
}

fn load(program: &Path, topology: Option<&Path>) -> Result<Loaded, Exit> {
    let src = read(program)?;
    let topo = load_topo(&topology_path(program, &src, topology)?)?;
    let file = program.display().to_string();
    let p = parse(&src).map_err(|e| {
        println!("ERROR {file}:{} [Syntax] {e}", e.pos);
        Exit(PROGRAM_ERROR)
    })?;
    let types = typecheck_program(&p, &topo).map_err(|errs| {
        for e in &errs {
            println!("{}", e.render(&file));
        }
        Exit(PROGRAM_ERROR)
    })?;
    Ok(Loaded {
        program: p,
        topo,
        types,
    })
}

fn check(program: &Path, topology: Option<&Path>) -> CmdResult {
    let l = load(program, topology)?;
    for (name, _, ty) in &l.types.defs {
        println!("{name} : {ty}");
    }
    println!("main : {}", l.types.main);
    Ok(OK)
}

fn run(program: &Path, topology: Option<&Path>, strategy: Strategy, fuel: usize, trace: bool) -> CmdResult {
    let l = load(program, topology)?;
    match run_traced(&l.program, &l.topo, strategy, fuel) {
        Ok((result, events)) => {
            if trace {
                for e in &events {
                    println!("{e}");
                }
            }
            println!("value = {}", result.value);
            println!("latency = {}", result.latency);
            Ok(OK)
        }
        Err(e) => {
            println!("ERROR {} [Runtime] {e}", program.display());
            Ok(PROGRAM_ERROR)
        }
    }
}

fn verify(program: &Path, topology: Option<&Path>, opts: SoundnessOptions) -> CmdResult {
    let l = load(program, topology)?;
    match check_soundness_with(&l.program, &l.topo, &opts) {
        Ok(Verdict::Ok { max_latency, bound, .. }) => {
            println!("OK max_lR={max_latency} bound={bound}");
            Ok(OK)
        }
        Ok(Verdict::Violation { result, bound, trace }) => {
            println!("VIOLATION lR={} bound={bound} value={}", result.latency, result.value);
            for e in &trace {
                println!("{e}");
            }
            Ok(UNSOUND)
        }
        Ok(Verdict::Inconclusive { bound, reason }) => {
            println!("INCONCLUSIVE bound={bound}: {reason}");
            Ok(UNSOUND)
        }
        Err(e) => {
            println!("ERROR {} [Runtime] {e}", program.display());
            Ok(PROGRAM_ERROR)
        }
    }
}

fn fuzz_cmd(cfg: FuzzConfig, verbose: bool) -> CmdResult {
    let report = fuzz(&cfg);
    for f in &report.failures {
        println!("generator: program {} attempt {} discarded: {}", f.index, f.attempt, f.reason);
    }
    for c in &report.cases {
        match &c.outcome {
            CaseOutcome::Ok { max_latency, bound } => {
                if verbose {
                    println!("#{} OK max_lR={max_latency} bound={bound}", c.index);
                }
            }
            CaseOutcome::Violation { latency, bound, trace } => {
                println!("#{} VIOLATION lR={latency} bound={bound}", c.index);
                if let Some(p) = &c.program {
                    print!("{}", pretty(p));
                }
                for line in trace {
                    println!("  {line}");
                }
            }
            CaseOutcome::Inconclusive(reason) => println!("#{} INCONCLUSIVE {reason}", c.index),
            CaseOutcome::Exhausted => println!("#{} no well-typed program generated", c.index),
        }
    }
    println!("{}", report.summary());
    Ok(if report.violations() == 0 { OK } else { UNSOUND })
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Check { program, topology } => check(&program, topology.as_deref()),
        Command::Run {
            program,
            topology,
            strategy,
            fuel,
            trace,
        } => run(&program, topology.as_deref(), strategy, fuel, trace),
        Command::Verify {
            program,
            topology,
            fuel,
            cap,
            inject_bound_delta,
        } => verify(
            &program,
            topology.as_deref(),
            SoundnessOptions {
                fuel,
                cap,
                bound_delta: inject_bound_delta,
            },
        ),
        Command::Fuzz {
            count,
            seed,
            topology,
            fuel,
            cap,
            verbose,
        } => {
            let topology = match topology {
                Some(p) => Some(load_topo(&p)?),
                None => None,
            };
            let cfg = FuzzConfig {
                count,
                seed,
                topology,
                soundness: SoundnessOptions {
                    fuel,
                    cap,
                    bound_delta: 0,
                },
            };
            fuzz_cmd(cfg, verbose)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) | Err(Exit(code)) => ExitCode::from(code),
    }
}
