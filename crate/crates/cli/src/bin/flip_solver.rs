//! A deliberately broken solver for testing the bug detector: it runs a
//! real solver and answers `unsat` instead of `sat` whenever the script
//! contains a marker string.
//!
//! Usage: `flip-solver --marker M --solver PATH [ARGS...] SCRIPT`

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, ExitCode};

use clap::Parser;

#[derive(Parser, Debug)]
struct Args {
    /// Text whose presence in the script triggers the flip.
    #[arg(long)]
    marker: String,
    #[arg(long)]
    solver: PathBuf,
    /// Solver arguments followed by the script path.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, required = true)]
    rest: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let script = args.rest.last().expect("required by clap");
    let text = match std::fs::read_to_string(script) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("flip-solver: {script}: {e}");
            return ExitCode::from(2);
        }
    };
    let out = match Command::new(&args.solver).args(&args.rest).output() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("flip-solver: {}: {e}", args.solver.display());
            return ExitCode::from(2);
        }
    };
    let stdout = String::from_utf8_lossy(&out.stdout);
    let flipped = text.contains(&args.marker) && stdout.lines().next().is_some_and(|l| l.trim() == "sat");
    let mut o = std::io::stdout().lock();
    // A flipped answer drops the model, as a genuine unsat answer would.
    let _ = if flipped { o.write_all(b"unsat\n") } else { o.write_all(stdout.as_bytes()) };
    let _ = std::io::stderr().write_all(&out.stderr);
    ExitCode::from(out.status.code().unwrap_or(1).clamp(0, 255) as u8)
}
