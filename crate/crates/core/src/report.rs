//! On-disk layout of findings and statistics.
//!
//! A finding directory holds everything needed to reproduce it with just a
//! solver binary: the seed, the mutant, the chain turning one into the
//! other, the verdicts and the raw solver output.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::ast::{parse_script, print_script, ChcSystem, ParseError};
use crate::mutation::MutationChain;
use crate::oracle::{Evidence, Finding};
use crate::scheduler::StatsSnapshot;

pub const SEED_FILE: &str = "seed.smt2";
pub const MUTANT_FILE: &str = "mutant.smt2";
pub const CHAIN_FILE: &str = "chain.json";
pub const FINDING_FILE: &str = "finding.json";
pub const VERDICTS_FILE: &str = "verdicts.txt";
pub const OUTPUT_FILE: &str = "solver-output.txt";
pub const REDUCED_FILE: &str = "reduced.smt2";
pub const REDUCED_CHAIN_FILE: &str = "reduced-chain.json";
pub const REDUCTION_LOG: &str = "reduction.log";
pub const STATS_FILE: &str = "stats.json";
pub const FINDINGS_DIR: &str = "findings";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| ReportError::Json { path: path.to_path_buf(), source })?;
    write_file(path, text + "\n")
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ReportError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })
}

pub fn read_system(path: &Path) -> Result<ChcSystem, ReportError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_script(&text).map_err(|source| ReportError::Parse { path: path.to_path_buf(), source })
}

/// Everything written for one finding.
#[derive(Clone, Debug)]
pub struct FindingReport {
    pub finding: Finding,
    pub seed: ChcSystem,
    pub mutant: ChcSystem,
    pub stdout: String,
    pub stderr: String,
}

fn verdicts_text(f: &Finding) -> String {
    let mut s = format!("kind: {}\ntruth: {}\nmutant: {}\n", f.kind, f.truth, f.mutant_verdict);
    match &f.evidence {
        Evidence::VerdictPair { .. } => {}
        Evidence::FailingClause { index, witness } => {
            s.push_str(&format!("failing clause: {index}\nwitness:\n{witness}\n"));
        }
        Evidence::Termination { detail } => s.push_str(&format!("termination: {detail}\n")),
    }
    s
}

/// Writes `report` to `<out_dir>/findings/<counter>-<kind>/`.
pub fn write_finding(out_dir: &Path, counter: usize, report: &FindingReport) -> Result<PathBuf, ReportError> {
    let dir = out_dir.join(FINDINGS_DIR).join(format!("{counter:05}-{}", report.finding.kind));
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_file(&dir.join(SEED_FILE), print_script(&report.seed))?;
    write_file(&dir.join(MUTANT_FILE), print_script(&report.mutant))?;
    write_json(&dir.join(CHAIN_FILE), &report.finding.chain)?;
    write_json(&dir.join(FINDING_FILE), &report.finding)?;
    write_file(&dir.join(VERDICTS_FILE), verdicts_text(&report.finding))?;
    write_file(
        &dir.join(OUTPUT_FILE),
        format!("--- stdout ---\n{}\n--- stderr ---\n{}\n", report.stdout, report.stderr),
    )?;
    Ok(dir)
}

/// A finding read back from its directory.
#[derive(Clone, Debug)]
pub struct LoadedFinding {
    pub dir: PathBuf,
    pub finding: Finding,
    pub seed: ChcSystem,
    pub mutant_text: String,
}

pub fn load_finding(dir: &Path) -> Result<LoadedFinding, ReportError> {
    let mut finding: Finding = read_json(&dir.join(FINDING_FILE))?;
    // chain.json is the replay artifact; it wins if edited by hand.
    finding.chain = read_json::<MutationChain>(&dir.join(CHAIN_FILE))?;
    let mutant_path = dir.join(MUTANT_FILE);
    Ok(LoadedFinding {
        dir: dir.to_path_buf(),
        seed: read_system(&dir.join(SEED_FILE))?,
        mutant_text: fs::read_to_string(&mutant_path).map_err(io_err(&mutant_path))?,
        finding,
    })
}

pub fn write_stats(out_dir: &Path, snapshot: &StatsSnapshot) -> Result<(), ReportError> {
    // Write-then-rename so readers never see a partial snapshot.
    let tmp = out_dir.join(format!("{STATS_FILE}.tmp"));
    write_json(&tmp, snapshot)?;
    let dest = out_dir.join(STATS_FILE);
    fs::rename(&tmp, &dest).map_err(io_err(&dest))
}
