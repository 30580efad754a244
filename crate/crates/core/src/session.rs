//! The fuzzing loop: seed preparation, dispatch of mutants to solver
//! workers, bug decisions, persistence and reduction of findings.

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::ast::{parse_script, print_script, ChcSystem};
use crate::mutation::{MutationChain, MutationError, MutationId, MutationRecord, MutationType, Mutator};
use crate::oracle::{
    clauses_equivalent, judge, validate_model, Decision, Evidence, Finding, FindingKind, GroundTruth, ModelCheck,
    OracleError, OracleSolver,
};
use crate::reducer::{reduce_chain, reduce_system, Budget, ReduceError};
use crate::report::{self, FindingReport, LoadedFinding, ReportError};
use crate::scheduler::{Heuristic, RunReport, Scheduler, SchedulerConfig, SeedGroup};
use crate::solver::{Outcome, RunnerError, SolveResult, Solver, TraceSummary};

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub seeds: Vec<PathBuf>,
    pub timeout_solve: Duration,
    pub timeout_oracle: Duration,
    pub workers: usize,
    pub mutation_types: Vec<MutationType>,
    pub heuristic: Heuristic,
    pub equiprobable: bool,
    pub out_dir: PathBuf,
    pub random_seed: u64,
    /// Stop after this many mutant runs.
    pub max_runs: Option<u64>,
    /// Stop after this much wall-clock time.
    pub max_time: Option<Duration>,
    /// Reduce every finding right after writing it.
    pub reduce: bool,
    pub reduce_budget: usize,
    pub snapshot_every: u64,
    /// Mutations tried per iteration before it is skipped.
    pub max_attempts: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            seeds: Vec::new(),
            timeout_solve: Duration::from_secs(60),
            timeout_oracle: Duration::from_secs(10),
            workers: 1,
            mutation_types: MutationType::ALL.to_vec(),
            heuristic: Heuristic::Default,
            equiprobable: false,
            out_dir: PathBuf::from("out"),
            random_seed: 0,
            max_runs: None,
            max_time: None,
            reduce: false,
            reduce_budget: 2000,
            snapshot_every: 500,
            max_attempts: 10,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("no seed could be admitted ({0} excluded)")]
    NoSeeds(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// `*.smt2` files directly inside `dir`, sorted by name.
pub fn seed_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "smt2"))
        .collect();
    files.sort();
    Ok(files)
}

/// A seed that passed admission, with its baseline trace.
#[derive(Clone, Debug)]
pub struct AdmittedSeed {
    pub group: SeedGroup,
    pub baseline: TraceSummary,
}

#[derive(Clone, Debug, Default)]
pub struct PreparedSeeds {
    pub admitted: Vec<AdmittedSeed>,
    pub excluded: Vec<(PathBuf, String)>,
}

fn seed_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Parses and solves every seed once; only seeds with a definite verdict
/// are admitted. Seeds are solved by up to `workers` threads; the result
/// keeps input order.
pub fn prepare_seeds(
    files: &[PathBuf],
    solver: &dyn Solver,
    timeout: Duration,
    workers: usize,
) -> Result<PreparedSeeds, RunnerError> {
    let slots: Vec<Mutex<Option<Result<AdmittedSeed, String>>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let failure: Mutex<Option<RunnerError>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..workers.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= files.len() || failure.lock().unwrap().is_some() {
                    break;
                }
                match admit(&files[i], solver, timeout) {
                    Ok(r) => *slots[i].lock().unwrap() = Some(r),
                    Err(e) => *failure.lock().unwrap() = Some(e),
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut out = PreparedSeeds::default();
    for (path, slot) in files.iter().zip(slots) {
        match slot.into_inner().unwrap().expect("every slot is filled") {
            Ok(a) => out.admitted.push(a),
            Err(reason) => {
                log::warn!("excluding seed {}: {reason}", path.display());
                out.excluded.push((path.clone(), reason));
            }
        }
    }
    Ok(out)
}

fn admit(path: &Path, solver: &dyn Solver, timeout: Duration) -> Result<Result<AdmittedSeed, String>, RunnerError> {
    let system = match fs::read_to_string(path) {
        Ok(text) => match parse_script(&text) {
            Ok(s) => s,
            Err(e) => return Ok(Err(format!("parse error: {e}"))),
        },
        Err(e) => return Ok(Err(format!("unreadable: {e}"))),
    };
    if let Err(e) = system.validate() {
        return Ok(Err(format!("not a well-formed CHC system: {e}")));
    }
    let r = solver.solve(&system, timeout)?;
    let kind = r.verdict.outcome.kind();
    Ok(match GroundTruth::from_verdict(kind) {
        Some(truth) => Ok(AdmittedSeed { group: SeedGroup::new(seed_id(path), system, truth), baseline: r.trace }),
        None => Err(format!("seed verdict is {kind}")),
    })
}

/// The solver's answer on a mutant together with the bug decision.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub result: SolveResult,
    pub decision: Decision,
    pub model_check: Option<ModelCheck>,
    /// Finding kind and evidence; `UnknownInfo` is logged, not persisted.
    pub finding: Option<(FindingKind, Evidence)>,
}

/// Solves `mutant` and classifies the verdict against `truth`, validating
/// the model when the verdict agrees with a satisfiable seed.
pub fn evaluate(
    solver: &dyn Solver,
    oracle: &dyn OracleSolver,
    truth: GroundTruth,
    mutant: &ChcSystem,
    timeout_solve: Duration,
    timeout_oracle: Duration,
) -> Result<Evaluation, SessionError> {
    let result = solver.solve(mutant, timeout_solve)?;
    let verdict = result.verdict.outcome.kind();
    let decision = judge(truth, verdict);
    let mut model_check = None;
    let finding = match (&result.verdict.outcome, decision) {
        (_, Decision::HandleBug) => Some((FindingKind::SatisfiabilityBug, Evidence::VerdictPair { truth, verdict })),
        (Outcome::Sat(model), Decision::CheckModel) => match validate_model(mutant, model, oracle, timeout_oracle) {
            Ok(check) => {
                let f = match &check {
                    ModelCheck::Invalid { clause, witness } => Some((
                        FindingKind::ModelBug,
                        Evidence::FailingClause { index: *clause, witness: witness.clone() },
                    )),
                    _ => None,
                };
                model_check = Some(check);
                f
            }
            // An incomplete model is logged like an inconclusive check.
            Err(OracleError::Model(e)) => {
                log::info!("model not checkable: {e}");
                None
            }
            Err(OracleError::Runner(e)) => return Err(e.into()),
        },
        (Outcome::Crash(detail), Decision::ReportCrash) => {
            Some((FindingKind::Crash, Evidence::Termination { detail: detail.clone() }))
        }
        (_, Decision::LogInfo) => {
            let detail = match &result.verdict.outcome {
                Outcome::Unknown(why) => why.clone(),
                _ => "timeout".into(),
            };
            Some((FindingKind::UnknownInfo, Evidence::Termination { detail }))
        }
        _ => None,
    };
    Ok(Evaluation { result, decision, model_check, finding })
}

struct Job {
    group: usize,
    parent: (u64, usize),
    truth: GroundTruth,
    mutation: MutationId,
    record: MutationRecord,
    /// Chain from the seed to `mutant`, fixed at dispatch time.
    chain: MutationChain,
    mutant: ChcSystem,
}

struct JobResult {
    job: Job,
    evaluation: Result<Evaluation, SessionError>,
}

#[derive(Clone, Debug, Default)]
pub struct SessionSummary {
    pub runs: u64,
    pub unique_traces: usize,
    pub findings: Vec<PathBuf>,
    pub elapsed: Duration,
}

pub struct Session {
    pub config: SessionConfig,
    solver: Arc<dyn Solver>,
    oracle: Arc<dyn OracleSolver>,
    mutator: Mutator,
    scheduler: Scheduler,
    stop: Arc<AtomicBool>,
    findings: Vec<PathBuf>,
    pub excluded: Vec<(PathBuf, String)>,
}

impl Session {
    /// Prepares the seeds and builds the scheduler. Refuses to start when
    /// no seed is admitted.
    pub fn new(
        config: SessionConfig,
        solver: Arc<dyn Solver>,
        oracle: Arc<dyn OracleSolver>,
        mutator: Mutator,
    ) -> Result<Session, SessionError> {
        if config.workers == 0 {
            return Err(SessionError::Config("at least one worker is required".into()));
        }
        if config.mutation_types.is_empty() {
            return Err(SessionError::Config("at least one mutation type must be enabled".into()));
        }
        fs::create_dir_all(&config.out_dir)
            .map_err(|source| ReportError::Io { path: config.out_dir.clone(), source })?;
        let prepared = prepare_seeds(&config.seeds, solver.as_ref(), config.timeout_solve, config.workers)?;
        if prepared.admitted.is_empty() {
            return Err(SessionError::NoSeeds(prepared.excluded.len()));
        }
        let mut scheduler = Scheduler::new(
            SchedulerConfig {
                heuristic: config.heuristic.clone(),
                mutation_types: config.mutation_types.clone(),
                equiprobable: config.equiprobable,
                ..SchedulerConfig::default()
            },
            config.random_seed,
        );
        for a in prepared.admitted {
            scheduler.add_group(a.group, &a.baseline);
        }
        log::info!(
            "admitted {} seeds, excluded {}, {} unique baseline traces",
            scheduler.groups().len(),
            prepared.excluded.len(),
            scheduler.unique_traces()
        );
        Ok(Session {
            config,
            solver,
            oracle,
            mutator,
            scheduler,
            stop: Arc::new(AtomicBool::new(false)),
            findings: Vec::new(),
            excluded: prepared.excluded,
        })
    }

    /// Setting the flag ends the loop after the runs in flight.
    pub fn stop_handle(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    /// Mutates the current member of the next group until a mutation
    /// applies. `None` when every group is retired.
    fn next_job(&mut self) -> Option<Result<Job, ()>> {
        let g = self.scheduler.current_group()?;
        for _ in 0..self.config.max_attempts {
            let mutation = self.scheduler.choose_mutation();
            let rec = MutationRecord::new(&mutation, self.scheduler.next_rng_seed());
            let group = self.scheduler.group(g);
            match self.mutator.apply(&group.current, &rec) {
                Ok((mutant, record)) => {
                    let mut chain = group.chain.clone();
                    chain.records.push(record.clone());
                    return Some(Ok(Job {
                        group: g,
                        parent: (group.epoch, group.chain.records.len()),
                        truth: group.truth,
                        mutation,
                        record,
                        chain,
                        mutant,
                    }));
                }
                Err(MutationError::NotApplicable { .. }) => {}
                Err(e @ MutationError::InvalidChoices { .. }) => log::warn!("{e}"),
            }
        }
        self.scheduler.record_skip(g);
        Some(Err(()))
    }

    fn dispatch_allowed(&self, in_flight: u64, start: Instant) -> bool {
        !self.stop.load(Ordering::SeqCst)
            && self.config.max_runs.is_none_or(|m| self.scheduler.runs() + in_flight < m)
            && self.config.max_time.is_none_or(|t| start.elapsed() < t)
    }

    /// Runs the loop until interrupted, a run or time limit is hit, or
    /// every group is retired. Statistics are flushed on every exit path.
    pub fn run(&mut self) -> Result<SessionSummary, SessionError> {
        let start = Instant::now();
        let (job_tx, job_rx) = mpsc::channel::<Job>();
        let job_rx = Arc::new(Mutex::new(job_rx));
        let (res_tx, res_rx) = mpsc::channel::<JobResult>();
        let outcome = std::thread::scope(|s| {
            for _ in 0..self.config.workers {
                let (rx, tx) = (job_rx.clone(), res_tx.clone());
                let (solver, oracle) = (self.solver.clone(), self.oracle.clone());
                let (ts, to) = (self.config.timeout_solve, self.config.timeout_oracle);
                s.spawn(move || loop {
                    let job = match rx.lock().unwrap().recv() {
                        Ok(j) => j,
                        Err(_) => break,
                    };
                    let evaluation = evaluate(solver.as_ref(), oracle.as_ref(), job.truth, &job.mutant, ts, to);
                    if tx.send(JobResult { job, evaluation }).is_err() {
                        break;
                    }
                });
            }
            drop(res_tx);
            let r = self.drive(&job_tx, &res_rx, start);
            drop(job_tx);
            // Let workers finish what they hold; their results are dropped.
            for _ in res_rx.iter() {}
            r
        });
        let snapshot = self.scheduler.snapshot();
        report::write_stats(&self.config.out_dir, &snapshot)?;
        outcome?;
        Ok(SessionSummary {
            runs: self.scheduler.runs(),
            unique_traces: self.scheduler.unique_traces(),
            findings: self.findings.clone(),
            elapsed: start.elapsed(),
        })
    }

    fn drive(&mut self, jobs: &mpsc::Sender<Job>, results: &mpsc::Receiver<JobResult>, start: Instant) -> Result<(), SessionError> {
        let mut in_flight = 0u64;
        let mut idle_skips = 0u32;
        loop {
            while in_flight < self.config.workers as u64 && self.dispatch_allowed(in_flight, start) {
                match self.next_job() {
                    None => break,
                    Some(Err(())) => {
                        idle_skips += 1;
                        if idle_skips >= 1000 {
                            log::error!("no mutation applies to any group; stopping");
                            self.stop.store(true, Ordering::SeqCst);
                        }
                    }
                    Some(Ok(job)) => {
                        idle_skips = 0;
                        jobs.send(job).expect("workers outlive the loop");
                        in_flight += 1;
                    }
                }
            }
            if in_flight == 0 {
                return Ok(());
            }
            let JobResult { job, evaluation } = results.recv().expect("a job is in flight");
            in_flight -= 1;
            let evaluation = evaluation?;
            self.handle(job, evaluation)?;
            if self.scheduler.runs() % self.config.snapshot_every == 0 {
                report::write_stats(&self.config.out_dir, &self.scheduler.snapshot())?;
            }
        }
    }

    fn handle(&mut self, job: Job, ev: Evaluation) -> Result<(), SessionError> {
        let verdict = ev.result.verdict.outcome.kind();
        let finding_kind = ev.finding.as_ref().map(|(k, _)| *k);
        if let Some((kind, evidence)) = ev.finding.clone() {
            if kind == FindingKind::UnknownInfo {
                log::info!("{}: mutant verdict {verdict} ({evidence:?})", self.scheduler.group(job.group).seed_id);
            } else {
                let group = self.scheduler.group(job.group);
                let finding = Finding {
                    kind,
                    seed_id: group.seed_id.clone(),
                    truth: group.truth,
                    chain: job.chain.clone(),
                    mutant_verdict: verdict,
                    evidence,
                };
                let report = FindingReport {
                    finding,
                    seed: group.seed.clone(),
                    mutant: job.mutant.clone(),
                    stdout: ev.result.stdout.clone(),
                    stderr: ev.result.stderr.clone(),
                };
                let dir = report::write_finding(&self.config.out_dir, self.findings.len(), &report)?;
                log::warn!("{kind} on {}: {}", report.finding.seed_id, dir.display());
                if self.config.reduce {
                    let loaded = report::load_finding(&dir)?;
                    match reduce_finding(&loaded, self.solver.as_ref(), self.oracle.as_ref(), &self.mutator, &self.reduce_settings()) {
                        Ok(_) => {}
                        Err(ReduceFindingError::Session(e)) => return Err(e),
                        Err(e) => log::warn!("reduction of {} failed: {e}", dir.display()),
                    }
                }
                self.findings.push(dir);
            }
        }
        self.scheduler.record_run(
            job.group,
            RunReport {
                mutation: job.mutation,
                verdict,
                trace: ev.result.trace,
                finding: finding_kind,
                mutant: Some((job.mutant, job.record)),
                parent: job.parent,
            },
        );
        Ok(())
    }

    fn reduce_settings(&self) -> ReduceSettings {
        ReduceSettings {
            timeout_solve: self.config.timeout_solve,
            timeout_oracle: self.config.timeout_oracle,
            budget: self.config.reduce_budget,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReduceSettings {
    pub timeout_solve: Duration,
    pub timeout_oracle: Duration,
    pub budget: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ReduceFindingError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Stale(#[from] ReduceError),
}

impl From<ReportError> for ReduceFindingError {
    fn from(e: ReportError) -> Self {
        ReduceFindingError::Session(e.into())
    }
}

#[derive(Clone, Debug)]
pub struct ReducedFinding {
    pub chain: MutationChain,
    pub system: ChcSystem,
    pub evaluations: usize,
}

/// Shrinks a stored finding: first its chain, then the mutant the shorter
/// chain produces. Writes `reduced-chain.json`, `reduced.smt2` and a log
/// next to the finding.
pub fn reduce_finding(
    finding: &LoadedFinding,
    solver: &dyn Solver,
    oracle: &dyn OracleSolver,
    mutator: &Mutator,
    settings: &ReduceSettings,
) -> Result<ReducedFinding, ReduceFindingError> {
    let f = &finding.finding;
    let mut log_lines = Vec::new();
    let failure: RefCell<Option<SessionError>> = RefCell::new(None);
    let mut reproduces = |system: &ChcSystem| -> bool {
        if failure.borrow().is_some() {
            return false;
        }
        match evaluate(solver, oracle, f.truth, system, settings.timeout_solve, settings.timeout_oracle) {
            Ok(ev) => ev.finding.is_some_and(|(k, _)| k == f.kind),
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                false
            }
        }
    };
    let mut budget = Budget::new(settings.budget);
    let records = reduce_chain(
        &f.chain.records,
        &mut |recs| match mutator.replay(&finding.seed, recs) {
            Ok(system) => reproduces(&system),
            // Choices that no longer fit mean the bug cannot be replayed.
            Err(_) => false,
        },
        &mut budget,
    );
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e.into());
    }
    let records = records?;
    log_lines.push(format!("chain: {} -> {} records", f.chain.records.len(), records.len()));
    let mutant = mutator.replay(&finding.seed, &records).expect("reduced chain replays");
    let mut oracle_failure: Option<RunnerError> = None;
    let mut equivalent = |sys: &ChcSystem, a: &crate::ast::ChcClause, b: &crate::ast::ChcClause| {
        match clauses_equivalent(sys, a, b, oracle, settings.timeout_oracle) {
            Ok(v) => v,
            Err(e) => {
                oracle_failure = Some(e);
                false
            }
        }
    };
    let system = reduce_system(&mutant, &mut reproduces, &mut equivalent, &mut budget);
    if let Some(e) = failure.into_inner().or(oracle_failure.map(SessionError::from)) {
        return Err(e.into());
    }
    let system = system?;
    log_lines.push(format!(
        "system: {} -> {} clauses, {} -> {} nodes",
        mutant.clauses.len(),
        system.clauses.len(),
        mutant.node_count(),
        system.node_count()
    ));
    log_lines.push(format!("predicate evaluations: {} of {}", budget.used, budget.limit));
    let chain = MutationChain { seed_id: f.chain.seed_id.clone(), records };
    report::write_json(&finding.dir.join(report::REDUCED_CHAIN_FILE), &chain)?;
    report::write_file(&finding.dir.join(report::REDUCED_FILE), print_script(&system))?;
    report::write_file(&finding.dir.join(report::REDUCTION_LOG), log_lines.join("\n") + "\n")?;
    Ok(ReducedFinding { chain, system, evaluations: budget.used })
}
