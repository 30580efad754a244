//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Arguments select criteria by number (`cargo test --test acceptance -- 3 7`).
//! `CHCFUZZ_SOUNDNESS_SECS` shortens the real-solver campaign of criterion 3
//! (default 1800 s); a shortened run is reported as such.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chcfuzz::ast::{parse_script, print_declarations, print_script, ChcClause, ChcSystem, Term};
use chcfuzz::mutation::{rewrite_params, MutationId, MutationKind, MutationRecord, MutationType, Mutator, ProcessRewriter, EMPTY_SIMPLIFY};
use chcfuzz::oracle::{
    clauses_equivalent, constraint_is_unsat, judge, Decision, FindingKind, GroundTruth, OracleAnswer, OracleSolver,
    ProcessOracle,
};
use chcfuzz::reducer::{reduce_chain, reduce_system, Budget};
use chcfuzz::report::{self, MUTANT_FILE};
use chcfuzz::scheduler::{priority, updated_weight, TransitionStats, Transitions, INITIAL_WEIGHT};
use chcfuzz::session::{seed_files, Session, SessionConfig, SessionSummary};
use chcfuzz::solver::{ProcessSolver, Solver, SolverCommand, TraceProfile, VerdictKind};
use chcfuzz::testing::{ConstantOracle, Scripted, ScriptedSolver};

type Verdict = Result<String, String>;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn corpus() -> Vec<(String, ChcSystem)> {
    seed_files(&corpus_dir())
        .unwrap()
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, parse_script(&fs::read_to_string(&p).unwrap()).unwrap())
        })
        .collect()
}

fn z3() -> Result<SolverCommand, String> {
    let ok = std::process::Command::new("z3").arg("-version").output().is_ok_and(|o| o.status.success());
    if ok {
        Ok(SolverCommand::new("z3"))
    } else {
        Err("z3 is not on PATH".into())
    }
}

const ORACLE_TIMEOUT: Duration = Duration::from_secs(10);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Second route for clause equivalence: the closed formulas themselves,
/// quantifiers included, as opposed to the production check on matrices.
fn closed_formulas_differ(system: &ChcSystem, f: &ChcClause, r: &ChcClause, oracle: &dyn OracleSolver) -> Result<OracleAnswer, String> {
    let script = format!(
        "{}(assert (distinct {} {}))\n(check-sat)\n",
        print_declarations(system),
        f.to_formula(),
        r.to_formula()
    );
    oracle.check(&script, ORACLE_TIMEOUT).map_err(|e| e.to_string())
}

fn criterion_1() -> Verdict {
    let cmd = z3()?;
    let oracle = ProcessOracle::new(cmd.clone());
    let mutator = Mutator::with_rewriter(Arc::new(ProcessRewriter { command: cmd, timeout: ORACLE_TIMEOUT }));
    let seeds = corpus();
    ensure(seeds.len() >= 20, || format!("corpus has {} systems", seeds.len()))?;
    let rewrites: Vec<String> = std::iter::once(EMPTY_SIMPLIFY.to_string()).chain(rewrite_params().iter().cloned()).collect();
    let kinds = [
        MutationKind::SwapAnd,
        MutationKind::DupAnd,
        MutationKind::BreakAnd,
        MutationKind::SwapOr,
        MutationKind::MixBoundVars,
        MutationKind::AddIneq,
        MutationKind::Rewrite,
    ];
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut report = Vec::new();
    let mut closed_unknown = 0;
    for kind in kinds {
        let (mut applied, mut modified, mut attempts) = (0, 0, 0);
        let mut systems_used = BTreeSet::new();
        while applied < 200 {
            attempts += 1;
            ensure(attempts < 20_000, || format!("{kind}: only {applied} applications in {attempts} attempts"))?;
            let (name, seed) = &seeds[rng.gen_range(0..seeds.len())];
            let id = match kind {
                MutationKind::Rewrite => MutationId::rewrite(rewrites[rng.gen_range(0..rewrites.len())].clone()),
                k => MutationId::own(k),
            };
            let Ok((mutant, _)) = mutator.apply(seed, &MutationRecord::new(&id, rng.gen())) else { continue };
            applied += 1;
            systems_used.insert(name.clone());
            ensure(mutant.clauses.len() == seed.clauses.len(), || format!("{kind} changed the clause count"))?;
            for (f, r) in seed.clauses.iter().zip(&mutant.clauses) {
                if f == r {
                    continue;
                }
                modified += 1;
                let eq = clauses_equivalent(seed, f, r, &oracle, ORACLE_TIMEOUT).map_err(|e| e.to_string())?;
                ensure(eq, || format!("{kind} on {name} ({id}): f != r is satisfiable or unknown\n  f: {}\n  r: {}", f.to_formula(), r.to_formula()))?;
                match closed_formulas_differ(seed, f, r, &oracle)? {
                    OracleAnswer::Unsat => {}
                    OracleAnswer::Unknown(_) => closed_unknown += 1,
                    OracleAnswer::Sat(_) => return Err(format!("{kind} on {name}: closed formulas differ")),
                }
            }
        }
        report.push(format!("{kind}: {applied} applied / {modified} clauses / {} systems", systems_used.len()));
    }
    let elapsed = start.elapsed();
    ensure(elapsed <= Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!("{}; closed-formula route unknown on {closed_unknown}; {:.0}s", report.join(", "), elapsed.as_secs_f64()))
}

fn criterion_2() -> Verdict {
    let cmd = z3()?;
    let oracle = ProcessOracle::new(cmd.clone());
    let solver = ProcessSolver::new(cmd, TraceProfile::z3_verbose());
    let mutator = Mutator::new();
    let start = Instant::now();
    // Seeds solvable well within 5 s, with their verdicts.
    let mut seeds = Vec::new();
    for (name, s) in corpus() {
        let r = solver.solve(&s, Duration::from_secs(5)).map_err(|e| e.to_string())?;
        let v = r.verdict.outcome.kind();
        if matches!(v, VerdictKind::Sat | VerdictKind::Unsat) && r.verdict.wall_time < Duration::from_secs(5) {
            seeds.push((name, s, v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut lines = Vec::new();
    for kind in [MutationKind::AddLinRule, MutationKind::AddNonlinRule] {
        let (mut applied, mut attempts) = (0, 0);
        while applied < 100 {
            attempts += 1;
            ensure(attempts < 10_000, || format!("{kind}: only {applied} applications"))?;
            let (name, seed, truth) = &seeds[rng.gen_range(0..seeds.len())];
            let Ok((mutant, rec)) = mutator.apply(seed, &MutationRecord::new(&MutationId::own(kind), rng.gen())) else { continue };
            applied += 1;
            ensure(mutant.clauses.len() == seed.clauses.len() + 1, || format!("{kind} did not add one clause"))?;
            let added = mutant.clauses.last().unwrap();
            let premise = constraint_is_unsat(&mutant, added, &oracle, ORACLE_TIMEOUT).map_err(|e| e.to_string())?;
            ensure(premise == Some(true), || format!("{kind} on {name}: premise not unsat ({premise:?}): {}", added.to_formula()))?;
            let v = solver.solve(&mutant, Duration::from_secs(60)).map_err(|e| e.to_string())?.verdict.outcome.kind();
            ensure(v == *truth, || format!("{kind} on {name}: seed {truth}, mutant {v}; choices {:?}", rec.choices))?;
        }
        lines.push(format!("{kind}: {applied} premises unsat, verdicts preserved"));
    }
    let elapsed = start.elapsed();
    ensure(elapsed <= Duration::from_secs(900), || format!("took {elapsed:?}"))?;
    Ok(format!("{} over {} seeds; {:.0}s", lines.join(", "), seeds.len(), elapsed.as_secs_f64()))
}

fn real_session(solver: ProcessSolver, out: &Path, workers: usize, max_runs: Option<u64>, max_time: Option<Duration>) -> Result<(Session, SessionSummary), String> {
    let cmd = z3()?;
    let config = SessionConfig {
        seeds: seed_files(&corpus_dir()).unwrap(),
        timeout_solve: Duration::from_secs(5),
        timeout_oracle: ORACLE_TIMEOUT,
        workers,
        out_dir: out.to_path_buf(),
        random_seed: 3,
        max_runs,
        max_time,
        ..SessionConfig::default()
    };
    let mutator = Mutator::with_rewriter(Arc::new(ProcessRewriter { command: cmd.clone(), timeout: ORACLE_TIMEOUT }));
    let mut session = Session::new(config, Arc::new(solver), Arc::new(ProcessOracle::new(cmd)), mutator).map_err(|e| e.to_string())?;
    let summary = session.run().map_err(|e| e.to_string())?;
    Ok((session, summary))
}

fn finding_kinds(summary: &SessionSummary) -> Result<Vec<FindingKind>, String> {
    summary.findings.iter().map(|d| report::load_finding(d).map(|f| f.finding.kind).map_err(|e| e.to_string())).collect()
}

/// Results of the long real-solver campaign, shared with criteria 8 and 9.
struct Campaign {
    seconds: u64,
    summary: SessionSummary,
    kinds: Vec<FindingKind>,
    replay_mismatches: Vec<String>,
    groups: usize,
}

fn campaign() -> Result<Campaign, String> {
    let cmd = z3()?;
    let seconds = std::env::var("CHCFUZZ_SOUNDNESS_SECS").ok().and_then(|s| s.parse().ok()).unwrap_or(1800);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let solver = ProcessSolver::with_probed_profile(cmd, TraceProfile::z3_trace()).map_err(|e| e.to_string())?;
    let (session, summary) = real_session(solver, tmp.path(), 4, None, Some(Duration::from_secs(seconds)))?;
    let kinds = finding_kinds(&summary)?;
    // Every group's current system must be its seed replayed through its chain.
    let mutator = Mutator::with_rewriter(Arc::new(ProcessRewriter { command: z3()?, timeout: ORACLE_TIMEOUT }));
    let mut replay_mismatches = Vec::new();
    for g in session.scheduler().groups() {
        match mutator.replay(&g.seed, &g.chain.records) {
            Ok(s) if print_script(&s) == print_script(&g.current) => {}
            _ => replay_mismatches.push(g.seed_id.clone()),
        }
    }
    Ok(Campaign { seconds, summary, kinds, replay_mismatches, groups: session.scheduler().groups().len() })
}

fn criterion_3(c: &Result<Campaign, String>) -> Verdict {
    let c = c.as_ref().map_err(|e| e.clone())?;
    let count = |k| c.kinds.iter().filter(|x| **x == k).count();
    let (sat_bugs, model_bugs, crashes) = (count(FindingKind::SatisfiabilityBug), count(FindingKind::ModelBug), count(FindingKind::Crash));
    let shortened = if c.seconds < 1800 { format!(" (SHORTENED to {}s of 1800s)", c.seconds) } else { String::new() };
    ensure(sat_bugs == 0 && model_bugs == 0, || {
        format!("real solver: {sat_bugs} satisfiability bugs, {model_bugs} model bugs in {} runs: {:?}", c.summary.runs, c.summary.findings)
    })?;

    // Broken stub: flips sat to unsat when a solver option was toggled.
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let flip = SolverCommand::new(env!("CARGO_BIN_EXE_flip-solver")).with_args(["--marker", "fp.", "--solver", "z3"]);
    let (_, s) = real_session(ProcessSolver::new(flip, TraceProfile::z3_verbose()), tmp.path(), 4, Some(200), None)?;
    let stub_bugs = finding_kinds(&s)?.into_iter().filter(|k| *k == FindingKind::SatisfiabilityBug).count();
    ensure(stub_bugs >= 1, || format!("stub: no finding in {} runs", s.runs))?;
    Ok(format!(
        "real solver {}s{shortened}: {} runs, 0 satisfiability / 0 model bugs, {crashes} crashes; stub: {stub_bugs} findings in {} runs",
        c.seconds, c.summary.runs, s.runs
    ))
}

fn criterion_4() -> Verdict {
    use GroundTruth::*;
    // Rows: truth; columns: sat, unsat, unknown (timeouts log like unknown).
    let table = [
        (Sat, [Decision::CheckModel, Decision::HandleBug, Decision::LogInfo]),
        (Unsat, [Decision::HandleBug, Decision::Pass, Decision::LogInfo]),
    ];
    for (truth, row) in table {
        for (verdict, want) in [VerdictKind::Sat, VerdictKind::Unsat, VerdictKind::Unknown].into_iter().zip(row) {
            let got = judge(truth, verdict);
            ensure(got == want, || format!("({truth}, {verdict}) -> {got:?}, want {want:?}"))?;
        }
        ensure(judge(truth, VerdictKind::Timeout) == Decision::LogInfo, || "timeout".into())?;
    }
    Ok("6/6 cells".into())
}

fn criterion_5() -> Verdict {
    let global = Transitions::from([((1, 2), 9), ((1, 3), 1)]);
    let mut stats = TransitionStats::default();
    stats.add(&global);
    ensure((stats.weight(1, 2) - 10.0 / 9.0).abs() <= 1e-9 && (stats.weight(1, 3) - 10.0).abs() <= 1e-9, || {
        format!("weights {} {}", stats.weight(1, 2), stats.weight(1, 3))
    })?;
    // Brute force straight from the counts: p = c / row, w = 1 / p.
    let brute = |inst: &Transitions| -> f64 {
        inst.iter()
            .map(|(&(i, j), &t)| {
                let row: u64 = global.iter().filter(|((a, _), _)| *a == i).map(|(_, c)| c).sum();
                let c = global.get(&(i, j)).copied().unwrap_or(0);
                if c == 0 { 0.0 } else { t as f64 / (c as f64 / row as f64) }
            })
            .sum()
    };
    let instances = [
        Transitions::from([((1, 2), 1)]),
        Transitions::from([((1, 3), 1)]),
        Transitions::from([((1, 2), 4), ((1, 3), 2)]),
        Transitions::from([((1, 2), 7), ((1, 3), 5), ((2, 3), 1)]),
    ];
    for inst in &instances {
        let (k, b) = (priority(&stats, inst), brute(inst));
        ensure((k - b).abs() <= 1e-9, || format!("{inst:?}: {k} vs {b}"))?;
    }
    let w = updated_weight(INITIAL_WEIGHT, 1.0);
    ensure(w == 0.442, || format!("w = {w:?}"))?;
    Ok(format!("k = 10/9 and 10 on the fixture, {} instances match brute force, w = {w}", instances.len()))
}

/// An unsat seed answered `unsat` every time: every run passes and needs
/// no model check. `fresh` gives each run its own trace.
fn quiet_session(names: &[&str], fresh: bool, out: &Path) -> Session {
    let dir = corpus_dir();
    let seeds = names.iter().map(|n| dir.join(format!("{n}.smt2"))).collect();
    let solver = ScriptedSolver::new(move |_, n| Scripted { verdict: VerdictKind::Unsat, states: if fresh { vec![n, n + 1] } else { vec![1, 2] } });
    let config = SessionConfig {
        seeds,
        out_dir: out.to_path_buf(),
        mutation_types: vec![MutationType::Own, MutationType::Params],
        ..SessionConfig::default()
    };
    Session::new(config, Arc::new(solver), Arc::new(ConstantOracle(OracleAnswer::Unsat)), Mutator::new()).unwrap()
}

fn run_to(s: &mut Session, runs: u64) -> chcfuzz::scheduler::StatsSnapshot {
    s.config.max_runs = Some(runs);
    s.run().unwrap();
    assert_eq!(s.scheduler().runs(), runs);
    s.scheduler().snapshot()
}

fn criterion_6() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut s = quiet_session(&["counter_unsat", "chain_unsat"], false, tmp.path());
    let n = s.scheduler().groups()[0].clause_count as u64;
    let switched = |snap: &chcfuzz::scheduler::StatsSnapshot, r: &str| snap.switches.get(r).copied().unwrap_or(0);
    let before = run_to(&mut s, 5 * n - 1);
    let at = run_to(&mut s, 5 * n);
    ensure(switched(&before, "Stagnation") == 0 && switched(&at, "Stagnation") == 1, || {
        format!("stagnation: {:?} then {:?}", before.switches, at.switches)
    })?;

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut s = quiet_session(&["counter_unsat", "chain_unsat"], true, tmp.path());
    let before = run_to(&mut s, 99);
    let at = run_to(&mut s, 100);
    ensure(switched(&before, "ConsecutiveCap") == 0 && switched(&at, "ConsecutiveCap") == 1, || {
        format!("cap: {:?} then {:?}", before.switches, at.switches)
    })?;
    let mut updates = Vec::new();
    for r in [999, 1000, 1999, 2000] {
        updates.push(run_to(&mut s, r).weight_updates);
    }
    ensure(updates == [0, 1, 1, 2], || format!("weight updates at 999/1000/1999/2000: {updates:?}"))?;
    Ok(format!("stagnation at 5n = {}, cap at 100, weight updates {updates:?} at 999/1000/1999/2000", 5 * n))
}

fn criterion_7() -> Verdict {
    // Chains: every length up to 10, several required subsets each, against
    // brute force over all subsequences.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = 0;
    for len in 0..=10usize {
        let chain: Vec<MutationRecord> =
            (0..len).map(|i| MutationRecord::new(&MutationId::own(MutationKind::SwapAnd), i as u64)).collect();
        for _ in 0..12 {
            let needed: BTreeSet<u64> = (0..len as u64).filter(|_| rng.gen_bool(0.3)).collect();
            let bug = |recs: &[MutationRecord]| needed.iter().all(|n| recs.iter().any(|r| r.rng_seed == *n));
            let brute = (0u32..1 << len)
                .map(|mask| chain.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, r)| r.clone()).collect::<Vec<_>>())
                .filter(|s| bug(s))
                .min_by_key(|s| s.len())
                .unwrap();
            let got = reduce_chain(&chain, &mut |r| bug(r), &mut Budget::default()).map_err(|e| e.to_string())?;
            ensure(got == brute, || format!("len {len}, needed {needed:?}: {got:?}"))?;
            cases += 1;
        }
    }

    // Systems: five clauses, the bug needs the clauses defining B and D.
    let cmd = z3()?;
    let oracle = ProcessOracle::new(cmd);
    let system = parse_script(
        "(declare-fun A (Int) Bool)(declare-fun B (Int) Bool)(declare-fun C (Int) Bool)\
         (declare-fun D (Int) Bool)(declare-fun E (Int) Bool)\
         (assert (forall ((x Int)) (=> (and (> x 0) true) (A x))))\
         (assert (forall ((x Int) (y Int)) (=> (and (A x) (= x x)) (B x))))\
         (assert (forall ((x Int)) (=> (and (B x) (> x 1)) (C x))))\
         (assert (forall ((x Int)) (=> (and (C x) (or (> x 0) (<= x 0))) (D x))))\
         (assert (forall ((x Int)) (=> (D x) (E x))))",
    )
    .unwrap();
    let heads = |s: &ChcSystem| -> BTreeSet<String> {
        s.clauses.iter().filter_map(|c| match &c.head { Term::PredApp(p, _) => Some(p.clone()), _ => None }).collect()
    };
    let mut bug = |s: &ChcSystem| heads(s).is_superset(&BTreeSet::from(["B".to_string(), "D".to_string()]));
    let mut gated = Vec::new();
    let mut equivalent = |s: &ChcSystem, f: &ChcClause, r: &ChcClause| {
        let ok = clauses_equivalent(s, f, r, &oracle, ORACLE_TIMEOUT).unwrap();
        gated.push((f.clone(), r.clone(), ok));
        ok
    };
    let reduced = reduce_system(&system, &mut bug, &mut equivalent, &mut Budget::default()).map_err(|e| e.to_string())?;
    ensure(reduced.clauses.len() == 2, || format!("{} clauses left:\n{}", reduced.clauses.len(), print_script(&reduced)))?;
    ensure(heads(&reduced) == BTreeSet::from(["B".to_string(), "D".to_string()]), || "wrong clauses kept".into())?;
    // Every kept edit was accepted by the gate, and the end result agrees
    // with the clause it came from on the closed-formula route too.
    let originals: Vec<&ChcClause> = system.clauses.iter().filter(|c| matches!(&c.head, Term::PredApp(p, _) if p == "B" || p == "D")).collect();
    for (orig, fin) in originals.iter().zip(&reduced.clauses) {
        if *orig == fin {
            continue;
        }
        ensure(gated.iter().any(|(f, r, ok)| f == *orig && r == fin && *ok), || format!("edit not gated: {}", fin.to_formula()))?;
        ensure(closed_formulas_differ(&reduced, orig, fin, &oracle)? == OracleAnswer::Unsat, || "closed formulas differ".into())?;
    }
    let edited = originals.iter().zip(&reduced.clauses).filter(|(o, f)| **o != *f).count();
    let rejected = gated.iter().filter(|(_, _, ok)| !ok).count();
    ensure(edited == 2, || format!("expected both kept clauses to shrink:\n{}", print_script(&reduced)))?;
    Ok(format!("{cases} chains match brute force; 5 -> 2 clauses, {edited} clauses edited, {rejected} edits rejected by the gate"))
}

fn criterion_8(c: &Result<Campaign, String>) -> Verdict {
    let mut checked = 0;
    for (name, s) in corpus() {
        let text = print_script(&s);
        let again = parse_script(&text).map_err(|e| format!("{name}: {e}"))?;
        ensure(again == s && print_script(&again) == text, || format!("{name}: not a fixpoint"))?;
        checked += 1;
    }
    // Stored findings: the stub run of criterion 3 writes real directories;
    // run a short one here so the criterion stands alone.
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let flip = SolverCommand::new(env!("CARGO_BIN_EXE_flip-solver")).with_args(["--marker", "fp.", "--solver", "z3"]);
    let (_, s) = real_session(ProcessSolver::new(flip, TraceProfile::z3_verbose()), tmp.path(), 2, Some(120), None)?;
    let mutator = Mutator::with_rewriter(Arc::new(ProcessRewriter { command: z3()?, timeout: ORACLE_TIMEOUT }));
    for dir in &s.findings {
        let f = report::load_finding(dir).map_err(|e| e.to_string())?;
        let replayed = mutator.replay(&f.seed, &f.finding.chain.records).map_err(|e| e.to_string())?;
        let stored = fs::read_to_string(dir.join(MUTANT_FILE)).map_err(|e| e.to_string())?;
        ensure(print_script(&replayed) == stored, || format!("{}: replay differs", dir.display()))?;
    }
    ensure(!s.findings.is_empty(), || "no stored findings to replay".into())?;
    let campaign = match c {
        Ok(c) => {
            ensure(c.replay_mismatches.is_empty(), || format!("campaign chains do not replay: {:?}", c.replay_mismatches))?;
            format!(", {} campaign chains replay", c.groups)
        }
        Err(e) => format!(", campaign unavailable ({e})"),
    };
    Ok(format!("{checked} corpus files are fixpoints, {} stored mutants replay byte-identically{campaign}", s.findings.len()))
}

fn criterion_9(c: &Result<Campaign, String>) -> Verdict {
    let c = c.as_ref().map_err(|e| e.clone())?;
    let rate = c.summary.runs as f64 / c.summary.elapsed.as_secs_f64();
    ensure(rate >= 1.0, || format!("{rate:.2} runs/s"))?;
    Ok(format!("{rate:.1} runs/s over {:.0}s (4 workers, 5 s timeout)", c.summary.elapsed.as_secs_f64()))
}

fn run(n: u32, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    match r {
        Ok(detail) => {
            println!("PASS  {n}. {name} [{secs:.1}s]: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {n}. {name} [{secs:.1}s]: {detail}");
            false
        }
    }
}

fn main() {
    let selected: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n| selected.is_empty() || selected.contains(&n);
    let campaign = if want(3) || want(8) || want(9) {
        let start = Instant::now();
        let c = catch_unwind(campaign).unwrap_or_else(|_| Err("campaign panicked".into()));
        eprintln!("real-solver campaign finished in {:.0}s", start.elapsed().as_secs_f64());
        c
    } else {
        Err("not run".into())
    };
    let mut ok = true;
    let mut check = |n: u32, name: &str, f: &mut dyn FnMut() -> Verdict| {
        if want(n) {
            ok &= run(n, name, f);
        }
    };
    check(1, "equivalence suite", &mut criterion_1);
    check(2, "generated-rule suite", &mut criterion_2);
    check(3, "metamorphic soundness", &mut || criterion_3(&campaign));
    check(4, "judge truth table", &mut criterion_4);
    check(5, "scheduler math", &mut criterion_5);
    check(6, "group-switch constants", &mut criterion_6);
    check(7, "reducer minimality", &mut criterion_7);
    check(8, "round trip and replay", &mut || criterion_8(&campaign));
    check(9, "throughput", &mut || criterion_9(&campaign));
    if !ok {
        std::process::exit(1);
    }
}
