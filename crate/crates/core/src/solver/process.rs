//! Child-process execution with a wall-clock limit and process-group cleanup.

use std::fs;
use std::io;
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Once;
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("solver binary `{0}` not found")]
    SolverMissing(PathBuf),
    #[error("i/o failure while running the solver: {0}")]
    Io(#[from] io::Error),
}

/// A program plus fixed leading arguments; the script path is appended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverCommand {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl SolverCommand {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        SolverCommand { program: program.into(), args: Vec::new() }
    }

    pub fn with_args(mut self, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.args.extend(args.into_iter().map(Into::into));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Exited(i32),
    Signaled(i32),
    TimedOut,
}

#[derive(Clone, Debug)]
pub struct ProcessOutput {
    pub stdout: String,
    pub stderr: String,
    pub termination: Termination,
    pub elapsed: Duration,
    /// Requested files read back from the working directory, `None` when
    /// the process did not create them.
    pub files: Vec<(String, Option<String>)>,
}

static SUBREAPER: Once = Once::new();

/// Makes this process the reaper of orphaned descendants, so that helpers
/// forked by a solver can be collected after the group is killed.
fn become_subreaper() {
    SUBREAPER.call_once(|| {
        // SAFETY: prctl with PR_SET_CHILD_SUBREAPER takes a plain integer.
        unsafe {
            libc::prctl(libc::PR_SET_CHILD_SUBREAPER, 1, 0, 0, 0);
        }
    });
}

fn kill_group(pgid: i32) {
    // SAFETY: signalling a process group we created; ESRCH is harmless.
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
}

/// Reaps every remaining member of the group that is our child.
fn reap_group(pgid: i32) {
    loop {
        let mut status = 0;
        // SAFETY: waitpid on a negative pid waits for members of that group.
        let r = unsafe { libc::waitpid(-pgid, &mut status, 0) };
        if r <= 0 {
            break;
        }
    }
}

/// Writes `script` to a fresh directory, runs `cmd script.smt2` there with
/// `extra_args` inserted before the script path, and kills the whole
/// process group when `timeout` elapses or the leader exits.
pub fn run_script(
    cmd: &SolverCommand,
    extra_args: &[String],
    script: &str,
    timeout: Duration,
    collect: &[String],
) -> Result<ProcessOutput, RunnerError> {
    become_subreaper();
    let dir = tempfile::Builder::new().prefix("chcfuzz-").tempdir()?;
    let script_path = dir.path().join("script.smt2");
    fs::write(&script_path, script)?;
    let out_path = dir.path().join("stdout.txt");
    let err_path = dir.path().join("stderr.txt");

    let start = Instant::now();
    let spawned = Command::new(&cmd.program)
        .args(&cmd.args)
        .args(extra_args)
        .arg(&script_path)
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(fs::File::create(&out_path)?)
        .stderr(fs::File::create(&err_path)?)
        .process_group(0)
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(RunnerError::SolverMissing(cmd.program.clone()))
        }
        Err(e) => return Err(e.into()),
    };
    let pgid = child.id() as i32;

    let mut poll = Duration::from_millis(1);
    let termination = loop {
        if let Some(status) = child.try_wait()? {
            break match (status.code(), status.signal()) {
                (Some(c), _) => Termination::Exited(c),
                (None, Some(s)) => Termination::Signaled(s),
                (None, None) => Termination::Signaled(0),
            };
        }
        if start.elapsed() >= timeout {
            kill_group(pgid);
            child.wait()?;
            break Termination::TimedOut;
        }
        std::thread::sleep(poll.min(timeout.saturating_sub(start.elapsed())));
        poll = (poll * 2).min(Duration::from_millis(10));
    };
    let elapsed = start.elapsed();
    kill_group(pgid);
    reap_group(pgid);

    let read = |p: PathBuf| fs::read(p).map(|b| String::from_utf8_lossy(&b).into_owned());
    let files = collect
        .iter()
        .map(|name| (name.clone(), read(dir.path().join(name)).ok()))
        .collect();
    Ok(ProcessOutput {
        stdout: read(out_path)?,
        stderr: read(err_path)?,
        termination,
        elapsed,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(body: &str) -> SolverCommand {
        SolverCommand::new("/bin/sh").with_args(["-c", body, "sh"])
    }

    #[test]
    fn captures_output_and_status() {
        let out = run_script(&sh("cat \"$1\"; echo err >&2; exit 3"), &[], "hello", Duration::from_secs(5), &[])
            .unwrap();
        assert_eq!(out.stdout, "hello");
        assert_eq!(out.stderr, "err\n");
        assert_eq!(out.termination, Termination::Exited(3));
    }

    #[test]
    fn timeout_kills_the_group() {
        let out = run_script(&sh("sleep 30 & sleep 30"), &[], "", Duration::from_millis(200), &[]).unwrap();
        assert_eq!(out.termination, Termination::TimedOut);
        assert!(out.elapsed >= Duration::from_millis(200));
        assert!(out.elapsed < Duration::from_secs(5));
    }

    #[test]
    fn missing_binary_is_a_harness_error() {
        let err = run_script(&SolverCommand::new("/nonexistent/solver"), &[], "", Duration::from_secs(1), &[])
            .unwrap_err();
        assert!(matches!(err, RunnerError::SolverMissing(_)));
    }

    #[test]
    fn collects_requested_files() {
        let out = run_script(&sh("echo t > trace.log"), &[], "", Duration::from_secs(5), &["trace.log".into(), "none".into()])
            .unwrap();
        assert_eq!(out.files[0], ("trace.log".into(), Some("t\n".into())));
        assert_eq!(out.files[1].1, None);
    }
}
