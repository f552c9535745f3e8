use std::io::{Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{ExecLimits, ExecResult, ExecStatus, SandboxError};

/// Placeholder substituted with the path of the program file.
pub const FILE_PLACEHOLDER: &str = "{file}";

const POLL_INTERVAL: Duration = Duration::from_millis(2);

/// How to execute a program file, e.g. `["python3", "{file}"]` with extension `py`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Runner {
    pub command: Vec<String>,
    #[serde(default = "default_extension")]
    pub file_extension: String,
    /// Parent directory for per-run scratch directories; the system temp dir when unset.
    #[serde(default)]
    pub scratch_dir: Option<PathBuf>,
}

fn default_extension() -> String {
    "py".to_string()
}

impl Default for Runner {
    fn default() -> Self {
        Runner {
            command: vec!["python3".into(), FILE_PLACEHOLDER.into()],
            file_extension: default_extension(),
            scratch_dir: None,
        }
    }
}

impl Runner {
    pub fn new(command: Vec<String>, file_extension: impl Into<String>) -> Result<Self, SandboxError> {
        let r = Runner {
            command,
            file_extension: file_extension.into(),
            scratch_dir: None,
        };
        r.validate()?;
        Ok(r)
    }

    /// Splits a whitespace-separated template such as `"python3 {file}"`.
    pub fn from_template(template: &str, file_extension: impl Into<String>) -> Result<Self, SandboxError> {
        Self::new(template.split_whitespace().map(str::to_string).collect(), file_extension)
    }

    pub fn with_scratch_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.scratch_dir = Some(dir.into());
        self
    }

    pub fn validate(&self) -> Result<(), SandboxError> {
        if self.command.is_empty() {
            return Err(SandboxError::InvalidRunner("empty command".into()));
        }
        if !self.command.iter().any(|a| a.contains(FILE_PLACEHOLDER)) {
            return Err(SandboxError::InvalidRunner(format!(
                "command {:?} has no {FILE_PLACEHOLDER} placeholder",
                self.command
            )));
        }
        Ok(())
    }

    fn argv(&self, file: &Path) -> Vec<String> {
        let file = file.to_string_lossy();
        self.command.iter().map(|a| a.replace(FILE_PLACEHOLDER, &file)).collect()
    }
}

fn kill_group(pgid: i32) {
    // SAFETY: plain syscall; a stale or foreign pgid only yields ESRCH/EPERM.
    unsafe {
        libc::kill(-pgid, libc::SIGKILL);
    }
}

/// Lowers a resource limit, never above the inherited hard limit.
fn set_limit(resource: libc::__rlimit_resource_t, soft: u64, hard: u64) -> std::io::Result<()> {
    let mut cur = libc::rlimit {
        rlim_cur: 0,
        rlim_max: 0,
    };
    // SAFETY: getrlimit/setrlimit are async-signal-safe and only touch the calling process.
    if unsafe { libc::getrlimit(resource, &mut cur) } != 0 {
        return Err(std::io::Error::last_os_error());
    }
    let cap = |v: u64| (v as libc::rlim_t).min(cur.rlim_max);
    let lim = libc::rlimit {
        rlim_cur: cap(soft),
        rlim_max: cap(hard),
    };
    // SAFETY: see above.
    if unsafe { libc::setrlimit(resource, &lim) } != 0 {
        return Err(std::io::Error::last_os_error());
    }
    Ok(())
}

/// Reads `pipe` into a buffer of at most `cap` bytes. Sets `overflow` and
/// stops once more than `cap` bytes have arrived.
fn capture<R: Read + Send + 'static>(
    mut pipe: R,
    cap: usize,
    overflow: Option<Arc<AtomicBool>>,
) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let mut chunk = [0u8; 8192];
        loop {
            match pipe.read(&mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = cap.saturating_sub(buf.len());
                    buf.extend_from_slice(&chunk[..n.min(room)]);
                    if n > room {
                        if let Some(flag) = &overflow {
                            flag.store(true, Ordering::SeqCst);
                            break;
                        }
                    }
                }
            }
        }
        buf
    })
}

enum Outcome {
    Exited(std::process::ExitStatus),
    TimedOut,
    Truncated,
}

fn supervise(child: &mut Child, deadline: Instant, truncated: &AtomicBool) -> std::io::Result<Outcome> {
    loop {
        if truncated.load(Ordering::SeqCst) {
            return Ok(Outcome::Truncated);
        }
        if let Some(status) = child.try_wait()? {
            return Ok(if truncated.load(Ordering::SeqCst) {
                Outcome::Truncated
            } else {
                Outcome::Exited(status)
            });
        }
        if Instant::now() >= deadline {
            return Ok(Outcome::TimedOut);
        }
        thread::sleep(POLL_INTERVAL);
    }
}

fn spawn_error(message: String, start: Instant) -> ExecResult {
    ExecResult {
        status: ExecStatus::SpawnError,
        stdout: String::new(),
        stderr: message,
        exit_code: None,
        duration: start.elapsed(),
    }
}

/// Runs `source` with `stdin` under `limits`. Failures of the program are
/// reported through [`ExecResult::status`], never as an `Err`.
pub fn run_program(source: &str, stdin: &str, limits: &ExecLimits, runner: &Runner) -> ExecResult {
    let start = Instant::now();
    let mut builder = tempfile::Builder::new();
    builder.prefix("run-");
    let scratch = match &runner.scratch_dir {
        Some(dir) => std::fs::create_dir_all(dir).and_then(|_| builder.tempdir_in(dir)),
        None => builder.tempdir(),
    };
    let scratch = match scratch {
        Ok(d) => d,
        Err(e) => return spawn_error(format!("scratch dir: {e}"), start),
    };
    let file = scratch.path().join(format!("main.{}", runner.file_extension));
    if let Err(e) = std::fs::write(&file, source) {
        return spawn_error(format!("writing program: {e}"), start);
    }
    let argv = runner.argv(&file);
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .current_dir(scratch.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let memory = limits.memory;
    let cpu = limits.cpu_time.as_secs_f64().ceil().max(1.0) as u64;
    // SAFETY: the closure only calls setrlimit, which is async-signal-safe.
    unsafe {
        cmd.pre_exec(move || {
            set_limit(libc::RLIMIT_AS, memory, memory)?;
            set_limit(libc::RLIMIT_CPU, cpu, cpu + 1)?;
            Ok(())
        });
    }
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return spawn_error(format!("{}: {e}", argv[0]), start),
    };
    let pgid = child.id() as i32;

    let mut child_stdin = child.stdin.take().expect("piped stdin");
    let input = stdin.as_bytes().to_vec();
    let writer = thread::spawn(move || {
        // the program may exit without reading its input
        let _ = child_stdin.write_all(&input);
    });
    let truncated = Arc::new(AtomicBool::new(false));
    let out = capture(child.stdout.take().expect("piped stdout"), limits.max_output, Some(truncated.clone()));
    let err = capture(child.stderr.take().expect("piped stderr"), limits.max_output, None);

    let outcome = supervise(&mut child, start + limits.wall_time, &truncated);
    // also reaps anything the program left behind in its group
    kill_group(pgid);
    let status = child.wait();
    let duration = start.elapsed();
    let _ = writer.join();
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();

    let (status, exit_code) = match outcome {
        Err(e) => return spawn_error(format!("waiting on child: {e}"), start),
        Ok(Outcome::TimedOut) => (ExecStatus::Timeout, None),
        Ok(Outcome::Truncated) => (ExecStatus::OutputTruncated, None),
        // the reader may notice the overflow only after the program has exited
        Ok(Outcome::Exited(_)) if truncated.load(Ordering::SeqCst) => (ExecStatus::OutputTruncated, None),
        Ok(Outcome::Exited(st)) => {
            let st = status.unwrap_or(st);
            match (st.code(), st.signal()) {
                (Some(0), _) => (ExecStatus::Ok, Some(0)),
                (_, Some(libc::SIGXCPU)) => (ExecStatus::Timeout, None),
                (code, _) => (ExecStatus::RuntimeError, code),
            }
        }
    };
    ExecResult {
        status,
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        exit_code,
        duration,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(wall_ms: u64) -> ExecLimits {
        ExecLimits {
            wall_time: Duration::from_millis(wall_ms),
            ..ExecLimits::default()
        }
    }

    #[test]
    fn echoes_stdin() {
        let r = run_program("print(input())", "5\n", &limits(5000), &Runner::default());
        assert_eq!(r.status, ExecStatus::Ok);
        assert_eq!(r.stdout, "5\n");
        assert_eq!(r.exit_code, Some(0));
    }

    #[test]
    fn nonzero_exit_is_runtime_error() {
        let r = run_program("import sys\nprint('x')\nsys.exit(4)", "", &limits(5000), &Runner::default());
        assert_eq!(r.status, ExecStatus::RuntimeError);
        assert_eq!(r.exit_code, Some(4));
        assert_eq!(r.stdout, "x\n");
    }

    #[test]
    fn infinite_loop_times_out() {
        let r = run_program("while True:\n    pass\n", "", &limits(1000), &Runner::default());
        assert_eq!(r.status, ExecStatus::Timeout);
        let secs = r.duration.as_secs_f64();
        assert!((1.0..1.5).contains(&secs), "{secs}");
    }

    #[test]
    fn cpu_limit_maps_to_timeout() {
        let l = ExecLimits {
            wall_time: Duration::from_secs(10),
            cpu_time: Duration::from_secs(1),
            ..ExecLimits::default()
        };
        let r = run_program("while True:\n    pass\n", "", &l, &Runner::default());
        assert_eq!(r.status, ExecStatus::Timeout);
        assert!(r.duration < Duration::from_secs(5));
    }

    #[test]
    fn large_output_is_truncated() {
        let l = ExecLimits {
            max_output: 1 << 20,
            ..limits(10_000)
        };
        let src = "import sys\nsys.stdout.write('x' * (2 * 1024 * 1024))\n";
        let r = run_program(src, "", &l, &Runner::default());
        assert_eq!(r.status, ExecStatus::OutputTruncated);
        assert_eq!(r.stdout.len(), 1 << 20);
    }

    #[test]
    fn large_stdin_is_delivered() {
        let input = "7\n".repeat(200_000);
        let src = "import sys\nprint(sum(int(x) for x in sys.stdin.read().split()))";
        let r = run_program(src, &input, &limits(10_000), &Runner::default());
        assert_eq!(r.stdout, "1400000\n");
    }

    #[test]
    fn process_group_is_killed() {
        let tmp = tempfile::tempdir().unwrap();
        let marker = tmp.path().join("survivor");
        // the child sleeps past the parent's timeout and then writes a marker
        let src = format!(
            "import subprocess, sys\nsubprocess.Popen([sys.executable, '-c', 'import time; time.sleep(1.5); open({:?}, \"w\").write(\"x\")'])\nwhile True:\n    pass\n",
            marker.display().to_string()
        );
        let r = run_program(&src, "", &limits(700), &Runner::default());
        assert_eq!(r.status, ExecStatus::Timeout);
        thread::sleep(Duration::from_millis(1500));
        assert!(!marker.exists());
    }

    #[test]
    fn scratch_dir_is_cleaned_and_used_as_cwd() {
        let tmp = tempfile::tempdir().unwrap();
        let runner = Runner::default().with_scratch_dir(tmp.path());
        let r = run_program("import os\nprint(sorted(os.listdir('.')))", "", &limits(5000), &runner);
        assert_eq!(r.stdout, "['main.py']\n");
        assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
    }

    #[test]
    fn custom_runner_template() {
        let runner = Runner::from_template("sh {file}", "sh").unwrap();
        let r = run_program("read x\necho \"got $x\"", "hi\n", &limits(5000), &runner);
        assert_eq!(r.stdout, "got hi\n");
        assert!(Runner::from_template("python3", "py").is_err());
        assert!(Runner::from_template("", "py").is_err());
    }
}
