//! Compiling and judging programs under resource limits.
//!
//! [`Executor`] owns a sandbox root (from `VF_WORKDIR` or a private temp
//! dir), a content-addressed compilation cache and a bounded job pool.
//! Every run gets a fresh working directory under the sandbox root.

pub mod checker;
pub mod sandbox;
pub mod toolchain;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Checker, Language, Problem, Solution, TestSuite};
use crate::hashing::content_hash;
use crate::par::{default_parallelism, Pool};
use sandbox::{run_process, ProcessLimits, ProcessOutcome};
pub use toolchain::{LanguageToolchain, Toolchain};

pub const WORKDIR_ENV: &str = "VF_WORKDIR";

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("no toolchain configured for language `{0}`")]
    ToolchainMissing(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("failed to spawn `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sandbox failure: {0}")]
    Sandbox(String),
    #[error("custom checker failed (exit {code:?}): {stderr}")]
    CheckerFailure { code: Option<i32>, stderr: String },
    #[error("custom checker did not compile: {0}")]
    CheckerCompile(String),
}

impl ExecError {
    fn io(context: &str, path: &Path, e: std::io::Error) -> ExecError {
        ExecError::Sandbox(format!("{context} {}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    AC,
    WA,
    TLE,
    RE,
    CE,
}

impl Verdict {
    /// Any non-AC verdict counts as the test exposing an error.
    pub fn is_detection(self) -> bool {
        self != Verdict::AC
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Per-run resource limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub time_limit_ms: u64,
    pub wall_limit_ms: u64,
    pub memory_limit_mb: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            time_limit_ms: 2000,
            wall_limit_ms: 4000,
            memory_limit_mb: 256,
        }
    }
}

impl Limits {
    /// Problem limits with the wall budget at twice the CPU budget.
    pub fn for_problem(problem: &Problem) -> Limits {
        Limits {
            time_limit_ms: problem.time_limit_ms,
            wall_limit_ms: problem.time_limit_ms.saturating_mul(2),
            memory_limit_mb: problem.memory_limit_mb,
        }
    }

    /// Limits for generator scripts and validators.
    pub fn generator() -> Limits {
        Limits {
            time_limit_ms: 10_000,
            wall_limit_ms: 20_000,
            memory_limit_mb: 512,
        }
    }

    fn process(&self) -> ProcessLimits {
        ProcessLimits {
            cpu_ms: self.time_limit_ms,
            wall_ms: self.wall_limit_ms.max(self.time_limit_ms),
            memory_mb: Some(self.memory_limit_mb),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    /// AC here means "ran to completion within limits"; [`Executor::judge`]
    /// refines it to WA when the checker rejects the output.
    pub verdict: Verdict,
    /// Exit status when the process exited on its own.
    pub exit_code: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr_excerpt: String,
    pub cpu_time_ms: u64,
    pub peak_memory_mb: u64,
}

impl RunResult {
    fn from_outcome(outcome: ProcessOutcome, limits: &Limits) -> RunResult {
        let verdict = if outcome.exceeded_time(&limits.process()) {
            Verdict::TLE
        } else if !outcome.success() {
            Verdict::RE
        } else {
            Verdict::AC
        };
        let exit_code = match outcome.termination {
            sandbox::Termination::Exited(code) => Some(code),
            _ => None,
        };
        RunResult {
            verdict,
            exit_code,
            stdout: outcome.stdout,
            stderr_excerpt: outcome.stderr_excerpt,
            cpu_time_ms: outcome.cpu_time_ms,
            peak_memory_mb: outcome.peak_memory_mb,
        }
    }
}

/// Source code plus its language; anything the executor can build.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramSource {
    pub language: Language,
    pub source: String,
}

impl ProgramSource {
    pub fn new(language: Language, source: impl Into<String>) -> Self {
        ProgramSource {
            language,
            source: source.into(),
        }
    }
}

impl From<&Solution> for ProgramSource {
    fn from(s: &Solution) -> Self {
        ProgramSource::new(s.language.clone(), s.source.clone())
    }
}

/// A built program ready to run. Lives in the compilation cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledProgram {
    pub hash: String,
    pub language: Language,
    pub dir: PathBuf,
    pub src: PathBuf,
    pub bin: PathBuf,
    run_template: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileOutcome {
    Compiled(Arc<CompiledProgram>),
    CompileError { diagnostics: String },
}

impl CompileOutcome {
    pub fn program(&self) -> Option<&Arc<CompiledProgram>> {
        match self {
            CompileOutcome::Compiled(p) => Some(p),
            CompileOutcome::CompileError { .. } => None,
        }
    }
}

type CacheSlot = Arc<OnceLock<CompileOutcome>>;

pub struct Executor {
    toolchain: Toolchain,
    root: PathBuf,
    _owned_root: Option<tempfile::TempDir>,
    cache: Mutex<HashMap<String, CacheSlot>>,
    compiler_invocations: AtomicUsize,
    pool: Pool,
    compile_limits: ProcessLimits,
}

impl fmt::Debug for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Executor")
            .field("root", &self.root)
            .field("parallelism", &self.pool.parallelism())
            .finish()
    }
}

impl Executor {
    /// Uses `VF_WORKDIR` as the sandbox root when set, else a private temp dir.
    pub fn from_env(toolchain: Toolchain, parallelism: Option<usize>) -> Result<Executor, ExecError> {
        match std::env::var_os(WORKDIR_ENV) {
            Some(dir) => Executor::with_root(toolchain, PathBuf::from(dir), parallelism),
            None => Executor::temporary(toolchain, parallelism),
        }
    }

    pub fn temporary(toolchain: Toolchain, parallelism: Option<usize>) -> Result<Executor, ExecError> {
        let tmp = tempfile::Builder::new()
            .prefix("vf-sandbox-")
            .tempdir()
            .map_err(|e| ExecError::Sandbox(format!("cannot create sandbox root: {e}")))?;
        let mut exec = Executor::with_root(toolchain, tmp.path().to_path_buf(), parallelism)?;
        exec._owned_root = Some(tmp);
        Ok(exec)
    }

    pub fn with_root(toolchain: Toolchain, root: PathBuf, parallelism: Option<usize>) -> Result<Executor, ExecError> {
        for sub in ["cache", "runs"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| ExecError::io("cannot create", &dir, e))?;
        }
        Ok(Executor {
            toolchain,
            root,
            _owned_root: None,
            cache: Mutex::new(HashMap::new()),
            compiler_invocations: AtomicUsize::new(0),
            pool: Pool::new(parallelism.unwrap_or_else(default_parallelism)),
            compile_limits: ProcessLimits {
                cpu_ms: 60_000,
                wall_ms: 120_000,
                memory_mb: None,
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn toolchain(&self) -> &Toolchain {
        &self.toolchain
    }

    /// Number of times a compiler process was actually started.
    pub fn compiler_invocations(&self) -> usize {
        self.compiler_invocations.load(Ordering::SeqCst)
    }

    /// Builds `program`, reusing any cached build of identical content.
    /// Concurrent requests for the same content compile once.
    pub fn compile(&self, program: &ProgramSource) -> Result<CompileOutcome, ExecError> {
        let lt = self.toolchain.get(&program.language)?;
        let hash = content_hash([
            program.language.tag(),
            lt.compile.as_deref().unwrap_or(""),
            lt.run.as_str(),
            program.source.as_str(),
        ]);
        let slot = {
            let mut cache = self.cache.lock().expect("compile cache poisoned");
            cache.entry(hash.clone()).or_default().clone()
        };
        if let Some(done) = slot.get() {
            return Ok(done.clone());
        }
        // OnceLock::get_or_try_init is unstable; serialize initialisation per slot.
        let mut result: Option<ExecError> = None;
        let outcome = slot.get_or_init(|| match self.build(&hash, lt, program) {
            Ok(o) => o,
            Err(e) => {
                result = Some(e);
                CompileOutcome::CompileError {
                    diagnostics: String::new(),
                }
            }
        });
        if let Some(err) = result {
            // Infrastructure failures must not poison the cache.
            self.cache.lock().expect("compile cache poisoned").remove(&hash);
            return Err(err);
        }
        Ok(outcome.clone())
    }

    fn build(&self, hash: &str, lt: &LanguageToolchain, program: &ProgramSource) -> Result<CompileOutcome, ExecError> {
        let dir = self.root.join("cache").join(hash);
        let src_name = lt.source_file_name(&program.language);
        let make = |dir: &Path| CompiledProgram {
            hash: hash.to_string(),
            language: program.language.clone(),
            dir: dir.to_path_buf(),
            src: dir.join(&src_name),
            bin: dir.join("main.bin"),
            run_template: lt.run.clone(),
        };
        if dir.join(".ok").exists() {
            return Ok(CompileOutcome::Compiled(Arc::new(make(&dir))));
        }
        let staging = tempfile::Builder::new()
            .prefix("build-")
            .tempdir_in(self.root.join("cache"))
            .map_err(|e| ExecError::io("cannot create", &self.root, e))?;
        let staged = make(staging.path());
        fs::write(&staged.src, &program.source).map_err(|e| ExecError::io("cannot write", &staged.src, e))?;
        if let Some(template) = &lt.compile {
            self.compiler_invocations.fetch_add(1, Ordering::SeqCst);
            let argv = toolchain::expand(template, &placeholders(&staged, staging.path()))?;
            let outcome = match run_process(&argv, staging.path(), b"", &[], &self.compile_limits) {
                Err(ExecError::Spawn { program: compiler, source }) if source.kind() == std::io::ErrorKind::NotFound => {
                    return Err(ExecError::ToolchainMissing(format!(
                        "{} (compiler `{compiler}` not found)",
                        staged.language
                    )))
                }
                other => other?,
            };
            if !outcome.success() {
                let mut diagnostics = outcome.stderr_excerpt;
                if diagnostics.is_empty() {
                    diagnostics = format!("compiler terminated: {:?}", outcome.termination);
                }
                return Ok(CompileOutcome::CompileError { diagnostics });
            }
        }
        fs::write(staging.path().join(".ok"), b"").map_err(|e| ExecError::io("cannot write", staging.path(), e))?;
        let staged_path = staging.keep();
        if fs::rename(&staged_path, &dir).is_err() {
            // Another process published the same hash first.
            let _ = fs::remove_dir_all(&staged_path);
            if !dir.join(".ok").exists() {
                return Err(ExecError::Sandbox(format!("cannot publish build {}", dir.display())));
            }
        }
        Ok(CompileOutcome::Compiled(Arc::new(make(&dir))))
    }

    /// Runs a compiled program once on `input` in a fresh working directory.
    pub fn run_one(&self, program: &CompiledProgram, input: &[u8], limits: &Limits) -> Result<RunResult, ExecError> {
        self.run_with_env(program, input, limits, &[])
    }

    pub fn run_with_env(
        &self,
        program: &CompiledProgram,
        input: &[u8],
        limits: &Limits,
        env: &[(String, String)],
    ) -> Result<RunResult, ExecError> {
        let dir = tempfile::Builder::new()
            .prefix("run-")
            .tempdir_in(self.root.join("runs"))
            .map_err(|e| ExecError::io("cannot create run dir in", &self.root, e))?;
        let argv = toolchain::expand(&program.run_template, &placeholders(program, dir.path()))?;
        let outcome = run_process(&argv, dir.path(), input, env, &limits.process())?;
        Ok(RunResult::from_outcome(outcome, limits))
    }

    /// Runs `program` on every input through the pool; results in input order.
    pub fn run_many(&self, program: &CompiledProgram, inputs: &[Vec<u8>], limits: &Limits) -> Vec<Result<RunResult, ExecError>> {
        self.pool.map(inputs, |input| self.run_one(program, input, limits))
    }

    /// Compares `actual` to `expected` with the given checker. Custom checkers
    /// receive `input.txt output.txt answer.txt` as arguments; exit 0 accepts,
    /// 1 rejects, anything else is a checker failure.
    pub fn check_output(&self, input: &[u8], actual: &[u8], expected: &[u8], checker: &Checker) -> Result<bool, ExecError> {
        match checker {
            Checker::Token => Ok(checker::tokens_match(actual, expected)),
            Checker::Float { epsilon } => Ok(checker::floats_match(actual, expected, *epsilon)),
            Checker::Custom { program } => self.run_custom_checker(program, input, actual, expected),
        }
    }

    fn run_custom_checker(&self, path: &Path, input: &[u8], actual: &[u8], expected: &[u8]) -> Result<bool, ExecError> {
        let source = fs::read_to_string(path).map_err(|e| ExecError::Config(format!("checker {}: {e}", path.display())))?;
        let compiled = match self.compile(&ProgramSource::new(Language::from_path(path), source))? {
            CompileOutcome::Compiled(p) => p,
            CompileOutcome::CompileError { diagnostics } => return Err(ExecError::CheckerCompile(diagnostics)),
        };
        let dir = tempfile::Builder::new()
            .prefix("check-")
            .tempdir_in(self.root.join("runs"))
            .map_err(|e| ExecError::io("cannot create run dir in", &self.root, e))?;
        let files = [("input.txt", input), ("output.txt", actual), ("answer.txt", expected)];
        for (name, bytes) in files {
            let p = dir.path().join(name);
            fs::write(&p, bytes).map_err(|e| ExecError::io("cannot write", &p, e))?;
        }
        let mut argv = toolchain::expand(&compiled.run_template, &placeholders(&compiled, dir.path()))?;
        argv.extend(files.iter().map(|(name, _)| name.to_string()));
        let outcome = run_process(&argv, dir.path(), b"", &[], &Limits::generator().process())?;
        match outcome.termination {
            sandbox::Termination::Exited(0) => Ok(true),
            sandbox::Termination::Exited(1) => Ok(false),
            sandbox::Termination::Exited(code) => Err(ExecError::CheckerFailure {
                code: Some(code),
                stderr: outcome.stderr_excerpt,
            }),
            _ => Err(ExecError::CheckerFailure {
                code: None,
                stderr: outcome.stderr_excerpt,
            }),
        }
    }

    /// Runs one case and applies the checker: AC/WA/TLE/RE.
    pub fn judge(
        &self,
        program: &CompiledProgram,
        input: &[u8],
        expected: &[u8],
        problem: &Problem,
        limits: &Limits,
    ) -> Result<Verdict, ExecError> {
        let run = self.run_one(program, input, limits)?;
        if run.verdict != Verdict::AC {
            return Ok(run.verdict);
        }
        Ok(if self.check_output(input, &run.stdout, expected, &problem.checker)? {
            Verdict::AC
        } else {
            Verdict::WA
        })
    }

    /// One verdict per case, in case order. A compile error yields an
    /// all-CE vector. No early exit: the full vector is always produced.
    pub fn run_suite(&self, solution: &ProgramSource, suite: &TestSuite, problem: &Problem) -> Result<Vec<Verdict>, ExecError> {
        let program = match self.compile(solution)? {
            CompileOutcome::Compiled(p) => p,
            CompileOutcome::CompileError { .. } => return Ok(vec![Verdict::CE; suite.len()]),
        };
        let limits = Limits::for_problem(problem);
        self.pool
            .map(&suite.cases, |case| self.judge(&program, &case.input, &case.output, problem, &limits))
            .into_iter()
            .collect()
    }
}

fn placeholders(p: &CompiledProgram, dir: &Path) -> toolchain::Placeholders {
    toolchain::Placeholders {
        src: p.src.clone(),
        bin: p.bin.clone(),
        dir: dir.to_path_buf(),
    }
}
