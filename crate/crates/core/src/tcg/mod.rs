//! Test-case generation: direct LLM cases, input-interpreter random
//! sampling, and SAGA (multidimensional analysis of correct solutions plus
//! differential analysis of wrong/corrected pairs).
//!
//! Every flow ends the same way: candidate inputs are self-validated when a
//! validator exists, labeled by running the ground truth, and stamped with
//! provenance. Counts along the way go into a [`GenerationRecord`].
//!
//! Case scripts print inputs separated by lines containing exactly
//! [`CASE_DELIMITER`] and read their seed from the `VF_SEED` environment
//! variable.

pub mod llm;
pub mod parse;
pub mod prompt;
pub mod sampler;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Corpus, Language, Problem, Provenance, Solution, SolutionKind, TestSuite};
use crate::exec::{CompileOutcome, ExecError, Executor, Limits, ProgramSource, Verdict};
use crate::hashing::{content_hash, derive_seed};
use llm::{LlmClient, LlmError, LlmRequest};
use parse::{parse_direct_cases, parse_llm_response, CaseScript, ParseMode};
use sampler::{SamplerError, SamplerSpec};

pub const CASE_DELIMITER: &str = "###CASE###";
pub const SEED_ENV: &str = "VF_SEED";

#[derive(Debug, Error)]
pub enum TcgError {
    #[error("problem `{0}` has no ground truth")]
    GroundTruthMissing(String),
    #[error("ground truth for `{problem}` does not compile: {diagnostics}")]
    GroundTruthCompile { problem: String, diagnostics: String },
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    Direct,
    InterpreterRandom,
    SagaMultidim,
    SagaDifferential,
    SagaFull,
}

impl Paradigm {
    fn provenance(self) -> Provenance {
        match self {
            Paradigm::Direct => Provenance::Direct,
            Paradigm::InterpreterRandom => Provenance::RandomInterpreter,
            Paradigm::SagaMultidim | Paradigm::SagaFull => Provenance::SagaMultidim,
            Paradigm::SagaDifferential => Provenance::SagaDifferential,
        }
    }
}

/// Audit trail of one generation unit (one prompt, or one sampler run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    pub problem_id: String,
    pub paradigm: Paradigm,
    pub prompts: Vec<String>,
    pub responses: Vec<String>,
    pub scripts: Vec<CaseScript>,
    pub produced_inputs: usize,
    pub validated_inputs: usize,
    pub labeled_cases: usize,
    pub retention_rate: f64,
    pub invalid_inputs: usize,
    pub validator_crashes: usize,
    pub ground_truth_failures: usize,
    pub duplicates: usize,
    pub notes: Vec<String>,
}

impl GenerationRecord {
    pub fn new(problem_id: &str, paradigm: Paradigm, discriminator: &str) -> Self {
        let tag = format!("{paradigm:?}");
        let hash = content_hash([problem_id, tag.as_str(), discriminator]);
        GenerationRecord {
            id: format!("{problem_id}-{}", &hash[..12]),
            problem_id: problem_id.to_string(),
            paradigm,
            prompts: Vec::new(),
            responses: Vec::new(),
            scripts: Vec::new(),
            produced_inputs: 0,
            validated_inputs: 0,
            labeled_cases: 0,
            retention_rate: 0.0,
            invalid_inputs: 0,
            validator_crashes: 0,
            ground_truth_failures: 0,
            duplicates: 0,
            notes: Vec::new(),
        }
    }

    /// Sets `retention_rate = labeled / produced` (0 when nothing was produced).
    pub fn finish(&mut self) {
        debug_assert!(self.labeled_cases <= self.validated_inputs && self.validated_inputs <= self.produced_inputs);
        self.retention_rate = if self.produced_inputs == 0 {
            0.0
        } else {
            self.labeled_cases as f64 / self.produced_inputs as f64
        };
    }
}

/// Knobs shared by all flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub model_tag: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
    /// Final suite size for SAGA.
    pub target_size: usize,
    pub solution_cap: usize,
    pub pair_cap: usize,
    pub max_inputs_per_script: usize,
    pub parse_mode: ParseMode,
    pub multidim: bool,
    pub differential: bool,
    /// Use the minimal boundary-value template in place of the
    /// multidimensional one.
    pub simple_priors: bool,
    /// Call the manual top-up hook when the suite is smaller than this.
    pub manual_threshold: Option<usize>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            model_tag: "default".into(),
            temperature: 0.0,
            max_tokens: 4096,
            seed: 0,
            target_size: 50,
            solution_cap: prompt::DEFAULT_SOLUTION_CAP,
            pair_cap: 5,
            max_inputs_per_script: 100,
            parse_mode: ParseMode::Strict,
            multidim: true,
            differential: true,
            simple_priors: false,
            manual_threshold: None,
        }
    }
}

impl GenConfig {
    pub fn request(&self, prompt: String) -> LlmRequest {
        LlmRequest {
            model_tag: self.model_tag.clone(),
            prompt,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

/// Splits script output on delimiter lines. Blank blocks are dropped and
/// every input ends with a newline.
pub fn split_cases(stdout: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut block: Vec<&[u8]> = Vec::new();
    let flush = |block: &mut Vec<&[u8]>, out: &mut Vec<Vec<u8>>| {
        if block.iter().any(|l| l.iter().any(|b| !b.is_ascii_whitespace())) {
            let mut input = block.join(&b'\n');
            input.push(b'\n');
            out.push(input);
        }
        block.clear();
    };
    let body = stdout.strip_suffix(b"\n").unwrap_or(stdout);
    for line in body.split(|&b| b == b'\n') {
        let trimmed = line.strip_suffix(b"\r").unwrap_or(line);
        if trimmed == CASE_DELIMITER.as_bytes() {
            flush(&mut block, &mut out);
        } else {
            block.push(line);
        }
    }
    flush(&mut block, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptRun {
    pub inputs: Vec<Vec<u8>>,
    /// AC when the script ran to completion.
    pub verdict: Verdict,
    /// More inputs were printed than the cap allowed.
    pub truncated: bool,
}

/// Runs a case script with `VF_SEED=seed` under generator limits and
/// returns at most `max_inputs` inputs. A failing script yields none.
pub fn run_case_script(
    exec: &Executor,
    script: &ProgramSource,
    seed: u64,
    limits: &Limits,
    max_inputs: usize,
) -> Result<ScriptRun, ExecError> {
    let program = match exec.compile(script)? {
        CompileOutcome::Compiled(p) => p,
        CompileOutcome::CompileError { .. } => {
            return Ok(ScriptRun {
                inputs: Vec::new(),
                verdict: Verdict::CE,
                truncated: false,
            })
        }
    };
    let run = exec.run_with_env(&program, b"", limits, &[(SEED_ENV.to_string(), seed.to_string())])?;
    if run.verdict != Verdict::AC {
        return Ok(ScriptRun {
            inputs: Vec::new(),
            verdict: run.verdict,
            truncated: false,
        });
    }
    let mut inputs = split_cases(&run.stdout);
    let truncated = inputs.len() > max_inputs;
    inputs.truncate(max_inputs);
    Ok(ScriptRun {
        inputs,
        verdict: Verdict::AC,
        truncated,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationOutcome {
    pub kept: Vec<Vec<u8>>,
    pub invalid: usize,
    pub crashed: usize,
}

/// Runs the validator on each input (stdin). Exit 0 keeps the input,
/// exit 1 rejects it, anything else counts as a crash. Order is preserved.
pub fn self_validate(exec: &Executor, validator: Option<&ProgramSource>, inputs: Vec<Vec<u8>>) -> Result<ValidationOutcome, ExecError> {
    let Some(validator) = validator else {
        return Ok(ValidationOutcome {
            kept: inputs,
            ..Default::default()
        });
    };
    let program = match exec.compile(validator)? {
        CompileOutcome::Compiled(p) => p,
        CompileOutcome::CompileError { .. } => {
            return Ok(ValidationOutcome {
                kept: Vec::new(),
                invalid: 0,
                crashed: inputs.len(),
            })
        }
    };
    let results = exec.run_many(&program, &inputs, &Limits::generator());
    let mut outcome = ValidationOutcome::default();
    for (input, result) in inputs.into_iter().zip(results) {
        let run = result?;
        match (run.verdict, run.exit_code) {
            (Verdict::AC, Some(0)) => outcome.kept.push(input),
            (Verdict::RE, Some(1)) => outcome.invalid += 1,
            _ => outcome.crashed += 1,
        }
    }
    Ok(outcome)
}

/// An input waiting to be labeled, with where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub input: Vec<u8>,
    pub provenance: Provenance,
    pub record_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOutcome {
    pub suite: TestSuite,
    /// Candidate positions that made it into the suite, in suite order.
    pub kept: Vec<usize>,
    pub dropped_tle: usize,
    pub dropped_re: usize,
}

fn compile_ground_truth(exec: &Executor, problem: &Problem, ground_truth: &Solution) -> Result<std::sync::Arc<crate::exec::CompiledProgram>, TcgError> {
    match exec.compile(&ProgramSource::from(ground_truth))? {
        CompileOutcome::Compiled(p) => Ok(p),
        CompileOutcome::CompileError { diagnostics } => Err(TcgError::GroundTruthCompile {
            problem: problem.id.clone(),
            diagnostics,
        }),
    }
}

/// Runs the ground truth on every candidate. Candidates on which the
/// ground truth itself times out or crashes are dropped and counted.
pub fn label_outputs(
    exec: &Executor,
    problem: &Problem,
    ground_truth: &Solution,
    candidates: &[Candidate],
) -> Result<LabelOutcome, TcgError> {
    let program = compile_ground_truth(exec, problem, ground_truth)?;
    let limits = Limits::for_problem(problem);
    let inputs: Vec<Vec<u8>> = candidates.iter().map(|c| c.input.clone()).collect();
    let results = exec.run_many(&program, &inputs, &limits);
    let mut outcome = LabelOutcome {
        suite: TestSuite::new(problem.id.clone()),
        kept: Vec::new(),
        dropped_tle: 0,
        dropped_re: 0,
    };
    for (i, (candidate, result)) in candidates.iter().zip(results).enumerate() {
        let run = result?;
        match run.verdict {
            Verdict::AC => {
                outcome
                    .suite
                    .push(candidate.input.clone(), run.stdout, candidate.provenance, candidate.record_id.clone());
                outcome.kept.push(i);
            }
            Verdict::TLE => outcome.dropped_tle += 1,
            _ => outcome.dropped_re += 1,
        }
    }
    Ok(outcome)
}

fn ground_truth<'a>(corpus: &'a Corpus, problem: &Problem) -> Result<&'a Solution, TcgError> {
    corpus
        .ground_truth(&problem.id)
        .ok_or_else(|| TcgError::GroundTruthMissing(problem.id.clone()))
}

/// Asks the model for complete cases and keeps those whose expected output
/// the ground truth confirms (under the problem's checker). Kept cases
/// carry the ground truth's output.
pub fn gen_direct(
    problem: &Problem,
    corpus: &Corpus,
    client: &dyn LlmClient,
    exec: &Executor,
    n_target: usize,
    config: &GenConfig,
) -> Result<(TestSuite, GenerationRecord), TcgError> {
    let truth = ground_truth(corpus, problem)?;
    let prompt = prompt::build_direct_prompt(problem, n_target);
    let mut record = GenerationRecord::new(&problem.id, Paradigm::Direct, &prompt);
    let response = client.complete(&config.request(prompt.clone()))?;
    record.prompts.push(prompt);
    record.responses.push(response.text.clone());
    let (pairs, diagnostics) = parse_direct_cases(&response.text);
    record.notes.extend(diagnostics);
    if pairs.is_empty() {
        record.notes.push("no parseable cases in response".into());
    }
    record.produced_inputs = pairs.len();
    record.validated_inputs = pairs.len();
    let candidates: Vec<Candidate> = pairs
        .iter()
        .map(|(input, _)| Candidate {
            input: input.clone(),
            provenance: Provenance::Direct,
            record_id: Some(record.id.clone()),
        })
        .collect();
    let labeled = label_outputs(exec, problem, truth, &candidates)?;
    record.ground_truth_failures = labeled.dropped_tle + labeled.dropped_re;
    let mut suite = TestSuite::new(problem.id.clone());
    suite.created_with_seed = Some(config.seed);
    let mut mismatched = 0;
    for (case, &i) in labeled.suite.cases.iter().zip(&labeled.kept) {
        let claimed = &pairs[i].1;
        if exec.check_output(&case.input, claimed, &case.output, &problem.checker)? {
            suite.push(case.input.clone(), case.output.clone(), Provenance::Direct, Some(record.id.clone()));
        } else {
            mismatched += 1;
        }
    }
    if mismatched > 0 {
        record.notes.push(format!("{mismatched} cases with wrong expected output dropped"));
    }
    record.labeled_cases = suite.len();
    record.finish();
    Ok((suite, record))
}

/// Source of random inputs for the interpreter paradigm.
pub enum InputGenerator<'a> {
    /// The built-in sampler.
    Builtin(&'a SamplerSpec),
    /// A model-authored sampler script.
    Llm {
        client: &'a dyn LlmClient,
        config: &'a GenConfig,
    },
}

const SAMPLER_SCRIPT_ATTEMPTS: u64 = 4;

fn python(source: &str) -> ProgramSource {
    ProgramSource::new(Language::Python, source)
}

/// `n_target` random inputs, labeled by the ground truth.
pub fn gen_random_inputs(
    problem: &Problem,
    corpus: &Corpus,
    generator: InputGenerator<'_>,
    exec: &Executor,
    n_target: usize,
    seed: u64,
) -> Result<(TestSuite, GenerationRecord), TcgError> {
    let truth = ground_truth(corpus, problem)?;
    let mut validator = None;
    let (inputs, mut record) = match generator {
        InputGenerator::Builtin(spec) => {
            let record = GenerationRecord::new(&problem.id, Paradigm::InterpreterRandom, &format!("builtin/{seed}"));
            (spec.generate(n_target, seed)?, record)
        }
        InputGenerator::Llm { client, config } => {
            let prompt = prompt::build_interpreter_prompt(problem, n_target);
            let mut record = GenerationRecord::new(&problem.id, Paradigm::InterpreterRandom, &prompt);
            let response = client.complete(&config.request(prompt.clone()))?;
            record.prompts.push(prompt);
            record.responses.push(response.text.clone());
            let parsed = parse_llm_response(&response.text, ParseMode::Lenient, n_target);
            record.notes.extend(parsed.diagnostics);
            let mut inputs = Vec::new();
            if let Some(script) = parsed.scripts.into_iter().next() {
                let source = python(&script.script_source);
                for attempt in 0..SAMPLER_SCRIPT_ATTEMPTS {
                    if inputs.len() >= n_target {
                        break;
                    }
                    let run_seed = derive_seed(seed, "interpreter", attempt);
                    let run = run_case_script(exec, &source, run_seed, &Limits::generator(), n_target - inputs.len())?;
                    if run.verdict != Verdict::AC {
                        record.notes.push(format!("sampler script {} on attempt {attempt}", run.verdict));
                        break;
                    }
                    if run.inputs.is_empty() {
                        break;
                    }
                    inputs.extend(run.inputs);
                }
                validator = script.self_validation_source.as_deref().map(python);
                record.scripts.push(script);
            } else {
                record.notes.push("no sampler script in response".into());
            }
            (inputs, record)
        }
    };
    if inputs.len() < n_target {
        record.notes.push(format!("produced {} of {n_target} inputs", inputs.len()));
    }
    record.produced_inputs = inputs.len();
    let validated = self_validate(exec, validator.as_ref(), inputs)?;
    record.invalid_inputs = validated.invalid;
    record.validator_crashes = validated.crashed;
    record.validated_inputs = validated.kept.len();
    let candidates: Vec<Candidate> = validated
        .kept
        .into_iter()
        .map(|input| Candidate {
            input,
            provenance: Provenance::RandomInterpreter,
            record_id: Some(record.id.clone()),
        })
        .collect();
    let labeled = label_outputs(exec, problem, truth, &candidates)?;
    record.ground_truth_failures = labeled.dropped_tle + labeled.dropped_re;
    record.labeled_cases = labeled.suite.len();
    record.finish();
    let mut suite = labeled.suite;
    suite.created_with_seed = Some(seed);
    Ok((suite, record))
}

/// Supplies hand-written inputs when a generated suite falls short.
pub trait ManualTopUp {
    fn inputs(&self, problem: &Problem, needed: usize) -> Vec<Vec<u8>>;
}

/// Reads `<dir>/<problem-id>/*.in`, sorted by file name.
#[derive(Debug, Clone)]
pub struct ManualDir(pub PathBuf);

impl ManualTopUp for ManualDir {
    fn inputs(&self, problem: &Problem, needed: usize) -> Vec<Vec<u8>> {
        let Ok(entries) = std::fs::read_dir(self.0.join(&problem.id)) else {
            return Vec::new();
        };
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "in"))
            .collect();
        paths.sort();
        paths.into_iter().take(needed).filter_map(|p| std::fs::read(p).ok()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SagaOutcome {
    pub suite: TestSuite,
    pub records: Vec<GenerationRecord>,
}

/// One prompt's worth of scripts, each already run and validated.
struct Unit {
    record: GenerationRecord,
    per_script: Vec<Vec<Vec<u8>>>,
}

fn run_unit(
    exec: &Executor,
    client: &dyn LlmClient,
    config: &GenConfig,
    problem: &Problem,
    paradigm: Paradigm,
    prompt: String,
    note: Option<String>,
) -> Result<Unit, TcgError> {
    let mut record = GenerationRecord::new(&problem.id, paradigm, &prompt);
    record.notes.extend(note);
    let response = client.complete(&config.request(prompt.clone()))?;
    record.prompts.push(prompt);
    record.responses.push(response.text.clone());
    let parsed = parse_llm_response(&response.text, config.parse_mode, config.max_inputs_per_script);
    record.notes.extend(parsed.diagnostics);
    let mut per_script = Vec::new();
    for (s, script) in parsed.scripts.iter().enumerate() {
        let seed = derive_seed(config.seed, &record.id, s as u64);
        let run = run_case_script(exec, &python(&script.script_source), seed, &Limits::generator(), script.target_count)?;
        if run.verdict != Verdict::AC {
            record.notes.push(format!("script {s}: {}", run.verdict));
        }
        if run.truncated {
            record.notes.push(format!("script {s}: output capped at {}", script.target_count));
        }
        record.produced_inputs += run.inputs.len();
        let validator = script.self_validation_source.as_deref().map(python);
        let validated = self_validate(exec, validator.as_ref(), run.inputs)?;
        record.invalid_inputs += validated.invalid;
        record.validator_crashes += validated.crashed;
        record.validated_inputs += validated.kept.len();
        per_script.push(validated.kept);
    }
    record.scripts = parsed.scripts;
    Ok(Unit { record, per_script })
}

/// Interleaves lists: first element of each, then second of each, ...
fn round_robin<T>(lists: Vec<Vec<T>>) -> Vec<T> {
    let mut iters: Vec<_> = lists.into_iter().map(|l| l.into_iter()).collect();
    let mut out = Vec::new();
    loop {
        let before = out.len();
        for it in iters.iter_mut() {
            out.extend(it.next());
        }
        if out.len() == before {
            return out;
        }
    }
}

/// Full SAGA flow for one problem. Inputs from all scripts are interleaved
/// round-robin, deduplicated byte-exactly, labeled, and truncated to
/// `config.target_size`.
pub fn saga_generate(
    problem: &Problem,
    corpus: &Corpus,
    client: &dyn LlmClient,
    exec: &Executor,
    config: &GenConfig,
    top_up: Option<&dyn ManualTopUp>,
) -> Result<SagaOutcome, TcgError> {
    let truth = ground_truth(corpus, problem)?;
    let mut units = Vec::new();
    let mut skipped = Vec::new();
    if config.multidim {
        let correct = corpus.solutions_for(&problem.id, SolutionKind::CorrectHuman);
        if correct.is_empty() {
            skipped.push("multidimensional analysis skipped: no correct solutions");
        } else {
            let built = if config.simple_priors {
                prompt::build_simple_priors_prompt(problem, &correct, config.solution_cap)
            } else {
                prompt::build_multidim_prompt(problem, &correct, config.solution_cap)
            };
            units.push(run_unit(exec, client, config, problem, Paradigm::SagaMultidim, built.text, built.note)?);
        }
    }
    if config.differential {
        let pairs = corpus.pairs_for(&problem.id);
        if pairs.is_empty() {
            skipped.push("differential analysis skipped: no submission pairs");
        }
        // later entries are more recent
        for pair in pairs.iter().rev().take(config.pair_cap) {
            let text = prompt::build_differential_prompt(problem, pair);
            units.push(run_unit(exec, client, config, problem, Paradigm::SagaDifferential, text, None)?);
        }
    }

    let mut lists = Vec::new();
    for (u, unit) in units.iter_mut().enumerate() {
        let provenance = unit.record.paradigm.provenance();
        for inputs in std::mem::take(&mut unit.per_script) {
            lists.push(inputs.into_iter().map(|input| (u, provenance, input)).collect::<Vec<_>>());
        }
    }
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    let mut owners = Vec::new();
    for (u, provenance, input) in round_robin(lists) {
        if seen.insert(input.clone()) {
            candidates.push(Candidate {
                input,
                provenance,
                record_id: Some(units[u].record.id.clone()),
            });
            owners.push(u);
        } else {
            units[u].record.duplicates += 1;
        }
    }
    let labeled = label_outputs(exec, problem, truth, &candidates)?;
    let kept: HashSet<usize> = labeled.kept.iter().copied().collect();
    for (i, &u) in owners.iter().enumerate() {
        if kept.contains(&i) {
            units[u].record.labeled_cases += 1;
        } else {
            units[u].record.ground_truth_failures += 1;
        }
    }

    let mut suite = TestSuite::new(problem.id.clone());
    suite.created_with_seed = Some(config.seed);
    for case in labeled.suite.cases.into_iter().take(config.target_size) {
        suite.push(case.input, case.output, case.provenance, case.generator_record_id);
    }

    let mut records: Vec<GenerationRecord> = units.into_iter().map(|u| u.record).collect();
    if let (Some(threshold), Some(hook)) = (config.manual_threshold, top_up) {
        if suite.len() < threshold {
            let needed = threshold.min(config.target_size).saturating_sub(suite.len());
            let mut manual = GenerationRecord::new(&problem.id, Paradigm::SagaFull, "manual");
            let fresh: Vec<Candidate> = hook
                .inputs(problem, needed)
                .into_iter()
                .filter(|i| {
                    let new = seen.insert(i.clone());
                    manual.duplicates += usize::from(!new);
                    new
                })
                .map(|input| Candidate {
                    input,
                    provenance: Provenance::Manual,
                    record_id: Some(manual.id.clone()),
                })
                .collect();
            manual.produced_inputs = fresh.len() + manual.duplicates;
            manual.validated_inputs = fresh.len();
            let labeled = label_outputs(exec, problem, truth, &fresh)?;
            manual.ground_truth_failures = labeled.dropped_tle + labeled.dropped_re;
            manual.labeled_cases = labeled.suite.len();
            for case in labeled.suite.cases {
                suite.push(case.input, case.output, case.provenance, case.generator_record_id);
            }
            manual.notes.push(format!("manual top-up below threshold {threshold}"));
            records.push(manual);
        }
    }
    for r in &mut records {
        r.finish();
    }
    if records.is_empty() {
        let mut empty = GenerationRecord::new(&problem.id, Paradigm::SagaFull, "empty");
        empty.notes.extend(skipped.iter().map(|s| s.to_string()));
        empty.notes.push("all components failed or disabled".into());
        records.push(empty);
    } else if let Some(first) = records.first_mut() {
        first.notes.extend(skipped.iter().map(|s| s.to_string()));
    }
    Ok(SagaOutcome { suite, records })
}

/// Cases of `b` whose input is not already in `a`, appended to `a`.
pub fn dedup_union(a: &TestSuite, b: &TestSuite) -> TestSuite {
    let mut out = TestSuite::new(a.problem_id.clone());
    out.created_with_seed = a.created_with_seed;
    let mut seen = HashSet::new();
    for case in a.cases.iter().chain(&b.cases) {
        if seen.insert(case.input.as_slice()) {
            out.push(case.input.clone(), case.output.clone(), case.provenance, case.generator_record_id.clone());
        }
    }
    out
}
