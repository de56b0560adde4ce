//! On-disk corpus and suite formats.
//!
//! A corpus is a directory with three line-delimited JSON files:
//! `problems.jsonl`, `solutions.jsonl` and `pairs.jsonl`. A missing file is
//! treated as empty. Suites live in their own `.suite.jsonl` files: a header
//! line followed by one test case per line, with input and output bytes
//! base64-encoded. Field names are documented in `docs/format.md`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::content_hash;

pub const PROBLEMS_FILE: &str = "problems.jsonl";
pub const SOLUTIONS_FILE: &str = "solutions.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const SUITE_EXTENSION: &str = "suite.jsonl";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("dangling references to unknown ids: {}", .ids.join(", "))]
    Dangling { ids: Vec<String> },
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("invalid record `{id}`: {message}")]
    Invariant { id: String, message: String },
    #[error("suite {path}: index gap/duplicate at line {line} (expected index {expected}, found {found})")]
    IndexGap {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Atcoder,
    Codeforces,
    Nowcoder,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    #[default]
    Medium,
    Hard,
}

/// How a program's output is compared against the expected output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checker {
    /// Whitespace-separated token sequences must match exactly.
    #[default]
    Token,
    /// Numeric tokens match within `epsilon * max(1, |expected|)`.
    Float { epsilon: f64 },
    /// External checker program; path is relative to the corpus directory
    /// on disk and absolute after loading.
    Custom { program: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Language {
    Cpp,
    Python,
    Other(String),
}

impl Language {
    pub fn tag(&self) -> &str {
        match self {
            Language::Cpp => "cpp",
            Language::Python => "python",
            Language::Other(tag) => tag,
        }
    }

    /// Guesses the language from a file extension.
    pub fn from_path(path: &Path) -> Language {
        match path.extension().and_then(|e| e.to_str()) {
            Some("cpp" | "cc" | "cxx") => Language::Cpp,
            Some("py") => Language::Python,
            Some(other) => Language::Other(other.to_string()),
            None => Language::Other(String::new()),
        }
    }
}

impl From<String> for Language {
    fn from(tag: String) -> Self {
        match tag.as_str() {
            "cpp" | "c++" => Language::Cpp,
            "python" | "python3" | "py" => Language::Python,
            _ => Language::Other(tag),
        }
    }
}

impl From<Language> for String {
    fn from(lang: Language) -> Self {
        lang.tag().to_string()
    }
}

impl Serialize for Language {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for Language {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d).map(Language::from)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    GroundTruth,
    CorrectHuman,
    WrongHuman,
    ModelCandidate,
}

/// Platform verdict recorded for an incorrect human submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecordedVerdict {
    WA,
    TLE,
    RE,
}

fn default_time_limit() -> u64 {
    2000
}

fn default_memory_limit() -> u64 {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub platform: Platform,
    pub statement: String,
    /// Human-readable description of the input space.
    pub constraints_text: String,
    #[serde(default)]
    pub difficulty: Difficulty,
    /// Id of the ground-truth solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    #[serde(default = "default_time_limit")]
    pub time_limit_ms: u64,
    #[serde(default = "default_memory_limit")]
    pub memory_limit_mb: u64,
    #[serde(default)]
    pub checker: Checker,
    /// Optional spec for the built-in random input sampler
    /// (see [`crate::tcg::sampler`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution {
    pub id: String,
    pub problem_id: String,
    pub kind: SolutionKind,
    pub language: Language,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_verdict: Option<RecordedVerdict>,
}

impl Solution {
    pub fn content_hash(&self) -> String {
        content_hash([self.language.tag(), self.source.as_str()])
    }
}

/// A user's incorrect submission paired with their later corrected one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionPair {
    pub problem_id: String,
    pub wrong: Solution,
    pub corrected: Solution,
    pub same_author: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PairRecord {
    problem_id: String,
    wrong: String,
    corrected: String,
    #[serde(default = "yes")]
    same_author: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    RandomInterpreter,
    SagaMultidim,
    SagaDifferential,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub index: usize,
    #[serde(with = "b64")]
    pub input: Vec<u8>,
    #[serde(with = "b64")]
    pub output: Vec<u8>,
    pub provenance: Provenance,
    #[serde(default)]
    pub generator_record_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSuite {
    pub problem_id: String,
    pub cases: Vec<TestCase>,
    pub created_with_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SuiteHeader {
    problem_id: String,
    #[serde(default)]
    created_with_seed: Option<u64>,
    n_cases: usize,
}

impl TestSuite {
    pub fn new(problem_id: impl Into<String>) -> Self {
        TestSuite {
            problem_id: problem_id.into(),
            cases: Vec::new(),
            created_with_seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Appends a case, assigning the next index.
    pub fn push(&mut self, input: Vec<u8>, output: Vec<u8>, provenance: Provenance, record: Option<String>) {
        let index = self.cases.len();
        self.cases.push(TestCase {
            index,
            input,
            output,
            provenance,
            generator_record_id: record,
        });
    }

    /// Hash over the ordered (input, output) pairs.
    pub fn content_hash(&self) -> String {
        content_hash(
            std::iter::once(self.problem_id.as_bytes())
                .chain(self.cases.iter().flat_map(|c| [c.input.as_slice(), c.output.as_slice()])),
        )
    }

    pub fn check_indices(&self) -> Result<(), (usize, usize)> {
        for (expected, case) in self.cases.iter().enumerate() {
            if case.index != expected {
                return Err((expected, case.index));
            }
        }
        Ok(())
    }
}

mod b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD.decode(text).map_err(serde::de::Error::custom)
    }
}

/// Problems, solutions and submission pairs with all references resolved.
/// Immutable after loading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub root: PathBuf,
    problems: Vec<Problem>,
    solutions: Vec<Solution>,
    pairs: Vec<SubmissionPair>,
    problem_index: HashMap<String, usize>,
    solution_index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from in-memory records, enforcing the same checks as
    /// [`load_corpus`].
    pub fn from_parts(
        root: PathBuf,
        problems: Vec<Problem>,
        solutions: Vec<Solution>,
        pairs: Vec<(String, String, String, bool)>,
    ) -> Result<Corpus, DatasetError> {
        let records = pairs
            .into_iter()
            .map(|(problem_id, wrong, corrected, same_author)| PairRecord {
                problem_id,
                wrong,
                corrected,
                same_author,
            })
            .collect();
        assemble(root, problems, solutions, records)
    }

    pub fn problems(&self) -> &[Problem] {
        &self.problems
    }

    pub fn solutions(&self) -> &[Solution] {
        &self.solutions
    }

    pub fn pairs(&self) -> &[SubmissionPair] {
        &self.pairs
    }

    pub fn problem(&self, id: &str) -> Option<&Problem> {
        self.problem_index.get(id).map(|&i| &self.problems[i])
    }

    pub fn solution(&self, id: &str) -> Option<&Solution> {
        self.solution_index.get(id).map(|&i| &self.solutions[i])
    }

    /// Solutions of one kind for a problem, in corpus order.
    pub fn solutions_for(&self, problem_id: &str, kind: SolutionKind) -> Vec<&Solution> {
        self.solutions
            .iter()
            .filter(|s| s.problem_id == problem_id && s.kind == kind)
            .collect()
    }

    pub fn ground_truth(&self, problem_id: &str) -> Option<&Solution> {
        self.problem(problem_id)?
            .ground_truth
            .as_deref()
            .and_then(|id| self.solution(id))
    }

    /// Pairs for a problem in file order (later lines are more recent).
    pub fn pairs_for(&self, problem_id: &str) -> Vec<&SubmissionPair> {
        self.pairs
            .iter()
            .filter(|p| p.problem_id == problem_id)
            .collect()
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            file: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record).expect("records serialize");
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Loads a corpus directory. Missing files count as empty.
pub fn load_corpus(path: &Path) -> Result<Corpus, DatasetError> {
    if !path.is_dir() {
        return Err(DatasetError::Io {
            path: path.to_path_buf(),
            source: io::Error::new(io::ErrorKind::NotFound, "corpus directory not found"),
        });
    }
    let mut problems: Vec<Problem> = read_jsonl(&path.join(PROBLEMS_FILE))?;
    let solutions: Vec<Solution> = read_jsonl(&path.join(SOLUTIONS_FILE))?;
    let pairs: Vec<PairRecord> = read_jsonl(&path.join(PAIRS_FILE))?;
    for problem in &mut problems {
        if let Checker::Custom { program } = &mut problem.checker {
            if program.is_relative() {
                *program = path.join(&*program);
            }
        }
    }
    assemble(path.to_path_buf(), problems, solutions, pairs)
}

fn assemble(
    root: PathBuf,
    problems: Vec<Problem>,
    solutions: Vec<Solution>,
    pair_records: Vec<PairRecord>,
) -> Result<Corpus, DatasetError> {
    let mut problem_index = HashMap::new();
    for (i, p) in problems.iter().enumerate() {
        if problem_index.insert(p.id.clone(), i).is_some() {
            return Err(DatasetError::Duplicate {
                kind: "problem",
                id: p.id.clone(),
            });
        }
        if p.time_limit_ms == 0 || p.memory_limit_mb == 0 {
            return Err(DatasetError::Invariant {
                id: p.id.clone(),
                message: "time_limit_ms and memory_limit_mb must be positive".into(),
            });
        }
    }
    let mut solution_index = HashMap::new();
    for (i, s) in solutions.iter().enumerate() {
        if solution_index.insert(s.id.clone(), i).is_some() {
            return Err(DatasetError::Duplicate {
                kind: "solution",
                id: s.id.clone(),
            });
        }
        if s.source.is_empty() {
            return Err(DatasetError::Invariant {
                id: s.id.clone(),
                message: "source is empty".into(),
            });
        }
        if s.kind == SolutionKind::WrongHuman && s.recorded_verdict.is_none() {
            return Err(DatasetError::Invariant {
                id: s.id.clone(),
                message: "wrong_human solution without recorded_verdict".into(),
            });
        }
    }

    let mut dangling: Vec<String> = Vec::new();
    let mut note = |id: &str| {
        if !dangling.iter().any(|d| d == id) {
            dangling.push(id.to_string());
        }
    };
    for s in &solutions {
        if !problem_index.contains_key(&s.problem_id) {
            note(&s.problem_id);
        }
    }
    for p in &problems {
        if let Some(gt) = &p.ground_truth {
            if !solution_index.contains_key(gt) {
                note(gt);
            }
        }
    }
    for r in &pair_records {
        for id in [&r.wrong, &r.corrected] {
            if !solution_index.contains_key(id) {
                note(id);
            }
        }
        if !problem_index.contains_key(&r.problem_id) {
            note(&r.problem_id);
        }
    }
    if !dangling.is_empty() {
        return Err(DatasetError::Dangling { ids: dangling });
    }

    for p in &problems {
        if let Some(gt) = &p.ground_truth {
            let s = &solutions[solution_index[gt]];
            if s.kind != SolutionKind::GroundTruth || s.problem_id != p.id {
                return Err(DatasetError::Invariant {
                    id: p.id.clone(),
                    message: format!("ground_truth `{gt}` is not a ground_truth solution of this problem"),
                });
            }
        }
    }

    let mut pairs = Vec::with_capacity(pair_records.len());
    for r in pair_records {
        let wrong = solutions[solution_index[&r.wrong]].clone();
        let corrected = solutions[solution_index[&r.corrected]].clone();
        if wrong.kind != SolutionKind::WrongHuman
            || corrected.kind != SolutionKind::CorrectHuman
            || wrong.problem_id != r.problem_id
            || corrected.problem_id != r.problem_id
        {
            return Err(DatasetError::Invariant {
                id: format!("{}/{}", r.wrong, r.corrected),
                message: "pair must be (wrong_human, correct_human) of the same problem".into(),
            });
        }
        pairs.push(SubmissionPair {
            problem_id: r.problem_id,
            wrong,
            corrected,
            same_author: r.same_author,
        });
    }

    Ok(Corpus {
        root,
        problems,
        solutions,
        pairs,
        problem_index,
        solution_index,
    })
}

/// Writes a corpus back to `dir` in the same three-file layout.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<(), DatasetError> {
    let problems: Vec<Problem> = corpus
        .problems
        .iter()
        .map(|p| {
            let mut p = p.clone();
            if let Checker::Custom { program } = &mut p.checker {
                if let Ok(rel) = program.strip_prefix(&corpus.root) {
                    *program = rel.to_path_buf();
                }
            }
            p
        })
        .collect();
    let pairs: Vec<PairRecord> = corpus
        .pairs
        .iter()
        .map(|p| PairRecord {
            problem_id: p.problem_id.clone(),
            wrong: p.wrong.id.clone(),
            corrected: p.corrected.id.clone(),
            same_author: p.same_author,
        })
        .collect();
    write_jsonl(&dir.join(PROBLEMS_FILE), &problems)?;
    write_jsonl(&dir.join(SOLUTIONS_FILE), &corpus.solutions)?;
    write_jsonl(&dir.join(PAIRS_FILE), &pairs)
}

pub fn encode_suite(suite: &TestSuite) -> Vec<u8> {
    let header = SuiteHeader {
        problem_id: suite.problem_id.clone(),
        created_with_seed: suite.created_with_seed,
        n_cases: suite.cases.len(),
    };
    let mut buf = serde_json::to_vec(&header).expect("header serializes");
    buf.push(b'\n');
    for case in &suite.cases {
        serde_json::to_writer(&mut buf, case).expect("case serializes");
        buf.push(b'\n');
    }
    buf
}

pub fn save_suite(suite: &TestSuite, path: &Path) -> Result<(), DatasetError> {
    if let Err((expected, found)) = suite.check_indices() {
        return Err(DatasetError::Invariant {
            id: suite.problem_id.clone(),
            message: format!("case index {found} at position {expected}"),
        });
    }
    write_atomic(path, &encode_suite(suite))
}

pub fn load_suite(path: &Path) -> Result<TestSuite, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, e: serde_json::Error| DatasetError::Parse {
        file: path.to_path_buf(),
        line,
        message: e.to_string(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(DatasetError::Parse {
            file: path.to_path_buf(),
            line: 1,
            message: "missing suite header".into(),
        });
    };
    let header: SuiteHeader = serde_json::from_str(first).map_err(|e| parse_err(1, e))?;
    let mut cases = Vec::with_capacity(header.n_cases);
    for (i, line) in lines {
        let case: TestCase = serde_json::from_str(line).map_err(|e| parse_err(i + 1, e))?;
        if case.index != cases.len() {
            return Err(DatasetError::IndexGap {
                path: path.to_path_buf(),
                line: i + 1,
                expected: cases.len(),
                found: case.index,
            });
        }
        cases.push(case);
    }
    if cases.len() != header.n_cases {
        return Err(DatasetError::Invariant {
            id: header.problem_id,
            message: format!("header declares {} cases, file has {}", header.n_cases, cases.len()),
        });
    }
    Ok(TestSuite {
        problem_id: header.problem_id,
        cases,
        created_with_seed: header.created_with_seed,
    })
}

/// Canonical file name for a problem's suite inside a suites directory.
pub fn suite_file_name(problem_id: &str) -> String {
    format!("{problem_id}.{SUITE_EXTENSION}")
}

/// Loads every `*.suite.jsonl` in `dir`, keyed by problem id.
pub fn load_suite_dir(dir: &Path) -> Result<HashMap<String, TestSuite>, DatasetError> {
    let mut out = HashMap::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(SUITE_EXTENSION))
        })
        .collect();
    entries.sort();
    for path in entries {
        let suite = load_suite(&path)?;
        if out.contains_key(&suite.problem_id) {
            return Err(DatasetError::Duplicate {
                kind: "suite",
                id: suite.problem_id,
            });
        }
        out.insert(suite.problem_id.clone(), suite);
    }
    Ok(out)
}

/// Which generation paradigms a problem can feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eligibility {
    pub direct: bool,
    pub interpreter: bool,
    pub saga_multidim: bool,
    pub saga_differential: bool,
}

impl Eligibility {
    pub fn all(&self) -> bool {
        self.direct && self.interpreter && self.saga_multidim && self.saga_differential
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemValidation {
    pub problem_id: String,
    pub has_ground_truth: bool,
    pub n_correct: usize,
    pub n_wrong: usize,
    pub n_pairs: usize,
    pub eligibility: Eligibility,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub problems: Vec<ProblemValidation>,
}

impl ValidationReport {
    pub fn get(&self, problem_id: &str) -> Option<&ProblemValidation> {
        self.problems.iter().find(|p| p.problem_id == problem_id)
    }
}

pub const FLAG_VACC_VACUOUS: &str = "metrics undefined: VAcc vacuous";
pub const FLAG_NO_GROUND_TRUTH: &str = "unusable for labeling: ground truth missing";
pub const FLAG_NO_CORRECT: &str = "saga-multidim unavailable: no correct human solutions";
pub const FLAG_NO_PAIRS: &str = "saga-differential unavailable: no submission pairs";

pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let problems = corpus
        .problems()
        .iter()
        .map(|p| {
            let has_ground_truth = corpus.ground_truth(&p.id).is_some();
            let n_correct = corpus.solutions_for(&p.id, SolutionKind::CorrectHuman).len();
            let n_wrong = corpus.solutions_for(&p.id, SolutionKind::WrongHuman).len();
            let n_pairs = corpus.pairs_for(&p.id).len();
            let mut flags = Vec::new();
            if !has_ground_truth {
                flags.push(FLAG_NO_GROUND_TRUTH.to_string());
            }
            if n_wrong == 0 {
                flags.push(FLAG_VACC_VACUOUS.to_string());
            }
            if n_correct == 0 {
                flags.push(FLAG_NO_CORRECT.to_string());
            }
            if n_pairs == 0 {
                flags.push(FLAG_NO_PAIRS.to_string());
            }
            ProblemValidation {
                problem_id: p.id.clone(),
                has_ground_truth,
                n_correct,
                n_wrong,
                n_pairs,
                eligibility: Eligibility {
                    direct: has_ground_truth,
                    interpreter: has_ground_truth,
                    saga_multidim: has_ground_truth && n_correct > 0,
                    saga_differential: has_ground_truth && n_pairs > 0,
                },
                flags,
            }
        })
        .collect();
    ValidationReport { problems }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(id: &str, gt: Option<&str>) -> Problem {
        Problem {
            id: id.into(),
            platform: Platform::Local,
            statement: "s".into(),
            constraints_text: "c".into(),
            difficulty: Difficulty::Easy,
            ground_truth: gt.map(Into::into),
            time_limit_ms: 1000,
            memory_limit_mb: 64,
            checker: Checker::Token,
            sampler: None,
        }
    }

    fn solution(id: &str, pid: &str, kind: SolutionKind) -> Solution {
        Solution {
            id: id.into(),
            problem_id: pid.into(),
            kind,
            language: Language::Python,
            source: "print(1)".into(),
            recorded_verdict: (kind == SolutionKind::WrongHuman).then_some(RecordedVerdict::WA),
        }
    }

    #[test]
    fn empty_directory_is_an_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = load_corpus(dir.path()).unwrap();
        assert!(corpus.problems().is_empty());
        assert!(corpus.solutions().is_empty());
    }

    #[test]
    fn dangling_problem_id_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = problem("p1", None);
        let s = solution("s1", "nope", SolutionKind::CorrectHuman);
        write_jsonl(&dir.path().join(PROBLEMS_FILE), &[p]).unwrap();
        write_jsonl(&dir.path().join(SOLUTIONS_FILE), &[s]).unwrap();
        match load_corpus(dir.path()) {
            Err(DatasetError::Dangling { ids }) => assert_eq!(ids, vec!["nope".to_string()]),
            other => panic!("expected dangling error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let good = serde_json::to_string(&problem("p1", None)).unwrap();
        fs::write(dir.path().join(PROBLEMS_FILE), format!("{good}\n{{not json\n")).unwrap();
        match load_corpus(dir.path()) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Corpus::from_parts(
            PathBuf::new(),
            vec![problem("p1", None), problem("p1", None)],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::Duplicate { kind: "problem", .. }));
    }

    #[test]
    fn wrong_solution_requires_recorded_verdict() {
        let mut s = solution("w", "p1", SolutionKind::WrongHuman);
        s.recorded_verdict = None;
        let err = Corpus::from_parts(PathBuf::new(), vec![problem("p1", None)], vec![s], vec![]).unwrap_err();
        assert!(matches!(err, DatasetError::Invariant { .. }));
    }

    #[test]
    fn validation_flags() {
        let mut solutions = vec![solution("gt", "full", SolutionKind::GroundTruth)];
        for i in 0..10 {
            solutions.push(solution(&format!("c{i}"), "full", SolutionKind::CorrectHuman));
        }
        let mut pairs = Vec::new();
        for i in 0..5 {
            solutions.push(solution(&format!("w{i}"), "full", SolutionKind::WrongHuman));
            pairs.push(("full".to_string(), format!("w{i}"), format!("c{i}"), true));
        }
        let corpus = Corpus::from_parts(
            PathBuf::new(),
            vec![problem("full", Some("gt")), problem("bare", None)],
            solutions,
            pairs,
        )
        .unwrap();
        let report = validate_corpus(&corpus);
        let full = report.get("full").unwrap();
        assert!(full.eligibility.all());
        assert!(full.flags.is_empty());
        assert_eq!((full.n_correct, full.n_wrong, full.n_pairs), (10, 5, 5));
        let bare = report.get("bare").unwrap();
        assert!(bare.flags.contains(&FLAG_VACC_VACUOUS.to_string()));
        assert!(bare.flags.contains(&FLAG_NO_GROUND_TRUTH.to_string()));
        assert!(!bare.eligibility.direct);
    }

    #[test]
    fn suite_round_trip_preserves_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut suite = TestSuite::new("p1");
        suite.created_with_seed = Some(9);
        for i in 0..50u8 {
            suite.push(vec![0, i, b'\n', 0xff], vec![i], Provenance::SagaMultidim, Some(format!("r{i}")));
        }
        let path = dir.path().join(suite_file_name("p1"));
        save_suite(&suite, &path).unwrap();
        let first = fs::read(&path).unwrap();
        let loaded = load_suite(&path).unwrap();
        assert_eq!(loaded, suite);
        save_suite(&loaded, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn shuffled_indices_fail_to_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut suite = TestSuite::new("p1");
        suite.push(b"1\n".to_vec(), b"1\n".to_vec(), Provenance::Manual, None);
        suite.push(b"2\n".to_vec(), b"2\n".to_vec(), Provenance::Manual, None);
        suite.cases.swap(0, 1);
        let path = dir.path().join("s.suite.jsonl");
        fs::write(&path, encode_suite(&suite)).unwrap();
        let err = load_suite(&path).unwrap_err();
        assert!(err.to_string().contains("index gap/duplicate"), "{err}");
    }
}
