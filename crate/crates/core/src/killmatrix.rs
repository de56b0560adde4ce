//! The per-problem detection matrix: rows are tests, columns are incorrect
//! solutions, and entry (i, j) is set when test i exposes solution j
//! (any non-AC verdict).
//!
//! Rows are stored as packed `u64` words so row unions and pattern
//! comparisons are word operations.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{write_atomic, DatasetError, Problem, Solution, TestSuite};
use crate::exec::{CompileOutcome, ExecError, Executor, Limits, ProgramSource, Verdict};
use crate::hashing::content_hash;

const MAGIC: &[u8] = b"VFKM1\n";

#[derive(Debug, Error)]
pub enum KillMatrixError {
    #[error("test index {index} out of range (n_tests = {n_tests})")]
    IndexOutOfRange { index: usize, n_tests: usize },
    #[error("cannot union matrices: {0}")]
    Incompatible(String),
    #[error("malformed matrix file {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Io(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KillMatrix {
    pub problem_id: String,
    pub solution_ids: Vec<String>,
    pub test_indices: Vec<usize>,
    /// Columns whose solution failed to compile (stored all-true).
    pub ce_flags: Vec<bool>,
    words_per_row: usize,
    bits: Vec<u64>,
}

/// A single matrix row: which solutions one test exposes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ErrorPatternVector {
    pub bits: Vec<bool>,
}

impl ErrorPatternVector {
    pub fn l1(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct FileHeader {
    problem_id: String,
    n_tests: usize,
    m_solutions: usize,
    solution_ids: Vec<String>,
    test_indices: Vec<usize>,
    ce_flags: Vec<bool>,
}

impl KillMatrix {
    /// An all-false matrix with `n_tests` rows.
    pub fn zeros(problem_id: impl Into<String>, solution_ids: Vec<String>, n_tests: usize) -> KillMatrix {
        let m = solution_ids.len();
        let words_per_row = m.div_ceil(64);
        KillMatrix {
            problem_id: problem_id.into(),
            ce_flags: vec![false; m],
            solution_ids,
            test_indices: (0..n_tests).collect(),
            words_per_row,
            bits: vec![0; words_per_row * n_tests],
        }
    }

    /// Builds from boolean rows; every row must have one entry per solution.
    pub fn from_rows(problem_id: impl Into<String>, solution_ids: Vec<String>, rows: &[Vec<bool>]) -> KillMatrix {
        let mut km = KillMatrix::zeros(problem_id, solution_ids, rows.len());
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), km.m_solutions(), "row {i} has wrong width");
            for (j, &b) in row.iter().enumerate() {
                km.set(i, j, b);
            }
        }
        km
    }

    /// Compact constructor for fixtures: each string is a row of `0`/`1`.
    /// Solutions are named `s0, s1, ...`.
    pub fn from_bit_strings(problem_id: &str, rows: &[&str]) -> KillMatrix {
        let m = rows.first().map_or(0, |r| r.len());
        let ids = (0..m).map(|j| format!("s{j}")).collect();
        let rows: Vec<Vec<bool>> = rows.iter().map(|r| r.bytes().map(|c| c == b'1').collect()).collect();
        KillMatrix::from_rows(problem_id, ids, &rows)
    }

    pub fn n_tests(&self) -> usize {
        self.test_indices.len()
    }

    pub fn m_solutions(&self) -> usize {
        self.solution_ids.len()
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn get(&self, test: usize, solution: usize) -> bool {
        self.bits[test * self.words_per_row + solution / 64] >> (solution % 64) & 1 == 1
    }

    pub fn set(&mut self, test: usize, solution: usize, value: bool) {
        let w = &mut self.bits[test * self.words_per_row + solution / 64];
        let mask = 1u64 << (solution % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Packed words of one row; bits past `m_solutions` are always zero.
    pub fn row_words(&self, test: usize) -> &[u64] {
        &self.bits[test * self.words_per_row..(test + 1) * self.words_per_row]
    }

    /// Number of tests that detect `solution`.
    pub fn detect_count(&self, solution: usize) -> usize {
        (0..self.n_tests()).filter(|&i| self.get(i, solution)).count()
    }

    pub fn error_pattern(&self, test_index: usize) -> Result<ErrorPatternVector, KillMatrixError> {
        if test_index >= self.n_tests() {
            return Err(KillMatrixError::IndexOutOfRange {
                index: test_index,
                n_tests: self.n_tests(),
            });
        }
        Ok(ErrorPatternVector {
            bits: (0..self.m_solutions()).map(|j| self.get(test_index, j)).collect(),
        })
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> KillMatrix {
        let mut out = KillMatrix::zeros(self.problem_id.clone(), self.solution_ids.clone(), rows.len());
        out.ce_flags = self.ce_flags.clone();
        for (dst, &src) in rows.iter().enumerate() {
            out.test_indices[dst] = self.test_indices[src];
            let w = self.words_per_row;
            out.bits[dst * w..(dst + 1) * w].copy_from_slice(self.row_words(src));
        }
        out
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> KillMatrix {
        let ids = cols.iter().map(|&j| self.solution_ids[j].clone()).collect();
        let mut out = KillMatrix::zeros(self.problem_id.clone(), ids, self.n_tests());
        out.test_indices = self.test_indices.clone();
        for (dst, &src) in cols.iter().enumerate() {
            out.ce_flags[dst] = self.ce_flags[src];
            for i in 0..self.n_tests() {
                out.set(i, dst, self.get(i, src));
            }
        }
        out
    }

    /// Drops compile-error columns; metrics exclude them by default.
    pub fn without_ce(&self) -> KillMatrix {
        let keep: Vec<usize> = (0..self.m_solutions()).filter(|&j| !self.ce_flags[j]).collect();
        self.select_columns(&keep)
    }

    /// Row concatenation: `a`'s tests then `b`'s tests.
    pub fn union(&self, other: &KillMatrix) -> Result<KillMatrix, KillMatrixError> {
        union_matrices(self, other)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("test_index");
        for id in &self.solution_ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for i in 0..self.n_tests() {
            let _ = write!(out, "{}", self.test_indices[i]);
            for j in 0..self.m_solutions() {
                out.push(',');
                out.push(if self.get(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Magic line, JSON header line, then row-major bits packed LSB-first.
    pub fn encode(&self) -> Vec<u8> {
        let header = FileHeader {
            problem_id: self.problem_id.clone(),
            n_tests: self.n_tests(),
            m_solutions: self.m_solutions(),
            solution_ids: self.solution_ids.clone(),
            test_indices: self.test_indices.clone(),
            ce_flags: self.ce_flags.clone(),
        };
        let mut out = MAGIC.to_vec();
        serde_json::to_writer(&mut out, &header).expect("header serializes");
        out.push(b'\n');
        let (n, m) = (self.n_tests(), self.m_solutions());
        let mut packed = vec![0u8; (n * m).div_ceil(8)];
        for i in 0..n {
            for j in 0..m {
                if self.get(i, j) {
                    let k = i * m + j;
                    packed[k / 8] |= 1 << (k % 8);
                }
            }
        }
        out.extend_from_slice(&packed);
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<KillMatrix, KillMatrixError> {
        let bad = |message: &str| KillMatrixError::Format {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| bad("bad magic"))?;
        let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
        let header: FileHeader = serde_json::from_slice(&rest[..nl]).map_err(|e| bad(&e.to_string()))?;
        let payload = &rest[nl + 1..];
        let (n, m) = (header.n_tests, header.m_solutions);
        if header.solution_ids.len() != m || header.test_indices.len() != n || header.ce_flags.len() != m {
            return Err(bad("header dimensions disagree"));
        }
        if payload.len() != (n * m).div_ceil(8) {
            return Err(bad("payload length does not match dimensions"));
        }
        let mut km = KillMatrix::zeros(header.problem_id, header.solution_ids, n);
        km.test_indices = header.test_indices;
        km.ce_flags = header.ce_flags;
        for i in 0..n {
            for j in 0..m {
                let k = i * m + j;
                km.set(i, j, payload[k / 8] >> (k % 8) & 1 == 1);
            }
        }
        Ok(km)
    }

    pub fn save(&self, path: &Path) -> Result<(), KillMatrixError> {
        write_atomic(path, &self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<KillMatrix, KillMatrixError> {
        let bytes = fs::read(path).map_err(|e| DatasetError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        KillMatrix::decode(&bytes, path)
    }
}

pub fn union_matrices(a: &KillMatrix, b: &KillMatrix) -> Result<KillMatrix, KillMatrixError> {
    if a.problem_id != b.problem_id {
        return Err(KillMatrixError::Incompatible(format!(
            "problem `{}` vs `{}`",
            a.problem_id, b.problem_id
        )));
    }
    if a.solution_ids != b.solution_ids {
        return Err(KillMatrixError::Incompatible("solution orderings differ".into()));
    }
    let mut out = KillMatrix::zeros(a.problem_id.clone(), a.solution_ids.clone(), a.n_tests() + b.n_tests());
    out.ce_flags = a.ce_flags.iter().zip(&b.ce_flags).map(|(x, y)| *x || *y).collect();
    out.test_indices = a.test_indices.iter().chain(&b.test_indices).copied().collect();
    out.bits = a.bits.iter().chain(&b.bits).copied().collect();
    Ok(out)
}

/// Persistent per-column verdict cache keyed by (suite hash, solution hash).
#[derive(Debug, Clone)]
pub struct ColumnCache {
    dir: PathBuf,
}

impl ColumnCache {
    pub fn new(dir: impl Into<PathBuf>) -> ColumnCache {
        ColumnCache { dir: dir.into() }
    }

    fn key(suite: &TestSuite, solution: &Solution, problem: &Problem) -> String {
        let limits = Limits::for_problem(problem);
        let checker = serde_json::to_string(&problem.checker).expect("checker serializes");
        content_hash([
            suite.content_hash(),
            solution.content_hash(),
            checker,
            format!("{}/{}/{}", limits.time_limit_ms, limits.wall_limit_ms, limits.memory_limit_mb),
        ])
    }

    pub fn get(&self, suite: &TestSuite, solution: &Solution, problem: &Problem) -> Option<Vec<Verdict>> {
        let path = self.dir.join(Self::key(suite, solution, problem));
        let bytes = fs::read(path).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn put(&self, suite: &TestSuite, solution: &Solution, problem: &Problem, verdicts: &[Verdict]) -> Result<(), KillMatrixError> {
        let path = self.dir.join(Self::key(suite, solution, problem));
        write_atomic(&path, &serde_json::to_vec(verdicts).expect("verdicts serialize"))?;
        Ok(())
    }
}

/// A built matrix plus the verdicts it came from.
#[derive(Debug, Clone)]
pub struct KillMatrixBuild {
    pub matrix: KillMatrix,
    /// verdicts[j][i]: solution j on test i.
    pub verdicts: Vec<Vec<Verdict>>,
}

impl KillMatrixBuild {
    /// First non-AC verdict per solution in case order; `None` when the
    /// suite accepts it. Compared against recorded platform verdicts to
    /// surface disagreements.
    pub fn local_verdicts(&self) -> Vec<Option<Verdict>> {
        self.verdicts
            .iter()
            .map(|col| col.iter().copied().find(|v| v.is_detection()))
            .collect()
    }
}

/// Runs every solution on every test. Cells are judged in parallel through
/// the executor's pool; the result is independent of parallelism.
pub fn build_kill_matrix(
    problem: &Problem,
    suite: &TestSuite,
    solutions: &[&Solution],
    exec: &Executor,
    cache: Option<&ColumnCache>,
) -> Result<KillMatrixBuild, KillMatrixError> {
    let n = suite.len();
    let m = solutions.len();
    let mut columns: Vec<Option<Vec<Verdict>>> = solutions
        .iter()
        .map(|s| cache.and_then(|c| c.get(suite, s, problem)).filter(|v| v.len() == n))
        .collect();

    let pending: Vec<usize> = (0..m).filter(|&j| columns[j].is_none()).collect();
    let compiled = exec.pool().map(&pending, |&j| exec.compile(&ProgramSource::from(solutions[j])));
    let mut programs = HashMap::new();
    for (&j, outcome) in pending.iter().zip(compiled) {
        match outcome? {
            CompileOutcome::Compiled(p) => {
                programs.insert(j, p);
            }
            CompileOutcome::CompileError { .. } => columns[j] = Some(vec![Verdict::CE; n]),
        }
    }

    let mut cells: Vec<(usize, usize)> = Vec::new();
    for &j in &pending {
        if programs.contains_key(&j) {
            cells.extend((0..n).map(|i| (j, i)));
        }
    }
    let limits = Limits::for_problem(problem);
    let judged = exec.pool().map(&cells, |&(j, i)| {
        let case = &suite.cases[i];
        exec.judge(&programs[&j], &case.input, &case.output, problem, &limits)
    });
    let mut fresh: HashMap<usize, Vec<Verdict>> = HashMap::new();
    for (&(j, _), verdict) in cells.iter().zip(judged) {
        fresh.entry(j).or_insert_with(|| Vec::with_capacity(n)).push(verdict?);
    }
    for (j, col) in fresh {
        if let Some(c) = cache {
            c.put(suite, solutions[j], problem, &col)?;
        }
        columns[j] = Some(col);
    }
    // a column left empty here compiled but had no cells (empty suite)
    let verdicts: Vec<Vec<Verdict>> = columns.into_iter().map(Option::unwrap_or_default).collect();
    let ids = solutions.iter().map(|s| s.id.clone()).collect();
    let mut matrix = KillMatrix::zeros(problem.id.clone(), ids, n);
    matrix.test_indices = suite.cases.iter().map(|c| c.index).collect();
    for (j, col) in verdicts.iter().enumerate() {
        matrix.ce_flags[j] = col.first() == Some(&Verdict::CE);
        for (i, v) in col.iter().enumerate() {
            matrix.set(i, j, v.is_detection());
        }
    }
    Ok(KillMatrixBuild { matrix, verdicts })
}
