#![allow(dead_code)]

use std::path::PathBuf;

use vf_core::dataset::{load_corpus, load_suite, suite_file_name, Corpus, SolutionKind, TestSuite};
use vf_core::exec::{Executor, Toolchain};
use vf_core::killmatrix::{build_kill_matrix, KillMatrix};
use vf_core::tcg::llm::{ReplayClient, ReplayStore};
use vf_core::tcg::GenConfig;

pub const FIXTURE_MODEL: &str = "fixture-model";

pub fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

pub fn toy_corpus() -> Corpus {
    load_corpus(&toy_dir().join("corpus")).expect("toy corpus loads")
}

pub fn hand_suite(problem_id: &str) -> TestSuite {
    load_suite(&toy_dir().join("suites").join(suite_file_name(problem_id))).expect("hand suite loads")
}

pub fn executor() -> Executor {
    Executor::temporary(Toolchain::default(), None).expect("executor")
}

pub fn replay_client() -> ReplayClient {
    ReplayClient::new(ReplayStore::new(toy_dir().join("replay")))
}

pub fn fixture_config() -> GenConfig {
    GenConfig {
        model_tag: FIXTURE_MODEL.into(),
        ..GenConfig::default()
    }
}

pub fn kill_matrix(corpus: &Corpus, suite: &TestSuite, exec: &Executor) -> KillMatrix {
    let problem = corpus.problem(&suite.problem_id).expect("problem");
    let wrong = corpus.solutions_for(&problem.id, SolutionKind::WrongHuman);
    build_kill_matrix(problem, suite, &wrong, exec, None).expect("kill matrix").matrix
}

pub fn rows(matrix: &KillMatrix) -> Vec<String> {
    (0..matrix.n_tests())
        .map(|i| (0..matrix.m_solutions()).map(|j| if matrix.get(i, j) { '1' } else { '0' }).collect())
        .collect()
}
