//! Regenerates the toy fixture corpus from `fixtures/toy/manifest.toml`.
//!
//! Writes `corpus/` (problems, solutions, pairs), `suites/` (hand-picked
//! inputs labeled by the ground truth) and `replay/` (model responses keyed
//! by the exact prompts the generation flows will send).
//!
//! Usage: `cargo run -p vf-core --example author_fixtures [fixture-dir]`

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use vf_core::dataset::{
    save_corpus, save_suite, suite_file_name, Checker, Corpus, Difficulty, Language, Platform, Problem,
    Provenance, RecordedVerdict, Solution, SolutionKind,
};
use vf_core::exec::{Executor, Toolchain};
use vf_core::tcg::llm::{LlmResponse, ReplayRecord, ReplayStore, Usage};
use vf_core::tcg::{label_outputs, prompt, Candidate, GenConfig};

/// Suite sizes baked into the direct and interpreter prompts.
pub const DIRECT_N_TARGET: usize = 5;
pub const INTERPRETER_N_TARGET: usize = 10;

#[derive(Deserialize)]
struct Manifest {
    model_tag: String,
    problems: Vec<ProblemEntry>,
}

#[derive(Deserialize)]
struct WrongEntry {
    file: String,
    verdict: RecordedVerdict,
}

#[derive(Deserialize)]
struct ProblemEntry {
    id: String,
    difficulty: Difficulty,
    statement: String,
    constraints_text: String,
    time_limit_ms: u64,
    memory_limit_mb: u64,
    sampler: Option<String>,
    ground_truth: String,
    correct: Vec<String>,
    wrong: Vec<WrongEntry>,
    pairs: Vec<(String, String)>,
}

fn stem(file: &str) -> &str {
    file.rsplit_once('.').map_or(file, |(s, _)| s)
}

fn solution(dir: &Path, pid: &str, file: &str, kind: SolutionKind, verdict: Option<RecordedVerdict>) -> Result<Solution> {
    let path = dir.join("src").join(pid).join(file);
    Ok(Solution {
        id: format!("{pid}/{}", stem(file)),
        problem_id: pid.to_string(),
        kind,
        language: Language::from_path(&path),
        source: fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
        recorded_verdict: verdict,
    })
}

fn build_corpus(dir: &Path, manifest: &Manifest) -> Result<Corpus> {
    let mut problems = Vec::new();
    let mut solutions = Vec::new();
    let mut pairs = Vec::new();
    for p in &manifest.problems {
        let gt = solution(dir, &p.id, &p.ground_truth, SolutionKind::GroundTruth, None)?;
        problems.push(Problem {
            id: p.id.clone(),
            platform: Platform::Local,
            statement: p.statement.clone(),
            constraints_text: p.constraints_text.clone(),
            difficulty: p.difficulty,
            ground_truth: Some(gt.id.clone()),
            time_limit_ms: p.time_limit_ms,
            memory_limit_mb: p.memory_limit_mb,
            checker: Checker::Token,
            sampler: p.sampler.clone(),
        });
        solutions.push(gt);
        for f in &p.correct {
            solutions.push(solution(dir, &p.id, f, SolutionKind::CorrectHuman, None)?);
        }
        for w in &p.wrong {
            solutions.push(solution(dir, &p.id, &w.file, SolutionKind::WrongHuman, Some(w.verdict))?);
        }
        for (wrong, corrected) in &p.pairs {
            pairs.push((
                p.id.clone(),
                format!("{}/{}", p.id, stem(wrong)),
                format!("{}/{}", p.id, stem(corrected)),
                true,
            ));
        }
    }
    Ok(Corpus::from_parts(dir.join("corpus"), problems, solutions, pairs)?)
}

fn write_hand_suites(dir: &Path, corpus: &Corpus, exec: &Executor) -> Result<()> {
    let out = dir.join("suites");
    fs::create_dir_all(&out)?;
    for problem in corpus.problems() {
        let hand = dir.join("src").join(&problem.id).join("hand");
        let mut files: Vec<PathBuf> = fs::read_dir(&hand)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        files.sort();
        let candidates = files
            .iter()
            .map(|f| {
                Ok(Candidate {
                    input: fs::read(f)?,
                    provenance: Provenance::Manual,
                    record_id: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let truth = corpus.ground_truth(&problem.id).context("ground truth")?;
        let labeled = label_outputs(exec, problem, truth, &candidates)?;
        if labeled.suite.len() != candidates.len() {
            bail!("ground truth failed on a hand input for {}", problem.id);
        }
        save_suite(&labeled.suite, &out.join(suite_file_name(&problem.id)))?;
    }
    Ok(())
}

fn record(store: &ReplayStore, config: &GenConfig, prompt: String, response_file: &Path) -> Result<()> {
    let text = fs::read_to_string(response_file).with_context(|| format!("reading {}", response_file.display()))?;
    store.put(&ReplayRecord {
        request: config.request(prompt),
        response: LlmResponse {
            text,
            finish_reason: "stop".into(),
            usage: Usage::default(),
        },
    })?;
    Ok(())
}

fn write_replay(dir: &Path, corpus: &Corpus, model_tag: &str) -> Result<usize> {
    let replay = dir.join("replay");
    if replay.exists() {
        fs::remove_dir_all(&replay)?;
    }
    fs::create_dir_all(&replay)?;
    let store = ReplayStore::new(&replay);
    let config = GenConfig {
        model_tag: model_tag.to_string(),
        ..GenConfig::default()
    };
    let mut written = 0;
    for problem in corpus.problems() {
        let responses = dir.join("src").join(&problem.id).join("responses");
        let correct = corpus.solutions_for(&problem.id, SolutionKind::CorrectHuman);
        let prompts = [
            ("multidim.md".to_string(), prompt::build_multidim_prompt(problem, &correct, config.solution_cap).text),
            ("direct.md".to_string(), prompt::build_direct_prompt(problem, DIRECT_N_TARGET)),
            ("interpreter.md".to_string(), prompt::build_interpreter_prompt(problem, INTERPRETER_N_TARGET)),
        ]
        .into_iter()
        .chain(corpus.pairs_for(&problem.id).into_iter().map(|pair| {
            let wrong_stem = pair.wrong.id.rsplit('/').next().unwrap_or_default().to_string();
            (
                format!("differential-{wrong_stem}.md"),
                prompt::build_differential_prompt(problem, pair),
            )
        }));
        for (file, text) in prompts {
            let path = responses.join(&file);
            if path.exists() {
                record(&store, &config, text, &path)?;
                written += 1;
            }
        }
    }
    Ok(written)
}

fn main() -> Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy"));
    let manifest: Manifest = toml::from_str(&fs::read_to_string(dir.join("manifest.toml"))?)?;
    let corpus = build_corpus(&dir, &manifest)?;
    fs::create_dir_all(dir.join("corpus"))?;
    save_corpus(&corpus, &dir.join("corpus"))?;
    let exec = Executor::temporary(Toolchain::default(), None)?;
    write_hand_suites(&dir, &corpus, &exec)?;
    let n = write_replay(&dir, &corpus, &manifest.model_tag)?;
    println!(
        "wrote {} problems, {} solutions, {} pairs, {n} replay records to {}",
        corpus.problems().len(),
        corpus.solutions().len(),
        corpus.pairs().len(),
        dir.display()
    );
    Ok(())
}
