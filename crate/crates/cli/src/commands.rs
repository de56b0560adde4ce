//! One function per subcommand. Each takes the merged [`RunConfig`],
//! owns its output directory for the duration, and returns what it wrote.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vf_core::dataset::{
    load_corpus, load_suite_dir, save_suite, suite_file_name, validate_corpus, Corpus, SolutionKind, TestSuite,
    ValidationReport,
};
use vf_core::exec::{Executor, Toolchain};
use vf_core::killmatrix::{build_kill_matrix, KillMatrix};
use vf_core::metrics::{aggregate, evaluate, mix_grid, reports_to_csv, reports_to_markdown, MetricReport, MixGrid, MixSource};
use vf_core::saturation::{asymptotic_limit, fit_saturation, read_curve_csv, simulate_exchangeable, SaturationFit, SimCurve};
use vf_core::tcg::llm::{LiveClient, LlmClient, ReplayClient, ReplayStore};
use vf_core::tcg::sampler::SamplerSpec;
use vf_core::tcg::{gen_direct, gen_random_inputs, saga_generate, GenerationRecord, InputGenerator, ManualDir, ManualTopUp};

use crate::config::{LlmMode, ParadigmArg, RunConfig, SamplerArg};
use crate::error::{infra, user, CliError};
use crate::rundir::RunDir;
use crate::svg;

pub const VALIDATION_FILE: &str = "validation.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const REPORTS_FILE: &str = "reports.json";
pub const SUMMARY_FILE: &str = "summary.md";
pub const VERDICTS_CSV: &str = "verdicts.csv";
pub const GEN_SUMMARY_FILE: &str = "generation.json";
pub const CURVE_CSV: &str = "curve.csv";
pub const CURVE_SVG: &str = "curve.svg";
pub const SIMULATION_FILE: &str = "simulation.json";
pub const FIT_FILE: &str = "fit.json";
pub const MIX_CSV: &str = "mix.csv";
pub const REPORT_FILE: &str = "report.md";
pub const MATRICES_DIR: &str = "matrices";
pub const SUITES_DIR: &str = "suites";
pub const RECORDS_DIR: &str = "records";

fn open_corpus(config: &RunConfig) -> Result<Corpus, CliError> {
    let path = config.require_corpus()?;
    if !path.is_dir() {
        return Err(user(format!("corpus directory {} does not exist", path.display())));
    }
    Ok(load_corpus(path)?)
}

fn executor(config: &RunConfig) -> Result<Executor, CliError> {
    let toolchain = match &config.exec.toolchain {
        Some(path) => Toolchain::load(path).map_err(user)?,
        None => Toolchain::default(),
    };
    Ok(Executor::from_env(toolchain, config.exec.parallelism)?)
}

fn llm_client(config: &RunConfig, out: &RunDir) -> Result<Box<dyn LlmClient>, CliError> {
    match config.llm.mode {
        LlmMode::Replay => {
            let dir = config
                .llm
                .replay_dir
                .as_deref()
                .ok_or_else(|| user("replay mode needs `llm.replay_dir` (--replay-dir)"))?;
            if !dir.is_dir() {
                return Err(user(format!("replay store {} does not exist", dir.display())));
            }
            Ok(Box::new(ReplayClient::new(ReplayStore::new(dir))))
        }
        LlmMode::Live => {
            let store_dir = config.llm.replay_dir.clone().unwrap_or_else(|| out.join("replay"));
            let client = LiveClient::from_env(config.llm.endpoint.clone(), Some(ReplayStore::new(store_dir)))
                .map_err(user)?;
            Ok(Box::new(client))
        }
    }
}

// ingest -------------------------------------------------------------------

#[derive(Debug)]
pub struct IngestOutput {
    pub validation: ValidationReport,
}

/// Loads and checks a corpus and writes `validation.json`. The corpus
/// itself is only read.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestOutput, CliError> {
    let corpus = open_corpus(config)?;
    let out = RunDir::open(config.require_out()?, "ingest", config)?;
    let validation = validate_corpus(&corpus);
    out.write_json(VALIDATION_FILE, &validation)?;
    Ok(IngestOutput { validation })
}

// gen ----------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct GenSummaryRow {
    pub problem_id: String,
    pub cases: usize,
    pub records: usize,
    pub retention_rate: f64,
}

#[derive(Debug)]
pub struct GenOutput {
    pub suites: Vec<TestSuite>,
    pub records: Vec<GenerationRecord>,
    pub summary: Vec<GenSummaryRow>,
}

/// Generates one suite per selected problem with the configured paradigm.
/// Writes `suites/<id>.suite.jsonl`, `records/<id>.json` and
/// `generation.json`.
pub fn cmd_gen(config: &RunConfig) -> Result<GenOutput, CliError> {
    let seed = config.require_seed()?;
    let corpus = open_corpus(config)?;
    let problems: Vec<_> = if config.gen.problems.is_empty() {
        corpus.problems().iter().collect()
    } else {
        config
            .gen
            .problems
            .iter()
            .map(|id| corpus.problem(id).ok_or_else(|| user(format!("unknown problem `{id}`"))))
            .collect::<Result<_, _>>()?
    };
    let out = RunDir::open(config.require_out()?, "gen", config)?;
    let exec = executor(config)?;
    let gen_config = config.gen_config(seed);
    let needs_llm = !(config.gen.paradigm == ParadigmArg::Interpreter && config.gen.sampler == SamplerArg::Builtin);
    let client = if needs_llm { Some(llm_client(config, &out)?) } else { None };
    let manual = config.gen.manual_dir.clone().map(ManualDir);

    let suites_dir = out.subdir(SUITES_DIR)?;
    let mut output = GenOutput {
        suites: Vec::new(),
        records: Vec::new(),
        summary: Vec::new(),
    };
    for problem in problems {
        let (suite, records) = match config.gen.paradigm {
            ParadigmArg::Direct => {
                let client = client.as_deref().expect("direct uses the model");
                let (suite, record) = gen_direct(problem, &corpus, client, &exec, config.gen.n_target, &gen_config)?;
                (suite, vec![record])
            }
            ParadigmArg::Interpreter => {
                let spec;
                let generator = match config.gen.sampler {
                    SamplerArg::Builtin => {
                        let text = problem
                            .sampler
                            .as_deref()
                            .ok_or_else(|| user(format!("problem `{}` has no sampler spec", problem.id)))?;
                        spec = SamplerSpec::parse(text).map_err(user)?;
                        InputGenerator::Builtin(&spec)
                    }
                    SamplerArg::Llm => InputGenerator::Llm {
                        client: client.as_deref().expect("llm sampler uses the model"),
                        config: &gen_config,
                    },
                };
                let (suite, record) = gen_random_inputs(problem, &corpus, generator, &exec, config.gen.n_target, seed)?;
                (suite, vec![record])
            }
            ParadigmArg::SagaMultidim | ParadigmArg::SagaDifferential | ParadigmArg::SagaFull => {
                let client = client.as_deref().expect("saga uses the model");
                let hook = manual.as_ref().map(|m| m as &dyn ManualTopUp);
                let outcome = saga_generate(problem, &corpus, client, &exec, &gen_config, hook)?;
                (outcome.suite, outcome.records)
            }
        };
        save_suite(&suite, &suites_dir.join(suite_file_name(&problem.id)))?;
        out.write_json(&format!("{RECORDS_DIR}/{}.json", problem.id), &records)?;
        let produced: usize = records.iter().map(|r| r.produced_inputs).sum();
        output.summary.push(GenSummaryRow {
            problem_id: problem.id.clone(),
            cases: suite.len(),
            records: records.len(),
            retention_rate: if produced == 0 { 0.0 } else { suite.len() as f64 / produced as f64 },
        });
        output.suites.push(suite);
        output.records.extend(records);
    }
    out.write_json(GEN_SUMMARY_FILE, &output.summary)?;
    Ok(output)
}

// eval ---------------------------------------------------------------------

#[derive(Debug)]
pub struct EvalOutput {
    /// Per-problem reports in corpus order, then the aggregate.
    pub reports: Vec<MetricReport>,
    pub matrices: Vec<KillMatrix>,
    pub csv: String,
    /// Problems in the corpus with no suite in the suites directory.
    pub skipped: Vec<String>,
}

/// Builds a kill matrix per problem from the suites directory and writes
/// `matrices/`, `metrics.csv`, `reports.json`, `summary.md` and
/// `verdicts.csv` (recorded vs local verdicts).
pub fn cmd_eval(config: &RunConfig) -> Result<EvalOutput, CliError> {
    let seed = config.require_seed()?;
    let corpus = open_corpus(config)?;
    let suites_path = config
        .eval
        .suites
        .as_deref()
        .ok_or_else(|| user("no suites directory given (--suites or `eval.suites`)"))?;
    if !suites_path.is_dir() {
        return Err(user(format!("suites directory {} does not exist", suites_path.display())));
    }
    let suites = load_suite_dir(suites_path)?;
    let out = RunDir::open(config.require_out()?, "eval", config)?;
    let exec = executor(config)?;
    let protocol = config.protocol(seed);

    let mut reports = Vec::new();
    let mut matrices = Vec::new();
    let mut skipped = Vec::new();
    let mut verdicts = String::from("problem_id,solution_id,recorded,local\n");
    for problem in corpus.problems() {
        let Some(suite) = suites.get(&problem.id) else {
            skipped.push(problem.id.clone());
            continue;
        };
        let wrong = corpus.solutions_for(&problem.id, SolutionKind::WrongHuman);
        let build = build_kill_matrix(problem, suite, &wrong, &exec, None)?;
        for (solution, local) in wrong.iter().zip(build.local_verdicts()) {
            let recorded = solution.recorded_verdict.map_or_else(String::new, |v| format!("{v:?}"));
            let local = local.map_or_else(|| "AC".to_string(), |v| v.to_string());
            let _ = writeln!(verdicts, "{},{},{recorded},{local}", problem.id, solution.id);
        }
        let matrix = build.matrix;
        out.write(&format!("{MATRICES_DIR}/{}.km", problem.id), &matrix.encode())?;
        out.write(&format!("{MATRICES_DIR}/{}.csv", problem.id), matrix.to_csv().as_bytes())?;
        reports.push(evaluate(&matrix, &protocol)?);
        matrices.push(matrix);
    }
    if reports.is_empty() {
        return Err(user(format!("no suites in {} match corpus problems", suites_path.display())));
    }
    reports.push(aggregate(&reports, &protocol));
    let csv = reports_to_csv(&reports);
    out.write(METRICS_CSV, csv.as_bytes())?;
    out.write_json(REPORTS_FILE, &reports)?;
    out.write(SUMMARY_FILE, reports_to_markdown(&reports).as_bytes())?;
    out.write(VERDICTS_CSV, verdicts.as_bytes())?;
    Ok(EvalOutput {
        reports,
        matrices,
        csv,
        skipped,
    })
}

// simulate -----------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub p_bar: f64,
    pub rho: f64,
    pub n_max: u64,
    pub trials: usize,
    pub seed: u64,
    pub generator: vf_core::saturation::Generator,
    /// `None` in the independent regime, where the bound tends to 1.
    pub asymptotic_limit: Option<f64>,
    pub final_dr: f64,
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub curve: SimCurve,
    pub csv: String,
}

/// Simulated DR curve plus the closed-form bound: `curve.csv`
/// (`n,dr,bound`), `simulation.json`, and `curve.svg` when asked.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutput, CliError> {
    let seed = config.seed.unwrap_or(0);
    let s = &config.simulate;
    let curve = simulate_exchangeable(s.nmax, s.p, s.rho, s.trials, seed)?;
    let out = RunDir::open(config.require_out()?, "simulate", config)?;
    let csv = curve.to_csv();
    out.write(CURVE_CSV, csv.as_bytes())?;
    let limit = asymptotic_limit(s.p, s.rho).ok();
    out.write_json(
        SIMULATION_FILE,
        &SimulationSummary {
            p_bar: s.p,
            rho: s.rho,
            n_max: s.nmax,
            trials: s.trials,
            seed,
            generator: curve.generator,
            asymptotic_limit: limit,
            final_dr: curve.points.last().map_or(0.0, |p| p.1),
        },
    )?;
    if s.svg {
        let rows = read_curve_bounds(&csv);
        let chart = svg::line_chart(
            &format!("DR vs suite size (p = {}, rho = {})", s.p, s.rho),
            &[
                svg::Series {
                    name: "simulated",
                    points: rows.iter().map(|r| (r.0, r.1)).collect(),
                },
                svg::Series {
                    name: "bound",
                    points: rows.iter().map(|r| (r.0, r.2)).collect(),
                },
            ],
        );
        out.write(CURVE_SVG, chart.as_bytes())?;
    }
    Ok(SimulateOutput { curve, csv })
}

fn read_curve_bounds(csv: &str) -> Vec<(f64, f64, f64)> {
    csv.lines()
        .skip(1)
        .filter_map(|line| {
            let mut f = line.split(',').map(|x| x.parse::<f64>());
            Some((f.next()?.ok()?, f.next()?.ok()?, f.next()?.ok()?))
        })
        .collect()
}

// fit ----------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub curve: PathBuf,
    pub points: usize,
    #[serde(flatten)]
    pub fit: SaturationFit,
    pub asymptotic_limit: Option<f64>,
}

/// Fits the saturation model to a `n,dr` CSV and writes `fit.json`.
pub fn cmd_fit(config: &RunConfig, curve_path: &Path) -> Result<FitSummary, CliError> {
    let text = fs::read_to_string(curve_path)
        .map_err(|e| user(format!("cannot read curve {}: {e}", curve_path.display())))?;
    let curve = read_curve_csv(&text)?;
    let fit = fit_saturation(&curve)?;
    let out = RunDir::open(config.require_out()?, "fit", config)?;
    let summary = FitSummary {
        curve: curve_path.to_path_buf(),
        points: curve.len(),
        fit,
        asymptotic_limit: asymptotic_limit(fit.p_hat, fit.rho_hat).ok(),
    };
    out.write_json(FIT_FILE, &summary)?;
    Ok(summary)
}

// mix ----------------------------------------------------------------------

/// Reads every `*.km` file in `<dir>/matrices` (the layout `eval` writes).
pub fn load_matrices(dir: &Path) -> Result<BTreeMap<String, KillMatrix>, CliError> {
    let mdir = dir.join(MATRICES_DIR);
    let entries = fs::read_dir(&mdir).map_err(|e| user(format!("cannot read {}: {e}", mdir.display())))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(infra)?.path();
        if path.extension().is_some_and(|x| x == "km") {
            let m = KillMatrix::load(&path)?;
            out.insert(m.problem_id.clone(), m);
        }
    }
    if out.is_empty() {
        return Err(user(format!("no kill matrices in {}", mdir.display())));
    }
    Ok(out)
}

/// Parses `name=dir` source arguments.
pub fn parse_sources(args: &[String]) -> Result<Vec<(String, PathBuf)>, CliError> {
    args.iter()
        .map(|a| {
            a.split_once('=')
                .filter(|(n, d)| !n.is_empty() && !d.is_empty())
                .map(|(n, d)| (n.to_string(), PathBuf::from(d)))
                .ok_or_else(|| user(format!("source `{a}` is not of the form name=dir")))
        })
        .collect()
}

/// Pairwise AUC@N grid over test sources; writes `mix.csv`.
pub fn cmd_mix(config: &RunConfig, sources: &[(String, PathBuf)]) -> Result<MixGrid, CliError> {
    if sources.len() < 2 {
        return Err(user("mix needs at least two sources"));
    }
    let seed = config.seed.unwrap_or(0);
    let loaded = sources
        .iter()
        .map(|(name, dir)| {
            Ok(MixSource {
                name: name.clone(),
                matrices: load_matrices(dir)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let grid = mix_grid(&loaded, &config.protocol(seed))?;
    let out = RunDir::open(config.require_out()?, "mix", config)?;
    out.write(MIX_CSV, grid.to_csv().as_bytes())?;
    Ok(grid)
}

// report -------------------------------------------------------------------

/// Markdown digest of whatever a run directory holds; written to
/// `report.md` in the output directory.
pub fn cmd_report(config: &RunConfig, run: &Path) -> Result<String, CliError> {
    if !run.is_dir() {
        return Err(user(format!("run directory {} does not exist", run.display())));
    }
    let read = |name: &str| fs::read_to_string(run.join(name)).ok();
    let mut md = format!("# Run report: {}\n\n", run.display());
    if let Some(info) = read(crate::rundir::RUN_FILE) {
        let _ = writeln!(md, "## Run\n\n```json\n{}\n```\n", info.trim_end());
    }
    if let Some(text) = read(VALIDATION_FILE) {
        let v: ValidationReport = serde_json::from_str(&text).map_err(user)?;
        md.push_str("## Corpus\n\n| problem | ground truth | correct | wrong | pairs | flags |\n|---|---|---|---|---|---|\n");
        for p in &v.problems {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                p.problem_id,
                if p.has_ground_truth { "yes" } else { "no" },
                p.n_correct,
                p.n_wrong,
                p.n_pairs,
                p.flags.join("; ")
            );
        }
        md.push('\n');
    }
    if let Some(text) = read(GEN_SUMMARY_FILE) {
        let rows: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(user)?;
        md.push_str("## Generation\n\n| problem | cases | records | retention |\n|---|---|---|---|\n");
        for r in rows {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.2}% |",
                r["problem_id"].as_str().unwrap_or(""),
                r["cases"],
                r["records"],
                r["retention_rate"].as_f64().unwrap_or(0.0) * 100.0
            );
        }
        md.push('\n');
    }
    if let Some(text) = read(REPORTS_FILE) {
        let reports: Vec<MetricReport> = serde_json::from_str(&text).map_err(user)?;
        md.push_str("## Metrics\n\n");
        md.push_str(&reports_to_markdown(&reports));
        md.push('\n');
    }
    if let Some(text) = read(SIMULATION_FILE) {
        let _ = writeln!(md, "## Simulation\n\n```json\n{}\n```\n", text.trim_end());
    }
    if let Some(text) = read(FIT_FILE) {
        let _ = writeln!(md, "## Fit\n\n```json\n{}\n```\n", text.trim_end());
    }
    if let Some(text) = read(MIX_CSV) {
        md.push_str("## Mixing (AUC@N)\n\n");
        for (i, line) in text.lines().enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            let _ = writeln!(md, "| {} |", cells.join(" | "));
            if i == 0 {
                let _ = writeln!(md, "|{}", "---|".repeat(cells.len()));
            }
        }
        md.push('\n');
    }
    let out = RunDir::open(config.require_out()?, "report", config)?;
    out.write(REPORT_FILE, md.as_bytes())?;
    Ok(md)
}
