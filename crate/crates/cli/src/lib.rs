//! The `vf` command line. Every subcommand merges built-in defaults, an
//! optional `--config` TOML file and its own flags (flags win), then runs
//! one of the `cmd_*` functions.
//!
//! Exit codes: 0 success, 1 user error (flags, config, inputs), 2
//! infrastructure error (sandbox, model endpoint, disk). Failures also
//! leave `error.json` in the output directory when one is known.

pub mod commands;
pub mod config;
pub mod error;
pub mod rundir;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::*;
pub use config::RunConfig;
pub use error::CliError;

use config::{LlmMode, ParadigmArg, SamplerArg};

#[derive(Debug, Parser)]
#[command(name = "vf", version, about = "Measure, generate and model code-verifier test suites")]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus directory with problems/solutions/pairs JSONL files.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Worker count for the execution pool.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Toolchain TOML mapping languages to compile/run commands.
    #[arg(long)]
    pub toolchain: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a corpus.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Generate test suites.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        paradigm: Option<ParadigmArg>,
        /// Restrict to these problems (repeatable).
        #[arg(long = "problem")]
        problems: Vec<String>,
        /// Requested size for direct and interpreter suites.
        #[arg(long)]
        n_target: Option<usize>,
        /// Final size of SAGA suites.
        #[arg(long)]
        target_size: Option<usize>,
        #[arg(long, value_enum)]
        sampler: Option<SamplerArg>,
        #[arg(long, value_enum)]
        llm_mode: Option<LlmMode>,
        #[arg(long)]
        replay_dir: Option<PathBuf>,
        #[arg(long)]
        model_tag: Option<String>,
        #[arg(long)]
        endpoint: Option<String>,
        /// Directory of hand-written `<problem>/*.in` inputs for top-up.
        #[arg(long)]
        manual_dir: Option<PathBuf>,
        #[arg(long)]
        manual_threshold: Option<usize>,
    },
    /// Build kill matrices and compute suite metrics.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Directory of `<problem>.suite.jsonl` files.
        #[arg(long)]
        suites: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<usize>>,
        /// Upper end of the AUC window.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        mc_trials: Option<usize>,
        /// Keep compile-error solutions in the denominators.
        #[arg(long)]
        include_ce: bool,
    },
    /// Simulate DR under correlated detections.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        nmax: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Also render curve.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Fit the saturation model to an `n,dr` CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        curve: PathBuf,
    },
    /// Pairwise AUC grid of mixed test sources.
    Mix {
        #[command(flatten)]
        common: Common,
        /// `name=dir`, where dir holds an eval run (repeatable).
        #[arg(long = "source", required = true)]
        sources: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<usize>>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Markdown summary of a run directory.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        run: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Gen { .. } => "gen",
            Command::Eval { .. } => "eval",
            Command::Simulate { .. } => "simulate",
            Command::Fit { .. } => "fit",
            Command::Mix { .. } => "mix",
            Command::Report { .. } => "report",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Ingest { common }
            | Command::Gen { common, .. }
            | Command::Eval { common, .. }
            | Command::Simulate { common, .. }
            | Command::Fit { common, .. }
            | Command::Mix { common, .. }
            | Command::Report { common, .. } => common,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Defaults, then the config file, then flags.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let common = cli.command.common();
    if common.out.is_some() {
        c.out = common.out.clone();
    }
    if common.seed.is_some() {
        c.seed = common.seed;
    }
    if common.corpus.is_some() {
        c.corpus = common.corpus.clone();
    }
    if common.parallelism.is_some() {
        c.exec.parallelism = common.parallelism;
    }
    if common.toolchain.is_some() {
        c.exec.toolchain = common.toolchain.clone();
    }
    match &cli.command {
        Command::Gen {
            paradigm,
            problems,
            n_target,
            target_size,
            sampler,
            llm_mode,
            replay_dir,
            model_tag,
            endpoint,
            manual_dir,
            manual_threshold,
            ..
        } => {
            set(&mut c.gen.paradigm, *paradigm);
            if !problems.is_empty() {
                c.gen.problems = problems.clone();
            }
            set(&mut c.gen.n_target, *n_target);
            set(&mut c.gen.target_size, *target_size);
            set(&mut c.gen.sampler, *sampler);
            set(&mut c.llm.mode, *llm_mode);
            if replay_dir.is_some() {
                c.llm.replay_dir = replay_dir.clone();
            }
            set(&mut c.llm.model_tag, model_tag.clone());
            set(&mut c.llm.endpoint, endpoint.clone());
            if manual_dir.is_some() {
                c.gen.manual_dir = manual_dir.clone();
            }
            if manual_threshold.is_some() {
                c.gen.manual_threshold = *manual_threshold;
            }
        }
        Command::Eval {
            suites,
            k_list,
            n,
            k_min,
            mc_trials,
            include_ce,
            ..
        } => {
            if suites.is_some() {
                c.eval.suites = suites.clone();
            }
            set(&mut c.eval.k_list, k_list.clone());
            set(&mut c.eval.n, *n);
            set(&mut c.eval.k_min, *k_min);
            set(&mut c.eval.mc_trials, *mc_trials);
            c.eval.include_ce |= *include_ce;
        }
        Command::Simulate { p, rho, nmax, trials, svg, .. } => {
            set(&mut c.simulate.p, *p);
            set(&mut c.simulate.rho, *rho);
            set(&mut c.simulate.nmax, *nmax);
            set(&mut c.simulate.trials, *trials);
            c.simulate.svg |= *svg;
        }
        Command::Mix { k_list, n, .. } => {
            set(&mut c.eval.k_list, k_list.clone());
            set(&mut c.eval.n, *n);
        }
        Command::Report { run, .. } => {
            if c.out.is_none() {
                c.out = Some(run.join("report"));
            }
        }
        Command::Ingest { .. } | Command::Fit { .. } => {}
    }
    Ok(c)
}

fn dispatch(cli: &Cli, config: &RunConfig) -> Result<String, CliError> {
    Ok(match &cli.command {
        Command::Ingest { .. } => {
            let out = cmd_ingest(config)?;
            let flagged = out.validation.problems.iter().filter(|p| !p.flags.is_empty()).count();
            format!("{} problems validated, {flagged} flagged", out.validation.problems.len())
        }
        Command::Gen { .. } => {
            let out = cmd_gen(config)?;
            out.summary
                .iter()
                .map(|r| format!("{}: {} cases", r.problem_id, r.cases))
                .collect::<Vec<_>>()
                .join("\n")
        }
        Command::Eval { .. } => {
            let out = cmd_eval(config)?;
            let mut text = vf_core::metrics::reports_to_markdown(&out.reports);
            for id in &out.skipped {
                text.push_str(&format!("no suite for `{id}`, skipped\n"));
            }
            text
        }
        Command::Simulate { .. } => {
            let out = cmd_simulate(config)?;
            let last = out.curve.points.last().map_or(0.0, |p| p.1);
            format!("DR at n = {}: {last}", config.simulate.nmax)
        }
        Command::Fit { curve, .. } => {
            let fit = cmd_fit(config, curve)?;
            format!("p = {}, rho = {}, rmse = {}", fit.fit.p_hat, fit.fit.rho_hat, fit.fit.rmse)
        }
        Command::Mix { sources, .. } => cmd_mix(config, &parse_sources(sources)?)?.to_csv().trim_end().to_string(),
        Command::Report { run, .. } => {
            cmd_report(config, run)?;
            format!("wrote {}", config.require_out()?.join(REPORT_FILE).display())
        }
    })
}

fn write_error(out: Option<&Path>, command: &str, err: &CliError) {
    let record = err.record(command);
    let json = serde_json::to_string_pretty(&record).expect("error record serializes");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join(rundir::ERROR_FILE), format!("{json}\n"));
        }
    }
    eprintln!("error: {err}");
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    let err = CliError::User(e.kind().to_string());
                    eprintln!("{}", serde_json::to_string(&err.record("vf")).expect("serializes"));
                    1
                }
            };
        }
    };
    let command = cli.command.name();
    let config = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            write_error(cli.command.common().out.as_deref(), command, &e);
            return e.exit_code();
        }
    };
    match dispatch(&cli, &config) {
        Ok(text) => {
            if !text.is_empty() {
                println!("{}", text.trim_end());
            }
            0
        }
        Err(e) => {
            write_error(config.out.as_deref(), command, &e);
            e.exit_code()
        }
    }
}
