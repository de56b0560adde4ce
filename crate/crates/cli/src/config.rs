//! Run configuration: built-in defaults, overlaid by a TOML file, overlaid
//! by command-line flags. The merged result is written to every output
//! directory as `config.toml`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vf_core::metrics::{Protocol, DEFAULT_K_LIST};
use vf_core::tcg::parse::ParseMode;
use vf_core::tcg::GenConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ParadigmArg {
    Direct,
    Interpreter,
    SagaMultidim,
    SagaDifferential,
    SagaFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerArg {
    /// The problem's built-in sampler spec.
    Builtin,
    /// A model-written sampler script.
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LlmMode {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSection {
    pub paradigm: ParadigmArg,
    /// Problem ids to generate for; empty means every problem.
    pub problems: Vec<String>,
    /// Requested size for direct and interpreter suites.
    pub n_target: usize,
    pub sampler: SamplerArg,
    pub target_size: usize,
    pub solution_cap: usize,
    pub pair_cap: usize,
    pub max_inputs_per_script: usize,
    pub parse_mode: ParseMode,
    pub simple_priors: bool,
    pub manual_threshold: Option<usize>,
    pub manual_dir: Option<PathBuf>,
}

impl Default for GenSection {
    fn default() -> Self {
        let base = GenConfig::default();
        GenSection {
            paradigm: ParadigmArg::SagaFull,
            problems: Vec::new(),
            n_target: base.target_size,
            sampler: SamplerArg::Llm,
            target_size: base.target_size,
            solution_cap: base.solution_cap,
            pair_cap: base.pair_cap,
            max_inputs_per_script: base.max_inputs_per_script,
            parse_mode: base.parse_mode,
            simple_priors: base.simple_priors,
            manual_threshold: None,
            manual_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub suites: Option<PathBuf>,
    pub k_list: Vec<usize>,
    pub k_min: usize,
    pub n: usize,
    pub mc_trials: usize,
    pub include_ce: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        let p = Protocol::default();
        EvalSection {
            suites: None,
            k_list: DEFAULT_K_LIST.to_vec(),
            k_min: p.k_min,
            n: p.n_max,
            mc_trials: p.mc_trials,
            include_ce: p.include_ce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub p: f64,
    pub rho: f64,
    pub nmax: u64,
    pub trials: usize,
    pub svg: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            p: 0.2,
            rho: 0.3,
            nmax: 100,
            trials: 100_000,
            svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExecSection {
    /// Toolchain TOML; the built-in g++/python3 table when absent.
    pub toolchain: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint: String,
    pub model_tag: String,
    pub mode: LlmMode,
    /// Replay store; live mode records into it when set.
    pub replay_dir: Option<PathBuf>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for LlmSection {
    fn default() -> Self {
        let base = GenConfig::default();
        LlmSection {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model_tag: base.model_tag,
            mode: LlmMode::Replay,
            replay_dir: None,
            temperature: base.temperature,
            max_tokens: base.max_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub gen: GenSection,
    pub eval: EvalSection,
    pub simulate: SimulateSection,
    pub exec: ExecSection,
    pub llm: LlmSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::User(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::User(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::User("a seed is required (--seed or `seed` in the config file)".into()))
    }

    pub fn require_corpus(&self) -> Result<&Path, CliError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| CliError::User("no corpus given (--corpus or `corpus` in the config file)".into()))
    }

    pub fn require_out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::User("no output directory given (--out or `out` in the config file)".into()))
    }

    pub fn protocol(&self, seed: u64) -> Protocol {
        Protocol {
            k_list: self.eval.k_list.clone(),
            k_min: self.eval.k_min,
            n_max: self.eval.n,
            seed,
            mc_trials: self.eval.mc_trials,
            include_ce: self.eval.include_ce,
        }
    }

    pub fn gen_config(&self, seed: u64) -> GenConfig {
        let (multidim, differential) = match self.gen.paradigm {
            ParadigmArg::SagaMultidim => (true, false),
            ParadigmArg::SagaDifferential => (false, true),
            _ => (true, true),
        };
        GenConfig {
            model_tag: self.llm.model_tag.clone(),
            temperature: self.llm.temperature,
            max_tokens: self.llm.max_tokens,
            seed,
            target_size: self.gen.target_size,
            solution_cap: self.gen.solution_cap,
            pair_cap: self.gen.pair_cap,
            max_inputs_per_script: self.gen.max_inputs_per_script,
            parse_mode: self.gen.parse_mode,
            multidim,
            differential,
            simple_priors: self.gen.simple_priors,
            manual_threshold: self.gen.manual_threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_a_round_trip() {
        let config = RunConfig {
            seed: Some(3),
            ..RunConfig::default()
        };
        let back: RunConfig = toml::from_str(&config.to_toml()).unwrap();
        assert_eq!(back, config);
        assert!(config.to_toml().contains("k_list = [1, 2, 5, 10, 20, 30, 40, 50]"));
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let config: RunConfig = toml::from_str("seed = 9\n[eval]\nn = 20\n[gen]\nparadigm = \"saga-differential\"\n").unwrap();
        assert_eq!(config.eval.n, 20);
        assert_eq!(config.eval.mc_trials, 2000);
        let gen = config.gen_config(9);
        assert!(!gen.multidim && gen.differential);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 9\n").is_err());
        assert!(toml::from_str::<RunConfig>("[eval]\nkk = 1\n").is_err());
    }
}
