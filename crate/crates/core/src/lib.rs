//! Quality metrics for code-verifier test suites, a correlated-detection
//! saturation model, and test-suite generation over a sandboxed judge.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: corpus and suite file formats (JSONL, base64 payloads).
//! - [`exec`]: compile/run programs under CPU, wall and memory limits; output checkers.
//! - [`killmatrix`]: the tests x wrong-solutions detection matrix.
//! - [`metrics`]: DR, DR@k, VAcc, VAcc@k, DEPC, diversity ratio, AUC@N, mixing, pass@k.
//! - [`saturation`]: effective sample size, DR bounds, exchangeable simulation, fitting.
//! - [`tcg`]: direct, input-interpreter and SAGA generation flows, LLM record/replay.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iteration otherwise.

pub mod dataset;
pub mod exec;
pub mod hashing;
pub mod killmatrix;
pub mod metrics;
pub mod par;
pub mod saturation;
pub mod tcg;

pub use dataset::{Corpus, Problem, Solution, SubmissionPair, TestCase, TestSuite};
pub use exec::{Executor, Verdict};
pub use killmatrix::KillMatrix;
pub use metrics::MetricReport;
pub use saturation::SaturationParams;

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
