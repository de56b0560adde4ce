//! Prompt construction from the versioned templates in `templates/`.
//!
//! Rendering is plain `{{key}}` substitution, so identical inputs always
//! give byte-identical prompts.

use crate::dataset::{Problem, Solution, SubmissionPair};

pub const MULTIDIM_TEMPLATE: &str = include_str!("../../templates/multidim.v1.txt");
pub const DIFFERENTIAL_TEMPLATE: &str = include_str!("../../templates/differential.v1.txt");
pub const DIRECT_TEMPLATE: &str = include_str!("../../templates/direct.v1.txt");
pub const INTERPRETER_TEMPLATE: &str = include_str!("../../templates/interpreter.v1.txt");
pub const SIMPLE_PRIORS_TEMPLATE: &str = include_str!("../../templates/simple_priors.v1.txt");

/// Default number of correct solutions shown in a multidimensional prompt.
pub const DEFAULT_SOLUTION_CAP: usize = 10;

fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

fn render_solutions(solutions: &[&Solution]) -> String {
    solutions
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let lang = s.language.tag();
            format!("### Solution {} ({lang})\n```{lang}\n{}\n```\n", i + 1, s.source.trim_end_matches('\n'))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltPrompt {
    pub text: String,
    pub solutions_used: usize,
    /// Set when fewer solutions than the cap were available.
    pub note: Option<String>,
}

fn solutions_prompt(template: &str, problem: &Problem, solutions: &[&Solution], cap: usize) -> BuiltPrompt {
    let used = &solutions[..solutions.len().min(cap)];
    let note = (used.len() < cap).then(|| format!("fewer than requested: {} of {cap} correct solutions", used.len()));
    let n = used.len().to_string();
    let rendered = render_solutions(used);
    BuiltPrompt {
        text: render(
            template,
            &[
                ("statement", problem.statement.trim_end()),
                ("constraints", problem.constraints_text.trim_end()),
                ("n_solutions", &n),
                ("solutions", rendered.trim_end()),
            ],
        ),
        solutions_used: used.len(),
        note,
    }
}

/// Prompt over up to `cap` correct solutions, in the order given.
pub fn build_multidim_prompt(problem: &Problem, solutions: &[&Solution], cap: usize) -> BuiltPrompt {
    solutions_prompt(MULTIDIM_TEMPLATE, problem, solutions, cap)
}

/// Minimal boundary-value variant of the multidimensional prompt.
pub fn build_simple_priors_prompt(problem: &Problem, solutions: &[&Solution], cap: usize) -> BuiltPrompt {
    solutions_prompt(SIMPLE_PRIORS_TEMPLATE, problem, solutions, cap)
}

pub fn build_differential_prompt(problem: &Problem, pair: &SubmissionPair) -> String {
    let verdict = pair
        .wrong
        .recorded_verdict
        .map_or_else(|| "unknown".to_string(), |v| format!("{v:?}"));
    render(
        DIFFERENTIAL_TEMPLATE,
        &[
            ("statement", problem.statement.trim_end()),
            ("constraints", problem.constraints_text.trim_end()),
            ("verdict", &verdict),
            ("wrong_language", pair.wrong.language.tag()),
            ("wrong_source", pair.wrong.source.trim_end_matches('\n')),
            ("corrected_language", pair.corrected.language.tag()),
            ("corrected_source", pair.corrected.source.trim_end_matches('\n')),
        ],
    )
}

pub fn build_direct_prompt(problem: &Problem, n_target: usize) -> String {
    let n = n_target.to_string();
    render(
        DIRECT_TEMPLATE,
        &[
            ("statement", problem.statement.trim_end()),
            ("constraints", problem.constraints_text.trim_end()),
            ("n_target", &n),
        ],
    )
}

pub fn build_interpreter_prompt(problem: &Problem, n_target: usize) -> String {
    let n = n_target.to_string();
    render(
        INTERPRETER_TEMPLATE,
        &[
            ("statement", problem.statement.trim_end()),
            ("constraints", problem.constraints_text.trim_end()),
            ("n_target", &n),
        ],
    )
}
