//! Extraction of fenced code blocks from model responses.
//!
//! A case-script response is a sequence of fenced blocks whose info string
//! carries one of the tags `case_script`, `math_explanation` or
//! `self_validation` (a language word may precede it, as in
//! ```` ```python case_script ````). Each `case_script` block opens a new
//! triple; the explanation and validator that follow attach to it.
//!
//! Direct-generation responses use `input` / `output` blocks in pairs.

use serde::{Deserialize, Serialize};

pub const TAG_SCRIPT: &str = "case_script";
pub const TAG_EXPLANATION: &str = "math_explanation";
pub const TAG_VALIDATION: &str = "self_validation";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseScript {
    pub script_source: String,
    pub math_explanation: String,
    /// `None` only in lenient mode when the validator block was missing.
    pub self_validation_source: Option<String>,
    /// Upper bound on inputs taken from this script.
    pub target_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    /// Skip triples without a self-validation block.
    #[default]
    Strict,
    /// Keep them with no validator.
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedScripts {
    pub scripts: Vec<CaseScript>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FencedBlock {
    /// Info string words after the opening fence.
    pub tags: Vec<String>,
    pub body: String,
    /// 1-based line of the opening fence.
    pub line: usize,
}

/// All fenced blocks in order. An unterminated block runs to end of text.
pub fn fenced_blocks(text: &str) -> Vec<FencedBlock> {
    let mut out = Vec::new();
    let mut open: Option<(usize, String, Vec<String>, Vec<&str>)> = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        match &mut open {
            None => {
                if let Some(rest) = trimmed.strip_prefix("```") {
                    let fence_len = 3 + rest.chars().take_while(|&c| c == '`').count();
                    let info = &trimmed[fence_len..];
                    let tags = info.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
                    open = Some((i + 1, "`".repeat(fence_len), tags, Vec::new()));
                }
            }
            Some((start, fence, tags, body)) => {
                if trimmed.starts_with(fence.as_str()) && trimmed.trim_end().chars().all(|c| c == '`') {
                    out.push(FencedBlock {
                        tags: std::mem::take(tags),
                        body: join_lines(body),
                        line: *start,
                    });
                    open = None;
                } else {
                    body.push(line);
                }
            }
        }
    }
    if let Some((start, _, tags, body)) = open {
        out.push(FencedBlock {
            tags,
            body: join_lines(&body),
            line: start,
        });
    }
    out
}

fn join_lines(lines: &[&str]) -> String {
    let mut s = lines.join("\n");
    if !s.is_empty() {
        s.push('\n');
    }
    s
}

fn has_tag(block: &FencedBlock, tag: &str) -> bool {
    block.tags.iter().any(|t| t == tag)
}

struct Pending {
    line: usize,
    script: String,
    explanation: Option<String>,
    validator: Option<String>,
}

/// Groups tagged blocks into [`CaseScript`]s. Untagged blocks are ignored.
pub fn parse_llm_response(text: &str, mode: ParseMode, target_count: usize) -> ParsedScripts {
    let mut parsed = ParsedScripts::default();
    let mut pending: Option<Pending> = None;
    let finish = |p: Pending, parsed: &mut ParsedScripts| {
        if p.script.trim().is_empty() {
            parsed.diagnostics.push(format!("line {}: empty case_script skipped", p.line));
            return;
        }
        let validator = p.validator.filter(|v| !v.trim().is_empty());
        if validator.is_none() && mode == ParseMode::Strict {
            parsed
                .diagnostics
                .push(format!("line {}: case_script without self_validation skipped", p.line));
            return;
        }
        if validator.is_none() {
            parsed
                .diagnostics
                .push(format!("line {}: case_script kept without validator", p.line));
        }
        parsed.scripts.push(CaseScript {
            script_source: p.script,
            math_explanation: p.explanation.unwrap_or_default(),
            self_validation_source: validator,
            target_count,
        });
    };
    for block in fenced_blocks(text) {
        if has_tag(&block, TAG_SCRIPT) {
            if let Some(p) = pending.take() {
                finish(p, &mut parsed);
            }
            pending = Some(Pending {
                line: block.line,
                script: block.body,
                explanation: None,
                validator: None,
            });
        } else if has_tag(&block, TAG_EXPLANATION) || has_tag(&block, TAG_VALIDATION) {
            let is_validation = has_tag(&block, TAG_VALIDATION);
            match &mut pending {
                Some(p) => {
                    let slot = if is_validation { &mut p.validator } else { &mut p.explanation };
                    if slot.is_some() {
                        parsed.diagnostics.push(format!("line {}: repeated block ignored", block.line));
                    } else {
                        *slot = Some(block.body);
                    }
                }
                None => parsed
                    .diagnostics
                    .push(format!("line {}: block before any case_script ignored", block.line)),
            }
        }
    }
    if let Some(p) = pending {
        finish(p, &mut parsed);
    }
    parsed
}

/// One `(input, output)` pair from a direct-generation response.
pub type IoPair = (Vec<u8>, Vec<u8>);

/// Pairs from alternating `input` / `output` blocks, plus diagnostics.
pub fn parse_direct_cases(text: &str) -> (Vec<IoPair>, Vec<String>) {
    let mut pairs = Vec::new();
    let mut diagnostics = Vec::new();
    let mut input: Option<FencedBlock> = None;
    for block in fenced_blocks(text) {
        if has_tag(&block, "input") {
            if let Some(prev) = input.replace(block) {
                diagnostics.push(format!("line {}: input without output skipped", prev.line));
            }
        } else if has_tag(&block, "output") {
            match input.take() {
                Some(i) => pairs.push((i.body.into_bytes(), block.body.into_bytes())),
                None => diagnostics.push(format!("line {}: output without input skipped", block.line)),
            }
        }
    }
    if let Some(prev) = input {
        diagnostics.push(format!("line {}: input without output skipped", prev.line));
    }
    (pairs, diagnostics)
}
