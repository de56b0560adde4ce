//! Language toolchains: compile and run command templates.
//!
//! Templates are whitespace-separated argument lists (no shell). The
//! placeholders `{src}`, `{bin}` and `{dir}` are replaced per argument.
//!
//! ```toml
//! [languages.cpp]
//! compile = "g++ -O2 -std=c++17 -o {bin} {src}"
//! run = "{bin}"
//!
//! [languages.python]
//! run = "python3 {src}"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExecError;
use crate::dataset::Language;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageToolchain {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile: Option<String>,
    pub run: String,
    /// File name the source is written to; defaults to `main.<ext>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toolchain {
    pub languages: BTreeMap<String, LanguageToolchain>,
}

impl Default for Toolchain {
    fn default() -> Self {
        let mut languages = BTreeMap::new();
        languages.insert(
            "cpp".to_string(),
            LanguageToolchain {
                compile: Some("g++ -O2 -std=c++17 -o {bin} {src}".into()),
                run: "{bin}".into(),
                source_file: None,
            },
        );
        languages.insert(
            "python".to_string(),
            LanguageToolchain {
                compile: None,
                run: "python3 {src}".into(),
                source_file: None,
            },
        );
        Toolchain { languages }
    }
}

impl Toolchain {
    pub fn load(path: &Path) -> Result<Toolchain, ExecError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExecError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Toolchain, ExecError> {
        toml::from_str(text).map_err(|e| ExecError::Config(e.to_string()))
    }

    pub fn get(&self, language: &Language) -> Result<&LanguageToolchain, ExecError> {
        self.languages
            .get(language.tag())
            .ok_or_else(|| ExecError::ToolchainMissing(language.tag().to_string()))
    }
}

impl LanguageToolchain {
    pub fn source_file_name(&self, language: &Language) -> String {
        self.source_file.clone().unwrap_or_else(|| {
            let ext = match language {
                Language::Cpp => "cpp",
                Language::Python => "py",
                Language::Other(tag) if tag.is_empty() => "txt",
                Language::Other(tag) => tag.as_str(),
            };
            format!("main.{ext}")
        })
    }
}

/// Paths substituted into a command template.
#[derive(Debug, Clone)]
pub struct Placeholders {
    pub src: PathBuf,
    pub bin: PathBuf,
    pub dir: PathBuf,
}

/// Expands a template into an argument vector.
pub fn expand(template: &str, ph: &Placeholders) -> Result<Vec<String>, ExecError> {
    let argv: Vec<String> = template
        .split_whitespace()
        .map(|arg| {
            arg.replace("{src}", &ph.src.to_string_lossy())
                .replace("{bin}", &ph.bin.to_string_lossy())
                .replace("{dir}", &ph.dir.to_string_lossy())
        })
        .collect();
    if argv.is_empty() {
        return Err(ExecError::Config(format!("empty command template `{template}`")));
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_placeholders_per_argument() {
        let ph = Placeholders {
            src: "/c/main.cpp".into(),
            bin: "/c/main.bin".into(),
            dir: "/c".into(),
        };
        let argv = expand("g++ -o {bin} {src} -I{dir}", &ph).unwrap();
        assert_eq!(argv, ["g++", "-o", "/c/main.bin", "/c/main.cpp", "-I/c"]);
    }

    #[test]
    fn parses_toml_and_reports_missing_language() {
        let tc = Toolchain::parse("[languages.python]\nrun = \"python3 {src}\"\n").unwrap();
        assert!(tc.get(&Language::Python).is_ok());
        assert!(matches!(tc.get(&Language::Cpp), Err(ExecError::ToolchainMissing(l)) if l == "cpp"));
    }

    #[test]
    fn default_source_names() {
        let tc = Toolchain::default();
        assert_eq!(tc.get(&Language::Cpp).unwrap().source_file_name(&Language::Cpp), "main.cpp");
        assert_eq!(tc.get(&Language::Python).unwrap().source_file_name(&Language::Python), "main.py");
    }
}
