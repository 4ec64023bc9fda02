//! Language toolchain registry.
//!
//! Toolchains are configuration, not code: each language tag maps to command
//! templates for compiling, syntax-checking, and running a program. New
//! languages are added by editing the config file, never by changing code.
//!
//! Template placeholders: `{src}` (source file), `{bin}` (output binary),
//! `{dir}` (scratch directory).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunnerError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Toolchain {
    /// File extension for the source file, e.g. "py" or "cpp".
    pub source_ext: String,
    /// Compile command; absent for interpreted languages.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub compile_cmd: Option<Vec<String>>,
    /// Optional syntax check run at "compile" time for interpreted languages.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub syntax_check_cmd: Option<Vec<String>>,
    /// Command that runs the program.
    pub run_cmd: Vec<String>,
}

impl Toolchain {
    pub(crate) fn substitute(template: &[String], src: &Path, bin: &Path, dir: &Path) -> Vec<String> {
        template
            .iter()
            .map(|arg| {
                arg.replace("{src}", &src.display().to_string())
                    .replace("{bin}", &bin.display().to_string())
                    .replace("{dir}", &dir.display().to_string())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolchainRegistry {
    pub languages: BTreeMap<String, Toolchain>,
}

impl Default for ToolchainRegistry {
    fn default() -> Self {
        let mut languages = BTreeMap::new();
        languages.insert(
            "python".to_string(),
            Toolchain {
                source_ext: "py".into(),
                compile_cmd: None,
                syntax_check_cmd: Some(
                    ["python3", "-m", "py_compile", "{src}"]
                        .map(String::from)
                        .to_vec(),
                ),
                run_cmd: ["python3", "{src}"].map(String::from).to_vec(),
            },
        );
        languages.insert(
            "cpp".to_string(),
            Toolchain {
                source_ext: "cpp".into(),
                compile_cmd: Some(
                    ["g++", "-O2", "-std=c++17", "-o", "{bin}", "{src}"]
                        .map(String::from)
                        .to_vec(),
                ),
                syntax_check_cmd: None,
                run_cmd: ["{bin}"].map(String::from).to_vec(),
            },
        );
        Self { languages }
    }
}

impl ToolchainRegistry {
    pub fn get(&self, language: &str) -> Result<&Toolchain, RunnerError> {
        self.languages
            .get(language)
            .ok_or_else(|| RunnerError::UnknownLanguage(language.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RunnerError> {
        toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))
    }

    pub fn from_toml_path(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}
