use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub passed: bool,
    pub measured: Value,
    /// What `measured` is compared against, in words.
    pub requirement: String,
}

/// Per-run summary. Wall time is left out so reruns stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: String,
    pub headline: BTreeMap<String, Value>,
    pub diagnostics: Vec<Diagnostic>,
    pub all_pass: bool,
    pub files: Vec<String>,
}

impl RunSummary {
    pub fn new(solver: &str) -> Self {
        Self { solver: solver.to_string(), headline: BTreeMap::new(), diagnostics: Vec::new(), all_pass: true, files: Vec::new() }
    }

    pub fn headline(&mut self, key: &str, value: impl Serialize) {
        self.headline.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn check(&mut self, name: &str, passed: bool, measured: impl Serialize, requirement: impl Into<String>) {
        self.all_pass &= passed;
        self.diagnostics.push(Diagnostic {
            name: name.to_string(),
            passed,
            measured: serde_json::to_value(measured).unwrap_or(Value::Null),
            requirement: requirement.into(),
        });
    }

    /// `measured <= bound` (NaN fails).
    pub fn at_most(&mut self, name: &str, measured: f64, bound: f64) {
        self.check(name, measured <= bound, measured, format!("<= {bound:e}"));
    }

    pub fn file(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    pub fn failures(&self) -> Vec<&Diagnostic> {
        self.diagnostics.iter().filter(|d| !d.passed).collect()
    }
}
