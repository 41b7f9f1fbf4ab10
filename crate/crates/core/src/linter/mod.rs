//! Lint rules over an analysis state, with quick-fixes applied as text
//! edits.

mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::state::AnalysisState;
use crate::syntax::{parse_normalized, SourceText, Span};

pub use rules::{
    AbsoluteFilePath, DeadCode, DeprecatedFunctions, DfColumnAccess, InvalidFilePath, OverwrittenDefinition,
    SeedRandomness, UnusedDefinition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

/// Whether a finding holds on every execution or rests on an approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certainty {
    Exact,
    Approximate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEdit {
    pub range: Span,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuickFix {
    pub title: String,
    pub edits: Vec<TextEdit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule: String,
    pub severity: Severity,
    /// Index of the file in the analysis state.
    pub file: usize,
    pub origin: String,
    pub range: Span,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certainty: Option<Certainty>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quick_fix: Option<QuickFix>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{} [{}] {}: {}",
            self.origin, self.range.start.line, self.range.start.col, self.severity, self.rule, self.message
        )
    }
}

/// Which rules run, and their knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LintConfig {
    pub disabled: BTreeSet<String>,
    /// When set, only these rules run.
    pub only: Option<BTreeSet<String>>,
    pub seed: i64,
    pub deprecated: Vec<String>,
    pub severities: BTreeMap<String, Severity>,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            disabled: BTreeSet::new(),
            only: None,
            seed: 42,
            deprecated: [
                "filter_all",
                "filter_at",
                "filter_if",
                "mutate_all",
                "mutate_at",
                "mutate_if",
                "mutate_each",
                "summarise_each",
                "summarize_each",
                "select_all",
                "rename_all",
                "funs",
                "sample_n",
                "sample_frac",
                "top_n",
                "do",
            ]
            .map(str::to_string)
            .to_vec(),
            severities: BTreeMap::new(),
        }
    }
}

impl LintConfig {
    pub fn enabled(&self, rule: &str) -> bool {
        !self.disabled.contains(rule) && self.only.as_ref().is_none_or(|o| o.contains(rule))
    }
}

/// What the rule found, before the runner fills in file and severity.
#[derive(Debug, Clone)]
pub struct Finding {
    pub file: usize,
    pub range: Span,
    pub message: String,
    pub certainty: Option<Certainty>,
    pub quick_fix: Option<QuickFix>,
}

impl Finding {
    pub fn new(file: usize, range: Span, message: impl Into<String>) -> Self {
        Finding {
            file,
            range,
            message: message.into(),
            certainty: None,
            quick_fix: None,
        }
    }

    pub fn certainty(mut self, c: Certainty) -> Self {
        self.certainty = Some(c);
        self
    }

    pub fn fix(mut self, fix: Option<QuickFix>) -> Self {
        self.quick_fix = fix;
        self
    }
}

pub trait LintRule: Send + Sync {
    fn id(&self) -> &'static str;
    fn severity(&self) -> Severity;
    /// Rules that compare paths against the project directory.
    fn needs_root(&self) -> bool {
        false
    }
    fn check(&self, state: &AnalysisState, config: &LintConfig) -> Vec<Finding>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum RuleStatus {
    Ran,
    Disabled,
    Inactive(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintReport {
    pub diagnostics: Vec<Diagnostic>,
    pub rules: BTreeMap<String, RuleStatus>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LintError {
    #[error("a rule with id `{0}` is already registered")]
    DuplicateRule(String),
    #[error("quick-fix does not match the source: {0}")]
    StaleFix(String),
}

pub struct Linter {
    rules: Vec<Box<dyn LintRule>>,
}

impl Default for Linter {
    fn default() -> Self {
        let mut l = Linter::empty();
        let builtin: Vec<Box<dyn LintRule>> = vec![
            Box::new(AbsoluteFilePath),
            Box::new(InvalidFilePath),
            Box::new(DfColumnAccess),
            Box::new(SeedRandomness),
            Box::new(UnusedDefinition),
            Box::new(OverwrittenDefinition),
            Box::new(DeprecatedFunctions),
            Box::new(DeadCode),
        ];
        for r in builtin {
            l.register(r).expect("built-in ids are unique");
        }
        l
    }
}

impl Linter {
    pub fn empty() -> Self {
        Linter { rules: Vec::new() }
    }

    pub fn register(&mut self, rule: Box<dyn LintRule>) -> Result<(), LintError> {
        if self.rules.iter().any(|r| r.id() == rule.id()) {
            return Err(LintError::DuplicateRule(rule.id().to_string()));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn rule_ids(&self) -> Vec<&'static str> {
        self.rules.iter().map(|r| r.id()).collect()
    }

    pub fn run(&self, state: &AnalysisState, config: &LintConfig) -> LintReport {
        let mut diagnostics = Vec::new();
        let mut status = BTreeMap::new();
        for rule in &self.rules {
            let id = rule.id();
            if !config.enabled(id) {
                status.insert(id.to_string(), RuleStatus::Disabled);
                continue;
            }
            if rule.needs_root() && state.options.root.is_none() {
                status.insert(id.to_string(), RuleStatus::Inactive("no project root configured".into()));
                continue;
            }
            status.insert(id.to_string(), RuleStatus::Ran);
            let severity = config.severities.get(id).copied().unwrap_or(rule.severity());
            for f in rule.check(state, config) {
                if silenced(state, f.file, f.range.start.line, id) {
                    continue;
                }
                diagnostics.push(Diagnostic {
                    rule: id.to_string(),
                    severity,
                    file: f.file,
                    origin: state.source(f.file).origin().to_string(),
                    range: f.range,
                    message: f.message,
                    certainty: f.certainty,
                    quick_fix: f.quick_fix,
                });
            }
        }
        diagnostics.sort_by(|a, b| {
            (a.file, a.range.start, &a.rule, a.range.end).cmp(&(b.file, b.range.start, &b.rule, b.range.end))
        });
        diagnostics.dedup();
        LintReport {
            diagnostics,
            rules: status,
        }
    }
}

/// Run the built-in rules.
pub fn lint(state: &AnalysisState, config: &LintConfig) -> Vec<Diagnostic> {
    Linter::default().run(state, config).diagnostics
}

/// `# lint-ignore: rule-a, rule-b` on the line of the finding.
fn silenced(state: &AnalysisState, file: usize, line: u32, rule: &str) -> bool {
    state.comments[file]
        .iter()
        .filter(|c| c.span.start.line == line)
        .filter_map(|c| c.text.split_once("lint-ignore:").map(|(_, rest)| rest))
        .any(|rest| {
            rest.split(|ch: char| ch == ',' || ch.is_whitespace())
                .any(|r| r == rule)
        })
}

/// Apply the edits of `fix` back to front.
pub fn apply_quickfix(source: &SourceText, fix: &QuickFix) -> Result<SourceText, LintError> {
    let mut ranges = Vec::new();
    for e in &fix.edits {
        let start = source.offset_of(e.range.start);
        let end = source.offset_of(e.range.end);
        match (start, end) {
            (Some(s), Some(t)) if s <= t => ranges.push((s, t, e.replacement.as_str())),
            _ => return Err(LintError::StaleFix(format!("range {} - {} is out of bounds", e.range.start, e.range.end))),
        }
    }
    ranges.sort_by_key(|r| std::cmp::Reverse((r.0, r.1)));
    for pair in ranges.windows(2) {
        if pair[1].1 > pair[0].0 {
            return Err(LintError::StaleFix("edits overlap".into()));
        }
    }
    let mut text = source.content().to_string();
    for (s, t, r) in ranges {
        text.replace_range(s..t, r);
    }
    Ok(SourceText::new(source.origin(), text))
}

/// Whether `source` parses.
pub fn parses(source: &SourceText) -> bool {
    parse_normalized(source, 0).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Pos;

    fn state(code: &str) -> AnalysisState {
        AnalysisState::from_text(code).unwrap()
    }

    fn rules_of(code: &str) -> Vec<String> {
        lint(&state(code), &LintConfig::default()).into_iter().map(|d| d.rule).collect()
    }

    #[test]
    fn unused_definition_with_removal() {
        let s = state("y <- 1\nprint(y)\nx <- 2\n");
        let d = lint(&s, &LintConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, "unused-definition");
        assert_eq!(d[0].range.start, Pos::new(3, 1));
        let fixed = apply_quickfix(s.source(0), d[0].quick_fix.as_ref().unwrap()).unwrap();
        assert_eq!(fixed.content(), "y <- 1\nprint(y)\n");
    }

    #[test]
    fn seed_rule_and_fix() {
        let s = state("a <- 1\nx <- runif(a)\nprint(x)\n");
        let d = lint(&s, &LintConfig::default());
        assert_eq!(d.iter().map(|d| d.rule.as_str()).collect::<Vec<_>>(), ["seed-randomness"]);
        let fixed = apply_quickfix(s.source(0), d[0].quick_fix.as_ref().unwrap()).unwrap();
        assert_eq!(fixed.content(), "a <- 1\nset.seed(42)\nx <- runif(a)\nprint(x)\n");
        assert!(rules_of(fixed.content()).is_empty());
        assert!(rules_of("set.seed(1)\nprint(sample(3))").is_empty());
        assert_eq!(rules_of("if (c) set.seed(1)\nprint(sample(3))"), ["seed-randomness"]);
    }

    #[test]
    fn absolute_paths() {
        assert_eq!(rules_of("d <- read.csv(\"/data/d.csv\")\nprint(d)"), ["absolute-file-path"]);
        assert_eq!(rules_of("d <- read.csv(\"C:\\\\data\\\\d.csv\")\nprint(d)"), ["absolute-file-path"]);
        assert_eq!(rules_of("d <- readRDS(\"~/d.rds\")\nprint(d)"), ["absolute-file-path"]);
        assert!(rules_of("d <- read.csv(\"data/d.csv\")\nprint(d)").is_empty());
    }

    #[test]
    fn absolute_path_fix_under_root() {
        let mut s = state("d <- read.csv(\"/proj/data/d.csv\")\nprint(d)");
        s.options.root = Some("/proj".into());
        let config = LintConfig {
            only: Some(BTreeSet::from(["absolute-file-path".to_string()])),
            ..LintConfig::default()
        };
        let d = lint(&s, &config);
        let fixed = apply_quickfix(s.source(0), d[0].quick_fix.as_ref().unwrap()).unwrap();
        assert_eq!(fixed.content(), "d <- read.csv(\"data/d.csv\")\nprint(d)");
    }

    #[test]
    fn overwritten_and_deprecated() {
        assert_eq!(rules_of("x <- 1\nx <- 2\nprint(x)"), ["overwritten-definition"]);
        assert_eq!(rules_of("library(dplyr)\nd <- filter_all(m, any_vars(. > 1))\nprint(d)"), ["deprecated-functions"]);
    }

    #[test]
    fn dead_code_after_constant_condition() {
        let d = lint(&state("x <- 1\nif (FALSE) {\n  print(x)\n}\n"), &LintConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, "dead-code");
        assert_eq!(d[0].range.start.line, 3);
        assert_eq!(rules_of("f <- function() {\n  return(1)\n  print(2)\n}\nf()"), ["dead-code"]);
    }

    #[test]
    fn column_access() {
        let code = "d <- data.frame(a = c(1, 2), b = c(3, 4))\nprint(d$a)\nprint(d$z)\nprint(d[[\"q\"]])\ne <- filter(d, w > 1)\nprint(e)";
        let d = lint(&state(code), &LintConfig::default());
        let lines: Vec<(u32, &str)> = d.iter().map(|d| (d.range.start.line, d.rule.as_str())).collect();
        assert_eq!(lines, [(3, "df-column-access"), (4, "df-column-access"), (5, "df-column-access")]);
    }

    #[test]
    fn ignore_comment_and_disable() {
        assert!(rules_of("x <- 2 # lint-ignore: unused-definition").is_empty());
        let config = LintConfig {
            disabled: BTreeSet::from(["unused-definition".to_string()]),
            ..LintConfig::default()
        };
        assert!(lint(&state("x <- 2"), &config).is_empty());
    }

    #[test]
    fn root_rules_report_status() {
        let report = Linter::default().run(&state("x <- 1\nprint(x)"), &LintConfig::default());
        assert!(matches!(report.rules["invalid-file-path"], RuleStatus::Inactive(_)));
        assert_eq!(report.rules["unused-definition"], RuleStatus::Ran);
    }

    #[test]
    fn stale_fix_is_rejected() {
        let src = SourceText::literal("x <- 1\n");
        let fix = QuickFix {
            title: "t".into(),
            edits: vec![TextEdit {
                range: Span::new(Pos::new(5, 1), Pos::new(6, 1)),
                replacement: String::new(),
            }],
        };
        assert!(matches!(apply_quickfix(&src, &fix), Err(LintError::StaleFix(_))));
    }

    #[test]
    fn duplicate_rule_ids_are_rejected() {
        let mut l = Linter::default();
        assert_eq!(
            l.register(Box::new(DeadCode)),
            Err(LintError::DuplicateRule("dead-code".into()))
        );
    }
}
