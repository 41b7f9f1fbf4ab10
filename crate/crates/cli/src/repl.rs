//! Read-eval-print loop. Lines starting with `:` are commands; anything else
//! is R code appended to the session's current program.

use std::path::{Path, PathBuf};

use rdfg_core::linter::{lint, LintConfig};
use rdfg_core::project::{load, strip_file_scheme, AnalysisRequest, PluginRegistry};
use rdfg_core::queries::run_queries;
use rdfg_core::slicer::Direction;
use rdfg_core::state::{AnalysisOptions, AnalysisState};
use rdfg_core::syntax::{parse, NodeId};
use serde_json::Value;

const HELP: &str = "\
:help                          list commands
:quit                          leave the REPL
:parse [code|file://path]      raw syntax tree
:normalize [code|file://path]  normalized tree with node ids
:dataflow [code|file://path]   dataflow graph as mermaid text
:dataflowascii [code|...]      dataflow graph as vertex and edge lines
:cfg [code|file://path]        control-flow graphs as mermaid text
:slice <crit,...> [--forward|--chop] [code|file://path]
                               slice for criteria `$id`, `line:col` or `line@name`
:lint [code|file://path]       run the linter
:query <json> [code|file://path]
                               run one query object or an array of them
:history                       commands entered so far
:reset                         forget the current program
Without an argument a command works on the current program. Any line that
does not start with `:` is appended to the current program.";

/// Result of evaluating one line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplOutput {
    pub text: String,
    pub quit: bool,
}

impl ReplOutput {
    fn text(text: impl Into<String>) -> Self {
        ReplOutput {
            text: text.into(),
            quit: false,
        }
    }
}

pub struct ReplSession {
    pub root: Option<PathBuf>,
    pub cwd: PathBuf,
    pub lint: LintConfig,
    source: String,
    state: Option<AnalysisState>,
    history: Vec<String>,
}

impl ReplSession {
    pub fn new(root: Option<PathBuf>, cwd: PathBuf) -> Self {
        ReplSession {
            root,
            cwd,
            lint: LintConfig::default(),
            source: String::new(),
            state: None,
            history: Vec::new(),
        }
    }

    pub fn greeting() -> String {
        format!(
            "rdfg repl v{}\nuse :help to get a list of available commands.",
            crate::VERSION
        )
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn state(&self) -> Option<&AnalysisState> {
        self.state.as_ref()
    }

    pub fn history(&self) -> &[String] {
        &self.history
    }

    pub fn eval(&mut self, line: &str) -> ReplOutput {
        let line = line.trim();
        if line.is_empty() {
            return ReplOutput::text("");
        }
        self.history.push(line.to_string());
        let Some(command) = line.strip_prefix(':') else {
            return ReplOutput::text(self.extend(line));
        };
        let (name, arg) = match command.split_once(char::is_whitespace) {
            Some((n, a)) => (n, a.trim()),
            None => (command, ""),
        };
        let out = match name {
            "help" | "h" => Ok(HELP.to_string()),
            "quit" | "q" => {
                return ReplOutput {
                    text: String::new(),
                    quit: true,
                }
            }
            "history" => Ok(self.history.join("\n")),
            "reset" => {
                self.source.clear();
                self.state = None;
                Ok(String::new())
            }
            "parse" => self.parse(arg),
            "normalize" => self.with_state(arg, |s| Ok(s.asts.iter().map(|a| a.dump()).collect())),
            "dataflow" => self.with_state(arg, |s| Ok(s.graph.render_mermaid())),
            "dataflowascii" => self.with_state(arg, |s| Ok(s.graph.render_ascii())),
            "cfg" => self.with_state(arg, render_cfgs),
            "slice" => self.slice(arg),
            "lint" => {
                let config = self.lint.clone();
                self.with_state(arg, |s| {
                    let diagnostics = lint(s, &config);
                    if diagnostics.is_empty() {
                        return Ok("no findings".to_string());
                    }
                    Ok(diagnostics.iter().map(|d| format!("{d}\n")).collect())
                })
            }
            "query" => self.query(arg),
            _ => return ReplOutput::text("unknown command, use :help"),
        };
        ReplOutput::text(match out {
            Ok(t) => t.trim_end().to_string(),
            Err(e) => format!("error: {e}"),
        })
    }

    fn extend(&mut self, code: &str) -> String {
        let mut next = self.source.clone();
        if !next.is_empty() && !next.ends_with('\n') {
            next.push('\n');
        }
        next.push_str(code);
        match self.build_text(&next) {
            Ok(state) => {
                let summary = format!(
                    "{} vertices, {} edges",
                    state.graph.vertex_count(),
                    state.graph.edge_count()
                );
                self.source = next;
                self.state = Some(state);
                summary
            }
            Err(e) => format!("error: {e}"),
        }
    }

    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            root: self.root.clone(),
            ..AnalysisOptions::default()
        }
    }

    fn build_text(&self, code: &str) -> Result<AnalysisState, String> {
        AnalysisState::build(&[AnalysisRequest::text(code)], &PluginRegistry::default(), self.options())
            .map_err(|e| e.to_string())
    }

    fn resolve_path(&self, arg: &str) -> PathBuf {
        let p = Path::new(strip_file_scheme(arg));
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.cwd.join(p)
        }
    }

    /// Run `f` on the argument's analysis, or on the current program when
    /// there is no argument.
    fn with_state(&self, arg: &str, f: impl FnOnce(&AnalysisState) -> Result<String, String>) -> Result<String, String> {
        if arg.is_empty() {
            let state = self
                .state
                .as_ref()
                .ok_or("no program yet; enter R code or pass it after the command")?;
            return f(state);
        }
        let state = if arg.starts_with("file://") {
            let path = self.resolve_path(arg);
            AnalysisState::from_path(&path, &PluginRegistry::default(), self.options()).map_err(|e| e.to_string())?
        } else {
            self.build_text(arg)?
        };
        f(&state)
    }

    fn parse(&self, arg: &str) -> Result<String, String> {
        let source = if arg.starts_with("file://") {
            let request = AnalysisRequest::file(self.resolve_path(arg).display().to_string());
            load(&request, &PluginRegistry::default()).map_err(|e| e.to_string())?.source
        } else if arg.is_empty() {
            if self.source.is_empty() {
                return Err("no program yet; enter R code or pass it after the command".into());
            }
            rdfg_core::syntax::SourceText::literal(self.source.clone())
        } else {
            rdfg_core::syntax::SourceText::literal(arg.to_string())
        };
        let tree = parse(&source).map_err(|e| e.to_string())?;
        Ok(crate::tree::render(&tree))
    }

    fn slice(&self, arg: &str) -> Result<String, String> {
        let mut rest = arg;
        let mut criteria = None;
        let mut direction = Direction::Backward;
        loop {
            let (word, tail) = match rest.split_once(char::is_whitespace) {
                Some((w, t)) => (w, t.trim_start()),
                None => (rest, ""),
            };
            match word {
                "--forward" | "--impact" => direction = Direction::Forward,
                "--chop" => direction = Direction::Chop,
                "--backward" => direction = Direction::Backward,
                _ if criteria.is_none() && !word.is_empty() => criteria = Some(word),
                _ => break,
            }
            rest = tail;
        }
        let criteria: Vec<String> = criteria
            .ok_or("usage: :slice <crit,...> [--forward|--chop] [code]")?
            .split(',')
            .map(str::to_string)
            .collect();
        self.with_state(rest, |s| {
            let result = s.slice(&criteria, direction).map_err(|e| e.to_string())?;
            let ids: Vec<String> = result.ids.iter().map(NodeId::to_string).collect();
            Ok(format!("ids: {}\n{}", ids.join(", "), result.text))
        })
    }

    fn query(&self, arg: &str) -> Result<String, String> {
        let mut stream = serde_json::Deserializer::from_str(arg).into_iter::<Value>();
        let value = match stream.next() {
            Some(Ok(v)) => v,
            Some(Err(e)) => return Err(format!("malformed query: {e}")),
            None => return Err("usage: :query <json> [code]".into()),
        };
        let rest = arg[stream.byte_offset()..].trim();
        let queries = match value {
            Value::Array(items) => items,
            other => vec![other],
        };
        self.with_state(rest, |s| {
            serde_json::to_string_pretty(&run_queries(s, &queries)).map_err(|e| e.to_string())
        })
    }
}

fn render_cfgs(state: &AnalysisState) -> Result<String, String> {
    let forest = state.forest();
    let label = |id: NodeId| {
        let Some(file) = state.file_of(id) else {
            return id.to_string();
        };
        let text = state.source(file).slice(forest.node(id).span).unwrap_or("");
        let first = text.lines().next().unwrap_or("").trim();
        let short: String = first.chars().take(40).collect();
        if short.len() < first.len() {
            format!("{short}...")
        } else {
            short
        }
    };
    let mut out = String::new();
    for cfg in &state.cfgs.units {
        out.push_str(&cfg.render_mermaid(label, &state.dead_blocks(cfg)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> ReplSession {
        ReplSession::new(None, std::env::temp_dir())
    }

    #[test]
    fn unknown_command() {
        assert_eq!(session().eval(":frobnicate").text, "unknown command, use :help");
    }

    #[test]
    fn quit_ends_the_session() {
        assert!(session().eval(":quit").quit);
    }

    #[test]
    fn bare_lines_extend_the_program() {
        let mut s = session();
        s.eval("x <- 1");
        s.eval("y <- x");
        assert_eq!(s.source(), "x <- 1\ny <- x");
        let out = s.eval(":slice 2@y");
        assert!(out.text.contains("x <- 1"), "{}", out.text);
    }

    #[test]
    fn failed_build_keeps_the_program() {
        let mut s = session();
        s.eval("x <- 1");
        assert!(s.eval("y <- (").text.starts_with("error:"));
        assert_eq!(s.source(), "x <- 1");
        assert!(s.state().is_some());
    }

    #[test]
    fn query_with_inline_code() {
        let out = session().eval(r#":query {"type":"resolve-value","criteria":["1@x"]} x <- 42L"#);
        assert!(out.text.contains("[42L, 42L]"), "{}", out.text);
    }

    #[test]
    fn files_resolve_against_the_working_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.R"), "x <- 2\n").unwrap();
        let mut s = ReplSession::new(None, dir.path().to_path_buf());
        let out = s.eval(":dataflowascii file://a.R");
        assert!(out.text.contains("2 -> 1: reads, argument"), "{}", out.text);
    }
}
