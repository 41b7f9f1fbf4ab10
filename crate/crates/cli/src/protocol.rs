//! Wire protocol: one JSON object per message, each with a `type` and a
//! client-chosen `id`. Every request gets one response whose type is the
//! request type plus `-response`, or `error`.

use std::path::{Path, PathBuf};

use rdfg_core::linter::{apply_quickfix, lint, Diagnostic, LintConfig};
use rdfg_core::project::{AnalysisRequest, Format, PluginRegistry};
use rdfg_core::queries::run_queries;
use rdfg_core::slicer::Direction;
use rdfg_core::state::{AnalysisOptions, AnalysisState};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Sent unsolicited when a client connects.
pub fn hello() -> Value {
    json!({ "type": "hello", "name": "rdfg", "version": crate::VERSION })
}

/// A client request. Unknown fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Value>,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RequestBody {
    FileAnalysis {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        content: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<Format>,
    },
    Query {
        queries: Vec<Value>,
    },
    Slice {
        criteria: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<String>,
    },
    Lint {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rules: Option<Vec<String>>,
    },
    ApplyFix {
        diagnostic: usize,
    },
}

const REQUEST_TYPES: [&str; 5] = ["file-analysis", "query", "slice", "lint", "apply-fix"];

/// Per-connection state.
#[derive(Debug, Default)]
pub struct Session {
    pub root: Option<PathBuf>,
    pub lint: LintConfig,
    state: Option<AnalysisState>,
    diagnostics: Vec<Diagnostic>,
}

impl Session {
    pub fn new(root: Option<PathBuf>) -> Self {
        Session {
            root,
            ..Session::default()
        }
    }

    pub fn state(&self) -> Option<&AnalysisState> {
        self.state.as_ref()
    }

    /// Handle one raw message and produce its response.
    pub fn handle_text(&mut self, text: &str) -> Value {
        match serde_json::from_str::<Value>(text) {
            Ok(v) => self.handle(v),
            Err(e) => error(None, format!("malformed message: {e}")),
        }
    }

    pub fn handle(&mut self, msg: Value) -> Value {
        let id = msg.get("id").cloned();
        let Some(kind) = msg.get("type").and_then(Value::as_str).map(str::to_string) else {
            return error(id, "malformed message: missing `type`".into());
        };
        if !REQUEST_TYPES.contains(&kind.as_str()) {
            return error(id, format!("unknown request type `{kind}`"));
        }
        let request = match serde_json::from_value::<Request>(msg) {
            Ok(r) => r,
            Err(e) => return error(id, format!("malformed `{kind}` request: {e}")),
        };
        match self.dispatch(request.body) {
            Ok(mut body) => {
                body.insert("type".into(), Value::String(format!("{kind}-response")));
                if let Some(id) = id {
                    body.insert("id".into(), id);
                }
                Value::Object(body)
            }
            Err(message) => error(id, message),
        }
    }

    fn dispatch(&mut self, request: RequestBody) -> Result<Map<String, Value>, String> {
        match request {
            RequestBody::FileAnalysis {
                path, content, format, ..
            } => self.analyze(path, content, format),
            RequestBody::Query { queries, .. } => {
                let state = self.current()?;
                Ok(object(json!({ "results": run_queries(state, &queries) })))
            }
            RequestBody::Slice {
                criteria, direction, ..
            } => {
                let direction = match direction {
                    Some(d) => d.parse::<Direction>()?,
                    None => Direction::Backward,
                };
                let state = self.current()?;
                let result = state.slice(&criteria, direction).map_err(|e| e.to_string())?;
                Ok(object(serde_json::to_value(result).map_err(|e| e.to_string())?))
            }
            RequestBody::Lint { rules, .. } => {
                let mut config = self.lint.clone();
                if let Some(r) = rules {
                    config.only = Some(r.into_iter().collect());
                }
                let diagnostics = lint(self.current()?, &config);
                let body = json!({ "diagnostics": diagnostics });
                self.diagnostics = diagnostics;
                Ok(object(body))
            }
            RequestBody::ApplyFix { diagnostic, .. } => {
                let state = self.current()?;
                let d = self
                    .diagnostics
                    .get(diagnostic)
                    .ok_or_else(|| format!("no diagnostic with index {diagnostic}; run `lint` first"))?;
                let fix = d
                    .quick_fix
                    .as_ref()
                    .ok_or_else(|| format!("diagnostic {diagnostic} has no quick-fix"))?;
                let source = &state.source(d.file);
                let fixed = apply_quickfix(source, fix).map_err(|e| e.to_string())?;
                Ok(object(json!({
                    "file": d.origin,
                    "title": fix.title,
                    "content": fixed.content(),
                })))
            }
        }
    }

    fn current(&self) -> Result<&AnalysisState, String> {
        self.state
            .as_ref()
            .ok_or_else(|| "no analysis yet; send `file-analysis` first".to_string())
    }

    fn analyze(
        &mut self,
        path: Option<String>,
        content: Option<String>,
        format: Option<Format>,
    ) -> Result<Map<String, Value>, String> {
        let plugins = PluginRegistry::default();
        let options = AnalysisOptions {
            root: self.root.clone(),
            ..AnalysisOptions::default()
        };
        let state = match (path, content) {
            (Some(p), None) => {
                let p = rdfg_core::project::strip_file_scheme(&p).to_string();
                if Path::new(&p).is_dir() {
                    AnalysisState::from_path(Path::new(&p), &plugins, options)
                } else {
                    let mut r = AnalysisRequest::file(&p);
                    if let Some(f) = format {
                        r = r.with_format(f);
                    }
                    AnalysisState::build(&[r], &plugins, options)
                }
            }
            (None, Some(c)) => {
                let r = AnalysisRequest::text(c).with_format(format.unwrap_or(Format::R));
                AnalysisState::build(&[r], &plugins, options)
            }
            _ => return Err("file-analysis needs exactly one of `path` or `content`".into()),
        }
        .map_err(|e| e.to_string())?;
        let diagnostics = lint(&state, &self.lint);
        let body = json!({
            "files": state.files.iter().map(|f| f.source.origin()).collect::<Vec<_>>(),
            "vertices": state.graph.vertex_count(),
            "edges": state.graph.edge_count(),
            "diagnostics": diagnostics.len(),
        });
        self.state = Some(state);
        self.diagnostics = diagnostics;
        Ok(object(body))
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        other => Map::from_iter([("result".to_string(), other)]),
    }
}

fn error(id: Option<Value>, message: String) -> Value {
    let mut m = Map::new();
    m.insert("type".into(), "error".into());
    if let Some(id) = id {
        m.insert("id".into(), id);
    }
    m.insert("message".into(), message.into());
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_before_analysis_fail() {
        let mut s = Session::default();
        let r = s.handle(json!({"type": "lint", "id": "1"}));
        assert_eq!(r["type"], "error");
        assert_eq!(r["id"], "1");
    }

    #[test]
    fn unknown_and_untyped_messages() {
        let mut s = Session::default();
        assert_eq!(s.handle(json!({"id": "a"}))["message"], "malformed message: missing `type`");
        assert_eq!(
            s.handle(json!({"type": "bogus", "id": "b"}))["message"],
            "unknown request type `bogus`"
        );
        assert!(s.handle_text("{").get("id").is_none());
    }

    #[test]
    fn failed_analysis_keeps_previous_state() {
        let mut s = Session::default();
        s.handle(json!({"type": "file-analysis", "content": "x <- 2"}));
        let r = s.handle(json!({"type": "file-analysis", "content": "x <- ("}));
        assert_eq!(r["type"], "error");
        assert_eq!(s.state().unwrap().graph.vertex_count(), 3);
    }
}
