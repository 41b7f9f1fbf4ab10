use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Certainty, Finding, LintConfig, LintRule, QuickFix, Severity, TextEdit};
use crate::abstractval::{AbstractValue, StringSet};
use crate::dataflow::{DfVerb, EdgeLabel, Semantics, VertexKind};
use crate::state::AnalysisState;
use crate::syntax::{IndexOp, NodeId, NodeKind, NormalizedAst, Pos, SourceText, Span};

/// Calls of built-in (not user-defined) functions carrying `tag`.
fn builtin_calls(state: &AnalysisState, tag: Semantics) -> Vec<(usize, NodeId)> {
    let mut out = Vec::new();
    for (file, ast) in state.asts.iter().enumerate() {
        for n in ast.nodes() {
            if n.kind != NodeKind::FunctionCall || !state.graph.is_vertex(n.id) {
                continue;
            }
            if state.graph.targets(n.id, EdgeLabel::Calls).next().is_some() {
                continue;
            }
            if ast.call_name(n.id).is_some_and(|c| state.options.registry.has(c, tag)) {
                out.push((file, n.id));
            }
        }
    }
    out
}

/// Value node of the path argument of a file function call.
fn path_argument(state: &AnalysisState, ast: &NormalizedAst, call: NodeId) -> Option<NodeId> {
    let name = ast.call_name(call)?;
    let role = state.options.registry.lookup(name).path_argument.as_ref()?;
    let args = ast.call_args(call);
    let arg = args
        .iter()
        .find(|a| ast.arg_name(**a) == Some(role.name.as_str()))
        .or_else(|| {
            args.iter()
                .filter(|a| ast.arg_name(**a).is_none())
                .nth(role.position)
        })?;
    ast.arg_value(*arg)
}

fn is_absolute(path: &str) -> bool {
    let b = path.as_bytes();
    path.starts_with('/')
        || path.starts_with('~')
        || path.starts_with('\\')
        || (b.len() >= 3 && b[0].is_ascii_alphabetic() && b[1] == b':' && (b[2] == b'/' || b[2] == b'\\'))
}

/// Literal string paths, or the finite set of strings a computed path can
/// take (with `false` certainty).
fn path_values(state: &AnalysisState, ast: &NormalizedAst, node: NodeId) -> Option<(Vec<String>, bool)> {
    if let NodeKind::StringLit { value } = &ast.node(node).kind {
        return Some((vec![value.clone()], true));
    }
    match state.values.value(state.forest(), &state.graph, node) {
        AbstractValue::Strings(StringSet::Finite(s)) => Some((s.into_iter().collect(), false)),
        _ => None,
    }
}

pub struct AbsoluteFilePath;

impl LintRule for AbsoluteFilePath {
    fn id(&self) -> &'static str {
        "absolute-file-path"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn check(&self, state: &AnalysisState, _: &LintConfig) -> Vec<Finding> {
        let mut out = Vec::new();
        let mut calls = builtin_calls(state, Semantics::FileRead);
        calls.extend(builtin_calls(state, Semantics::FileWrite));
        for (file, call) in calls {
            let ast = &state.asts[file];
            let Some(arg) = path_argument(state, ast, call) else { continue };
            let Some((paths, literal)) = path_values(state, ast, arg) else { continue };
            if paths.is_empty() || !paths.iter().all(|p| is_absolute(p)) {
                continue;
            }
            let span = ast.node(arg).span;
            let fix = if literal {
                relative_fix(state, file, span, &paths[0])
            } else {
                None
            };
            let shown = paths.join("`, `");
            let finding = Finding::new(file, span, format!("absolute file path `{shown}` ties the script to one machine"))
                .certainty(if literal { Certainty::Exact } else { Certainty::Approximate })
                .fix(fix);
            out.push(finding);
        }
        out
    }
}

fn relative_fix(state: &AnalysisState, file: usize, span: Span, path: &str) -> Option<QuickFix> {
    let root = state.options.root.as_ref()?;
    let rel = Path::new(path).strip_prefix(root).ok()?;
    let rel = rel.to_string_lossy().replace('\\', "/");
    if rel.is_empty() {
        return None;
    }
    let quote = state.source(file).slice(span)?.chars().next()?;
    Some(QuickFix {
        title: format!("use the project-relative path `{rel}`"),
        edits: vec![TextEdit {
            range: span,
            replacement: format!("{quote}{rel}{quote}"),
        }],
    })
}

pub struct InvalidFilePath;

impl LintRule for InvalidFilePath {
    fn id(&self) -> &'static str {
        "invalid-file-path"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn needs_root(&self) -> bool {
        true
    }

    fn check(&self, state: &AnalysisState, _: &LintConfig) -> Vec<Finding> {
        let Some(root) = &state.options.root else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (file, call) in builtin_calls(state, Semantics::FileRead) {
            let ast = &state.asts[file];
            let Some(arg) = path_argument(state, ast, call) else { continue };
            let Some((paths, literal)) = path_values(state, ast, arg) else { continue };
            let base = Path::new(state.source(file).origin()).parent().map(Path::to_path_buf);
            for p in paths {
                let exists = if is_absolute(&p) {
                    Path::new(&p).exists()
                } else {
                    root.join(&p).exists() || base.as_ref().is_some_and(|b| b.join(&p).exists())
                };
                if !exists {
                    out.push(
                        Finding::new(file, ast.node(arg).span, format!("file `{p}` does not exist"))
                            .certainty(if literal { Certainty::Exact } else { Certainty::Approximate }),
                    );
                }
            }
        }
        out
    }
}

pub struct DfColumnAccess;

impl LintRule for DfColumnAccess {
    fn id(&self) -> &'static str {
        "df-column-access"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn check(&self, state: &AnalysisState, _: &LintConfig) -> Vec<Finding> {
        let forest = state.forest();
        let mut out = Vec::new();
        for (file, ast) in state.asts.iter().enumerate() {
            for n in ast.nodes() {
                match &n.kind {
                    NodeKind::Index { op } if *op != IndexOp::Single => {
                        let field = if *op == IndexOp::Dollar {
                            Some(ast.node(n.children[1]).lexeme.clone())
                        } else {
                            n.children.get(1).and_then(|a| {
                                let v = ast.arg_value(*a).unwrap_or(*a);
                                match &ast.node(v).kind {
                                    NodeKind::StringLit { value } => Some(value.clone()),
                                    _ => None,
                                }
                            })
                        };
                        let Some(field) = field else { continue };
                        let shape = state.values.shape(forest, &state.graph, n.children[0]);
                        if shape.lacks_column(&field) {
                            out.push(Finding::new(file, n.span, missing_column(&field, &shape.columns)));
                        }
                    }
                    NodeKind::FunctionCall if state.graph.is_vertex(n.id) => {
                        out.extend(verb_columns(state, file, ast, n.id));
                    }
                    _ => {}
                }
            }
        }
        out
    }
}

fn missing_column(name: &str, known: &[String]) -> String {
    if known.is_empty() {
        format!("column `{name}` does not exist in a data frame without columns")
    } else {
        format!("column `{name}` is not one of the known columns: {}", known.join(", "))
    }
}

/// Unbound symbols inside the arguments of a data-frame verb must name
/// columns of its input.
fn verb_columns(state: &AnalysisState, file: usize, ast: &NormalizedAst, call: NodeId) -> Vec<Finding> {
    let Some(name) = ast.call_name(call) else { return Vec::new() };
    if state.graph.targets(call, EdgeLabel::Calls).next().is_some() {
        return Vec::new();
    }
    let Some(verb) = state.options.registry.lookup(name).df_verb() else {
        return Vec::new();
    };
    if verb == DfVerb::LeftJoin {
        return Vec::new();
    }
    let args = ast.call_args(call);
    let data = args
        .iter()
        .find(|a| ast.arg_name(**a) == Some(".data"))
        .or_else(|| args.iter().find(|a| ast.arg_name(**a).is_none()));
    let Some(data) = data else { return Vec::new() };
    let shape = state.values.shape(state.forest(), &state.graph, *data);
    if shape.open {
        return Vec::new();
    }
    let mut known: BTreeSet<String> = shape.columns.iter().cloned().collect();
    let mut out = Vec::new();
    for a in args.iter().filter(|a| *a != data) {
        for id in ast.subtree(*a) {
            let v = state.graph.vertex(id);
            if !v.is_some_and(|v| v.kind == VertexKind::Use) {
                continue;
            }
            if state.graph.targets(id, EdgeLabel::Reads).next().is_some() {
                continue;
            }
            let sym = &ast.node(id).lexeme;
            if !sym.starts_with('.') && !known.contains(sym) {
                out.push(Finding::new(file, ast.node(id).span, missing_column(sym, &shape.columns)));
            }
        }
        if let Some(n) = ast.arg_name(*a) {
            known.insert(n.to_string());
        }
    }
    out
}

pub struct SeedRandomness;

impl LintRule for SeedRandomness {
    fn id(&self) -> &'static str {
        "seed-randomness"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn check(&self, state: &AnalysisState, config: &LintConfig) -> Vec<Finding> {
        let seeds = builtin_calls(state, Semantics::Seed);
        let unseeded: Vec<(usize, NodeId)> = builtin_calls(state, Semantics::Rng)
            .into_iter()
            .filter(|(file, rng)| {
                let ast = &state.asts[*file];
                !seeds
                    .iter()
                    .any(|(f, s)| f == file && state.cfgs.dominates(ast, *s, *rng))
            })
            .collect();
        let mut first: BTreeMap<usize, NodeId> = BTreeMap::new();
        for (file, rng) in &unseeded {
            let ast = &state.asts[*file];
            let e = first.entry(*file).or_insert(*rng);
            if ast.node(*rng).span.start < ast.node(*e).span.start {
                *e = *rng;
            }
        }
        unseeded
            .into_iter()
            .map(|(file, rng)| {
                let ast = &state.asts[file];
                let name = ast.call_name(rng).unwrap_or("random");
                let fix = seed_fix(ast, state.source(file), first[&file], config.seed);
                Finding::new(
                    file,
                    ast.node(rng).span,
                    format!("`{name}` draws random numbers without a fixed seed"),
                )
                .fix(Some(fix))
            })
            .collect()
    }
}

fn top_statement(ast: &NormalizedAst, node: NodeId) -> NodeId {
    let statements = ast.statements();
    std::iter::once(node)
        .chain(ast.ancestors(node))
        .find(|a| statements.contains(a))
        .unwrap_or(node)
}

fn seed_fix(ast: &NormalizedAst, source: &SourceText, rng: NodeId, seed: i64) -> QuickFix {
    let line = ast.node(top_statement(ast, rng)).span.start.line;
    let indent: String = source
        .line(line)
        .unwrap_or("")
        .chars()
        .take_while(|c| c.is_whitespace())
        .collect();
    let at = Pos::new(line, 1);
    QuickFix {
        title: format!("set a seed with `set.seed({seed})`"),
        edits: vec![TextEdit {
            range: Span::new(at, at),
            replacement: format!("{indent}set.seed({seed})\n"),
        }],
    }
}

/// Definitions that nothing reads, split by whether they were rebound.
fn unread_definitions(state: &AnalysisState, killed: bool) -> Vec<(usize, NodeId)> {
    let g = &state.graph;
    let mut out = Vec::new();
    for v in g.vertices() {
        if v.kind != VertexKind::VariableDefinition || g.super_definitions.contains(&v.id) {
            continue;
        }
        if g.killed.contains(&v.id) != killed || g.sources(v.id, EdgeLabel::Reads).next().is_some() {
            continue;
        }
        let Some(file) = state.file_of(v.id) else { continue };
        let ast = &state.asts[file];
        let node = ast.node(v.id);
        let assigned = node
            .parent
            .is_some_and(|p| matches!(ast.node(p).kind, NodeKind::Assignment { .. }));
        if node.kind == NodeKind::Parameter || !assigned {
            continue;
        }
        out.push((file, v.id));
    }
    out
}

/// Remove an assignment whose right-hand side has no side effects.
fn removal_fix(ast: &NormalizedAst, source: &SourceText, assignment: NodeId) -> Option<QuickFix> {
    let node = ast.node(assignment);
    let rhs = ast.node(node.children[1]);
    if !(rhs.kind.is_literal() || rhs.kind == NodeKind::Symbol) {
        return None;
    }
    let in_block = match node.parent {
        None => true,
        Some(p) => p == ast.root() || matches!(ast.node(p).kind, NodeKind::ExpressionList { braced: true }),
    };
    if !in_block {
        return None;
    }
    let span = node.span;
    let alone = (span.start.line..=span.end.line).all(|l| {
        let text = source.line(l).unwrap_or("");
        text.chars().enumerate().all(|(i, c)| {
            let pos = Pos::new(l, i as u32 + 1);
            c.is_whitespace() || (pos >= span.start && pos < span.end)
        }) || trailing_comment_only(text, l, span)
    });
    let range = if !alone {
        span
    } else if span.end.line < source.line_count() {
        Span::new(Pos::new(span.start.line, 1), Pos::new(span.end.line + 1, 1))
    } else if span.start.line > 1 {
        let prev = span.start.line - 1;
        let prev_end = source.line(prev).map_or(0, |t| t.chars().count()) as u32 + 1;
        Span::new(Pos::new(prev, prev_end), source.end_pos())
    } else {
        Span::new(Pos::new(1, 1), source.end_pos())
    };
    Some(QuickFix {
        title: format!("remove `{}`", source.slice(span).unwrap_or("the assignment")),
        edits: vec![TextEdit {
            range,
            replacement: String::new(),
        }],
    })
}

fn trailing_comment_only(text: &str, line: u32, span: Span) -> bool {
    if span.end.line != line {
        return false;
    }
    let rest: String = text.chars().skip(span.end.col as usize - 1).collect();
    let before: String = text.chars().take(span.start.col as usize - 1).collect();
    before.trim().is_empty() && rest.trim_start().starts_with('#')
}

pub struct UnusedDefinition;

impl LintRule for UnusedDefinition {
    fn id(&self) -> &'static str {
        "unused-definition"
    }

    fn severity(&self) -> Severity {
        Severity::Info
    }

    fn check(&self, state: &AnalysisState, _: &LintConfig) -> Vec<Finding> {
        unread_definitions(state, false)
            .into_iter()
            .map(|(file, def)| {
                let ast = &state.asts[file];
                let assignment = ast.node(def).parent.expect("assigned definition");
                let name = &ast.node(def).lexeme;
                Finding::new(file, ast.node(assignment).span, format!("`{name}` is defined but never used"))
                    .fix(removal_fix(ast, state.source(file), assignment))
            })
            .collect()
    }
}

pub struct OverwrittenDefinition;

impl LintRule for OverwrittenDefinition {
    fn id(&self) -> &'static str {
        "overwritten-definition"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn check(&self, state: &AnalysisState, _: &LintConfig) -> Vec<Finding> {
        unread_definitions(state, true)
            .into_iter()
            .map(|(file, def)| {
                let ast = &state.asts[file];
                let assignment = ast.node(def).parent.expect("assigned definition");
                let name = &ast.node(def).lexeme;
                Finding::new(
                    file,
                    ast.node(assignment).span,
                    format!("`{name}` is overwritten before it is used"),
                )
                .fix(removal_fix(ast, state.source(file), assignment))
            })
            .collect()
    }
}

pub struct DeprecatedFunctions;

impl LintRule for DeprecatedFunctions {
    fn id(&self) -> &'static str {
        "deprecated-functions"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn check(&self, state: &AnalysisState, config: &LintConfig) -> Vec<Finding> {
        let mut out = Vec::new();
        for (file, ast) in state.asts.iter().enumerate() {
            for n in ast.nodes() {
                if n.kind != NodeKind::FunctionCall || state.graph.targets(n.id, EdgeLabel::Calls).next().is_some() {
                    continue;
                }
                let Some(name) = ast.call_name(n.id) else { continue };
                if config.deprecated.iter().any(|d| d == name) {
                    let callee = ast.node(n.children[0]).span;
                    out.push(Finding::new(file, callee, format!("`{name}` is deprecated")));
                }
            }
        }
        out
    }
}

pub struct DeadCode;

impl LintRule for DeadCode {
    fn id(&self) -> &'static str {
        "dead-code"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn check(&self, state: &AnalysisState, _: &LintConfig) -> Vec<Finding> {
        let mut ranges: BTreeMap<usize, Vec<Span>> = BTreeMap::new();
        for cfg in &state.cfgs.units {
            let dead = state.dead_blocks(cfg);
            for b in dead {
                let nodes = &cfg.blocks[&b].nodes;
                let Some(first) = nodes.first() else { continue };
                let Some(file) = state.file_of(*first) else { continue };
                let ast = &state.asts[file];
                let span = nodes
                    .iter()
                    .map(|n| ast.node(*n).span)
                    .reduce(|a, b| a.cover(&b))
                    .expect("non-empty");
                ranges.entry(file).or_default().push(span);
            }
        }
        let mut out = Vec::new();
        for (file, mut spans) in ranges {
            spans.sort();
            let mut merged: Vec<Span> = Vec::new();
            for s in spans {
                match merged.last_mut() {
                    Some(m) if s.start.line <= m.end.line + 1 => *m = m.cover(&s),
                    _ => merged.push(s),
                }
            }
            for s in merged {
                out.push(Finding::new(file, s, "this code can never run").certainty(Certainty::Approximate));
            }
        }
        out
    }
}
