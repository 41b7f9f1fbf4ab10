//! Typed queries against an analysis state and the dependency overview.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abstractval::result_vertex;
use crate::dataflow::{EdgeLabel, Semantics, VertexKind};
use crate::linter::{Linter, LintConfig};
use crate::slicer::Direction;
use crate::state::AnalysisState;
use crate::syntax::{NamespaceOp, NodeId, NodeKind, Span};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Query {
    Dependencies {},
    ResolveValue {
        criteria: Vec<String>,
    },
    DfShape {
        criterion: String,
    },
    StaticSlice {
        criteria: Vec<String>,
        #[serde(default)]
        direction: Option<String>,
    },
    Lint {
        #[serde(default)]
        rules: Option<Vec<String>>,
    },
}

impl Query {
    pub fn type_name(&self) -> &'static str {
        match self {
            Query::Dependencies {} => "dependencies",
            Query::ResolveValue { .. } => "resolve-value",
            Query::DfShape { .. } => "df-shape",
            Query::StaticSlice { .. } => "static-slice",
            Query::Lint { .. } => "lint",
        }
    }
}

/// A location in the original document (notebook cell and line when the
/// code came from one).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cell: Option<usize>,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Location {
    pub fn of(state: &AnalysisState, node: NodeId) -> Location {
        let file = state.file_of(node).expect("node in state");
        let span = state.asts[file].node(node).span;
        Self::of_span(state, file, span)
    }

    pub fn of_span(state: &AnalysisState, file: usize, span: Span) -> Location {
        let start = state.original(file, span.start);
        let end = state.original(file, span.end);
        Location {
            file: state.files[file].document.origin().to_string(),
            cell: start.cell,
            line: start.line,
            col: start.col,
            end_line: end.line,
            end_col: end.col,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryDependency {
    pub name: String,
    pub via: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDependency {
    pub function: String,
    /// Rendered abstract value of the path argument.
    pub path: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedCall {
    pub function: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visualization {
    pub function: String,
    pub location: Location,
    pub linked: Vec<LinkedCall>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyReport {
    pub libraries: Vec<LibraryDependency>,
    pub reads: Vec<FileDependency>,
    pub writes: Vec<FileDependency>,
    pub visualizations: Vec<Visualization>,
    /// Plot add-ons with no plot to draw on.
    pub unlinked: Vec<LinkedCall>,
}

impl DependencyReport {
    /// Indented tree for terminal output.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let at = |l: &Location| match l.cell {
            Some(c) => format!("cell {c}, line {}", l.line),
            None => format!("line {}", l.line),
        };
        out.push_str("Libraries\n");
        for l in &self.libraries {
            let _ = writeln!(out, "  {} (via {}) @ {}", l.name, l.via, at(&l.location));
        }
        for (title, list) in [("Reads", &self.reads), ("Writes", &self.writes)] {
            let _ = writeln!(out, "{title}");
            for f in list {
                let _ = writeln!(out, "  {}({}) @ {}", f.function, f.path, at(&f.location));
            }
        }
        out.push_str("Visualizations\n");
        for v in &self.visualizations {
            let _ = writeln!(out, "  {} @ {}", v.function, at(&v.location));
            for l in &v.linked {
                let _ = writeln!(out, "    {} @ {}", l.function, at(&l.location));
            }
        }
        if !self.unlinked.is_empty() {
            out.push_str("Unlinked\n");
            for l in &self.unlinked {
                let _ = writeln!(out, "  {} @ {}", l.function, at(&l.location));
            }
        }
        out
    }
}

fn is_builtin_call(state: &AnalysisState, id: NodeId, tag: Semantics) -> bool {
    state.forest().get(id).is_some_and(|n| n.kind == NodeKind::FunctionCall)
        && state.graph.is_vertex(id)
        && state.graph.targets(id, EdgeLabel::Calls).next().is_none()
        && state
            .forest()
            .call_name(id)
            .is_some_and(|c| state.options.registry.has(c, tag))
}

fn calls_with(state: &AnalysisState, tag: Semantics) -> Vec<NodeId> {
    state
        .forest()
        .nodes()
        .map(|n| n.id)
        .filter(|id| is_builtin_call(state, *id, tag))
        .collect()
}

fn name_of(state: &AnalysisState, id: NodeId) -> String {
    state.forest().call_name(id).unwrap_or("anonymous").to_string()
}

pub fn dependencies(state: &AnalysisState) -> DependencyReport {
    let forest = state.forest();
    let mut report = DependencyReport::default();
    let mut seen = BTreeSet::new();
    for n in forest.nodes() {
        let found = match &n.kind {
            NodeKind::FunctionCall if is_builtin_call(state, n.id, Semantics::LibraryLoad) => {
                let ast = forest.ast_of(n.id).expect("node in forest");
                let via = name_of(state, n.id);
                ast.call_args(n.id)
                    .iter()
                    .find(|a| matches!(ast.arg_name(**a), None | Some("package")))
                    .and_then(|a| ast.arg_value(*a))
                    .and_then(|v| match &ast.node(v).kind {
                        NodeKind::Symbol => Some(ast.node(v).lexeme.clone()),
                        NodeKind::StringLit { value } => Some(value.clone()),
                        _ => None,
                    })
                    .map(|pkg| (pkg, via))
            }
            NodeKind::Namespace { op } => {
                let via = match op {
                    NamespaceOp::Exported => "::",
                    NamespaceOp::Internal => ":::",
                };
                Some((forest.node(n.children[0]).lexeme.clone(), via.to_string()))
            }
            _ => None,
        };
        if let Some((name, via)) = found {
            if seen.insert((name.clone(), via.clone())) {
                report.libraries.push(LibraryDependency {
                    name,
                    via,
                    location: Location::of(state, n.id),
                });
            }
        }
    }
    for (tag, list) in [(Semantics::FileRead, &mut report.reads), (Semantics::FileWrite, &mut report.writes)] {
        for call in calls_with(state, tag) {
            let ast = forest.ast_of(call).expect("node in forest");
            let function = name_of(state, call);
            let role = state.options.registry.lookup(&function).path_argument.clone();
            let args = ast.call_args(call);
            let arg = role.and_then(|r| {
                args.iter()
                    .find(|a| ast.arg_name(**a) == Some(r.name.as_str()))
                    .or_else(|| args.iter().filter(|a| ast.arg_name(**a).is_none()).nth(r.position))
                    .copied()
            });
            let path = match arg {
                Some(a) => state.values.value(forest, &state.graph, a).to_string(),
                None => crate::abstractval::AbstractValue::Top.to_string(),
            };
            list.push(FileDependency {
                function,
                path,
                location: Location::of(state, call),
            });
        }
    }
    let (links, unlinked) = link_plot_addons(state);
    for create in calls_with(state, Semantics::PlotCreate) {
        report.visualizations.push(Visualization {
            function: name_of(state, create),
            location: Location::of(state, create),
            linked: links
                .get(&create)
                .into_iter()
                .flatten()
                .map(|a| LinkedCall {
                    function: name_of(state, *a),
                    location: Location::of(state, *a),
                })
                .collect(),
        });
    }
    report.unlinked = unlinked
        .into_iter()
        .map(|a| LinkedCall {
            function: name_of(state, a),
            location: Location::of(state, a),
        })
        .collect();
    report
}

/// Link plot add-on calls to the plot they draw on: operands of a `+`
/// chain link to the chain's plot, base-graphics add-ons to the closest
/// plot call that runs before them on every path. Returns the links and the
/// add-ons left without a plot.
pub fn link_plot_addons(state: &AnalysisState) -> (BTreeMap<NodeId, Vec<NodeId>>, Vec<NodeId>) {
    let forest = state.forest();
    let mut links: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut unlinked = Vec::new();
    let mut in_chain = BTreeSet::new();
    for n in forest.nodes() {
        if !is_plus(state, n.id) || n.parent.is_some_and(|p| is_plus(state, p)) {
            continue;
        }
        let mut leaves = Vec::new();
        chain_leaves(state, n.id, &mut leaves);
        let create = leaves.iter().find_map(|l| plot_origin(state, *l, 8));
        for l in leaves {
            if !is_builtin_call(state, l, Semantics::PlotAddon) {
                continue;
            }
            in_chain.insert(l);
            match create {
                Some(c) => links.entry(c).or_default().push(l),
                None => unlinked.push(l),
            }
        }
    }
    let creates = calls_with(state, Semantics::PlotCreate);
    for addon in calls_with(state, Semantics::PlotAddon) {
        if in_chain.contains(&addon) || state.options.registry.lookup(&name_of(state, addon)).package.is_some() {
            continue;
        }
        let ast = state.ast_of(addon).expect("node in state");
        let base_creates = creates.iter().filter(|c| {
            ast.contains(**c)
                && state.options.registry.lookup(&name_of(state, **c)).package.is_none()
                && state.cfgs.dominates(ast, **c, addon)
        });
        match base_creates.max_by_key(|c| ast.node(**c).span.start) {
            Some(c) => links.entry(*c).or_default().push(addon),
            None => unlinked.push(addon),
        }
    }
    for v in links.values_mut() {
        v.sort();
        v.dedup();
    }
    unlinked.sort();
    (links, unlinked)
}

fn is_plus(state: &AnalysisState, id: NodeId) -> bool {
    matches!(&state.forest().node(id).kind, NodeKind::BinaryOp { op } if op == "+")
}

fn chain_leaves(state: &AnalysisState, id: NodeId, out: &mut Vec<NodeId>) {
    if is_plus(state, id) {
        for c in &state.forest().node(id).children {
            chain_leaves(state, *c, out);
        }
    } else {
        out.push(id);
    }
}

/// The plot-creating call a chain operand stands for, following variables
/// (`p <- ggplot(...); p + geom_point()`).
fn plot_origin(state: &AnalysisState, id: NodeId, fuel: usize) -> Option<NodeId> {
    if fuel == 0 {
        return None;
    }
    if is_builtin_call(state, id, Semantics::PlotCreate) {
        return Some(id);
    }
    let forest = state.forest();
    if is_plus(state, id) {
        return plot_origin(state, forest.node(id).children[0], fuel - 1);
    }
    let v = state.graph.vertex(id)?;
    match v.kind {
        VertexKind::Use => state
            .graph
            .targets(id, EdgeLabel::Reads)
            .find_map(|d| plot_origin(state, d, fuel - 1)),
        VertexKind::VariableDefinition => {
            let parent = forest.node(id).parent?;
            let rhs = *forest.node(parent).children.get(1)?;
            let r = result_vertex(forest, &state.graph, rhs)?;
            plot_origin(state, r, fuel - 1)
        }
        _ => None,
    }
}

/// Answer a batch of queries given as JSON. Results are keyed by query
/// type; a repeated type gets a `#n` suffix. A query that fails to parse
/// or resolve yields an `error` entry without affecting the others.
pub fn run_queries(state: &AnalysisState, queries: &[Value]) -> serde_json::Map<String, Value> {
    let mut out = serde_json::Map::new();
    for (i, q) in queries.iter().enumerate() {
        let type_name = q.get("type").and_then(Value::as_str).unwrap_or("unknown").to_string();
        let key = if out.contains_key(&type_name) {
            format!("{type_name}#{i}")
        } else {
            type_name.clone()
        };
        let result = match serde_json::from_value::<Query>(q.clone()) {
            Ok(query) => run_query(state, &query),
            Err(e) => {
                let message = if Query::is_known(&type_name) {
                    format!("malformed `{type_name}` query: {e}")
                } else {
                    format!("unknown query type `{type_name}`")
                };
                json!({ "error": message })
            }
        };
        out.insert(key, result);
    }
    out
}

impl Query {
    fn is_known(name: &str) -> bool {
        matches!(name, "dependencies" | "resolve-value" | "df-shape" | "static-slice" | "lint")
    }
}

pub fn run_query(state: &AnalysisState, query: &Query) -> Value {
    let forest = state.forest();
    match query {
        Query::Dependencies {} => json!(dependencies(state)),
        Query::ResolveValue { criteria } => {
            let results: Vec<Value> = criteria
                .iter()
                .map(|c| match state.resolve(c) {
                    Ok(node) => {
                        let v = state.values.value(forest, &state.graph, node);
                        json!({ "criterion": c, "node": node, "value": v.to_string() })
                    }
                    Err(e) => json!({ "criterion": c, "error": e.to_string() }),
                })
                .collect();
            json!({ "results": results })
        }
        Query::DfShape { criterion } => match state.resolve(criterion) {
            Ok(node) => {
                let shape = state.values.shape(forest, &state.graph, node);
                json!({
                    "criterion": criterion,
                    "node": node,
                    "shape": shape.to_string(),
                    "columns": shape.columns,
                    "open": shape.open,
                    "rows": shape.rows,
                })
            }
            Err(e) => json!({ "criterion": criterion, "error": e.to_string() }),
        },
        Query::StaticSlice { criteria, direction } => {
            let direction = match direction.as_deref().map(str::parse::<Direction>) {
                None => Ok(Direction::Backward),
                Some(d) => d,
            };
            match direction {
                Ok(d) => match state.slice(criteria, d) {
                    Ok(r) => json!(r),
                    Err(e) => json!({ "error": e.to_string() }),
                },
                Err(e) => json!({ "error": e }),
            }
        }
        Query::Lint { rules } => {
            let config = LintConfig {
                only: rules.as_ref().map(|r| r.iter().cloned().collect()),
                ..LintConfig::default()
            };
            json!(Linter::default().run(state, &config))
        }
    }
}
