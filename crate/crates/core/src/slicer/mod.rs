//! Backward, forward (impact) slicing and chopping over the dataflow graph,
//! with control dependences taken from the syntax tree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::abstractval::result_vertex;
use crate::dataflow::{BuiltInRegistry, DataflowGraph, Semantics};
use crate::syntax::{reprint, reprint_lines, Forest, NodeId, NodeKind, NormalizedAst, SourceText};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SliceError {
    #[error("invalid criterion `{0}`")]
    Invalid(String),
    #[error("criterion does not match: {0}")]
    NoMatch(String),
}

/// A reference to one node: `$id`, `line:col` or `line@name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Criterion {
    Id(NodeId),
    Position { line: u32, col: u32 },
    Named { line: u32, name: String },
}

impl FromStr for Criterion {
    type Err = SliceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || SliceError::Invalid(s.to_string());
        if let Some(id) = s.strip_prefix('$') {
            return id.parse().map(|n| Criterion::Id(NodeId(n))).map_err(|_| bad());
        }
        if let Some((line, col)) = s.split_once(':') {
            return Ok(Criterion::Position {
                line: line.parse().map_err(|_| bad())?,
                col: col.parse().map_err(|_| bad())?,
            });
        }
        if let Some((line, name)) = s.split_once('@') {
            if name.is_empty() {
                return Err(bad());
            }
            return Ok(Criterion::Named {
                line: line.parse().map_err(|_| bad())?,
                name: name.to_string(),
            });
        }
        Err(bad())
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Id(id) => write!(f, "${}", id.0),
            Criterion::Position { line, col } => write!(f, "{line}:{col}"),
            Criterion::Named { line, name } => write!(f, "{line}@{name}"),
        }
    }
}

/// The node a criterion string selects in `ast`.
pub fn resolve_criterion(criterion: &str, ast: &NormalizedAst) -> Result<NodeId, SliceError> {
    let c: Criterion = criterion.parse()?;
    let found = match &c {
        Criterion::Id(id) => ast.contains(*id).then_some(*id),
        Criterion::Position { line, col } => ast
            .nodes()
            .filter(|n| n.span.start.line == *line && n.span.start.col == *col)
            .min_by_key(|n| (n.span.end, n.id))
            .map(|n| n.id),
        Criterion::Named { line, name } => ast
            .nodes()
            .filter(|n| n.kind == NodeKind::Symbol && n.span.start.line == *line && n.lexeme == *name)
            .min_by_key(|n| (n.span.start.col, n.id))
            .map(|n| n.id),
    };
    found.ok_or_else(|| SliceError::NoMatch(criterion.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Backward,
    Forward,
    Chop,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backward" => Ok(Direction::Backward),
            "forward" | "impact" => Ok(Direction::Forward),
            "chop" => Ok(Direction::Chop),
            other => Err(format!("unknown slice direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceResult {
    pub criteria: Vec<NodeId>,
    pub ids: BTreeSet<NodeId>,
    pub text: String,
    /// Reprinted line numbers per file origin.
    pub lines: BTreeMap<String, Vec<u32>>,
    pub direction: Direction,
}

/// Dependence relation of a graph: dataflow edges plus control edges from
/// every guarded vertex to the vertex that decides whether it runs.
pub struct Slicer<'a> {
    forest: Forest<'a>,
    graph: &'a DataflowGraph,
    registry: &'a BuiltInRegistry,
    deps: BTreeMap<NodeId, BTreeSet<NodeId>>,
    dependents: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl<'a> Slicer<'a> {
    pub fn new(forest: Forest<'a>, graph: &'a DataflowGraph, registry: &'a BuiltInRegistry) -> Self {
        let mut deps: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut dependents: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut add = |from: NodeId, to: NodeId| {
            deps.entry(from).or_default().insert(to);
            dependents.entry(to).or_default().insert(from);
        };
        for e in graph.edges() {
            add(e.from, e.to);
        }
        for (node, guard) in control_dependences(forest, graph) {
            add(node, guard);
        }
        Slicer {
            forest,
            graph,
            registry,
            deps,
            dependents,
        }
    }

    /// The vertex standing for `node`: itself, the value an argument
    /// wrapper or block evaluates to, or the nearest enclosing vertex.
    pub fn vertex_for(&self, node: NodeId) -> Option<NodeId> {
        if let Some(v) = result_vertex(self.forest, self.graph, node) {
            return Some(v);
        }
        self.forest.ancestors(node).find(|a| self.graph.is_vertex(*a))
    }

    fn closure(&self, start: &[NodeId], relation: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
        let mut seen: BTreeSet<NodeId> = start.iter().copied().collect();
        let mut queue: VecDeque<NodeId> = start.iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            for next in relation.get(&n).into_iter().flatten() {
                if seen.insert(*next) {
                    queue.push_back(*next);
                }
            }
        }
        seen
    }

    /// Everything the criteria depend on, plus the `library()` loads of
    /// packages whose functions the slice calls.
    pub fn backward(&self, criteria: &[NodeId]) -> BTreeSet<NodeId> {
        let mut ids = self.closure(criteria, &self.deps);
        let packages: BTreeSet<&str> = ids
            .iter()
            .filter_map(|id| self.forest.call_name(*id))
            .filter_map(|name| self.registry.lookup(name).package.as_deref())
            .collect();
        if packages.is_empty() {
            return ids;
        }
        let mut loads = Vec::new();
        for n in self.forest.nodes() {
            if !self.graph.is_vertex(n.id) || n.kind != NodeKind::FunctionCall {
                continue;
            }
            let Some(name) = self.forest.call_name(n.id) else { continue };
            if !self.registry.has(name, Semantics::LibraryLoad) {
                continue;
            }
            let ast = self.forest.ast_of(n.id).expect("node in forest");
            let pkg = ast
                .call_args(n.id)
                .first()
                .and_then(|a| ast.arg_value(*a))
                .map(|v| ast.node(v))
                .and_then(|v| match &v.kind {
                    NodeKind::StringLit { value } => Some(value.as_str()),
                    NodeKind::Symbol => Some(v.lexeme.as_str()),
                    _ => None,
                });
            if pkg.is_some_and(|p| packages.contains(p)) {
                loads.push(n.id);
            }
        }
        if !loads.is_empty() {
            ids.extend(self.closure(&loads, &self.deps));
        }
        ids
    }

    /// Everything that depends on the criteria.
    pub fn forward(&self, criteria: &[NodeId]) -> BTreeSet<NodeId> {
        self.closure(criteria, &self.dependents)
    }

    pub fn chop(&self, sources: &[NodeId], sinks: &[NodeId]) -> BTreeSet<NodeId> {
        let f = self.forward(sources);
        self.backward(sinks).intersection(&f).copied().collect()
    }

    pub fn slice(&self, criteria: &[NodeId], direction: Direction) -> BTreeSet<NodeId> {
        match direction {
            Direction::Backward => self.backward(criteria),
            Direction::Forward => self.forward(criteria),
            Direction::Chop => self.chop(criteria, criteria),
        }
    }

    /// Slice and reprint the kept code of every file, in file order.
    pub fn result(
        &self,
        criteria: Vec<NodeId>,
        ids: BTreeSet<NodeId>,
        direction: Direction,
        sources: &[&SourceText],
    ) -> SliceResult {
        let mut text = String::new();
        let mut lines = BTreeMap::new();
        for (ast, source) in self.forest.units().into_iter().zip(sources) {
            let keep: BTreeSet<NodeId> = ids.iter().copied().filter(|i| ast.contains(*i)).collect();
            if !keep.is_empty() {
                text.push_str(&reprint(ast, source, &keep));
                lines.insert(source.origin().to_string(), reprint_lines(ast, source, &keep).into_iter().collect());
            }
        }
        SliceResult {
            criteria,
            ids,
            text,
            lines,
            direction,
        }
    }
}

/// Pairs (guarded vertex, guard vertex). A vertex is guarded by its nearest
/// enclosing branch or loop body, or by its function definition. Branches
/// and `while` loops are guarded by their condition's value; `for` and
/// `repeat` by the loop vertex itself.
pub fn control_dependences(forest: Forest<'_>, graph: &DataflowGraph) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for v in graph.vertices() {
        let mut child = v.id;
        for a in forest.ancestors(v.id) {
            let n = forest.node(a);
            let guard = match n.kind {
                NodeKind::If | NodeKind::While if n.children[0] != child => {
                    Some(result_vertex(forest, graph, n.children[0]).unwrap_or(a))
                }
                NodeKind::For if n.children[2] == child => Some(a),
                NodeKind::Repeat => Some(a),
                NodeKind::FunctionDefinition if n.children.last() == Some(&child) => Some(a),
                _ => None,
            };
            if let Some(g) = guard {
                if g != v.id && graph.is_vertex(g) {
                    out.push((v.id, g));
                }
                break;
            }
            child = a;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::build_dataflow;
    use crate::syntax::parse_normalized;

    fn setup(code: &str) -> (NormalizedAst, SourceText, DataflowGraph) {
        let src = SourceText::literal(code);
        let (ast, _) = parse_normalized(&src, 0).unwrap();
        let (g, _) = build_dataflow(&ast, &BuiltInRegistry::default());
        (ast, src, g)
    }

    fn lines(code: &str, criterion: &str, direction: Direction) -> Vec<u32> {
        let (ast, _, g) = setup(code);
        let units = [&ast];
        let registry = BuiltInRegistry::default();
        let s = Slicer::new(Forest::new(&units), &g, &registry);
        let c = s.vertex_for(resolve_criterion(criterion, &ast).unwrap()).unwrap();
        let ids = s.slice(&[c], direction);
        ids.iter().flat_map(|i| ast.node(*i).span.lines()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    #[test]
    fn criteria_parse_and_resolve() {
        let (ast, _, _) = setup("x <- 2\ny <- 3\nprint(x)");
        assert_eq!(resolve_criterion("$2", &ast), Ok(NodeId(2)));
        let print = resolve_criterion("3@print", &ast).unwrap();
        assert_eq!(ast.node(print).lexeme, "print");
        assert_eq!(
            resolve_criterion("9:9", &ast).unwrap_err().to_string(),
            "criterion does not match: 9:9"
        );
        assert!(resolve_criterion("$99", &ast).is_err());
        assert!(matches!("x".parse::<Criterion>(), Err(SliceError::Invalid(_))));
        let first = resolve_criterion("1:1", &ast).unwrap();
        assert_eq!(ast.node(first).lexeme, "x");
    }

    #[test]
    fn backward_skips_independent_lines() {
        assert_eq!(lines("x <- 2\ny <- 3\nprint(x)", "3@print", Direction::Backward), vec![1, 3]);
        assert_eq!(lines("x <- 2\ny <- 3\nprint(x)", "$2", Direction::Backward), vec![1]);
    }

    #[test]
    fn forward_follows_uses() {
        assert_eq!(lines("x <- 2\nprint(x)", "1@x", Direction::Forward), vec![1, 2]);
        assert_eq!(lines("x <- 2\nprint(x)", "2@print", Direction::Forward), vec![2]);
    }

    #[test]
    fn control_closure_both_ways() {
        let code = "c <- 1\nx <- 0\nif (c > 0) {\n  x <- 5\n}\nprint(x)";
        assert_eq!(lines(code, "6@print", Direction::Backward), vec![1, 2, 3, 4, 6]);
        assert_eq!(lines(code, "1@c", Direction::Forward), vec![1, 3, 4, 5, 6]);
    }

    #[test]
    fn backward_pulls_library_of_used_package() {
        let code = "library(ggplot2)\nlibrary(stats4)\nggplot(d)";
        assert_eq!(lines(code, "3@ggplot", Direction::Backward), vec![1, 3]);
    }

    #[test]
    fn reprinted_slice_text() {
        let (ast, src, g) = setup("x <- 2\ny <- 3\nprint(x)");
        let units = [&ast];
        let registry = BuiltInRegistry::default();
        let s = Slicer::new(Forest::new(&units), &g, &registry);
        let c = s.vertex_for(resolve_criterion("3@print", &ast).unwrap()).unwrap();
        let ids = s.backward(&[c]);
        let r = s.result(vec![c], ids, Direction::Backward, &[&src]);
        assert_eq!(r.text, "x <- 2\nprint(x)\n");
        assert!(r.ids.contains(&c));
    }
}
