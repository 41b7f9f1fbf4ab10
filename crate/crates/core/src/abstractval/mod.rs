//! Abstract values (intervals, string sets, logical sets) and data-frame
//! shapes, computed by chaotic iteration over the dataflow graph.

mod shape;
mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub use shape::{csv_shape, DataFrameShape};
pub use value::{arith, compare, format_number, logic, unary, AbstractValue, Interval, StringSet, MAX_SET};

use crate::dataflow::{BuiltInRegistry, DataflowGraph, DfVerb, EdgeLabel, Semantics, VertexKind};
use crate::syntax::{Forest, NodeId, NodeKind};

#[derive(Debug, Clone)]
pub struct ValueOptions {
    /// Changes a definition may go through before its value is widened.
    pub fuel: usize,
    /// Base directory for relative file paths.
    pub root: Option<PathBuf>,
}

impl Default for ValueOptions {
    fn default() -> Self {
        ValueOptions { fuel: 2, root: None }
    }
}

/// Values and shapes of every vertex of a graph.
#[derive(Debug, Clone, Default)]
pub struct ValueAnalysis {
    values: BTreeMap<NodeId, AbstractValue>,
    shapes: BTreeMap<NodeId, DataFrameShape>,
    changes: BTreeMap<NodeId, usize>,
    rounds: usize,
}

impl ValueAnalysis {
    pub fn run(forest: Forest<'_>, graph: &DataflowGraph, registry: &BuiltInRegistry, options: &ValueOptions) -> Self {
        let solver = Solver {
            forest,
            graph,
            registry,
            options,
        };
        let mut out = ValueAnalysis::default();
        let cap = 64 + 8 * options.fuel;
        let ids: Vec<NodeId> = graph.vertices().map(|v| v.id).collect();
        for _ in 0..cap {
            out.rounds += 1;
            let mut changed = false;
            for id in &ids {
                let f = solver.value(*id, &out.values);
                let old = out.values.get(id).cloned().unwrap_or(AbstractValue::Bottom);
                let mut new = old.join(&f);
                if new == old {
                    continue;
                }
                if graph.vertex(*id).is_some_and(|v| v.kind == VertexKind::VariableDefinition) && !old.is_bottom() {
                    let count = out.changes.entry(*id).or_default();
                    *count += 1;
                    if *count >= options.fuel {
                        new = old.widen(&new);
                    }
                }
                out.values.insert(*id, new);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        for _ in 0..cap {
            let mut changed = false;
            for id in &ids {
                let Some(f) = solver.shape(*id, &out.values, &out.shapes) else {
                    continue;
                };
                let new = match out.shapes.get(id) {
                    Some(old) => old.join(&f),
                    None => f,
                };
                if out.shapes.get(id) != Some(&new) {
                    out.shapes.insert(*id, new);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        out
    }

    /// Value of a vertex, or of the vertex that carries the value of a
    /// non-vertex node (argument wrappers, blocks).
    pub fn value(&self, forest: Forest<'_>, graph: &DataflowGraph, node: NodeId) -> AbstractValue {
        match result_vertex(forest, graph, node) {
            Some(v) => self.values.get(&v).cloned().unwrap_or(AbstractValue::Top),
            None => AbstractValue::Top,
        }
    }

    pub fn vertex_value(&self, id: NodeId) -> Option<&AbstractValue> {
        self.values.get(&id)
    }

    pub fn shape(&self, forest: Forest<'_>, graph: &DataflowGraph, node: NodeId) -> DataFrameShape {
        result_vertex(forest, graph, node)
            .and_then(|v| self.shapes.get(&v).cloned())
            .unwrap_or_else(DataFrameShape::unknown)
    }

    /// Values of all vertices.
    pub fn values(&self) -> &BTreeMap<NodeId, AbstractValue> {
        &self.values
    }

    /// Rounds of the value iteration until it stabilized.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Most changes any single definition went through.
    pub fn max_changes(&self) -> usize {
        self.changes.values().copied().max().unwrap_or(0)
    }
}

/// Resolve the value of `node` with a fresh analysis.
pub fn resolve_value(forest: Forest<'_>, graph: &DataflowGraph, node: NodeId, fuel: usize) -> AbstractValue {
    let options = ValueOptions {
        fuel,
        ..ValueOptions::default()
    };
    ValueAnalysis::run(forest, graph, &BuiltInRegistry::default(), &options).value(forest, graph, node)
}

/// The vertex whose value `node` evaluates to.
pub fn result_vertex(forest: Forest<'_>, graph: &DataflowGraph, node: NodeId) -> Option<NodeId> {
    if graph.is_vertex(node) {
        return Some(node);
    }
    let n = forest.get(node)?;
    match n.kind {
        NodeKind::Argument { .. } => result_vertex(forest, graph, *n.children.first()?),
        NodeKind::ExpressionList { .. } => result_vertex(forest, graph, *n.children.last()?),
        _ => None,
    }
}

struct Solver<'a> {
    forest: Forest<'a>,
    graph: &'a DataflowGraph,
    registry: &'a BuiltInRegistry,
    options: &'a ValueOptions,
}

type Values = BTreeMap<NodeId, AbstractValue>;

impl Solver<'_> {
    fn get(&self, values: &Values, node: Option<NodeId>) -> AbstractValue {
        match node.and_then(|n| result_vertex(self.forest, self.graph, n)) {
            Some(v) => values.get(&v).cloned().unwrap_or(AbstractValue::Bottom),
            None => AbstractValue::Top,
        }
    }

    fn join_targets(&self, values: &Values, id: NodeId, label: EdgeLabel) -> AbstractValue {
        self.graph
            .targets(id, label)
            .fold(AbstractValue::Bottom, |acc, t| acc.join(&self.get(values, Some(t))))
    }

    fn value(&self, id: NodeId, values: &Values) -> AbstractValue {
        let Some(v) = self.graph.vertex(id) else {
            return AbstractValue::Top;
        };
        let node = self.forest.node(id);
        match v.kind {
            VertexKind::Value => literal(&node.kind, &node.lexeme, self.forest, id),
            VertexKind::FunctionDefinition => AbstractValue::Top,
            VertexKind::Use => {
                if self.graph.targets(id, EdgeLabel::Reads).next().is_none() {
                    return AbstractValue::Top;
                }
                self.join_targets(values, id, EdgeLabel::Reads)
            }
            VertexKind::VariableDefinition => self.definition(id, values),
            VertexKind::FunctionCall => self.call(id, values),
        }
    }

    fn definition(&self, id: NodeId, values: &Values) -> AbstractValue {
        let node = self.forest.node(id);
        if node.kind == NodeKind::Parameter {
            let mut acc = self.join_targets(values, id, EdgeLabel::DefinedByOnCall);
            let mut bound = self.graph.targets(id, EdgeLabel::DefinedByOnCall).next().is_some();
            for t in self.graph.targets(id, EdgeLabel::DefinedBy) {
                if self.graph.vertex(t).is_some_and(|v| v.kind != VertexKind::FunctionDefinition) {
                    acc = acc.join(&self.get(values, Some(t)));
                    bound = true;
                }
            }
            return if bound { acc } else { AbstractValue::Top };
        }
        let Some(parent) = node.parent.map(|p| self.forest.node(p)) else {
            return AbstractValue::Top;
        };
        match parent.kind {
            NodeKind::Assignment { .. } => self.get(values, Some(parent.children[1])),
            NodeKind::For => self.get(values, Some(parent.children[1])),
            _ => AbstractValue::Top,
        }
    }

    fn call(&self, id: NodeId, values: &Values) -> AbstractValue {
        let node = self.forest.node(id);
        let c = &node.children;
        match &node.kind {
            NodeKind::Assignment { .. } => self.get(values, Some(c[1])),
            NodeKind::BinaryOp { op } => {
                let a = self.get(values, Some(c[0]));
                let b = self.get(values, Some(c[1]));
                match op.as_str() {
                    "+" | "-" | "*" | "/" | "^" | ":" => arith(op, &a, &b),
                    "<" | ">" | "<=" | ">=" | "==" | "!=" => compare(op, &a, &b),
                    "&" | "&&" | "|" | "||" => logic(op, &a, &b),
                    _ => AbstractValue::Top,
                }
            }
            NodeKind::UnaryOp { op } => unary(op, &self.get(values, Some(c[0]))),
            NodeKind::If => {
                let cond = self.get(values, Some(c[0]));
                let then = || self.get(values, Some(c[1]));
                let otherwise = || c.get(2).map_or(AbstractValue::Top, |e| self.get(values, Some(*e)));
                if cond.is_bottom() {
                    return AbstractValue::Bottom;
                }
                match crate::controlflow::truth(&cond) {
                    Some(true) => then(),
                    Some(false) => otherwise(),
                    None => then().join(&otherwise()),
                }
            }
            NodeKind::FunctionCall => {
                if self.graph.targets(id, EdgeLabel::Calls).next().is_some() {
                    return self.join_targets(values, id, EdgeLabel::Returns);
                }
                let args: Vec<NodeId> = c[1..].to_vec();
                let name = self.forest.call_name(id).unwrap_or("");
                self.builtin(name, &args, values)
            }
            _ => AbstractValue::Top,
        }
    }

    fn builtin(&self, name: &str, args: &[NodeId], values: &Values) -> AbstractValue {
        let ast = self.forest.ast_of(args.first().copied().unwrap_or(NodeId(0)));
        let arg_name = |a: NodeId| ast.and_then(|t| t.arg_name(a));
        match name {
            "c" => {
                if args.is_empty() {
                    return AbstractValue::Top;
                }
                args.iter()
                    .fold(AbstractValue::Bottom, |acc, a| acc.join(&self.get(values, Some(*a))))
            }
            "return" | "invisible" | "identity" if args.len() == 1 => self.get(values, Some(args[0])),
            "paste" | "paste0" | "file.path" => {
                let mut sep = match name {
                    "paste" => " ".to_string(),
                    "paste0" => String::new(),
                    _ => "/".to_string(),
                };
                let mut parts = Vec::new();
                for a in args {
                    match arg_name(*a) {
                        Some("sep") if name != "paste0" => match self.get(values, Some(*a)).as_single_string() {
                            Some(s) => sep = s.to_string(),
                            None => return AbstractValue::Strings(StringSet::Any),
                        },
                        Some("collapse") | Some("fsep") => return AbstractValue::Strings(StringSet::Any),
                        _ => parts.push(self.get(values, Some(*a))),
                    }
                }
                concat(&parts, &sep)
            }
            "length" | "nrow" | "ncol" | "nchar" => AbstractValue::interval(0.0, f64::INFINITY, true),
            _ => AbstractValue::Top,
        }
    }

    /// `None` while an input has not been computed yet.
    fn shape(&self, id: NodeId, values: &Values, shapes: &BTreeMap<NodeId, DataFrameShape>) -> Option<DataFrameShape> {
        let get = |n: Option<NodeId>| -> Option<DataFrameShape> {
            match n.and_then(|n| result_vertex(self.forest, self.graph, n)) {
                Some(v) => shapes.get(&v).cloned(),
                None => Some(DataFrameShape::unknown()),
            }
        };
        let join_targets = |label: EdgeLabel| -> Option<DataFrameShape> {
            self.graph
                .targets(id, label)
                .filter_map(|t| shapes.get(&t).cloned())
                .reduce(|a, b| a.join(&b))
        };
        let Some(v) = self.graph.vertex(id) else {
            return Some(DataFrameShape::unknown());
        };
        let node = self.forest.node(id);
        match v.kind {
            VertexKind::Use => {
                if self.graph.targets(id, EdgeLabel::Reads).next().is_none() {
                    return Some(DataFrameShape::unknown());
                }
                join_targets(EdgeLabel::Reads)
            }
            VertexKind::VariableDefinition => match node.parent.map(|p| self.forest.node(p)) {
                Some(p) if matches!(p.kind, NodeKind::Assignment { .. }) && node.kind != NodeKind::Parameter => {
                    get(Some(p.children[1]))
                }
                _ => Some(DataFrameShape::unknown()),
            },
            VertexKind::FunctionCall => match &node.kind {
                NodeKind::Assignment { .. } => get(Some(node.children[1])),
                NodeKind::FunctionCall => {
                    if self.graph.targets(id, EdgeLabel::Calls).next().is_some() {
                        return join_targets(EdgeLabel::Returns);
                    }
                    self.builtin_shape(id, values, &get)
                }
                _ => Some(DataFrameShape::unknown()),
            },
            _ => Some(DataFrameShape::unknown()),
        }
    }

    fn builtin_shape(&self, id: NodeId, values: &Values, get: &dyn Fn(Option<NodeId>) -> Option<DataFrameShape>) -> Option<DataFrameShape> {
        let ast = self.forest.ast_of(id).expect("call in forest");
        let name = ast.call_name(id).unwrap_or("");
        let info = self.registry.lookup(name);
        let args = ast.call_args(id);
        let named = |n: &str| args.iter().copied().find(|a| ast.arg_name(*a) == Some(n));
        let positional: Vec<NodeId> = args.iter().copied().filter(|a| ast.arg_name(*a).is_none()).collect();
        if info.has(Semantics::DfConstructor) {
            return Some(self.construct(ast, args));
        }
        if name == "read.csv" {
            let role = info.path_argument.as_ref();
            let arg = role
                .and_then(|r| named(&r.name))
                .or_else(|| positional.get(role.map_or(0, |r| r.position)).copied());
            let path = self.get(values, arg);
            return Some(match path.as_single_string() {
                Some(p) => csv_shape(&self.resolve_path(ast.origin(), p)).unwrap_or_else(DataFrameShape::unknown),
                None => DataFrameShape::unknown(),
            });
        }
        let Some(verb) = info.df_verb() else {
            return Some(DataFrameShape::unknown());
        };
        let data = named(".data").or_else(|| named("x")).or_else(|| positional.first().copied());
        let Some(data) = data else {
            return Some(DataFrameShape::unknown());
        };
        let mut shape = get(Some(data))?;
        let rest: Vec<NodeId> = args.iter().copied().filter(|a| *a != data).collect();
        match verb {
            DfVerb::Passthrough => {}
            DfVerb::Filter => {
                shape.rows = shape.rows.map(|(_, hi)| (0.0, hi));
            }
            DfVerb::Mutate => {
                for a in rest {
                    match ast.arg_name(a) {
                        Some(n) if !n.starts_with('.') => shape.add_column(n),
                        Some(_) => {}
                        None => shape.open = true,
                    }
                }
            }
            DfVerb::Select => {
                let mut keep = Vec::new();
                let mut drop = Vec::new();
                for a in rest {
                    match ast.arg_value(a).map(|v| column_ref(ast, v)) {
                        Some(Some((name, false))) => keep.push(name),
                        Some(Some((name, true))) => drop.push(name),
                        _ => return Some(DataFrameShape { columns: Vec::new(), open: true, rows: shape.rows }),
                    }
                }
                match (keep.is_empty(), drop.is_empty()) {
                    (false, true) => {
                        shape.columns = keep;
                        shape.open = false;
                    }
                    (true, _) => {
                        for d in drop {
                            shape.remove_column(&d);
                        }
                    }
                    (false, false) => {
                        return Some(DataFrameShape { columns: Vec::new(), open: true, rows: shape.rows });
                    }
                }
            }
            DfVerb::LeftJoin => {
                let y = named("y").or_else(|| positional.get(1).copied());
                let other = get(y)?;
                let keys: Option<Vec<String>> = match named("by") {
                    Some(by) => match self.get(values, Some(by)) {
                        AbstractValue::Strings(StringSet::Finite(s)) if s.len() == 1 => {
                            Some(s.into_iter().collect())
                        }
                        _ => None,
                    },
                    None if !shape.open && !other.open => Some(
                        shape.columns.iter().filter(|c| other.has_column(c)).cloned().collect(),
                    ),
                    None => None,
                };
                let Some(keys) = keys else {
                    return Some(DataFrameShape {
                        columns: shape.columns,
                        open: true,
                        rows: shape.rows,
                    });
                };
                let mut columns: Vec<String> = shape.columns.iter().filter(|c| !keys.contains(c)).cloned().collect();
                for c in &other.columns {
                    if !keys.contains(c) && !columns.contains(c) {
                        columns.push(c.clone());
                    }
                }
                columns.extend(keys);
                shape = DataFrameShape {
                    columns,
                    open: shape.open || other.open,
                    rows: shape.rows,
                };
            }
        }
        Some(shape)
    }

    fn construct(&self, ast: &crate::syntax::NormalizedAst, args: &[NodeId]) -> DataFrameShape {
        let mut shape = DataFrameShape::exact(Vec::<String>::new(), None);
        let mut lengths = Vec::new();
        for a in args {
            match ast.arg_name(*a) {
                Some("stringsAsFactors") | Some("check.names") => continue,
                Some(n) => shape.add_column(n),
                None => shape.open = true,
            }
            lengths.push(ast.arg_value(*a).and_then(|v| literal_length(ast, v)));
        }
        if lengths.iter().all(Option::is_some) {
            let lengths: BTreeSet<usize> = lengths.into_iter().flatten().collect();
            let max = lengths.iter().max().copied().unwrap_or(0);
            if lengths.iter().all(|l| *l == 1 || *l == max) {
                shape.rows = Some((max as f64, max as f64));
            }
        }
        shape
    }

    fn resolve_path(&self, origin: &str, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        match &self.options.root {
            Some(root) => root.join(p),
            None => Path::new(origin).parent().unwrap_or(Path::new(".")).join(p),
        }
    }
}

/// `name` or `-name` (as a symbol or string) inside a select call.
fn column_ref(ast: &crate::syntax::NormalizedAst, v: NodeId) -> Option<(String, bool)> {
    let n = ast.node(v);
    match &n.kind {
        NodeKind::Symbol => Some((n.lexeme.clone(), false)),
        NodeKind::StringLit { value } => Some((value.clone(), false)),
        NodeKind::UnaryOp { op } if op == "-" => column_ref(ast, n.children[0]).map(|(c, _)| (c, true)),
        _ => None,
    }
}

/// Length of a literal scalar or a `c(...)` of literal scalars.
fn literal_length(ast: &crate::syntax::NormalizedAst, v: NodeId) -> Option<usize> {
    let n = ast.node(v);
    if n.kind.is_literal() && n.kind != NodeKind::Null {
        return Some(1);
    }
    if ast.call_name(v) == Some("c") {
        let args = ast.call_args(v);
        if args
            .iter()
            .all(|a| ast.arg_value(*a).is_some_and(|x| ast.node(x).kind.is_literal()))
        {
            return Some(args.len());
        }
    }
    None
}

fn literal(kind: &NodeKind, lexeme: &str, forest: Forest<'_>, id: NodeId) -> AbstractValue {
    match kind {
        NodeKind::Number { value, integer } => {
            let mut i = Interval::point(*value);
            i.integral = *integer || (value.is_finite() && value.fract() == 0.0);
            AbstractValue::Interval(i)
        }
        NodeKind::StringLit { value } => AbstractValue::string(value.clone()),
        NodeKind::Logical { value } => AbstractValue::logical(*value),
        NodeKind::Symbol => {
            let is_field = forest
                .get(id)
                .and_then(|n| n.parent)
                .map(|p| forest.node(p))
                .is_some_and(|p| matches!(p.kind, NodeKind::Index { .. }) && p.children.get(1) == Some(&id));
            if is_field {
                return AbstractValue::string(lexeme);
            }
            match lexeme {
                "T" => AbstractValue::logical(true),
                "F" => AbstractValue::logical(false),
                "Inf" => AbstractValue::interval(f64::INFINITY, f64::INFINITY, false),
                "pi" => AbstractValue::interval(std::f64::consts::PI, std::f64::consts::PI, false),
                _ => AbstractValue::Top,
            }
        }
        _ => AbstractValue::Top,
    }
}

/// String concatenation over the cartesian product of the parts.
fn concat(parts: &[AbstractValue], sep: &str) -> AbstractValue {
    let mut acc: BTreeSet<String> = BTreeSet::from([String::new()]);
    for (i, p) in parts.iter().enumerate() {
        let options: Vec<String> = match p {
            AbstractValue::Bottom => return AbstractValue::Bottom,
            AbstractValue::Strings(StringSet::Finite(s)) => s.iter().cloned().collect(),
            AbstractValue::Interval(iv) if iv.is_point() && iv.lo.is_finite() => vec![format_number(iv.lo, false)],
            AbstractValue::Logical(s) => s.iter().map(|b| if *b { "TRUE" } else { "FALSE" }.to_string()).collect(),
            _ => return AbstractValue::Strings(StringSet::Any),
        };
        let mut next = BTreeSet::new();
        for prefix in &acc {
            for o in &options {
                next.insert(if i == 0 { o.clone() } else { format!("{prefix}{sep}{o}") });
            }
        }
        if next.len() > MAX_SET {
            return AbstractValue::Strings(StringSet::Any);
        }
        acc = next;
    }
    AbstractValue::Strings(StringSet::Finite(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::build_dataflow;
    use crate::syntax::{parse_normalized, NormalizedAst, SourceText};

    fn analyze(code: &str) -> (NormalizedAst, DataflowGraph, ValueAnalysis) {
        let (ast, _) = parse_normalized(&SourceText::literal(code), 0).unwrap();
        let registry = BuiltInRegistry::default();
        let (g, _) = build_dataflow(&ast, &registry);
        let units = [&ast];
        let va = ValueAnalysis::run(Forest::new(&units), &g, &registry, &ValueOptions::default());
        (ast, g, va)
    }

    fn value_of(code: &str, name: &str, nth: usize) -> String {
        let (ast, g, va) = analyze(code);
        let id = ast.nodes().filter(|n| n.lexeme == name).nth(nth).unwrap().id;
        let units = [&ast];
        va.value(Forest::new(&units), &g, id).to_string()
    }

    #[test]
    fn literal_and_use() {
        assert_eq!(value_of("min_age <- 42\nprint(min_age)", "min_age", 1), "[42L, 42L]");
        assert_eq!(value_of("coln <- \"id\"\nf(coln)", "coln", 1), "\"id\"");
        assert_eq!(value_of("x <- 1.5", "x", 0), "[1.5, 1.5]");
    }

    #[test]
    fn branches_hull() {
        assert_eq!(value_of("if (c) x <- 1 else x <- 2\nprint(x)", "x", 2), "[1L, 2L]");
    }

    #[test]
    fn constant_conditions_prune() {
        assert_eq!(value_of("y <- if (TRUE) 1 else \"a\"\nprint(y)", "y", 1), "[1L, 1L]");
    }

    #[test]
    fn loop_widens() {
        let (ast, g, va) = analyze("x <- 0\nwhile (x < 20) x <- x + 1\nprint(x)");
        let units = [&ast];
        let last = ast.nodes().filter(|n| n.lexeme == "x").last().unwrap().id;
        assert_eq!(va.value(Forest::new(&units), &g, last).to_string(), "[0L, Inf]");
        assert!(va.max_changes() <= 2 + 3);
    }

    #[test]
    fn strings_and_paste() {
        assert_eq!(
            value_of("d <- \"data\"\np <- file.path(d, paste0(\"x\", 1, \".csv\"))\nprint(p)", "p", 1),
            "\"data/x1.csv\""
        );
    }

    #[test]
    fn user_functions_return() {
        assert_eq!(value_of("f <- function(a) a * 2\ny <- f(21)\nprint(y)", "y", 1), "[42L, 42L]");
    }

    #[test]
    fn shape_pipeline() {
        let code = "a <- data.frame(foo = c(1, 2, 3, 4), score = c(5, 6, 7, 8), id = c(1, 2, 3, 4))\n\
                    b <- data.frame(id = c(1, 2), age = c(30, 40))\n\
                    coln <- \"id\"\n\
                    res <- a |> mutate(level = score^2) |> left_join(b, by = coln) |> select(-age)\n\
                    print(res)";
        let (ast, g, va) = analyze(code);
        let units = [&ast];
        let res = ast.nodes().filter(|n| n.lexeme == "res").last().unwrap().id;
        assert_eq!(
            va.shape(Forest::new(&units), &g, res).to_string(),
            "a data frame with 4 rows, and known columns: foo, score, level, id"
        );
    }

    #[test]
    fn shape_filter_and_missing_csv() {
        let (ast, g, va) = analyze("d <- data.frame(a = c(1, 2, 3, 4))\ne <- filter(d, a > 1)\nm <- read.csv(\"missing.csv\")");
        let units = [&ast];
        let f = Forest::new(&units);
        let e = ast.nodes().find(|n| n.lexeme == "e").unwrap().id;
        assert_eq!(va.shape(f, &g, e).rows, Some((0.0, 4.0)));
        let m = ast.nodes().find(|n| n.lexeme == "m").unwrap().id;
        assert_eq!(va.shape(f, &g, m), DataFrameShape::unknown());
    }
}
