use std::fmt;

use serde::{Deserialize, Serialize};

use super::parser::{Arg, Expr, ExprKind, SyntaxTree};
use super::source::Span;
use super::{AssignOp, IndexOp, NamespaceOp};

/// Identifier of a node in a [`NormalizedAst`]. Ids are assigned in
/// post-order and are dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum NodeKind {
    Number { value: f64, integer: bool },
    StringLit { value: String },
    Logical { value: bool },
    Null,
    Symbol,
    Parameter,
    Argument { name: Option<String> },
    FunctionCall,
    FunctionDefinition,
    BinaryOp { op: String },
    UnaryOp { op: String },
    Assignment { op: AssignOp },
    If,
    For,
    While,
    Repeat,
    Break,
    Next,
    ExpressionList { braced: bool },
    Index { op: IndexOp },
    Namespace { op: NamespaceOp },
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Number { .. } => "Number",
            NodeKind::StringLit { .. } => "String",
            NodeKind::Logical { .. } => "Logical",
            NodeKind::Null => "Null",
            NodeKind::Symbol => "Symbol",
            NodeKind::Parameter => "Parameter",
            NodeKind::Argument { .. } => "Argument",
            NodeKind::FunctionCall => "FunctionCall",
            NodeKind::FunctionDefinition => "FunctionDefinition",
            NodeKind::BinaryOp { .. } => "BinaryOp",
            NodeKind::UnaryOp { .. } => "UnaryOp",
            NodeKind::Assignment { .. } => "Assignment",
            NodeKind::If => "If",
            NodeKind::For => "For",
            NodeKind::While => "While",
            NodeKind::Repeat => "Repeat",
            NodeKind::Break => "Break",
            NodeKind::Next => "Next",
            NodeKind::ExpressionList { .. } => "ExpressionList",
            NodeKind::Index { .. } => "Index",
            NodeKind::Namespace { .. } => "Namespace",
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(
            self,
            NodeKind::Number { .. }
                | NodeKind::StringLit { .. }
                | NodeKind::Logical { .. }
                | NodeKind::Null
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub lexeme: String,
    pub span: Span,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// Desugared syntax tree whose nodes carry dense post-order ids.
///
/// Ids start at `offset`, which lets several files of one project share a
/// single id space.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAst {
    origin: String,
    offset: u32,
    nodes: Vec<Node>,
    root: NodeId,
}

impl NormalizedAst {
    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    /// One past the largest id.
    pub fn id_end(&self) -> u32 {
        self.offset + self.nodes.len() as u32
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 >= self.offset && id.0 < self.id_end()
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        if !self.contains(id) {
            return None;
        }
        self.nodes.get((id.0 - self.offset) as usize)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        self.get(id)
            .unwrap_or_else(|| panic!("node {id} is not part of {}", self.origin))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    /// Top-level expressions of the root list.
    pub fn statements(&self) -> &[NodeId] {
        &self.node(self.root).children
    }

    /// All ids in the subtree rooted at `id` (inclusive).
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.node(n).children.iter().copied());
        }
        out.sort();
        out
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.node(id).parent, move |p| self.node(*p).parent)
    }

    pub fn is_ancestor(&self, ancestor: NodeId, id: NodeId) -> bool {
        self.ancestors(id).any(|a| a == ancestor)
    }

    /// For a call, the callee name (the namespace part is dropped).
    pub fn call_name(&self, call: NodeId) -> Option<&str> {
        let node = self.get(call)?;
        if node.kind != NodeKind::FunctionCall {
            return None;
        }
        let callee = self.node(*node.children.first()?);
        match callee.kind {
            NodeKind::Symbol => Some(&callee.lexeme),
            NodeKind::Namespace { .. } => Some(&self.node(callee.children[1]).lexeme),
            _ => None,
        }
    }

    /// Argument nodes of a call or index expression.
    pub fn call_args(&self, call: NodeId) -> &[NodeId] {
        let node = self.node(call);
        match node.kind {
            NodeKind::FunctionCall | NodeKind::Index { .. } => &node.children[1..],
            _ => &[],
        }
    }

    /// The value expression of an argument node, if it is not empty.
    pub fn arg_value(&self, arg: NodeId) -> Option<NodeId> {
        let node = self.node(arg);
        match node.kind {
            NodeKind::Argument { .. } => node.children.first().copied(),
            _ => Some(arg),
        }
    }

    pub fn arg_name(&self, arg: NodeId) -> Option<&str> {
        match &self.node(arg).kind {
            NodeKind::Argument { name } => name.as_deref(),
            _ => None,
        }
    }

    /// Indented dump, one node per line, used by the REPL.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_into(self.root, 0, &mut out);
        out
    }

    fn dump_into(&self, id: NodeId, depth: usize, out: &mut String) {
        let n = self.node(id);
        let detail = match &n.kind {
            NodeKind::BinaryOp { op } | NodeKind::UnaryOp { op } => format!(" {op}"),
            NodeKind::Assignment { op } => format!(" {}", op.as_str()),
            NodeKind::Argument { name: Some(name) } => format!(" {name}="),
            _ if !n.lexeme.is_empty() => format!(" {}", n.lexeme),
            _ => String::new(),
        };
        out.push_str(&format!(
            "{}[{}] {}{} @{}\n",
            "  ".repeat(depth),
            n.id,
            n.kind.name(),
            detail,
            n.span
        ));
        for c in &n.children {
            self.dump_into(*c, depth + 1, out);
        }
    }
}

/// Desugar a syntax tree and assign post-order ids starting at 0.
pub fn normalize(tree: &SyntaxTree, origin: &str) -> NormalizedAst {
    normalize_with_offset(tree, origin, 0)
}

/// Like [`normalize`] but ids start at `offset`.
pub fn normalize_with_offset(tree: &SyntaxTree, origin: &str, offset: u32) -> NormalizedAst {
    let mut b = Builder {
        offset,
        nodes: Vec::new(),
    };
    let children: Vec<NodeId> = tree.exprs.iter().map(|e| b.expr(e)).collect();
    let root = b.push(
        NodeKind::ExpressionList { braced: false },
        String::new(),
        tree.span,
        children,
    );
    NormalizedAst {
        origin: origin.to_string(),
        offset,
        nodes: b.nodes,
        root,
    }
}

struct Builder {
    offset: u32,
    nodes: Vec<Node>,
}

impl Builder {
    fn push(&mut self, kind: NodeKind, lexeme: String, span: Span, children: Vec<NodeId>) -> NodeId {
        let id = NodeId(self.offset + self.nodes.len() as u32);
        for c in &children {
            self.nodes[(c.0 - self.offset) as usize].parent = Some(id);
        }
        self.nodes.push(Node {
            id,
            kind,
            lexeme,
            span,
            children,
            parent: None,
        });
        id
    }

    fn symbol(&mut self, name: &str, span: Span) -> NodeId {
        self.push(NodeKind::Symbol, name.to_string(), span, vec![])
    }

    fn arg(&mut self, arg: &Arg) -> NodeId {
        let children = arg.value.iter().map(|v| self.expr(v)).collect();
        self.push(
            NodeKind::Argument {
                name: arg.name.clone(),
            },
            arg.name.clone().unwrap_or_default(),
            arg.span,
            children,
        )
    }

    /// Wrap an already-normalized expression as a positional argument.
    fn positional(&mut self, value: NodeId) -> NodeId {
        let span = self.nodes[(value.0 - self.offset) as usize].span;
        self.push(NodeKind::Argument { name: None }, String::new(), span, vec![value])
    }

    fn callee_lexeme(callee: &Expr) -> String {
        match &callee.kind {
            ExprKind::Ident(n) => n.clone(),
            ExprKind::Namespace { pkg, op, name, .. } => format!("{pkg}{}{name}", op.as_str()),
            _ => String::new(),
        }
    }

    fn call(&mut self, callee: &Expr, piped: Option<&Expr>, args: &[Arg], span: Span) -> NodeId {
        let callee_id = self.expr(callee);
        let mut children = vec![callee_id];
        if let Some(lhs) = piped {
            let v = self.expr(lhs);
            children.push(self.positional(v));
        }
        for a in args {
            children.push(self.arg(a));
        }
        self.push(NodeKind::FunctionCall, Self::callee_lexeme(callee), span, children)
    }

    fn assignment(&mut self, op: AssignOp, target: &Expr, value: &Expr, span: Span) -> NodeId {
        let t = match &target.kind {
            ExprKind::Ident(name) => self.symbol(name, target.span),
            ExprKind::Str { text, value } => self.push(
                NodeKind::StringLit {
                    value: value.clone(),
                },
                text.clone(),
                target.span,
                vec![],
            ),
            // the parser rejects every other target
            _ => self.expr(target),
        };
        let v = self.expr(value);
        self.push(
            NodeKind::Assignment { op },
            op.as_str().to_string(),
            span,
            vec![t, v],
        )
    }

    fn expr(&mut self, e: &Expr) -> NodeId {
        let span = e.span;
        match &e.kind {
            ExprKind::Num {
                text,
                value,
                integer,
            } => self.push(
                NodeKind::Number {
                    value: *value,
                    integer: *integer,
                },
                text.clone(),
                span,
                vec![],
            ),
            ExprKind::Str { text, value } => self.push(
                NodeKind::StringLit {
                    value: value.clone(),
                },
                text.clone(),
                span,
                vec![],
            ),
            ExprKind::Bool(b) => self.push(
                NodeKind::Logical { value: *b },
                if *b { "TRUE" } else { "FALSE" }.to_string(),
                span,
                vec![],
            ),
            ExprKind::Null => self.push(NodeKind::Null, "NULL".into(), span, vec![]),
            ExprKind::Ident(name) => self.symbol(name, span),
            ExprKind::Paren(inner) => self.expr(inner),
            ExprKind::Call { callee, args } => self.call(callee, None, args, span),
            ExprKind::Pipe { lhs, rhs, .. } => match &rhs.kind {
                ExprKind::Call { callee, args } => self.call(callee, Some(lhs), args, span),
                _ => self.call(rhs, Some(lhs), &[], span),
            },
            ExprKind::Index { op, base, args } => {
                let mut children = vec![self.expr(base)];
                children.extend(args.iter().map(|a| self.arg(a)));
                self.push(
                    NodeKind::Index { op: *op },
                    op.as_str().to_string(),
                    span,
                    children,
                )
            }
            ExprKind::Field {
                base,
                name,
                name_span,
            } => {
                let b = self.expr(base);
                let f = self.symbol(name, *name_span);
                self.push(
                    NodeKind::Index { op: IndexOp::Dollar },
                    "$".into(),
                    span,
                    vec![b, f],
                )
            }
            ExprKind::Namespace {
                op,
                pkg,
                pkg_span,
                name,
                name_span,
            } => {
                let p = self.symbol(pkg, *pkg_span);
                let n = self.symbol(name, *name_span);
                self.push(
                    NodeKind::Namespace { op: *op },
                    op.as_str().to_string(),
                    span,
                    vec![p, n],
                )
            }
            ExprKind::Unary { op, operand } => {
                let o = self.expr(operand);
                self.push(NodeKind::UnaryOp { op: op.clone() }, op.clone(), span, vec![o])
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs);
                let r = self.expr(rhs);
                self.push(
                    NodeKind::BinaryOp { op: op.clone() },
                    op.clone(),
                    span,
                    vec![l, r],
                )
            }
            ExprKind::Assign { op, target, value } => self.assignment(*op, target, value, span),
            ExprKind::RightAssign {
                superassign,
                value,
                target,
            } => {
                let op = if *superassign {
                    AssignOp::Super
                } else {
                    AssignOp::Local
                };
                self.assignment(op, target, value, span)
            }
            ExprKind::Function { params, body } => {
                let mut children = Vec::new();
                for p in params {
                    let d: Vec<NodeId> = p.default.iter().map(|d| self.expr(d)).collect();
                    children.push(self.push(NodeKind::Parameter, p.name.clone(), p.span, d));
                }
                children.push(self.expr(body));
                self.push(
                    NodeKind::FunctionDefinition,
                    "function".into(),
                    span,
                    children,
                )
            }
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let mut children = vec![self.expr(cond), self.expr(then)];
                if let Some(o) = otherwise {
                    children.push(self.expr(o));
                }
                self.push(NodeKind::If, "if".into(), span, children)
            }
            ExprKind::For {
                var,
                var_span,
                seq,
                body,
            } => {
                let v = self.symbol(var, *var_span);
                let s = self.expr(seq);
                let b = self.expr(body);
                self.push(NodeKind::For, "for".into(), span, vec![v, s, b])
            }
            ExprKind::While { cond, body } => {
                let c = self.expr(cond);
                let b = self.expr(body);
                self.push(NodeKind::While, "while".into(), span, vec![c, b])
            }
            ExprKind::Repeat { body } => {
                let b = self.expr(body);
                self.push(NodeKind::Repeat, "repeat".into(), span, vec![b])
            }
            ExprKind::Break => self.push(NodeKind::Break, "break".into(), span, vec![]),
            ExprKind::Next => self.push(NodeKind::Next, "next".into(), span, vec![]),
            ExprKind::Block(exprs) => {
                let children = exprs.iter().map(|e| self.expr(e)).collect();
                self.push(
                    NodeKind::ExpressionList { braced: true },
                    "{".into(),
                    span,
                    children,
                )
            }
        }
    }
}

/// Structural equality ignoring ids and locations: kinds, lexemes and child
/// order.
pub fn isomorphic(a: &NormalizedAst, b: &NormalizedAst) -> bool {
    fn go(a: &NormalizedAst, x: NodeId, b: &NormalizedAst, y: NodeId) -> bool {
        let (nx, ny) = (a.node(x), b.node(y));
        nx.kind == ny.kind
            && nx.lexeme == ny.lexeme
            && nx.children.len() == ny.children.len()
            && nx
                .children
                .iter()
                .zip(&ny.children)
                .all(|(cx, cy)| go(a, *cx, b, *cy))
    }
    go(a, a.root(), b, b.root())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, SourceText};

    fn norm(s: &str) -> NormalizedAst {
        normalize(&parse(&SourceText::literal(s)).unwrap(), "<text>")
    }

    #[test]
    fn assignment_ids_are_post_order() {
        let ast = norm("x <- 2");
        assert_eq!(ast.node(NodeId(0)).kind, NodeKind::Symbol);
        assert_eq!(ast.node(NodeId(0)).lexeme, "x");
        assert!(matches!(ast.node(NodeId(1)).kind, NodeKind::Number { .. }));
        assert_eq!(
            ast.node(NodeId(2)).kind,
            NodeKind::Assignment { op: AssignOp::Local }
        );
        assert_eq!(ast.root(), NodeId(3));
        assert!(matches!(
            ast.node(ast.root()).kind,
            NodeKind::ExpressionList { braced: false }
        ));
    }

    #[test]
    fn right_assignment_is_flipped() {
        assert!(isomorphic(&norm("2 -> x"), &norm("x <- 2")));
        assert!(isomorphic(&norm("2 ->> x"), &norm("x <<- 2")));
    }

    #[test]
    fn pipes_become_calls() {
        assert!(isomorphic(&norm("a |> f(b)"), &norm("f(a, b)")));
        assert!(isomorphic(&norm("a %>% f(b)"), &norm("f(a, b)")));
        assert!(isomorphic(&norm("a %>% f"), &norm("f(a)")));
        assert!(isomorphic(
            &norm("d |> dplyr::filter(x > 1)"),
            &norm("dplyr::filter(d, x > 1)")
        ));
        assert!(!isomorphic(&norm("a |> f(b)"), &norm("f(b, a)")));
    }

    #[test]
    fn child_spans_nest() {
        let ast = norm("by_age <- data |>\n  dplyr::filter(age >= min_age)\nf <- function(a, b = 2) { a + b }");
        for n in ast.nodes() {
            for c in &n.children {
                assert!(n.span.contains(&ast.node(*c).span), "{n:?}");
                assert!(c.0 < n.id.0);
            }
        }
    }

    #[test]
    fn call_helpers() {
        let ast = norm("dplyr::filter(d, x)");
        let call = ast.statements()[0];
        assert_eq!(ast.call_name(call), Some("filter"));
        assert_eq!(ast.node(call).lexeme, "dplyr::filter");
        assert_eq!(ast.call_args(call).len(), 2);
    }

    #[test]
    fn offset_shifts_ids() {
        let tree = parse(&SourceText::literal("x <- 2")).unwrap();
        let ast = normalize_with_offset(&tree, "b.R", 10);
        assert_eq!(ast.root(), NodeId(13));
        assert!(ast.get(NodeId(2)).is_none());
        assert_eq!(ast.node(NodeId(10)).lexeme, "x");
    }
}
