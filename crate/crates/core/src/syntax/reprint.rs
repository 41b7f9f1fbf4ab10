use std::collections::BTreeSet;

use super::ast::{NodeId, NodeKind, NormalizedAst};
use super::source::{SourceText, Span};

/// Reconstruct source text for a set of kept nodes.
///
/// Emits, in original order, every line of each top-level statement that
/// contains a kept node. Control structures and function definitions with
/// braced bodies contribute their header and brace lines and are then
/// reprinted statement by statement, so the result parses. A function kept
/// without any marked body statement is emitted whole. A call counts
/// as kept only when the call node itself is: a kept argument alone does
/// not bring back the call around it.
pub fn reprint(ast: &NormalizedAst, source: &SourceText, keep: &BTreeSet<NodeId>) -> String {
    let mut out = String::new();
    for l in reprint_lines(ast, source, keep) {
        if let Some(text) = source.line(l) {
            out.push_str(text.trim_end());
            out.push('\n');
        }
    }
    out
}

/// The lines [`reprint`] emits.
pub fn reprint_lines(ast: &NormalizedAst, source: &SourceText, keep: &BTreeSet<NodeId>) -> BTreeSet<u32> {
    let mut marked = vec![false; ast.len()];
    let idx = |id: NodeId| (id.0 - ast.offset()) as usize;
    for n in ast.nodes() {
        let own = keep.contains(&n.id);
        let inner = n.kind != NodeKind::FunctionCall && n.children.iter().any(|c| marked[idx(*c)]);
        marked[idx(n.id)] = own || inner;
    }
    let mut lines = BTreeSet::new();
    for s in ast.statements() {
        visit(ast, source, *s, &marked, &mut lines);
    }
    lines
}

fn visit(ast: &NormalizedAst, source: &SourceText, id: NodeId, marked: &[bool], lines: &mut BTreeSet<u32>) {
    if !marked[(id.0 - ast.offset()) as usize] {
        return;
    }
    let node = ast.node(id);
    let mut body_stmts = Vec::new();
    nested_body_statements(ast, id, marked, &mut body_stmts);
    if body_stmts.is_empty() && !is_braced(ast, id) {
        lines.extend(node.span.lines());
        return;
    }
    let spans: Vec<Span> = body_stmts.iter().map(|s| ast.node(*s).span).collect();
    for l in node.span.lines() {
        if has_own_content(source, l, &spans) {
            lines.insert(l);
        }
    }
    for s in body_stmts {
        visit(ast, source, s, marked, lines);
    }
}

fn is_braced(ast: &NormalizedAst, id: NodeId) -> bool {
    matches!(ast.node(id).kind, NodeKind::ExpressionList { braced: true })
}

/// Braced bodies directly owned by a control structure or function
/// definition.
fn bodies(ast: &NormalizedAst, id: NodeId) -> Vec<NodeId> {
    let node = ast.node(id);
    let candidates: Vec<NodeId> = match node.kind {
        NodeKind::If => node.children[1..].to_vec(),
        NodeKind::While => vec![node.children[1]],
        NodeKind::For => vec![node.children[2]],
        NodeKind::Repeat => vec![node.children[0]],
        NodeKind::FunctionDefinition => node.children.last().copied().into_iter().collect(),
        _ => Vec::new(),
    };
    candidates.into_iter().filter(|b| is_braced(ast, *b)).collect()
}

/// Statements of the outermost braced bodies within `id`: those of `id`
/// itself when it is a braced block, else those found below it without
/// entering another body. Unmarked function bodies are left whole.
fn nested_body_statements(ast: &NormalizedAst, id: NodeId, marked: &[bool], out: &mut Vec<NodeId>) {
    if is_braced(ast, id) {
        out.extend(ast.node(id).children.iter().copied());
        return;
    }
    let node = ast.node(id);
    let mut owned = bodies(ast, id);
    if node.kind == NodeKind::FunctionDefinition {
        owned.retain(|b| marked[(b.0 - ast.offset()) as usize]);
    }
    for c in &node.children {
        if owned.contains(c) {
            out.extend(ast.node(*c).children.iter().copied());
        } else if !bodies(ast, id).contains(c) {
            nested_body_statements(ast, *c, marked, out);
        }
    }
}

/// Whether a line has code that is not part of any of `spans`. Trailing
/// comments do not count.
fn has_own_content(source: &SourceText, line: u32, spans: &[Span]) -> bool {
    let Some(text) = source.line(line) else {
        return false;
    };
    for (i, ch) in text.chars().enumerate() {
        if ch.is_whitespace() {
            continue;
        }
        let pos = super::Pos::new(line, i as u32 + 1);
        if spans.iter().any(|s| s.contains_pos(pos)) {
            continue;
        }
        return ch != '#';
    }
    false
}
