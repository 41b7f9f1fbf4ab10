//! Indented rendering of the raw syntax tree for `:parse`.

use rdfg_core::syntax::{Arg, Expr, ExprKind, SyntaxTree};

pub fn render(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    for e in &tree.exprs {
        expr(e, 0, &mut out);
    }
    out
}

fn line(out: &mut String, depth: usize, text: &str, e: &Expr) {
    out.push_str(&format!("{}{} @{}\n", "  ".repeat(depth), text, e.span));
}

fn args(list: &[Arg], depth: usize, out: &mut String) {
    for a in list {
        let pad = "  ".repeat(depth);
        match (&a.name, &a.value) {
            (Some(n), Some(v)) => {
                out.push_str(&format!("{pad}{n} =\n"));
                expr(v, depth + 1, out);
            }
            (None, Some(v)) => expr(v, depth, out),
            (Some(n), None) => out.push_str(&format!("{pad}{n} = <empty>\n")),
            (None, None) => out.push_str(&format!("{pad}<empty>\n")),
        }
    }
}

fn expr(e: &Expr, depth: usize, out: &mut String) {
    let d = depth + 1;
    match &e.kind {
        ExprKind::Num { text, .. } => line(out, depth, &format!("num {text}"), e),
        ExprKind::Str { text, .. } => line(out, depth, &format!("str {text}"), e),
        ExprKind::Bool(b) => line(out, depth, if *b { "bool TRUE" } else { "bool FALSE" }, e),
        ExprKind::Null => line(out, depth, "null", e),
        ExprKind::Ident(name) => line(out, depth, &format!("ident {name}"), e),
        ExprKind::Call { callee, args: a } => {
            line(out, depth, "call", e);
            expr(callee, d, out);
            args(a, d, out);
        }
        ExprKind::Index { op, base, args: a } => {
            line(out, depth, &format!("index {}", op.as_str()), e);
            expr(base, d, out);
            args(a, d, out);
        }
        ExprKind::Field { base, name, .. } => {
            line(out, depth, &format!("field ${name}"), e);
            expr(base, d, out);
        }
        ExprKind::Namespace { op, pkg, name, .. } => {
            line(out, depth, &format!("ns {pkg}{}{name}", op.as_str()), e)
        }
        ExprKind::Unary { op, operand } => {
            line(out, depth, &format!("unary {op}"), e);
            expr(operand, d, out);
        }
        ExprKind::Binary { op, lhs, rhs } | ExprKind::Pipe { op, lhs, rhs } => {
            line(out, depth, &format!("binary {op}"), e);
            expr(lhs, d, out);
            expr(rhs, d, out);
        }
        ExprKind::Assign { op, target, value } => {
            line(out, depth, &format!("assign {}", op.as_str()), e);
            expr(target, d, out);
            expr(value, d, out);
        }
        ExprKind::RightAssign { superassign, value, target } => {
            line(out, depth, if *superassign { "assign ->>" } else { "assign ->" }, e);
            expr(value, d, out);
            expr(target, d, out);
        }
        ExprKind::Function { params, body } => {
            line(out, depth, "function", e);
            for p in params {
                out.push_str(&format!("{}param {}\n", "  ".repeat(d), p.name));
                if let Some(def) = &p.default {
                    expr(def, d + 1, out);
                }
            }
            expr(body, d, out);
        }
        ExprKind::If { cond, then, otherwise } => {
            line(out, depth, "if", e);
            expr(cond, d, out);
            expr(then, d, out);
            if let Some(o) = otherwise {
                expr(o, d, out);
            }
        }
        ExprKind::For { var, seq, body, .. } => {
            line(out, depth, &format!("for {var}"), e);
            expr(seq, d, out);
            expr(body, d, out);
        }
        ExprKind::While { cond, body } => {
            line(out, depth, "while", e);
            expr(cond, d, out);
            expr(body, d, out);
        }
        ExprKind::Repeat { body } => {
            line(out, depth, "repeat", e);
            expr(body, d, out);
        }
        ExprKind::Break => line(out, depth, "break", e),
        ExprKind::Next => line(out, depth, "next", e),
        ExprKind::Block(items) => {
            line(out, depth, "block", e);
            for i in items {
                expr(i, d, out);
            }
        }
        ExprKind::Paren(inner) => {
            line(out, depth, "paren", e);
            expr(inner, d, out);
        }
    }
}
