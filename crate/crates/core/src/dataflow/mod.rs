//! Dataflow graphs over normalized syntax trees.
//!
//! Vertices are syntax nodes (literals, uses, definitions, function
//! definitions and calls); edges record how they depend on each other.
//! Operators, `if` and loops are calls just like named functions.

mod builder;
mod env;
mod graph;
mod registry;

pub use builder::{build_dataflow, build_program_dataflow, SourceResolver};
pub use env::{Binding, Environment, Frame};
pub use graph::{DataflowError, DataflowGraph, Edge, EdgeLabel, Labels, Vertex, VertexKind};
pub use registry::{is_builtin_constant, ArgRole, BuiltInRegistry, DfVerb, FunctionInfo, Semantics};

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::syntax::{parse_normalized, NodeId, NormalizedAst, SourceText};

    fn build(code: &str) -> (NormalizedAst, DataflowGraph) {
        let (ast, _) = parse_normalized(&SourceText::literal(code), 0).unwrap();
        let (g, _) = build_dataflow(&ast, &BuiltInRegistry::default());
        (ast, g)
    }

    fn reads(g: &DataflowGraph, id: NodeId) -> BTreeSet<NodeId> {
        g.targets(id, EdgeLabel::Reads).collect()
    }

    fn symbol(ast: &NormalizedAst, name: &str, nth: usize) -> NodeId {
        ast.nodes().filter(|n| n.lexeme == name).nth(nth).unwrap().id
    }

    #[test]
    fn assignment_graph() {
        let (_, g) = build("x <- 2");
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 4);
        let edges: Vec<String> = g
            .edges()
            .map(|e| format!("{} -> {}: {}", e.from, e.to, e.labels))
            .collect();
        assert_eq!(
            edges,
            vec![
                "0 -> 1: defined-by",
                "0 -> 2: defined-by",
                "2 -> 0: returns, argument",
                "2 -> 1: reads, argument",
            ]
        );
        assert_eq!(g.vertex(NodeId(0)).unwrap().kind, VertexKind::VariableDefinition);
        assert_eq!(g.vertex(NodeId(1)).unwrap().kind, VertexKind::Value);
        assert_eq!(g.vertex(NodeId(2)).unwrap().kind, VertexKind::FunctionCall);
    }

    #[test]
    fn use_reads_its_definition() {
        let (ast, g) = build("x <- 1\ny <- x");
        let def = symbol(&ast, "x", 0);
        let use_ = symbol(&ast, "x", 1);
        assert_eq!(reads(&g, use_), BTreeSet::from([def]));
    }

    #[test]
    fn loop_use_reads_both_definitions() {
        let (ast, g) = build("x <- 0\nwhile (x < 20) x <- x + 1");
        let outer = symbol(&ast, "x", 0);
        let inner_def = symbol(&ast, "x", 2);
        let body_use = symbol(&ast, "x", 3);
        let cond_use = symbol(&ast, "x", 1);
        assert_eq!(reads(&g, body_use), BTreeSet::from([outer, inner_def]));
        assert_eq!(reads(&g, cond_use), BTreeSet::from([outer, inner_def]));
    }

    #[test]
    fn branches_merge_by_union() {
        let (ast, g) = build("if (c) x <- 1 else x <- 2\nprint(x)");
        let use_ = symbol(&ast, "x", 2);
        assert_eq!(
            reads(&g, use_),
            BTreeSet::from([symbol(&ast, "x", 0), symbol(&ast, "x", 1)])
        );
    }

    #[test]
    fn call_targets() {
        let (ast, g) = build("f <- function() 1\nf()");
        let call = ast.nodes().find(|n| n.lexeme == "f" && n.kind == crate::syntax::NodeKind::FunctionCall).unwrap().id;
        let def = ast.nodes().find(|n| n.kind == crate::syntax::NodeKind::FunctionDefinition).unwrap().id;
        assert_eq!(g.resolve_call_targets(call).unwrap(), BTreeSet::from([def]));
        assert!(g.unresolved_calls.is_empty());
        assert_eq!(g.resolve_call_targets(def), Err(DataflowError::NotACall(def)));
    }

    #[test]
    fn second_definition_shadows_first() {
        let (ast, g) = build("f <- function() 1\nf <- function() 2\nf()");
        let defs: Vec<NodeId> = ast
            .nodes()
            .filter(|n| n.kind == crate::syntax::NodeKind::FunctionDefinition)
            .map(|n| n.id)
            .collect();
        let call = ast.nodes().last().unwrap().children[2];
        assert_eq!(g.resolve_call_targets(call).unwrap(), BTreeSet::from([defs[1]]));
        assert!(g.killed.contains(&symbol(&ast, "f", 0)));
    }

    #[test]
    fn unknown_call_is_unresolved() {
        let (_, g) = build("g()");
        assert_eq!(g.unresolved_calls.len(), 1);
        let call = *g.unresolved_calls.iter().next().unwrap();
        assert!(g.resolve_call_targets(call).unwrap().is_empty());
        assert!(g.render_ascii().ends_with("unresolved: g<1>\n"));
    }

    #[test]
    fn parameters_bind_on_call() {
        let (ast, g) = build("f <- function(a, b = 2) a + b\nf(b = 3, 1)");
        let a = ast.nodes().find(|n| n.lexeme == "a" && n.kind == crate::syntax::NodeKind::Parameter).unwrap().id;
        let b = ast.nodes().find(|n| n.lexeme == "b" && n.kind == crate::syntax::NodeKind::Parameter).unwrap().id;
        let one = ast.nodes().find(|n| n.lexeme == "1").unwrap().id;
        let three = ast.nodes().find(|n| n.lexeme == "3").unwrap().id;
        assert_eq!(g.targets(a, EdgeLabel::DefinedByOnCall).collect::<Vec<_>>(), vec![one]);
        assert_eq!(g.targets(b, EdgeLabel::DefinedByOnCall).collect::<Vec<_>>(), vec![three]);
        // the call returns the body's result
        let plus = ast.nodes().find(|n| n.lexeme == "+").unwrap().id;
        let call = ast.nodes().last().unwrap().children[1];
        assert!(g.labels(call, plus).contains(EdgeLabel::Returns));
    }

    #[test]
    fn free_variables_resolve_at_call_site() {
        let (ast, g) = build("f <- function() y\ny <- 1\nf()");
        let use_ = symbol(&ast, "y", 0);
        assert_eq!(reads(&g, use_), BTreeSet::from([symbol(&ast, "y", 1)]));
    }

    #[test]
    fn super_assignment_reaches_caller() {
        let (ast, g) = build("count <- 0\ninc <- function() count <<- count + 1\ninc()\nprint(count)");
        let inner = symbol(&ast, "count", 1);
        let last = symbol(&ast, "count", 3);
        assert!(reads(&g, last).contains(&inner));
        assert!(g.super_definitions.contains(&inner));
    }

    #[test]
    fn library_argument_is_a_value() {
        let (ast, g) = build("library(ggplot2)");
        let pkg = symbol(&ast, "ggplot2", 0);
        assert_eq!(g.vertex(pkg).unwrap().kind, VertexKind::Value);
        assert!(g.unresolved_uses().next().is_none());
    }

    #[test]
    fn unresolved_use_footer() {
        let (_, g) = build("y <- x");
        let text = g.render_ascii();
        assert!(text.contains("unresolved: x<1>"));
        assert!(!text.contains("1 -> "));
    }

    #[test]
    fn empty_program() {
        let (_, g) = build("");
        assert_eq!(g.render_ascii(), "Vertices:\nEdges:\n");
    }

    #[test]
    fn for_loop_variable() {
        let (ast, g) = build("for (i in 1:3) print(i)");
        let var = symbol(&ast, "i", 0);
        let use_ = symbol(&ast, "i", 1);
        assert_eq!(reads(&g, use_), BTreeSet::from([var]));
        assert!(g.targets(var, EdgeLabel::DefinedBy).count() == 2);
    }

    #[test]
    fn break_exits_loop() {
        let (ast, g) = build("x <- 1\nrepeat {\n  x <- 2\n  break\n}\nprint(x)");
        let use_ = symbol(&ast, "x", 2);
        assert_eq!(reads(&g, use_), BTreeSet::from([symbol(&ast, "x", 1)]));
    }

    #[test]
    fn mermaid_lines() {
        let (_, g) = build("x <- 2");
        let m = g.render_mermaid();
        assert!(m.starts_with("flowchart TD\n"));
        assert_eq!(m.lines().count(), 1 + 3 + 4);
    }

    #[test]
    fn sourced_file_is_inlined() {
        let (a, _) = parse_normalized(&SourceText::new("a.R", "source(\"b.R\")\nprint(v)"), 0).unwrap();
        let (b, _) = parse_normalized(&SourceText::new("b.R", "v <- 1"), a.id_end()).unwrap();
        let resolver = |_: &str, p: &str| (p == "b.R").then_some(1);
        let (g, _) = build_program_dataflow(&[&a, &b], &BuiltInRegistry::default(), Some(&resolver));
        let use_ = a.nodes().find(|n| n.lexeme == "v").unwrap().id;
        let def = b.nodes().find(|n| n.lexeme == "v").unwrap().id;
        assert_eq!(reads(&g, use_), BTreeSet::from([def]));
    }
}
