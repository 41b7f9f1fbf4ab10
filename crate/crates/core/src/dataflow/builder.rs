use std::collections::{BTreeMap, BTreeSet};

use super::env::Environment;
use super::graph::{DataflowGraph, EdgeLabel, VertexKind};
use super::registry::{is_builtin_constant, BuiltInRegistry, Semantics};
use crate::syntax::{AssignOp, IndexOp, NodeId, NodeKind, NormalizedAst};

/// Maps a `source("...")` literal, seen in the file with the given origin,
/// to the index of the unit it refers to.
pub type SourceResolver<'a> = dyn Fn(&str, &str) -> Option<usize> + 'a;

/// What a call site needs to know about a user function.
#[derive(Debug, Clone, Default)]
struct FnSummary {
    params: Vec<(String, NodeId)>,
    returns: BTreeSet<NodeId>,
    /// Frames of the defining environment (those outside the body frame).
    outer: usize,
    free_uses: BTreeSet<(NodeId, String)>,
    free_calls: BTreeSet<(NodeId, String)>,
    supers: BTreeSet<(String, NodeId)>,
}

#[derive(Debug, Clone)]
struct CallArg {
    name: Option<String>,
    value: Option<NodeId>,
}

#[derive(Default)]
struct LoopCtx {
    breaks: Vec<Environment>,
    nexts: Vec<Environment>,
}

struct Builder<'a> {
    units: &'a [&'a NormalizedAst],
    registry: &'a BuiltInRegistry,
    resolver: Option<&'a SourceResolver<'a>>,
    graph: DataflowGraph,
    functions: BTreeMap<NodeId, FnSummary>,
    call_args: BTreeMap<NodeId, Vec<CallArg>>,
    /// Summaries of the functions whose bodies are being analyzed.
    fn_stack: Vec<(NodeId, FnSummary)>,
    loops: Vec<LoopCtx>,
    sourcing: Vec<usize>,
    applying: Vec<NodeId>,
    fixpoint_cap: usize,
}

/// Build the dataflow graph of a single file.
pub fn build_dataflow(ast: &NormalizedAst, registry: &BuiltInRegistry) -> (DataflowGraph, Environment) {
    build_program_dataflow(&[ast], registry, None)
}

/// Build one graph for several files analyzed in order in a shared global
/// environment. `source("...")` calls that `resolver` maps to a unit are
/// inlined at the call.
pub fn build_program_dataflow(
    units: &[&NormalizedAst],
    registry: &BuiltInRegistry,
    resolver: Option<&SourceResolver<'_>>,
) -> (DataflowGraph, Environment) {
    let mut b = Builder {
        units,
        registry,
        resolver,
        graph: DataflowGraph::new(),
        functions: BTreeMap::new(),
        call_args: BTreeMap::new(),
        fn_stack: Vec::new(),
        loops: Vec::new(),
        sourcing: Vec::new(),
        applying: Vec::new(),
        fixpoint_cap: units.iter().map(|u| u.len()).sum::<usize>().max(2),
    };
    let mut env = Environment::new();
    for (i, unit) in units.iter().enumerate() {
        b.sourcing.push(i);
        for s in unit.statements() {
            b.eval(*s, &mut env);
        }
        b.sourcing.pop();
    }
    b.finish();
    (b.graph, env)
}

impl<'a> Builder<'a> {
    fn ast(&self, id: NodeId) -> &'a NormalizedAst {
        self.units
            .iter()
            .find(|u| u.contains(id))
            .copied()
            .unwrap_or_else(|| panic!("node {id} belongs to no unit"))
    }

    fn kind(&self, id: NodeId) -> &'a NodeKind {
        &self.ast(id).node(id).kind
    }

    fn children(&self, id: NodeId) -> &'a [NodeId] {
        &self.ast(id).node(id).children
    }

    fn lexeme(&self, id: NodeId) -> &'a str {
        &self.ast(id).node(id).lexeme
    }

    fn vertex(&mut self, id: NodeId, kind: VertexKind, name: Option<String>) {
        let span = self.ast(id).node(id).span;
        self.graph.add_vertex(id, kind, name, span);
    }

    fn call_vertex(&mut self, id: NodeId, name: &str) {
        self.vertex(id, VertexKind::FunctionCall, Some(name.to_string()));
    }

    fn edge(&mut self, from: NodeId, to: NodeId, label: EdgeLabel) {
        self.graph.add_edge(from, to, label);
    }

    fn eval(&mut self, id: NodeId, env: &mut Environment) -> Option<NodeId> {
        let kind = self.kind(id);
        match kind {
            NodeKind::Number { .. } | NodeKind::StringLit { .. } | NodeKind::Logical { .. } | NodeKind::Null => {
                let name = self.lexeme(id).to_string();
                self.vertex(id, VertexKind::Value, Some(name));
                Some(id)
            }
            NodeKind::Symbol => Some(self.use_symbol(id, env)),
            NodeKind::Argument { .. } => {
                let value = self.children(id).first().copied()?;
                self.eval(value, env)
            }
            NodeKind::Parameter => None,
            NodeKind::ExpressionList { .. } => {
                let mut last = None;
                for c in self.children(id) {
                    last = self.eval(*c, env);
                }
                last
            }
            NodeKind::FunctionCall => Some(self.call(id, env)),
            NodeKind::FunctionDefinition => Some(self.function(id, env)),
            NodeKind::BinaryOp { op } | NodeKind::UnaryOp { op } => {
                let operands: Vec<Option<NodeId>> = self.children(id).iter().map(|c| self.eval(*c, env)).collect();
                self.call_vertex(id, op);
                for v in operands.into_iter().flatten() {
                    self.edge(id, v, EdgeLabel::Argument);
                }
                Some(id)
            }
            NodeKind::Assignment { op } => Some(self.assignment(id, *op, env)),
            NodeKind::Index { op } => {
                let children = self.children(id);
                let base = self.eval(children[0], env);
                let mut args = Vec::new();
                if *op == IndexOp::Dollar {
                    let field = children[1];
                    let name = self.lexeme(field).to_string();
                    self.vertex(field, VertexKind::Value, Some(name));
                    args.push(field);
                } else {
                    for a in &children[1..] {
                        args.extend(self.eval(*a, env));
                    }
                }
                self.call_vertex(id, op.as_str());
                for v in base.into_iter().chain(args) {
                    self.edge(id, v, EdgeLabel::Argument);
                }
                Some(id)
            }
            NodeKind::Namespace { .. } => {
                let c = self.children(id);
                let name = format!("{}{}{}", self.lexeme(c[0]), self.lexeme(id), self.lexeme(c[1]));
                self.vertex(id, VertexKind::Value, Some(name));
                Some(id)
            }
            NodeKind::If => Some(self.if_expr(id, env)),
            NodeKind::While => Some(self.while_loop(id, env)),
            NodeKind::For => Some(self.for_loop(id, env)),
            NodeKind::Repeat => Some(self.repeat_loop(id, env)),
            NodeKind::Break | NodeKind::Next => {
                let is_break = matches!(kind, NodeKind::Break);
                self.call_vertex(id, if is_break { "break" } else { "next" });
                if let Some(l) = self.loops.last_mut() {
                    if is_break {
                        l.breaks.push(env.clone());
                    } else {
                        l.nexts.push(env.clone());
                    }
                }
                Some(id)
            }
        }
    }

    /// Record `name` as free in every function body it escapes from.
    fn note_free(&mut self, id: NodeId, name: &str, found_in: Option<usize>, callee: bool) {
        for (_, summary) in self.fn_stack.iter_mut() {
            if found_in.is_none_or(|f| f < summary.outer) {
                let entry = (id, name.to_string());
                if callee {
                    summary.free_calls.insert(entry);
                } else {
                    summary.free_uses.insert(entry);
                }
            }
        }
    }

    fn use_symbol(&mut self, id: NodeId, env: &Environment) -> NodeId {
        let name = self.lexeme(id).to_string();
        let binding = env.lookup(&name);
        if binding.is_none() && (is_builtin_constant(&name) || self.registry.is_known(&name)) {
            self.vertex(id, VertexKind::Value, Some(name));
            return id;
        }
        self.vertex(id, VertexKind::Use, Some(name.clone()));
        if let Some(b) = &binding {
            for d in &b.definitions {
                self.edge(id, *d, EdgeLabel::Reads);
            }
        }
        self.note_free(id, &name, binding.map(|b| b.frame), false);
        id
    }

    fn define(&mut self, name: &str, def: NodeId, op: AssignOp, env: &mut Environment) {
        if op == AssignOp::Super {
            self.graph.super_definitions.insert(def);
            if let Some((_, summary)) = self.fn_stack.last_mut() {
                summary.supers.insert((name.to_string(), def));
                let target = env.super_target(name, env.depth() - 1);
                env.define_in(target, name, def);
                return;
            }
            let killed = env.define_in(0, name, def);
            self.graph.killed.extend(killed.into_iter().filter(|k| *k != def));
            return;
        }
        let killed = env.define(name, def);
        self.graph.killed.extend(killed.into_iter().filter(|k| *k != def));
    }

    fn assignment(&mut self, id: NodeId, op: AssignOp, env: &mut Environment) -> NodeId {
        let c = self.children(id);
        let (target, value) = (c[0], c[1]);
        let v = self.eval(value, env);
        let name = match self.kind(target) {
            NodeKind::StringLit { value } => value.clone(),
            _ => self.lexeme(target).to_string(),
        };
        self.call_vertex(id, op.as_str());
        self.vertex(target, VertexKind::VariableDefinition, Some(name.clone()));
        if let Some(v) = v {
            self.edge(id, v, EdgeLabel::Reads);
            self.edge(id, v, EdgeLabel::Argument);
            self.edge(target, v, EdgeLabel::DefinedBy);
        }
        self.edge(id, target, EdgeLabel::Returns);
        self.edge(id, target, EdgeLabel::Argument);
        self.edge(target, id, EdgeLabel::DefinedBy);
        self.define(&name, target, op, env);
        id
    }

    fn call(&mut self, id: NodeId, env: &mut Environment) -> NodeId {
        let ast = self.ast(id);
        let children = self.children(id);
        let callee = children[0];
        let name = ast
            .call_name(id)
            .map(str::to_string)
            .unwrap_or_else(|| "anonymous".to_string());
        let mut callee_reads = BTreeSet::new();
        let mut builtin = false;
        match self.kind(callee) {
            NodeKind::Symbol => {
                let binding = env.lookup(&name);
                self.note_free(id, &name, binding.as_ref().map(|b| b.frame), true);
                match binding {
                    Some(b) => callee_reads = b.definitions,
                    None => builtin = true,
                }
            }
            NodeKind::Namespace { .. } => builtin = true,
            _ => {
                if let Some(v) = self.eval(callee, env) {
                    callee_reads.insert(v);
                }
            }
        }
        let info = self.registry.lookup(&name);
        let library_load = builtin && info.has(Semantics::LibraryLoad);

        let mut args = Vec::new();
        for (i, a) in children[1..].iter().enumerate() {
            let arg_name = ast.arg_name(*a).map(str::to_string);
            let value_node = ast.arg_value(*a);
            let value = match value_node {
                Some(v)
                    if library_load
                        && matches!(self.kind(v), NodeKind::Symbol)
                        && (arg_name.as_deref() == Some("package") || (arg_name.is_none() && i == 0)) =>
                {
                    let pkg = self.lexeme(v).to_string();
                    self.vertex(v, VertexKind::Value, Some(pkg));
                    Some(v)
                }
                Some(v) => self.eval(v, env),
                None => None,
            };
            args.push(CallArg { name: arg_name, value });
        }

        self.call_vertex(id, &name);
        for d in &callee_reads {
            self.edge(id, *d, EdgeLabel::Reads);
        }
        for a in &args {
            if let Some(v) = a.value {
                self.edge(id, v, EdgeLabel::Argument);
            }
        }
        self.call_args.insert(id, args);

        let targets = self.graph.resolve_call_targets(id).unwrap_or_default();
        for t in targets {
            self.apply_call(id, t, env);
        }

        if builtin {
            if name == "return" {
                if let Some((_, summary)) = self.fn_stack.last_mut() {
                    summary.returns.insert(id);
                }
            }
            if name == "source" {
                self.inline_source(id, env);
            }
        }
        id
    }

    fn inline_source(&mut self, call: NodeId, env: &mut Environment) {
        let Some(resolver) = self.resolver else { return };
        let ast = self.ast(call);
        let Some(first) = ast.call_args(call).first() else { return };
        let Some(v) = ast.arg_value(*first) else { return };
        let NodeKind::StringLit { value } = self.kind(v) else { return };
        let Some(unit) = resolver(ast.origin(), value) else { return };
        if unit >= self.units.len() || self.sourcing.contains(&unit) {
            return;
        }
        self.sourcing.push(unit);
        let target = self.units[unit];
        for s in target.statements() {
            self.eval(*s, env);
        }
        self.sourcing.pop();
    }

    /// Link `call` to the user function `def`: parameter bindings, returned
    /// values, and the function's free names and `<<-` effects resolved in
    /// the caller's environment.
    fn apply_call(&mut self, call: NodeId, def: NodeId, env: &mut Environment) {
        self.edge(call, def, EdgeLabel::Calls);
        if self.applying.contains(&def) {
            return;
        }
        let Some(summary) = self.functions.get(&def).cloned() else {
            return;
        };
        self.applying.push(def);
        let args = self.call_args.get(&call).cloned().unwrap_or_default();
        for (param, value) in match_arguments(&summary.params, &args) {
            self.edge(param, value, EdgeLabel::DefinedByOnCall);
        }
        for r in &summary.returns {
            self.edge(call, *r, EdgeLabel::Returns);
        }
        for (use_id, name) in &summary.free_uses {
            if let Some(b) = env.lookup_within(name, summary.outer) {
                for d in b.definitions {
                    self.edge(*use_id, d, EdgeLabel::Reads);
                }
            }
        }
        for (inner, name) in &summary.free_calls {
            if let Some(b) = env.lookup_within(name, summary.outer) {
                for d in b.definitions {
                    self.edge(*inner, d, EdgeLabel::Reads);
                }
                let targets = self.graph.resolve_call_targets(*inner).unwrap_or_default();
                for t in targets {
                    self.apply_call(*inner, t, env);
                }
            }
        }
        for (name, d) in &summary.supers {
            let frame = env.super_target(name, summary.outer);
            env.add_in(frame, name, *d);
        }
        self.applying.pop();
    }

    fn function(&mut self, id: NodeId, env: &Environment) -> NodeId {
        self.vertex(id, VertexKind::FunctionDefinition, Some("function".into()));
        let children = self.children(id);
        let (params, body) = children.split_at(children.len() - 1);
        let mut body_env = env.clone();
        body_env.push_frame();
        let outer = env.depth();
        self.fn_stack.push((
            id,
            FnSummary {
                outer,
                ..FnSummary::default()
            },
        ));
        let saved_loops = std::mem::take(&mut self.loops);
        let mut bound = Vec::new();
        for p in params {
            let name = self.lexeme(*p).to_string();
            self.vertex(*p, VertexKind::VariableDefinition, Some(name.clone()));
            bound.push((name.clone(), *p));
            match self.children(*p).first() {
                Some(default) => {
                    if let Some(v) = self.eval(*default, &mut body_env) {
                        self.edge(*p, v, EdgeLabel::DefinedBy);
                    }
                }
                None => self.edge(*p, id, EdgeLabel::DefinedBy),
            }
            body_env.define(&name, *p);
        }
        let result = self.eval(body[0], &mut body_env);
        self.loops = saved_loops;
        let (_, mut summary) = self.fn_stack.pop().expect("pushed above");
        summary.params = bound;
        summary.returns.extend(result);
        // keep what earlier passes (loop iterations) found
        if let Some(old) = self.functions.get(&id) {
            summary.free_uses.extend(old.free_uses.iter().cloned());
            summary.free_calls.extend(old.free_calls.iter().cloned());
            summary.supers.extend(old.supers.iter().cloned());
            summary.returns.extend(old.returns.iter().copied());
        }
        self.functions.insert(id, summary);
        id
    }

    fn if_expr(&mut self, id: NodeId, env: &mut Environment) -> NodeId {
        let c = self.children(id);
        let cond = self.eval(c[0], env);
        self.call_vertex(id, "if");
        if let Some(v) = cond {
            self.edge(id, v, EdgeLabel::Argument);
        }
        let mut then_env = env.clone();
        let then = self.eval(c[1], &mut then_env);
        let otherwise = match c.get(2) {
            Some(e) => self.eval(*e, env),
            None => None,
        };
        env.merge(&then_env);
        for r in then.into_iter().chain(otherwise) {
            self.edge(id, r, EdgeLabel::Returns);
        }
        id
    }

    /// Run `body` until neither the head environment nor the graph changes.
    /// `body` receives the head environment and returns the environment
    /// carried back to the head plus the exit environment.
    fn fixpoint(
        &mut self,
        entry: &Environment,
        mut body: impl FnMut(&mut Self, Environment) -> (Environment, Environment),
    ) -> Environment {
        let mut head = entry.clone();
        let mut exit = entry.clone();
        for _ in 0..self.fixpoint_cap {
            let revision = self.graph.revision();
            let (carried, out) = body(self, head.clone());
            exit = out;
            let next_head = entry.clone().merged(&carried);
            if next_head == head && revision == self.graph.revision() {
                break;
            }
            head = next_head;
        }
        exit
    }

    fn while_loop(&mut self, id: NodeId, env: &mut Environment) -> NodeId {
        let c = self.children(id);
        let (cond, body) = (c[0], c[1]);
        self.call_vertex(id, "while");
        *env = self.fixpoint(env, |b, mut head| {
            b.loops.push(LoopCtx::default());
            if let Some(v) = b.eval(cond, &mut head) {
                b.edge(id, v, EdgeLabel::Argument);
            }
            let mut body_env = head.clone();
            b.eval(body, &mut body_env);
            let ctx = b.loops.pop().expect("pushed above");
            for n in &ctx.nexts {
                body_env.merge(n);
            }
            let mut exit = head;
            for e in &ctx.breaks {
                exit.merge(e);
            }
            (body_env, exit)
        });
        id
    }

    fn for_loop(&mut self, id: NodeId, env: &mut Environment) -> NodeId {
        let c = self.children(id);
        let (var, seq, body) = (c[0], c[1], c[2]);
        let s = self.eval(seq, env);
        let name = self.lexeme(var).to_string();
        self.call_vertex(id, "for");
        self.vertex(var, VertexKind::VariableDefinition, Some(name.clone()));
        if let Some(s) = s {
            self.edge(id, s, EdgeLabel::Argument);
            self.edge(var, s, EdgeLabel::DefinedBy);
        }
        self.edge(var, id, EdgeLabel::DefinedBy);
        let entry = env.clone();
        *env = self.fixpoint(&entry, |b, mut head| {
            b.loops.push(LoopCtx::default());
            b.define(&name, var, AssignOp::Local, &mut head);
            let mut body_env = head.clone();
            b.eval(body, &mut body_env);
            let ctx = b.loops.pop().expect("pushed above");
            for n in &ctx.nexts {
                body_env.merge(n);
            }
            let mut exit = head.merged(&entry);
            for e in &ctx.breaks {
                exit.merge(e);
            }
            (body_env, exit)
        });
        id
    }

    fn repeat_loop(&mut self, id: NodeId, env: &mut Environment) -> NodeId {
        let body = self.children(id)[0];
        self.call_vertex(id, "repeat");
        *env = self.fixpoint(env, |b, head| {
            b.loops.push(LoopCtx::default());
            let mut body_env = head.clone();
            b.eval(body, &mut body_env);
            let ctx = b.loops.pop().expect("pushed above");
            for n in &ctx.nexts {
                body_env.merge(n);
            }
            let exit = match ctx.breaks.split_first() {
                Some((first, rest)) => rest.iter().fold(first.clone(), |acc, e| acc.merged(e)),
                None => head,
            };
            (body_env, exit)
        });
        id
    }

    fn finish(&mut self) {
        for unit in self.units {
            for n in unit.nodes() {
                if n.kind != NodeKind::FunctionCall || !self.graph.is_vertex(n.id) {
                    continue;
                }
                let resolved = self.graph.targets(n.id, EdgeLabel::Calls).next().is_some();
                let known = unit.call_name(n.id).is_some_and(|c| self.registry.is_known(c));
                if !resolved && !known {
                    self.graph.unresolved_calls.insert(n.id);
                }
            }
        }
    }
}

/// R-style argument matching: exact names first, then positions, with
/// leftovers going to `...`.
fn match_arguments(params: &[(String, NodeId)], args: &[CallArg]) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    let mut bound = vec![false; params.len()];
    let mut used = vec![false; args.len()];
    let dots = params.iter().position(|(n, _)| n == "...");
    for (ai, a) in args.iter().enumerate() {
        let Some(name) = &a.name else { continue };
        if let Some(pi) = params.iter().position(|(n, _)| n == name && n != "...") {
            if !bound[pi] {
                bound[pi] = true;
                used[ai] = true;
                out.extend(a.value.map(|v| (params[pi].1, v)));
            }
        }
    }
    let positional_limit = dots.unwrap_or(params.len());
    let mut next = 0;
    for (ai, a) in args.iter().enumerate() {
        if used[ai] || a.name.is_some() {
            continue;
        }
        while next < positional_limit && bound[next] {
            next += 1;
        }
        if next < positional_limit {
            bound[next] = true;
            used[ai] = true;
            out.extend(a.value.map(|v| (params[next].1, v)));
        }
    }
    if let Some(d) = dots {
        for (ai, a) in args.iter().enumerate() {
            if !used[ai] {
                out.extend(a.value.map(|v| (params[d].1, v)));
            }
        }
    }
    out
}
