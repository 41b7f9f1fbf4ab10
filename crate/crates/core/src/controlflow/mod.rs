//! Compact control-flow graphs over basic blocks.
//!
//! Straight-line statements share a block; `if`, `while` and `for` get a
//! condition block with ⊤/⊥ successors. Every function body gets its own
//! graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::abstractval::AbstractValue;
use crate::syntax::{NodeId, NodeKind, NormalizedAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct BlockId(pub u32);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CfgLabel {
    Fallthrough,
    True,
    False,
    LoopBack,
}

impl CfgLabel {
    pub fn symbol(self) -> &'static str {
        match self {
            CfgLabel::Fallthrough => "",
            CfgLabel::True => "⊤",
            CfgLabel::False => "⊥",
            CfgLabel::LoopBack => "loop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BlockKind {
    Entry,
    Exit,
    Basic,
    /// Holds the condition of an `if`/`while`, or the `for` node itself
    /// (the "has next element" test).
    Condition { node: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub id: BlockId,
    pub kind: BlockKind,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CfgEdge {
    pub from: BlockId,
    pub to: BlockId,
    pub label: CfgLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cfg {
    /// The function whose body this graph describes; `None` for a file.
    pub function: Option<NodeId>,
    pub blocks: BTreeMap<BlockId, Block>,
    pub edges: BTreeSet<CfgEdge>,
    pub entry: BlockId,
    pub exit: BlockId,
}

impl Cfg {
    pub fn successors(&self, b: BlockId) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(move |e| e.from == b)
    }

    pub fn predecessors(&self, b: BlockId) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(move |e| e.to == b)
    }

    pub fn reachable(&self) -> BTreeSet<BlockId> {
        let mut seen = BTreeSet::from([self.entry]);
        let mut queue = VecDeque::from([self.entry]);
        while let Some(b) = queue.pop_front() {
            for e in self.successors(b) {
                if seen.insert(e.to) {
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }

    /// Blocks that cannot be reached from the entry.
    pub fn dead_blocks(&self) -> BTreeSet<BlockId> {
        let live = self.reachable();
        self.blocks.keys().filter(|b| !live.contains(b)).copied().collect()
    }

    /// Block holding `node` directly (statements and conditions only).
    pub fn block_holding(&self, node: NodeId) -> Option<BlockId> {
        self.blocks
            .values()
            .find(|b| b.nodes.contains(&node))
            .map(|b| b.id)
    }

    /// Dominator sets over the reachable blocks.
    pub fn dominators(&self) -> BTreeMap<BlockId, BTreeSet<BlockId>> {
        let live = self.reachable();
        let mut dom: BTreeMap<BlockId, BTreeSet<BlockId>> = live
            .iter()
            .map(|b| {
                let init = if *b == self.entry {
                    BTreeSet::from([*b])
                } else {
                    live.clone()
                };
                (*b, init)
            })
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for b in &live {
                if *b == self.entry {
                    continue;
                }
                let mut preds = self.predecessors(*b).map(|e| e.from).filter(|p| live.contains(p));
                let Some(first) = preds.next() else { continue };
                let mut new = dom[&first].clone();
                for p in preds {
                    new = new.intersection(&dom[&p]).copied().collect();
                }
                new.insert(*b);
                if new != dom[b] {
                    dom.insert(*b, new);
                    changed = true;
                }
            }
        }
        dom
    }

    /// Mermaid flowchart. `label` renders a node; blocks in `dead` get the
    /// `dead` class.
    pub fn render_mermaid(&self, label: impl Fn(NodeId) -> String, dead: &BTreeSet<BlockId>) -> String {
        let mut out = String::from("flowchart TD\n");
        for b in self.blocks.values() {
            let text = match b.kind {
                BlockKind::Entry => "entry".to_string(),
                BlockKind::Exit => "exit".to_string(),
                _ => b.nodes.iter().map(|n| label(*n)).collect::<Vec<_>>().join("; "),
            };
            let text = text.replace('"', "#quot;");
            match b.kind {
                BlockKind::Condition { .. } => out.push_str(&format!("    {}{{\"{}\"}}\n", b.id, text)),
                BlockKind::Entry | BlockKind::Exit => out.push_str(&format!("    {}([\"{}\"])\n", b.id, text)),
                BlockKind::Basic => out.push_str(&format!("    {}[\"{}\"]\n", b.id, text)),
            }
        }
        for e in &self.edges {
            match e.label {
                CfgLabel::Fallthrough => out.push_str(&format!("    {} --> {}\n", e.from, e.to)),
                CfgLabel::LoopBack => out.push_str(&format!("    {} -.->|loop| {}\n", e.from, e.to)),
                l => out.push_str(&format!("    {} -->|{}| {}\n", e.from, l.symbol(), e.to)),
            }
        }
        if !dead.is_empty() {
            out.push_str("    classDef dead stroke-dasharray: 4 4,opacity:0.5\n");
            for d in dead {
                out.push_str(&format!("    class {d} dead\n"));
            }
        }
        out
    }
}

#[derive(Default)]
struct LoopFrame {
    head: Option<BlockId>,
    breaks: Vec<(BlockId, CfgLabel)>,
}

struct CfgBuilder<'a> {
    ast: &'a NormalizedAst,
    blocks: BTreeMap<BlockId, Block>,
    edges: BTreeSet<CfgEdge>,
    current: Option<BlockId>,
    pending: Vec<(BlockId, CfgLabel)>,
    loops: Vec<LoopFrame>,
    returns: Vec<BlockId>,
    in_function: bool,
}

impl<'a> CfgBuilder<'a> {
    fn new(ast: &'a NormalizedAst, in_function: bool) -> Self {
        let mut b = CfgBuilder {
            ast,
            blocks: BTreeMap::new(),
            edges: BTreeSet::new(),
            current: None,
            pending: Vec::new(),
            loops: Vec::new(),
            returns: Vec::new(),
            in_function,
        };
        let entry = b.new_block(BlockKind::Entry);
        b.pending.push((entry, CfgLabel::Fallthrough));
        b
    }

    fn new_block(&mut self, kind: BlockKind) -> BlockId {
        let id = BlockId(self.blocks.len() as u32);
        self.blocks.insert(
            id,
            Block {
                id,
                kind,
                nodes: Vec::new(),
            },
        );
        id
    }

    fn connect_pending(&mut self, to: BlockId) {
        for (from, label) in std::mem::take(&mut self.pending) {
            self.edges.insert(CfgEdge { from, to, label });
        }
    }

    /// Append a statement to the open block, opening one if needed.
    fn emit(&mut self, node: NodeId) -> BlockId {
        let b = match self.current {
            Some(b) => b,
            None => {
                let b = self.new_block(BlockKind::Basic);
                self.connect_pending(b);
                self.current = Some(b);
                b
            }
        };
        self.blocks.get_mut(&b).expect("open block").nodes.push(node);
        b
    }

    fn close(&mut self) {
        if let Some(b) = self.current.take() {
            self.pending.push((b, CfgLabel::Fallthrough));
        }
    }

    fn condition(&mut self, node: NodeId) -> BlockId {
        self.close();
        let c = self.new_block(BlockKind::Condition { node });
        self.blocks.get_mut(&c).expect("new block").nodes.push(node);
        self.connect_pending(c);
        c
    }

    fn body(&mut self, id: NodeId) {
        let node = self.ast.node(id);
        if matches!(node.kind, NodeKind::ExpressionList { .. }) {
            for s in node.children.clone() {
                self.statement(s);
            }
        } else {
            self.statement(id);
        }
    }

    fn loop_body(&mut self, head: BlockId, body: NodeId) -> Vec<(BlockId, CfgLabel)> {
        self.loops.push(LoopFrame {
            head: Some(head),
            breaks: Vec::new(),
        });
        self.body(body);
        self.close();
        for (from, label) in std::mem::take(&mut self.pending) {
            let label = if label == CfgLabel::Fallthrough {
                CfgLabel::LoopBack
            } else {
                label
            };
            self.edges.insert(CfgEdge {
                from,
                to: head,
                label,
            });
        }
        self.loops.pop().expect("pushed above").breaks
    }

    fn statement(&mut self, id: NodeId) {
        let node = self.ast.node(id);
        let children = node.children.clone();
        match node.kind {
            NodeKind::ExpressionList { .. } => {
                for s in children {
                    self.statement(s);
                }
            }
            NodeKind::If => {
                let c = self.condition(children[0]);
                self.pending = vec![(c, CfgLabel::True)];
                self.body(children[1]);
                self.close();
                let mut joined = std::mem::take(&mut self.pending);
                self.pending = vec![(c, CfgLabel::False)];
                if let Some(e) = children.get(2) {
                    self.body(*e);
                    self.close();
                }
                joined.append(&mut self.pending);
                self.pending = joined;
            }
            NodeKind::While => {
                let c = self.condition(children[0]);
                self.pending = vec![(c, CfgLabel::True)];
                let breaks = self.loop_body(c, children[1]);
                self.pending = vec![(c, CfgLabel::False)];
                self.pending.extend(breaks);
            }
            NodeKind::For => {
                self.emit(children[1]);
                let c = self.condition(id);
                self.pending = vec![(c, CfgLabel::True)];
                let breaks = self.loop_body(c, children[2]);
                self.pending = vec![(c, CfgLabel::False)];
                self.pending.extend(breaks);
            }
            NodeKind::Repeat => {
                self.close();
                let head = self.new_block(BlockKind::Basic);
                self.connect_pending(head);
                self.current = Some(head);
                let breaks = self.loop_body(head, children[0]);
                self.pending = breaks;
            }
            NodeKind::Break | NodeKind::Next if !self.loops.is_empty() => {
                let b = self.emit(id);
                self.current = None;
                let frame = self.loops.last_mut().expect("checked");
                if node.kind == NodeKind::Break {
                    frame.breaks.push((b, CfgLabel::Fallthrough));
                } else if let Some(head) = frame.head {
                    self.edges.insert(CfgEdge {
                        from: b,
                        to: head,
                        label: CfgLabel::LoopBack,
                    });
                }
            }
            NodeKind::FunctionCall if self.in_function && self.ast.call_name(id) == Some("return") => {
                let b = self.emit(id);
                self.current = None;
                self.returns.push(b);
            }
            _ => {
                self.emit(id);
            }
        }
    }

    fn finish(mut self, function: Option<NodeId>) -> Cfg {
        self.close();
        let exit = self.new_block(BlockKind::Exit);
        self.connect_pending(exit);
        for r in std::mem::take(&mut self.returns) {
            self.edges.insert(CfgEdge {
                from: r,
                to: exit,
                label: CfgLabel::Fallthrough,
            });
        }
        Cfg {
            function,
            blocks: self.blocks,
            edges: self.edges,
            entry: BlockId(0),
            exit,
        }
    }
}

/// Control-flow graph of a file's top-level code. Function bodies are not
/// spliced in; see [`CfgSet`].
pub fn build_cfg(ast: &NormalizedAst) -> Cfg {
    let mut b = CfgBuilder::new(ast, false);
    b.body(ast.root());
    b.finish(None)
}

/// Control-flow graph of one function body.
pub fn build_function_cfg(ast: &NormalizedAst, function: NodeId) -> Cfg {
    let mut b = CfgBuilder::new(ast, true);
    let body = *ast.node(function).children.last().expect("function body");
    b.body(body);
    b.finish(Some(function))
}

/// Whether a condition value is exactly TRUE or exactly FALSE.
pub fn truth(value: &AbstractValue) -> Option<bool> {
    match value {
        AbstractValue::Logical(set) if set.len() == 1 => set.iter().next().copied(),
        AbstractValue::Interval(i) if i.lo == 0.0 && i.hi == 0.0 => Some(false),
        AbstractValue::Interval(i) if i.lo > 0.0 || i.hi < 0.0 => Some(true),
        _ => None,
    }
}

/// Remove branch edges whose condition is constant, and every block that
/// becomes unreachable. Returns the simplified graph and the removed blocks.
pub fn simplify_cfg(cfg: &Cfg, values: &BTreeMap<NodeId, AbstractValue>) -> (Cfg, BTreeSet<BlockId>) {
    let mut out = cfg.clone();
    for b in cfg.blocks.values() {
        let BlockKind::Condition { node } = b.kind else { continue };
        let Some(t) = values.get(&node).and_then(truth) else { continue };
        let removed = if t { CfgLabel::False } else { CfgLabel::True };
        out.edges.retain(|e| !(e.from == b.id && e.label == removed));
    }
    let dead = out.dead_blocks();
    out.blocks.retain(|id, _| !dead.contains(id));
    out.edges.retain(|e| !dead.contains(&e.from) && !dead.contains(&e.to));
    (out, dead)
}

/// The control-flow graphs of a program: one per file, then one per
/// function definition.
#[derive(Debug, Clone, Serialize)]
pub struct CfgSet {
    pub units: Vec<Cfg>,
    /// Unit index of each file's top-level graph, by AST origin.
    #[serde(skip)]
    files: Vec<(u32, u32, usize)>,
    #[serde(skip)]
    functions: BTreeMap<NodeId, usize>,
}

impl CfgSet {
    pub fn build(asts: &[&NormalizedAst]) -> Self {
        let mut units = Vec::new();
        let mut files = Vec::new();
        let mut functions = BTreeMap::new();
        for ast in asts {
            files.push((ast.offset(), ast.id_end(), units.len()));
            units.push(build_cfg(ast));
        }
        for ast in asts {
            for n in ast.nodes() {
                if n.kind == NodeKind::FunctionDefinition {
                    functions.insert(n.id, units.len());
                    units.push(build_function_cfg(ast, n.id));
                }
            }
        }
        CfgSet {
            units,
            files,
            functions,
        }
    }

    /// Index of the graph that contains `node`: its innermost enclosing
    /// function, else its file.
    pub fn unit_of(&self, ast: &NormalizedAst, node: NodeId) -> Option<usize> {
        for a in ast.ancestors(node) {
            if let Some(u) = self.functions.get(&a) {
                return Some(*u);
            }
        }
        self.files
            .iter()
            .find(|(lo, hi, _)| node.0 >= *lo && node.0 < *hi)
            .map(|(_, _, u)| *u)
    }

    /// The statement (or condition) of unit `unit` that encloses `node`,
    /// with its block and position in that block.
    pub fn locate(&self, ast: &NormalizedAst, unit: usize, node: NodeId) -> Option<(BlockId, usize)> {
        let cfg = &self.units[unit];
        let mut index: BTreeMap<NodeId, (BlockId, usize)> = BTreeMap::new();
        for b in cfg.blocks.values() {
            for (i, n) in b.nodes.iter().enumerate() {
                index.insert(*n, (b.id, i));
            }
        }
        std::iter::once(node)
            .chain(ast.ancestors(node))
            .find_map(|a| index.get(&a).copied())
    }

    /// Whether `a` runs before `b` on every path to `b`, inside the graph
    /// that contains `b`. A node that lives in an enclosing graph dominates
    /// `b` when it dominates the definition of `b`'s function.
    pub fn dominates(&self, ast: &NormalizedAst, a: NodeId, b: NodeId) -> bool {
        let Some(unit_b) = self.unit_of(ast, b) else {
            return false;
        };
        let unit_a = self.unit_of(ast, a);
        if unit_a == Some(unit_b) {
            let (Some((ba, ia)), Some((bb, ib))) = (self.locate(ast, unit_b, a), self.locate(ast, unit_b, b)) else {
                return false;
            };
            if ba == bb {
                return ia < ib;
            }
            return self.units[unit_b]
                .dominators()
                .get(&bb)
                .is_some_and(|d| d.contains(&ba));
        }
        match self.units[unit_b].function {
            Some(f) => self.dominates(ast, a, f),
            None => false,
        }
    }

    pub fn function_unit(&self, function: NodeId) -> Option<&Cfg> {
        self.functions.get(&function).map(|u| &self.units[*u])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_normalized, SourceText};

    fn ast(code: &str) -> NormalizedAst {
        parse_normalized(&SourceText::literal(code), 0).unwrap().0
    }

    fn labels(cfg: &Cfg) -> Vec<(u32, u32, CfgLabel)> {
        cfg.edges.iter().map(|e| (e.from.0, e.to.0, e.label)).collect()
    }

    #[test]
    fn while_loop_shape() {
        let a = ast("x <- 0\nwhile (x < 20) {\n  x <- x + 1\n}");
        let cfg = build_cfg(&a);
        assert_eq!(cfg.blocks.len(), 5);
        // entry=0, [x<-0]=1, cond=2, body=3, exit=4
        assert_eq!(
            labels(&cfg),
            vec![
                (0, 1, CfgLabel::Fallthrough),
                (1, 2, CfgLabel::Fallthrough),
                (2, 3, CfgLabel::True),
                (2, 4, CfgLabel::False),
                (3, 2, CfgLabel::LoopBack),
            ]
        );
        assert!(cfg.dead_blocks().is_empty());
    }

    #[test]
    fn straight_line_coalesces() {
        let cfg = build_cfg(&ast("x <- 1\ny <- 2"));
        assert_eq!(cfg.blocks.len(), 3);
        assert_eq!(cfg.blocks[&BlockId(1)].nodes.len(), 2);
    }

    #[test]
    fn if_else_diamond() {
        let cfg = build_cfg(&ast("if (c) a else b\nd"));
        // entry, cond, then, else, join, exit
        assert_eq!(cfg.blocks.len(), 6);
        let cond = cfg
            .blocks
            .values()
            .find(|b| matches!(b.kind, BlockKind::Condition { .. }))
            .unwrap()
            .id;
        let succ: Vec<CfgLabel> = cfg.successors(cond).map(|e| e.label).collect();
        assert_eq!(succ, vec![CfgLabel::True, CfgLabel::False]);
    }

    #[test]
    fn code_after_break_is_dead() {
        let cfg = build_cfg(&ast("repeat {\n  break\n  x <- 1\n}"));
        assert_eq!(cfg.dead_blocks().len(), 1);
    }

    #[test]
    fn function_bodies_are_separate() {
        let a = ast("f <- function(x) {\n  if (x) return(1)\n  2\n}\nf(TRUE)");
        let set = CfgSet::build(&[&a]);
        assert_eq!(set.units.len(), 2);
        assert_eq!(set.units[0].blocks.len(), 3);
        let f = &set.units[1];
        assert!(f.predecessors(f.exit).count() >= 2);
    }

    #[test]
    fn dominance() {
        let a = ast("set.seed(1)\nif (c) {\n  s <- 1\n}\nrunif(1)");
        let set = CfgSet::build(&[&a]);
        let call = |name: &str| a.nodes().find(|n| n.lexeme == name && n.kind == NodeKind::FunctionCall).unwrap().id;
        let s = a.nodes().find(|n| n.lexeme == "<-").unwrap().id;
        assert!(set.dominates(&a, call("set.seed"), call("runif")));
        assert!(!set.dominates(&a, s, call("runif")));
        assert!(!set.dominates(&a, call("runif"), call("set.seed")));
    }
}
