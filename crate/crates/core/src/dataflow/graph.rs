use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::syntax::{NodeId, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    Value,
    Use,
    VariableDefinition,
    FunctionDefinition,
    FunctionCall,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Value => "value",
            VertexKind::Use => "use",
            VertexKind::VariableDefinition => "variable-definition",
            VertexKind::FunctionDefinition => "function-definition",
            VertexKind::FunctionCall => "function-call",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub id: NodeId,
    pub kind: VertexKind,
    pub name: Option<String>,
    pub location: Span,
}

/// A single edge label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Reads,
    Returns,
    DefinedBy,
    DefinedByOnCall,
    Calls,
    Argument,
}

impl EdgeLabel {
    /// All labels in rendering order.
    pub const ALL: [EdgeLabel; 6] = [
        EdgeLabel::Reads,
        EdgeLabel::Returns,
        EdgeLabel::DefinedBy,
        EdgeLabel::DefinedByOnCall,
        EdgeLabel::Calls,
        EdgeLabel::Argument,
    ];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::Reads => "reads",
            EdgeLabel::Returns => "returns",
            EdgeLabel::DefinedBy => "defined-by",
            EdgeLabel::DefinedByOnCall => "defined-by-on-call",
            EdgeLabel::Calls => "calls",
            EdgeLabel::Argument => "argument",
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Set of labels on one edge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Labels(u8);

impl Labels {
    pub fn of(label: EdgeLabel) -> Self {
        Labels(label.bit())
    }

    pub fn contains(self, label: EdgeLabel) -> bool {
        self.0 & label.bit() != 0
    }

    pub fn insert(&mut self, label: EdgeLabel) -> bool {
        let before = self.0;
        self.0 |= label.bit();
        before != self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = EdgeLabel> {
        EdgeLabel::ALL.into_iter().filter(move |l| self.contains(*l))
    }
}

impl fmt::Display for Labels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(EdgeLabel::as_str).collect();
        f.write_str(&names.join(", "))
    }
}

impl Serialize for Labels {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(None)?;
        for l in self.iter() {
            seq.serialize_element(l.as_str())?;
        }
        seq.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub labels: Labels,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DataflowError {
    #[error("node {0} is not a vertex")]
    NotAVertex(NodeId),
    #[error("vertex {0} is not a function call")]
    NotACall(NodeId),
}

/// Vertices and labeled edges of a dataflow graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataflowGraph {
    vertices: BTreeMap<NodeId, Vertex>,
    out: BTreeMap<NodeId, BTreeMap<NodeId, Labels>>,
    inc: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// Calls whose target is neither a user function nor a known built-in.
    pub unresolved_calls: BTreeSet<NodeId>,
    /// Definitions that were rebound (strong update) on some path.
    pub killed: BTreeSet<NodeId>,
    /// Definitions created by `<<-`.
    pub super_definitions: BTreeSet<NodeId>,
    revision: u64,
}

impl DataflowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Incremented whenever a vertex or edge label is added.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn add_vertex(&mut self, id: NodeId, kind: VertexKind, name: Option<String>, location: Span) {
        if let Some(v) = self.vertices.get(&id) {
            debug_assert_eq!(v.kind, kind, "vertex {id} changed kind");
            return;
        }
        self.vertices.insert(
            id,
            Vertex {
                id,
                kind,
                name,
                location,
            },
        );
        self.revision += 1;
    }

    /// Add a label to the edge `from -> to`. Both endpoints must be vertices.
    pub fn add_edge(&mut self, from: NodeId, to: NodeId, label: EdgeLabel) {
        assert!(
            self.vertices.contains_key(&from) && self.vertices.contains_key(&to),
            "edge {from} -> {to} between non-vertices"
        );
        if self.out.entry(from).or_default().entry(to).or_default().insert(label) {
            self.inc.entry(to).or_default().insert(from);
            self.revision += 1;
        }
    }

    pub fn vertex(&self, id: NodeId) -> Option<&Vertex> {
        self.vertices.get(&id)
    }

    pub fn is_vertex(&self, id: NodeId) -> bool {
        self.vertices.contains_key(&id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.values()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.values().map(BTreeMap::len).sum()
    }

    /// All edges sorted by `(from, to)`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.out.iter().flat_map(|(from, tos)| {
            tos.iter().map(move |(to, labels)| Edge {
                from: *from,
                to: *to,
                labels: *labels,
            })
        })
    }

    pub fn labels(&self, from: NodeId, to: NodeId) -> Labels {
        self.out
            .get(&from)
            .and_then(|m| m.get(&to))
            .copied()
            .unwrap_or_default()
    }

    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = (NodeId, Labels)> + '_ {
        self.out
            .get(&id)
            .into_iter()
            .flat_map(|m| m.iter().map(|(to, l)| (*to, *l)))
    }

    pub fn incoming(&self, id: NodeId) -> impl Iterator<Item = (NodeId, Labels)> + '_ {
        self.inc
            .get(&id)
            .into_iter()
            .flatten()
            .map(move |from| (*from, self.labels(*from, id)))
    }

    /// Targets of outgoing edges carrying `label`.
    pub fn targets(&self, id: NodeId, label: EdgeLabel) -> impl Iterator<Item = NodeId> + '_ {
        self.outgoing(id)
            .filter(move |(_, l)| l.contains(label))
            .map(|(to, _)| to)
    }

    /// Sources of incoming edges carrying `label`.
    pub fn sources(&self, id: NodeId, label: EdgeLabel) -> impl Iterator<Item = NodeId> + '_ {
        self.incoming(id)
            .filter(move |(_, l)| l.contains(label))
            .map(|(from, _)| from)
    }

    /// Use vertices without any reaching definition.
    pub fn unresolved_uses(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.values().filter(|v| {
            v.kind == VertexKind::Use && self.targets(v.id, EdgeLabel::Reads).next().is_none()
        })
    }

    /// Function definitions a call may invoke: the callee's reaching
    /// definitions are followed to the function values bound to them.
    pub fn resolve_call_targets(&self, call: NodeId) -> Result<BTreeSet<NodeId>, DataflowError> {
        let v = self.vertex(call).ok_or(DataflowError::NotAVertex(call))?;
        if v.kind != VertexKind::FunctionCall {
            return Err(DataflowError::NotACall(call));
        }
        let mut out: BTreeSet<NodeId> = self.targets(call, EdgeLabel::Calls).collect();
        let mut seen = BTreeSet::from([call]);
        let mut stack: Vec<NodeId> = self.targets(call, EdgeLabel::Reads).collect();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            let Some(v) = self.vertex(id) else { continue };
            let follow: &[EdgeLabel] = match v.kind {
                VertexKind::FunctionDefinition => {
                    out.insert(id);
                    &[]
                }
                VertexKind::VariableDefinition => &[EdgeLabel::DefinedBy, EdgeLabel::DefinedByOnCall],
                VertexKind::Use => &[EdgeLabel::Reads],
                VertexKind::FunctionCall => &[EdgeLabel::Returns],
                VertexKind::Value => &[],
            };
            for l in follow {
                stack.extend(self.targets(id, *l));
            }
        }
        Ok(out)
    }

    /// Text rendering: a vertex listing, the edge listing and, when present,
    /// a footer naming unresolved uses and calls.
    pub fn render_ascii(&self) -> String {
        let mut out = String::from("Vertices:\n");
        for v in self.vertices() {
            match &v.name {
                Some(n) => out.push_str(&format!("{} {} {}\n", v.id, v.kind.as_str(), n)),
                None => out.push_str(&format!("{} {}\n", v.id, v.kind.as_str())),
            }
        }
        out.push_str("Edges:\n");
        for e in self.edges() {
            out.push_str(&format!("{} -> {}: {}\n", e.from, e.to, e.labels));
        }
        let mut unresolved: BTreeMap<NodeId, &str> = self
            .unresolved_uses()
            .map(|v| (v.id, v.name.as_deref().unwrap_or("")))
            .collect();
        for c in &self.unresolved_calls {
            let name = self.vertex(*c).and_then(|v| v.name.as_deref()).unwrap_or("");
            unresolved.insert(*c, name);
        }
        if !unresolved.is_empty() {
            let items: Vec<String> = unresolved.iter().map(|(id, n)| format!("{n}<{id}>")).collect();
            out.push_str(&format!("unresolved: {}\n", items.join(", ")));
        }
        out
    }

    /// Mermaid flowchart text, one line per vertex and per edge.
    pub fn render_mermaid(&self) -> String {
        let mut out = String::from("flowchart TD\n");
        for v in self.vertices() {
            let label = match &v.name {
                Some(n) => format!("{} {}", v.kind.as_str(), n),
                None => v.kind.as_str().to_string(),
            };
            let (open, close) = match v.kind {
                VertexKind::Value => ("[", "]"),
                VertexKind::Use => ("([", "])"),
                VertexKind::VariableDefinition => ("[/", "/]"),
                VertexKind::FunctionDefinition => ("[[", "]]"),
                VertexKind::FunctionCall => ("[[", "]]"),
            };
            out.push_str(&format!(
                "    {}{open}\"{} [{}] @{}\"{close}\n",
                v.id,
                mermaid_escape(&label),
                v.id,
                v.location
            ));
        }
        for e in self.edges() {
            out.push_str(&format!("    {} -->|\"{}\"| {}\n", e.from, e.labels, e.to));
        }
        out
    }
}

fn mermaid_escape(s: &str) -> String {
    s.replace('"', "#quot;")
        .replace('`', "#96;")
        .replace('<', "#lt;")
        .replace('>', "#gt;")
}

impl Serialize for DataflowGraph {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            vertices: Vec<&'a Vertex>,
            edges: Vec<Edge>,
            #[serde(rename = "unresolved-calls")]
            unresolved_calls: &'a BTreeSet<NodeId>,
        }
        Wire {
            vertices: self.vertices().collect(),
            edges: self.edges().collect(),
            unresolved_calls: &self.unresolved_calls,
        }
        .serialize(s)
    }
}
