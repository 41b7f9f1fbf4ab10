//! Parsing, normalization and reprinting of the supported R subset.

mod ast;
mod lexer;
mod parser;
mod reprint;
mod source;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{isomorphic, normalize, normalize_with_offset, Node, NodeId, NodeKind, NormalizedAst};
pub use lexer::Comment;
pub use parser::{parse, Arg, Expr, ExprKind, Param, SyntaxTree};
pub use reprint::{reprint, reprint_lines};
pub use source::{Pos, SourceText, Span};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{location}: {message}")]
pub struct ParseError {
    pub message: String,
    pub location: Pos,
    pub expected: Option<String>,
}

impl ParseError {
    pub fn new(message: impl Into<String>, location: Pos, expected: Option<&str>) -> Self {
        ParseError {
            message: message.into(),
            location,
            expected: expected.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssignOp {
    /// `<-`
    #[serde(rename = "<-")]
    Local,
    /// `<<-`
    #[serde(rename = "<<-")]
    Super,
    /// `=`
    #[serde(rename = "=")]
    Equals,
}

impl AssignOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Local => "<-",
            AssignOp::Super => "<<-",
            AssignOp::Equals => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexOp {
    #[serde(rename = "$")]
    Dollar,
    #[serde(rename = "[[")]
    Double,
    #[serde(rename = "[")]
    Single,
}

impl IndexOp {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexOp::Dollar => "$",
            IndexOp::Double => "[[",
            IndexOp::Single => "[",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamespaceOp {
    #[serde(rename = "::")]
    Exported,
    #[serde(rename = ":::")]
    Internal,
}

impl NamespaceOp {
    pub fn as_str(self) -> &'static str {
        match self {
            NamespaceOp::Exported => "::",
            NamespaceOp::Internal => ":::",
        }
    }
}

impl fmt::Display for AssignOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parse and normalize in one step.
pub fn parse_normalized(source: &SourceText, offset: u32) -> Result<(NormalizedAst, Vec<Comment>), ParseError> {
    let tree = parse(source)?;
    Ok((normalize_with_offset(&tree, source.origin(), offset), tree.comments))
}

/// Several trees sharing one id space (the files of a project).
#[derive(Debug, Clone, Copy)]
pub struct Forest<'a> {
    units: Units<'a>,
}

#[derive(Debug, Clone, Copy)]
enum Units<'a> {
    Refs(&'a [&'a NormalizedAst]),
    Owned(&'a [NormalizedAst]),
}

impl<'a> Forest<'a> {
    pub fn new(units: &'a [&'a NormalizedAst]) -> Self {
        Forest { units: Units::Refs(units) }
    }

    pub fn from_slice(units: &'a [NormalizedAst]) -> Self {
        Forest { units: Units::Owned(units) }
    }

    pub fn units(&self) -> Vec<&'a NormalizedAst> {
        match self.units {
            Units::Refs(r) => r.to_vec(),
            Units::Owned(o) => o.iter().collect(),
        }
    }

    fn iter(&self) -> Box<dyn Iterator<Item = &'a NormalizedAst> + 'a> {
        match self.units {
            Units::Refs(r) => Box::new(r.iter().copied()),
            Units::Owned(o) => Box::new(o.iter()),
        }
    }

    pub fn ast_of(&self, id: NodeId) -> Option<&'a NormalizedAst> {
        self.iter().find(|u| u.contains(id))
    }

    pub fn get(&self, id: NodeId) -> Option<&'a Node> {
        self.ast_of(id).and_then(|a| a.get(id))
    }

    pub fn node(&self, id: NodeId) -> &'a Node {
        self.get(id)
            .unwrap_or_else(|| panic!("node {id} belongs to no unit"))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &'a Node> + 'a {
        self.iter().flat_map(|u| u.nodes())
    }

    pub fn call_name(&self, id: NodeId) -> Option<&'a str> {
        self.ast_of(id).and_then(|a| a.call_name(id))
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + 'a {
        let ast = self.ast_of(id);
        ast.into_iter().flat_map(move |a| a.ancestors(id))
    }
}
