use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::NodeId;

pub type Frame = BTreeMap<String, BTreeSet<NodeId>>;

/// Lexical environment: a chain of frames ending in the global frame.
///
/// Frames are stored outermost first; index 0 is the global frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    frames: Vec<Frame>,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            frames: vec![Frame::new()],
        }
    }
}

/// Result of a name lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    /// Index of the frame the binding was found in (0 = global).
    pub frame: usize,
    pub definitions: BTreeSet<NodeId>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn push_frame(&mut self) {
        self.frames.push(Frame::new());
    }

    pub fn pop_frame(&mut self) -> Option<Frame> {
        (self.frames.len() > 1).then(|| self.frames.pop()).flatten()
    }

    pub fn global(&self) -> &Frame {
        &self.frames[0]
    }

    pub fn innermost(&self) -> &Frame {
        self.frames.last().expect("global frame")
    }

    /// Innermost non-empty binding of `name`.
    pub fn lookup(&self, name: &str) -> Option<Binding> {
        self.lookup_within(name, self.frames.len())
    }

    /// Like [`lookup`](Self::lookup) but only considers the outermost
    /// `frames` frames.
    pub fn lookup_within(&self, name: &str, frames: usize) -> Option<Binding> {
        let limit = frames.min(self.frames.len());
        self.frames[..limit]
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, f)| {
                f.get(name).filter(|d| !d.is_empty()).map(|d| Binding {
                    frame: i,
                    definitions: d.clone(),
                })
            })
    }

    /// Bind `name` to exactly `def` in the innermost frame. Returns the
    /// definitions that were replaced.
    pub fn define(&mut self, name: &str, def: NodeId) -> BTreeSet<NodeId> {
        let frame = self.frames.last_mut().expect("global frame");
        frame
            .insert(name.to_string(), BTreeSet::from([def]))
            .unwrap_or_default()
    }

    /// Bind `name` to exactly `def` in frame `index`.
    pub fn define_in(&mut self, index: usize, name: &str, def: NodeId) -> BTreeSet<NodeId> {
        self.frames[index]
            .insert(name.to_string(), BTreeSet::from([def]))
            .unwrap_or_default()
    }

    /// Add `def` to the bindings of `name` in frame `index` without removing
    /// the others.
    pub fn add_in(&mut self, index: usize, name: &str, def: NodeId) {
        self.frames[index].entry(name.to_string()).or_default().insert(def);
    }

    /// Frame a super-assignment from a body whose outer chain has `outer`
    /// frames writes to: the nearest of those binding `name`, else global.
    pub fn super_target(&self, name: &str, outer: usize) -> usize {
        self.lookup_within(name, outer).map(|b| b.frame).unwrap_or(0)
    }

    /// Union of two environments, frame by frame.
    pub fn merge(&mut self, other: &Environment) {
        for (mine, theirs) in self.frames.iter_mut().zip(&other.frames) {
            for (name, defs) in theirs {
                mine.entry(name.clone()).or_default().extend(defs.iter().copied());
            }
        }
    }

    pub fn merged(mut self, other: &Environment) -> Environment {
        self.merge(other);
        self
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }
}
