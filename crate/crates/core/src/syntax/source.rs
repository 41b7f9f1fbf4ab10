use std::fmt;

use serde::{Deserialize, Serialize};

/// A 1-based line/column position. Columns count characters, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub const fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A source range. `end` is exclusive: it points at the character after the
/// last one covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub const fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_pos(&self, pos: Pos) -> bool {
        self.start <= pos && pos < self.end
    }

    pub fn cover(&self, other: &Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    /// Lines touched by this span. A span ending at column 1 does not touch
    /// its end line.
    pub fn lines(&self) -> std::ops::RangeInclusive<u32> {
        let last = if self.end.col == 1 && self.end.line > self.start.line {
            self.end.line - 1
        } else {
            self.end.line
        };
        self.start.line..=last
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// UTF-8 source text with a precomputed line index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceText {
    origin: String,
    content: String,
    line_starts: Vec<usize>,
}

impl SourceText {
    pub fn new(origin: impl Into<String>, content: impl Into<String>) -> Self {
        let content = content.into();
        let mut line_starts = vec![0];
        line_starts.extend(content.match_indices('\n').map(|(i, _)| i + 1));
        SourceText {
            origin: origin.into(),
            content,
            line_starts,
        }
    }

    /// Source given inline rather than from a file.
    pub fn literal(content: impl Into<String>) -> Self {
        Self::new("<text>", content)
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn line_count(&self) -> u32 {
        self.line_starts.len() as u32
    }

    /// Text of a 1-based line without its terminator.
    pub fn line(&self, line: u32) -> Option<&str> {
        let idx = line.checked_sub(1)? as usize;
        let start = *self.line_starts.get(idx)?;
        let end = self
            .line_starts
            .get(idx + 1)
            .map(|e| e - 1)
            .unwrap_or(self.content.len());
        let text = &self.content[start..end];
        Some(text.strip_suffix('\r').unwrap_or(text))
    }

    /// Byte offset of a position. The position one past the last character
    /// of a line (and of the file) is valid.
    pub fn offset_of(&self, pos: Pos) -> Option<usize> {
        let idx = pos.line.checked_sub(1)? as usize;
        let start = *self.line_starts.get(idx)?;
        let end = self
            .line_starts
            .get(idx + 1)
            .map(|e| e - 1)
            .unwrap_or(self.content.len());
        let line = &self.content[start..end];
        let col = pos.col.checked_sub(1)? as usize;
        if col == 0 {
            return Some(start);
        }
        let mut seen = 0;
        for (i, _) in line.char_indices() {
            if seen == col {
                return Some(start + i);
            }
            seen += 1;
        }
        if seen == col {
            // one past the end of the line, i.e. the newline itself
            Some(end)
        } else {
            None
        }
    }

    pub fn pos_of(&self, offset: usize) -> Pos {
        let offset = offset.min(self.content.len());
        let idx = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.line_starts[idx];
        let col = self.content[start..offset].chars().count();
        Pos::new(idx as u32 + 1, col as u32 + 1)
    }

    /// Position right after the last character.
    pub fn end_pos(&self) -> Pos {
        self.pos_of(self.content.len())
    }

    pub fn slice(&self, span: Span) -> Option<&str> {
        let s = self.offset_of(span.start)?;
        let e = self.offset_of(span.end)?;
        self.content.get(s..e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_lookup() {
        let src = SourceText::literal("x <- 2\ny <- 3\r\nprint(x)");
        assert_eq!(src.line_count(), 3);
        assert_eq!(src.line(2), Some("y <- 3"));
        assert_eq!(src.line(3), Some("print(x)"));
        assert_eq!(src.line(4), None);
    }

    #[test]
    fn offsets_with_multibyte_chars() {
        let src = SourceText::literal("s <- \"äö\"\nx");
        assert_eq!(src.offset_of(Pos::new(1, 8)), Some(8));
        assert_eq!(src.pos_of(8), Pos::new(1, 8));
        assert_eq!(src.offset_of(Pos::new(2, 1)), Some(12));
        assert_eq!(src.offset_of(Pos::new(1, 40)), None);
        assert_eq!(src.end_pos(), Pos::new(2, 2));
    }

    proptest! {
        #[test]
        fn offset_roundtrip(text in "[a-zä\\n <\\-]{0,40}") {
            let src = SourceText::literal(text.clone());
            for (off, _) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
                let pos = src.pos_of(off);
                prop_assert_eq!(src.offset_of(pos), Some(off));
            }
        }
    }
}
