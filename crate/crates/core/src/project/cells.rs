use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use super::ProjectError;
use crate::syntax::{Pos, SourceText};

/// One extracted cell: where its lines came from and where they ended up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    /// Index among all executable cells of the document, R or not.
    pub index: usize,
    /// First and last original line (inclusive). For notebooks stored as
    /// JSON these are cell-local lines starting at 1.
    pub original: (u32, u32),
    /// First and last line in the extracted R text (inclusive).
    pub extracted: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellMap {
    pub cells: Vec<Cell>,
    /// Original lines are relative to each cell rather than to the file.
    pub cell_local: bool,
}

/// A location in the original document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OriginalPos {
    pub cell: Option<usize>,
    pub line: u32,
    pub col: u32,
}

impl CellMap {
    /// Identity mapping for plain R files: one cell covering every line.
    pub fn identity(line_count: u32) -> Self {
        CellMap {
            cells: vec![Cell {
                index: 0,
                original: (1, line_count.max(1)),
                extracted: (1, line_count.max(1)),
            }],
            cell_local: false,
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.cell_local
            && self.cells.len() == 1
            && self.cells[0].original == self.cells[0].extracted
    }

    /// Map a position in the extracted text back to the original document.
    /// Columns pass through unchanged.
    pub fn map_location(&self, extracted: Pos) -> Result<OriginalPos, ProjectError> {
        let cell = self
            .cells
            .iter()
            .find(|c| c.extracted.0 <= extracted.line && extracted.line <= c.extracted.1)
            .ok_or(ProjectError::NotCovered {
                line: extracted.line,
            })?;
        Ok(OriginalPos {
            cell: if self.is_identity() { None } else { Some(cell.index) },
            line: cell.original.0 + (extracted.line - cell.extracted.0),
            col: extracted.col,
        })
    }
}

/// Map a position through a cell map.
pub fn map_location(map: &CellMap, extracted: Pos) -> Result<OriginalPos, ProjectError> {
    map.map_location(extracted)
}

struct Assembler {
    text: String,
    next_line: u32,
    cells: Vec<Cell>,
}

impl Assembler {
    fn new() -> Self {
        Assembler {
            text: String::new(),
            next_line: 1,
            cells: Vec::new(),
        }
    }

    fn push(&mut self, index: usize, original_start: u32, lines: &[&str]) {
        if lines.is_empty() {
            return;
        }
        if !self.cells.is_empty() {
            // blank separator line
            self.text.push('\n');
            self.next_line += 1;
        }
        let start = self.next_line;
        for l in lines {
            self.text.push_str(l);
            self.text.push('\n');
        }
        self.next_line += lines.len() as u32;
        self.cells.push(Cell {
            index,
            original: (original_start, original_start + lines.len() as u32 - 1),
            extracted: (start, self.next_line - 1),
        });
    }
}

fn chunk_open() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(`{3,})\s*\{\s*([A-Za-z0-9_.]*)[^}]*\}\s*$").expect("valid regex"))
}

fn fence() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(`{3,})").expect("valid regex"))
}

/// Extract R chunks from an R Markdown or Quarto document.
pub fn extract_markdown_chunks(document: &SourceText) -> Result<(SourceText, CellMap), ProjectError> {
    let lines: Vec<&str> = document
        .content()
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let mut out = Assembler::new();
    let mut index = 0;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let (ticks, engine) = if let Some(c) = chunk_open().captures(line) {
            (c[1].len(), Some(c[2].to_string()))
        } else if let Some(c) = fence().captures(line) {
            (c[1].len(), None)
        } else {
            i += 1;
            continue;
        };
        let open_line = i as u32 + 1;
        let close = (i + 1..lines.len()).find(|&j| {
            let t = lines[j].trim();
            t.len() >= ticks && t.chars().all(|c| c == '`')
        });
        let Some(close) = close else {
            return Err(ProjectError::UnterminatedFence { line: open_line });
        };
        if let Some(engine) = engine {
            if engine.eq_ignore_ascii_case("r") {
                out.push(index, open_line + 1, &lines[i + 1..close]);
            }
            index += 1;
        }
        i = close + 1;
    }
    finish(document, out, false)
}

fn finish(document: &SourceText, out: Assembler, cell_local: bool) -> Result<(SourceText, CellMap), ProjectError> {
    Ok((
        SourceText::new(document.origin(), out.text),
        CellMap {
            cells: out.cells,
            cell_local,
        },
    ))
}

/// Extract R code cells from a Jupyter notebook (nbformat 4).
pub fn extract_notebook_cells(document: &SourceText) -> Result<(SourceText, CellMap), ProjectError> {
    let json: serde_json::Value =
        serde_json::from_str(document.content()).map_err(|e| ProjectError::Notebook {
            message: e.to_string(),
            location: Pos::new(e.line().max(1) as u32, e.column().max(1) as u32),
        })?;
    let cells = json
        .get("cells")
        .and_then(|c| c.as_array())
        .ok_or_else(|| ProjectError::Notebook {
            message: "notebook has no \"cells\" array".into(),
            location: Pos::new(1, 1),
        })?;
    let meta = json.get("metadata");
    let notebook_lang = meta
        .and_then(|m| m.pointer("/kernelspec/language"))
        .or_else(|| meta.and_then(|m| m.pointer("/language_info/name")))
        .and_then(|l| l.as_str());
    let mut out = Assembler::new();
    let mut index = 0;
    for cell in cells {
        if cell.get("cell_type").and_then(|t| t.as_str()) != Some("code") {
            continue;
        }
        let cell_lang = cell
            .pointer("/metadata/vscode/languageId")
            .or_else(|| cell.pointer("/metadata/language"))
            .and_then(|l| l.as_str());
        let is_r = cell_lang
            .or(notebook_lang)
            .map(|l| l.eq_ignore_ascii_case("r"))
            .unwrap_or(true);
        if is_r {
            let source = match cell.get("source") {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(serde_json::Value::Array(parts)) => {
                    parts.iter().filter_map(|p| p.as_str()).collect()
                }
                _ => String::new(),
            };
            let trimmed = source.strip_suffix('\n').unwrap_or(&source);
            let lines: Vec<&str> = if trimmed.is_empty() {
                Vec::new()
            } else {
                trimmed.split('\n').collect()
            };
            out.push(index, 1, &lines);
        }
        index += 1;
    }
    finish(document, out, true)
}
