//! Project discovery, notebook extraction and location mapping.
//!
//! A [`PluginRegistry`] decides which files are analyzable and how R code is
//! obtained from them. [`discover`] walks a project root and orders the files
//! so that scripts pulled in through `source("...")` load before the scripts
//! that reference them.

mod cells;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

pub use cells::{extract_markdown_chunks, extract_notebook_cells, map_location, Cell, CellMap, OriginalPos};

use crate::syntax::{parse_normalized, NodeKind, Pos, SourceText};

#[derive(Debug, thiserror::Error)]
pub enum ProjectError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed notebook at {location}: {message}")]
    Notebook { message: String, location: Pos },
    #[error("unterminated code fence opened on line {line}")]
    UnterminatedFence { line: u32 },
    #[error("line {line} is not covered by any extracted cell")]
    NotCovered { line: u32 },
    #[error("extension .{extension} is already claimed by plugin {plugin}")]
    ExtensionClaimed { extension: String, plugin: String },
    #[error("no plugin handles {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    R,
    Rmd,
    Qmd,
    Ipynb,
}

impl Format {
    pub fn from_extension(ext: &str) -> Option<Format> {
        match ext.to_ascii_lowercase().as_str() {
            "r" => Some(Format::R),
            "rmd" => Some(Format::Rmd),
            "qmd" => Some(Format::Qmd),
            "ipynb" => Some(Format::Ipynb),
            _ => None,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::R => "r",
            Format::Rmd => "rmd",
            Format::Qmd => "qmd",
            Format::Ipynb => "ipynb",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RequestKind {
    File { path: PathBuf },
    Text { content: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    #[serde(flatten)]
    pub kind: RequestKind,
    pub format: Format,
}

impl AnalysisRequest {
    /// A file request. A leading `file://` is stripped and the format is
    /// taken from the extension (defaulting to plain R).
    pub fn file(path: impl AsRef<str>) -> Self {
        let p = strip_file_scheme(path.as_ref());
        let format = Path::new(p)
            .extension()
            .and_then(|e| e.to_str())
            .and_then(Format::from_extension)
            .unwrap_or(Format::R);
        AnalysisRequest {
            kind: RequestKind::File { path: p.into() },
            format,
        }
    }

    pub fn text(content: impl Into<String>) -> Self {
        AnalysisRequest {
            kind: RequestKind::Text {
                content: content.into(),
            },
            format: Format::R,
        }
    }

    pub fn with_format(mut self, format: Format) -> Self {
        self.format = format;
        self
    }

    pub fn origin(&self) -> String {
        match &self.kind {
            RequestKind::File { path } => path.display().to_string(),
            RequestKind::Text { .. } => "<text>".into(),
        }
    }
}

pub fn strip_file_scheme(path: &str) -> &str {
    path.strip_prefix("file://").unwrap_or(path)
}

/// Turns a document into R text plus a mapping back to the document.
pub trait FilePlugin: Send + Sync {
    fn name(&self) -> &str;
    fn extensions(&self) -> &[&str];
    fn format(&self) -> Format;
    fn extract(&self, document: &SourceText) -> Result<(SourceText, CellMap), ProjectError>;
}

/// Hook for attaching metadata to the analysis context. Nothing ships with
/// an implementation.
pub trait ContextEnricher: Send + Sync {
    fn enrich(&self, request: &AnalysisRequest, context: &mut BTreeMap<String, String>);
}

pub struct RScriptPlugin;
pub struct RMarkdownPlugin;
pub struct QuartoPlugin;
pub struct JupyterPlugin;

impl FilePlugin for RScriptPlugin {
    fn name(&self) -> &str {
        "r-script"
    }
    fn extensions(&self) -> &[&str] {
        &["R", "r"]
    }
    fn format(&self) -> Format {
        Format::R
    }
    fn extract(&self, document: &SourceText) -> Result<(SourceText, CellMap), ProjectError> {
        Ok((document.clone(), CellMap::identity(document.line_count())))
    }
}

impl FilePlugin for RMarkdownPlugin {
    fn name(&self) -> &str {
        "r-markdown"
    }
    fn extensions(&self) -> &[&str] {
        &["Rmd", "rmd"]
    }
    fn format(&self) -> Format {
        Format::Rmd
    }
    fn extract(&self, document: &SourceText) -> Result<(SourceText, CellMap), ProjectError> {
        extract_markdown_chunks(document)
    }
}

impl FilePlugin for QuartoPlugin {
    fn name(&self) -> &str {
        "quarto"
    }
    fn extensions(&self) -> &[&str] {
        &["qmd"]
    }
    fn format(&self) -> Format {
        Format::Qmd
    }
    fn extract(&self, document: &SourceText) -> Result<(SourceText, CellMap), ProjectError> {
        extract_markdown_chunks(document)
    }
}

impl FilePlugin for JupyterPlugin {
    fn name(&self) -> &str {
        "jupyter"
    }
    fn extensions(&self) -> &[&str] {
        &["ipynb"]
    }
    fn format(&self) -> Format {
        Format::Ipynb
    }
    fn extract(&self, document: &SourceText) -> Result<(SourceText, CellMap), ProjectError> {
        extract_notebook_cells(document)
    }
}

/// Registered file plugins, in registration order.
pub struct PluginRegistry {
    plugins: Vec<Box<dyn FilePlugin>>,
    enrichers: Vec<Box<dyn ContextEnricher>>,
}

impl Default for PluginRegistry {
    fn default() -> Self {
        let mut r = PluginRegistry::empty();
        for p in [
            Box::new(RScriptPlugin) as Box<dyn FilePlugin>,
            Box::new(RMarkdownPlugin),
            Box::new(QuartoPlugin),
            Box::new(JupyterPlugin),
        ] {
            r.register(p).expect("built-in plugins do not overlap");
        }
        r
    }
}

impl PluginRegistry {
    pub fn empty() -> Self {
        PluginRegistry {
            plugins: Vec::new(),
            enrichers: Vec::new(),
        }
    }

    pub fn register(&mut self, plugin: Box<dyn FilePlugin>) -> Result<(), ProjectError> {
        for ext in plugin.extensions() {
            if let Some(owner) = self.for_extension(ext) {
                return Err(ProjectError::ExtensionClaimed {
                    extension: ext.to_string(),
                    plugin: owner.name().to_string(),
                });
            }
        }
        self.plugins.push(plugin);
        Ok(())
    }

    pub fn register_enricher(&mut self, enricher: Box<dyn ContextEnricher>) {
        self.enrichers.push(enricher);
    }

    pub fn enrich(&self, request: &AnalysisRequest, context: &mut BTreeMap<String, String>) {
        for e in &self.enrichers {
            e.enrich(request, context);
        }
    }

    pub fn for_extension(&self, ext: &str) -> Option<&dyn FilePlugin> {
        self.plugins
            .iter()
            .find(|p| p.extensions().contains(&ext))
            .map(|p| p.as_ref())
    }

    pub fn for_format(&self, format: Format) -> Option<&dyn FilePlugin> {
        self.plugins
            .iter()
            .find(|p| p.format() == format)
            .map(|p| p.as_ref())
    }

    fn claims(&self, path: &Path) -> Option<&dyn FilePlugin> {
        let ext = path.extension()?.to_str()?;
        self.for_extension(ext)
    }
}

/// A request resolved to R source text.
#[derive(Debug, Clone)]
pub struct LoadedFile {
    pub request: AnalysisRequest,
    /// Original document (before extraction).
    pub document: SourceText,
    /// Extracted R code.
    pub source: SourceText,
    pub cells: CellMap,
}

/// Read a request and extract its R code.
pub fn load(request: &AnalysisRequest, plugins: &PluginRegistry) -> Result<LoadedFile, ProjectError> {
    let document = match &request.kind {
        RequestKind::File { path } => {
            let content = std::fs::read_to_string(path).map_err(|source| ProjectError::Io {
                path: path.clone(),
                source,
            })?;
            SourceText::new(path.display().to_string(), content)
        }
        RequestKind::Text { content } => SourceText::literal(content.clone()),
    };
    let plugin = plugins
        .for_format(request.format)
        .ok_or_else(|| ProjectError::Unsupported(request.origin()))?;
    let (source, cells) = plugin.extract(&document)?;
    Ok(LoadedFile {
        request: request.clone(),
        document,
        source,
        cells,
    })
}

/// Outcome of [`discover`]: requests in loading order plus any `source()`
/// cycles that forced a fallback to lexicographic order.
#[derive(Debug, Clone, Default)]
pub struct Discovery {
    pub requests: Vec<AnalysisRequest>,
    pub cycles: Vec<Vec<PathBuf>>,
}

/// Find all analyzable files under `root` in loading order.
pub fn discover(root: &Path, plugins: &PluginRegistry) -> Result<Discovery, ProjectError> {
    let root = strip_file_scheme(&root.to_string_lossy()).to_string();
    let root = Path::new(&root);
    let meta = std::fs::metadata(root).map_err(|source| ProjectError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    if meta.is_file() {
        return Ok(Discovery {
            requests: vec![AnalysisRequest::file(root.to_string_lossy())],
            cycles: Vec::new(),
        });
    }
    let mut files: BTreeMap<PathBuf, Format> = BTreeMap::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| ProjectError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        if let Some(plugin) = plugins.claims(entry.path()) {
            files.insert(entry.path().to_path_buf(), plugin.format());
        }
    }

    // edges: referenced file -> files that source it
    let mut dependents: BTreeMap<PathBuf, BTreeSet<PathBuf>> = BTreeMap::new();
    let mut indegree: BTreeMap<PathBuf, usize> = files.keys().map(|f| (f.clone(), 0)).collect();
    for (file, format) in &files {
        let request = AnalysisRequest {
            kind: RequestKind::File { path: file.clone() },
            format: *format,
        };
        let Ok(loaded) = load(&request, plugins) else {
            continue;
        };
        for target in sourced_paths(&loaded.source) {
            let candidates = [root.join(&target), file.parent().unwrap_or(root).join(&target)];
            let Some(found) = candidates.iter().find(|c| files.contains_key(*c)) else {
                continue;
            };
            if found != file && dependents.entry(found.clone()).or_default().insert(file.clone()) {
                *indegree.get_mut(file).expect("known file") += 1;
            }
        }
    }

    let mut ready: BTreeSet<PathBuf> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(f, _)| f.clone())
        .collect();
    let mut order = Vec::new();
    while let Some(next) = ready.pop_first() {
        for dep in dependents.get(&next).into_iter().flatten() {
            let d = indegree.get_mut(dep).expect("known file");
            *d -= 1;
            if *d == 0 {
                ready.insert(dep.clone());
            }
        }
        order.push(next);
    }
    let placed: BTreeSet<&PathBuf> = order.iter().collect();
    let stuck: Vec<PathBuf> = files
        .keys()
        .filter(|f| !placed.contains(f))
        .cloned()
        .collect();
    let cycles = if stuck.is_empty() {
        Vec::new()
    } else {
        vec![stuck.clone()]
    };
    order.extend(stuck);
    Ok(Discovery {
        requests: order
            .into_iter()
            .map(|path| {
                let format = files[&path];
                AnalysisRequest {
                    kind: RequestKind::File { path },
                    format,
                }
            })
            .collect(),
        cycles,
    })
}

/// String-literal targets of `source(...)` calls.
pub fn sourced_paths(source: &SourceText) -> Vec<String> {
    let Ok((ast, _)) = parse_normalized(source, 0) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for n in ast.nodes() {
        if ast.call_name(n.id) != Some("source") {
            continue;
        }
        let Some(arg) = ast.call_args(n.id).first() else {
            continue;
        };
        if let Some(v) = ast.arg_value(*arg) {
            if let NodeKind::StringLit { value } = &ast.node(v).kind {
                out.push(value.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, content: &str) {
        let p = dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).unwrap();
        }
        std::fs::write(p, content).unwrap();
    }

    fn names(d: &Discovery, root: &Path) -> Vec<String> {
        d.requests
            .iter()
            .map(|r| match &r.kind {
                RequestKind::File { path } => path.strip_prefix(root).unwrap().display().to_string(),
                RequestKind::Text { .. } => unreachable!(),
            })
            .collect()
    }

    #[test]
    fn sourced_files_load_first() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.R", "source(\"b.R\")\nprint(x)\n");
        write(dir.path(), "b.R", "x <- 1\n");
        let d = discover(dir.path(), &PluginRegistry::default()).unwrap();
        assert_eq!(names(&d, dir.path()), vec!["b.R", "a.R"]);
        assert!(d.cycles.is_empty());
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let d = discover(dir.path(), &PluginRegistry::default()).unwrap();
        assert!(d.requests.is_empty());
    }

    #[test]
    fn extension_filter() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "x.R", "1\n");
        write(dir.path(), "y.qmd", "```{r}\n2\n```\n");
        write(dir.path(), "z.txt", "3\n");
        let d = discover(dir.path(), &PluginRegistry::default()).unwrap();
        assert_eq!(names(&d, dir.path()), vec!["x.R", "y.qmd"]);
        assert_eq!(d.requests[1].format, Format::Qmd);
    }

    #[test]
    fn cycles_fall_back_to_lexicographic_order() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "c.R", "source(\"d.R\")\n");
        write(dir.path(), "d.R", "source(\"c.R\")\n");
        write(dir.path(), "e.R", "source(\"c.R\")\n");
        write(dir.path(), "a.R", "1\n");
        let d = discover(dir.path(), &PluginRegistry::default()).unwrap();
        assert_eq!(names(&d, dir.path()), vec!["a.R", "c.R", "d.R", "e.R"]);
        assert_eq!(d.cycles.len(), 1);
        // deterministic across runs
        let again = discover(dir.path(), &PluginRegistry::default()).unwrap();
        assert_eq!(names(&again, dir.path()), names(&d, dir.path()));
    }

    #[test]
    fn missing_root_is_an_error() {
        let err = discover(Path::new("/definitely/not/here"), &PluginRegistry::default()).unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here"));
    }

    #[test]
    fn duplicate_extension_is_rejected() {
        let mut r = PluginRegistry::default();
        assert!(matches!(
            r.register(Box::new(QuartoPlugin)),
            Err(ProjectError::ExtensionClaimed { .. })
        ));
    }

    #[test]
    fn file_scheme_is_accepted() {
        let req = AnalysisRequest::file("file:///tmp/x.qmd");
        assert_eq!(
            req.kind,
            RequestKind::File {
                path: "/tmp/x.qmd".into()
            }
        );
        assert_eq!(req.format, Format::Qmd);
    }

    #[test]
    fn plain_r_is_identity() {
        let req = AnalysisRequest::text("a <- 1\nb <- 2\n");
        let loaded = load(&req, &PluginRegistry::default()).unwrap();
        assert_eq!(loaded.cells.cells.len(), 1);
        assert!(loaded.cells.is_identity());
    }
}
