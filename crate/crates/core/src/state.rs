//! A fully built analysis of one program: loaded files, syntax trees,
//! dataflow graph, control-flow graphs and abstract values.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::abstractval::{AbstractValue, ValueAnalysis, ValueOptions};
use crate::controlflow::{simplify_cfg, BlockId, BlockKind, Cfg, CfgSet};
use crate::dataflow::{build_program_dataflow, BuiltInRegistry, DataflowGraph};
use crate::slicer::{resolve_criterion, Direction, SliceError, SliceResult, Slicer};
use crate::project::{discover, load, AnalysisRequest, LoadedFile, OriginalPos, PluginRegistry, ProjectError};
use crate::syntax::{parse_normalized, Comment, Forest, NodeId, NormalizedAst, ParseError, Pos, SourceText};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("{origin}:{error}")]
    Parse { origin: String, error: ParseError },
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub root: Option<PathBuf>,
    pub fuel: usize,
    pub registry: BuiltInRegistry,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            root: None,
            fuel: 2,
            registry: BuiltInRegistry::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisState {
    pub files: Vec<LoadedFile>,
    pub asts: Vec<NormalizedAst>,
    pub comments: Vec<Vec<Comment>>,
    pub graph: DataflowGraph,
    pub cfgs: CfgSet,
    pub values: ValueAnalysis,
    pub options: AnalysisOptions,
}

impl AnalysisState {
    /// Analyze a single R snippet.
    pub fn from_text(code: &str) -> Result<Self, AnalysisError> {
        Self::build(
            &[AnalysisRequest::text(code)],
            &PluginRegistry::default(),
            AnalysisOptions::default(),
        )
    }

    /// Analyze a file or every analyzable file below a directory. A
    /// directory also becomes the project root unless one is given.
    pub fn from_path(path: &Path, plugins: &PluginRegistry, mut options: AnalysisOptions) -> Result<Self, AnalysisError> {
        let discovery = discover(path, plugins)?;
        if options.root.is_none() && path.is_dir() {
            options.root = Some(path.to_path_buf());
        }
        Self::build(&discovery.requests, plugins, options)
    }

    pub fn build(
        requests: &[AnalysisRequest],
        plugins: &PluginRegistry,
        options: AnalysisOptions,
    ) -> Result<Self, AnalysisError> {
        let mut files = Vec::new();
        let mut asts = Vec::new();
        let mut comments = Vec::new();
        let mut offset = 0;
        for r in requests {
            let file = load(r, plugins)?;
            let (ast, c) = parse_normalized(&file.source, offset).map_err(|error| AnalysisError::Parse {
                origin: file.source.origin().to_string(),
                error,
            })?;
            offset = ast.id_end();
            files.push(file);
            asts.push(ast);
            comments.push(c);
        }
        let refs: Vec<&NormalizedAst> = asts.iter().collect();
        let origins: Vec<PathBuf> = files.iter().map(|f| PathBuf::from(f.source.origin())).collect();
        let root = options.root.clone();
        let resolver = move |origin: &str, target: &str| -> Option<usize> {
            let base = Path::new(origin).parent().map(Path::to_path_buf).unwrap_or_default();
            let candidates = [root.as_ref().map(|r| r.join(target)), Some(base.join(target))];
            candidates
                .into_iter()
                .flatten()
                .find_map(|c| origins.iter().position(|o| same_file(o, &c)))
        };
        let (graph, _) = build_program_dataflow(&refs, &options.registry, Some(&resolver));
        let cfgs = CfgSet::build(&refs);
        let value_options = ValueOptions {
            fuel: options.fuel,
            root: options.root.clone(),
        };
        let values = ValueAnalysis::run(Forest::new(&refs), &graph, &options.registry, &value_options);
        Ok(AnalysisState {
            files,
            asts,
            comments,
            graph,
            cfgs,
            values,
            options,
        })
    }

    pub fn forest(&self) -> Forest<'_> {
        Forest::from_slice(&self.asts)
    }

    /// Index of the file that holds `node`.
    pub fn file_of(&self, node: NodeId) -> Option<usize> {
        self.asts.iter().position(|a| a.contains(node))
    }

    pub fn ast_of(&self, node: NodeId) -> Option<&NormalizedAst> {
        self.file_of(node).map(|i| &self.asts[i])
    }

    pub fn source(&self, file: usize) -> &SourceText {
        &self.files[file].source
    }

    /// Resolve a criterion in the first file where it matches.
    pub fn resolve(&self, criterion: &str) -> Result<NodeId, SliceError> {
        let mut err = SliceError::NoMatch(criterion.to_string());
        for ast in &self.asts {
            match resolve_criterion(criterion, ast) {
                Ok(id) => return Ok(id),
                Err(e @ SliceError::Invalid(_)) => return Err(e),
                Err(e) => err = e,
            }
        }
        Err(err)
    }

    pub fn slicer(&self) -> Slicer<'_> {
        Slicer::new(self.forest(), &self.graph, &self.options.registry)
    }

    fn vertices(&self, slicer: &Slicer<'_>, criteria: &[String]) -> Result<Vec<NodeId>, SliceError> {
        criteria
            .iter()
            .map(|c| {
                let node = self.resolve(c)?;
                slicer.vertex_for(node).ok_or_else(|| SliceError::NoMatch(c.clone()))
            })
            .collect()
    }

    /// Backward or forward slice for criterion strings. A chop uses the
    /// criteria as both sources and sinks.
    pub fn slice(&self, criteria: &[String], direction: Direction) -> Result<SliceResult, SliceError> {
        self.chop_or_slice(criteria, None, direction)
    }

    pub fn chop(&self, sources: &[String], sinks: &[String]) -> Result<SliceResult, SliceError> {
        self.chop_or_slice(sources, Some(sinks), Direction::Chop)
    }

    fn chop_or_slice(
        &self,
        criteria: &[String],
        sinks: Option<&[String]>,
        direction: Direction,
    ) -> Result<SliceResult, SliceError> {
        let slicer = self.slicer();
        let ids = self.vertices(&slicer, criteria)?;
        let kept = match sinks {
            Some(s) => slicer.chop(&ids, &self.vertices(&slicer, s)?),
            None => slicer.slice(&ids, direction),
        };
        let sources: Vec<&SourceText> = self.files.iter().map(|f| &f.source).collect();
        Ok(slicer.result(ids, kept, direction, &sources))
    }

    /// Blocks of `cfg` that no execution reaches once conditions with a
    /// known truth value are folded.
    pub fn dead_blocks(&self, cfg: &Cfg) -> BTreeSet<BlockId> {
        let forest = self.forest();
        let values: BTreeMap<NodeId, AbstractValue> = cfg
            .blocks
            .values()
            .filter_map(|b| match b.kind {
                BlockKind::Condition { node } => Some((node, self.values.value(forest, &self.graph, node))),
                _ => None,
            })
            .collect();
        simplify_cfg(cfg, &values).1
    }

    /// Position in the original document (notebook cell, markdown line).
    pub fn original(&self, file: usize, pos: Pos) -> OriginalPos {
        self.files[file].cells.map_location(pos).unwrap_or(OriginalPos {
            cell: None,
            line: pos.line,
            col: pos.col,
        })
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
