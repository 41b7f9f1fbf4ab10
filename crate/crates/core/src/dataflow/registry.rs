use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::syntax::AssignOp;

/// Data-frame verbs with shape semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DfVerb {
    Mutate,
    Select,
    Filter,
    LeftJoin,
    /// Verbs that keep the input shape (arrange, group_by, ...).
    Passthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case", tag = "tag", content = "detail")]
pub enum Semantics {
    Assignment(AssignOp),
    Control,
    LibraryLoad,
    NamespaceLoad,
    FileRead,
    FileWrite,
    PlotCreate,
    PlotAddon,
    Rng,
    Seed,
    DfConstructor,
    DfVerb(DfVerb),
    PureUnknown,
}

/// Where a path argument sits: matched by name first, else by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArgRole {
    pub name: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionInfo {
    pub tags: BTreeSet<Semantics>,
    pub package: Option<String>,
    pub path_argument: Option<ArgRole>,
}

impl FunctionInfo {
    fn pure() -> Self {
        FunctionInfo {
            tags: BTreeSet::from([Semantics::PureUnknown]),
            package: None,
            path_argument: None,
        }
    }

    pub fn has(&self, tag: Semantics) -> bool {
        self.tags.contains(&tag)
    }

    pub fn df_verb(&self) -> Option<DfVerb> {
        self.tags.iter().find_map(|t| match t {
            Semantics::DfVerb(v) => Some(*v),
            _ => None,
        })
    }
}

/// Semantics of functions the analysis knows without seeing their source.
///
/// Lookups are total: unknown names get [`Semantics::PureUnknown`].
#[derive(Debug, Clone)]
pub struct BuiltInRegistry {
    functions: BTreeMap<String, FunctionInfo>,
    /// Prefix rules (`geom_` ...), checked after exact names.
    prefixes: Vec<(String, FunctionInfo)>,
    default: FunctionInfo,
}

const BASE: &[&str] = &[
    "abs", "all", "any", "anyNA", "apply", "as.character", "as.data.frame", "as.factor",
    "as.integer", "as.logical", "as.numeric", "c", "cat", "cbind", "ceiling", "colnames",
    "cumsum", "dim", "do.call", "exp", "factor", "file.exists", "file.path", "floor", "format",
    "function", "grepl", "gsub", "head", "identical", "ifelse", "invisible", "is.na",
    "is.null", "lapply", "length", "list", "log", "max", "mean", "median", "message", "min",
    "names", "nchar", "ncol", "nrow", "order", "paste", "paste0", "print", "prod", "quantile",
    "range", "rbind", "rep", "return", "rev", "round", "rownames", "sapply", "sd", "seq",
    "seq_along", "seq_len", "sort", "sprintf", "sqrt", "stop", "stopifnot", "str", "strsplit",
    "sub", "substr", "sum", "summary", "t", "table", "tail", "tolower", "toupper", "unique",
    "unlist", "var", "vapply", "vector", "warning", "which", "nlevels", "levels", "matrix",
    "numeric", "character", "logical", "integer", "is.numeric", "is.character", "Sys.time",
    "Sys.getenv", "setwd", "getwd", "tryCatch", "on.exit", "quote", "environment", "new.env",
    "assign", "get", "exists", "Recall", "nargs", "missing", "match.arg", "switch", "repeat",
    "toString", "trimws", "dnorm", "pnorm", "qnorm", "cor", "lm", "glm", "predict", "anova",
    "t.test", "aggregate", "merge", "subset", "with", "within", "transform", "split",
    "Reduce", "Filter", "Map", "mapply", "dev.off", "nchar", "sign", "trunc", "is.finite",
];

const DPLYR_PASSTHROUGH: &[&str] = &[
    "arrange", "group_by", "ungroup", "rename", "distinct", "slice", "relocate", "rowwise",
];

const DPLYR_OTHER: &[&str] = &[
    "summarise", "summarize", "inner_join", "right_join", "full_join", "anti_join", "semi_join",
    "filter_all", "mutate_all", "summarise_all", "count", "tally", "pull", "n", "across",
    "bind_rows", "bind_cols", "case_when", "if_else", "desc", "everything",
];

impl Default for BuiltInRegistry {
    fn default() -> Self {
        let mut r = BuiltInRegistry {
            functions: BTreeMap::new(),
            prefixes: Vec::new(),
            default: FunctionInfo::pure(),
        };
        for name in BASE {
            r.insert(name, Semantics::PureUnknown, None);
        }
        for op in ["<-", "<<-", "=", "->", "->>"] {
            let a = match op {
                "<<-" | "->>" => AssignOp::Super,
                "=" => AssignOp::Equals,
                _ => AssignOp::Local,
            };
            r.insert(op, Semantics::Assignment(a), None);
        }
        r.insert("assign", Semantics::Assignment(AssignOp::Local), None);
        for name in ["if", "for", "while", "repeat", "break", "next", "function", "return", "{", "("] {
            r.insert(name, Semantics::Control, None);
        }
        for name in ["library", "require", "requireNamespace"] {
            r.insert(name, Semantics::LibraryLoad, None);
        }
        for name in ["::", ":::"] {
            r.insert(name, Semantics::NamespaceLoad, None);
        }
        for name in ["read.csv", "read.table", "readRDS", "readLines", "scan", "source"] {
            r.insert(name, Semantics::FileRead, None);
            r.set_path(name, if name == "readLines" { "con" } else { "file" }, 0);
        }
        for name in ["write.csv", "write.table", "saveRDS", "writeLines"] {
            r.insert(name, Semantics::FileWrite, None);
            r.set_path(name, if name == "writeLines" { "con" } else { "file" }, 1);
        }
        r.insert("ggsave", Semantics::FileWrite, Some("ggplot2"));
        r.set_path("ggsave", "filename", 0);
        for (name, arg) in [("pdf", "file"), ("png", "filename")] {
            r.insert(name, Semantics::FileWrite, None);
            r.set_path(name, arg, 0);
        }
        for name in ["plot", "hist", "boxplot", "barplot"] {
            r.insert(name, Semantics::PlotCreate, None);
        }
        r.insert("ggplot", Semantics::PlotCreate, Some("ggplot2"));
        for name in ["abline", "lines", "points", "legend"] {
            r.insert(name, Semantics::PlotAddon, None);
        }
        for name in ["aes", "labs", "ggtitle", "xlab", "ylab", "xlim", "ylim"] {
            r.insert(name, Semantics::PlotAddon, Some("ggplot2"));
        }
        for prefix in ["geom_", "stat_", "theme_", "scale_", "facet_", "coord_"] {
            let mut info = FunctionInfo::pure();
            info.tags = BTreeSet::from([Semantics::PlotAddon]);
            info.package = Some("ggplot2".into());
            r.prefixes.push((prefix.into(), info));
        }
        r.insert("theme", Semantics::PlotAddon, Some("ggplot2"));
        for name in ["sample", "runif", "rnorm", "rbinom"] {
            r.insert(name, Semantics::Rng, None);
        }
        r.insert("set.seed", Semantics::Seed, None);
        r.insert("data.frame", Semantics::DfConstructor, None);
        r.insert("tibble", Semantics::DfConstructor, Some("tibble"));
        r.insert("mutate", Semantics::DfVerb(DfVerb::Mutate), Some("dplyr"));
        r.insert("select", Semantics::DfVerb(DfVerb::Select), Some("dplyr"));
        r.insert("filter", Semantics::DfVerb(DfVerb::Filter), Some("dplyr"));
        r.insert("left_join", Semantics::DfVerb(DfVerb::LeftJoin), Some("dplyr"));
        for name in DPLYR_PASSTHROUGH {
            r.insert(name, Semantics::DfVerb(DfVerb::Passthrough), Some("dplyr"));
        }
        for name in DPLYR_OTHER {
            r.insert(name, Semantics::PureUnknown, Some("dplyr"));
        }
        r
    }
}

impl BuiltInRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `tag` to `name`, creating the entry if needed.
    pub fn insert(&mut self, name: &str, tag: Semantics, package: Option<&str>) {
        let info = self
            .functions
            .entry(name.to_string())
            .or_insert_with(|| FunctionInfo {
                tags: BTreeSet::new(),
                package: None,
                path_argument: None,
            });
        if tag != Semantics::PureUnknown {
            info.tags.remove(&Semantics::PureUnknown);
        }
        if info.tags.is_empty() || tag != Semantics::PureUnknown {
            info.tags.insert(tag);
        }
        if let Some(p) = package {
            info.package = Some(p.to_string());
        }
    }

    pub fn set_path(&mut self, name: &str, arg: &str, position: usize) {
        if let Some(info) = self.functions.get_mut(name) {
            info.path_argument = Some(ArgRole {
                name: arg.to_string(),
                position,
            });
        }
    }

    pub fn lookup(&self, name: &str) -> &FunctionInfo {
        self.find(name).unwrap_or(&self.default)
    }

    /// Whether `name` has an entry (exact or by prefix).
    pub fn is_known(&self, name: &str) -> bool {
        self.find(name).is_some()
    }

    fn find(&self, name: &str) -> Option<&FunctionInfo> {
        self.functions.get(name).or_else(|| {
            self.prefixes
                .iter()
                .find(|(p, _)| name.starts_with(p.as_str()))
                .map(|(_, i)| i)
        })
    }

    pub fn has(&self, name: &str, tag: Semantics) -> bool {
        self.lookup(name).has(tag)
    }

    /// Names carrying `tag` (exact entries only).
    pub fn names_with(&self, tag: Semantics) -> impl Iterator<Item = &str> {
        self.functions
            .iter()
            .filter(move |(_, i)| i.has(tag))
            .map(|(n, _)| n.as_str())
    }
}

/// Symbols that denote constants when nothing in the program binds them.
pub fn is_builtin_constant(name: &str) -> bool {
    matches!(
        name,
        "T" | "F"
            | "NA"
            | "NA_integer_"
            | "NA_real_"
            | "NA_character_"
            | "Inf"
            | "NaN"
            | "pi"
            | "LETTERS"
            | "letters"
            | "month.name"
            | "month.abb"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups_are_total() {
        let r = BuiltInRegistry::default();
        assert!(r.has("no_such_function", Semantics::PureUnknown));
        assert!(!r.is_known("no_such_function"));
    }

    #[test]
    fn defaults() {
        let r = BuiltInRegistry::default();
        assert!(r.has("read.csv", Semantics::FileRead));
        assert_eq!(r.lookup("write.csv").path_argument.as_ref().unwrap().position, 1);
        assert!(r.has("geom_count", Semantics::PlotAddon));
        assert_eq!(r.lookup("geom_point").package.as_deref(), Some("ggplot2"));
        assert_eq!(r.lookup("filter").df_verb(), Some(DfVerb::Filter));
        assert!(r.has("set.seed", Semantics::Seed));
        assert!(r.has("print", Semantics::PureUnknown));
        assert!(r.is_known("print"));
    }
}
