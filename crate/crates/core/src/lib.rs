//! Static analysis for a subset of R: normalized syntax trees, dataflow and
//! control-flow graphs, slicing, abstract values, dependency queries and a
//! reproducibility linter.

pub mod syntax;
pub mod project;
pub mod dataflow;
pub mod abstractval;
pub mod controlflow;
pub mod slicer;
pub mod state;
pub mod linter;
pub mod queries;
