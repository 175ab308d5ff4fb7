//! Model files, expression syntax and machine-readable reports.

pub mod model;
pub mod parse;
pub mod report;

pub use model::{parse_basis, ModelFile, SymmetryDecl, TransformDecl};
pub use parse::parse_expr;
pub use report::{report, SCHEMA_VERSION};
