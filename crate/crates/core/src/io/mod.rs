//! Model files, CSV and SVG output, and the built-in case study.

pub mod case_study;
pub mod csv;
pub mod model_file;
pub mod svg;

pub use case_study::{builtin_case_study, run_case_study, CaseStudy, CASE_STUDY_DOCUMENT};
pub use model_file::{parse_document, parse_model, parse_vector, serialize_model, ModelDocument};
