//! Detection and error-guided refinement of model-predicted SQL.

pub mod analysis;
pub mod ast;
pub mod backend;
pub mod corpus;
pub mod db;
pub mod detect;
pub mod exec;
pub mod fixtures;
pub mod perturb;
pub mod pipeline;
pub mod refine;
pub mod schema;
pub mod synth;
pub mod taxonomy;
pub mod value;

