pub mod encoders;
pub mod error;
pub mod extract_search;
pub mod infill;
pub mod registry;
pub mod stringparse;
pub mod tidytable;

pub use error::{Error, Result};
pub mod treeengine;
pub mod importance;
