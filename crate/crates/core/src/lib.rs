pub mod encoding;
pub mod error;
pub mod evaluator;
pub mod metafeatures;
pub mod model;
pub mod net;
pub mod recommend;
pub mod tabular;
pub mod trainer;
pub mod vis_space;

pub use error::{Error, Result};
