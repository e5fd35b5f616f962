pub mod bdg;
pub mod cli;
pub mod config;
pub mod error;
pub mod finite;
pub mod labels;
pub mod laws;
pub mod limit;
pub mod map;
pub mod numeric;
pub mod oracle;
pub mod psi;
pub mod resistance;
pub mod rng;
pub mod spine;
pub mod tree;
pub mod walk;
pub mod weights;

pub use error::{Error, Result};
